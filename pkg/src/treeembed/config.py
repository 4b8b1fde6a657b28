"""Run constants and their validity checks."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

CONFIG_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class Constants:
    # tree degree bound
    D: int = 3
    # host profile: min degree (1/2 - nu) n, gamma-non-extremal
    gamma: float = 0.01
    nu: float = 0.0002
    # pair density floor and regularity parameter used by the audits
    d: float = 0.3
    eps: float = 0.25
    # component size cap as a fraction of n; None derives it from the host clusters
    eta: float | None = 0.05
    hierarchy_ratio: float = 0.25
    strict_hierarchy: bool = False
    # decomposition knobs
    min_cluster: int = 20
    exceptional_budget: float | None = None   # fraction of n, default 8 d^(1/3)
    max_K: int = 16
    # embedding knobs
    buffer_frac: float = 0.2
    retries: int = 5
    connect_pool: int | None = None           # |H|, default ceil(3 D^3 / gamma)
    reloc_floor: float | None = None          # degree floor for relocated vertices, default d/4
    # audit trial counts
    regularity_trials: int = 150
    extremality_trials: int = 40
    split_retries: int = 20
    strict_split_audit: bool = False

    # ---- derived ----
    def exceptional_fraction(self) -> float:
        return 8 * self.d ** (1 / 3) if self.exceptional_budget is None else self.exceptional_budget

    def pool_size(self) -> int:
        if self.connect_pool is not None:
            return self.connect_pool
        return math.ceil(3 * self.D ** 3 / self.gamma)

    def relocation_floor(self) -> float:
        return self.d / 4 if self.reloc_floor is None else self.reloc_floor

    def eta_for(self, n: int, m: int) -> float:
        """Component cap; when unset, eta n = eps^4 m as in the chunk bounds."""
        if self.eta is not None:
            return self.eta
        return max(self.eps ** 4 * m / n, 2.0 / n)

    # ---- checks ----
    def problems(self) -> list[str]:
        out = []
        if not isinstance(self.D, int) or self.D < 2:
            out.append(f"D must be an integer >= 2, got {self.D!r}")
        for name in ("gamma", "nu", "d", "eps"):
            v = getattr(self, name)
            if not 0 < v < 1:
                out.append(f"{name} must lie in (0, 1), got {v!r}")
        if not self.gamma < 0.25:
            out.append(f"gamma must be below 1/4, got {self.gamma!r}")
        if self.eta is not None and not 0 < self.eta < 1:
            out.append(f"eta must lie in (0, 1), got {self.eta!r}")
        if not 0 < self.hierarchy_ratio <= 1:
            out.append(f"hierarchy_ratio must lie in (0, 1], got {self.hierarchy_ratio!r}")
        if not 0 <= self.buffer_frac < 1:
            out.append(f"buffer_frac must lie in [0, 1), got {self.buffer_frac!r}")
        for name in ("retries", "min_cluster", "max_K", "regularity_trials",
                     "extremality_trials", "split_retries"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                out.append(f"{name} must be a positive integer, got {v!r}")
        if self.exceptional_budget is not None and not 0 <= self.exceptional_budget <= 1:
            out.append(f"exceptional_budget must lie in [0, 1], got {self.exceptional_budget!r}")
        if self.connect_pool is not None and self.connect_pool < 1:
            out.append(f"connect_pool must be positive, got {self.connect_pool!r}")
        if self.strict_hierarchy:
            out.extend(self.hierarchy()["violations"])
        return out

    def validate(self) -> "Constants":
        probs = self.problems()
        if probs:
            raise ConfigError(probs)
        return self

    def hierarchy(self) -> dict:
        """Ratio checks for eta << eps << d << nu << gamma < 1/4."""
        r = self.hierarchy_ratio
        chain = [("eps", self.eps), ("d", self.d), ("nu", self.nu), ("gamma", self.gamma),
                 ("1/4", 0.25)]
        if self.eta is not None:
            chain.insert(0, ("eta", self.eta))
        viol = []
        for (a, x), (b, y) in zip(chain, chain[1:]):
            bound = y if b == "1/4" else r * y
            if not x <= bound or (b == "1/4" and not x < y):
                viol.append(f"hierarchy: {a}={x} exceeds {'' if b == '1/4' else f'{r}*'}{b}={bound:g}")
        certified = self.gamma <= 0.01 and self.nu <= self.gamma / 50
        return {"ok": not viol, "violations": viol, "paper_certified": certified}

    # ---- io ----
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Constants":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown constant {k!r}" for k in unknown])
        return cls(**data)


DEFAULT_DOC = {
    "D": "maximum tree degree",
    "gamma": "non-extremality parameter of the host",
    "nu": "host min degree is at least (1/2 - nu) n",
    "d": "density floor of cluster pairs (peel threshold)",
    "eps": "regularity parameter of the sampled pair audits",
    "eta": "component size cap as a fraction of n (null: eps^4 m / n)",
    "hierarchy_ratio": "each constant at most this times the next in the hierarchy",
    "strict_hierarchy": "reject configs violating the hierarchy instead of reporting",
    "min_cluster": "smallest cluster the decomposition may emit",
    "exceptional_budget": "max exceptional fraction of n (null: 8 d^(1/3))",
    "max_K": "max number of cluster pairs",
    "buffer_frac": "fraction of each cluster finished by the final matching",
    "retries": "whole-pipeline reseeded attempts",
    "connect_pool": "size of connection pools H (null: ceil(3 D^3 / gamma))",
    "reloc_floor": "min degree fraction for relocated vertices (null: d/4)",
    "regularity_trials": "samples per sampled regularity audit",
    "extremality_trials": "samples for the non-extremality gate",
    "split_retries": "random split resamples before giving up",
    "strict_split_audit": "treat split degree-bound violations as fatal",
}


def default_config_text() -> str:
    """Commented default config, as printed by ``config --print-defaults``."""
    c = Constants()
    lines = ["{", f'  "version": {CONFIG_VERSION},', '  "constants": {']
    items = list(c.to_dict().items())
    for i, (k, v) in enumerate(items):
        comma = "," if i < len(items) - 1 else ""
        lines.append(f"    {json.dumps(k)}: {json.dumps(v)}{comma}  // {DEFAULT_DOC[k]}")
    lines += [
        "  },",
        '  "trials": 10,              // number of seeded trials',
        '  "master_seed": 0,',
        '  "host": {"model": "gnp_mindeg", "n": 600, "p": 0.55, "nu": 0.0002},',
        '  "tree": {"model": "random_bounded", "D": 3}',
        "}",
    ]
    return "\n".join(lines) + "\n"


def strip_comments(text: str) -> str:
    out = []
    for ln in text.splitlines():
        in_str = False
        cut = len(ln)
        i = 0
        while i < len(ln) - 1:
            ch = ln[i]
            if ch == '"' and (i == 0 or ln[i - 1] != "\\"):
                in_str = not in_str
            elif not in_str and ln[i:i + 2] == "//":
                cut = i
                break
            i += 1
        out.append(ln[:cut])
    return "\n".join(out)


def load_config(text: str) -> dict:
    """Parse a config file (JSON with // comments) and validate its constants."""
    data = json.loads(strip_comments(text))
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError([f"unsupported config version {version}"])
    consts = Constants.from_dict(data.get("constants", {}))
    problems = consts.problems()
    if "trials" in data and (not isinstance(data["trials"], int) or data["trials"] < 1):
        problems.append(f"trials must be a positive integer, got {data['trials']!r}")
    for key in ("host", "tree"):
        if key not in data or "model" not in data[key]:
            problems.append(f"missing {key} spec with a model")
    if problems:
        raise ConfigError(problems)
    data["constants"] = consts
    return data
