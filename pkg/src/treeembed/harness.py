"""Seeded experiment batches: trial reports, aggregation and CSV summaries."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import ConfigError, Constants, load_config
from .embedding import embed
from .embedding.pipeline import jsonable
from .instances import GenerationError, HostSpec, TreeSpec, gen_host, gen_tree
from .rng import derive_seed, substream

WORKERS_ENV = "TREEEMBED_WORKERS"
REPORT_VERSION = 1


@dataclass
class TrialReport:
    seed: int
    host: dict
    tree: dict
    verdict: str                       # success | failure | precondition | generation
    verified: bool = False
    attempts: int = 0
    failures: dict = field(default_factory=dict)
    audits: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    log: dict | None = None

    def to_dict(self, with_timings: bool = True, with_log: bool = False) -> dict:
        d = {"seed": self.seed, "host": self.host, "tree": self.tree, "verdict": self.verdict,
             "verified": self.verified, "attempts": self.attempts, "failures": self.failures,
             "audits": self.audits, "errors": self.errors}
        if with_timings:
            d["timings"] = self.timings
        if with_log and self.log is not None:
            d["log"] = self.log
        return jsonable(d)


def _ok(x) -> bool:
    """Clause entries are either booleans or lists of failing items."""
    return bool(x) if isinstance(x, bool) else not x


def collect_audits(log: dict) -> dict[str, bool]:
    """Flatten the per-phase audit records of a successful run into named pass/fail flags."""
    out = {}
    host = log.get("host", {})
    if "r_factor" in host:
        out["host.r_factor"] = bool(host["r_factor"]["ok"])
    for k, v in host.get("decompose", {}).get("clauses", {}).items():
        out[f"host.decompose.{k}"] = _ok(v)
    if "balance" in host:
        out["host.balance.within_bound"] = bool(host["balance"]["within_bound"])
    for k, v in host.get("gdecomp", {}).items():
        if k.startswith("clause"):
            out[f"host.gdecomp.{k}"] = _ok(v)
    if "skeleton" in log:
        out["skeleton.size_ok"] = bool(log["skeleton"]["size_ok"])
    if "cover" in log:
        out["cover.coverage_ok"] = bool(log["cover"]["coverage_ok"])
    a = log.get("assign", {})
    for k in ("clause1_cover_matched", "clause2_drift", "clause3_all_assigned", "clause4_gaps"):
        if k in a:
            out[f"assign.{k}"] = bool(a[k])
    c = log.get("connect", {})
    for k in ("fixed_ok", "restricted_ok"):
        if k in c:
            out[f"connect.{k}"] = bool(c[k])
    if "restriction_sets" in c:
        out["connect.restriction_sets"] = bool(c["restriction_sets"]["ok"])
    if "W_over" in c:
        out["connect.W_small"] = c["W_over"] == 0
    f = log.get("final_balance", {})
    for k in ("within_bound", "exactly_filled", "participation_ok"):
        if k in f:
            out[f"final_balance.{k}"] = bool(f[k])
    if "restriction_sets" in f:
        out["final_balance.restriction_sets"] = bool(f["restriction_sets"]["ok"])
    b = log.get("blowup", {})
    if "restricted_inside" in b:
        out["blowup.restricted_inside"] = bool(b["restricted_inside"])
    return out


def trial_seed(master_seed: int, k: int) -> int:
    return derive_seed(master_seed, "trial", k)


def run_trial(config: dict, k: int) -> TrialReport:
    """Trial k of an experiment: generate the instance from its own seed and embed."""
    C: Constants = config["constants"]
    seed = trial_seed(config.get("master_seed", 0), k)
    host = dict(config["host"])
    tree = dict(config["tree"])
    n = host.get("n")
    tree.setdefault("n", n)
    t0 = time.perf_counter()
    try:
        G = gen_host(HostSpec.from_dict(host), substream(seed, "host"))
        T = gen_tree(TreeSpec.from_dict(tree), substream(seed, "tree"))
    except GenerationError as e:
        return TrialReport(seed, host, tree, "generation", errors=[str(e)])
    t_gen = time.perf_counter() - t0
    E = embed(G, T, C, derive_seed(seed, "embed"), record_timings=True)
    timings = {"generate": t_gen, **E.log.get("timings", {})}
    if E.success:
        verified = bool(E.verdict and E.verdict["ok"])
        audits = collect_audits(E.log)
        verdict = "success" if verified else "failure"
    else:
        verified, audits = False, {}
        verdict = "precondition" if "precondition" in E.failures else "failure"
    log = None
    if config.get("keep_logs"):
        log = {k: v for k, v in E.log.items() if k != "timings"}
        log["phi"] = E.phi
    return TrialReport(seed, host, tree, verdict, verified, E.attempts, dict(E.failures), audits,
                       list(E.errors), timings, log)


def _run_trial_args(args):
    return run_trial(*args)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        w = int(raw)
    except ValueError:
        raise ConfigError([f"{WORKERS_ENV} must be an integer, got {raw!r}"]) from None
    return max(w, 1)


def aggregate(trials: list[TrialReport], config: dict) -> dict:
    """Deterministic fold over trials in seed order."""
    n = len(trials)
    verdicts: dict[str, int] = {}
    phases: dict[str, int] = {}
    violations: dict[str, int] = {}
    for tr in trials:
        verdicts[tr.verdict] = verdicts.get(tr.verdict, 0) + 1
        for ph, c in tr.failures.items():
            phases[ph] = phases.get(ph, 0) + c
        for name, ok in tr.audits.items():
            violations.setdefault(name, 0)
            if not ok:
                violations[name] += 1
    succ = verdicts.get("success", 0)
    C: Constants = config["constants"]
    return {
        "trials": n,
        "successes": succ,
        "success_rate": succ / n if n else 0.0,
        "verdicts": dict(sorted(verdicts.items())),
        "phase_failures": dict(sorted(phases.items())),
        "audit_violations": dict(sorted(violations.items())),
        "all_successes_verified": all(t.verified for t in trials if t.verdict == "success"),
        "hierarchy": C.hierarchy(),
    }


def run_experiment(config: dict | str, workers: int | None = None,
                   with_timings: bool = False) -> dict:
    """Run the configured seeded trials and aggregate them.

    ``config`` is a parsed config dict or the raw config text.  Timings are
    left out unless asked for, so that reruns compare equal.
    """
    if isinstance(config, str):
        config = load_config(config)
    C = config["constants"]
    if not isinstance(C, Constants):
        C = config["constants"] = Constants.from_dict(C)
    C.validate()
    N = int(config.get("trials", 1))
    workers = worker_count() if workers is None else max(int(workers), 1)
    jobs = [(config, k) for k in range(N)]
    if workers > 1 and N > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            trials = list(ex.map(_run_trial_args, jobs))     # map keeps submission order
    else:
        trials = [run_trial(*j) for j in jobs]
    report = {
        "version": REPORT_VERSION,
        "master_seed": config.get("master_seed", 0),
        "host": config["host"],
        "tree": config["tree"],
        "constants": C.to_dict(),
        "summary": aggregate(trials, config),
        "trials": [t.to_dict(with_timings=with_timings, with_log=bool(config.get("keep_logs")))
                   for t in trials],
    }
    return jsonable(report)


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1)


def summary_csv(report: dict) -> str:
    """One row per trial: seed, verdict, attempts, failed phases and failed audits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "seed", "verdict", "verified", "attempts", "failed_phases", "failed_audits"])
    for k, t in enumerate(report["trials"]):
        phases = ";".join(f"{p}:{c}" for p, c in sorted(t["failures"].items()))
        bad = ";".join(sorted(a for a, ok in t["audits"].items() if not ok))
        w.writerow([k, t["seed"], t["verdict"], int(t["verified"]), t["attempts"], phases, bad])
    return buf.getvalue()
