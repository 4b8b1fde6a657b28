"""Command-line surface: instance generation, the pipeline stages, verification and benches."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, Constants, default_config_text, strip_comments
from .extremal import check_nonextremal_exact, estimate_nonextremal, verify_extremal_witness
from .graph import BipartitePair, GraphError, read_graph, write_graph
from .harness import report_json, run_experiment, summary_csv
from .hostprep import (BalanceError, DecompositionError, PreconditionError, SplitAuditError,
                       preprocess_host)
from .instances import GenerationError, HostSpec, TreeSpec, gen_host, gen_tree
from .regularity import RegularityError, super_regularity
from .rng import substream
from .tree import TreeError, read_tree, write_tree
from .treeprep import audit_skeleton, build_skeleton
from .embedding import embed, verify_embedding
from .embedding.pipeline import jsonable


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError([f"expected key=value, got {item!r}"])
        k, v = item.split("=", 1)
        out[k] = _value(v)
    return out


def _constants(args) -> Constants:
    data = {}
    if getattr(args, "config", None):
        raw = json.loads(strip_comments(Path(args.config).read_text()))
        data = raw.get("constants", raw)
    data.update(_kv(getattr(args, "set", None)))
    return Constants.from_dict(data).validate()


def _emit(obj, out) -> None:
    text = obj if isinstance(obj, str) else json.dumps(jsonable(obj), sort_keys=True, indent=1)
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _vertex_list(text: str) -> list[int]:
    """"0-9,12,15-17" -> explicit ids."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


# --- subcommands ---------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.host:
        G = gen_host(HostSpec(args.host, args.n, _kv(args.host_param)), substream(args.seed, "host"))
        write_graph(G, args.graph_out)
        print(f"graph: n={G.n} m={G.num_edges} min degree {G.min_degree()} -> {args.graph_out}")
    if args.tree:
        T = gen_tree(TreeSpec(args.tree, args.n, _kv(args.tree_param)), substream(args.seed, "tree"))
        write_tree(T, args.tree_out)
        print(f"tree: n={T.n} max degree {T.max_degree} -> {args.tree_out}")
    if not args.host and not args.tree:
        print("nothing to generate: pass --host and/or --tree", file=sys.stderr)
        return 2
    return 0


def cmd_decompose(args) -> int:
    C = _constants(args)
    G = read_graph(args.graph)
    try:
        Dc, report = preprocess_host(G, C, args.seed, check_gate=not args.no_gate)
    except (PreconditionError, DecompositionError, BalanceError, SplitAuditError) as e:
        _emit({"ok": False, "error": type(e).__name__, "message": str(e)}, args.out)
        return 1
    rec = json.loads(Dc.to_json())
    rec["report"] = jsonable(report)
    _emit(rec, args.out)
    return 0


def cmd_treeprep(args) -> int:
    T = read_tree(args.tree)
    td = build_skeleton(T, args.eta)
    audit = audit_skeleton(T, td)
    rec = td.to_dict()
    rec["audit"] = jsonable(audit)
    _emit(rec, args.out)
    clauses = [k for k in audit if k.startswith("clause")] + ["components_match"]
    return 0 if all(audit[k] for k in clauses) else 1


def cmd_embed(args) -> int:
    C = _constants(args)
    G, T = read_graph(args.graph), read_tree(args.tree)
    E = embed(G, T, C, args.seed, retries=args.retries)
    _emit(E.to_json(), args.out)
    if not E.success:
        print(f"embedding failed after {E.attempts} attempts: {E.failures}", file=sys.stderr)
    return 0 if E.success else 1


def cmd_verify(args) -> int:
    G, T = read_graph(args.graph), read_tree(args.tree)
    rec = json.loads(Path(args.phi).read_text())
    phi = rec.get("phi") if isinstance(rec, dict) else rec
    if phi is None:
        print("FAIL: record carries no embedding", file=sys.stderr)
        return 1
    v = verify_embedding(G, T, phi)
    print("PASS" if v["ok"] else f"FAIL: {v['reason']}")
    return 0 if v["ok"] else 1


def cmd_bench(args) -> int:
    text = Path(args.config).read_text()
    report = run_experiment(text, workers=args.workers, with_timings=args.timings)
    _emit(report_json(report), args.out)
    if args.csv:
        Path(args.csv).write_text(summary_csv(report))
    s = report["summary"]
    print(f"success rate {s['success_rate']:.3f} ({s['successes']}/{s['trials']}); "
          f"phase failures {s['phase_failures']}", file=sys.stderr)
    ok = s["all_successes_verified"] and s["success_rate"] >= args.min_success
    return 0 if ok else 1


def cmd_audit(args) -> int:
    G = read_graph(args.graph)
    rng = substream(args.seed, "audit")
    if args.kind == "extremal":
        if args.exact:
            v = check_nonextremal_exact(G, args.gamma)
        else:
            v = estimate_nonextremal(G, args.gamma, args.trials, rng)
        rec = v.to_dict()
        if v.witness is not None:
            rec["witness_verified"] = verify_extremal_witness(G, args.gamma, v.witness)
        _emit(rec, args.out)
        return 0 if v.nonextremal else 1
    if not args.left or not args.right:
        print("regularity audit needs --left and --right", file=sys.stderr)
        return 2
    P = BipartitePair(G, np.array(_vertex_list(args.left)), np.array(_vertex_list(args.right)))
    v = super_regularity(P, args.eps, args.delta, mode="exact" if args.exact else "sampled",
                         trials=args.trials, rng=rng)
    _emit(v.to_dict(), args.out)
    return 0 if v.super_regular else 1


def cmd_config(args) -> int:
    if args.print_defaults:
        sys.stdout.write(default_config_text())
        return 0
    print("use --print-defaults", file=sys.stderr)
    return 2


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treeembed",
                                description="Embed bounded-degree spanning trees into dense graphs.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def constants_opts(q):
        q.add_argument("--config", help="config file; its constants block is used")
        q.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a constant")

    q = sub.add_parser("gen", help="emit instance files")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--host", help="host model, e.g. gnp_mindeg")
    q.add_argument("--host-param", action="append", metavar="KEY=VALUE")
    q.add_argument("--tree", help="tree model, e.g. random_bounded")
    q.add_argument("--tree-param", action="append", metavar="KEY=VALUE")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--graph-out", default="graph.txt")
    q.add_argument("--tree-out", default="tree.txt")
    q.set_defaults(func=cmd_gen)

    q = sub.add_parser("decompose", help="host preparation only; emit the decomposition")
    q.add_argument("--graph", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--no-gate", action="store_true", help="skip the non-extremality gate")
    q.add_argument("--out")
    constants_opts(q)
    q.set_defaults(func=cmd_decompose)

    q = sub.add_parser("treeprep", help="emit the skeleton decomposition of a tree")
    q.add_argument("--tree", required=True)
    q.add_argument("--eta", type=float, default=Constants().eta)
    q.add_argument("--out")
    q.set_defaults(func=cmd_treeprep)

    q = sub.add_parser("embed", help="full pipeline on instance files")
    q.add_argument("--graph", required=True)
    q.add_argument("--tree", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--retries", type=int)
    q.add_argument("--out")
    constants_opts(q)
    q.set_defaults(func=cmd_embed)

    q = sub.add_parser("verify", help="check an embedding record")
    q.add_argument("--graph", required=True)
    q.add_argument("--tree", required=True)
    q.add_argument("--phi", required=True)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("bench", help="run an experiment config")
    q.add_argument("--config", required=True)
    q.add_argument("--out")
    q.add_argument("--csv")
    q.add_argument("--workers", type=int)
    q.add_argument("--timings", action="store_true", help="include per-phase timings")
    q.add_argument("--min-success", type=float, default=0.0,
                   help="exit nonzero below this success rate")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("audit", help="standalone regularity or extremality check")
    q.add_argument("kind", choices=["regularity", "extremal"])
    q.add_argument("--graph", required=True)
    q.add_argument("--left", help="vertex ids, e.g. 0-49")
    q.add_argument("--right", help="vertex ids, e.g. 50-99")
    q.add_argument("--eps", type=float, default=0.2)
    q.add_argument("--delta", type=float, default=0.0)
    q.add_argument("--gamma", type=float, default=Constants().gamma)
    q.add_argument("--exact", action="store_true")
    q.add_argument("--trials", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_audit)

    q = sub.add_parser("config", help="configuration helpers")
    q.add_argument("--print-defaults", action="store_true")
    q.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GraphError, TreeError, GenerationError, RegularityError,
            OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
