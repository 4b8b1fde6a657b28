"""Run experiment configs and print a one-line summary per config.

    python3 scripts/run_bench.py scripts/configs/*.json --out-dir results/
"""
import argparse
import pathlib
import time

from treeembed.harness import report_json, run_experiment, summary_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="+", type=pathlib.Path)
    ap.add_argument("--out-dir", type=pathlib.Path)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    for path in args.configs:
        t0 = time.perf_counter()
        rep = run_experiment(path.read_text(), workers=args.workers)
        s = rep["summary"]
        print(f"{path.name:24s} success {s['successes']}/{s['trials']}  verdicts {s['verdicts']}  "
              f"phase failures {s['phase_failures']}  {time.perf_counter() - t0:.1f}s")
        if args.out_dir:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            (args.out_dir / f"{path.stem}.json").write_text(report_json(rep))
            (args.out_dir / f"{path.stem}.csv").write_text(summary_csv(rep))


if __name__ == "__main__":
    main()
