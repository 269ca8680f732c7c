"""Sweep random pairwise route networks and time every solver.

Default grid is small enough for a laptop; pass ``--n 1000 2000 3000 4000 5000``
for the full sweep. Writes one CSV row per (method, n, p_t, seed, repeat).
"""

import argparse
import sys
from pathlib import Path

from bmlp import bench
from bmlp.formats import write_text_atomic

METHODS = {"ie": "bmlp_ie", "rms": "bmlp_rms", "naive": "naive_closure", "seminaive": "seminaive_fixpoint"}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[250, 500, 1000])
    ap.add_argument("--pt", type=float, nargs="+", default=[0.001, 0.01, 0.1, 0.5, 1.0])
    ap.add_argument("--seeds", type=int, default=3, help="seeds 0..SEEDS-1 per grid point")
    ap.add_argument("--methods", nargs="+", choices=sorted(METHODS), default=["ie", "rms", "seminaive"])
    ap.add_argument("--task", choices=("one", "all"), default="one")
    ap.add_argument("--repeats", type=int, default=1)
    ap.add_argument("--timeout", type=float, default=300.0)
    ap.add_argument("--kind", choices=("pairwise", "hypernode"), default="pairwise")
    ap.add_argument("--out", type=Path, default=Path("flight_routes.csv"))
    args = ap.parse_args(argv)

    methods = [METHODS[m] for m in args.methods]
    records = []
    for n in args.n:
        for p_t in args.pt:
            for seed in range(args.seeds):
                spec = bench.GenSpec(n, p_t, seed, args.kind)
                recs = bench.run_bench(spec, methods, args.repeats, args.timeout, args.task)
                records += recs
                summary = "  ".join(
                    f"{r.method}={'timeout' if r.timeout_flag else f'{r.phase_seconds_solve:.3f}s'}" for r in recs
                )
                print(f"n={n} p_t={p_t} seed={seed}  {summary}", file=sys.stderr)
    write_text_atomic(args.out, bench.write_csv(records))
    print(f"wrote {len(records)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
