"""Generate a self-contained demo campaign directory for the CLI.

Writes a synthetic low-rank table as CSV plus a campaign.yaml next to it,
so the whole pipeline can be driven end to end:

    python scripts/make_demo_campaign.py demo/
    ppress search demo/campaign.yaml
    ppress pareto --store demo/records.jsonl --out-dir demo/report
    ppress report --store demo/records.jsonl --out-dir demo/report
"""

import argparse
from pathlib import Path

import numpy as np

from ppress.synth import make_latent_tabular

CAMPAIGN = """\
version: 1
seed: 7
dataset:
  path: table.csv
  split: {train_fraction: 0.5, shuffled: false}
apps:
  - {id: ridge, kind: ridge_regression, metric: r2, target: c9}
methods:
  - {method: eblc_pred, mode: rel, bound_min: 1.0e-8, bound_max: 0.5}
  - {method: eblc_bitplane, mode: acc, bound_min: 1.0e-6, bound_max: 10.0}
  - {method: trunc, bound: 32}
  - {method: lossless, knobs: {delta_order: 1}}
search:
  tau: 0.7
  n_candidates: 8
  eta: 0.01
  max_iters: 14
output:
  store: records.jsonl
  cache: cache
  report_dir: report
"""


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--rows", type=int, default=6000)
    ap.add_argument("--cols", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    if args.cols < 10:
        ap.error("need at least 10 columns (the campaign predicts column c9)")

    args.out_dir.mkdir(parents=True, exist_ok=True)
    ds = make_latent_tabular(
        n_obs=args.rows,
        n_feat=args.cols,
        rank=5,
        noise=0.05,
        scale_decades=4.0,
        seed=args.seed,
        row_corr=0.97,
    )
    csv_path = args.out_dir / "table.csv"
    np.savetxt(
        csv_path,
        ds.values,
        delimiter=",",
        header=",".join(ds.names),
        comments="",
        fmt="%.17g",
    )
    (args.out_dir / "campaign.yaml").write_text(CAMPAIGN)
    print(f"wrote {csv_path} ({ds.n_obs} x {ds.n_feat})")
    print(f"wrote {args.out_dir / 'campaign.yaml'}")
    print(f"next: ppress search {args.out_dir / 'campaign.yaml'}")


if __name__ == "__main__":
    main()
