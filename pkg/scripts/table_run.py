"""Long-run 5-fold evaluation over a list of CSV datasets (hours on large sets).

    python scripts/table_run.py data/*.csv --label class --threads 4 --out table.csv

For each file: full (C, lambda) grid with both selection rules, the
lambda = C/10 heuristic, and plain KLR (lambda = 0). One summary row per
(file, setting) with mean and population std of accuracy and selection ratio.
"""

import argparse
import csv
import logging
import time
from pathlib import Path

from sklr.data import load_csv
from sklr.dual import Hyperparams
from sklr.kernel import KernelSpec
from sklr.tuning import BEST_ACCURACY, SPARSEST_OF_TOP3, kfold_grid_search

SETTINGS = [
    ("klr", 0.0, BEST_ACCURACY),
    ("grid", "grid", BEST_ACCURACY),
    ("grid_sparsest3", "grid", SPARSEST_OF_TOP3),
    ("choice", "choice", BEST_ACCURACY),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="+")
    ap.add_argument("--label", default="-1")
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="table.csv")
    a = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "setting", "mean_acc", "std_acc", "mean_ratio", "std_ratio", "seconds"])
        for f in a.files:
            d = load_csv(f, a.label)
            for name, mode, rule in SETTINGS:
                t0 = time.monotonic()
                r = kfold_grid_search(d, a.k, KernelSpec.gaussian(a.sigma), Hyperparams(), lambda_mode=mode,
                                      seed=a.seed, rule=rule, threads=a.threads)
                row = [Path(f).stem, name, r.mean_accuracy, r.std_accuracy, r.mean_ratio, r.std_ratio,
                       round(time.monotonic() - t0, 1)]
                w.writerow(row)
                fh.flush()
                print(*row, sep="\t")


if __name__ == "__main__":
    main()
