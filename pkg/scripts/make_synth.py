"""Write the 99-point two-class planar dataset used in the demos to a CSV file.

    python scripts/make_synth.py synth.csv --seed 0
"""

import argparse

from sklr.data import write_csv
from sklr.synthetic import make_synth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    d = make_synth(a.seed)
    write_csv(a.out, d.features, d.labels, names=["x1", "x2"], label_name="y")
    print(f"wrote {d.n} rows to {a.out}")


if __name__ == "__main__":
    main()
