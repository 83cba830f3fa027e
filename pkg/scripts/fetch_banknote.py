"""Download the UCI banknote authentication data and write it as a headed CSV.

    python scripts/fetch_banknote.py                 # writes tests/data/banknote.csv
    python scripts/fetch_banknote.py --out bn.csv

The raw file has no header; the output has columns
variance,skewness,curtosis,entropy,class with class in {0, 1}.
"""

import argparse
import csv
import io
import urllib.request
from pathlib import Path

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/00267/data_banknote_authentication.txt"
HEADER = ["variance", "skewness", "curtosis", "entropy", "class"]


def parse(text: str) -> list[list[str]]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    bad = [i for i, r in enumerate(rows) if len(r) != len(HEADER)]
    if bad:
        raise SystemExit(f"unexpected column count on line {bad[0] + 1}")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "data" / "banknote.csv"))
    ap.add_argument("--url", default=URL)
    a = ap.parse_args()
    with urllib.request.urlopen(a.url, timeout=60) as resp:
        rows = parse(resp.read().decode("utf-8"))
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
