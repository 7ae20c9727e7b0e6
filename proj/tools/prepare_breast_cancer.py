"""Writes data/breast_cancer.csv (Wisconsin diagnostic) from the copy bundled
with scikit-learn, with a header row and a string diagnosis column."""

import csv
import pathlib

from sklearn.datasets import load_breast_cancer

out = pathlib.Path(__file__).resolve().parent.parent / "data" / "breast_cancer.csv"
ds = load_breast_cancer()
names = [n.replace(" ", "_") for n in ds.feature_names]
with out.open("w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(names + ["diagnosis"])
    for row, y in zip(ds.data, ds.target):
        w.writerow([repr(float(v)) for v in row] + [ds.target_names[y]])
print(f"wrote {len(ds.target)} rows to {out}")
