#!/usr/bin/env python3
"""Materialize data/iris.data and data/wdbc.data in UCI on-disk format.

Both datasets ship inside scikit-learn, so this works offline. scikit-learn
carries Fisher's corrected iris values; the file distributed by the UCI
repository differs in two documented samples (35 and 38, 1-based), which we
re-apply here so the output matches the UCI file. The wdbc ID column is not
part of scikit-learn's copy; sequential row numbers are written instead (the
loader discards the column either way).

Usage: python3 scripts/make_datasets.py [outdir]
"""
import sys
from pathlib import Path

from sklearn.datasets import load_breast_cancer, load_iris

IRIS_CLASS_NAMES = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]

# UCI iris.data errata relative to Fisher (see iris.names): sample 35 has
# 0.1 as fourth feature, sample 38 reads 4.9,3.1,1.5,0.1.
UCI_IRIS_OVERRIDES = {
    34: (4.9, 3.1, 1.5, 0.1),
    37: (4.9, 3.1, 1.5, 0.1),
}


def write_iris(path: Path) -> None:
    iris = load_iris()
    lines = []
    for i, (row, target) in enumerate(zip(iris.data, iris.target)):
        values = UCI_IRIS_OVERRIDES.get(i, tuple(row))
        fields = [f"{v:.1f}" for v in values] + [IRIS_CLASS_NAMES[target]]
        lines.append(",".join(fields))
    # the UCI file ends with a blank line
    path.write_text("\n".join(lines) + "\n\n")


def write_wdbc(path: Path) -> None:
    wdbc = load_breast_cancer()
    diagnosis = {0: "M", 1: "B"}
    lines = []
    for i, (row, target) in enumerate(zip(wdbc.data, wdbc.target)):
        fields = [str(i + 1), diagnosis[target]] + [f"{v:.10g}" for v in row]
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n")


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    outdir.mkdir(parents=True, exist_ok=True)
    write_iris(outdir / "iris.data")
    write_wdbc(outdir / "wdbc.data")
    print(f"wrote {outdir / 'iris.data'} and {outdir / 'wdbc.data'}")


if __name__ == "__main__":
    main()
