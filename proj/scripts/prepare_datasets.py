#!/usr/bin/env python3
"""Materialize the datasets used by the shipped configs into data/.

Small UCI sets (iris, wine, breast cancer) are exported from scikit-learn's
bundled copies. The two larger sets cannot be bundled and must be supplied
by the user:

  epileptic    data/epileptic.csv
               The "Epileptic Seizure Recognition" CSV (11500 rows, columns
               <id>,X1..X178,y). Place the file as-is; the loader skips the
               id column via the shipped config.

  fashion      data/fashion/{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]
               The four Fashion-MNIST IDX files. Gzipped files are read
               directly, no need to decompress.

Run: python3 scripts/prepare_datasets.py [--out data]
"""

import argparse
import os
import sys


def write_csv(path, header, rows, label_names, labels):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row, y in zip(rows, labels):
            cells = ["%.10g" % v for v in row]
            cells.append(label_names[y])
            f.write(",".join(cells) + "\n")
    print("wrote %s (%d rows)" % (path, len(rows)))


def export_sklearn(out_dir):
    from sklearn.datasets import load_breast_cancer, load_iris, load_wine

    iris = load_iris()
    write_csv(
        os.path.join(out_dir, "iris.csv"),
        [n.replace(" (cm)", "").replace(" ", "_") for n in iris.feature_names] + ["species"],
        iris.data, list(iris.target_names), iris.target,
    )

    wine = load_wine()
    write_csv(
        os.path.join(out_dir, "wine.csv"),
        [n.replace("/", "_") for n in wine.feature_names] + ["cultivar"],
        wine.data, list(wine.target_names), wine.target,
    )

    bc = load_breast_cancer()
    write_csv(
        os.path.join(out_dir, "breast_cancer.csv"),
        [n.replace(" ", "_") for n in bc.feature_names] + ["diagnosis"],
        bc.data, list(bc.target_names), bc.target,
    )


def check_manual(out_dir):
    epi = os.path.join(out_dir, "epileptic.csv")
    print("%s: %s" % (epi, "present" if os.path.exists(epi) else "MISSING (supply manually)"))
    fdir = os.path.join(out_dir, "fashion")
    names = [
        "train-images-idx3-ubyte", "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte",
    ]
    for n in names:
        hit = next((p for p in (os.path.join(fdir, n), os.path.join(fdir, n + ".gz"))
                    if os.path.exists(p)), None)
        print("%s: %s" % (os.path.join(fdir, n), hit or "MISSING (supply manually)"))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    try:
        export_sklearn(args.out)
    except ImportError:
        print("scikit-learn not available; skipping UCI export", file=sys.stderr)
    check_manual(args.out)


if __name__ == "__main__":
    main()
