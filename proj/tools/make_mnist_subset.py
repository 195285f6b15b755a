#!/usr/bin/env python3
"""Write the 5,000-image MNIST subset shipped with mlxtend as gzipped IDX files.

Usage: make_mnist_subset.py OUT_DIR [--wheel PATH]

Without --wheel, the mlxtend wheel is fetched with `pip download`.
"""
import argparse
import glob
import gzip
import io
import struct
import subprocess
import tempfile
import zipfile

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def fetch_wheel(tmp):
    subprocess.run(["pip", "download", "mlxtend", "--no-deps", "-q", "-d", tmp], check=True)
    return glob.glob(f"{tmp}/mlxtend-*.whl")[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--wheel")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        raw = gzip.decompress(zipfile.ZipFile(wheel).read(MEMBER))
    rows = np.loadtxt(io.BytesIO(raw), delimiter=",").astype(np.uint8)
    images, labels = rows[:, :-1], rows[:, -1]
    n = len(rows)

    # mtime=0 keeps the output byte-stable across regenerations
    with gzip.GzipFile(f"{args.out_dir}/train-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(f"{args.out_dir}/train-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())
    print(f"wrote {n} images to {args.out_dir}")


if __name__ == "__main__":
    main()
