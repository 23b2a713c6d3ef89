#!/usr/bin/env python3
"""Write digit image folders for the digits scenarios.

Layout: <out>/<domain>/<class>/<index>.png, grayscale, resized to --size.

  mnist      5000-image MNIST sample shipped inside the mlxtend wheel
  optdigits  UCI optical digits bundled with scikit-learn (8x8 source images)
  usps       only with --usps FILE: usps.h5 (train/test groups with data and
             target) or the LIBSVM usps / usps.t files (optionally .bz2)
"""

import argparse
import bz2
import gzip
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import cv2
import numpy as np

MLXTEND = "mlxtend==0.24.0"
MNIST_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def mnist_sample(cache: Path):
    wheels = sorted(cache.glob("mlxtend-*.whl"))
    if not wheels:
        cache.mkdir(parents=True, exist_ok=True)
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", str(cache), MLXTEND],
                       check=True)
        wheels = sorted(cache.glob("mlxtend-*.whl"))
    with zipfile.ZipFile(wheels[-1]) as z:
        raw = gzip.decompress(z.read(MNIST_MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.float64)
    # 784 pixel columns, label last.
    labels = table[:, -1].astype(int)
    images = table[:, :-1].reshape(-1, 28, 28)
    return images / 255.0, labels


def optdigits():
    from sklearn.datasets import load_digits

    d = load_digits()
    return d.images / 16.0, d.target.astype(int)


def usps(path: Path):
    name = path.name
    if name.endswith(".h5"):
        import h5py

        xs, ys = [], []
        with h5py.File(path, "r") as f:
            for split in ("train", "test"):
                xs.append(np.asarray(f[split]["data"]))
                ys.append(np.asarray(f[split]["target"]))
        x = np.concatenate(xs).reshape(-1, 16, 16)
        return np.clip(x, 0.0, 1.0), np.concatenate(ys).astype(int)
    opener = bz2.open if name.endswith(".bz2") else open
    images, labels = [], []
    with opener(path, "rt") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            # LIBSVM labels are 1..10 for digits 0..9, features in [-1, 1].
            labels.append(int(float(parts[0])) - 1)
            row = np.zeros(256)
            for item in parts[1:]:
                k, v = item.split(":")
                row[int(k) - 1] = float(v)
            images.append((row.reshape(16, 16) + 1.0) / 2.0)
    return np.asarray(images), np.asarray(labels)


def write_domain(root: Path, images, labels, classes, size, limit):
    for c in classes:
        folder = root / str(c)
        folder.mkdir(parents=True, exist_ok=True)
        picked = np.flatnonzero(labels == c)[: limit or None]
        for i, idx in enumerate(picked):
            img = np.clip(images[idx] * 255.0, 0, 255).astype(np.uint8)
            img = cv2.resize(img, (size, size), interpolation=cv2.INTER_AREA)
            cv2.imwrite(str(folder / f"{i:05d}.png"), img)
        print(f"{root.name}/{c}: {len(picked)} images")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="data/digits")
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--classes", default="3,5")
    ap.add_argument("--limit", type=int, default=0, help="images per class, 0 keeps all")
    ap.add_argument("--usps", type=Path, help="local USPS file to convert")
    ap.add_argument("--cache", type=Path, default=Path(tempfile.gettempdir()) / "puda_wheels")
    args = ap.parse_args()

    out = Path(args.out)
    classes = [int(c) for c in args.classes.split(",")]
    write_domain(out / "mnist", *mnist_sample(args.cache), classes, args.size, args.limit)
    write_domain(out / "optdigits", *optdigits(), classes, args.size, args.limit)
    if args.usps:
        write_domain(out / "usps", *usps(args.usps), classes, args.size, args.limit)


if __name__ == "__main__":
    main()
