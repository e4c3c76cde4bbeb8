#!/usr/bin/env python3
"""Fetch MNIST digits and write canonical IDX files into data/mnist/.

The canonical MNIST mirrors are not reachable from every environment, so this
script pulls the `mnist` npm package instead, which bundles the real MNIST
digits as JSON (one file per class, pixels stored as round(byte/255, 3)).
The original byte values are recovered exactly with round(v*255).

Output files (big-endian IDX, same layout as the canonical distribution):
    train-images-idx3-ubyte  train-labels-idx1-ubyte
    t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte

Per class, the first TRAIN_PER_CLASS examples go to the train split and the
remainder to the test split; examples are interleaved round-robin by class so
"first k of each class in file order" draws balanced prefixes.

If you already have the canonical IDX files, just drop them into data/mnist/
and skip this script entirely.
"""

import argparse
import json
import struct
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

TRAIN_PER_CLASS = 800  # class 5 is the smallest with 863 examples


def npm_pack(workdir: Path) -> Path:
    print("running `npm pack mnist` ...", flush=True)
    out = subprocess.run(
        ["npm", "pack", "mnist", "--silent"],
        cwd=workdir, check=True, capture_output=True, text=True,
    )
    name = out.stdout.strip().splitlines()[-1]
    return workdir / name


def load_digits(tarball: Path, workdir: Path):
    with tarfile.open(tarball) as tf:
        tf.extractall(workdir)
    digits = []
    for c in range(10):
        flat = json.loads((workdir / "package" / "src" / "digits" / f"{c}.json").read_text())["data"]
        if len(flat) % 784 != 0:
            raise SystemExit(f"class {c}: unexpected payload length {len(flat)}")
        images = []
        for off in range(0, len(flat), 784):
            images.append(bytes(round(v * 255) for v in flat[off:off + 784]))
        digits.append(images)
        print(f"  class {c}: {len(images)} examples")
    return digits


def write_idx(out_dir: Path, stem: str, images, labels):
    img_path = out_dir / f"{stem}-images-idx3-ubyte"
    lbl_path = out_dir / f"{stem}-labels-idx1-ubyte"
    with open(img_path, "wb") as f:
        f.write(struct.pack(">iiii", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with open(lbl_path, "wb") as f:
        f.write(struct.pack(">ii", 0x801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {img_path} ({len(images)} images) and {lbl_path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "mnist")
    ap.add_argument("--tarball", type=Path, default=None, help="reuse an already-downloaded mnist-*.tgz")
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        tarball = args.tarball if args.tarball else npm_pack(tmp)
        digits = load_digits(tarball, tmp)

        for split, lo, hi in (("train", 0, TRAIN_PER_CLASS), ("t10k", TRAIN_PER_CLASS, None)):
            images, labels = [], []
            depth = max(len(d) for d in digits) if hi is None else hi
            for i in range(lo, depth):
                for c in range(10):
                    if i < (len(digits[c]) if hi is None else min(hi, len(digits[c]))):
                        images.append(digits[c][i])
                        labels.append(c)
            write_idx(args.out, split, images, labels)
    print("done")


if __name__ == "__main__":
    sys.exit(main())
