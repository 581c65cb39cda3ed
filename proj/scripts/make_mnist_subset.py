#!/usr/bin/env python3
"""Write the 5000-sample MNIST subset bundled with mlxtend as IDX files.

    pip download --no-deps mlxtend -d /tmp/mlx
    python3 scripts/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist5k

Produces <out>/images-idx3-ubyte and <out>/labels-idx1-ubyte in the standard
big-endian MNIST container (magic 0x00000803 / 0x00000801).
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__)
        return 1
    wheel, out = Path(sys.argv[1]), Path(sys.argv[2])
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    lines = gzip.GzipFile(fileobj=io.BytesIO(raw)).read().decode().split()
    images, labels = bytearray(), bytearray()
    for line in lines:
        fields = [int(float(v)) for v in line.split(",")]
        if len(fields) != 785:
            raise ValueError(f"unexpected row width {len(fields)}")
        images.extend(bytes(fields[:784]))
        labels.append(fields[784])
    n = len(labels)
    out.mkdir(parents=True, exist_ok=True)
    (out / "images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, n, 28, 28) + images)
    (out / "labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x801, n) + labels)
    print(f"wrote {n} samples to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
