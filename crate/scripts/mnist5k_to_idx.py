"""Convert the 5000-sample MNIST subset bundled with mlxtend into IDX files.

Usage: python3 scripts/mnist5k_to_idx.py path/to/mlxtend-*.whl data/mnist5k
"""
import gzip
import struct
import sys
import zipfile
from pathlib import Path


def main(wheel: str, out_dir: str) -> None:
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    rows = gzip.decompress(raw).decode().strip().split("\n")
    pixels = bytearray()
    labels = bytearray()
    for row in rows:
        values = [int(v) for v in row.split(",")]
        assert len(values) == 785
        pixels.extend(values[:-1])
        labels.append(values[-1])
    n = len(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, n, 28, 28) + bytes(pixels))
    (out / "labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x801, n) + bytes(labels))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
