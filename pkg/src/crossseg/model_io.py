"""Model container file format.

Layout, all little-endian:

    DAAT1\n                 magic
    key=value\n ...         hyperparameter block, one pair per line
    \n                      blank line ends the block
    tensors <count>\n
    <name> <rank> <d1> ... <dr>\n followed by 8 * prod(dims) raw float64
    bytes, repeated <count> times

Values in the hyperparameter block are opaque strings; keys and tensor
names must not contain whitespace or '='. Writing the same content twice
produces identical bytes, and load followed by save round-trips exactly.
"""
from __future__ import annotations

import numpy as np

from .errors import DecodeError

MAGIC = b"DAAT1\n"


def save_container(path: str, hyper: dict[str, str],
                   tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        for key, value in hyper.items():
            if "=" in key or any(c.isspace() for c in key):
                raise ValueError(f"bad hyperparameter key {key!r}")
            if "\n" in str(value):
                raise ValueError(f"newline in value for {key!r}")
            f.write(f"{key}={value}\n".encode("utf-8"))
        f.write(b"\n")
        f.write(f"tensors {len(tensors)}\n".encode("ascii"))
        for name, arr in tensors.items():
            if any(c.isspace() for c in name):
                raise ValueError(f"bad tensor name {name!r}")
            arr = np.asarray(arr, dtype=np.float64)
            dims = " ".join(str(d) for d in arr.shape)
            head = f"{name} {arr.ndim}{' ' + dims if dims else ''}\n"
            f.write(head.encode("ascii"))
            f.write(arr.astype("<f8").tobytes())


def load_container(path: str) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise DecodeError(f"{path}: not a model container (bad magic)")
        hyper: dict[str, str] = {}
        while True:
            line = f.readline()
            if not line:
                raise DecodeError(f"{path}: truncated hyperparameter block")
            line = line.rstrip(b"\n")
            if not line:
                break
            try:
                key, value = line.decode("utf-8").split("=", 1)
            except ValueError:
                raise DecodeError(f"{path}: malformed hyperparameter line "
                                  f"{line!r}") from None
            hyper[key] = value
        header = f.readline().decode("ascii", "replace").split()
        if len(header) != 2 or header[0] != "tensors":
            raise DecodeError(f"{path}: missing tensor count")
        count = int(header[1])
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            fields = f.readline().decode("ascii", "replace").split()
            if len(fields) < 2:
                raise DecodeError(f"{path}: malformed tensor header")
            name = fields[0]
            rank = int(fields[1])
            dims = tuple(int(d) for d in fields[2:2 + rank])
            if len(dims) != rank:
                raise DecodeError(f"{path}: tensor {name}: bad dims")
            size = 8 * int(np.prod(dims, dtype=np.int64)) if dims else 8
            raw = f.read(size)
            if len(raw) != size:
                raise DecodeError(f"{path}: tensor {name}: truncated payload")
            tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(dims).copy()
    return hyper, tensors
