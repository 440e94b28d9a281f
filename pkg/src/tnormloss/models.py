"""Predicate implementations: MLP groups with a shared trunk, and lookup tables."""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import autodiff as ad


class GivenPredicate:
    """A fully known predicate: a table of individual-id tuples.

    Missing tuples read as 0.  With ``symmetric=True`` a binary table also
    answers for the reversed pair.
    """

    def __init__(self, arity: int, table: Optional[dict] = None, symmetric: bool = False):
        if symmetric and arity != 2:
            raise ValueError("symmetric closure needs a binary predicate")
        self.arity = arity
        self.symmetric = symmetric
        self.table: dict[tuple[str, ...], float] = {}
        for k, v in (table or {}).items():
            self.set(k, v)

    @classmethod
    def from_tuples(cls, tuples: Iterable, arity: int, symmetric: bool = False) -> "GivenPredicate":
        gp = cls(arity, symmetric=symmetric)
        for t in tuples:
            gp.set(t, 1.0)
        return gp

    def set(self, key, value: float = 1.0):
        key = (key,) if isinstance(key, str) else tuple(key)
        if len(key) != self.arity:
            raise ValueError(f"expected a {self.arity}-tuple, got {key!r}")
        v = float(value)
        if v not in (0.0, 1.0):
            raise ValueError(f"given predicate values must be 0 or 1, got {value!r}")
        self.table[key] = v

    def __call__(self, *ids: str) -> float:
        key = tuple(ids)
        if key in self.table:
            return self.table[key]
        if self.symmetric and key[::-1] in self.table:
            return self.table[key[::-1]]
        return 0.0

    def items(self):
        """Non-zero entries, symmetric closure included."""
        seen = set()
        for k, v in self.table.items():
            if v == 0:
                continue
            for key in (k, k[::-1]) if self.symmetric else (k,):
                if key not in seen:
                    seen.add(key)
                    yield key, v

    def __len__(self):
        return sum(1 for _ in self.items())


def given_lookup(pred: GivenPredicate, ids: Sequence[str]) -> float:
    return pred(*ids)


@dataclass
class MlpPredicateGroup:
    """Unary predicates over one domain bound to the outputs of one network.

    Hidden layers use rectifiers; ``head="softmax"`` makes the ``symbols``
    mutually exclusive, ``head="sigmoid"`` independent.
    """

    symbols: list[str]
    input_dim: int
    hidden: list[int] = field(default_factory=lambda: [100, 100, 100])
    domain: str = "Docs"
    head: str = "softmax"
    params: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.head not in ("softmax", "sigmoid"):
            raise ValueError(f"unknown head {self.head!r}")
        if not self.symbols:
            raise ValueError("a predicate group needs at least one symbol")

    @property
    def n_out(self) -> int:
        return len(self.symbols)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden, self.n_out]
        return list(zip(dims[:-1], dims[1:]))

    def init_params(self, seed: int) -> list[np.ndarray]:
        """He-scaled Gaussian weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = []
        for fan_in, fan_out in self.shapes:
            params.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
            params.append(np.zeros(fan_out))
        self.params = params
        return params

    def forward(self, x: np.ndarray):
        """Returns ``(outputs, cache)``; outputs are ``batch x len(symbols)``."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected features of shape (n, {self.input_dim}), got {x.shape}")
        if not self.params:
            raise RuntimeError("parameters not initialised")
        acts, pres = [x], []
        h = x
        n_layers = len(self.shapes)
        for k in range(n_layers):
            z = ad.linear(h, self.params[2 * k], self.params[2 * k + 1])
            pres.append(z)
            if k < n_layers - 1:
                h = ad.relu(z)
                acts.append(h)
        out = ad.softmax(z) if self.head == "softmax" else ad.sigmoid(z)
        return out, (acts, pres, out)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, d_out: np.ndarray) -> list[np.ndarray]:
        acts, pres, out = cache
        if self.head == "softmax":
            dz = ad.softmax_backward(d_out, out)
        else:
            dz = ad.sigmoid_backward(d_out, out)
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        for k in reversed(range(len(self.shapes))):
            dx, dw, db = ad.linear_backward(dz, acts[k], self.params[2 * k])
            grads[2 * k], grads[2 * k + 1] = dw, db
            if k > 0:
                dz = ad.relu_backward(dx, pres[k - 1])
        return grads

    def relu_margin(self, cache) -> float:
        _, pres, _ = cache
        hidden = pres[:-1]
        return min((float(np.abs(z).min()) for z in hidden if z.size), default=np.inf)


def mlp_forward(group: MlpPredicateGroup, features: np.ndarray) -> np.ndarray:
    return group(features)


def init_params(group: MlpPredicateGroup, seed: int) -> list[np.ndarray]:
    return group.init_params(seed)


# ---------------------------------------------------------------------------
# checkpoints
#
# little-endian layout:
#   b"TNLP"  u32 version=1  u32 n_arrays
#   per array: u32 ndim, ndim x u32 dims, then prod(dims) float64 values (C order)

_MAGIC = b"TNLP"
_VERSION = 1


def dump_params(params: Sequence[np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<II", _VERSION, len(params)))
    for p in params:
        arr = np.ascontiguousarray(p, dtype="<f8")
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes(order="C"))
    return buf.getvalue()


def load_params_bytes(data: bytes) -> list[np.ndarray]:
    if data[:4] != _MAGIC:
        raise ValueError("not a parameter checkpoint")
    version, n = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off = 12
    out = []
    for _ in range(n):
        (ndim,) = struct.unpack_from("<I", data, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape)
        off += 8 * count
        out.append(arr.astype(np.float64))
    if off != len(data):
        raise ValueError("trailing bytes in checkpoint")
    return out


def save_params(path, params: Sequence[np.ndarray]) -> None:
    Path(path).write_bytes(dump_params(params))


def load_params(path) -> list[np.ndarray]:
    return load_params_bytes(Path(path).read_bytes())
