"""Additive generators and the fuzzy connectives they induce.

Every connective here is built from a single generator ``g`` and its
pseudo-inverse; the closed-form truth tables of the fundamental logics are
kept separately in :func:`oracle` so tests can check one against the other.

All functions accept Python floats or numpy arrays.  Scalars in, scalars out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "TruthValue",
    "TNormKind",
    "Generator",
    "Lukasiewicz",
    "Product",
    "SchweizerSklar",
    "Frank",
    "PowerOf",
    "parse_generator",
    "gen_eval",
    "gen_derivative",
    "gen_pseudo_inverse",
    "tnorm",
    "tnorm_nary",
    "tconorm",
    "tconorm_nary",
    "residuum",
    "biresiduum",
    "weak_conj",
    "weak_disj",
    "strong_neg",
    "residual_neg",
    "material_impl",
    "classify",
    "oracle",
    "ext_sub",
    "AXIOMS",
    "AXIOM_TEST_GRID",
    "axiom_tolerance",
    "check_axioms",
]

# lambda values this close to 1 make the Frank generator 0/0
FRANK_UNIT_TOL = 1e-6


class TruthValue(float):
    """A float constrained to the unit interval."""

    def __new__(cls, value):
        v = float(value)
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"truth value must lie in [0, 1], got {value!r}")
        return super().__new__(cls, v)


class TNormKind(enum.Enum):
    STRICT = "strict"
    NILPOTENT = "nilpotent"


def _unit(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (np.any(np.isnan(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("truth values must lie in [0, 1]")
    return arr


def _out(arr, *inputs):
    if all(np.ndim(i) == 0 for i in inputs):
        return float(arr)
    return arr


def ext_sub(a, b):
    """``a - b`` on [0, +inf] with ``inf - inf`` taken as 0.

    Both residual forms need this: ``x => y`` and ``x <=> y`` are 1 when
    ``x = y = 0`` under a strict generator, i.e. ``g(0) - g(0) = 0``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        d = a - b
    return np.where(np.isinf(a) & np.isinf(b) & (a == b), 0.0, d)


class Generator:
    """Base class for additive generators ``g: [0, 1] -> [0, +inf]``.

    Subclasses implement ``_g``, ``_dg`` and ``_inv`` on numpy arrays, plus
    :attr:`zero_limit` (``g(0+)``) and :meth:`spec`.
    """

    zero_limit: float

    def _g(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dg(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inv(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    # vectorised entry points -------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            y = self._g(x)
        y = np.where(x == 1.0, 0.0, y)
        y = np.where(x == 0.0, self.zero_limit, y)
        return y

    def derivative(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self._dg(x)

    def pseudo_inverse(self, y):
        y = np.asarray(y, dtype=np.float64)
        yc = np.minimum(np.maximum(y, 0.0), self.zero_limit)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x = self._inv(yc)
        x = np.where(yc == 0.0, 1.0, x)
        x = np.where(yc >= self.zero_limit, 0.0, x)
        return np.clip(x, 0.0, 1.0)

    def pseudo_inverse_derivative(self, y):
        """d/dy of the clamped pseudo-inverse; 0 in the clamped region."""
        y = np.asarray(y, dtype=np.float64)
        x = self.pseudo_inverse(y)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = 1.0 / self.derivative(x)
        inside = (y >= 0.0) & (y < self.zero_limit) & np.isfinite(d)
        return np.where(inside, d, 0.0)

    @property
    def kind(self) -> TNormKind:
        return TNormKind.STRICT if math.isinf(self.zero_limit) else TNormKind.NILPOTENT

    @property
    def is_strict(self) -> bool:
        return self.kind is TNormKind.STRICT

    def __str__(self):
        return self.spec()


@dataclass(frozen=True, repr=False)
class Lukasiewicz(Generator):
    zero_limit = 1.0

    def _g(self, x):
        return 1.0 - x

    def _dg(self, x):
        return np.full_like(x, -1.0)

    def _inv(self, y):
        return 1.0 - y

    def spec(self):
        return "luk"

    def __repr__(self):
        return "Lukasiewicz()"


@dataclass(frozen=True, repr=False)
class Product(Generator):
    zero_limit = math.inf

    def _g(self, x):
        return -np.log(x)

    def _dg(self, x):
        return -1.0 / x

    def _inv(self, y):
        return np.exp(-y)

    def spec(self):
        return "prod"

    def __repr__(self):
        return "Product()"


@dataclass(frozen=True)
class SchweizerSklar(Generator):
    """``g(x) = (1 - x**lam) / lam``, and ``-log x`` at ``lam = 0``.

    Strict for ``lam <= 0``, nilpotent with ``g(0) = 1/lam`` for ``lam > 0``.
    """

    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError("Schweizer-Sklar lambda must be finite")

    @property
    def zero_limit(self) -> float:  # type: ignore[override]
        return 1.0 / self.lam if self.lam > 0 else math.inf

    def _g(self, x):
        if self.lam == 0:
            return -np.log(x)
        return (1.0 - x**self.lam) / self.lam

    def _dg(self, x):
        if self.lam == 0:
            return -1.0 / x
        return -(x ** (self.lam - 1.0))

    def _inv(self, y):
        if self.lam == 0:
            return np.exp(-y)
        return (1.0 - self.lam * y) ** (1.0 / self.lam)

    def spec(self):
        return f"ss:{self.lam!r}"


@dataclass(frozen=True)
class Frank(Generator):
    """``g(x) = log((lam - 1) / (lam**x - 1))``; ``lam = inf`` is Lukasiewicz."""

    lam: float

    def __post_init__(self):
        if math.isnan(self.lam) or self.lam <= 0:
            raise ValueError("Frank lambda must be in (0, +inf]; lambda=0 (Goedel) has no generator")

    @property
    def _delegate(self) -> Generator | None:
        if math.isinf(self.lam):
            return Lukasiewicz()
        if abs(self.lam - 1.0) < FRANK_UNIT_TOL:
            return Product()
        return None

    @property
    def zero_limit(self) -> float:  # type: ignore[override]
        d = self._delegate
        return d.zero_limit if d is not None else math.inf

    def _g(self, x):
        d = self._delegate
        if d is not None:
            return d._g(x)
        ln = math.log(self.lam)
        return math.log(abs(self.lam - 1.0)) - np.log(np.abs(np.expm1(x * ln)))

    def _dg(self, x):
        d = self._delegate
        if d is not None:
            return d._dg(x)
        ln = math.log(self.lam)
        return -ln * np.exp(x * ln) / np.expm1(x * ln)

    def _inv(self, y):
        d = self._delegate
        if d is not None:
            return d._inv(y)
        return np.log1p((self.lam - 1.0) * np.exp(-y)) / math.log(self.lam)

    def spec(self):
        return "frank:inf" if math.isinf(self.lam) else f"frank:{self.lam!r}"


@dataclass(frozen=True)
class PowerOf(Generator):
    """The power class ``x -> g(x)**lam`` of a base generator."""

    base: Generator
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("power lambda must be a finite positive number")

    @property
    def zero_limit(self) -> float:  # type: ignore[override]
        return self.base.zero_limit**self.lam

    def _g(self, x):
        return self.base._g(x) ** self.lam

    def _dg(self, x):
        b = self.base._g(x)
        return self.lam * b ** (self.lam - 1.0) * self.base._dg(x)

    def _inv(self, y):
        return self.base._inv(y ** (1.0 / self.lam))

    def spec(self):
        return f"pow:{self.base.spec()}:{self.lam!r}"


def parse_generator(text: str) -> Generator:
    """Parse ``luk``, ``prod``, ``ss:<lam>``, ``frank:<lam>`` or ``pow:<base>:<lam>``."""
    s = text.strip().lower()
    if s in ("luk", "lukasiewicz"):
        return Lukasiewicz()
    if s in ("prod", "product"):
        return Product()
    head, _, rest = s.partition(":")
    try:
        if head == "ss":
            return SchweizerSklar(float(rest))
        if head == "frank":
            return Frank(float(rest))
        if head == "pow":
            base, _, lam = rest.rpartition(":")
            if not base:
                raise ValueError("missing base generator")
            return PowerOf(parse_generator(base), float(lam))
    except ValueError as exc:
        raise ValueError(f"bad generator spec {text!r}: {exc}") from None
    raise ValueError(f"unknown generator spec {text!r}")


# ---------------------------------------------------------------------------
# generated connectives


def gen_eval(g: Generator, x):
    """``g(x)``; the strict ``g(0)`` comes back as ``inf``."""
    return _out(g(_unit(x)), x)


def gen_derivative(g: Generator, x):
    return _out(g.derivative(_unit(x)), x)


def gen_pseudo_inverse(g: Generator, y):
    y_arr = np.asarray(y, dtype=np.float64)
    if np.any(y_arr < 0) or np.any(np.isnan(y_arr)):
        raise ValueError("pseudo-inverse argument must be >= 0")
    return _out(g.pseudo_inverse(y_arr), y)


def tnorm(g: Generator, x, y):
    gx, gy = g(_unit(x)), g(_unit(y))
    return _out(g.pseudo_inverse(np.minimum(g.zero_limit, gx + gy)), x, y)


def tnorm_nary(g: Generator, xs: Sequence[float]):
    """``g^(-1)(min{g(0+), sum g(x_i)})``, the associative fold in one step."""
    arr = _unit(xs)
    if arr.ndim == 0 or arr.shape[0] == 0:
        raise ValueError("tnorm_nary needs a non-empty sequence")
    s = np.sum(g(arr), axis=0)
    return _out(g.pseudo_inverse(np.minimum(g.zero_limit, s)), arr[0])


def tconorm(g: Generator, x, y):
    x, y = _unit(x), _unit(y)
    s = g(1.0 - x) + g(1.0 - y)
    return _out(1.0 - g.pseudo_inverse(np.minimum(g.zero_limit, s)), x, y)


def tconorm_nary(g: Generator, xs: Sequence[float]):
    arr = _unit(xs)
    if arr.ndim == 0 or arr.shape[0] == 0:
        raise ValueError("tconorm_nary needs a non-empty sequence")
    s = np.sum(g(1.0 - arr), axis=0)
    return _out(1.0 - g.pseudo_inverse(np.minimum(g.zero_limit, s)), arr[0])


_BELOW_ONE = np.nextafter(1.0, 0.0)


def residuum(g: Generator, x, y):
    xa, ya = _unit(x), _unit(y)
    r = g.pseudo_inverse(np.maximum(0.0, ext_sub(g(ya), g(xa))))
    # g(x) and g(y) may round to the same float for x > y; keep "= 1 iff x <= y" exact
    return _out(np.where(xa <= ya, 1.0, np.minimum(r, _BELOW_ONE)), x, y)


def biresiduum(g: Generator, x, y):
    xa, ya = _unit(x), _unit(y)
    r = g.pseudo_inverse(np.abs(ext_sub(g(xa), g(ya))))
    return _out(np.where(xa == ya, 1.0, np.minimum(r, _BELOW_ONE)), x, y)


def weak_conj(x, y):
    return _out(np.minimum(_unit(x), _unit(y)), x, y)


def weak_disj(x, y):
    return _out(np.maximum(_unit(x), _unit(y)), x, y)


def strong_neg(x):
    return _out(1.0 - _unit(x), x)


def residual_neg(g: Generator, x):
    return residuum(g, x, 0.0)


def material_impl(g: Generator, x, y):
    return tconorm(g, strong_neg(x), y)


def classify(g: Generator) -> TNormKind:
    return g.kind


# ---------------------------------------------------------------------------
# closed-form truth functions of the three fundamental logics (test oracle)


def _div(a, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(b == 0, np.where(a == 0, 1.0, np.inf), a / np.where(b == 0, 1.0, b))


def _godel(op, x, y):
    if op == "tnorm":
        return np.minimum(x, y)
    if op == "residuum":
        return np.where(x <= y, 1.0, y)
    if op == "biresiduum":
        # x = y gives 1; otherwise the smaller argument
        return np.where(x == y, 1.0, np.minimum(x, y))
    if op == "residual_neg":
        return np.where(x == 0, 1.0, 0.0)
    if op == "tconorm":
        return np.maximum(x, y)
    if op == "material_impl":
        return np.maximum(1.0 - x, y)
    raise KeyError(op)


def _lukasiewicz(op, x, y):
    if op == "tnorm":
        return np.maximum(0.0, x + y - 1.0)
    if op in ("residuum", "material_impl"):
        return np.minimum(1.0, 1.0 - x + y)
    if op == "biresiduum":
        return 1.0 - np.abs(x - y)
    if op == "residual_neg":
        return 1.0 - x
    if op == "tconorm":
        return np.minimum(1.0, x + y)
    raise KeyError(op)


def _product(op, x, y):
    if op == "tnorm":
        return x * y
    if op == "residuum":
        return np.where(x <= y, 1.0, _div(y, x))
    if op == "biresiduum":
        return np.where(x == y, 1.0, np.minimum(_div(x, y), _div(y, x)))
    if op == "residual_neg":
        return np.where(x == 0, 1.0, 0.0)
    if op == "tconorm":
        return x + y - x * y
    if op == "material_impl":
        return 1.0 - x + x * y
    raise KeyError(op)


_LOGICS = {"godel": _godel, "lukasiewicz": _lukasiewicz, "product": _product}


def oracle(logic: str, op: str, x, y=0.0):
    """Closed-form Goedel / Lukasiewicz / Product connective ``op`` at (x, y).

    ``op`` is one of ``tnorm, residuum, biresiduum, weak_conj, weak_disj,
    residual_neg, strong_neg, tconorm, material_impl``.
    """
    x_arr, y_arr = _unit(x), _unit(y)
    if op == "weak_conj":
        r = np.minimum(x_arr, y_arr)
    elif op == "weak_disj":
        r = np.maximum(x_arr, y_arr)
    elif op == "strong_neg":
        r = 1.0 - x_arr
    else:
        try:
            r = _LOGICS[logic.lower()](op, x_arr, y_arr)
        except KeyError:
            raise ValueError(f"unknown logic/connective {logic!r}/{op!r}") from None
    return _out(np.asarray(r, dtype=np.float64), x, y)


# ---------------------------------------------------------------------------
# t-norm axiom suite

AXIOMS = ("commutativity", "associativity", "identity", "annihilator", "monotonicity")

AXIOM_TEST_GRID = (
    "luk", "prod",
    "ss:-1.5", "ss:-1.0", "ss:-0.5", "ss:0.5", "ss:1.0", "ss:1.5",
    "frank:0.5", "frank:1.0", "frank:2.0", "frank:10.0",
)


def axiom_tolerance(g: Generator) -> float:
    """1e-9, loosened to 1e-6 for the numerically extreme parameters."""
    if isinstance(g, SchweizerSklar) and abs(g.lam) >= 1.5:
        return 1e-6
    if isinstance(g, Frank) and g.lam >= 10:
        return 1e-6
    return 1e-9


def check_axioms(g: Generator, n: int = 21, tol: float | None = None) -> list[tuple[str, float, bool]]:
    """Worst violation of each t-norm axiom on an ``n x n`` grid over the unit square.

    Returns ``(axiom, max_violation, passed)`` rows in :data:`AXIOMS` order.
    """
    tol = axiom_tolerance(g) if tol is None else tol
    t = np.linspace(0.0, 1.0, n)
    x, y = np.meshgrid(t, t, indexing="ij")
    txy = tnorm(g, x, y)
    viol = {
        "commutativity": np.abs(txy - tnorm(g, y, x)).max(),
        "identity": np.abs(tnorm(g, t, np.ones(n)) - t).max(),
        "annihilator": np.abs(tnorm(g, t, np.zeros(n))).max(),
    }
    xs, ys, zs = np.meshgrid(t, t, t, indexing="ij")
    left = tnorm(g, xs, tnorm(g, ys, zs))
    right = tnorm(g, tnorm(g, xs, ys), zs)
    viol["associativity"] = np.abs(left - right).max()
    # rows are x ascending: T(x_i, z) must not decrease along axis 0
    viol["monotonicity"] = max(0.0, float((-np.diff(txy, axis=0)).max()))
    return [(a, float(viol[a]), bool(viol[a] <= tol)) for a in AXIOMS]
