"""Formula syntax tree and the knowledge-base container."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Not:
    """Strong negation ``1 - x``."""

    arg: "Formula"


@dataclass(frozen=True)
class ResNeg:
    """Residual negation ``x => 0``."""

    arg: "Formula"


@dataclass(frozen=True)
class _Binary:
    left: "Formula"
    right: "Formula"


class StrongConj(_Binary):
    pass


class StrongDisj(_Binary):
    pass


class WeakConj(_Binary):
    pass


class WeakDisj(_Binary):
    pass


class Implies(_Binary):
    """Residual implication."""


class Iff(_Binary):
    """Bi-residuum."""


@dataclass(frozen=True)
class _Quantifier:
    var: str
    domain: Optional[str]
    body: "Formula"


class Forall(_Quantifier):
    pass


class Exists(_Quantifier):
    pass


Formula = Union[Atom, Not, ResNeg, _Binary, _Quantifier]

BINARY_TYPES = (StrongConj, StrongDisj, WeakConj, WeakDisj, Implies, Iff)
QUANTIFIER_TYPES = (Forall, Exists)

# connectives whose loss needs the generator only at the atoms
SIMPLIFIABLE = (WeakConj, WeakDisj, StrongConj, Implies, ResNeg, Iff)


def is_binary(f) -> bool:
    return isinstance(f, _Binary)


def is_quantifier(f) -> bool:
    return isinstance(f, _Quantifier)


def children(f) -> tuple:
    if isinstance(f, Atom):
        return ()
    if isinstance(f, (Not, ResNeg)):
        return (f.arg,)
    if isinstance(f, _Binary):
        return (f.left, f.right)
    if isinstance(f, _Quantifier):
        return (f.body,)
    raise TypeError(f"not a formula: {f!r}")


def free_vars(f) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(t.name for t in f.args if isinstance(t, Var))
    if isinstance(f, _Quantifier):
        return free_vars(f.body) - {f.var}
    out: frozenset[str] = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def predicates(f) -> set[str]:
    if isinstance(f, Atom):
        return {f.pred}
    out: set[str] = set()
    for c in children(f):
        out |= predicates(c)
    return out


def connectives(f) -> set[type]:
    """Connective node types used in ``f`` (quantifiers and atoms excluded)."""
    out: set[type] = set()
    if not isinstance(f, (Atom, _Quantifier)):
        out.add(type(f))
    for c in children(f):
        out |= connectives(c)
    return out


def has_simplification_property(f) -> bool:
    """True when every connective of ``f`` is one of weak/strong conjunction,
    weak disjunction, residual implication, residual negation or bi-residuum,
    and the formula has no existential quantifier."""
    if isinstance(f, Exists):
        return False
    if not isinstance(f, (Atom, Forall)) and not isinstance(f, SIMPLIFIABLE):
        return False
    return all(has_simplification_property(c) for c in children(f))


def depth(f) -> int:
    cs = children(f)
    return 1 + max((depth(c) for c in cs), default=0)


# ---------------------------------------------------------------------------
# knowledge base


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arity: int
    binding: str  # "learnable" | "given"

    @property
    def learnable(self) -> bool:
        return self.binding == "learnable"


@dataclass(frozen=True)
class DomainDecl:
    name: str
    size: Optional[int] = None
    individuals: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class Rule:
    formula: Formula
    weight: float = 1.0
    line: int = 0


@dataclass(frozen=True)
class Fact:
    pred: str
    args: tuple[str, ...]
    value: float = 1.0


@dataclass
class KnowledgeBase:
    domains: dict[str, DomainDecl] = field(default_factory=dict)
    predicates: dict[str, PredicateDecl] = field(default_factory=dict)
    rules: list[Rule] = field(default_factory=list)
    facts: list[Fact] = field(default_factory=list)

    def learnable(self) -> list[str]:
        return [p.name for p in self.predicates.values() if p.learnable]

    def given(self) -> list[str]:
        return [p.name for p in self.predicates.values() if not p.learnable]
