"""Compile formulas into loss graphs driven by a single additive generator.

A :class:`LossGraph` is an append-only list of elementary numeric nodes.  Each
node carries one value per grounding row of the quantifier scope it lives in;
``*_groundings`` nodes reduce an inner scope onto its enclosing one, so the
root of a closed formula is a length-1 vector.

Two compilation routes exist.  :func:`compile_truth` builds the plain fuzzy
truth value of a formula (generator, pseudo-inverse, repeat).
:func:`compile_loss` builds ``g(truth)`` directly, combining per-subformula
losses so that, for formulas over ``and or & => ~ <=>`` and universal
quantifiers, ``g`` is applied only to grounded atoms and no pseudo-inverse is
emitted.  The first route is the oracle for the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .generators import Generator
from .logic.ast import (
    Atom,
    Const,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    KnowledgeBase,
    Not,
    ResNeg,
    StrongConj,
    StrongDisj,
    Var,
    WeakConj,
    WeakDisj,
    free_vars,
    is_quantifier,
)

ATOM_EPS = 1e-7

OPS = (
    "const", "pred", "add", "sub", "mul", "div", "neg", "min", "max", "abs",
    "clampmin0", "geneval", "genpinv",
    "sum_groundings", "max_groundings", "min_groundings",
)


class CompileError(ValueError):
    pass


# ---------------------------------------------------------------------------
# graph


@dataclass
class Node:
    id: int
    op: str
    inputs: tuple[int, ...]
    attrs: dict = field(default_factory=dict)


class LossGraph:
    """Append-only, topologically ordered list of nodes."""

    def __init__(self, generator: Generator):
        self.generator = generator
        self.nodes: list[Node] = []
        self.output: int = -1
        self.outputs: dict[str, int] = {}
        # learnable symbol -> domains of its arguments (table shape)
        self.learnable: dict[str, tuple[str, ...]] = {}

    def add(self, op: str, inputs: Sequence[int] = (), **attrs) -> int:
        if op not in OPS:
            raise ValueError(f"unknown op {op!r}")
        for i in inputs:
            if not 0 <= i < len(self.nodes):
                raise ValueError(f"input {i} does not precede node {len(self.nodes)}")
        nid = len(self.nodes)
        self.nodes.append(Node(nid, op, tuple(inputs), attrs))
        return nid

    def count(self, op: str) -> int:
        return sum(1 for n in self.nodes if n.op == op)

    def __len__(self):
        return len(self.nodes)

    def evaluate(self, tables: Mapping[str, np.ndarray] | None = None) -> float:
        from .autodiff import forward

        return forward(self, tables or {}).output

    def listing(self) -> str:
        """Deterministic text dump, one node per line."""
        lines = [f"# generator {self.generator.spec()}"]
        for n in self.nodes:
            args = ",".join(str(i) for i in n.inputs)
            lines.append(f"{n.id} {n.op} [{args}]{_fmt_attrs(n)}")
        for name, nid in self.outputs.items():
            lines.append(f"# output {name} = {nid}")
        lines.append(f"# result = {self.output}")
        return "\n".join(lines) + "\n"


def _fmt_attrs(n: Node) -> str:
    a = n.attrs
    if n.op == "const":
        return f" value={_fmt_num(a['value'])}"
    if n.op == "pred":
        kind = "given" if a["given"] else "learnable"
        return f" {a['symbol']}({','.join(a['terms'])}) {kind} rows={a['rows']}"
    if n.op == "geneval":
        return f" clamp={_fmt_num(a['clamp'])}" if a.get("clamp") else ""
    if n.op.endswith("_groundings"):
        return f" rows={len(a['segments'])} -> {a['n_out']}"
    return ""


def _fmt_num(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return repr(float(v))


# ---------------------------------------------------------------------------
# grounding context


@dataclass
class GroundingContext:
    """Individuals per domain, their features, and the given predicates.

    ``given`` maps a symbol to any object exposing ``arity`` and ``items()``
    (yielding ``(id_tuple, value)`` for its non-zero entries), e.g.
    :class:`tnormloss.models.GivenPredicate`.
    """

    domains: dict[str, list[str]]
    features: dict[str, np.ndarray] = field(default_factory=dict)
    given: dict = field(default_factory=dict)

    def __post_init__(self):
        self._pos: dict[str, dict[str, int]] = {
            d: {ind: i for i, ind in enumerate(ids)} for d, ids in self.domains.items()
        }
        for d, ids in self.domains.items():
            if len(self._pos[d]) != len(ids):
                raise ValueError(f"domain {d!r} lists an individual twice")
            feats = self.features.get(d)
            if feats is not None and len(feats) != len(ids):
                raise ValueError(f"domain {d!r}: {len(ids)} individuals, {len(feats)} feature rows")

    def index_of(self, domain: str, individual: str) -> int:
        try:
            return self._pos[domain][individual]
        except KeyError:
            raise CompileError(f"{individual!r} is not an individual of {domain!r}") from None

    def locate(self, individual: str) -> tuple[str, int]:
        hits = [(d, pos[individual]) for d, pos in self._pos.items() if individual in pos]
        if not hits:
            raise CompileError(f"unknown individual {individual!r}")
        if len(hits) > 1:
            raise CompileError(f"individual {individual!r} is ambiguous across domains")
        return hits[0]

    def size(self, domain: str) -> int:
        try:
            return len(self.domains[domain])
        except KeyError:
            raise CompileError(f"unknown domain {domain!r}") from None


@dataclass(frozen=True)
class CompileOptions:
    """``quantifier_mode``: ``generated`` (t-norm / t-conorm over groundings)
    or ``minmax``.  ``exists_mode`` picks the existential under ``generated``:
    ``tconorm`` or ``max``.  ``prune`` enables guarded grounding."""

    quantifier_mode: str = "generated"
    exists_mode: str = "tconorm"
    prune: bool = True
    eps: float = ATOM_EPS

    def __post_init__(self):
        if self.quantifier_mode not in ("generated", "minmax"):
            raise ValueError(f"quantifier_mode must be generated|minmax, not {self.quantifier_mode!r}")
        if self.exists_mode not in ("tconorm", "max"):
            raise ValueError(f"exists_mode must be tconorm|max, not {self.exists_mode!r}")


@dataclass
class _Scope:
    n: int
    index: dict[str, np.ndarray]
    domain_of: dict[str, str]


# ---------------------------------------------------------------------------
# compiler


class _Compiler:
    def __init__(self, g: Generator, ctx: GroundingContext, options: CompileOptions, graph=None):
        self.g = g
        self.ctx = ctx
        self.opt = options
        self.graph = graph if graph is not None else LossGraph(g)
        self._truth_memo: dict = {}
        self._loss_memo: dict = {}
        self._const: dict[float, int] = {}
        self._learn_literal: set[int] = set()
        self._geneval_memo: dict[int, int] = {}
        self._given_cache: dict = {}
        self._scopes: list[_Scope] = []

    # -- helpers ----------------------------------------------------------------

    def const(self, v: float) -> int:
        key = float(v)
        if key not in self._const:
            self._const[key] = self.graph.add("const", value=key)
        return self._const[key]

    def add(self, op, *inputs, **attrs) -> int:
        return self.graph.add(op, inputs, **attrs)

    def geneval(self, x: int) -> int:
        if x not in self._geneval_memo:
            clamp = self.opt.eps if x in self._learn_literal else None
            self._geneval_memo[x] = self.add("geneval", x, clamp=clamp)
        return self._geneval_memo[x]

    def clamp_top(self, x: int) -> int:
        """``min{g(0), x}``; a no-op for strict generators."""
        if self.g.is_strict:
            return x
        return self.add("min", x, self.const(self.g.zero_limit))

    def root_scope(self) -> _Scope:
        s = _Scope(1, {}, {})
        self._scopes.append(s)
        return s

    def simplifiable(self, f: Formula) -> bool:
        if isinstance(f, Atom):
            return True
        if isinstance(f, Not) and isinstance(f.arg, Atom):
            # negative literal: g(1 - a) needs no pseudo-inverse either
            return True
        if isinstance(f, (WeakConj, WeakDisj, StrongConj, Implies, Iff)):
            return self.simplifiable(f.left) and self.simplifiable(f.right)
        if isinstance(f, ResNeg):
            return self.simplifiable(f.arg)
        if isinstance(f, Forall):
            return self.simplifiable(f.body)
        if isinstance(f, Exists):
            max_mode = self.opt.quantifier_mode == "minmax" or self.opt.exists_mode == "max"
            return max_mode and self.simplifiable(f.body)
        return False

    # -- atoms ------------------------------------------------------------------

    def atom(self, a: Atom, scope: _Scope) -> int:
        key = ("atom", id(scope), a)
        if key in self._truth_memo:
            return self._truth_memo[key]
        idx, doms, terms = [], [], []
        for t in a.args:
            if isinstance(t, Var):
                if t.name not in scope.index:
                    raise CompileError(f"free variable {t.name!r} in {a.pred}")
                idx.append(scope.index[t.name])
                doms.append(scope.domain_of[t.name])
                terms.append(t.name)
            else:
                dom, pos = self.ctx.locate(t.name)
                idx.append(np.full(scope.n, pos, dtype=np.int64))
                doms.append(dom)
                terms.append(f'"{t.name}"')
        doms_t = tuple(doms)
        if a.pred in self.ctx.given:
            values = self.given_values(a.pred, doms_t, idx, scope.n)
            nid = self.add("pred", symbol=a.pred, given=True, values=values,
                           terms=terms, rows=scope.n)
        else:
            known = self.graph.learnable.setdefault(a.pred, doms_t)
            if known != doms_t:
                raise CompileError(
                    f"predicate {a.pred!r} used over domains {doms_t}, earlier over {known}"
                )
            nid = self.add("pred", symbol=a.pred, given=False, index=tuple(idx),
                           domains=doms_t, terms=terms, rows=scope.n)
            self._learn_literal.add(nid)
        self._truth_memo[key] = nid
        return nid

    def given_entries(self, pred: str, doms: tuple[str, ...]):
        """Non-zero entries of a given predicate as (local index array, values)."""
        key = (pred, doms)
        if key not in self._given_cache:
            gp = self.ctx.given[pred]
            if gp.arity != len(doms):
                raise CompileError(f"given predicate {pred!r} has arity {gp.arity}, used with {len(doms)}")
            rows, vals = [], []
            pos = [self.ctx._pos[d] for d in doms]
            for ids, v in gp.items():
                try:
                    rows.append([pos[k][i] for k, i in enumerate(ids)])
                except KeyError:
                    continue
                vals.append(float(v))
            arr = np.asarray(rows, dtype=np.int64).reshape(-1, len(doms))
            dims = tuple(self.ctx.size(d) for d in doms)
            keys = np.ravel_multi_index(arr.T, dims) if len(doms) else np.zeros(len(arr), np.int64)
            order = np.argsort(keys, kind="stable")
            keys, vals_arr, arr = keys[order], np.asarray(vals)[order], arr[order]
            uniq = np.ones(len(keys), dtype=bool)
            uniq[1:] = keys[1:] != keys[:-1]
            self._given_cache[key] = (keys[uniq], vals_arr[uniq], arr[uniq], dims)
        return self._given_cache[key]

    def given_values(self, pred, doms, idx, n) -> np.ndarray:
        keys, vals, _, dims = self.given_entries(pred, doms)
        if not doms:
            return np.full(n, vals[0] if len(vals) else 0.0)
        q = np.ravel_multi_index(tuple(idx), dims) if n else np.zeros(0, np.int64)
        pos = np.searchsorted(keys, q)
        pos_c = np.minimum(pos, max(len(keys) - 1, 0))
        hit = (pos < len(keys)) & (keys[pos_c] == q) if len(keys) else np.zeros(n, bool)
        return np.where(hit, vals[pos_c] if len(keys) else 0.0, 0.0)

    # -- quantifier blocks -------------------------------------------------------

    def block(self, f) -> tuple[list[tuple[str, str]], Formula]:
        kind = type(f)
        binders = []
        while isinstance(f, kind):
            if f.domain is None:
                if len(self.ctx.domains) != 1:
                    raise CompileError(f"variable {f.var!r} has no domain")
                dom = next(iter(self.ctx.domains))
            else:
                dom = f.domain
            if self.ctx.size(dom) == 0:
                raise CompileError(f"empty quantifier domain {dom!r}")
            binders.append((f.var, dom))
            f = f.body
        return binders, f

    def guard_of(self, binders, body) -> Optional[Atom]:
        if not (self.opt.prune and isinstance(body, Implies) and isinstance(body.left, Atom)):
            return None
        a = body.left
        if a.pred not in self.ctx.given or not a.args:
            return None
        names = [t.name for t in a.args if isinstance(t, Var)]
        block_vars = {v for v, _ in binders}
        if len(names) != len(a.args) or len(set(names)) != len(names) or not set(names) <= block_vars:
            return None
        return a

    def block_scope(self, outer: _Scope, binders, guard: Optional[Atom]) -> tuple[_Scope, np.ndarray]:
        bvars = [v for v, _ in binders]
        bdoms = dict(binders)
        if guard is None:
            sizes = [self.ctx.size(d) for _, d in binders]
            combos = np.indices(sizes).reshape(len(sizes), -1).astype(np.int64)
        else:
            gvars = [t.name for t in guard.args]
            _, _, entries, _ = self.given_entries(guard.pred, tuple(bdoms[v] for v in gvars))
            cols = {v: entries[:, k] for k, v in enumerate(gvars)}
            rest = [v for v in bvars if v not in cols]
            m = len(entries)
            if rest:
                sizes = [self.ctx.size(bdoms[v]) for v in rest]
                grid = np.indices(sizes).reshape(len(rest), -1)
                r = grid.shape[1]
                cols = {v: np.repeat(c, r) for v, c in cols.items()}
                for k, v in enumerate(rest):
                    cols[v] = np.tile(grid[k], m)
            combos = np.array([cols[v] for v in bvars], dtype=np.int64).reshape(len(bvars), -1)
            order = np.lexsort(combos[::-1]) if combos.shape[1] else np.zeros(0, np.int64)
            combos = combos[:, order]
        m = combos.shape[1]
        seg = np.repeat(np.arange(outer.n, dtype=np.int64), m)
        pick = np.tile(np.arange(m, dtype=np.int64), outer.n)
        index = {v: a[seg] for v, a in outer.index.items()}
        domain_of = dict(outer.domain_of)
        for k, v in enumerate(bvars):
            index[v] = combos[k][pick]
            domain_of[v] = bdoms[v]
        s = _Scope(outer.n * m, index, domain_of)
        self._scopes.append(s)
        return s, seg

    def reduce(self, op: str, x: int, seg: np.ndarray, n_out: int, identity: float) -> int:
        return self.add(op, x, segments=seg, n_out=n_out, identity=identity)

    # -- truth route ---------------------------------------------------------------

    def gval(self, f: Formula, scope: _Scope, mixed: bool) -> int:
        """Node holding ``g(truth(f))``."""
        if mixed and not isinstance(f, Atom) and self.simplifiable(f):
            return self.loss(f, scope)
        return self.geneval(self.truth(f, scope, mixed))

    def neg_literal(self, x: int) -> int:
        nid = self.add("sub", self.const(1.0), x)
        if x in self._learn_literal:
            self._learn_literal.add(nid)
        return nid

    def truth(self, f: Formula, scope: _Scope, mixed: bool = False) -> int:
        key = ("truth", id(scope), f, mixed)
        if key in self._truth_memo:
            return self._truth_memo[key]
        nid = self._truth(f, scope, mixed)
        self._truth_memo[key] = nid
        return nid

    def _truth(self, f, scope, mixed) -> int:
        if isinstance(f, Atom):
            return self.atom(f, scope)
        if mixed and self.simplifiable(f):
            return self.add("genpinv", self.loss(f, scope))
        g0 = self.const(self.g.zero_limit)
        if isinstance(f, Not):
            return self.neg_literal(self.truth(f.arg, scope, mixed))
        if isinstance(f, WeakConj):
            return self.add("min", self.truth(f.left, scope, mixed), self.truth(f.right, scope, mixed))
        if isinstance(f, WeakDisj):
            return self.add("max", self.truth(f.left, scope, mixed), self.truth(f.right, scope, mixed))
        if isinstance(f, StrongConj):
            s = self.add("add", self.gval(f.left, scope, mixed), self.gval(f.right, scope, mixed))
            return self.add("genpinv", self.clamp_top(s))
        if isinstance(f, StrongDisj):
            nl = self.neg_literal(self.truth(f.left, scope, mixed))
            nr = self.neg_literal(self.truth(f.right, scope, mixed))
            s = self.add("add", self.geneval(nl), self.geneval(nr))
            return self.add("sub", self.const(1.0), self.add("genpinv", self.clamp_top(s)))
        if isinstance(f, Implies):
            d = self.add("sub", self.gval(f.right, scope, mixed), self.gval(f.left, scope, mixed))
            return self.add("genpinv", self.add("clampmin0", d))
        if isinstance(f, Iff):
            d = self.add("sub", self.gval(f.left, scope, mixed), self.gval(f.right, scope, mixed))
            return self.add("genpinv", self.add("abs", d))
        if isinstance(f, ResNeg):
            d = self.add("sub", g0, self.gval(f.arg, scope, mixed))
            return self.add("genpinv", self.add("clampmin0", d))
        if is_quantifier(f):
            binders, body = self.block(f)
            inner, seg = self.block_scope(scope, binders, self.guard_of(binders, body) if isinstance(f, Forall) else None)
            minmax = self.opt.quantifier_mode == "minmax"
            if isinstance(f, Forall):
                if minmax:
                    return self.reduce("min_groundings", self.truth(body, inner, mixed), seg, scope.n, 1.0)
                s = self.reduce("sum_groundings", self.gval(body, inner, mixed), seg, scope.n, 0.0)
                return self.add("genpinv", self.clamp_top(s))
            if minmax or self.opt.exists_mode == "max":
                return self.reduce("max_groundings", self.truth(body, inner, mixed), seg, scope.n, 0.0)
            nb = self.neg_literal(self.truth(body, inner, mixed))
            s = self.reduce("sum_groundings", self.geneval(nb), seg, scope.n, 0.0)
            return self.add("sub", self.const(1.0), self.add("genpinv", self.clamp_top(s)))
        raise TypeError(f"not a formula: {f!r}")

    # -- loss route -----------------------------------------------------------------

    def loss(self, f: Formula, scope: _Scope) -> int:
        key = ("loss", id(scope), f)
        if key in self._loss_memo:
            return self._loss_memo[key]
        nid = self._loss(f, scope)
        self._loss_memo[key] = nid
        return nid

    def _loss(self, f, scope) -> int:
        if not self.simplifiable(f):
            # no simplification: g applied to the (mixed) truth value
            return self.geneval(self.truth(f, scope, mixed=True))
        if isinstance(f, Atom):
            return self.geneval(self.atom(f, scope))
        if isinstance(f, Not):
            return self.geneval(self.neg_literal(self.atom(f.arg, scope)))
        if isinstance(f, WeakConj):
            return self.add("max", self.loss(f.left, scope), self.loss(f.right, scope))
        if isinstance(f, WeakDisj):
            return self.add("min", self.loss(f.left, scope), self.loss(f.right, scope))
        if isinstance(f, StrongConj):
            return self.clamp_top(self.add("add", self.loss(f.left, scope), self.loss(f.right, scope)))
        if isinstance(f, Implies):
            d = self.add("sub", self.loss(f.right, scope), self.loss(f.left, scope))
            return self.add("clampmin0", d)
        if isinstance(f, Iff):
            return self.add("abs", self.add("sub", self.loss(f.left, scope), self.loss(f.right, scope)))
        if isinstance(f, ResNeg):
            d = self.add("sub", self.const(self.g.zero_limit), self.loss(f.arg, scope))
            return self.add("clampmin0", d)
        if isinstance(f, Forall):
            binders, body = self.block(f)
            inner, seg = self.block_scope(scope, binders, self.guard_of(binders, body))
            lb = self.loss(body, inner)
            if self.opt.quantifier_mode == "minmax":
                return self.reduce("max_groundings", lb, seg, scope.n, 0.0)
            return self.clamp_top(self.reduce("sum_groundings", lb, seg, scope.n, 0.0))
        if isinstance(f, Exists):
            binders, body = self.block(f)
            inner, seg = self.block_scope(scope, binders, None)
            return self.reduce("min_groundings", self.loss(body, inner), seg, scope.n, self.g.zero_limit)
        raise TypeError(f"not a formula: {f!r}")


def _check_closed(f: Formula):
    fv = free_vars(f)
    if fv:
        raise CompileError(f"formula has free variables: {sorted(fv)}")


def compile_truth(f: Formula, g: Generator, ctx: GroundingContext,
                  options: CompileOptions = CompileOptions()) -> LossGraph:
    """Graph whose output is the fuzzy truth value of the closed formula ``f``."""
    _check_closed(f)
    c = _Compiler(g, ctx, options)
    c.graph.output = c.truth(f, c.root_scope())
    return c.graph


def compile_loss(f: Formula, g: Generator, ctx: GroundingContext,
                 options: CompileOptions = CompileOptions()) -> LossGraph:
    """Graph whose output is ``g(truth(f))``, simplified where possible."""
    _check_closed(f)
    c = _Compiler(g, ctx, options)
    c.graph.output = c.loss(f, c.root_scope())
    return c.graph


def kb_loss(kb: KnowledgeBase, g: Generator, ctx: GroundingContext,
            options: CompileOptions = CompileOptions()) -> LossGraph:
    """Weighted sum of the per-rule losses.  Zero-weight rules are dropped."""
    if not kb.rules:
        raise CompileError("knowledge base has no rules")
    for name in kb.given():
        if name not in ctx.given:
            raise CompileError(f"given predicate {name!r} has no table in the context")
    c = _Compiler(g, ctx, options)
    root = c.root_scope()
    total = None
    for i, rule in enumerate(kb.rules):
        _check_closed(rule.formula)
        if rule.weight == 0:
            continue
        lr = c.loss(rule.formula, root)
        c.graph.outputs[f"rule{i}"] = lr
        term = lr if rule.weight == 1.0 else c.add("mul", c.const(rule.weight), lr)
        total = term if total is None else c.add("add", total, term)
    c.graph.output = total if total is not None else c.const(0.0)
    return c.graph


# ---------------------------------------------------------------------------
# simplification check


@dataclass
class SimplificationReport:
    max_abs_diff: float
    genpinv_nodes: int
    geneval_on_atoms_only: bool
    simplifiable: bool
    trials: int

    def __str__(self):
        return (
            f"max |loss - g(truth)| = {self.max_abs_diff:.3e} over {self.trials} trial(s); "
            f"genpinv nodes = {self.genpinv_nodes}; geneval on atoms only = {self.geneval_on_atoms_only}; "
            f"simplification property = {self.simplifiable}"
        )


def random_tables(graph: LossGraph, ctx: GroundingContext, rng: np.random.Generator,
                  low: float = 0.05, high: float = 0.95) -> dict[str, np.ndarray]:
    return {
        sym: rng.uniform(low, high, size=tuple(ctx.size(d) for d in doms))
        for sym, doms in graph.learnable.items()
    }


def _ext_absdiff(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b)


def _is_literal(graph: LossGraph, nid: int) -> bool:
    n = graph.nodes[nid]
    if n.op == "pred":
        return True
    if n.op == "sub":
        a, b = (graph.nodes[i] for i in n.inputs)
        return a.op == "const" and a.attrs.get("value") == 1.0 and b.op == "pred"
    return False


def geneval_on_atoms_only(graph: LossGraph) -> bool:
    """True when every ``geneval`` reads an atom or its strong negation."""
    return all(_is_literal(graph, n.inputs[0]) for n in graph.nodes if n.op == "geneval")


def verify_simplification(f: Formula, g: Generator, ctx: GroundingContext,
                          options: CompileOptions = CompileOptions(),
                          trials: int = 5, seed: int = 0) -> SimplificationReport:
    """Compare ``compile_loss`` with ``g`` applied to ``compile_truth`` on random atoms."""
    from .autodiff import forward

    lg = compile_loss(f, g, ctx, options)
    tg = compile_truth(f, g, ctx, options)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        tables = random_tables(tg, ctx, rng)
        lv = forward(lg, tables, allow_inf=True).output
        tv = forward(tg, tables, allow_inf=True).output
        worst = max(worst, _ext_absdiff(lv, float(g(tv))))
    c = _Compiler(g, ctx, options)
    return SimplificationReport(
        max_abs_diff=worst,
        genpinv_nodes=lg.count("genpinv"),
        geneval_on_atoms_only=geneval_on_atoms_only(lg),
        simplifiable=c.simplifiable(f),
        trials=trials,
    )
