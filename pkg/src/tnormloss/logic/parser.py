"""Tokenizer, recursive-descent parser and printer for the KB text format.

Statements (each terminated by ``;``, ``#`` starts a comment)::

    domain Docs ;
    domain Docs size=100 ;
    domain Images = {"i10", "i11"} ;
    pred cite/2 given ;
    pred p/1 learnable ;
    rule [weight=0.1] forall x, y in Docs: cite(x, y) => (p(x) <=> p(y)) ;
    fact cite("i10", "i11") ;

Connectives from tightest to loosest: ``not`` ``~``, ``&``, ``|``, ``and``,
``or``, ``=>`` ``->``, ``<=>``.  Implications associate to the right; the
others to the left.  Bare identifiers in argument position are variables;
constants are double-quoted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional

from .ast import (
    Atom,
    Const,
    DomainDecl,
    Exists,
    Fact,
    Forall,
    Formula,
    Iff,
    Implies,
    KnowledgeBase,
    Not,
    PredicateDecl,
    ResNeg,
    Rule,
    StrongConj,
    StrongDisj,
    Var,
    WeakConj,
    WeakDisj,
    children,
    is_binary,
    is_quantifier,
)


class LogicError(ValueError):
    """Base class for KB parse and validation errors."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class LexError(LogicError):
    pass


class KBSyntaxError(LogicError):
    pass


class UnknownPredicateError(LogicError):
    pass


class ArityError(LogicError):
    pass


class UnboundVariableError(LogicError):
    pass


class DuplicateBinderError(LogicError):
    pass


class DomainError(LogicError):
    pass


KEYWORDS = {
    "forall", "exists", "in", "and", "or", "not",
    "domain", "pred", "rule", "fact", "learnable", "given",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><=>|=>|->|[&|~(),:;/=\[\]{}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, number, string, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> Iterator[Token]:
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LexError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "ident" and tok in KEYWORDS:
            kind = "keyword"
        if kind not in ("ws", "comment"):
            yield Token(kind, tok, line, col)
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


_BINARY_LEVELS = [
    # (operators, constructor per operator, right associative)
    ({"<=>": Iff}, False),
    ({"=>": Implies, "->": None}, True),
    ({"or": WeakDisj}, False),
    ({"and": WeakConj}, False),
    ({"|": StrongDisj}, False),
    ({"&": StrongConj}, False),
]


def _material(a, b):
    return StrongDisj(Not(a), b)


class _Parser:
    def __init__(self, text: str):
        self.toks = list(tokenize(text))
        self.i = 0
        # (atom, line, col) for later validation against declarations
        self.atom_sites: list[tuple[Atom, int, int]] = []
        self.var_sites: dict[int, tuple[int, int]] = {}

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def check(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "keyword") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.check(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.check(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.fail(f"expected {what}")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise KBSyntaxError(f"{msg}, found {found}", t.line, t.col)

    # -- formulas -------------------------------------------------------------

    def formula(self, level: int = 0) -> Formula:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        ops, right = _BINARY_LEVELS[level]
        left = self.formula(level + 1)
        if right:
            if self.tok.kind == "op" and self.tok.text in ops:
                op = self.advance().text
                rhs = self.formula(level)
                ctor = ops[op] or _material
                return ctor(left, rhs)
            return left
        while self.tok.kind in ("op", "keyword") and self.tok.text in ops:
            op = self.advance().text
            left = ops[op](left, self.formula(level + 1))
        return left

    def unary(self) -> Formula:
        if self.accept("not"):
            return Not(self.unary())
        if self.accept("~"):
            return ResNeg(self.unary())
        if self.check("forall") or self.check("exists"):
            return self.quantifier()
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.tok.kind == "ident":
            return self.atom()
        self.fail("expected a formula")

    def quantifier(self) -> Formula:
        ctor = Forall if self.advance().text == "forall" else Exists
        binders: list[list] = []
        while True:
            t = self.expect_kind("ident", "a variable name")
            binders.append([t.text, None, t])
            if self.accept("in"):
                binders[-1][1] = self.expect_kind("ident", "a domain name").text
            if not self.accept(","):
                break
        self.expect(":")
        # "forall x, y in D" gives both variables the trailing domain
        pending = None
        for b in reversed(binders):
            if b[1] is None:
                b[1] = pending
            else:
                pending = b[1]
        body = self.formula()
        for name, dom, t in reversed(binders):
            body = ctor(name, dom, body)
            self.var_sites[id(body)] = (t.line, t.col)
        return body

    def atom(self) -> Atom:
        t = self.advance()
        args = []
        if self.accept("("):
            if not self.check(")"):
                while True:
                    args.append(self.term())
                    if not self.accept(","):
                        break
            self.expect(")")
        a = Atom(t.text, tuple(args))
        self.atom_sites.append((a, t.line, t.col))
        return a

    def term(self):
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return Var(t.text)
        if t.kind == "string":
            self.advance()
            return Const(t.text[1:-1])
        self.fail("expected a variable or quoted constant")

    # -- statements -----------------------------------------------------------

    def kb(self) -> KnowledgeBase:
        kb = KnowledgeBase()
        while self.tok.kind != "eof":
            t = self.tok
            if self.accept("domain"):
                self.domain_stmt(kb, t)
            elif self.accept("pred"):
                self.pred_stmt(kb, t)
            elif self.accept("rule"):
                self.rule_stmt(kb, t)
            elif self.accept("fact"):
                self.fact_stmt(kb)
            else:
                self.fail("expected 'domain', 'pred', 'rule' or 'fact'")
            self.expect(";")
        return kb

    def domain_stmt(self, kb: KnowledgeBase, start: Token):
        name = self.expect_kind("ident", "a domain name").text
        if name in kb.domains:
            raise DomainError(f"domain {name!r} declared twice", start.line, start.col)
        size = None
        individuals = None
        if self.tok.kind == "ident" and self.tok.text == "size":
            self.advance()
            self.expect("=")
            num = self.expect_kind("number", "an integer size")
            try:
                size = int(num.text)
            except ValueError:
                raise KBSyntaxError("domain size must be an integer", num.line, num.col) from None
        elif self.accept("="):
            self.expect("{")
            items = []
            if not self.check("}"):
                while True:
                    items.append(self.expect_kind("string", "a quoted individual").text[1:-1])
                    if not self.accept(","):
                        break
            self.expect("}")
            individuals = tuple(items)
            size = len(items)
        kb.domains[name] = DomainDecl(name, size, individuals)

    def pred_stmt(self, kb: KnowledgeBase, start: Token):
        name = self.expect_kind("ident", "a predicate name").text
        self.expect("/")
        num = self.expect_kind("number", "an arity")
        if not num.text.isdigit():
            raise KBSyntaxError("arity must be a non-negative integer", num.line, num.col)
        binding = self.tok.text
        if not (self.accept("learnable") or self.accept("given")):
            self.fail("expected 'learnable' or 'given'")
        if name in kb.predicates:
            raise KBSyntaxError(f"predicate {name!r} declared twice", start.line, start.col)
        kb.predicates[name] = PredicateDecl(name, int(num.text), binding)

    def rule_stmt(self, kb: KnowledgeBase, start: Token):
        weight = 1.0
        bracket = self.accept("[")
        if self.tok.kind == "ident" and self.tok.text == "weight":
            self.advance()
            self.expect("=")
            weight = float(self.expect_kind("number", "a weight").text)
        elif bracket:
            self.fail("expected 'weight'")
        if bracket:
            self.expect("]")
        if weight < 0:
            raise KBSyntaxError("rule weight must be non-negative", start.line, start.col)
        f = self.formula()
        kb.rules.append(Rule(f, weight, start.line))

    def fact_stmt(self, kb: KnowledgeBase):
        t = self.expect_kind("ident", "a predicate name")
        args = []
        self.expect("(")
        if not self.check(")"):
            while True:
                args.append(self.expect_kind("string", "a quoted constant").text[1:-1])
                if not self.accept(","):
                    break
        self.expect(")")
        value = 1.0
        if self.accept("="):
            value = float(self.expect_kind("number", "a truth value").text)
        if value not in (0.0, 1.0):
            raise KBSyntaxError("fact value must be 0 or 1", t.line, t.col)
        kb.facts.append(Fact(t.text, tuple(args), value))
        self.atom_sites.append((Atom(t.text, tuple(Const(a) for a in args)), t.line, t.col))


# ---------------------------------------------------------------------------
# validation


def _check_binding(f: Formula, bound: tuple[str, ...], sites: dict, atom_sites: dict, line: int):
    if isinstance(f, Atom):
        for term in f.args:
            if isinstance(term, Var) and term.name not in bound:
                ln, col = atom_sites.get(id(f), (line, 0))
                raise UnboundVariableError(f"variable {term.name!r} is not bound", ln, col)
        return
    if is_quantifier(f):
        if f.var in bound:
            ln, col = sites.get(id(f), (line, 0))
            raise DuplicateBinderError(f"variable {f.var!r} is already bound", ln, col)
        _check_binding(f.body, bound + (f.var,), sites, atom_sites, line)
        return
    for c in children(f):
        _check_binding(c, bound, sites, atom_sites, line)


def _resolve_domains(f: Formula, kb: KnowledgeBase, sites: dict, line: int) -> Formula:
    if isinstance(f, Atom):
        return f
    if is_quantifier(f):
        dom = f.domain
        ln, col = sites.get(id(f), (line, 0))
        if dom is None:
            if len(kb.domains) != 1:
                raise DomainError(
                    f"variable {f.var!r} needs an explicit domain ('in <Domain>')", ln, col
                )
            dom = next(iter(kb.domains))
        elif dom not in kb.domains:
            raise DomainError(f"unknown domain {dom!r}", ln, col)
        body = _resolve_domains(f.body, kb, sites, line)
        out = type(f)(f.var, dom, body)
        sites[id(out)] = (ln, col)
        return out
    if is_binary(f):
        return type(f)(
            _resolve_domains(f.left, kb, sites, line), _resolve_domains(f.right, kb, sites, line)
        )
    return type(f)(_resolve_domains(f.arg, kb, sites, line))


def parse_formula(text: str, check_closed: bool = True) -> Formula:
    """Parse a single formula; by default it must have no free variables."""
    p = _Parser(text)
    f = p.formula()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    if check_closed:
        atom_sites = {id(a): (ln, c) for a, ln, c in p.atom_sites}
        _check_binding(f, (), p.var_sites, atom_sites, 1)
    return f


def parse_kb(text: str) -> KnowledgeBase:
    """Parse and validate a knowledge base."""
    p = _Parser(text)
    kb = p.kb()
    for atom, line, col in p.atom_sites:
        decl = kb.predicates.get(atom.pred)
        if decl is None:
            raise UnknownPredicateError(f"undeclared predicate {atom.pred!r}", line, col)
        if decl.arity != len(atom.args):
            raise ArityError(
                f"{atom.pred} expects {decl.arity} argument(s), got {len(atom.args)}", line, col
            )
    atom_sites = {id(a): (ln, c) for a, ln, c in p.atom_sites}
    resolved = []
    for rule in kb.rules:
        _check_binding(rule.formula, (), p.var_sites, atom_sites, rule.line)
        f = _resolve_domains(rule.formula, kb, p.var_sites, rule.line)
        resolved.append(Rule(f, rule.weight, rule.line))
    kb.rules = resolved
    for fact in kb.facts:
        if not kb.predicates[fact.pred].learnable:
            continue
        raise KBSyntaxError(f"facts may only assert given predicates, not {fact.pred!r}")
    return kb


# ---------------------------------------------------------------------------
# printing

_SYMBOL = {
    StrongConj: "&",
    StrongDisj: "|",
    WeakConj: "and",
    WeakDisj: "or",
    Implies: "=>",
    Iff: "<=>",
}


def _term(t) -> str:
    return t.name if isinstance(t, Var) else f'"{t.name}"'


def pretty_print(f: Formula) -> str:
    """Fully parenthesised rendering that parses back to the same tree."""
    if isinstance(f, Atom):
        if not f.args:
            return f.pred
        return f"{f.pred}({', '.join(_term(t) for t in f.args)})"
    if isinstance(f, Not):
        return f"not {_operand(f.arg)}"
    if isinstance(f, ResNeg):
        return f"~{_operand(f.arg)}"
    if is_binary(f):
        return f"{_operand(f.left)} {_SYMBOL[type(f)]} {_operand(f.right)}"
    if is_quantifier(f):
        kw = "forall" if isinstance(f, Forall) else "exists"
        dom = f" in {f.domain}" if f.domain else ""
        return f"{kw} {f.var}{dom}: {pretty_print(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def _operand(f: Formula) -> str:
    s = pretty_print(f)
    if isinstance(f, Atom) or isinstance(f, (Not, ResNeg)):
        return s
    return f"({s})"


def format_kb(kb: KnowledgeBase) -> str:
    lines = []
    for d in kb.domains.values():
        if d.individuals is not None:
            items = ", ".join(f'"{i}"' for i in d.individuals)
            lines.append(f"domain {d.name} = {{{items}}} ;")
        elif d.size is not None:
            lines.append(f"domain {d.name} size={d.size} ;")
        else:
            lines.append(f"domain {d.name} ;")
    for pd in kb.predicates.values():
        lines.append(f"pred {pd.name}/{pd.arity} {pd.binding} ;")
    for r in kb.rules:
        lines.append(f"rule [weight={r.weight!r}] {pretty_print(r.formula)} ;")
    for fa in kb.facts:
        args = ", ".join(f'"{a}"' for a in fa.args)
        lines.append(f"fact {fa.pred}({args}) = {fa.value!r} ;")
    return "\n".join(lines) + "\n"
