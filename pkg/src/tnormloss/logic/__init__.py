"""First-order knowledge bases: syntax tree, parser and static checks."""

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
    connectives,
    depth,
    free_vars,
    has_simplification_property,
    predicates,
)
from .parser import (
    ArityError,
    DomainError,
    DuplicateBinderError,
    KBSyntaxError,
    LexError,
    LogicError,
    UnboundVariableError,
    UnknownPredicateError,
    format_kb,
    parse_formula,
    parse_kb,
    pretty_print,
    tokenize,
)
