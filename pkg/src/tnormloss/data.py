"""Relational datasets: CiteSeer-style loader, synthetic generator, KB glue."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .compiler import GroundingContext
from .logic.ast import KnowledgeBase
from .models import GivenPredicate

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    def __init__(self, message: str, path: str = "", line: int = 0):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass
class RelationalDataset:
    ids: list[str]
    features: np.ndarray
    labels: np.ndarray
    classes: list[str]
    relations: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    dropped_edges: int = 0

    def __post_init__(self):
        n = len(self.ids)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise DatasetError(f"features must be ({n}, d), got {self.features.shape}")
        if self.labels.shape != (n,):
            raise DatasetError("one label per individual required")
        if n and (self.labels.min() < 0 or self.labels.max() >= len(self.classes)):
            raise DatasetError("label index out of range")
        known = set(self.ids)
        if len(known) != n:
            raise DatasetError("duplicate individual ids")
        for name, edges in self.relations.items():
            for a, b in edges:
                if a not in known or b not in known:
                    raise DatasetError(f"relation {name!r} references unknown id")

    @property
    def n(self) -> int:
        return len(self.ids)


def _split(line: str) -> list[str]:
    if "\t" in line:
        return [c.strip() for c in line.split("\t")]
    if "," in line:
        return [c.strip() for c in line.split(",")]
    return line.split()


def load_dataset(content_file, edges_file, classes: Optional[Sequence[str]] = None,
                 relation: str = "cite") -> RelationalDataset:
    """Read ``id f1 .. fd label`` rows and ``src dst`` edge rows.

    Tab-, comma- or whitespace-separated.  Edges naming unknown ids are dropped
    and counted in ``dropped_edges``.
    """
    cpath = str(content_file)
    try:
        content_lines = Path(content_file).read_text().splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read content file: {exc}", cpath) from None
    ids: list[str] = []
    rows: list[list[float]] = []
    raw_labels: list[str] = []
    width = None
    for ln, line in enumerate(content_lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = _split(line)
        if len(cols) < 3:
            raise DatasetError("expected id, features and label", cpath, ln)
        feats = cols[1:-1]
        if width is None:
            width = len(feats)
        elif len(feats) != width:
            raise DatasetError(f"expected {width} features, found {len(feats)}", cpath, ln)
        try:
            vals = [float(v) for v in feats]
        except ValueError:
            raise DatasetError("non-numeric feature value", cpath, ln) from None
        if any(v not in (0.0, 1.0) for v in vals):
            raise DatasetError("bag-of-words features must be 0 or 1", cpath, ln)
        if classes is not None and cols[-1] not in classes:
            raise DatasetError(f"unknown label {cols[-1]!r}", cpath, ln)
        ids.append(cols[0])
        rows.append(vals)
        raw_labels.append(cols[-1])
    if not ids:
        raise DatasetError("content file has no rows", cpath)
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate individual ids", cpath)
    class_list = list(classes) if classes is not None else sorted(set(raw_labels))
    pos = {c: i for i, c in enumerate(class_list)}
    labels = np.array([pos[c] for c in raw_labels], dtype=np.int64)

    epath = str(edges_file)
    try:
        edge_lines = Path(edges_file).read_text().splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read edges file: {exc}", epath) from None
    known = set(ids)
    edges, seen, dropped = [], set(), 0
    for ln, line in enumerate(edge_lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = _split(line)
        if len(cols) != 2:
            raise DatasetError("expected 'src dst'", epath, ln)
        a, b = cols
        if a not in known or b not in known:
            dropped += 1
            continue
        if (a, b) not in seen:
            seen.add((a, b))
            edges.append((a, b))
    if dropped:
        log.warning("dropped %d edge(s) referencing unknown ids", dropped)
    return RelationalDataset(
        ids, np.asarray(rows, dtype=np.float64), labels, class_list, {relation: edges}, dropped
    )


def synth_relational(n_per_class: int, classes: int, d: int, intra_edge_p: float,
                     inter_edge_p: float, noise: float, seed: int,
                     on_p: float = 0.5, off_p: float = 0.05) -> RelationalDataset:
    """Class-conditional sparse binary features with a mostly intra-class graph.

    Each class owns a block of ``d // classes`` words, switched on with
    probability ``on_p`` (``off_p`` elsewhere).  ``noise`` mixes every class
    profile toward the average profile: at 1 the features carry no signal.
    Every unordered pair is linked with ``intra_edge_p`` inside a class and
    ``inter_edge_p`` across classes.
    """
    if classes < 1 or n_per_class < 1 or d < classes:
        raise ValueError("need classes >= 1, n_per_class >= 1 and d >= classes")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    block = d // classes
    profile = np.full((classes, d), off_p)
    for c in range(classes):
        profile[c, c * block:(c + 1) * block] = on_p
    profile = (1.0 - noise) * profile + noise * profile.mean(axis=0)
    labels = np.repeat(np.arange(classes), n_per_class)
    n = len(labels)
    feats = (rng.random((n, d)) < profile[labels]).astype(np.float64)
    ids = [f"n{i}" for i in range(n)]
    same = labels[:, None] == labels[None, :]
    p = np.where(same, intra_edge_p, inter_edge_p)
    draw = rng.random((n, n)) < p
    iu, ju = np.triu_indices(n, k=1)
    keep = draw[iu, ju]
    edges = [(ids[i], ids[j]) for i, j in zip(iu[keep], ju[keep])]
    return RelationalDataset(ids, feats, labels, [f"c{c}" for c in range(classes)], {"cite": edges})


def class_symbol(name: str) -> str:
    s = re.sub(r"\W", "_", name)
    return s if s and not s[0].isdigit() else f"c{s}"


def learnable_symbols(ds: RelationalDataset) -> list[str]:
    return [f"p_{class_symbol(c)}" for c in ds.classes]


def citation_kb_text(classes: Sequence[str], manifold: bool = True, beta: float = 0.1,
                     domain: str = "Docs", relation: str = "cite") -> str:
    """Supervision rule per class, plus the citation manifold rule if asked."""
    lines = [f"domain {domain} ;", f"pred {relation}/2 given ;"]
    for c in classes:
        s = class_symbol(c)
        lines.append(f"pred p_{s}/1 learnable ;")
        lines.append(f"pred P_{s}/1 given ;")
    for c in classes:
        s = class_symbol(c)
        lines.append(f"rule [weight=1.0] forall x in {domain}: P_{s}(x) => p_{s}(x) ;")
        if manifold:
            lines.append(
                f"rule [weight={beta!r}] forall x, y in {domain}: "
                f"{relation}(x, y) => (p_{s}(x) <=> p_{s}(y)) ;"
            )
    return "\n".join(lines) + "\n"


def to_grounding_context(ds: RelationalDataset, kb: Optional[KnowledgeBase] = None,
                         supervised: Optional[Iterable[str]] = None, domain: Optional[str] = None,
                         symmetric: bool = True) -> GroundingContext:
    """One domain of all individuals; relations and label sets become given predicates.

    ``P_<class>`` holds only the ``supervised`` individuals (all by default).
    """
    if domain is None:
        domain = next(iter(kb.domains)) if kb is not None and len(kb.domains) == 1 else "Docs"
    given: dict[str, GivenPredicate] = {}
    for name, edges in ds.relations.items():
        given[name] = GivenPredicate.from_tuples(edges, 2, symmetric=symmetric)
    sup = set(ds.ids) if supervised is None else set(supervised)
    for k, c in enumerate(ds.classes):
        members = [(i,) for i, lab in zip(ds.ids, ds.labels) if lab == k and i in sup]
        given[f"P_{class_symbol(c)}"] = GivenPredicate.from_tuples(members, 1)
    return GroundingContext({domain: list(ds.ids)}, {domain: ds.features}, given)


def kb_context(kb: KnowledgeBase) -> GroundingContext:
    """Context built from the KB alone: declared individuals (or ``<Domain><k>``
    placeholders for a size hint) and the asserted facts."""
    domains = {}
    for d in kb.domains.values():
        if d.individuals is not None:
            domains[d.name] = list(d.individuals)
        else:
            domains[d.name] = [f"{d.name}{k}" for k in range(d.size or 0)]
    given = {p.name: GivenPredicate(p.arity) for p in kb.predicates.values() if not p.learnable}
    for fact in kb.facts:
        given[fact.pred].set(fact.args, fact.value)
    return GroundingContext(domains, {}, given)
