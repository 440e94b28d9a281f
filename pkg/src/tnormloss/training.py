"""Optimisers, the training loop, and the transductive experiments."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .autodiff import NumericFault, backward, forward
from .compiler import CompileOptions, GroundingContext, LossGraph, kb_loss
from .data import (
    RelationalDataset,
    citation_kb_text,
    learnable_symbols,
    load_dataset,
    synth_relational,
    to_grounding_context,
)
from .generators import Frank, Generator, SchweizerSklar, parse_generator
from .logic import parse_kb
from .models import MlpPredicateGroup

log = logging.getLogger(__name__)

DEFAULT_BETA_GRID = (0.1, 0.01, 0.006, 0.003, 0.001, 0.0001)
DEFAULT_SPLITS = (0.10, 0.25, 0.50, 0.75, 0.90)


class ConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    def __init__(self, epoch: int, cause: Exception):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {cause}")


# ---------------------------------------------------------------------------
# optimisers


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"  # "gd" | "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 200

    def __post_init__(self):
        if self.kind not in ("gd", "adam"):
            raise ConfigError(f"optimizer kind must be gd|adam, not {self.kind!r}")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")

    @classmethod
    def gd(cls, lr: float = 1e-5, epochs: int = 2000) -> "OptimizerConfig":
        return cls(kind="gd", lr=lr, epochs=epochs)

    @classmethod
    def adam(cls, lr: float = 1e-3, epochs: int = 200, **kw) -> "OptimizerConfig":
        return cls(kind="adam", lr=lr, epochs=epochs, **kw)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              config: OptimizerConfig):
    """One bias-corrected Adam update.  Returns ``(new_state, new_params)``."""
    t = state.t + 1
    b1, b2 = config.beta1, config.beta2
    new_m, new_v, new_p = [], [], []
    for p, gr, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1 - b1) * gr
        v = b2 * v + (1 - b2) * gr * gr
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_p.append(p - config.lr * m_hat / (np.sqrt(v_hat) + config.eps))
        new_m.append(m)
        new_v.append(v)
    return AdamState(new_m, new_v, t), new_p


class Optimizer:
    def __init__(self, config: OptimizerConfig, params: Sequence[np.ndarray]):
        self.config = config
        self.state = AdamState.zeros_like(params) if config.kind == "adam" else None

    def step(self, params: list[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """Update ``params`` in place."""
        if self.state is None:
            for p, gr in zip(params, grads):
                p -= self.config.lr * gr
            return
        self.state, new = adam_step(self.state, params, grads, self.config)
        for p, q in zip(params, new):
            p[...] = q


# ---------------------------------------------------------------------------
# loss evaluation over models


def loss_and_grad(graph: LossGraph, groups: Sequence[MlpPredicateGroup], ctx: GroundingContext,
                  extra_tables: Optional[dict] = None):
    """KB loss and its gradient with respect to every group's parameters."""
    tables = dict(extra_tables or {})
    caches = []
    for grp in groups:
        out, cache = grp.forward(ctx.features[grp.domain])
        caches.append(cache)
        for j, s in enumerate(grp.symbols):
            tables[s] = out[:, j]
    tape = forward(graph, tables)
    gt = backward(tape)
    grads = []
    for grp, cache in zip(groups, caches):
        n = cache[2].shape[0]
        d_out = np.stack([gt.get(s, np.zeros(n)) for s in grp.symbols], axis=1)
        grads.append(grp.backward(cache, d_out))
    return tape.output, grads


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    loss: float
    train_acc: float
    test_acc: float


class Trace(list):
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "train_acc", "test_acc"])
        for r in self:
            w.writerow([r.epoch, repr(r.loss), repr(r.train_acc), repr(r.test_acc)])
        return buf.getvalue()

    def to_csv_file(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @property
    def final(self) -> TraceRow:
        return self[-1]


Metrics = Callable[[], tuple[float, float]]


def train(graph: LossGraph, groups: Sequence[MlpPredicateGroup], ctx: GroundingContext,
          opt: OptimizerConfig, metrics: Optional[Metrics] = None,
          epochs: Optional[int] = None) -> Trace:
    """Full-batch training.  Row ``k`` of the trace holds the state after ``k``
    updates, so ``epochs=0`` yields the initial metrics only."""
    n_epochs = opt.epochs if epochs is None else epochs
    params = [p for grp in groups for p in grp.params]
    optim = Optimizer(opt, params)
    trace = Trace()
    for epoch in range(n_epochs + 1):
        try:
            loss, grads = loss_and_grad(graph, groups, ctx)
        except NumericFault as exc:
            raise TrainingError(epoch, exc) from exc
        tr, te = metrics() if metrics is not None else (math.nan, math.nan)
        trace.append(TraceRow(epoch, float(loss), float(tr), float(te)))
        if epoch == n_epochs:
            break
        optim.step(params, [gr for gs in grads for gr in gs])
    return trace


def accuracy(group: MlpPredicateGroup, features: np.ndarray, labels: np.ndarray,
             idx: np.ndarray) -> float:
    if len(idx) == 0:
        return math.nan
    pred = group(features[idx]).argmax(axis=1)
    return float(np.mean(pred == labels[idx]))


def epochs_to_reach(trace: Sequence[TraceRow], target: float) -> Optional[int]:
    for r in trace:
        if r.train_acc >= target:
            return r.epoch
    return None


# ---------------------------------------------------------------------------
# splits


def transductive_split(labels: np.ndarray, test_fraction: float, seed: int):
    """Class-stratified split into ``(train_idx, test_idx)`` index arrays.

    ``round(test_fraction * n)`` individuals go to the test side, allotted to
    classes by largest remainder.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    n = len(labels)
    n_test = int(round(test_fraction * n))
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    members = {c: rng.permutation(np.flatnonzero(labels == c)) for c in classes}
    quota = {c: test_fraction * len(members[c]) for c in classes}
    take = {c: int(math.floor(q)) for c, q in quota.items()}
    left = n_test - sum(take.values())
    by_rem = sorted(classes, key=lambda c: (-(quota[c] - take[c]), c))
    for c in by_rem[:max(left, 0)]:
        take[c] += 1
    test = np.sort(np.concatenate([members[c][:take[c]] for c in classes]))
    train_ = np.sort(np.concatenate([members[c][take[c]:] for c in classes]))
    return train_, test


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    """One JSON-serialisable description of a training run or sweep."""

    generator: str = "ss:-1.0"
    family: str = "ss"
    lambdas: list[float] = field(default_factory=lambda: [-1.5, -1.0, 0.0, 1.0, 1.5])
    test_fraction: float = 0.10
    splits: list[float] = field(default_factory=lambda: list(DEFAULT_SPLITS))
    manifold: bool = True
    beta_grid: list[float] = field(default_factory=lambda: list(DEFAULT_BETA_GRID))
    optimizer: dict = field(default_factory=lambda: {"kind": "adam", "lr": 1e-3, "epochs": 200})
    hidden: list[int] = field(default_factory=lambda: [100, 100, 100])
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    seed: int = 0
    content: Optional[str] = None
    edges: Optional[str] = None
    synth: dict = field(default_factory=lambda: {
        "n_per_class": 50, "classes": 3, "d": 40, "intra_edge_p": 0.05,
        "inter_edge_p": 0.005, "noise": 0.5, "seed": 0,
    })
    symmetric_edges: bool = True
    quantifier_mode: str = "generated"
    exists_mode: str = "tconorm"

    def __post_init__(self):
        try:
            parse_generator(self.generator)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.family not in ("ss", "frank"):
            raise ConfigError("family must be ss or frank")
        for f in [self.test_fraction, *self.splits]:
            if not 0.0 < f < 1.0:
                raise ConfigError(f"split fraction {f} outside (0, 1)")
        if not self.beta_grid or any(b < 0 for b in self.beta_grid):
            raise ConfigError("beta grid must be non-empty and non-negative")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if (self.content is None) != (self.edges is None):
            raise ConfigError("content and edges must be given together")
        try:
            self.opt_config()
            CompileOptions(self.quantifier_mode, self.exists_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def opt_config(self) -> OptimizerConfig:
        return OptimizerConfig(**self.optimizer)

    def family_generator(self, lam: float) -> Generator:
        return SchweizerSklar(lam) if self.family == "ss" else Frank(lam)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def build_dataset(cfg: ExperimentConfig) -> RelationalDataset:
    if cfg.content is not None:
        return load_dataset(cfg.content, cfg.edges)
    return synth_relational(**cfg.synth)


@dataclass
class RunResult:
    trace: Trace
    beta: float
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def test_acc(self) -> float:
        return self.trace.final.test_acc


def _fit(ds: RelationalDataset, g: Generator, cfg: ExperimentConfig, train_idx, eval_idx,
         manifold: bool, beta: float, seed: int) -> Trace:
    kb = parse_kb(citation_kb_text(ds.classes, manifold=manifold, beta=beta))
    sup = [ds.ids[i] for i in train_idx]
    ctx = to_grounding_context(ds, kb, supervised=sup, symmetric=cfg.symmetric_edges)
    graph = kb_loss(kb, g, ctx, CompileOptions(cfg.quantifier_mode, cfg.exists_mode))
    domain = next(iter(kb.domains))
    group = MlpPredicateGroup(learnable_symbols(ds), ds.features.shape[1], list(cfg.hidden), domain)
    group.init_params(seed)

    def metrics():
        return (accuracy(group, ds.features, ds.labels, train_idx),
                accuracy(group, ds.features, ds.labels, eval_idx))

    return train(graph, [group], ctx, cfg.opt_config(), metrics)


def run_experiment(cfg: ExperimentConfig, seed: int, generator: Optional[Generator] = None,
                   test_fraction: Optional[float] = None, manifold: Optional[bool] = None,
                   ds: Optional[RelationalDataset] = None) -> RunResult:
    """Split, pick the manifold weight on a validation fold if the grid has
    more than one value, then train on the full training split."""
    ds = build_dataset(cfg) if ds is None else ds
    g = parse_generator(cfg.generator) if generator is None else generator
    frac = cfg.test_fraction if test_fraction is None else test_fraction
    manifold = cfg.manifold if manifold is None else manifold
    train_idx, test_idx = transductive_split(ds.labels, frac, seed)
    beta = cfg.beta_grid[0]
    if manifold and len(cfg.beta_grid) > 1:
        beta = select_beta(ds, g, cfg, train_idx, seed)
    trace = _fit(ds, g, cfg, train_idx, test_idx, manifold, beta, seed)
    return RunResult(trace, beta, train_idx, test_idx)


def select_beta(ds: RelationalDataset, g: Generator, cfg: ExperimentConfig,
                train_idx: np.ndarray, seed: int) -> float:
    """Grid search on a held-out 10% of the training split (ties: first in grid)."""
    sub_tr, sub_val = transductive_split(ds.labels[train_idx], 0.10, seed + 7919)
    fit_idx, val_idx = train_idx[sub_tr], train_idx[sub_val]
    best, best_acc = cfg.beta_grid[0], -1.0
    for beta in cfg.beta_grid:
        acc = _fit(ds, g, cfg, fit_idx, val_idx, True, beta, seed).final.test_acc
        log.info("beta=%g validation accuracy %.4f", beta, acc)
        if acc > best_acc:
            best, best_acc = beta, acc
    return best


@dataclass(frozen=True)
class SweepRow:
    split: float
    lam: float
    mean_acc: float
    stddev: float


def sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[SweepRow]:
    """Mean and population standard deviation of final test accuracy over
    ``cfg.seeds``, one row per (split, lambda), sorted by (split, lambda)."""
    ds = build_dataset(cfg)
    cells = [(s, lam, seed) for s in cfg.splits for lam in cfg.lambdas for seed in cfg.seeds]

    def job(cell):
        split, lam, seed = cell
        res = run_experiment(cfg, seed, cfg.family_generator(lam), split, ds=ds)
        return cell, res.test_acc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(job, cells))
    else:
        results = [job(c) for c in cells]
    acc: dict[tuple[float, float], list[tuple[int, float]]] = {}
    for (split, lam, seed), a in results:
        acc.setdefault((split, lam), []).append((seed, a))
    rows = []
    for (split, lam) in sorted(acc):
        vals = np.array([a for _, a in sorted(acc[(split, lam)])])
        rows.append(SweepRow(split, lam, float(vals.mean()), float(vals.std())))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["split", "lambda", "mean_acc", "stddev"])
    for r in rows:
        w.writerow([repr(r.split), repr(r.lam), repr(r.mean_acc), repr(r.stddev)])
    return buf.getvalue()
