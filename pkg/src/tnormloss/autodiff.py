"""Reverse-mode differentiation of loss graphs, plus dense-layer primitives.

Subgradient convention: ``clampmin0`` has derivative 0 at 0; ``min``/``max``
and ``abs`` send the gradient to the first argument on ties (``abs'(0) = 1``);
grounding reductions pick the first maximiser/minimiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .compiler import LossGraph
from .generators import ext_sub


class NumericFault(FloatingPointError):
    def __init__(self, node: int, op: str, what: str):
        self.node = node
        self.op = op
        super().__init__(f"{what} at node {node} ({op})")


@dataclass
class Tape:
    graph: LossGraph
    tables: Mapping[str, np.ndarray]
    values: list[np.ndarray]
    adjoints: list = field(default_factory=list)

    @property
    def output(self) -> float:
        return self.value(self.graph.output)

    def value(self, nid: int) -> float:
        return float(np.asarray(self.values[nid]).reshape(-1)[0])


def _width(node) -> int:
    seg = node.attrs["segments"]
    n_out = node.attrs["n_out"]
    if n_out == 0:
        return 0
    return len(seg) // n_out


def _reduce(node, x: np.ndarray) -> np.ndarray:
    n_out = node.attrs["n_out"]
    w = _width(node)
    if w == 0:
        return np.full(n_out, node.attrs["identity"], dtype=np.float64)
    x = np.broadcast_to(x, (n_out * w,)).reshape(n_out, w)
    if node.op == "sum_groundings":
        return x.sum(axis=1)
    if node.op == "max_groundings":
        return x.max(axis=1)
    return x.min(axis=1)


def _lookup(tables, node) -> np.ndarray:
    sym = node.attrs["symbol"]
    try:
        table = np.asarray(tables[sym], dtype=np.float64)
    except KeyError:
        raise KeyError(f"no table bound to learnable predicate {sym!r}") from None
    idx = node.attrs["index"]
    if not idx:
        return np.full(node.attrs["rows"], float(table))
    return table[idx]


def forward(graph: LossGraph, tables: Mapping[str, np.ndarray], allow_inf: bool = False) -> Tape:
    """Evaluate every node.  NaN anywhere, or a non-finite output, raises."""
    g = graph.generator
    vals: list[np.ndarray] = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in graph.nodes:
            a = [vals[i] for i in n.inputs]
            op = n.op
            if op == "const":
                v = np.float64(n.attrs["value"])
            elif op == "pred":
                v = n.attrs["values"] if n.attrs["given"] else _lookup(tables, n)
            elif op == "add":
                v = a[0] + a[1]
            elif op == "sub":
                v = ext_sub(a[0], a[1])
            elif op == "mul":
                v = a[0] * a[1]
            elif op == "div":
                v = a[0] / a[1]
            elif op == "neg":
                v = -a[0]
            elif op == "min":
                v = np.minimum(a[0], a[1])
            elif op == "max":
                v = np.maximum(a[0], a[1])
            elif op == "abs":
                v = np.abs(a[0])
            elif op == "clampmin0":
                v = np.maximum(a[0], 0.0)
            elif op == "geneval":
                lo = n.attrs.get("clamp") or 0.0
                v = g(np.clip(a[0], lo, 1.0))
            elif op == "genpinv":
                v = g.pseudo_inverse(a[0])
            else:
                v = _reduce(n, a[0])
            if np.any(np.isnan(v)):
                raise NumericFault(n.id, op, "NaN")
            vals.append(v)
    tape = Tape(graph, tables, vals)
    if not allow_inf and not np.all(np.isfinite(vals[graph.output])):
        raise NumericFault(graph.output, graph.nodes[graph.output].op, "non-finite output")
    return tape


def _scale(adj, d):
    # zero adjoints stay zero even against infinite local derivatives
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(adj == 0, 0.0, adj * d)


def backward(tape: Tape) -> dict[str, np.ndarray]:
    """Gradient of the output with respect to every learnable table."""
    graph, vals = tape.graph, tape.values
    g = graph.generator
    nodes = graph.nodes
    adj: list = [None] * len(nodes)
    adj[graph.output] = np.ones_like(np.asarray(vals[graph.output], dtype=np.float64))
    grads = {
        sym: np.zeros(np.shape(tape.tables[sym]), dtype=np.float64) for sym in graph.learnable
        if sym in tape.tables
    }

    def push(i, contrib):
        if nodes[i].op == "const" or (nodes[i].op == "pred" and nodes[i].attrs["given"]):
            return
        contrib = np.broadcast_to(contrib, np.shape(vals[i])) if np.ndim(vals[i]) else contrib
        adj[i] = contrib if adj[i] is None else adj[i] + contrib

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in reversed(nodes):
            a = adj[n.id]
            if a is None:
                continue
            ins = n.inputs
            x = [vals[i] for i in ins]
            op = n.op
            if op == "pred":
                if n.attrs["given"]:
                    continue
                gr = grads[n.attrs["symbol"]]
                idx = n.attrs["index"]
                if not idx:
                    gr += a.sum()
                else:
                    flat = np.ravel_multi_index(idx, gr.shape)
                    gr.reshape(-1)[:] += np.bincount(flat, weights=a, minlength=gr.size)
            elif op == "add":
                push(ins[0], a)
                push(ins[1], a)
            elif op == "sub":
                push(ins[0], a)
                push(ins[1], -a)
            elif op == "mul":
                push(ins[0], _scale(a, x[1]))
                push(ins[1], _scale(a, x[0]))
            elif op == "div":
                push(ins[0], _scale(a, 1.0 / x[1]))
                push(ins[1], _scale(a, -x[0] / x[1] ** 2))
            elif op == "neg":
                push(ins[0], -a)
            elif op in ("min", "max"):
                first = x[0] <= x[1] if op == "min" else x[0] >= x[1]
                push(ins[0], np.where(first, a, 0.0))
                push(ins[1], np.where(first, 0.0, a))
            elif op == "abs":
                push(ins[0], np.where(x[0] >= 0, a, -a))
            elif op == "clampmin0":
                push(ins[0], np.where(x[0] > 0, a, 0.0))
            elif op == "geneval":
                lo = n.attrs.get("clamp") or 0.0
                inside = (x[0] >= lo) & (x[0] <= 1.0)
                d = g.derivative(np.clip(x[0], lo, 1.0))
                push(ins[0], np.where(inside, _scale(a, d), 0.0))
            elif op == "genpinv":
                push(ins[0], _scale(a, g.pseudo_inverse_derivative(x[0])))
            elif op.endswith("_groundings"):
                n_out, w = n.attrs["n_out"], _width(n)
                if w == 0:
                    continue
                if op == "sum_groundings":
                    push(ins[0], np.repeat(a, w))
                else:
                    xr = np.broadcast_to(x[0], (n_out * w,)).reshape(n_out, w)
                    k = xr.argmax(axis=1) if op == "max_groundings" else xr.argmin(axis=1)
                    onehot = np.zeros((n_out, w))
                    onehot[np.arange(n_out), k] = a
                    push(ins[0], onehot.reshape(-1))
    tape.adjoints = adj
    return grads


def value_and_grad(graph: LossGraph, tables: Mapping[str, np.ndarray]):
    tape = forward(graph, tables)
    return tape.output, backward(tape)


def kink_margin(tape: Tape) -> float:
    """Smallest distance of any non-smooth node input from its kink."""
    graph, vals = tape.graph, tape.values
    worst = np.inf
    for n in graph.nodes:
        x = [vals[i] for i in n.inputs]
        if n.op in ("clampmin0", "abs"):
            d = np.abs(x[0])
        elif n.op in ("min", "max"):
            d = np.abs(ext_sub(x[0], x[1]))
        elif n.op == "geneval" and n.attrs.get("clamp"):
            d = np.abs(x[0] - n.attrs["clamp"])
        elif n.op in ("max_groundings", "min_groundings"):
            w = _width(n)
            if w < 2:
                continue
            xr = np.sort(np.broadcast_to(x[0], (n.attrs["n_out"] * w,)).reshape(-1, w), axis=1)
            d = xr[:, -1] - xr[:, -2] if n.op == "max_groundings" else xr[:, 1] - xr[:, 0]
        else:
            continue
        d = np.asarray(d)[np.isfinite(np.asarray(d))]
        if d.size:
            worst = min(worst, float(d.min()))
    return worst


def grad_check(fn: Callable[[], tuple[float, Sequence[np.ndarray]]],
               params: Sequence[np.ndarray], h: float = 1e-5) -> float:
    """Compare analytic gradients with central differences.

    ``fn()`` evaluates the loss at the current contents of ``params`` and
    returns ``(loss, grads)`` with ``grads`` aligned to ``params``.  Entries
    are perturbed in place and restored.  The returned error is
    ``max |analytic - numeric|`` normalised by the largest numeric gradient.
    """
    _, grads = fn()
    analytic = [np.array(gr, dtype=np.float64, copy=True) for gr in grads]
    worst, scale = 0.0, 0.0
    for p, ga in zip(params, analytic):
        flat = p.reshape(-1)
        gflat = ga.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            fp = fn()[0]
            flat[k] = old - h
            fm = fn()[0]
            flat[k] = old
            num = (fp - fm) / (2 * h)
            worst = max(worst, abs(num - gflat[k]))
            scale = max(scale, abs(num))
    return float(worst / max(scale, 1e-12))


# ---------------------------------------------------------------------------
# dense layers


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def linear_backward(dy: np.ndarray, x: np.ndarray, w: np.ndarray):
    """Returns ``(dx, dw, db)``."""
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_backward(dy: np.ndarray, z: np.ndarray) -> np.ndarray:
    return dy * (z > 0)


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_backward(dy: np.ndarray, s: np.ndarray) -> np.ndarray:
    return s * (dy - (dy * s).sum(axis=1, keepdims=True))


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid_backward(dy: np.ndarray, s: np.ndarray) -> np.ndarray:
    return dy * s * (1.0 - s)
