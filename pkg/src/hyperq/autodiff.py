"""Minimal reverse-mode automatic differentiation over numpy float64.

Just enough machinery for the query encoder and its loss: tensors wrapped in
:class:`Var` nodes, each op recording accumulation closures that add its
upstream gradient into the parents' gradient buffers. ``backward`` walks the
graph once in reverse topological order.

Design notes:

* float64 end to end; no broadcasting surprises (ops demand exact shapes).
* gradient accumulation writes in place into preallocated buffers, so
  embedding-table row gathers cost O(d) on the backward pass, not O(|E|d).
* reductions are left folds over the argument order; callers fix that order
  (sorted ids), which is what makes encoder outputs bit-reproducible.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

Accumulator = Callable[[np.ndarray, np.ndarray], None]


class Var:
    """A value in the computation graph with a gradient slot."""

    __slots__ = ("value", "grad", "edges")

    def __init__(self, value, edges: tuple = ()):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.edges: tuple[tuple["Var", Accumulator], ...] = edges

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Var(shape={self.value.shape}, leaf={not self.edges})"


def constant(value) -> Var:
    return Var(value)


def _topo(root: Var) -> list[Var]:
    """Reverse topological order (root first), iterative DFS."""
    order: list[Var] = []
    state: dict[int, int] = {}  # 0 = entered, 1 = done
    stack: list[Var] = [root]
    while stack:
        v = stack[-1]
        vid = id(v)
        if state.get(vid) == 0:
            state[vid] = 1
            order.append(v)
            stack.pop()
            continue
        if vid in state:
            stack.pop()
            continue
        state[vid] = 0
        for parent, _ in v.edges:
            if id(parent) not in state:
                stack.append(parent)
    order.reverse()
    return order


def backward(root: Var) -> None:
    """Populate ``grad`` on every ancestor of a scalar ``root``."""
    if root.value.shape != ():
        raise ValueError(f"backward needs a scalar root, got shape {root.value.shape}")
    root.grad = np.array(1.0)
    for v in _topo(root):
        g = v.grad
        if g is None:
            continue
        for parent, accumulate in v.edges:
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.value)
            accumulate(parent.grad, g)


def zero_grads(variables: Iterable[Var]) -> None:
    for v in variables:
        v.grad = None


# -- elementwise and linear ops ----------------------------------------------


def _acc_identity(buf: np.ndarray, g: np.ndarray) -> None:
    buf += g


def _check_same_shape(a: Var, b: Var, op: str) -> None:
    if a.value.shape != b.value.shape:
        raise ValueError(f"{op}: shape mismatch {a.value.shape} vs {b.value.shape}")


def add(a: Var, b: Var) -> Var:
    _check_same_shape(a, b, "add")
    return Var(a.value + b.value, ((a, _acc_identity), (b, _acc_identity)))


def add_n(vs: Sequence[Var]) -> Var:
    """Left-fold sum of same-shaped vars; order matters bit-for-bit."""
    if not vs:
        raise ValueError("add_n needs at least one input")
    total = vs[0].value.copy()
    for v in vs[1:]:
        _check_same_shape(vs[0], v, "add_n")
        total += v.value
    return Var(total, tuple((v, _acc_identity) for v in vs))


def mul(a: Var, b: Var) -> Var:
    """Elementwise (hadamard) product."""
    _check_same_shape(a, b, "mul")
    av, bv = a.value, b.value

    def acc_a(buf, g):
        buf += g * bv

    def acc_b(buf, g):
        buf += g * av

    return Var(av * bv, ((a, acc_a), (b, acc_b)))


def scale(x: Var, c: float) -> Var:
    """Multiply by a plain (non-learnable) scalar."""

    def acc(buf, g):
        buf += c * g

    return Var(c * x.value, ((x, acc),))


def smul(s: Var, x: Var) -> Var:
    """Learnable-scalar times tensor."""
    if s.value.shape != ():
        raise ValueError(f"smul: scalar expected, got shape {s.value.shape}")
    sv, xv = s.value, x.value

    def acc_s(buf, g):
        buf += np.sum(g * xv)

    def acc_x(buf, g):
        buf += g * sv

    return Var(sv * xv, ((s, acc_s), (x, acc_x)))


def dot(a: Var, b: Var) -> Var:
    _check_same_shape(a, b, "dot")
    av, bv = a.value, b.value

    def acc_a(buf, g):
        buf += g * bv

    def acc_b(buf, g):
        buf += g * av

    return Var(np.dot(av, bv), ((a, acc_a), (b, acc_b)))


def matvec(w: Var, x: Var) -> Var:
    if w.value.ndim != 2 or x.value.ndim != 1 or w.value.shape[1] != x.value.shape[0]:
        raise ValueError(f"matvec: bad shapes {w.value.shape} @ {x.value.shape}")
    wv, xv = w.value, x.value

    def acc_w(buf, g):
        buf += np.outer(g, xv)

    def acc_x(buf, g):
        buf += wv.T @ g

    return Var(wv @ xv, ((w, acc_w), (x, acc_x)))


def matmat_rows(m: Var, w: Var) -> Var:
    """Transform every row of ``m`` by ``w``: result[i] = w @ m[i]."""
    if m.value.ndim != 2 or w.value.ndim != 2 or m.value.shape[1] != w.value.shape[1]:
        raise ValueError(f"matmat_rows: bad shapes {m.value.shape}, {w.value.shape}")
    mv, wv = m.value, w.value

    def acc_m(buf, g):
        buf += g @ wv

    def acc_w(buf, g):
        buf += g.T @ mv

    return Var(mv @ wv.T, ((m, acc_m), (w, acc_w)))


# -- indexing -------------------------------------------------------------------


def row(m: Var, i: int) -> Var:
    if m.value.ndim != 2:
        raise ValueError(f"row: need a matrix, got shape {m.value.shape}")

    def acc(buf, g):
        buf[i] += g

    return Var(m.value[i].copy(), ((m, acc),))


def index(v: Var, i: int) -> Var:
    if v.value.ndim != 1:
        raise ValueError(f"index: need a vector, got shape {v.value.shape}")

    def acc(buf, g):
        buf[i] += g

    return Var(v.value[i], ((v, acc),))


def segment(v: Var, start: int, stop: int) -> Var:
    if v.value.ndim != 1:
        raise ValueError(f"segment: need a vector, got shape {v.value.shape}")

    def acc(buf, g):
        buf[start:stop] += g

    return Var(v.value[start:stop].copy(), ((v, acc),))


def stack1d(vs: Sequence[Var]) -> Var:
    """Stack scalar vars into a vector."""
    for v in vs:
        if v.value.shape != ():
            raise ValueError("stack1d: scalar inputs required")

    def make_acc(i):
        def acc(buf, g):
            buf += g[i]

        return acc

    value = np.array([v.value for v in vs], dtype=np.float64)
    return Var(value, tuple((v, make_acc(i)) for i, v in enumerate(vs)))


# -- nonlinearities ---------------------------------------------------------------


def leaky_relu(x: Var, slope: float) -> Var:
    """max(x, slope*x); ``slope=0.0`` is plain relu."""
    mask = np.where(x.value > 0, 1.0, slope)

    def acc(buf, g):
        buf += g * mask

    return Var(x.value * mask, ((x, acc),))


def prelu(x: Var, s: Var) -> Var:
    """Leaky relu with a learnable scalar slope."""
    if s.value.shape != ():
        raise ValueError("prelu: slope must be scalar")
    pos = x.value > 0
    sv = s.value

    def acc_x(buf, g):
        buf += g * np.where(pos, 1.0, sv)

    def acc_s(buf, g):
        buf += np.sum(g * np.where(pos, 0.0, x.value))

    return Var(np.where(pos, x.value, sv * x.value), ((x, acc_x), (s, acc_s)))


def softmax(x: Var) -> Var:
    if x.value.ndim != 1:
        raise ValueError("softmax: need a vector")
    shifted = x.value - x.value.max()
    e = np.exp(shifted)
    y = e / e.sum()

    def acc(buf, g):
        buf += y * (g - np.dot(g, y))

    return Var(y, ((x, acc),))


def dropout(x: Var, mask: np.ndarray) -> Var:
    """Apply a precomputed inverted-dropout mask (entries 0 or 1/keep)."""
    if mask.shape != x.value.shape:
        raise ValueError("dropout: mask shape mismatch")

    def acc(buf, g):
        buf += g * mask

    return Var(x.value * mask, ((x, acc),))


def dropout_mask(rng: np.random.Generator, shape: tuple[int, ...],
                 rate: float) -> np.ndarray:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep


# -- fused scoring and loss --------------------------------------------------------

_NORM_FLOOR = 1e-30


def score_table(x: Var, table: Var, n_rows: int, kind: str) -> Var:
    """Similarity of ``x`` against the first ``n_rows`` rows of ``table``.

    kind: 'dot', 'cosine', or 'negnorm' (negative euclidean distance).
    """
    e = table.value[:n_rows]
    xv = x.value
    if kind == "dot":
        def acc_x(buf, g):
            buf += e.T @ g

        def acc_t(buf, g):
            buf[:n_rows] += np.outer(g, xv)

        return Var(e @ xv, ((x, acc_x), (table, acc_t)))

    if kind == "cosine":
        xn = max(float(np.linalg.norm(xv)), _NORM_FLOOR)
        en = np.maximum(np.linalg.norm(e, axis=1), _NORM_FLOOR)
        s = (e @ xv) / (en * xn)

        def acc_x(buf, g):
            buf += (e.T @ (g / en)) / xn - xv * (np.dot(g, s) / (xn * xn))

        def acc_t(buf, g):
            buf[:n_rows] += np.outer(g / en, xv) / xn - ((g * s / (en * en))[:, None] * e)

        return Var(s, ((x, acc_x), (table, acc_t)))

    if kind == "negnorm":
        diff = xv[None, :] - e
        nrm = np.maximum(np.linalg.norm(diff, axis=1), _NORM_FLOOR)

        def acc_x(buf, g):
            buf -= diff.T @ (g / nrm)

        def acc_t(buf, g):
            buf[:n_rows] += diff * (g / nrm)[:, None]

        return Var(-nrm, ((x, acc_x), (table, acc_t)))

    raise ValueError(f"unknown similarity {kind!r}")


def _sigmoid(s: np.ndarray) -> np.ndarray:
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out


def bce_with_logits(scores: Var, targets: np.ndarray) -> Var:
    """Mean binary cross-entropy of logits against 0/1 targets (stable)."""
    s = scores.value
    if s.shape != targets.shape:
        raise ValueError("bce_with_logits: target shape mismatch")
    n = s.size
    loss = np.maximum(s, 0.0) - s * targets + np.log1p(np.exp(-np.abs(s)))

    def acc(buf, g):
        buf += g * (_sigmoid(s) - targets) / n

    return Var(loss.sum() / n, ((scores, acc),))
