"""Dense float64 tensors with a small reverse-mode tape.

Tensors are plain C-contiguous ``numpy.ndarray`` objects of dtype float64.
Differentiable values are :class:`Var` handles that record onto a
:class:`GradientTape`; every tape belongs to exactly one training context, so
there is no module level state.

The supported primitives are ``matmul``, ``add``, ``scale``, ``tanh``,
``relu``, ``sigmoid``, ``identity``, ``concat``, ``sparse_matmul`` (neighbour
sums through a constant sparse matrix), ``segment_sum`` (sum pooling over
contiguous node sets), ``take_rows`` (row gather), ``linear_recurrence`` (a
fused ``z_{t+1} = A z_t + B u_t`` rollout) and ``mse``.
"""
from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from typing import Any

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GradientTape",
    "NumericError",
    "ParameterVector",
    "StructureError",
    "Var",
    "add",
    "as_tensor",
    "concat",
    "finite_difference_gradient",
    "forward_backward",
    "identity",
    "linear_recurrence",
    "matmul",
    "mse",
    "param_axpy",
    "relu",
    "scale",
    "segment_sum",
    "sigmoid",
    "sparse_matmul",
    "take_rows",
    "tanh",
]


class StructureError(ValueError):
    """Shapes or parameter layouts do not line up."""


class NumericError(ArithmeticError):
    """A non-finite value appeared during evaluation."""

    def __init__(self, message: str, node_index: int | None = None):
        super().__init__(message)
        self.node_index = node_index


def as_tensor(x: Any) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def _frozen(x: Any) -> np.ndarray:
    arr = np.array(x, dtype=np.float64, order="C", copy=True)
    arr.flags.writeable = False
    return arr


class ParameterVector:
    """Ordered, named parameter segments.

    Two vectors are compatible iff segment names, order and shapes agree.
    Arrays are stored read-only; all arithmetic returns new vectors.
    """

    __slots__ = ("_segments",)

    def __init__(self, segments: Iterable[tuple[str, Any]] | Mapping[str, Any]):
        items = segments.items() if isinstance(segments, Mapping) else segments
        segs: dict[str, np.ndarray] = {}
        for name, value in items:
            if name in segs:
                raise StructureError(f"duplicate segment name {name!r}")
            segs[name] = _frozen(value)
        self._segments = segs

    @property
    def names(self) -> list[str]:
        return list(self._segments)

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [a.shape for a in self._segments.values()]

    @property
    def total_len(self) -> int:
        return sum(a.size for a in self._segments.values())

    def __getitem__(self, name: str) -> np.ndarray:
        return self._segments[name]

    def __contains__(self, name: object) -> bool:
        return name in self._segments

    def __iter__(self):
        return iter(self._segments)

    def __len__(self) -> int:
        return len(self._segments)

    def items(self):
        return self._segments.items()

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(n, a.shape) for n, a in self._segments.items()]

    def compatible(self, other: ParameterVector) -> bool:
        return self.layout() == other.layout()

    def check_compatible(self, other: ParameterVector, what: str = "operation") -> None:
        if not self.compatible(other):
            raise StructureError(
                f"{what}: incompatible parameter layouts {self.layout()} vs {other.layout()}"
            )

    def flat(self) -> np.ndarray:
        if not self._segments:
            return np.zeros(0)
        return np.concatenate([a.ravel() for a in self._segments.values()])

    def from_flat(self, flat: np.ndarray) -> ParameterVector:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.total_len,):
            raise StructureError(f"flat vector of length {flat.shape} does not match {self.total_len}")
        out, pos = [], 0
        for name, a in self._segments.items():
            out.append((name, flat[pos:pos + a.size].reshape(a.shape)))
            pos += a.size
        return ParameterVector(out)

    def select(self, names: Iterable[str]) -> ParameterVector:
        wanted = set(names)
        missing = wanted - set(self._segments)
        if missing:
            raise StructureError(f"unknown segments {sorted(missing)}")
        return ParameterVector((n, a) for n, a in self._segments.items() if n in wanted)

    def replace(self, other: ParameterVector) -> ParameterVector:
        """Overwrite the segments present in ``other`` (same shapes required)."""
        for name, a in other.items():
            if name not in self._segments or self._segments[name].shape != a.shape:
                raise StructureError(f"cannot replace segment {name!r}")
        return ParameterVector((n, other[n] if n in other else a) for n, a in self._segments.items())

    def zeros_like(self) -> ParameterVector:
        return ParameterVector((n, np.zeros_like(a)) for n, a in self._segments.items())

    def bitwise_equal(self, other: ParameterVector) -> bool:
        if self.layout() != other.layout():
            return False
        # byte comparison: NaN payloads and signed zeros count
        return all(a.dtype == other[n].dtype and a.tobytes() == other[n].tobytes()
                   for n, a in self._segments.items())

    def max_abs_diff(self, other: ParameterVector) -> float:
        self.check_compatible(other, "max_abs_diff")
        if not self._segments:
            return 0.0
        return float(max(np.max(np.abs(a - other[n]), initial=0.0) for n, a in self._segments.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}{list(a.shape)}" for n, a in self._segments.items())
        return f"ParameterVector({inner})"


def param_axpy(a: float, x: ParameterVector, y: ParameterVector) -> ParameterVector:
    """Return ``a * x + y`` segment by segment.

    Entries where ``y`` is exactly zero return ``a * x`` unchanged, so
    ``axpy(1, x, zeros)`` reproduces ``x`` bitwise (including ``-0.0``).
    """
    x.check_compatible(y, "param_axpy")
    out = []
    for n, xa in x.items():
        ax, ya = a * xa, y[n]
        out.append((n, np.where(ya == 0.0, ax, ax + ya)))
    return ParameterVector(out)


# ---------------------------------------------------------------------------
# tape


class _Node:
    __slots__ = ("op", "parents", "backward")

    def __init__(self, op: str, parents: tuple[int, ...], backward):
        self.op = op
        self.parents = parents
        self.backward = backward


class GradientTape:
    """Records operations in creation order, which is a topological order."""

    def __init__(self, check_finite: bool = True):
        self.nodes: list[_Node] = []
        self.values: list[np.ndarray] = []
        self.check_finite = check_finite

    def _record(self, op: str, value: np.ndarray, parents: tuple[Var, ...], backward) -> Var:
        idx = len(self.nodes)
        # the sum is non-finite whenever an entry is; the full check only
        # runs to rule out overflow of the sum itself
        if self.check_finite and not np.isfinite(value.sum()) and not np.isfinite(value).all():
            raise NumericError(f"non-finite value produced by {op} at node {idx}", idx)
        self.nodes.append(_Node(op, tuple(p.index for p in parents), backward))
        self.values.append(value)
        return Var(self, idx, value)

    def leaf(self, value: Any, op: str = "leaf") -> Var:
        return self._record(op, as_tensor(value), (), None)

    def gradients(self, output: Var) -> list[np.ndarray | None]:
        if output.tape is not self:
            raise StructureError("output does not belong to this tape")
        if output.value.size != 1:
            raise StructureError(f"backward needs a scalar output, got shape {output.value.shape}")
        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[output.index] = np.ones_like(output.value)
        for i in range(output.index, -1, -1):
            g = grads[i]
            node = self.nodes[i]
            if g is None or node.backward is None:
                continue
            for parent, pg in zip(node.parents, node.backward(g)):
                if pg is None:
                    continue
                if grads[parent] is None:
                    grads[parent] = pg
                else:
                    grads[parent] = grads[parent] + pg
        return grads


class Var:
    """A differentiable value living on a tape."""

    __slots__ = ("tape", "index", "value")

    def __init__(self, tape: GradientTape, index: int, value: np.ndarray):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Var(node={self.index}, shape={self.value.shape})"


Operand = Var | np.ndarray | float


def _tape_of(*xs: Operand) -> GradientTape | None:
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _val(x: Operand) -> np.ndarray:
    return x.value if isinstance(x, Var) else as_tensor(x)


def _emit(op: str, value: np.ndarray, inputs: tuple[Operand, ...], backward) -> Var | np.ndarray:
    tape = _tape_of(*inputs)
    if tape is None:
        return value
    vars_ = tuple(x for x in inputs if isinstance(x, Var))
    if any(v.tape is not tape for v in vars_):
        raise StructureError(f"{op}: operands belong to different tapes")
    mask = [isinstance(x, Var) for x in inputs]

    def bw(g):
        parts = backward(g)
        return [p for p, m in zip(parts, mask) if m]

    return tape._record(op, value, vars_, bw)


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def matmul(a: Operand, b: Operand):
    av, bv = _val(a), _val(b)
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise StructureError(f"matmul: shapes {av.shape} and {bv.shape} do not align")
    da, db = isinstance(a, Var), isinstance(b, Var)
    # constant operands (node features, inputs) get no gradient product
    return _emit("matmul", av @ bv, (a, b),
                 lambda g: (g @ bv.T if da else None, av.T @ g if db else None))


def add(a: Operand, b: Operand):
    av, bv = _val(a), _val(b)
    try:
        out = av + bv
    except ValueError:
        raise StructureError(f"add: shapes {av.shape} and {bv.shape} do not broadcast") from None
    if out.shape != av.shape and out.shape != bv.shape:
        raise StructureError(f"add: broadcast of {av.shape} and {bv.shape} grows both operands")
    return _emit("add", out, (a, b), lambda g: (_reduce_to(g, av.shape), _reduce_to(g, bv.shape)))


def scale(a: Operand, c: float):
    c = float(c)
    return _emit("scale", c * _val(a), (a,), lambda g: (c * g,))


def tanh(a: Operand):
    y = np.tanh(_val(a))
    return _emit("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def relu(a: Operand):
    av = _val(a)
    on = av > 0.0
    return _emit("relu", np.where(on, av, 0.0), (a,), lambda g: (g * on,))


def sigmoid(a: Operand):
    av = _val(a)
    y = np.empty_like(av)
    pos = av >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-av[pos]))
    ez = np.exp(av[~pos])
    y[~pos] = ez / (1.0 + ez)
    return _emit("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def identity(a: Operand):
    return _emit("identity", _val(a).copy(), (a,), lambda g: (g,))


ACTIVATIONS: dict[str, Callable] = {
    "tanh": tanh,
    "relu": relu,
    "sigmoid": sigmoid,
    "identity": identity,
}


def concat(xs: list[Operand], axis: int = -1):
    vals = [_val(x) for x in xs]
    if not vals:
        raise StructureError("concat: no operands")
    ax = axis % vals[0].ndim
    for v in vals[1:]:
        if v.ndim != vals[0].ndim or any(
            v.shape[d] != vals[0].shape[d] for d in range(v.ndim) if d != ax
        ):
            raise StructureError(f"concat: shapes {[u.shape for u in vals]} disagree off axis {ax}")
    out = np.concatenate(vals, axis=ax)
    bounds = np.cumsum([v.shape[ax] for v in vals])[:-1]

    def bw(g):
        return np.split(g, bounds, axis=ax)

    return _emit("concat", out, tuple(xs), bw)


def segment_sum(x: Operand, sizes: np.ndarray):
    """Sum consecutive row blocks of ``x``; block ``i`` has ``sizes[i] >= 1`` rows."""
    xv = _val(x)
    sizes = np.asarray(sizes, dtype=np.intp)
    if xv.ndim != 2 or sizes.ndim != 1 or int(sizes.sum()) != xv.shape[0]:
        raise StructureError(f"segment_sum: sizes summing to {int(sizes.sum())} for {xv.shape[0]} rows")
    if sizes.size and sizes.min() < 1:
        raise StructureError("segment_sum: empty segment")
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)
    out = np.add.reduceat(xv, starts, axis=0) if sizes.size else np.zeros((0, xv.shape[1]))
    return _emit("segment_sum", out, (x,), lambda g: (np.repeat(g, sizes, axis=0),))


def take_rows(x: Operand, index: np.ndarray):
    """``x[index]`` for an integer row index (repeats allowed)."""
    xv = _val(x)
    index = np.asarray(index, dtype=np.intp)
    if xv.ndim != 2 or index.ndim != 1:
        raise StructureError(f"take_rows: need a matrix and a 1-d index, got {xv.shape}, {index.shape}")
    if index.size and (index.min() < 0 or index.max() >= xv.shape[0]):
        raise StructureError(f"take_rows: index out of range for {xv.shape[0]} rows")

    def bw(g):
        out = np.zeros_like(xv)
        np.add.at(out, index, g)
        return (out,)

    return _emit("take_rows", xv[index], (x,), bw)


def sparse_matmul(m: sp.spmatrix, x: Operand):
    """``m @ x`` with a constant sparse ``m`` (neighbour sums)."""
    xv = _val(x)
    if xv.ndim != 2 or m.shape[1] != xv.shape[0]:
        raise StructureError(f"sparse_matmul: shapes {m.shape} and {xv.shape} do not align")
    if not sp.issparse(m) or m.format != "csr":
        m = sp.csr_matrix(m)
    return _emit("sparse_matmul", np.asarray(m @ xv), (x,), lambda g: (np.asarray(m.T @ g),))


def linear_recurrence(a: Operand, b: Operand, z0: Operand, u: np.ndarray):
    """Stacked states of ``z_{t+1} = a z_t + b u_t`` for ``t = 0 .. p-2``.

    ``z0`` is ``(l, batch)`` and ``u`` a constant ``(p, m, batch)`` array. The
    result is ``(l, p * batch)`` with time-major column blocks
    ``[z_0 | z_1 | ... | z_{p-1}]``. One tape node; the backward pass runs the
    adjoint recursion.
    """
    av, bv, zv = _val(a), _val(b), _val(z0)
    u = as_tensor(u)
    if av.ndim != 2 or av.shape[0] != av.shape[1] or zv.ndim != 2 or zv.shape[0] != av.shape[0]:
        raise StructureError(f"linear_recurrence: A {av.shape} and z0 {zv.shape} do not align")
    if u.ndim != 3 or bv.shape != (av.shape[0], u.shape[1]) or u.shape[2] != zv.shape[1]:
        raise StructureError(f"linear_recurrence: B {bv.shape} and u {u.shape} do not align")
    l, nb = zv.shape
    p = u.shape[0]
    zs = np.empty((p, l, nb))
    zs[0] = zv
    for t in range(p - 1):
        zs[t + 1] = av @ zs[t] + bv @ u[t]
    out = np.ascontiguousarray(zs.transpose(1, 0, 2).reshape(l, p * nb))

    def bw(g):
        gs = g.reshape(l, p, nb).transpose(1, 0, 2)
        lam = np.empty_like(gs)
        lam[p - 1] = gs[p - 1]
        for t in range(p - 2, -1, -1):
            lam[t] = gs[t] + av.T @ lam[t + 1]
        if p > 1:
            nxt = lam[1:].transpose(1, 0, 2).reshape(l, -1)
            ga = nxt @ zs[:-1].transpose(1, 0, 2).reshape(l, -1).T
            gb = nxt @ u[:-1].transpose(1, 0, 2).reshape(u.shape[1], -1).T
        else:
            ga, gb = np.zeros_like(av), np.zeros_like(bv)
        return ga, gb, lam[0], None

    return _emit("linear_recurrence", out, (a, b, z0, u), bw)


def mse(pred: Operand, target: Operand):
    pv, tv = _val(pred), _val(target)
    if pv.shape != tv.shape:
        raise StructureError(f"mse: prediction {pv.shape} vs target {tv.shape}")
    if pv.size == 0:
        raise StructureError("mse: empty operands")
    r = pv - tv
    n = r.size
    out = np.array(np.dot(r.ravel(), r.ravel()) / n)
    return _emit("mse", out, (pred, target), lambda g: (g * (2.0 / n) * r, g * (-2.0 / n) * r))


# ---------------------------------------------------------------------------
# driver

ModelFn = Callable[..., Var]


def _bind(tape: GradientTape, params: ParameterVector) -> dict[str, Var]:
    return {name: tape.leaf(a, op=f"param:{name}") for name, a in params.items()}


def evaluate(model_fn: ModelFn, params: ParameterVector, *inputs) -> float:
    """Forward pass only."""
    tape = GradientTape()
    out = model_fn(_bind(tape, params), *inputs)
    return float(_val(out).reshape(()))


def forward_backward(model_fn: ModelFn, params: ParameterVector, *inputs) -> tuple[float, ParameterVector]:
    """Evaluate ``model_fn(bound_params, *inputs)`` and its parameter gradient.

    ``model_fn`` receives a dict of :class:`Var` (one per segment) and must
    return a scalar built from the supported primitives.
    """
    tape = GradientTape()
    bound = _bind(tape, params)
    out = model_fn(bound, *inputs)
    if not isinstance(out, Var):
        loss = float(as_tensor(out).reshape(()))
        return loss, params.zeros_like()
    grads = tape.gradients(out)
    segs = []
    for name, v in bound.items():
        g = grads[v.index]
        segs.append((name, np.zeros_like(v.value) if g is None else g))
    return float(out.value.reshape(())), ParameterVector(segs)


def finite_difference_gradient(model_fn: ModelFn, params: ParameterVector, *inputs,
                               step: float = 1e-6) -> ParameterVector:
    """Central differences, one scalar parameter at a time."""
    if not step > 0:
        raise ValueError("step must be positive")
    flat = params.flat()
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        w = flat.copy()
        w[i] = flat[i] + step
        fp = evaluate(model_fn, params.from_flat(w), *inputs)
        w[i] = flat[i] - step
        fm = evaluate(model_fn, params.from_flat(w), *inputs)
        grad[i] = (fp - fm) / (2.0 * step)
    return params.from_flat(grad)
