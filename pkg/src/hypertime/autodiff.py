"""Define-by-run reverse-mode differentiation over numpy arrays, plus Adam.

A :class:`Tape` records every operation applied to its :class:`Var` handles
in insertion order; :meth:`Tape.backward` walks that record in reverse and
accumulates adjoints. A fresh tape is built for every training step.

Example
-------
>>> tape = Tape()
>>> x = tape.param(np.array(3.0), "x")
>>> grads = tape.backward(x * x)
>>> float(grads["x"])
6.0
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for an op."""

    def __init__(self, op: str, shapes, detail: str = ""):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        msg = f"{op}: incompatible shapes {', '.join(str(s) for s in self.shapes)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NumericalError(ArithmeticError):
    """A NaN or Inf appeared in a forward value, gradient or loss."""


# name -> (forward, backward)
# forward(*values, **attrs) -> (out, ctx)
# backward(g, ctx) -> tuple of input adjoints (None for non-differentiable inputs)
_OPS: dict[str, tuple[Callable, Callable]] = {}


def register_op(name: str, forward: Callable, backward: Callable) -> None:
    _OPS[name] = (forward, backward)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_check(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, (a.shape, b.shape)) from None


def _add_f(a, b):
    _broadcast_check("add", a, b)
    return a + b, (a.shape, b.shape)


def _add_b(g, ctx):
    sa, sb = ctx
    return _unbroadcast(g, sa), _unbroadcast(g, sb)


def _sub_f(a, b):
    _broadcast_check("sub", a, b)
    return a - b, (a.shape, b.shape)


def _sub_b(g, ctx):
    sa, sb = ctx
    return _unbroadcast(g, sa), -_unbroadcast(g, sb)


def _mul_f(a, b):
    _broadcast_check("mul", a, b)
    return a * b, (a, b)


def _mul_b(g, ctx):
    a, b = ctx
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


def _scale_f(a, c):
    return a * c, c


def _scale_b(g, c):
    return (g * c,)


def _matmul_f(a, b):
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul", (a.shape, b.shape), "operands must be at least 2-D")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", (a.shape, b.shape))
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError("matmul", (a.shape, b.shape), "batch dims") from None
    return np.matmul(a, b), (a, b)


def _matmul_b(g, ctx):
    a, b = ctx
    ga = np.matmul(g, np.swapaxes(b, -1, -2))
    gb = np.matmul(np.swapaxes(a, -1, -2), g)
    return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)


def _transpose_f(a):
    if a.ndim < 2:
        raise ShapeError("transpose", (a.shape,))
    return np.swapaxes(a, -1, -2), None


def _transpose_b(g, ctx):
    return (np.swapaxes(g, -1, -2),)


def _sin_f(a):
    return np.sin(a), a


def _sin_b(g, a):
    return (g * np.cos(a),)


def _cos_f(a):
    return np.cos(a), a


def _cos_b(g, a):
    return (-g * np.sin(a),)


def _tanh_f(a):
    y = np.tanh(a)
    return y, y


def _tanh_b(g, y):
    return (g * (1.0 - y * y),)


def _sigmoid_f(a):
    y = 0.5 * (1.0 + np.tanh(0.5 * a))
    return y, y


def _sigmoid_b(g, y):
    return (g * y * (1.0 - y),)


def _relu_f(a):
    pos = a > 0
    return np.where(pos, a, 0.0), pos


def _relu_b(g, pos):
    return (g * pos,)


def _step_f(a):
    return (a > 0).astype(np.float64), None


def _step_b(g, ctx):
    return (None,)


def _square_f(a):
    return a * a, a


def _square_b(g, a):
    return (2.0 * g * a,)


def _abs_f(a):
    return np.abs(a), np.sign(a)


def _abs_b(g, sign):
    return (g * sign,)


def _sum_f(a, axis=None, keepdims=False):
    return a.sum(axis=axis, keepdims=keepdims), (a.shape, axis, keepdims)


def _sum_b(g, ctx):
    shape, axis, keepdims = ctx
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, shape).copy(),)


def _mean_f(a, axis=None, keepdims=False):
    if a.size == 0:
        raise ShapeError("mean", (a.shape,), "empty operand")
    count = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return a.mean(axis=axis, keepdims=keepdims), (a.shape, axis, keepdims, count)


def _mean_b(g, ctx):
    shape, axis, keepdims, count = ctx
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g / count, shape).copy(),)


def _slice_f(a, start, stop):
    if not 0 <= start < stop <= a.shape[-1]:
        raise ShapeError("slice", (a.shape,), f"[{start}:{stop}] out of range")
    return a[..., start:stop], (a.shape, start, stop)


def _slice_b(g, ctx):
    shape, start, stop = ctx
    full = np.zeros(shape)
    full[..., start:stop] = g
    return (full,)


def _reshape_f(a, shape):
    try:
        return a.reshape(shape), a.shape
    except ValueError:
        raise ShapeError("reshape", (a.shape, shape)) from None


def _reshape_b(g, shape):
    return (g.reshape(shape),)


def _concat_f(*arrays, axis=0):
    try:
        out = np.concatenate(arrays, axis=axis)
    except ValueError:
        raise ShapeError("concat", [x.shape for x in arrays]) from None
    return out, (axis, np.cumsum([x.shape[axis] for x in arrays])[:-1])


def _concat_b(g, ctx):
    axis, splits = ctx
    return tuple(np.split(g, splits, axis=axis))


def _cabs_f(a):
    """Modulus of complex numbers stored as (..., 2) [re, im] pairs."""
    if a.shape[-1] != 2:
        raise ShapeError("cabs", (a.shape,), "last axis must hold (re, im)")
    mag = np.sqrt(a[..., 0] ** 2 + a[..., 1] ** 2)
    return mag, (a, mag)


def _cabs_b(g, ctx):
    a, mag = ctx
    # subgradient 0 at the origin
    safe = np.where(mag > 0, mag, 1.0)
    unit = np.where((mag > 0)[..., None], a / safe[..., None], 0.0)
    return (g[..., None] * unit,)


for _name, _f, _b in [
    ("add", _add_f, _add_b),
    ("sub", _sub_f, _sub_b),
    ("mul", _mul_f, _mul_b),
    ("scale", _scale_f, _scale_b),
    ("matmul", _matmul_f, _matmul_b),
    ("transpose", _transpose_f, _transpose_b),
    ("sin", _sin_f, _sin_b),
    ("cos", _cos_f, _cos_b),
    ("tanh", _tanh_f, _tanh_b),
    ("sigmoid", _sigmoid_f, _sigmoid_b),
    ("relu", _relu_f, _relu_b),
    ("step", _step_f, _step_b),
    ("square", _square_f, _square_b),
    ("abs", _abs_f, _abs_b),
    ("sum", _sum_f, _sum_b),
    ("mean", _mean_f, _mean_b),
    ("slice", _slice_f, _slice_b),
    ("reshape", _reshape_f, _reshape_b),
    ("concat", _concat_f, _concat_b),
    ("cabs", _cabs_f, _cabs_b),
]:
    register_op(_name, _f, _b)


class Var:
    """Handle to one node on a tape."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape: "Tape", idx: int):
        self.tape = tape
        self.idx = idx

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.idx]

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self):
        return f"Var(idx={self.idx}, op={self.tape.ops[self.idx]}, shape={self.shape})"

    def _lift(self, other) -> "Var":
        return other if isinstance(other, Var) else self.tape.constant(other)

    def __add__(self, other):
        return self.tape.apply("add", self, self._lift(other))

    def __radd__(self, other):
        return self.tape.apply("add", self._lift(other), self)

    def __sub__(self, other):
        return self.tape.apply("sub", self, self._lift(other))

    def __rsub__(self, other):
        return self.tape.apply("sub", self._lift(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.tape.apply("scale", self, c=float(other))
        return self.tape.apply("mul", self, self._lift(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            raise TypeError("division is only supported by a Python scalar")
        return self.tape.apply("scale", self, c=1.0 / float(other))

    def __neg__(self):
        return self.tape.apply("scale", self, c=-1.0)

    def __matmul__(self, other):
        return self.tape.apply("matmul", self, self._lift(other))

    @property
    def T(self):
        return self.tape.apply("transpose", self)

    def sum(self, axis=None, keepdims=False):
        return self.tape.apply("sum", self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return self.tape.apply("mean", self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return self.tape.apply("reshape", self, shape=shape)


class Tape:
    """Append-only record of operations.

    ``check_finite`` makes every op verify that its output has no NaN/Inf,
    raising :class:`NumericalError` naming the op otherwise.
    """

    def __init__(self, check_finite: bool = True):
        self.values: list[np.ndarray] = []
        self.ops: list[str] = []
        self.inputs: list[tuple[int, ...]] = []
        self.ctxs: list = []
        self.params: dict[str, int] = {}
        self.check_finite = check_finite

    def __len__(self):
        return len(self.values)

    def _push(self, value, op, inputs=(), ctx=None) -> Var:
        self.values.append(value)
        self.ops.append(op)
        self.inputs.append(inputs)
        self.ctxs.append(ctx)
        return Var(self, len(self.values) - 1)

    def constant(self, value) -> Var:
        return self._push(np.asarray(value, dtype=np.float64), "const")

    def param(self, value, name: str) -> Var:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already on tape")
        var = self._push(np.asarray(value, dtype=np.float64), "param")
        self.params[name] = var.idx
        return var

    def apply(self, op: str, *inputs: Var, **attrs) -> Var:
        try:
            fwd, _ = _OPS[op]
        except KeyError:
            raise ValueError(f"unknown op {op!r}") from None
        for v in inputs:
            if v.tape is not self:
                raise ValueError(f"{op}: operand belongs to a different tape")
        # overflow surfaces as NumericalError below rather than a warning
        with np.errstate(over="ignore", invalid="ignore"):
            out, ctx = fwd(*(self.values[v.idx] for v in inputs), **attrs)
        out = np.asarray(out, dtype=np.float64)
        if self.check_finite and not np.isfinite(out).all():
            raise NumericalError(f"{op} produced non-finite values (shape {out.shape})")
        return self._push(out, op, tuple(v.idx for v in inputs), ctx)

    def backward(self, loss: Var, wrt: list[Var] | None = None):
        """Adjoints of ``loss`` for every parameter (and optionally ``wrt``).

        Returns ``{name: grad}``; parameters the loss does not reach get zeros.
        With ``wrt`` given, returns ``(param_grads, [grad for each var])``.
        """
        if loss.tape is not self:
            raise ValueError("loss belongs to a different tape")
        if loss.value.size != 1:
            raise ShapeError("backward", (loss.shape,), "loss must be scalar")
        adj: list = [None] * (loss.idx + 1)
        adj[loss.idx] = np.ones_like(loss.value)
        for i in range(loss.idx, -1, -1):
            g = adj[i]
            if g is None or not self.inputs[i]:
                continue
            _, bwd = _OPS[self.ops[i]]
            grads = bwd(g, self.ctxs[i])
            for j, gj in zip(self.inputs[i], grads):
                if gj is None:
                    continue
                adj[j] = gj if adj[j] is None else adj[j] + gj
        out = {}
        for name, i in self.params.items():
            g = adj[i] if i < len(adj) else None
            out[name] = np.zeros_like(self.values[i]) if g is None else g
        if wrt is None:
            return out
        extra = []
        for v in wrt:
            g = adj[v.idx] if v.idx < len(adj) else None
            extra.append(np.zeros_like(v.value) if g is None else g)
        return out, extra


# convenience wrappers so model code reads like numpy
def sin(x: Var) -> Var:
    return x.tape.apply("sin", x)


def cos(x: Var) -> Var:
    return x.tape.apply("cos", x)


def tanh(x: Var) -> Var:
    return x.tape.apply("tanh", x)


def sigmoid(x: Var) -> Var:
    return x.tape.apply("sigmoid", x)


def relu(x: Var) -> Var:
    return x.tape.apply("relu", x)


def step(x: Var) -> Var:
    return x.tape.apply("step", x)


def square(x: Var) -> Var:
    return x.tape.apply("square", x)


def absolute(x: Var) -> Var:
    return x.tape.apply("abs", x)


def slice_last(x: Var, start: int, stop: int) -> Var:
    return x.tape.apply("slice", x, start=start, stop=stop)


def concat(xs: list[Var], axis: int = 0) -> Var:
    return xs[0].tape.apply("concat", *xs, axis=axis)


def cabs(x: Var) -> Var:
    return x.tape.apply("cabs", x)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict) -> dict:
    """Bias-corrected Adam update of ``params`` in place; returns ``params``."""
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericalError(
                f"non-finite gradient for {name!r} at Adam step {state.step + 1}"
            )
        if g.shape != params[name].shape:
            raise ShapeError("adam_step", (params[name].shape, g.shape), name)
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, g in grads.items():
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[name] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params
