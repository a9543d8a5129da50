"""A small static-graph reverse-mode differentiator.

Programs are built once with the methods on :class:`GradientProgram`, then
evaluated any number of times. Every evaluation uses its own workspace, so a
finished program may be shared between threads.

    >>> p = GradientProgram()
    >>> x = p.input("x", (2,))
    >>> p.set_output(p.scale(p.sum_of_squares(x), 0.5))
    >>> evaluate(p, {"x": np.array([3.0, 4.0])})
    12.5

The primitive set is deliberately fixed: matmul, add, scale, hadamard,
nonlin, concat_columns, cholesky, tri_solve, sum_log_diag, quad_form and
sum_of_squares, plus ``input``/``constant`` leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from . import linalg
from .errors import ShapeMismatch
from .nonlin import activation, activation_grad


@dataclass(frozen=True)
class Var:
    index: int
    shape: tuple


@dataclass
class _Node:
    op: str
    args: tuple
    shape: tuple
    attrs: dict = field(default_factory=dict)


def _broadcast_shape(a: tuple, b: tuple) -> tuple:
    try:
        return tuple(np.broadcast_shapes(a, b))
    except ValueError:
        raise ShapeMismatch(f"cannot broadcast {a} with {b}") from None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


class GradientProgram:
    def __init__(self):
        self._nodes: list[_Node] = []
        self._inputs: dict[str, int] = {}
        self._output: int | None = None

    # -- construction -----------------------------------------------------

    def _push(self, op, args, shape, **attrs) -> Var:
        if self._output is not None:
            raise RuntimeError("program is finalised")
        self._nodes.append(_Node(op, tuple(a.index for a in args), tuple(shape), attrs))
        return Var(len(self._nodes) - 1, tuple(shape))

    def input(self, name: str, shape: Sequence[int]) -> Var:
        if name in self._inputs:
            raise ValueError(f"duplicate input {name!r}")
        v = self._push("input", (), shape, name=name)
        self._inputs[name] = v.index
        return v

    def constant(self, value) -> Var:
        value = np.asarray(value, dtype=float)
        return self._push("constant", (), value.shape, value=value)

    def matmul(self, a: Var, b: Var, transpose_a: bool = False, transpose_b: bool = False) -> Var:
        if len(a.shape) != 2 or len(b.shape) not in (1, 2):
            raise ShapeMismatch(f"matmul operands {a.shape}, {b.shape}")
        ra, ca = a.shape[::-1] if transpose_a else a.shape
        if len(b.shape) == 1:
            if transpose_b:
                raise ShapeMismatch("cannot transpose a vector operand")
            rb, cb = b.shape[0], None
        else:
            rb, cb = b.shape[::-1] if transpose_b else b.shape
        if ca != rb:
            raise ShapeMismatch(f"matmul inner dims {ca} != {rb}")
        shape = (ra,) if cb is None else (ra, cb)
        return self._push("matmul", (a, b), shape, ta=transpose_a, tb=transpose_b)

    def add(self, a: Var, b: Var) -> Var:
        return self._push("add", (a, b), _broadcast_shape(a.shape, b.shape))

    def scale(self, a: Var, c: float) -> Var:
        return self._push("scale", (a,), a.shape, c=float(c))

    def hadamard(self, a: Var, b: Var) -> Var:
        if a.shape != b.shape:
            raise ShapeMismatch(f"hadamard operands {a.shape}, {b.shape}")
        return self._push("hadamard", (a, b), a.shape)

    def nonlin(self, a: Var, kind: str) -> Var:
        activation(kind, np.zeros(1))  # validates the name
        return self._push("nonlin", (a,), a.shape, kind=kind)

    def concat_columns(self, a: Var, b: Var) -> Var:
        if len(a.shape) != 2 or len(b.shape) != 2 or a.shape[0] != b.shape[0]:
            raise ShapeMismatch(f"concat_columns operands {a.shape}, {b.shape}")
        return self._push("concat_columns", (a, b), (a.shape[0], a.shape[1] + b.shape[1]))

    def cholesky(self, a: Var) -> Var:
        if len(a.shape) != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatch(f"cholesky operand {a.shape}")
        return self._push("cholesky", (a,), a.shape)

    def tri_solve(self, u: Var, b: Var, transposed: bool = False) -> Var:
        if len(u.shape) != 2 or u.shape[0] != u.shape[1] or b.shape[0] != u.shape[0]:
            raise ShapeMismatch(f"tri_solve operands {u.shape}, {b.shape}")
        return self._push("tri_solve", (u, b), b.shape, transposed=transposed)

    def sum_log_diag(self, u: Var) -> Var:
        if len(u.shape) != 2 or u.shape[0] != u.shape[1]:
            raise ShapeMismatch(f"sum_log_diag operand {u.shape}")
        return self._push("sum_log_diag", (u,), ())

    def quad_form(self, x: Var, A: Var) -> Var:
        """``trace(x.T @ A @ x)``; for a vector ``x`` this is ``x @ A @ x``."""
        if len(A.shape) != 2 or A.shape[0] != A.shape[1] or x.shape[0] != A.shape[0]:
            raise ShapeMismatch(f"quad_form operands {x.shape}, {A.shape}")
        return self._push("quad_form", (x, A), ())

    def sum_of_squares(self, a: Var) -> Var:
        return self._push("sum_of_squares", (a,), ())

    def sum(self, *terms: Var) -> Var:
        out = terms[0]
        for t in terms[1:]:
            out = self.add(out, t)
        return out

    def set_output(self, v: Var) -> "GradientProgram":
        if v.shape != ():
            raise ShapeMismatch(f"program output must be scalar, got {v.shape}")
        self._output = v.index
        return self

    @property
    def input_names(self) -> tuple:
        return tuple(self._inputs)

    def input_shape(self, name: str) -> tuple:
        return self._nodes[self._inputs[name]].shape

    # -- execution --------------------------------------------------------

    def _forward(self, inputs: Mapping[str, np.ndarray]) -> list:
        if self._output is None:
            raise RuntimeError("program has no output")
        missing = set(self._inputs) - set(inputs)
        if missing:
            raise ShapeMismatch(f"missing inputs: {sorted(missing)}")
        vals: list = [None] * len(self._nodes)
        for i, node in enumerate(self._nodes[: self._output + 1]):
            a = [vals[j] for j in node.args]
            op = node.op
            if op == "input":
                v = np.asarray(inputs[node.attrs["name"]], dtype=float)
                if v.shape != node.shape:
                    raise ShapeMismatch(f"input {node.attrs['name']!r}: expected {node.shape}, got {v.shape}")
            elif op == "constant":
                v = node.attrs["value"]
            elif op == "matmul":
                x = a[0].T if node.attrs["ta"] else a[0]
                y = a[1].T if node.attrs["tb"] else a[1]
                v = x @ y
            elif op == "add":
                v = a[0] + a[1]
            elif op == "scale":
                v = node.attrs["c"] * a[0]
            elif op == "hadamard":
                v = a[0] * a[1]
            elif op == "nonlin":
                v = activation(node.attrs["kind"], a[0])
            elif op == "concat_columns":
                v = np.concatenate([a[0], a[1]], axis=1)
            elif op == "cholesky":
                v = linalg.cholesky(a[0])
            elif op == "tri_solve":
                v = linalg.tri_solve(a[0], a[1], transposed=node.attrs["transposed"])
            elif op == "sum_log_diag":
                v = np.asarray(np.sum(np.log(np.diag(a[0]))))
            elif op == "quad_form":
                v = np.asarray(np.sum(a[0] * (a[1] @ a[0])))
            elif op == "sum_of_squares":
                v = np.asarray(np.sum(a[0] * a[0]))
            else:  # pragma: no cover
                raise AssertionError(op)
            vals[i] = v
        return vals

    def _backward(self, vals: list) -> list:
        grads: list = [None] * len(self._nodes)
        grads[self._output] = np.asarray(1.0)

        def acc(j, g):
            grads[j] = g if grads[j] is None else grads[j] + g

        for i in range(self._output, -1, -1):
            g = grads[i]
            if g is None:
                continue
            node = self._nodes[i]
            op = node.op
            args = node.args
            a = [vals[j] for j in args]
            if op in ("input", "constant"):
                continue
            if op == "matmul":
                ta, tb = node.attrs["ta"], node.attrs["tb"]
                x = a[0].T if ta else a[0]
                y = a[1].T if tb else a[1]
                if y.ndim == 1:
                    gx = np.outer(g, y)
                    gy = x.T @ g
                else:
                    gx = g @ y.T
                    gy = x.T @ g
                acc(args[0], gx.T if ta else gx)
                acc(args[1], gy.T if tb else gy)
            elif op == "add":
                acc(args[0], _unbroadcast(g, a[0].shape))
                acc(args[1], _unbroadcast(g, a[1].shape))
            elif op == "scale":
                acc(args[0], node.attrs["c"] * g)
            elif op == "hadamard":
                acc(args[0], g * a[1])
                acc(args[1], g * a[0])
            elif op == "nonlin":
                acc(args[0], g * activation_grad(node.attrs["kind"], a[0]))
            elif op == "concat_columns":
                k = a[0].shape[1]
                acc(args[0], g[:, :k])
                acc(args[1], g[:, k:])
            elif op == "cholesky":
                acc(args[0], _cholesky_adjoint(vals[i], g))
            elif op == "tri_solve":
                U, X = a[0], vals[i]
                if node.attrs["transposed"]:
                    gb = linalg.tri_solve(U, g)
                    gu = -_outer2(X, gb)
                else:
                    gb = linalg.tri_solve(U, g, transposed=True)
                    gu = -_outer2(gb, X)
                acc(args[0], np.triu(gu))
                acc(args[1], gb)
            elif op == "sum_log_diag":
                acc(args[0], np.diag(g / np.diag(a[0])))
            elif op == "quad_form":
                x, A = a
                acc(args[0], g * ((A + A.T) @ x))
                acc(args[1], g * _outer2(x, x))
            elif op == "sum_of_squares":
                acc(args[0], 2.0 * g * a[0])
            else:  # pragma: no cover
                raise AssertionError(op)
        return grads


def _outer2(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``x @ y.T`` treating 1-d arrays as column vectors."""
    return np.outer(x, y) if x.ndim == 1 else x @ y.T


def _cholesky_adjoint(U: np.ndarray, U_bar: np.ndarray) -> np.ndarray:
    # Differentiating U^T U = A with L = U^T: A_bar = L^-T Phi(L^T L_bar) L^-1,
    # Phi = lower triangle with halved diagonal; result symmetrised.
    L = U.T
    L_bar = np.triu(U_bar).T
    P = np.tril(L.T @ L_bar)
    P[np.diag_indices_from(P)] *= 0.5
    X = scipy.linalg.solve_triangular(U, P, lower=False, check_finite=False)
    A_bar = scipy.linalg.solve_triangular(U, X.T, lower=False, check_finite=False).T
    return 0.5 * (A_bar + A_bar.T)


def evaluate(prog: GradientProgram, inputs: Mapping[str, np.ndarray]) -> float:
    vals = prog._forward(inputs)
    return float(vals[prog._output])


def value_and_gradient(prog: GradientProgram, inputs: Mapping[str, np.ndarray], wrt):
    """Forward value plus gradients for ``wrt`` (a name or a sequence of names)."""
    vals = prog._forward(inputs)
    grads = prog._backward(vals)
    names = [wrt] if isinstance(wrt, str) else list(wrt)
    out = {}
    for name in names:
        j = prog._inputs[name]
        g = grads[j]
        out[name] = np.zeros(prog._nodes[j].shape) if g is None else np.asarray(g, dtype=float)
    value = float(vals[prog._output])
    return (value, out[wrt]) if isinstance(wrt, str) else (value, out)


def gradient(prog: GradientProgram, inputs: Mapping[str, np.ndarray], wrt):
    return value_and_gradient(prog, inputs, wrt)[1]
