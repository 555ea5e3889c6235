"""Built-in coefficient matrices and nonlinear terms.

Every built-in carries two equivalent representations: plain numpy callables
(used by the pure-Python engine and by anything that wants to evaluate the
model directly) and a packed array form consumed by the compiled kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

HALF_PI = 0.5 * math.pi

# nonlinear term codes shared with the compiled kernel
F_ZERO = 0
F_JIANG = 1
F_SIN = 2
F_TANH = 3
F_CONST = 4

_F_NAMES = {
    F_ZERO: "zero",
    F_JIANG: "jiang_arctan",
    F_SIN: "scaled_sin",
    F_TANH: "scaled_tanh",
    F_CONST: "constant_shift",
}


@dataclass(frozen=True, eq=False)
class MatrixFunction:
    """A(t) = A0 + sin(omega t) A1."""

    A0: np.ndarray
    A1: np.ndarray
    omega: float = 0.0
    label: str = ""

    def __post_init__(self):
        A0 = np.array(self.A0, dtype=float, ndmin=2)
        A1 = np.array(self.A1, dtype=float, ndmin=2)
        if A0.shape[0] != A0.shape[1] or A0.shape != A1.shape:
            raise ValueError(f"A must be square, got {A0.shape} and {A1.shape}")
        A0.setflags(write=False)
        A1.setflags(write=False)
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "A1", A1)

    @property
    def dim(self) -> int:
        return self.A0.shape[0]

    @property
    def is_constant(self) -> bool:
        return self.omega == 0.0 or not np.any(self.A1)

    def __call__(self, t: float) -> np.ndarray:
        if self.is_constant:
            return self.A0
        return self.A0 + math.sin(self.omega * t) * self.A1

    @classmethod
    def constant(cls, matrix) -> MatrixFunction:
        m = np.array(matrix, dtype=float, ndmin=2)
        return cls(m, np.zeros_like(m), 0.0, label=f"constant({m.tolist()})")

    @classmethod
    def diag(cls, *entries: float) -> MatrixFunction:
        m = np.diag(np.asarray(entries, dtype=float))
        return cls(m, np.zeros_like(m), 0.0, label=f"diag{tuple(float(e) for e in entries)}")

    @classmethod
    def rot(cls, a: float, b: float) -> MatrixFunction:
        m = np.array([[a, b], [-b, a]], dtype=float)
        return cls(m, np.zeros_like(m), 0.0, label=f"rot({float(a)}, {float(b)})")

    @classmethod
    def sindiag(cls, a, b, omega: float) -> MatrixFunction:
        """diag(a_i + b_i sin(omega t))."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if a.shape != b.shape:
            raise ValueError("sindiag needs equally long offset and amplitude vectors")
        return cls(np.diag(a), np.diag(b), float(omega),
                   label=f"sindiag({a.tolist()}, {b.tolist()}, {float(omega)})")


@dataclass(frozen=True, eq=False)
class NonlinearTerm:
    """Componentwise built-in perturbation, optionally translated.

    With a shift s the term becomes g(t, z) = f(t, z + s) - f(t, s).
    """

    kind: int
    dim: int
    coef: float = 0.0
    vec: np.ndarray = field(default=None)
    shift: np.ndarray | None = None

    def __post_init__(self):
        vec = np.zeros(self.dim) if self.vec is None else np.array(self.vec, dtype=float).reshape(self.dim)
        vec.setflags(write=False)
        object.__setattr__(self, "vec", vec)
        if self.shift is not None:
            s = np.array(self.shift, dtype=float).reshape(self.dim)
            s.setflags(write=False)
            object.__setattr__(self, "shift", s)

    @property
    def name(self) -> str:
        return _F_NAMES[self.kind]

    @property
    def label(self) -> str:
        if self.kind == F_CONST:
            base = f"constant_shift({self.vec.tolist()})"
        elif self.kind == F_ZERO:
            base = "zero"
        else:
            base = f"{self.name}({self.coef})"
        if self.shift is not None:
            base += f" translated by {self.shift.tolist()}"
        return base

    def _raw(self, t: float, y: np.ndarray) -> np.ndarray:
        k = self.kind
        if k == F_ZERO:
            return np.zeros(self.dim)
        if k == F_JIANG:
            return self.coef * (HALF_PI - np.arctan(t + np.abs(y)))
        if k == F_SIN:
            return self.coef * np.sin(y)
        if k == F_TANH:
            return self.coef * np.tanh(y)
        return self.vec.copy()

    def _raw_diag_jac(self, t: float, y: np.ndarray) -> np.ndarray:
        k = self.kind
        if k == F_JIANG:
            u = t + np.abs(y)
            return -self.coef * np.sign(y) / (1.0 + u * u)
        if k == F_SIN:
            return self.coef * np.cos(y)
        if k == F_TANH:
            c = np.cosh(y)
            return self.coef / (c * c)
        return np.zeros(self.dim)

    def f(self, t: float, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(self.dim)
        if self.shift is None:
            return self._raw(t, y)
        return self._raw(t, y + self.shift) - self._raw(t, self.shift)

    def Df(self, t: float, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(self.dim)
        if self.shift is not None:
            y = y + self.shift
        return np.diag(self._raw_diag_jac(t, y))

    def translated(self, ybar) -> NonlinearTerm:
        base = np.zeros(self.dim) if self.shift is None else self.shift
        return NonlinearTerm(self.kind, self.dim, self.coef, self.vec,
                             base + np.asarray(ybar, dtype=float).reshape(self.dim))

    # factories
    @classmethod
    def zero(cls, dim: int) -> NonlinearTerm:
        return cls(F_ZERO, dim)

    @classmethod
    def jiang_arctan(cls, c: float, dim: int = 1) -> NonlinearTerm:
        return cls(F_JIANG, dim, float(c))

    @classmethod
    def scaled_sin(cls, c: float, dim: int = 1) -> NonlinearTerm:
        return cls(F_SIN, dim, float(c))

    @classmethod
    def scaled_tanh(cls, c: float, dim: int = 1) -> NonlinearTerm:
        return cls(F_TANH, dim, float(c))

    @classmethod
    def constant_shift(cls, vec) -> NonlinearTerm:
        v = np.atleast_1d(np.asarray(vec, dtype=float))
        return cls(F_CONST, v.size, 0.0, v)


@dataclass(frozen=True, eq=False)
class KernelData:
    """Packed model arrays for the compiled kernel."""

    n: int
    A0: np.ndarray
    A1: np.ndarray
    omega: float
    fkind: int
    coef: float
    vec: np.ndarray
    shift: np.ndarray
    has_shift: bool


class Model:
    """Right-hand-side ingredients y' = A(t) y + f(t, y) with Jacobian Df."""

    def __init__(self, A: Callable, f: Callable | None, Df: Callable | None, dim: int,
                 kernel: KernelData | None = None):
        self.A = A
        self.dim = dim
        self._f = f
        self._Df = Df
        self.kernel = kernel

    def f(self, t, y):
        if self._f is None:
            return np.zeros(self.dim)
        return np.asarray(self._f(t, y), dtype=float).reshape(self.dim)

    def Df(self, t, y):
        if self._Df is None:
            return np.zeros((self.dim, self.dim))
        return np.asarray(self._Df(t, y), dtype=float).reshape(self.dim, self.dim)

    @property
    def has_f(self) -> bool:
        return self._f is not None

    @classmethod
    def build(cls, A, term=None, Df=None) -> Model:
        """Combine an A(t) and an optional nonlinear term.

        ``term`` may be a :class:`NonlinearTerm` or any callable ``f(t, y)``;
        a packed kernel form exists only when both pieces are built-ins.
        """
        if isinstance(A, MatrixFunction):
            dim = A.dim
        else:
            dim = np.atleast_2d(A(0.0)).shape[0]
        kernel = None
        if isinstance(term, NonlinearTerm):
            f, jac = term.f, (Df or term.Df)
            if isinstance(A, MatrixFunction) and Df is None:
                shift = term.shift if term.shift is not None else np.zeros(dim)
                kernel = KernelData(dim, np.ascontiguousarray(A.A0), np.ascontiguousarray(A.A1),
                                    float(A.omega), term.kind, term.coef,
                                    np.ascontiguousarray(term.vec), np.ascontiguousarray(shift),
                                    term.shift is not None)
        elif term is None:
            f, jac = None, None
            if isinstance(A, MatrixFunction):
                z = np.zeros(dim)
                kernel = KernelData(dim, np.ascontiguousarray(A.A0), np.ascontiguousarray(A.A1),
                                    float(A.omega), F_ZERO, 0.0, z, z, False)
        else:
            f, jac = term, Df
        return cls(A, f, jac, dim, kernel)
