"""Adaptive Dormand-Prince integration with dense output, and Simpson quadrature."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from ._kernels_py import dense_eval, dense_eval_many, dopri
from .errors import ToleranceNotMet


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-9
    atol: float = 1e-12
    h_init: float = 1e-2
    h_max: float = 1.0
    max_steps: int = 500_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.h_max > 0 and self.max_steps > 0):
            raise ValueError(f"invalid integrator configuration {self}")
        if self.h_init <= 0:
            raise ValueError("h_init must be positive")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True, eq=False)
class FlowSample:
    """Dense trajectory produced by one integration.

    Internally the solution is parametrised by ``s = direction * (t - t0)``,
    so backward runs are stored as forward runs of the time-reversed field.
    """

    t0: float
    direction: float
    sgrid: np.ndarray
    values: np.ndarray
    cont: np.ndarray
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.sgrid, self.values, self.cont):
            arr.setflags(write=False)

    @property
    def t1(self) -> float:
        return self.t0 + self.direction * float(self.sgrid[-1])

    @property
    def grid(self) -> np.ndarray:
        """Node times in increasing order."""
        t = self.t0 + self.direction * self.sgrid
        return t if self.direction > 0 else t[::-1]

    @property
    def states(self) -> np.ndarray:
        return self.values if self.direction > 0 else self.values[::-1]

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1].copy()

    @property
    def span(self) -> tuple[float, float]:
        return (min(self.t0, self.t1), max(self.t0, self.t1))

    def __call__(self, t: float) -> np.ndarray:
        s = self.direction * (t - self.t0)
        end = float(self.sgrid[-1])
        slack = 1e-12 * max(1.0, end)
        if s < -slack or s > end + slack:
            raise ValueError(f"t={t} outside sample span {self.span}")
        if s == end or (self.t1 == t):
            return self.values[-1].copy()
        return dense_eval(self.sgrid, self.values, self.cont, min(max(s, 0.0), end))

    def eval_many(self, ts) -> np.ndarray:
        """Dense values at many times at once (rows follow ``ts``)."""
        ts = np.asarray(ts, dtype=float)
        s = np.clip(self.direction * (ts - self.t0), 0.0, float(self.sgrid[-1]))
        return dense_eval_many(self.sgrid, self.values, self.cont, s)

    def component(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Raw (sgrid, values, cont) restricted to a slice of the state."""
        return (self.sgrid, np.ascontiguousarray(self.values[:, start:stop]),
                np.ascontiguousarray(self.cont[:, :, start:stop]))


def _sample(t0, t1, raw) -> FlowSample:
    sgrid, values, cont, stats = raw
    return FlowSample(float(t0), 1.0 if t1 >= t0 else -1.0, sgrid, values, cont, stats)


def integrate(rhs: Callable, t0: float, x0, t1: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> FlowSample:
    """Integrate ``x' = rhs(t, x)`` from ``t0`` to ``t1`` (either direction)."""
    d = 1.0 if t1 >= t0 else -1.0
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def rhs_s(s, y):
        return d * np.asarray(rhs(t0 + d * s, y), dtype=float).reshape(y.shape)

    raw = dopri(rhs_s, abs(t1 - t0), x0, cfg.rtol, cfg.atol, cfg.h_init, cfg.h_max, cfg.max_steps)
    return _sample(t0, t1, raw)


def integrate_model(kind: int, model, t0: float, y0, t1: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                    phi=None, mesh=None, backend: str | None = None) -> FlowSample:
    """Integrate one of the kernel systems (see ``_kernels_py.make_rhs``)."""
    raw = kernels.solve(kind, model, t0, np.asarray(y0, dtype=float).ravel(), t1, cfg.rtol, cfg.atol,
                        cfg.h_init, cfg.h_max, cfg.max_steps, phi=phi, mesh=mesh, backend=backend)
    return _sample(t0, t1, raw)


def _simpson(fa, fm, fb, h):
    return (h / 6.0) * (fa + 4.0 * fm + fb)


def quad(integrand: Callable, a: float, b: float, tol: float = 1e-10,
         max_evals: int = 2_000_000, min_panels: int = 16):
    """Adaptive Simpson quadrature with Richardson extrapolation.

    A panel is accepted when the two-level difference is below 15 times its
    share (proportional to length) of ``tol``. Works for scalar or vector
    integrands; cubic polynomials are integrated exactly.
    """
    if b < a:
        return -quad(integrand, b, a, tol, max_evals, min_panels)
    if b == a:
        return 0.0 * np.asarray(integrand(a), dtype=float)
    width = b - a
    nodes = np.linspace(a, b, 2 * min_panels + 1)
    fvals = [np.asarray(integrand(x), dtype=float) for x in nodes]
    evals = len(fvals)
    stack = []
    for i in range(min_panels):
        x0, x2 = nodes[2 * i], nodes[2 * i + 2]
        f0, f1, f2 = fvals[2 * i], fvals[2 * i + 1], fvals[2 * i + 2]
        stack.append((x0, x2, f0, f1, f2, _simpson(f0, f1, f2, x2 - x0), 0))
    total = 0.0
    while stack:
        x0, x2, f0, f1, f2, whole, depth = stack.pop()
        x1 = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        fl = np.asarray(integrand(xl), dtype=float)
        fr = np.asarray(integrand(xr), dtype=float)
        evals += 2
        left = _simpson(f0, fl, f1, x1 - x0)
        right = _simpson(f1, fr, f2, x2 - x1)
        diff = left + right - whole
        local_tol = tol * (x2 - x0) / width
        if np.max(np.abs(diff)) <= 15.0 * local_tol or depth >= 60:
            if depth >= 60:
                raise ToleranceNotMet(f"quadrature depth limit reached near t={x1:.6g}")
            total = total + left + right + diff / 15.0
            continue
        if evals >= max_evals:
            raise ToleranceNotMet(f"quadrature budget of {max_evals} evaluations exhausted")
        stack.append((x1, x2, f1, fr, f2, right, depth + 1))
        stack.append((x0, x1, f0, fl, f1, left, depth + 1))
    return total
