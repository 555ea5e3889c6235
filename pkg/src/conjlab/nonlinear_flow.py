"""Perturbed flow y' = A(t) y + f(t, y) and its first-order sensitivities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .anchors import ANCHOR
from .errors import CertificateRejected, MissingJacobian
from .kernels import KIND_NL, KIND_VAR
from .linear_flow import EPS_CERT, TAU_NUM, LinearSystem, propagate
from .models import Model, NonlinearTerm
from .ode_core import DEFAULT_CONFIG, FlowSample, IntegratorConfig, integrate_model
from .report import ReportEntry, check_le

TAU_REL = 1e-3
TAU_FD = 1e-6
N_CERT_SAMPLES = 256


def fd_jacobian(f: Callable, t: float, y, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with step rel_step * (1 + |y|)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    h = rel_step * (1.0 + np.linalg.norm(y))
    cols = []
    for i in range(y.size):
        e = np.zeros_like(y)
        e[i] = h
        cols.append((np.asarray(f(t, y + e)) - np.asarray(f(t, y - e))) / (2.0 * h))
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Nonlinearity with Lipschitz constant ``gamma`` and sup bound ``mu``.

    ``f`` is either a built-in :class:`NonlinearTerm` (which carries its own
    Jacobian and runs on the compiled kernel) or any callable ``f(t, y)``.
    """

    f: NonlinearTerm | Callable
    gamma: float
    mu: float
    Df: Callable | None = None
    smoothness_order: int = 1
    fd_fallback: bool = True

    def __post_init__(self):
        if not self.gamma >= 0:
            raise CertificateRejected(f"gamma={self.gamma} must be >= 0", "γ ≥ 0", self.gamma)
        if not self.mu >= 0:
            raise CertificateRejected(f"mu={self.mu} must be >= 0", "μ ≥ 0", self.mu)
        if self.smoothness_order < 0:
            raise ValueError("smoothness_order must be >= 0")

    @property
    def is_builtin(self) -> bool:
        return isinstance(self.f, NonlinearTerm)

    @property
    def label(self) -> str:
        return self.f.label if self.is_builtin else getattr(self.f, "__name__", "callable")

    def __call__(self, t: float, y) -> np.ndarray:
        if self.is_builtin:
            return self.f.f(t, y)
        return np.atleast_1d(np.asarray(self.f(t, y), dtype=float))

    @property
    def has_jacobian(self) -> bool:
        if self.Df is not None or self.is_builtin:
            return True
        return self.smoothness_order >= 1 and self.fd_fallback

    def jacobian(self, t: float, y) -> np.ndarray:
        if self.Df is not None:
            return np.atleast_2d(np.asarray(self.Df(t, y), dtype=float))
        if self.is_builtin:
            return self.f.Df(t, y)
        if self.smoothness_order >= 1 and self.fd_fallback:
            return fd_jacobian(self, t, y)
        raise MissingJacobian("no Jacobian available: smoothness order 0 and finite differences disabled")


def verify_perturbation(pert: Perturbation, dim: int, t_max: float, rng: np.random.Generator,
                        n: int = N_CERT_SAMPLES, box: float = 10.0) -> list[ReportEntry]:
    """Sampled bound, Lipschitz and Jacobian-consistency certificate."""
    # times are biased toward 0, where time-decaying terms are largest
    ts = t_max * rng.uniform(0.0, 1.0, n) ** 3
    ys = box * rng.uniform(-1.0, 1.0, (n, dim)) ** 3
    # half the partners are far, half are close (local slope is where the sup is attained)
    near = rng.uniform(-1e-3, 1e-3, (n, dim))
    far = rng.uniform(-box, box, (n, dim))
    partners = np.where((np.arange(n) % 2 == 0)[:, None], ys + near, far)

    sup_f = 0.0
    ratio = 0.0
    for t, y, yb in zip(ts, ys, partners):
        fy = pert(t, y)
        sup_f = max(sup_f, float(np.linalg.norm(fy)))
        d = float(np.linalg.norm(y - yb))
        if d > 0:
            ratio = max(ratio, float(np.linalg.norm(fy - pert(t, yb))) / d)
    entries = [
        check_le("perturbation.sup_bound", ANCHOR["P3"], sup_f, pert.mu * (1 + EPS_CERT), f"{n} samples"),
        check_le("perturbation.lipschitz", ANCHOR["P3"], ratio, pert.gamma * (1 + EPS_CERT), f"{n} pairs"),
    ]
    if pert.Df is not None or pert.is_builtin:
        worst = 0.0
        for t, y in zip(ts[:64], ys[:64]):
            J = pert.jacobian(t, y)
            worst = max(worst, float(np.max(np.abs(J - fd_jacobian(pert, t, y)))) / (1.0 + np.max(np.abs(J))))
        entries.append(check_le("perturbation.jacobian_fd", ANCHOR["MDE1"], worst, TAU_FD, "64 samples"))
    return entries


class ConjugacyProblem:
    """A linear system, a perturbation and the numerical settings.

    Construction enforces K * gamma / alpha < 1, which makes the fixed-point
    operator behind H a contraction.
    """

    def __init__(self, linear: LinearSystem, pert: Perturbation, cfg: IntegratorConfig = DEFAULT_CONFIG,
                 t_max: float = 50.0):
        q = linear.K * pert.gamma / linear.alpha
        if not q < 1.0:
            raise CertificateRejected(
                f"K*gamma/alpha = {linear.K:g}*{pert.gamma:g}/{linear.alpha:g} = {q:.6g} is not < 1",
                "Kγ/α < 1", q)
        self.linear = linear
        self.pert = pert
        self.cfg = cfg
        self.t_max = float(t_max)
        self.q = q
        self.dim = linear.dim
        if pert.is_builtin:
            if pert.f.dim != linear.dim:
                raise ValueError(f"perturbation dimension {pert.f.dim} != system dimension {linear.dim}")
            self.model = Model.build(linear.A, pert.f, Df=pert.Df)
        else:
            jac = pert.jacobian if pert.has_jacobian else None
            self.model = Model.build(linear.A, pert, Df=jac)

    def __repr__(self) -> str:
        return f"ConjugacyProblem({self.linear!r}, f={self.pert.label}, gamma={self.pert.gamma}, mu={self.pert.mu})"

    @property
    def K(self) -> float:
        return self.linear.K

    @property
    def alpha(self) -> float:
        return self.linear.alpha

    @property
    def M(self) -> float:
        return self.linear.M

    @property
    def gamma(self) -> float:
        return self.pert.gamma

    @property
    def mu(self) -> float:
        return self.pert.mu

    @property
    def proximity_radius(self) -> float:
        return self.K * self.mu / self.alpha

    def vec(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(x, dtype=float)).reshape(self.dim)


def flow_sample(p: ConjugacyProblem, tau: float, eta, t: float,
                cfg: IntegratorConfig | None = None) -> FlowSample:
    return integrate_model(KIND_NL, p.model, tau, p.vec(eta), t, cfg or p.cfg)


def flow_y(p: ConjugacyProblem, t: float, tau: float, eta,
           cfg: IntegratorConfig | None = None) -> tuple[np.ndarray, FlowSample]:
    """y(t, tau, eta) and the dense sample between tau and t."""
    if t < 0 or tau < 0:
        raise ValueError(f"times must be >= 0, got t={t}, tau={tau}")
    sample = flow_sample(p, tau, eta, t, cfg)
    return sample.terminal, sample


def variational_y(p: ConjugacyProblem, t: float, tau: float, eta,
                  cfg: IntegratorConfig | None = None) -> np.ndarray:
    """d y(t, tau, eta) / d eta via the co-integrated variational equation."""
    n = p.dim
    if not p.pert.has_jacobian:
        raise MissingJacobian("variational equation needs Df (smoothness order 0, no FD fallback)")
    if t == tau:
        return np.eye(n)
    y0 = np.concatenate((p.vec(eta), np.eye(n).ravel()))
    sample = integrate_model(KIND_VAR, p.model, tau, y0, t, cfg or p.cfg)
    return sample.terminal[n:].reshape(n, n)


def verify_flow(p: ConjugacyProblem, rng: np.random.Generator, n: int = 8,
                horizon: float = 10.0) -> list[ReportEntry]:
    """Gronwall sensitivity, chain property and |f| <= mu along trajectories."""
    gron = 0.0
    chain = 0.0
    fmax = 0.0
    lin_err = 0.0
    for _ in range(n):
        t = float(rng.uniform(0.5, horizon))
        eta = rng.uniform(-2, 2, p.dim)
        etab = eta + rng.uniform(-0.05, 0.05, p.dim)
        y0, samp = flow_y(p, 0.0, t, eta)
        _, samp_b = flow_y(p, 0.0, t, etab)
        for s in np.linspace(0.0, t, 5):
            d = np.linalg.norm(samp(s) - samp_b(s))
            bound = np.linalg.norm(eta - etab) * math.exp((p.M + p.gamma) * (t - s))
            gron = max(gron, d / bound)
        for tt, yy in zip(samp.grid, samp.states):
            fmax = max(fmax, float(np.linalg.norm(p.pert(tt, yy))))
        r = float(rng.uniform(0.0, t))
        via = flow_y(p, 0.0, r, samp(r))[0]
        chain = max(chain, float(np.linalg.norm(via - y0)) / (1.0 + np.linalg.norm(y0)))
        if p.mu == 0.0:
            lin_err = max(lin_err, float(np.linalg.norm(y0 - propagate(p.linear, 0.0, t, eta, p.cfg))))
    entries = [
        check_le("flow.gronwall", ANCHOR["ContCondIni"], gron, 1.0 + TAU_REL,
                 "ratio |y(s,t,eta)-y(s,t,etab)| / (|eta-etab| exp((M+gamma)(t-s)))"),
        check_le("flow.chain", ANCHOR["identity2"], chain, TAU_NUM, "relative |y(t,r,y(r,tau,eta)) - y(t,tau,eta)|"),
        check_le("flow.f_bounded", ANCHOR["P3"], fmax, p.mu * (1 + EPS_CERT), "sup |f| at accepted steps"),
    ]
    if p.mu == 0.0:
        entries.append(check_le("flow.reduces_to_linear", ANCHOR["P2"], lin_err, TAU_NUM, "f = 0"))
    return entries
