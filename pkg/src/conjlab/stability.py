"""Equilibria of the perturbed system and quadratic Lyapunov certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .anchors import ANCHOR
from .conjugacy import G, H
from .errors import NewtonDiverged
from .linear_flow import TAU_NUM, LinearSystem, linear_sample, opnorm, propagate
from .nonlinear_flow import ConjugacyProblem, Perturbation, flow_sample
from .ode_core import DEFAULT_CONFIG, FlowSample, IntegratorConfig, integrate
from .report import ReportEntry, check_flag, check_le, info

TAU_EQ = 1e-8
TAU_LYAP = 1e-6
TOL_TAIL = 1e-10
NEWTON_MAX_ITER = 50
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class EquilibriumCandidate:
    ybar: np.ndarray
    residual_ode: float
    residual_fpe: float

    @property
    def accepted(self) -> bool:
        return self.residual_ode <= TAU_EQ and self.residual_fpe <= TAU_EQ


@dataclass(frozen=True)
class NotFound:
    """A root at the first grid time that is not a constant solution."""

    candidate: np.ndarray
    residual_ode: float
    residual_fpe: float

    @property
    def max_residual(self) -> float:
        return max(self.residual_ode, self.residual_fpe)


def _newton(F: Callable, J: Callable, y0: np.ndarray) -> np.ndarray:
    """Damped Newton: the step is halved while the residual does not decrease."""
    y = y0.copy()
    r = F(y)
    nr = float(np.linalg.norm(r))
    for _ in range(NEWTON_MAX_ITER):
        if nr <= 1e-15 * (1.0 + np.linalg.norm(y)):
            return y
        step = np.linalg.solve(J(y), -r)
        lam = 1.0
        while True:
            cand = y + lam * step
            rc = F(cand)
            nc = float(np.linalg.norm(rc))
            if nc < nr or lam < 1e-10:
                break
            lam *= 0.5
        if np.linalg.norm(cand - y) <= 1e-16 * (1.0 + np.linalg.norm(y)):
            return cand
        y, r, nr = cand, rc, nc
    if nr <= 1e-12 * (1.0 + np.linalg.norm(y)):
        return y
    raise NewtonDiverged(f"Newton did not converge in {NEWTON_MAX_ITER} iterations (residual {nr:.3g})")


def _fpe_residual(p: ConjugacyProblem, ybar: np.ndarray, grid: np.ndarray) -> float:
    """max over grid of |ybar - Phi(t,0) ybar - int_0^t Phi(t,s) f(s, ybar) ds|.

    The right-hand side is the solution of v' = A v + f(t, ybar), v(0) = ybar.
    """
    t_end = float(np.max(grid))
    if t_end == 0.0:
        return 0.0
    fbar = p.pert

    def rhs(t, v):
        return p.linear.matrix(t) @ v + fbar(t, ybar)

    sample = integrate(rhs, 0.0, ybar, t_end, p.cfg)
    return max(float(np.linalg.norm(ybar - sample(t))) for t in grid)


def find_equilibrium(p: ConjugacyProblem, guess, time_grid: Sequence[float]) -> EquilibriumCandidate | NotFound:
    grid = np.asarray(time_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("time_grid must be nonempty")
    t0 = float(grid[0])

    def F(y):
        return p.linear.matrix(t0) @ y + p.pert(t0, y)

    def J(y):
        return p.linear.matrix(t0) + p.pert.jacobian(t0, y)

    ybar = _newton(F, J, p.vec(guess))
    r_ode = max(float(np.linalg.norm(p.linear.matrix(t) @ ybar + p.pert(t, ybar))) for t in grid)
    r_fpe = _fpe_residual(p, ybar, grid)
    cand = EquilibriumCandidate(ybar, r_ode, r_fpe)
    if cand.accepted:
        return cand
    return NotFound(ybar, r_ode, r_fpe)


def equilibrium_entries(p: ConjugacyProblem, found: EquilibriumCandidate | NotFound) -> list[ReportEntry]:
    if isinstance(found, NotFound):
        return [info("stability.equilibrium_not_found", ANCHOR["PFE"], found.max_residual,
                     f"root at first grid time {np.round(found.candidate, 8).tolist()} is not a constant solution")]
    return [
        check_le("stability.equilibrium_ode", ANCHOR["equilibrio"], found.residual_ode, TAU_EQ,
                 f"ybar={np.round(found.ybar, 12).tolist()}"),
        check_le("stability.equilibrium_fpe", ANCHOR["PFE"], found.residual_fpe, TAU_EQ),
        check_le("stability.equilibrium_ball", ANCHOR["ball"], float(np.linalg.norm(found.ybar)),
                 p.proximity_radius + TAU_NUM, "|ybar| against K*mu/alpha"),
    ]


def check_uniqueness(p: ConjugacyProblem, e1: EquilibriumCandidate, e2: EquilibriumCandidate) -> ReportEntry:
    d = float(np.linalg.norm(e1.ybar - e2.ybar))
    return check_le("stability.equilibrium_unique", ANCHOR["UPF"], d, 2 * TAU_EQ, "distance between candidates")


def equilibrium_limits(p: ConjugacyProblem, e: EquilibriumCandidate, ts: Sequence[float]) -> list[ReportEntry]:
    """G(t, ybar) = Phi(t,0) ybar and the decay of H(t, 0) toward ybar."""
    yb = e.ybar
    g_err = 0.0
    h_excess = -math.inf
    for t in ts:
        g_err = max(g_err, float(np.linalg.norm(G(p, t, yb) - propagate(p.linear, t, 0.0, yb, p.cfg))))
        bound = p.K * np.linalg.norm(yb) * math.exp(-p.alpha * t) + math.exp((p.K * p.gamma - p.alpha) * t)
        h_excess = max(h_excess, float(np.linalg.norm(H(p, t, np.zeros(p.dim)) - yb) - bound))
    note = f"t in {list(ts)}"
    return [
        check_le("stability.G_at_equilibrium", ANCHOR["HPF"], g_err, TAU_NUM, note),
        check_le("stability.H_origin_decay", ANCHOR["HPF"], h_excess, TAU_NUM,
                 "|H(t,0)-ybar| - (K|ybar|e^{-alpha t} + e^{(K gamma - alpha) t})"),
    ]


def translate_system(p: ConjugacyProblem, e: EquilibriumCandidate) -> ConjugacyProblem:
    """Problem for z = y - ybar: g(t, z) = f(t, z + ybar) - f(t, ybar), constants (gamma, 2 mu)."""
    yb = p.vec(e.ybar)
    pert = p.pert
    if pert.is_builtin and pert.Df is None:
        g = pert.f.translated(yb)
        new = Perturbation(g, pert.gamma, 2.0 * pert.mu, None, pert.smoothness_order, pert.fd_fallback)
    else:
        def g(t, z):
            return pert(t, np.asarray(z) + yb) - pert(t, yb)

        dg = None
        if pert.Df is not None:
            def dg(t, z):
                return pert.Df(t, np.asarray(z) + yb)
        new = Perturbation(g, pert.gamma, 2.0 * pert.mu, dg, pert.smoothness_order, pert.fd_fallback)
    return ConjugacyProblem(p.linear, new, p.cfg, p.t_max)


def check_translated_origin(q: ConjugacyProblem, ts: Sequence[float]) -> ReportEntry:
    worst = max(float(np.linalg.norm(q.pert(t, np.zeros(q.dim)))) for t in ts)
    return check_le("stability.translated_origin", ANCHOR["translate"], worst, 1e-15,
                    f"|g(t,0)| at {len(ts)} times")


def uas_empirical(p: ConjugacyProblem, eps_levels: Sequence[float], c_levels: Sequence[float],
                  ics: Sequence, t0s: Sequence[float] = (0.0, 2.0, 5.0), horizon: float | None = None,
                  n_eval: int = 2001) -> list[ReportEntry]:
    """Measured entry times T(eps, c) into the eps-ball for starts inside the c-ball."""
    horizon = p.t_max if horizon is None else horizon
    samples = []
    for t0 in t0s:
        for ic in ics:
            ic = p.vec(ic)
            samples.append((t0, ic, flow_sample(p, t0, ic, t0 + horizon)))
    out = []
    for eps in eps_levels:
        for c in c_levels:
            per_t0 = {t0: 0.0 for t0 in t0s}
            escaped = False
            monotone = True
            for t0, ic, samp in samples:
                if not np.linalg.norm(ic) < c:
                    continue
                ts = np.linspace(t0, t0 + horizon, n_eval)
                norms = np.array([np.linalg.norm(samp(t)) for t in ts])
                above = np.nonzero(norms >= eps)[0]
                if above.size and above[-1] == n_eval - 1:
                    escaped = True
                T = 0.0 if above.size == 0 else float(ts[min(above[-1] + 1, n_eval - 1)] - t0)
                per_t0[t0] = max(per_t0[t0], T)
                monotone &= bool(np.all(np.diff(norms) <= 1e-12 * (1 + norms[:-1])))
            T = max(per_t0.values())
            spread = max(per_t0.values()) - min(per_t0.values())
            cid = f"stability.uas_T[eps={eps:g},c={c:g}]"
            out.append(ReportEntry(cid, ANCHOR["uas2"], T, horizon, not escaped,
                                   f"entry time; t0 spread {spread:.3g}; norms monotone={monotone}"))
    return out


# -- Lyapunov ---------------------------------------------------------------

@dataclass(frozen=True)
class QSpec:
    """Constant symmetric positive definite weight with spectral bounds."""

    Q: np.ndarray
    q_minus: float
    q_plus: float

    @classmethod
    def constant(cls, Q) -> QSpec:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        Q = 0.5 * (Q + Q.T)
        ev = np.linalg.eigvalsh(Q)
        if ev[0] <= 0:
            raise ValueError("Q must be positive definite")
        return cls(Q, float(ev[0]), float(ev[-1]))

    @classmethod
    def scalar(cls, q: float, dim: int) -> QSpec:
        return cls.constant(q * np.eye(dim))

    is_constant = True

    def __call__(self, t: float) -> np.ndarray:
        return self.Q


def tail_horizon(sys: LinearSystem, Q: QSpec, t: float, tol_tail: float) -> float:
    return t + math.log(sys.K ** 2 * Q.q_plus / (2 * sys.alpha * tol_tail)) / (2 * sys.alpha)


def lyapunov_P(sys: LinearSystem, Q: QSpec, t: float, tol_tail: float = TOL_TAIL,
               cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """P(t) = int_t^T X(s,t)^T Q X(s,t) ds, truncated where the tail drops below tol_tail.

    The integral runs step by step over the integrator mesh with 5-point
    Gauss-Legendre. The dense output is quartic on each step, so the rule is
    exact for the interpolant when Q is constant.
    """
    n = sys.dim
    T = tail_horizon(sys, Q, t, tol_tail)
    X = linear_sample(sys, t, np.eye(n), T, cfg)
    g = X.grid
    h = np.diff(g)
    mids = 0.5 * (g[:-1] + g[1:])
    nodes = (mids[:, None] + 0.5 * h[:, None] * _GL_X[None, :]).ravel()
    weights = (0.5 * h[:, None] * _GL_W[None, :]).ravel()
    Xs = X.eval_many(nodes).reshape(-1, n, n)
    Qs = np.stack([Q(s) for s in nodes]) if not Q.is_constant else Q.Q[None, :, :]
    P = np.einsum("k,kji,kjl,klm->im", weights, Xs, np.broadcast_to(Qs, Xs.shape), Xs)
    return 0.5 * (P + P.T)


@dataclass
class LyapunovCertificate:
    Q: QSpec
    P_eval: Callable[[float], np.ndarray]
    p_minus: float
    p_plus: float
    decay_margin: float


def lyapunov_certificate(sys: LinearSystem, Q: QSpec, gamma: float = 0.0,
                         cfg: IntegratorConfig = DEFAULT_CONFIG, tol_tail: float = TOL_TAIL) -> LyapunovCertificate:
    cache: dict[float, np.ndarray] = {}

    def P_eval(t: float) -> np.ndarray:
        key = round(float(t), 12)
        if key not in cache:
            cache[key] = lyapunov_P(sys, Q, t, tol_tail, cfg)
        return cache[key].copy()

    p_minus = Q.q_minus / (2 * sys.M)
    p_plus = sys.K ** 2 * Q.q_plus / (2 * sys.alpha)
    return LyapunovCertificate(Q, P_eval, p_minus, p_plus, Q.q_minus - 2 * gamma * p_plus)


def check_P_bounds(cert: LyapunovCertificate, ts: Sequence[float], tau: float = 1e-8) -> list[ReportEntry]:
    lo = math.inf
    hi = -math.inf
    asym = 0.0
    for t in ts:
        P = cert.P_eval(t)
        ev = np.linalg.eigvalsh(P)
        lo = min(lo, float(ev[0]))
        hi = max(hi, float(ev[-1]))
        asym = max(asym, float(np.max(np.abs(P - P.T))))
    return [
        ReportEntry("lyapunov.P_lower", ANCHOR["cotas-lyap"], lo, cert.p_minus - tau, lo >= cert.p_minus - tau,
                    f"min eigenvalue of P(t) over {len(ts)} times; pass iff >= p_minus - tau"),
        check_le("lyapunov.P_upper", ANCHOR["cotas-lyap"], hi, cert.p_plus + tau, "max eigenvalue of P(t)"),
        check_le("lyapunov.P_symmetric", ANCHOR["cotas-lyap"], asym, 0.0),
    ]


def lyapunov_identity_residual(sys: LinearSystem, cert: LyapunovCertificate, t: float, h: float = 1e-3) -> float:
    """| Pdot + A^T P + P A + Q | with Pdot by second-order differences."""
    if t >= h:
        dP = (cert.P_eval(t + h) - cert.P_eval(t - h)) / (2 * h)
    else:
        dP = (-3 * cert.P_eval(t) + 4 * cert.P_eval(t + h) - cert.P_eval(t + 2 * h)) / (2 * h)
    A = sys.matrix(t)
    P = cert.P_eval(t)
    return opnorm(dP + A.T @ P + P @ A + cert.Q(t))


def check_matrix_identity(sys: LinearSystem, cert: LyapunovCertificate, ts: Sequence[float],
                          tol: float = 1e-5) -> ReportEntry:
    worst = max(lyapunov_identity_residual(sys, cert, t) for t in ts)
    return check_le("lyapunov.matrix_identity", ANCHOR["cotas-lyap"], worst, tol,
                    f"|Pdot + A^T P + P A + Q| at t in {[float(t) for t in ts]}")


def lyapunov_derivative_check(cert: LyapunovCertificate, p: ConjugacyProblem, trajectories: Sequence[FlowSample],
                              ts_identity: Sequence[float] = (0.0, 1.0, 5.0), n_nodes: int = 81
                              ) -> list[ReportEntry]:
    """Discrete decrease of V(t) = x^T P(t) x along trajectories, and the matrix identity.

    Over each interval the exact relation is
    V(b) - V(a) <= -margin * int_a^b |x|^2, whose right side is evaluated by
    5-point Gauss-Legendre on the dense trajectory. The margin is attained
    exactly when f = 0, so the quadrature must be far below the slack.
    """
    worst = -math.inf
    mono = -math.inf
    for samp in trajectories:
        a, b = samp.span
        ts = np.linspace(a, b, n_nodes)
        xs = [samp(t) for t in ts]
        V = [float(x @ cert.P_eval(t) @ x) for t, x in zip(ts, xs)]
        for k in range(n_nodes - 1):
            dt = ts[k + 1] - ts[k]
            mid = 0.5 * (ts[k] + ts[k + 1])
            sq = 0.5 * sum(w * float(np.sum(samp(mid + 0.5 * dt * g) ** 2)) for g, w in zip(_GL_X, _GL_W))
            lhs = (V[k + 1] - V[k]) / dt
            slack = TAU_LYAP * (1.0 + sq)
            worst = max(worst, lhs + cert.decay_margin * sq - slack)
            mono = max(mono, V[k + 1] - V[k] - TAU_LYAP * (1.0 + V[k]))
    n = len(trajectories)
    return [
        check_le("lyapunov.V_decrease", ANCHOR["lyap-decrease"], worst, 0.0,
                 f"max dV/dt + margin|x|^2 - slack over {n} trajectories; margin={cert.decay_margin:.6g}"),
        check_le("lyapunov.V_monotone", ANCHOR["lyap-decrease"], mono, 0.0, "V nonincreasing on the grid"),
        check_matrix_identity(p.linear, cert, ts_identity),
        check_flag("lyapunov.margin_positive", ANCHOR["lyap-decrease"], cert.decay_margin > 0,
                   f"q_minus - 2 gamma p_plus = {cert.decay_margin:.6g}"),
    ]


def comparative_conditions(p: ConjugacyProblem) -> list[ReportEntry]:
    """The two smallness conditions on gamma, reported side by side."""
    K, a, g = p.K, p.alpha, p.gamma
    return [
        info("stability.gamma_vs_alpha_over_K", ANCHOR["kga"], g / (a / K), "gamma / (alpha/K)"),
        info("stability.gamma_vs_alpha_over_K2", ANCHOR["lyap-decrease"], g / (a / K ** 2), "gamma / (alpha/K^2)"),
    ]


__all__ = [
    "EquilibriumCandidate", "NotFound", "find_equilibrium", "equilibrium_entries", "check_uniqueness",
    "equilibrium_limits", "translate_system", "check_translated_origin", "uas_empirical", "QSpec",
    "lyapunov_P", "LyapunovCertificate", "lyapunov_certificate", "check_P_bounds",
    "lyapunov_identity_residual", "check_matrix_identity", "lyapunov_derivative_check", "comparative_conditions"
]
