"""Continuity moduli and the Jacobian of G."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .anchors import ANCHOR
from .conjugacy import G, H, PicardTrace
from .linear_flow import TAU_NUM, transition
from .nonlinear_flow import TAU_REL, ConjugacyProblem, variational_y
from .ode_core import IntegratorConfig
from .report import ReportEntry, check_flag, check_le, info

TAU_JAC = 1e-4
TAU_INV_PRODUCT = 1e-6
SINGULAR = 1e-12
FD_JAC_STEP = 1e-5
FD_HESS_STEP = 1e-3


def _expm1_ratio(beta: float, t: float) -> float:
    """(exp(beta t) - 1) / beta, with the limit t as beta -> 0."""
    if abs(beta) < SINGULAR:
        return t
    return math.expm1(beta * t) / beta


def theta_value(t: float, K: float, M: float, alpha: float, gamma: float) -> float:
    return 1.0 + K * gamma * _expm1_ratio(M + gamma - alpha, t)


def theta0_value(t: float, K: float, M: float, alpha: float, gamma: float) -> float:
    if abs(M - alpha) < SINGULAR:
        return K * gamma
    return K * gamma * _expm1_ratio(M - alpha, t)


def C_value(t: float, K: float, M: float, alpha: float, gamma: float) -> float:
    """Lipschitz factor of G(t, .): 1 + K gamma (1 - e^{(M+gamma-alpha) t}) / (alpha - M - gamma)."""
    beta = alpha - M - gamma
    if abs(beta) < SINGULAR:
        return 1.0 + K * gamma * t
    return 1.0 - K * gamma * math.expm1(-beta * t) / beta


def _consts(p: ConjugacyProblem):
    return p.K, p.M, p.alpha, p.gamma


def theta(p: ConjugacyProblem, t: float) -> float:
    return theta_value(t, *_consts(p))


def theta0(p: ConjugacyProblem, t: float) -> float:
    return theta0_value(t, *_consts(p))


def lipschitz_factor_C(p: ConjugacyProblem, t: float) -> float:
    return C_value(t, *_consts(p))


@dataclass(frozen=True)
class ContinuityBudget:
    eps: float
    L: float
    theta_star: float
    theta0_star: float
    delta: float
    clamped: bool = False


def continuity_budget(p: ConjugacyProblem, eps: float) -> ContinuityBudget:
    if not eps > 0:
        raise ValueError("eps must be positive")
    arg = 4.0 * p.mu * p.K / (p.alpha * eps)
    if arg <= 1.0:
        # horizon would be nonpositive: every t is already "late"
        return ContinuityBudget(eps, 0.0, 1.0, theta0(p, 0.0), eps / 2.0, clamped=True)
    L = math.log(arg) / p.alpha
    ts = theta(p, L)
    return ContinuityBudget(eps, L, ts, theta0(p, L), eps / (2.0 * ts))


def picard_delta_column(p: ConjugacyProblem, trace: PicardTrace, eps: float) -> list[float]:
    """delta_{j+1} = min(delta_j, eps (1 - q) / (2 theta0*)), started from delta(eps).

    Diagnostic only: the recursion is constant after one step whenever
    theta0* > 0, and it says nothing about the terminal iterate by itself.
    """
    b = continuity_budget(p, eps)
    col = [b.delta]
    step = math.inf if b.theta0_star == 0 else eps * (1.0 - p.q) / (2.0 * b.theta0_star)
    for _ in trace.diffs[1:]:
        col.append(min(col[-1], step))
    return col


def check_uniform_continuity(p: ConjugacyProblem, eps: float, pairs: Sequence[tuple], ts: Sequence[float],
                             ) -> list[ReportEntry]:
    b = continuity_budget(p, eps)
    worst_g = 0.0
    worst_h = 0.0
    used = 0
    outside = 0
    for a, c in pairs:
        a, c = p.vec(a), p.vec(c)
        if np.linalg.norm(a - c) >= b.delta:
            outside += 1
            continue
        used += 1
        for t in ts:
            worst_g = max(worst_g, float(np.linalg.norm(G(p, t, a) - G(p, t, c))))
            worst_h = max(worst_h, float(np.linalg.norm(H(p, t, a) - H(p, t, c))))
    note = f"eps={eps:g}, delta={b.delta:.6g}, {used} pairs x {len(ts)} times"
    entries = [
        ReportEntry("continuity.G", ANCHOR["continuity"], worst_g, eps, worst_g < eps, note),
        ReportEntry("continuity.H", ANCHOR["continuity"], worst_h, eps, worst_h < eps, note),
        info("continuity.budget_L", ANCHOR["auxiliares"], b.L, f"theta*={b.theta_star:.6g}"),
    ]
    if outside:
        entries.append(info("continuity.out_of_contract", ANCHOR["continuity"], outside,
                            "pairs with |a-b| >= delta, not required to satisfy the bound"))
    return entries


def check_lipschitz_C(p: ConjugacyProblem, pairs: Sequence[tuple], ts: Sequence[float]) -> ReportEntry:
    worst = 0.0
    for t in ts:
        c = lipschitz_factor_C(p, t)
        for a, b in pairs:
            a, b = p.vec(a), p.vec(b)
            d = float(np.linalg.norm(a - b))
            if d > 0:
                worst = max(worst, float(np.linalg.norm(G(p, t, a) - G(p, t, b))) / (c * d))
    return check_le("regularity.lipschitz_C", ANCHOR["lipschitz-C"], worst, 1.0 + TAU_REL,
                    f"max |G(t,a)-G(t,b)| / (C(t)|a-b|), {len(pairs)} pairs x {len(ts)} times")


def check_moduli_monotone(p: ConjugacyProblem, t_max: float, n: int = 201) -> ReportEntry:
    ts = np.linspace(0.0, t_max, n)
    ok = True
    for fn in (theta, theta0, lipschitz_factor_C):
        vals = np.array([fn(p, t) for t in ts])
        ok &= bool(np.all(np.diff(vals) >= -1e-15 * np.abs(vals[1:])))
    ok &= theta(p, 0.0) == 1.0 and lipschitz_factor_C(p, 0.0) == 1.0
    return check_flag("regularity.moduli_monotone", ANCHOR["auxiliares"], ok,
                      "theta, theta0, C nondecreasing; theta(0) = C(0) = 1")


@dataclass(frozen=True)
class JacobianEvaluation:
    t: float
    eta: np.ndarray
    J: np.ndarray
    detJ: float
    fd_residual: float
    fd_relative: float


def _tight(p: ConjugacyProblem) -> ConjugacyProblem:
    """Same problem at much tighter tolerances (finite-difference oracles divide by the step)."""
    cfg = p.cfg
    tight = IntegratorConfig(rtol=max(cfg.rtol * 1e-3, 1e-13), atol=max(cfg.atol * 1e-3, 1e-16),
                             h_init=cfg.h_init, h_max=cfg.h_max, max_steps=cfg.max_steps * 4)
    return ConjugacyProblem(p.linear, p.pert, tight, p.t_max)


def fd_map_jacobian(p: ConjugacyProblem, fn, t: float, v, rel_step: float = FD_JAC_STEP) -> np.ndarray:
    v = p.vec(v)
    h = rel_step * (1.0 + np.linalg.norm(v))
    cols = []
    for i in range(p.dim):
        e = np.zeros(p.dim)
        e[i] = h
        cols.append((fn(p, t, v + e) - fn(p, t, v - e)) / (2.0 * h))
    return np.column_stack(cols)


def jacobian_G(p: ConjugacyProblem, t: float, eta, with_fd: bool = True) -> JacobianEvaluation:
    """dG/deta = Phi(t, 0) dy(0, t, eta)/deta, checked against central differences."""
    eta = p.vec(eta)
    n = p.dim
    if t == 0.0:
        return JacobianEvaluation(0.0, eta, np.eye(n), 1.0, 0.0, 0.0)
    J = transition(p.linear, t, 0.0, p.cfg) @ variational_y(p, 0.0, t, eta)
    res = rel = 0.0
    if with_fd:
        fd = fd_map_jacobian(_tight(p), G, t, eta)
        res = float(np.max(np.abs(J - fd)))
        rel = res / float(np.max(np.abs(J)))
    return JacobianEvaluation(t, eta, J, float(np.linalg.det(J)), res, rel)


def jacobian_H(p: ConjugacyProblem, t: float, xi) -> np.ndarray:
    """Inverse of the Jacobian of G at (t, H(t, xi))."""
    xi = p.vec(xi)
    if t == 0.0:
        return np.eye(p.dim)
    return np.linalg.inv(jacobian_G(p, t, H(p, t, xi), with_fd=False).J)


def check_jacobians(p: ConjugacyProblem, probes: Sequence[tuple[float, np.ndarray]]) -> list[ReportEntry]:
    rel = 0.0
    min_det = math.inf
    inv_err = 0.0
    h_rel = 0.0
    for t, eta in probes:
        ev = jacobian_G(p, t, eta)
        rel = max(rel, ev.fd_relative)
        min_det = min(min_det, ev.detJ)
        g = G(p, t, eta)
        JH = jacobian_H(p, t, g)
        inv_err = max(inv_err, float(np.max(np.abs(JH @ ev.J - np.eye(p.dim)))))
        fdH = fd_map_jacobian(_tight(p), H, t, g)
        h_rel = max(h_rel, float(np.max(np.abs(JH - fdH))) / float(np.max(np.abs(JH))))
    n = len(probes)
    return [
        check_le("regularity.jacobian_G_fd", ANCHOR["jacobiano-G"], rel, TAU_JAC, f"{n} probes, relative"),
        check_le("regularity.jacobian_H_fd", ANCHOR["jacobiano-G"], h_rel, TAU_JAC, f"{n} probes, relative"),
        ReportEntry("regularity.det_positive", ANCHOR["det"], min_det, 0.0, min_det > 0.0,
                    f"min det dG/deta over {n} probes; pass iff > 0"),
        check_le("regularity.inverse_product", ANCHOR["jacobiano-G"], inv_err, TAU_INV_PRODUCT,
                 "max |J_H(t, G(t,eta)) J_G(t, eta) - I|"),
    ]


def properness_check(p: ConjugacyProblem, t: float, radii: Sequence[float], n_dirs: int = 64) -> list[ReportEntry]:
    """min over spheres |eta| = R of |G(t, eta)| against R - K mu / alpha."""
    if p.dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        ang = 2 * math.pi * np.arange(n_dirs) / n_dirs
        base = np.column_stack((np.cos(ang), np.sin(ang)))
        dirs = np.zeros((n_dirs, p.dim))
        dirs[:, :2] = base
    out = []
    for R in radii:
        m = min(float(np.linalg.norm(G(p, t, R * d))) for d in dirs)
        bound = R - p.proximity_radius - TAU_NUM
        cid = f"regularity.proper[R={R:g}]"
        if R < p.proximity_radius:
            out.append(info(cid, ANCHOR["hadamard"], m, "radius below K*mu/alpha; bound vacuous"))
        else:
            out.append(ReportEntry(cid, ANCHOR["hadamard"], m, bound, m >= bound,
                                   f"min |G(t,eta)| on |eta|={R:g} at t={t:g}; pass iff >= bound"))
    return out


def hessian_asymmetry(p: ConjugacyProblem, t: float, eta) -> float:
    """Relative asymmetry of the finite-difference second derivative of G."""
    eta = p.vec(eta)
    n = p.dim
    h = FD_HESS_STEP * (1.0 + np.linalg.norm(eta))
    T = np.zeros((n, n, n))  # T[i, j, k] = d^2 G_i / d eta_j d eta_k
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        T[:, :, k] = (jacobian_G(p, t, eta + e, False).J - jacobian_G(p, t, eta - e, False).J) / (2 * h)
    asym = float(np.max(np.abs(T - T.transpose(0, 2, 1))))
    return asym / max(1.0, float(np.max(np.abs(T))))


def check_hessian_symmetry(p: ConjugacyProblem, probes: Sequence[tuple[float, np.ndarray]]) -> ReportEntry:
    worst = max((hessian_asymmetry(p, t, eta) for t, eta in probes), default=0.0)
    return check_le("regularity.hessian_symmetry", ANCHOR["hessian"], worst, 1e-3,
                    f"{len(probes)} probes; second-order smoothness probe")
