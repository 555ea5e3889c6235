"""Check suites over a scenario, and long-format plot data."""
from __future__ import annotations

import csv
import io
import math
import os

import numpy as np

from . import __version__
from .anchors import ANCHOR
from .conjugacy import (INTEGRAL, TAU_CONJ, TAU_EQUIV, TAU_INV, G_map, H, H_map,
                        PicardConfig, check_contraction, check_picard_traces, check_solution_mapping,
                        check_translation_identity, check_w_star, path_equivalence, proximity, z_star)
from .errors import NewtonDiverged
from .kernels import BACKEND
from .linear_flow import TAU_NUM, verify_linear
from .nonlinear_flow import ConjugacyProblem, flow_sample, flow_y, variational_y, verify_flow, verify_perturbation
from .regularity import (TAU_JAC, check_hessian_symmetry, check_jacobians, check_lipschitz_C,
                         check_moduli_monotone, check_uniform_continuity, continuity_budget, lipschitz_factor_C,
                         picard_delta_column, properness_check, theta, _tight)
from .report import CertificateReport, ReportEntry, check_le, info
from .scenario import Scenario
from .stability import (EquilibriumCandidate, QSpec, check_matrix_identity, check_P_bounds, check_translated_origin,
                        check_uniqueness, comparative_conditions, equilibrium_entries, equilibrium_limits,
                        find_equilibrium, lyapunov_certificate, lyapunov_derivative_check, translate_system,
                        uas_empirical)

DEFAULT_SEED = 0x5EED
SUITES = ("conjugacy", "continuity", "smoothness", "stability", "all")
_SUITE_INDEX = {name: k for k, name in enumerate(SUITES)}


def tol_scale() -> float:
    """Multiplier for residual tolerances, from ``CONJLAB_TOL_SCALE``."""
    raw = os.environ.get("CONJLAB_TOL_SCALE", "").strip()
    if not raw:
        return 1.0
    v = float(raw)
    if not v > 0:
        raise ValueError(f"CONJLAB_TOL_SCALE must be positive, got {raw!r}")
    return v


def _rng(seed: int, suite: str) -> np.random.Generator:
    return np.random.default_rng([seed, _SUITE_INDEX[suite]])


def certificate_entries(sc: Scenario, seed: int = DEFAULT_SEED) -> list[ReportEntry]:
    p = sc.problem
    rng = np.random.default_rng([seed, 99])
    out = verify_linear(p.linear, sc.t_max, rng, p.cfg)
    out += verify_perturbation(p.pert, p.dim, sc.t_max, rng)
    out.append(ReportEntry("certificate.kgamma_over_alpha", ANCHOR["kga"], p.q, 1.0, p.q < 1.0,
                           "K*gamma/alpha; pass iff < 1"))
    return out


# -- conjugacy ------------------------------------------------------------------

def conjugacy_entries(sc: Scenario, rng: np.random.Generator, scale: float = 1.0) -> list[ReportEntry]:
    p = sc.problem
    pc = PicardConfig(tol_fix=sc.picard_tol)
    states = sc.probes.states
    out = verify_flow(p, rng)

    h_evals = []
    g_evals = []
    for t in sc.probes.times:
        hg = gh = 0.0
        for v in states:
            ge = G_map(p, t, v)
            he = H_map(p, t, ge.output)
            h1 = H_map(p, t, v)
            g1 = G_map(p, t, h1.output)
            hg = max(hg, float(np.linalg.norm(he.output - v)))
            gh = max(gh, float(np.linalg.norm(g1.output - v)))
            h_evals += [he, h1]
            g_evals += [ge, g1]
        note = f"{len(states)} states at t={t:g}"
        out.append(check_le(f"conjugacy.roundtrip_HG[t={t:g}]", ANCHOR["bijective"], hg, TAU_INV * scale, note))
        out.append(check_le(f"conjugacy.roundtrip_GH[t={t:g}]", ANCHOR["bijective"], gh, TAU_INV * scale, note))
    out.append(proximity(p, h_evals, "H", TAU_NUM * scale))
    out.append(proximity(p, g_evals, "G", TAU_NUM * scale))

    eq_h = []
    eq_g = []
    for t in sc.probes.times:
        for v in states[: sc.probes.n_equiv]:
            eq_h.append(H_map(p, t, v, INTEGRAL, cross_check=True, pc=pc))
            eq_g.append(G_map(p, t, v, INTEGRAL, cross_check=True))
    out.append(path_equivalence(eq_h, "H", TAU_EQUIV * scale))
    out.append(path_equivalence(eq_g, "G", TAU_EQUIV * scale))

    ts = [t for t in (0.0, 2.0, 5.0, 10.0, 20.0) if t <= sc.probes.horizon]
    for k in range(sc.probes.trajectories):
        tau = 0.5 * k
        out += check_solution_mapping(p, tau, states[k % len(states)], ts, TAU_CONJ * scale, tag=f"traj{k}")

    traces = [z_star(p, t, t, v, pc)[1] for t in (2.0, 5.0, 10.0) for v in states[:4]]
    out += check_picard_traces(p, traces)
    if p.q > 0:
        out.append(check_contraction(p, rng))
    out.append(check_translation_identity(p, 0.0, states[0], (1.0, 3.0), (2.0, 5.0), pc, TAU_EQUIV * scale))
    out.append(check_w_star(p, [(3.0, 3.0, states[0]), (5.0, 0.0, states[1]), (2.0, 7.0, states[2]),
                                (10.0, 10.0, states[3])], TAU_EQUIV * scale))
    return out


# -- continuity ---------------------------------------------------------------

def continuity_entries(sc: Scenario, rng: np.random.Generator) -> list[ReportEntry]:
    p = sc.problem
    eps = sc.probes.eps
    b = continuity_budget(p, eps)
    out = [check_moduli_monotone(p, sc.t_max),
           info("continuity.budget_theta_star", ANCHOR["auxiliares"], b.theta_star, f"eps={eps:g}"),
           info("continuity.budget_delta", ANCHOR["auxiliares"], b.delta, f"eps={eps:g}")]
    pairs = []
    for _ in range(64):
        a = rng.uniform(-sc.probes.box, sc.probes.box, p.dim)
        d = rng.normal(size=p.dim)
        pairs.append((a, a + 0.9 * b.delta * d / np.linalg.norm(d)))
    ts = sorted({0.0, 1.0, min(b.L, sc.t_max), min(2 * b.L, sc.t_max), sc.t_max})
    out += check_uniform_continuity(p, eps, pairs, ts)
    out.append(check_lipschitz_C(p, pairs[:16], (0.5, 2.0, 5.0)))
    if p.q > 0:
        trace = z_star(p, 2.0, 2.0, sc.probes.states[0], PicardConfig(tol_fix=sc.picard_tol))[1]
        col = picard_delta_column(p, trace, eps)
        out.append(info("continuity.delta_column_final", ANCHOR["continuity"], col[-1],
                        f"{len(col)} iterations; diagnostic only"))
    return out


# -- smoothness ---------------------------------------------------------------

def _jacobian_probes(sc: Scenario, rng: np.random.Generator) -> list[tuple[float, np.ndarray]]:
    lo, hi = sc.probes.jacobian_box
    times = sc.probes.jacobian_times
    return [(float(times[k % len(times)]), rng.uniform(lo, hi, sc.dim)) for k in range(sc.probes.n_jacobian)]


def variational_fd_entry(p: ConjugacyProblem, probes) -> ReportEntry:
    """Co-integrated variational matrix against central differences of the flow."""
    tp = _tight(p)
    worst = 0.0
    for t, eta in probes:
        tau = 0.0
        J = variational_y(p, t, tau, eta)
        h = 1e-5 * (1.0 + np.linalg.norm(eta))
        cols = []
        for i in range(p.dim):
            e = np.zeros(p.dim)
            e[i] = h
            cols.append((flow_y(tp, t, tau, eta + e)[0] - flow_y(tp, t, tau, eta - e)[0]) / (2 * h))
        fd = np.column_stack(cols)
        worst = max(worst, float(np.max(np.abs(J - fd))) / max(1e-300, float(np.max(np.abs(J)))))
    return check_le("flow.variational_fd", ANCHOR["MDE1"], worst, TAU_JAC, f"{len(probes)} probes, relative")


def smoothness_entries(sc: Scenario, rng: np.random.Generator) -> list[ReportEntry]:
    p = sc.problem
    if not sc.differentiable:
        return [info("regularity.not_differentiable", ANCHOR["jacobiano-G"], sc.r,
                     "smoothness order 0; Jacobian checks skipped")]
    probes = _jacobian_probes(sc, rng)
    out = check_jacobians(p, probes)
    out.append(variational_fd_entry(p, probes[:6]))
    out += properness_check(p, 3.0, (0.5, 5.0, 10.0, 50.0))
    if sc.r >= 2:
        out.append(check_hessian_symmetry(p, probes[:6]))
    return out


# -- stability ----------------------------------------------------------------

def _equilibrium(p: ConjugacyProblem, guess, grid):
    try:
        return find_equilibrium(p, guess, grid)
    except NewtonDiverged as exc:
        return exc


def stability_entries(sc: Scenario, rng: np.random.Generator) -> list[ReportEntry]:
    p = sc.problem
    horizon = sc.probes.horizon
    grid = np.linspace(0.0, horizon, 21)
    guess = sc.probes.equilibrium_guess if sc.probes.equilibrium_guess is not None else np.zeros(p.dim)
    found = _equilibrium(p, guess, grid)
    out: list[ReportEntry] = []
    if isinstance(found, NewtonDiverged):
        out.append(info("stability.newton_diverged", ANCHOR["equilibrio"], math.nan, str(found)))
    else:
        out += equilibrium_entries(p, found)

    Q = QSpec.constant(sc.Q)
    ics = sc.probes.states[:8]
    if isinstance(found, EquilibriumCandidate):
        others = [_equilibrium(p, s * 10.0 * np.ones(p.dim), grid) for s in (1.0, -1.0)]
        for k, e in enumerate(others):
            if isinstance(e, EquilibriumCandidate):
                ent = check_uniqueness(p, found, e)
                out.append(ReportEntry(f"{ent.check_id}[start{k}]", ent.anchor, ent.measured, ent.bound,
                                       ent.passed, f"{ent.note}; Newton start {10.0 * (1 - 2 * k):+g}"))
            else:
                out.append(info(f"stability.multistart_unaccepted[start{k}]", ANCHOR["UPF"], math.nan,
                                "Newton from a distant start did not produce an accepted equilibrium"))
        out += equilibrium_limits(p, found, [t for t in (5.0, 10.0, 20.0) if t <= sc.t_max])
        q = translate_system(p, found)
        out.append(check_translated_origin(q, np.linspace(0.0, sc.t_max, 64)))
        out += uas_empirical(q, sc.probes.uas_eps, sc.probes.uas_c, ics, horizon=horizon)
        cert = lyapunov_certificate(p.linear, Q, gamma=q.gamma, cfg=p.cfg)
        out += check_P_bounds(cert, (0.0, 1.0, 5.0))
        trajectories = [flow_sample(q, 0.0, v, horizon) for v in ics]
        out += lyapunov_derivative_check(cert, q, trajectories)
    else:
        cert = lyapunov_certificate(p.linear, Q, gamma=p.gamma, cfg=p.cfg)
        out += check_P_bounds(cert, (0.0, 1.0, 5.0))
        out.append(check_matrix_identity(p.linear, cert, (0.0, 1.0, 5.0)))
        out.append(info("lyapunov.margin", ANCHOR["lyap-decrease"], cert.decay_margin,
                        "no equilibrium to translate to; decrease along trajectories not checked"))
    out += comparative_conditions(p)
    return out


_RUNNERS = {
    "conjugacy": lambda sc, rng, scale: conjugacy_entries(sc, rng, scale),
    "continuity": lambda sc, rng, scale: continuity_entries(sc, rng),
    "smoothness": lambda sc, rng, scale: smoothness_entries(sc, rng),
    "stability": lambda sc, rng, scale: stability_entries(sc, rng),
}


def run_suite(sc: Scenario, suite: str = "all", seed: int = DEFAULT_SEED) -> CertificateReport:
    """Run one suite (or all) and collect a deterministic report."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    scale = tol_scale()
    env = {
        "seed": int(seed),
        "suite": suite,
        "rtol": sc.cfg.rtol,
        "atol": sc.cfg.atol,
        "picard_tol": sc.picard_tol,
        "norm": "operator 2-norm",
        "tol_scale": scale,
        "backend": BACKEND,
        "conjlab_version": __version__,
    }
    report = CertificateReport(sc.name, environment=env)
    report.extend(certificate_entries(sc, seed))
    names = [s for s in SUITES if s != "all"] if suite == "all" else [suite]
    for name in names:
        report.extend(_RUNNERS[name](sc, _rng(seed, name), scale))
    return report


# -- plot data ----------------------------------------------------------------

QUANTITIES = ("theta", "C", "Henv", "V", "trajectory")


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_plotdata(sc: Scenario, quantity: str, t0: float, t1: float, n: int) -> str:
    """Long-format CSV with header ``t,quantity,value,scenario``."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {', '.join(QUANTITIES)}")
    if n < 0 or t0 < 0 or t1 < t0:
        raise ValueError("need 0 <= t0 <= t1 and n >= 0")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "quantity", "value", "scenario"])
    if n == 0:
        return buf.getvalue()
    p = sc.problem
    ts = np.linspace(t0, t1, n) if n > 1 else np.array([t0])
    rows: list[tuple[float, str, float]] = []
    if quantity == "theta":
        rows = [(t, "theta", theta(p, t)) for t in ts]
    elif quantity == "C":
        rows = [(t, "C", lipschitz_factor_C(p, t)) for t in ts]
    elif quantity == "Henv":
        states = sc.probes.states[:8]
        for t in ts:
            env = max(float(np.linalg.norm(H(p, t, v) - v)) for v in states)
            rows.append((t, "H_minus_id", env))
            rows.append((t, "radius", p.proximity_radius))
    elif quantity in ("V", "trajectory"):
        x0 = sc.probes.states[0]
        target = p
        guess = sc.probes.equilibrium_guess if sc.probes.equilibrium_guess is not None else np.zeros(p.dim)
        found = _equilibrium(p, guess, np.linspace(0.0, max(t1, 1.0), 21))
        if isinstance(found, EquilibriumCandidate):
            target = translate_system(p, found)
        samp = flow_sample(target, t0, x0, t1) if t1 > t0 else None
        cert = lyapunov_certificate(p.linear, QSpec.constant(sc.Q), gamma=target.gamma, cfg=p.cfg) \
            if quantity == "V" else None
        for t in ts:
            x = samp(t) if samp is not None else np.asarray(x0, dtype=float)
            if cert is not None:
                rows.append((t, "V", float(x @ cert.P_eval(t) @ x)))
            else:
                for i, xi in enumerate(x):
                    rows.append((t, f"x{i}", float(xi)))
    for t, q, v in rows:
        w.writerow([_fmt(t), q, _fmt(v), sc.name])
    return buf.getvalue()


__all__ = ["DEFAULT_SEED", "SUITES", "QUANTITIES", "run_suite", "emit_plotdata", "certificate_entries",
           "tol_scale", "conjugacy_entries", "continuity_entries", "smoothness_entries", "stability_entries"]
