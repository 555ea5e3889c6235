"""The maps H and G, the fixed point z*, the integral w*, and their checks.

Every map has two evaluation paths. The fast one composes flows:
H(t, xi) = y(t, 0, Phi(0, t) xi) and G(t, eta) = Phi(t, 0) y(0, t, eta).
The literal one builds the correction term itself: a Picard iteration of the
integral operator Gamma for H, and the integral w* for G. Agreement between
the two is the main consistency oracle of the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from ._kernels_py import dense_eval_many
from .anchors import ANCHOR
from .errors import NoConvergence
from .kernels import KIND_ADJ, KIND_PIC, KIND_WAUG
from .linear_flow import TAU_NUM, adjoint_sample, linear_sample, propagate
from .nonlinear_flow import TAU_REL, ConjugacyProblem, flow_sample, flow_y
from .ode_core import FlowSample, integrate_model, quad
from .report import ReportEntry, check_le

TAU_EQUIV = 1e-7
TAU_INV = 1e-6
TAU_CONJ = 1e-6

Path = Literal["flow_composition", "integral_definition"]
FLOW = "flow_composition"
INTEGRAL = "integral_definition"


@dataclass(frozen=True)
class PicardConfig:
    tol_fix: float = 1e-10
    max_iter: int = 200
    grid_pts: int = 257
    remesh_above: float = 10.0  # re-mesh when a fixed-mesh step exceeds this error ratio

    def __post_init__(self):
        if not self.tol_fix > 0:
            raise ValueError("tol_fix must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.grid_pts < 2:
            raise ValueError("grid_pts must be >= 2")


DEFAULT_PICARD = PicardConfig()


@dataclass
class PicardTrace:
    """Per-iteration sup-norm differences |z_{j+1} - z_j| on the node grid.

    ``diffs`` are net of the round-off floor (see :func:`picard`); ``raw_diffs``
    are the plain differences.
    """

    diffs: list[float] = field(default_factory=list)
    raw_diffs: list[float] = field(default_factory=list)
    remeshes: int = 0
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.diffs)

    @property
    def ratios(self) -> list[float]:
        d = self.diffs
        return [d[j + 1] / d[j] for j in range(len(d) - 1) if d[j] > 0]

    def contraction_ratios(self, floor: float = 1e-13) -> list[float]:
        """Ratios restricted to differences above the round-off floor."""
        d = self.diffs
        return [d[j + 1] / d[j] for j in range(len(d) - 1) if d[j] > floor and d[j + 1] > floor]

    def error_model_excess(self, q: float, floor: float = 1e-13) -> float:
        """max_j  d_j - q^j/(1-q) d_0 ; nonpositive when the geometric model holds."""
        if not self.diffs:
            return 0.0
        d0 = self.diffs[0]
        return max(dj - (q ** j / (1.0 - q)) * d0 - floor for j, dj in enumerate(self.diffs))


@dataclass(frozen=True)
class PicardResult:
    value: np.ndarray
    sample: FlowSample | None
    trace: PicardTrace
    dim: int

    def __call__(self, s: float) -> np.ndarray:
        """z*(s) for s in [0, t]."""
        if self.sample is None:
            return np.zeros(self.dim)
        return self.sample(s)[self.dim:]


@dataclass(frozen=True)
class MapEvaluation:
    t: float
    input: np.ndarray
    output: np.ndarray
    path: str
    residual_vs_other_path: float | None = None


def _nodes(t: float, pc: PicardConfig) -> np.ndarray:
    return np.linspace(0.0, t, pc.grid_pts)


def _u_on_nodes(sample: FlowSample, nodes: np.ndarray, n: int) -> np.ndarray:
    return dense_eval_many(sample.sgrid, sample.values, sample.cont, nodes)[:, n:]


def _sup_diff(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(a - b, axis=1)))


def _noise_floor(p: ConjugacyProblem, sample: FlowSample, nodes: np.ndarray) -> np.ndarray:
    """Per-node size of Gamma-differences that floating point cannot resolve.

    Where |x(s)| is large, x + phi is only known to within ulp(x), so f
    (gamma-Lipschitz) can change by gamma * ulp between iterates that differ
    below that level. Integrated against |Phi| <= K this gives the bound below.
    """
    n = p.dim
    x = np.linalg.norm(dense_eval_many(sample.sgrid, sample.values, sample.cont, nodes)[:, :n], axis=1)
    acc = np.zeros_like(x)
    for k in range(1, x.size):
        dt = nodes[k] - nodes[k - 1]
        decay = np.exp(-p.alpha * dt)
        acc[k] = decay * acc[k - 1] + 0.5 * dt * (decay * x[k - 1] + x[k])
    return 8.0 * p.K * p.gamma * np.finfo(float).eps * acc


def picard(p: ConjugacyProblem, t: float, tau: float, xi, pc: PicardConfig = DEFAULT_PICARD) -> PicardResult:
    """Fixed point of Gamma_(tau, xi) on [0, t], iterated from zero.

    Each application of Gamma integrates the pair (x, u) with
    x' = A x and u' = A u + f(s, x + phi(s)) from u(0) = 0, where phi is the
    dense previous iterate; u(s) then equals the Gamma integral at s. The
    mesh chosen adaptively in the first iteration is reused afterwards, so the
    iterates are those of one fixed discrete operator.
    """
    n = p.dim
    trace = PicardTrace()
    if t == 0.0:
        trace.diffs.append(0.0)
        trace.raw_diffs.append(0.0)
        trace.converged = True
        return PicardResult(np.zeros(n), None, trace, n)
    x0 = propagate(p.linear, 0.0, tau, xi, p.cfg)
    y0 = np.concatenate((x0, np.zeros(n)))
    nodes = _nodes(t, pc)

    sample = integrate_model(KIND_PIC, p.model, 0.0, y0, t, p.cfg)
    mesh = sample.sgrid
    floor = _noise_floor(p, sample, nodes)

    def record(a, b):
        d = np.linalg.norm(a - b, axis=1)
        trace.raw_diffs.append(float(np.max(d)))
        trace.diffs.append(float(np.max(np.maximum(d - floor, 0.0))))

    prev = np.zeros((nodes.size, n))
    cur = _u_on_nodes(sample, nodes, n)
    record(cur, prev)
    while trace.diffs[-1] > pc.tol_fix:
        if trace.iterations >= pc.max_iter:
            raise NoConvergence(f"Picard iteration did not reach {pc.tol_fix:g} in {pc.max_iter} steps",
                                trace=trace)
        phi = sample.component(n, 2 * n)
        sample = integrate_model(KIND_PIC, p.model, 0.0, y0, t, p.cfg, phi=phi, mesh=mesh)
        if sample.stats.get("maxerr", 0.0) > pc.remesh_above:
            sample = integrate_model(KIND_PIC, p.model, 0.0, y0, t, p.cfg, phi=phi)
            mesh = sample.sgrid
            trace.remeshes += 1
        prev, cur = cur, _u_on_nodes(sample, nodes, n)
        record(cur, prev)
    trace.converged = True
    return PicardResult(sample.terminal[n:], sample, trace, n)


def z_star(p: ConjugacyProblem, t: float, tau: float, xi,
           pc: PicardConfig = DEFAULT_PICARD) -> tuple[np.ndarray, PicardTrace]:
    """z*(t; (tau, xi)) and the iteration trace."""
    if t < 0 or tau < 0:
        raise ValueError("times must be >= 0")
    res = picard(p, t, tau, p.vec(xi), pc)
    return res.value, res.trace


def _y_callable(p: ConjugacyProblem, tau: float, eta, lo: float, hi: float) -> Callable[[float], np.ndarray]:
    """Dense s -> y(s, tau, eta) covering [lo, hi]."""
    parts = []
    if lo < tau:
        parts.append(flow_sample(p, tau, eta, lo))
    if hi > tau:
        parts.append(flow_sample(p, tau, eta, hi))
    eta = p.vec(eta)

    def y(s: float) -> np.ndarray:
        if s == tau:
            return eta.copy()
        for part in parts:
            a, b = part.span
            if a <= s <= b:
                return part(s)
        raise ValueError(f"s={s} outside [{lo}, {hi}]")
    return y


def w_star(p: ConjugacyProblem, t: float, tau: float, eta,
           method: Literal["ivp", "quad"] = "ivp", tol: float = 1e-11) -> np.ndarray:
    """w*(t; (tau, eta)) = -int_0^t Phi(t, s) f(s, y(s, tau, eta)) ds.

    ``ivp`` co-integrates y and w' = A w - f(s, y) from s = 0, starting at
    y(0, tau, eta); ``quad`` evaluates the integral directly on dense samples
    of s -> Phi(t, s) and s -> y(s, tau, eta).
    """
    n = p.dim
    eta = p.vec(eta)
    if t == 0.0:
        return np.zeros(n)
    if method == "ivp":
        y_at_0 = flow_y(p, 0.0, tau, eta)[0]
        aug = integrate_model(KIND_WAUG, p.model, 0.0, np.concatenate((y_at_0, np.zeros(n))), t, p.cfg)
        return aug.terminal[n:]
    if method == "quad":
        psi = adjoint_sample(p.linear, t, 0.0, p.cfg)
        y = _y_callable(p, tau, eta, 0.0, t)

        def integrand(s):
            return -psi(s).reshape(n, n) @ p.pert(s, y(s))
        return np.asarray(quad(integrand, 0.0, t, tol=tol), dtype=float).reshape(n)
    raise ValueError(f"unknown method {method!r}")


def _piecewise_linear_phi(nodes: np.ndarray, values: np.ndarray):
    """Exact dense-output encoding of a piecewise-linear function of s."""
    m = nodes.size - 1
    cont = np.zeros((m, 5, values.shape[1]))
    cont[:, 0] = values[:-1]
    cont[:, 1] = values[1:] - values[:-1]
    return np.ascontiguousarray(nodes), np.ascontiguousarray(values), cont


def apply_gamma(p: ConjugacyProblem, t: float, tau: float, xi, nodes: np.ndarray, values: np.ndarray,
                method: Literal["ivp", "quad"] = "ivp", tol: float = 1e-12) -> np.ndarray:
    """Gamma_(tau, xi) applied to the piecewise-linear phi through (nodes, values).

    Returns (Gamma phi)(s) at every node. ``nodes`` must start at 0 and end at t.
    """
    n = p.dim
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float).reshape(nodes.size, n)
    x0 = propagate(p.linear, 0.0, tau, xi, p.cfg)
    if method == "ivp":
        # one integration per segment so no step straddles a kink of phi
        res = np.zeros((nodes.size, n))
        state = np.concatenate((x0, np.zeros(n)))
        for k in range(nodes.size - 1):
            seg = _piecewise_linear_phi(nodes[k:k + 2] - nodes[k], values[k:k + 2])
            state = integrate_model(KIND_PIC, p.model, nodes[k], state, nodes[k + 1], p.cfg, phi=seg).terminal
            res[k + 1] = state[n:]
        return res
    if method == "quad":
        xs = linear_sample(p.linear, 0.0, x0, t, p.cfg)
        # (Gamma phi)(s_k) = Phi(s_k, 0) * sum of panel integrals of Phi(0, r) f(r, x(r) + phi(r))
        inv = integrate_model(KIND_ADJ, p.linear.model, 0.0, np.eye(n).ravel(), t, p.cfg)  # r -> Phi(0, r)
        fwd = linear_sample(p.linear, 0.0, np.eye(n), t, p.cfg)
        res = np.zeros((nodes.size, n))
        acc = np.zeros(n)
        for k in range(nodes.size - 1):
            a, b = nodes[k], nodes[k + 1]
            va, vb = values[k], values[k + 1]

            def integrand(r, a=a, b=b, va=va, vb=vb):
                w = (r - a) / (b - a)
                ph = (1.0 - w) * va + w * vb
                return inv(r).reshape(n, n) @ p.pert(r, xs(r) + ph)
            acc = acc + np.asarray(quad(integrand, a, b, tol=tol * (b - a) / max(t, 1e-300)), dtype=float)
            res[k + 1] = fwd(b).reshape(n, n) @ acc
        return res
    raise ValueError(f"unknown method {method!r}")


def _short(t: float, v: np.ndarray, path: str) -> MapEvaluation:
    v = np.array(v, dtype=float)
    return MapEvaluation(0.0 if t == 0 else t, v, v.copy(), path, 0.0)


def _h_flow(p: ConjugacyProblem, t: float, xi: np.ndarray) -> np.ndarray:
    x0 = propagate(p.linear, 0.0, t, xi, p.cfg)
    return flow_y(p, t, 0.0, x0)[0]


def _h_integral(p: ConjugacyProblem, t: float, xi: np.ndarray, pc: PicardConfig) -> np.ndarray:
    return xi + picard(p, t, t, xi, pc).value


def _g_flow(p: ConjugacyProblem, t: float, eta: np.ndarray) -> np.ndarray:
    y0 = flow_y(p, 0.0, t, eta)[0]
    return propagate(p.linear, t, 0.0, y0, p.cfg)


def _g_integral(p: ConjugacyProblem, t: float, eta: np.ndarray) -> np.ndarray:
    return eta + w_star(p, t, t, eta)


def H_map(p: ConjugacyProblem, t: float, xi, path: Path = FLOW, cross_check: bool = False,
          pc: PicardConfig = DEFAULT_PICARD) -> MapEvaluation:
    """H(t, xi) along ``path``; with ``cross_check`` also the other path's distance."""
    xi = p.vec(xi)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return _short(t, xi, path)
    if path == FLOW:
        out = _h_flow(p, t, xi)
        other = _h_integral(p, t, xi, pc) if cross_check else None
    elif path == INTEGRAL:
        out = _h_integral(p, t, xi, pc)
        other = _h_flow(p, t, xi) if cross_check else None
    else:
        raise ValueError(f"unknown path {path!r}")
    res = None if other is None else float(np.linalg.norm(out - other))
    return MapEvaluation(t, xi, out, path, res)


def G_map(p: ConjugacyProblem, t: float, eta, path: Path = FLOW, cross_check: bool = False) -> MapEvaluation:
    """G(t, eta) along ``path``; with ``cross_check`` also the other path's distance."""
    eta = p.vec(eta)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return _short(t, eta, path)
    if path == FLOW:
        out = _g_flow(p, t, eta)
        other = _g_integral(p, t, eta) if cross_check else None
    elif path == INTEGRAL:
        out = _g_integral(p, t, eta)
        other = _g_flow(p, t, eta) if cross_check else None
    else:
        raise ValueError(f"unknown path {path!r}")
    res = None if other is None else float(np.linalg.norm(out - other))
    return MapEvaluation(t, eta, out, path, res)


def H(p: ConjugacyProblem, t: float, xi) -> np.ndarray:
    return H_map(p, t, xi).output


def G(p: ConjugacyProblem, t: float, eta) -> np.ndarray:
    return G_map(p, t, eta).output


# -- checks ---------------------------------------------------------------

def check_bijection(p: ConjugacyProblem, t: float, samples: Sequence, tau: float = TAU_INV,
                    tag: str = "") -> list[ReportEntry]:
    hg = 0.0
    gh = 0.0
    for v in samples:
        v = p.vec(v)
        hg = max(hg, float(np.linalg.norm(H(p, t, G(p, t, v)) - v)))
        gh = max(gh, float(np.linalg.norm(G(p, t, H(p, t, v)) - v)))
    note = f"{len(samples)} states at t={t:g}"
    suffix = tag or f"t={t:g}"
    return [check_le(f"conjugacy.roundtrip_HG[{suffix}]", ANCHOR["bijective"], hg, tau, note),
            check_le(f"conjugacy.roundtrip_GH[{suffix}]", ANCHOR["bijective"], gh, tau, note)]


def solution_mapping_residuals(p: ConjugacyProblem, tau: float, xi, ts: Sequence[float],
                               pc: PicardConfig = DEFAULT_PICARD) -> tuple[float, float]:
    """Largest residuals of H[t, x(t)] = y(t, tau, H(tau, xi)) and G[t, y(t)] = Phi(t, tau) G(tau, xi).

    The left-hand maps use the literal paths (Picard for H, w* for G) so the
    identities are not satisfied by construction.
    """
    xi = p.vec(xi)
    h_tau = H_map(p, tau, xi, INTEGRAL, pc=pc).output
    g_tau = G_map(p, tau, xi, INTEGRAL).output
    r1 = 0.0
    r2 = 0.0
    for t in ts:
        x_t = propagate(p.linear, t, tau, xi, p.cfg)
        lhs = H_map(p, t, x_t, INTEGRAL, pc=pc).output
        rhs = flow_y(p, t, tau, h_tau)[0] if t != tau else h_tau
        r1 = max(r1, float(np.linalg.norm(lhs - rhs)))
        y_t = flow_y(p, t, tau, xi)[0] if t != tau else xi
        lhs = G_map(p, t, y_t, INTEGRAL).output
        rhs = propagate(p.linear, t, tau, g_tau, p.cfg)
        r2 = max(r2, float(np.linalg.norm(lhs - rhs)))
    return r1, r2


def check_solution_mapping(p: ConjugacyProblem, tau: float, xi, ts: Sequence[float], tau_conj: float = TAU_CONJ,
                           tag: str = "") -> list[ReportEntry]:
    r1, r2 = solution_mapping_residuals(p, tau, xi, ts)
    note = f"tau={tau:g}, xi={np.round(p.vec(xi), 6).tolist()}, {len(ts)} times"
    suffix = f"[{tag}]" if tag else ""
    return [check_le(f"conjugacy.conj_H{suffix}", ANCHOR["conj1"], r1, tau_conj, note),
            check_le(f"conjugacy.conj_G{suffix}", ANCHOR["conj2"], r2, tau_conj, note)]


def proximity(p: ConjugacyProblem, evaluations: Sequence[MapEvaluation], which: str,
              tau: float = TAU_NUM) -> ReportEntry:
    worst = max((float(np.linalg.norm(e.output - e.input)) for e in evaluations), default=0.0)
    anchor = ANCHOR["proximity"]
    return check_le(f"conjugacy.proximity_{which}", anchor, worst, p.proximity_radius + tau,
                    f"sup |{which}(t,v) - v| over {len(evaluations)} evaluations; radius K*mu/alpha")


def path_equivalence(evaluations: Sequence[MapEvaluation], which: str, tau: float = TAU_EQUIV) -> ReportEntry:
    worst = max((e.residual_vs_other_path for e in evaluations if e.residual_vs_other_path is not None),
                default=0.0)
    anchor = ANCHOR["Homeo-H"] if which == "H" else ANCHOR["Homeo-G"]
    return check_le(f"conjugacy.path_equivalence_{which}", anchor, worst, tau,
                    f"flow composition vs literal definition, {len(evaluations)} evaluations")


def random_pl_function(rng: np.random.Generator, nodes: np.ndarray, dim: int, bound: float = 3.0) -> np.ndarray:
    return rng.uniform(-bound, bound, (nodes.size, dim))


def contraction_ratio(p: ConjugacyProblem, t: float, tau: float, xi, rng: np.random.Generator,
                      n_nodes: int = 33, method: Literal["ivp", "quad"] = "quad") -> float:
    """sup|Gamma phi1 - Gamma phi2| / sup|phi1 - phi2| for one random pair."""
    nodes = np.linspace(0.0, t, n_nodes)
    a = random_pl_function(rng, nodes, p.dim)
    b = random_pl_function(rng, nodes, p.dim)
    ga = apply_gamma(p, t, tau, xi, nodes, a, method)
    gb = apply_gamma(p, t, tau, xi, nodes, b, method)
    # sup of a piecewise-linear difference is attained at a node
    return _sup_diff(ga, gb) / _sup_diff(a, b)


def check_contraction(p: ConjugacyProblem, rng: np.random.Generator, n_pairs: int = 4, t: float = 4.0,
                      method: Literal["ivp", "quad"] = "quad") -> ReportEntry:
    worst = 0.0
    for _ in range(n_pairs):
        xi = rng.uniform(-2, 2, p.dim)
        worst = max(worst, contraction_ratio(p, t, t, xi, rng, method=method))
    return check_le("conjugacy.gamma_contraction", ANCHOR["gamma-op"], worst, p.q * (1 + TAU_REL),
                    f"{n_pairs} random piecewise-linear pairs on [0,{t:g}]; bound K*gamma/alpha")


def check_picard_traces(p: ConjugacyProblem, traces: Sequence[PicardTrace]) -> list[ReportEntry]:
    ratios = [r for tr in traces for r in tr.contraction_ratios()]
    worst_ratio = max(ratios, default=0.0)
    excess = max((tr.error_model_excess(p.q) for tr in traces), default=0.0)
    return [
        check_le("conjugacy.picard_ratio", ANCHOR["gamma-op"], worst_ratio, p.q + 0.05,
                 f"successive-difference ratios over {len(traces)} traces; bound K*gamma/alpha + 0.05"),
        check_le("conjugacy.picard_error_model", ANCHOR["gamma-op"], excess, 0.0,
                 "max_j d_j - q^j d_0/(1-q)"),
    ]


def check_translation_identity(p: ConjugacyProblem, tau: float, xi, rs: Sequence[float], ss: Sequence[float],
                               pc: PicardConfig = DEFAULT_PICARD, tol: float = TAU_EQUIV) -> ReportEntry:
    """z*(s; (tau, xi)) = z*(s; (r, x(r, tau, xi))) at sampled (r, s)."""
    xi = p.vec(xi)
    worst = 0.0
    for s in ss:
        base = picard(p, s, tau, xi, pc).value
        for r in rs:
            x_r = propagate(p.linear, r, tau, xi, p.cfg)
            worst = max(worst, float(np.linalg.norm(picard(p, s, r, x_r, pc).value - base)))
    return check_le("conjugacy.translation_identity", ANCHOR["identity1"], worst, tol,
                    f"{len(rs)} anchors x {len(ss)} times")


def check_w_star(p: ConjugacyProblem, probes: Sequence[tuple[float, float, np.ndarray]],
                 tol: float = TAU_EQUIV) -> ReportEntry:
    """IVP vs direct quadrature for w*."""
    worst = 0.0
    for t, tau, eta in probes:
        a = w_star(p, t, tau, eta, "ivp")
        b = w_star(p, t, tau, eta, "quad")
        worst = max(worst, float(np.linalg.norm(a - b)))
    return check_le("conjugacy.w_star_quadrature", ANCHOR["w-star"], worst, tol,
                    f"{len(probes)} probes, IVP vs quadrature")


__all__ = [
    "PicardConfig", "PicardTrace", "PicardResult", "MapEvaluation", "FLOW", "INTEGRAL",
    "picard", "z_star", "w_star", "apply_gamma", "H_map", "G_map", "H", "G",
    "check_bijection", "check_solution_mapping", "solution_mapping_residuals", "proximity",
    "path_equivalence", "contraction_ratio", "check_contraction", "check_picard_traces",
    "check_translation_identity", "check_w_star",
]
