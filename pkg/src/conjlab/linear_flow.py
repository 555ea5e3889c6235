"""Linear flow x' = A(t) x: transition matrices and the exponential-decay certificate."""
from __future__ import annotations

import math
import threading
from typing import Callable, Iterable

import numpy as np

from .anchors import ANCHOR
from .errors import CertificateRejected
from .kernels import KIND_ADJ, KIND_LIN
from .models import MatrixFunction, Model
from .ode_core import DEFAULT_CONFIG, FlowSample, IntegratorConfig, integrate_model
from .report import ReportEntry, check_le

EPS_CERT = 1e-9
TAU_UAS = 1e-7
TAU_NUM = 1e-7


def opnorm(m) -> float:
    """Operator 2-norm (largest singular value)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return float(np.linalg.svd(m, compute_uv=False)[0])


class LinearSystem:
    """A(t) together with user-certified constants M, K and alpha.

    ``M`` bounds the operator norm of A(t); ``K`` and ``alpha`` bound the
    transition matrix by ``K exp(-alpha (t - s))`` for ``t >= s >= 0``.
    Instances are treated as immutable; the transition cache is internal.
    """

    def __init__(self, A: MatrixFunction | Callable, M: float, K: float, alpha: float):
        M, K, alpha = float(M), float(K), float(alpha)
        if not K >= 1.0:
            raise CertificateRejected(f"amplitude K={K} violates K >= 1", "K >= 1", K)
        if not alpha > 0.0:
            raise CertificateRejected(f"decay rate alpha={alpha} violates alpha > 0", "α > 0", alpha)
        if not M > 0.0:
            raise CertificateRejected(f"bound M={M} violates M > 0", "M > 0", M)
        if alpha > M:
            raise CertificateRejected(f"alpha={alpha} exceeds M={M}", "α ≤ M", alpha / M)
        self.A = A
        self.M = M
        self.K = K
        self.alpha = alpha
        self.model = Model.build(A)
        self.dim = self.model.dim
        self._cache: dict = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        label = getattr(self.A, "label", "callable")
        return f"LinearSystem(A={label}, M={self.M}, K={self.K}, alpha={self.alpha})"

    def matrix(self, t: float) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.A(t), dtype=float))

    def uas_bound(self, t: float, s: float) -> float:
        return self.K * math.exp(-self.alpha * (t - s))


def _key(t: float, s: float, cfg: IntegratorConfig):
    return (round(float(t), 12), round(float(s), 12), cfg)


def transition(sys: LinearSystem, t: float, s: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Phi(t, s) from the matrix IVP X' = A X, X(s) = I."""
    if t < 0 or s < 0:
        raise ValueError(f"transition needs t, s >= 0, got t={t}, s={s}")
    n = sys.dim
    if t == s:
        return np.eye(n)
    key = _key(t, s, cfg)
    with sys._lock:
        hit = sys._cache.get(key)
    if hit is not None:
        return hit.copy()
    sample = integrate_model(KIND_LIN, sys.model, s, np.eye(n).ravel(), t, cfg)
    phi = sample.terminal.reshape(n, n)
    phi.setflags(write=False)
    with sys._lock:
        sys._cache.setdefault(key, phi)
    return phi.copy()


def propagate(sys: LinearSystem, t: float, s: float, x, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Phi(t, s) x for a single vector (cheaper than the full matrix)."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(sys.dim)
    if t == s:
        return x.copy()
    return integrate_model(KIND_LIN, sys.model, s, x, t, cfg).terminal


def linear_sample(sys: LinearSystem, s: float, x, t: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> FlowSample:
    """Dense sample of t -> Phi(t, s) x (x may be a matrix, stored row-major)."""
    x = np.asarray(x, dtype=float)
    return integrate_model(KIND_LIN, sys.model, s, x.ravel(), t, cfg)


def adjoint_sample(sys: LinearSystem, t: float, s_end: float,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> FlowSample:
    """Dense sample of s -> Phi(t, s) for s between t and s_end (flattened n*n)."""
    return integrate_model(KIND_ADJ, sys.model, t, np.eye(sys.dim).ravel(), s_end, cfg)


def verify_uas(sys: LinearSystem, grid: Iterable[tuple[float, float]], cfg: IntegratorConfig = DEFAULT_CONFIG,
               tau: float = TAU_UAS) -> ReportEntry:
    """Largest excess ``|Phi(t,s)| - K exp(-alpha(t-s))`` over the pairs."""
    worst = -math.inf
    where = None
    count = 0
    for t, s in grid:
        if not t >= s >= 0:
            raise ValueError(f"pair (t={t}, s={s}) violates t >= s >= 0")
        r = opnorm(transition(sys, t, s, cfg)) - sys.uas_bound(t, s)
        count += 1
        if r > worst:
            worst, where = r, (t, s)
    note = f"{count} pairs; worst at (t,s)={where}; 2-norm"
    return check_le("linear.uas_bound", ANCHOR["uas"], worst, tau, note)


def verify_norm_bound(sys: LinearSystem, ts: Iterable[float], eps: float = EPS_CERT) -> ReportEntry:
    worst = max(opnorm(sys.matrix(t)) for t in ts)
    return check_le("linear.sup_norm_A", ANCHOR["P1"], worst, sys.M * (1.0 + eps), "sampled sup of |A(t)|")


def cocycle_residual(sys: LinearSystem, triples, cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """max |Phi(t,s) Phi(s,r) - Phi(t,r)| / (1 + |Phi(t,r)|) over (t, s, r) triples."""
    worst = 0.0
    for t, s, r in triples:
        lhs = transition(sys, t, s, cfg) @ transition(sys, s, r, cfg)
        rhs = transition(sys, t, r, cfg)
        worst = max(worst, opnorm(lhs - rhs) / (1.0 + opnorm(rhs)))
    return worst


def verify_linear(sys: LinearSystem, t_max: float, rng: np.random.Generator,
                  cfg: IntegratorConfig = DEFAULT_CONFIG, n_pairs: int = 50) -> list[ReportEntry]:
    """Sampled certificate and structural checks for a linear system."""
    ts = np.linspace(0.0, t_max, 201)
    pairs = []
    for _ in range(n_pairs):
        a, b = sorted(rng.uniform(0.0, min(t_max, 20.0), size=2))
        pairs.append((float(b), float(a)))
    entries = [verify_norm_bound(sys, ts), verify_uas(sys, pairs, cfg)]

    triples = [tuple(float(v) for v in rng.uniform(0.0, min(t_max, 10.0), size=3)) for _ in range(8)]
    entries.append(check_le("linear.cocycle", ANCHOR["P2"], cocycle_residual(sys, triples, cfg), TAU_NUM,
                            f"{len(triples)} triples"))

    min_det = min(float(np.linalg.det(transition(sys, t, s, cfg))) for t, s in pairs)
    entries.append(ReportEntry("linear.det_positive", ANCHOR["det"], min_det, 0.0, min_det > 0.0,
                               "min det Phi(t,s) over UAS pairs; pass iff > 0"))

    worst = 0.0
    for t, s in pairs[:16]:
        x = rng.uniform(-2, 2, sys.dim)
        xb = x + rng.uniform(-0.1, 0.1, sys.dim)
        diff = np.linalg.norm(propagate(sys, t, s, x, cfg) - propagate(sys, t, s, xb, cfg))
        bound = math.exp(sys.M * abs(t - s)) * np.linalg.norm(x - xb)
        worst = max(worst, diff / bound)
    entries.append(check_le("linear.initial_data_growth", ANCHOR["linealCI"], worst, 1.0 + TAU_NUM,
                            "ratio |Phi(x - xb)| / (exp(M|t-s|)|x - xb|)"))
    return entries
