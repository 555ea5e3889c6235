"""Pure-Python (numpy) integration kernels.

This module is the fallback used when the compiled ``_kernels`` extension is
unavailable, and the only engine for user-supplied Python callables. The
step-size controller is kept in lock-step with ``_kernels.pyx`` so both
backends accept and reject the same steps up to floating-point round-off.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NonFiniteState, StepBudgetExceeded, StepSizeUnderflow

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
D1, D3, D4, D5, D6, D7 = (-12715105075.0 / 11282082432.0, 87487479700.0 / 32700410799.0,
                          -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
                          -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0)
STAGE_C = (0.0, C2, C3, C4, C5, 1.0, 1.0)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0

KIND_LIN = 0
KIND_ADJ = 1
KIND_NL = 2
KIND_VAR = 3
KIND_WAUG = 4
KIND_PIC = 5

BACKEND = "python"


def _norm(v: np.ndarray) -> float:
    return math.sqrt(float(np.dot(v, v)))


def dopri(rhs, span, y0, rtol, atol, h_init, h_max, max_steps, mesh=None):
    """Integrate ``y' = rhs(s, y)`` on ``[0, span]``; see :func:`_dopri`."""
    # overflow inside a trial step is caught below and reported as NonFiniteState
    with np.errstate(over="ignore", invalid="ignore"):
        return _dopri(rhs, span, y0, rtol, atol, h_init, h_max, max_steps, mesh)


def _dopri(rhs, span, y0, rtol, atol, h_init, h_max, max_steps, mesh=None):
    """Integrate ``y' = rhs(s, y)`` on ``[0, span]``.

    Error control is norm-wise: a step is accepted when
    ``|err|_2 <= atol + rtol * max(|y_old|_2, |y_new|_2)``. With ``mesh`` the
    steps are taken exactly on the given nodes and never rejected.

    Returns ``(sgrid, states, cont, stats)`` where ``cont`` holds the five
    dense-output coefficient vectors of every step.
    """
    y = np.array(y0, dtype=float).ravel()
    grid = [0.0]
    states = [y.copy()]
    conts = []
    nfev = 0
    nrej = 0
    maxerr = 0.0
    if span <= 0.0:
        return (np.array(grid), np.array(states), np.zeros((0, 5, y.size)),
                dict(nfev=0, naccept=0, nreject=0, maxerr=0.0))
    k1 = rhs(0.0, y)
    nfev += 1
    s = 0.0
    if mesh is not None:
        mesh = np.asarray(mesh, dtype=float)
        nsteps = mesh.size - 1
    else:
        h = min(h_init, h_max, span)
    steps = 0
    last_rejected = False
    while True:
        if mesh is not None:
            if steps >= nsteps:
                break
            s = mesh[steps]
            h = mesh[steps + 1] - s
            last = steps + 1 == nsteps
        else:
            if s >= span:
                break
            if steps >= max_steps:
                raise StepBudgetExceeded(f"step budget {max_steps} exhausted at s={s:.6g} of {span:.6g}")
            last = False
            if s + 1.01 * h >= span:
                h = span - s
                last = True
        steps += 1
        k2 = rhs(s + C2 * h, y + h * (A21 * k1))
        k3 = rhs(s + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = rhs(s + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(s + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(s + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        s1 = span if last else s + h
        k7 = rhs(s1, y1)
        nfev += 6
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sk = atol + rtol * max(_norm(y), _norm(y1))
        err = _norm(errv) / sk
        if not (math.isfinite(err) and np.all(np.isfinite(y1))):
            raise NonFiniteState(f"non-finite state near s={s:.6g}")
        if mesh is not None or err <= 1.0:
            if mesh is not None and err > maxerr:
                maxerr = err
            ydiff = y1 - y
            bspl = h * k1 - ydiff
            conts.append((y.copy(), ydiff, bspl, ydiff - h * k7 - bspl,
                          h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)))
            y = y1
            k1 = k7
            s = s1
            grid.append(s)
            states.append(y.copy())
            if mesh is None:
                fac = FAC_MAX if err == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
                if last_rejected:
                    fac = min(fac, 1.0)
                h = min(h * fac, h_max)
                last_rejected = False
        else:
            nrej += 1
            last_rejected = True
            h = h * max(FAC_MIN, SAFETY * err ** -0.2)
            if h <= 1e-14 * max(1.0, abs(s)):
                raise StepSizeUnderflow(f"step size underflow at s={s:.6g}")
    cont = np.array(conts, dtype=float) if conts else np.zeros((0, 5, y.size))
    return (np.array(grid), np.array(states), cont,
            dict(nfev=nfev, naccept=len(conts), nreject=nrej, maxerr=maxerr))


def dense_eval(sgrid, states, cont, s, hint: int = -1):
    """Evaluate a dense sample at integration coordinate ``s``."""
    m = sgrid.size - 1
    if m == 0:
        return states[0].copy()
    if 0 <= hint < m and sgrid[hint] <= s <= sgrid[hint + 1]:
        k = hint
    else:
        k = int(np.searchsorted(sgrid, s, side="right")) - 1
        k = min(max(k, 0), m - 1)
    if s == sgrid[k]:
        return states[k].copy()
    if s == sgrid[k + 1]:
        return states[k + 1].copy()
    h = sgrid[k + 1] - sgrid[k]
    th = (s - sgrid[k]) / h
    th1 = 1.0 - th
    r = cont[k]
    return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])))


def dense_eval_many(sgrid, states, cont, s):
    """Vectorised :func:`dense_eval` for an array of coordinates."""
    s = np.asarray(s, dtype=float)
    m = sgrid.size - 1
    if m == 0:
        return np.repeat(states[:1], s.size, axis=0)
    k = np.clip(np.searchsorted(sgrid, s, side="right") - 1, 0, m - 1)
    h = sgrid[k + 1] - sgrid[k]
    th = ((s - sgrid[k]) / h)[:, None]
    th1 = 1.0 - th
    r = cont[k]
    out = r[:, 0] + th * (r[:, 1] + th1 * (r[:, 2] + th * (r[:, 3] + th1 * r[:, 4])))
    at_left = s == sgrid[k]
    at_right = s == sgrid[k + 1]
    out[at_left] = states[k[at_left]]
    out[at_right] = states[k[at_right] + 1]
    return out


def make_rhs(kind, model, t0, direction, phi=None):
    """Build the integration-coordinate right-hand side for a kernel kind."""
    n = model.dim
    A = model.A
    f = model.f
    d = float(direction)

    if kind == KIND_LIN:
        def rhs(s, y):
            X = y.reshape(n, -1)
            return d * (A(t0 + d * s) @ X).ravel()
    elif kind == KIND_ADJ:
        def rhs(s, y):
            P = y.reshape(-1, n)
            return -d * (P @ A(t0 + d * s)).ravel()
    elif kind == KIND_NL:
        def rhs(s, y):
            t = t0 + d * s
            return d * (A(t) @ y + f(t, y))
    elif kind == KIND_VAR:
        Df = model.Df

        def rhs(s, y):
            t = t0 + d * s
            x = y[:n]
            J = y[n:].reshape(n, n)
            At = A(t)
            out = np.empty_like(y)
            out[:n] = At @ x + f(t, x)
            out[n:] = ((At + Df(t, x)) @ J).ravel()
            return d * out
    elif kind == KIND_WAUG:
        def rhs(s, y):
            t = t0 + d * s
            At = A(t)
            fy = f(t, y[:n])
            return d * np.concatenate((At @ y[:n] + fy, At @ y[n:] - fy))
    elif kind == KIND_PIC:
        state = {"k": -1}
        if phi is not None:
            pg, ps, pc = phi

        def rhs(s, y):
            t = t0 + d * s
            At = A(t)
            x = y[:n]
            if phi is None:
                arg = x
            else:
                k = state["k"]
                if not (0 <= k < pg.size - 1 and pg[k] <= s <= pg[k + 1]):
                    k = min(max(int(np.searchsorted(pg, s, side="right")) - 1, 0), pg.size - 2)
                    state["k"] = k
                arg = x + dense_eval(pg, ps, pc, s, k)
            return d * np.concatenate((At @ x, At @ y[n:] + f(t, arg)))
    else:
        raise ValueError(f"unknown kernel kind {kind}")
    return rhs


def solve(kind, model, t0, y0, t1, rtol, atol, h_init, h_max, max_steps, phi=None, mesh=None):
    direction = 1.0 if t1 >= t0 else -1.0
    rhs = make_rhs(kind, model, t0, direction, phi=phi)
    return dopri(rhs, abs(t1 - t0), y0, rtol, atol, h_init, h_max, max_steps, mesh)
