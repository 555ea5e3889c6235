"""Regenerate tests/golden/*.json from oracles that share no code with conjlab.

Flows use a fixed-step classical RK4 at h = 1e-4; constant-coefficient
transition and Lyapunov matrices come from scipy (expm,
solve_continuous_lyapunov); integrals are composite Simpson on the RK4 nodes.
Run from the repository root:  python3 scripts/make_golden.py
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

H_STEP = 1e-4


def rk4(rhs, t0, y0, t1, h=H_STEP):
    """Fixed-step RK4 from t0 to t1 (either direction); returns times and states."""
    n = max(1, int(round(abs(t1 - t0) / h)))
    dt = (t1 - t0) / n
    ts = t0 + dt * np.arange(n + 1)
    ys = np.empty((n + 1, np.size(y0)))
    y = np.array(y0, dtype=float).reshape(-1)
    ys[0] = y
    for k in range(n):
        t = ts[k]
        k1 = rhs(t, y)
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
    return ts, ys


def simpson(ts, vals):
    n = len(ts) - 1
    if n % 2:
        raise ValueError("need an even number of intervals")
    h = (ts[-1] - ts[0]) / n
    return h / 3 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum(axis=0) + 2 * vals[2:-1:2].sum(axis=0))


def jiang_f(t, y):
    return 0.2 * (math.pi / 2 - np.arctan(t + np.abs(y)))


def jiang_rhs(t, y):
    return -y + jiang_f(t, y)


def jiang_var_rhs(t, z):
    y, v = z[0], z[1]
    u = t + abs(y)
    dfy = -0.2 * np.sign(y) / (1 + u * u)
    return np.array([-y + jiang_f(t, y), (-1 + dfy) * v])


def sin_rhs(t, y):
    return -y + 0.2 * np.sin(y)


def build() -> dict:
    g = {}
    # y(5; 0, 0) for the arctan example
    g["jiang_flow_t5_tau0_eta0"] = {"value": [rk4(jiang_rhs, 0.0, [0.0], 5.0)[1][-1, 0]], "tol": 1e-8}

    # H(4, 0.7) = y(4, 0, Phi(0,4) 0.7) with Phi(0,4) = e^4
    g["jiang_H_t4_xi0.7"] = {"value": [rk4(jiang_rhs, 0.0, [math.exp(4) * 0.7], 4.0)[1][-1, 0]], "tol": 1e-8}

    # G(4, 0.7) = Phi(4,0) y(0, 4, 0.7)
    g["jiang_G_t4_eta0.7"] = {"value": [math.exp(-4) * rk4(jiang_rhs, 4.0, [0.7], 0.0)[1][-1, 0]], "tol": 1e-8}

    # z*(2; (2, 0)) = H(2, 0) - 0 = y(2, 0, 0)
    g["jiang_zstar_t2_tau2_xi0"] = {"value": [rk4(jiang_rhs, 0.0, [0.0], 2.0)[1][-1, 0]], "tol": 1e-8}

    # w*(3; (3, 0.5)) = -int_0^3 Phi(3,s) f(s, y(s, 3, 0.5)) ds
    ts, ys = rk4(jiang_rhs, 3.0, [0.5], 0.0)
    ts, ys = ts[::-1], ys[::-1, 0]
    integrand = np.exp(-(3.0 - ts)) * jiang_f(ts, ys)
    g["jiang_wstar_t3_tau3_eta0.5"] = {"value": [-simpson(ts, integrand)], "tol": 1e-8}

    # dG/deta at (2, 0.4) = Phi(2,0) dy(0, 2, eta)/deta
    z = rk4(jiang_var_rhs, 2.0, [0.4, 1.0], 0.0)[1][-1]
    g["jiang_JG_t2_eta0.4"] = {"value": [math.exp(-2) * z[1]], "tol": 1e-7}

    # y(5; 0, 1) for the scaled sine
    g["scaled_sin_flow_t5_tau0_eta1"] = {"value": [rk4(sin_rhs, 0.0, [1.0], 5.0)[1][-1, 0]], "tol": 1e-8}

    A = np.array([[-1.0, 0.5], [-0.5, -1.0]])
    g["s3_rot_phi_t3_s1"] = {"value": expm(2.0 * A).ravel().tolist(), "tol": 1e-9}
    P = solve_continuous_lyapunov(A.T, -np.eye(2))
    g["s3_rot_lyapunov_P"] = {"value": P.ravel().tolist(), "tol": 1e-8, "times": [0.0, 1.0, 5.0]}

    # A(t) = -1.5 + 0.5 sin t: Phi(3,1) = exp(-3 + 0.5 (cos 1 - cos 3))
    g["periodic_phi_t3_s1"] = {"value": [math.exp(-3.0 + 0.5 * (math.cos(1.0) - math.cos(3.0)))], "tol": 1e-9}

    # continuity budget for the arctan example, eps = 0.1 (K = M = alpha = 1, gamma = 0.2, mu = pi/5)
    eps = 0.1
    L = math.log(4 * (math.pi / 5) / eps)
    theta_star = 1 + 0.2 * (math.exp(0.2 * L) - 1) / 0.2
    g["jiang_budget_eps0.1"] = {"value": [L, theta_star, eps / (2 * theta_star)], "tol": 1e-12,
                                "fields": ["L", "theta_star", "delta"]}

    g["s4_constant_equilibrium"] = {"value": [0.3], "tol": 1e-10}
    return {key: {**val, "value": [float(x) for x in val["value"]]} for key, val in g.items()}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "golden" / "golden.json"))
    args = ap.parse_args(argv)
    doc = {"generator": "scripts/make_golden.py", "rk4_step": H_STEP, "entries": build()}
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(doc['entries'])} entries to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
