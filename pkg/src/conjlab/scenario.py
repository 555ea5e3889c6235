"""Scenario files: a small sectioned key-value format.

Example::

    name = jiang
    [linear]
    A = constant(-1)
    [perturbation]
    f = jiang_arctan(0.2)
    [constants]
    K = 1
    alpha = 1
    M = 1
    gamma = 0.2
    mu = pi / 5
    r = 1
    [probes]
    times = [0, 1, 5, 10, 50]
    [tolerances]
    rtol = 1e-9

Values are arithmetic on numbers (with ``pi``, ``e``, ``sqrt``, ``exp``),
vectors ``[a, b]``, matrices ``[[a, b], [c, d]]``, quoted strings, or calls
to the built-in constructors listed in ``MATRIX_BUILTINS`` and
``TERM_BUILTINS``. Everything is evaluated by walking the Python AST, so no
code from the file is ever executed.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError
from .linear_flow import LinearSystem
from .models import MatrixFunction, NonlinearTerm
from .nonlinear_flow import ConjugacyProblem, Perturbation
from .ode_core import IntegratorConfig

SECTIONS = ("linear", "perturbation", "constants", "probes", "tolerances")
_HEADER = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]\s*$")
_KEY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=")

_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "atan": math.atan}

MATRIX_BUILTINS = ("constant", "diag", "rot", "sindiag")
TERM_BUILTINS = ("zero", "jiang_arctan", "scaled_sin", "scaled_tanh", "constant_shift")

_KNOWN_KEYS = {
    None: {"name", "description"},
    "linear": {"A"},
    "perturbation": {"f"},
    "constants": {"K", "alpha", "M", "gamma", "mu", "r", "Q"},
    "probes": {"times", "n_states", "box", "states", "probe_seed", "n_equiv", "jacobian_times",
               "jacobian_box", "n_jacobian", "trajectories", "horizon", "equilibrium_guess", "eps",
               "t_max", "uas_eps", "uas_c"},
    "tolerances": {"rtol", "atol", "h_max", "max_steps", "picard_tol"},
}
_REQUIRED = {"linear": {"A"}, "perturbation": {"f"}, "constants": {"K", "alpha", "M", "gamma", "mu"}}


@dataclass(frozen=True)
class Call:
    """A built-in constructor call such as ``rot(-1, 0.5)``."""

    name: str
    args: tuple
    line: int
    column: int


class _Evaluator:
    def __init__(self, line: int, col0: int):
        self.line = line
        self.col0 = col0

    def fail(self, node: ast.AST, msg: str):
        raise ParseError(msg, self.line, self.col0 + getattr(node, "col_offset", 0) + 1)

    def __call__(self, node: ast.AST, top: bool = True):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float, str)):
                self.fail(node, f"unsupported literal {node.value!r}")
            if isinstance(node.value, str) and not top:
                self.fail(node, "strings are only allowed as whole values")
            return node.value if isinstance(node.value, str) else float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _NAMES:
                return _NAMES[node.id]
            if top and node.id in TERM_BUILTINS + MATRIX_BUILTINS:
                return Call(node.id, (), self.line, self.col0 + node.col_offset + 1)
            self.fail(node, f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self._num(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = self._num(node.left), self._num(node.right)
            ops = {ast.Add: lambda: a + b, ast.Sub: lambda: a - b, ast.Mult: lambda: a * b,
                   ast.Div: lambda: a / b, ast.Pow: lambda: a ** b}
            fn = ops.get(type(node.op))
            if fn is None:
                self.fail(node, "unsupported operator")
            try:
                return float(fn())
            except (ZeroDivisionError, OverflowError) as exc:
                self.fail(node, str(exc))
        if isinstance(node, (ast.List, ast.Tuple)):
            return [self(el, top=False) for el in node.elts]
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.keywords:
                self.fail(node, "only plain calls to built-ins are allowed")
            name = node.func.id
            args = tuple(self(a, top=False) for a in node.args)
            if name in _FUNCS:
                try:
                    return float(_FUNCS[name](*(self._check_num(a, node) for a in args)))
                except (TypeError, ValueError) as exc:
                    self.fail(node, f"{name}: {exc}")
            if top and name in MATRIX_BUILTINS + TERM_BUILTINS:
                return Call(name, args, self.line, self.col0 + node.col_offset + 1)
            self.fail(node, f"unknown function {name!r}")
        self.fail(node, f"unsupported expression ({type(node).__name__})")

    def _check_num(self, v, node):
        if not isinstance(v, float):
            self.fail(node, "expected a number")
        return v

    def _num(self, node):
        return self._check_num(self(node, top=False), node)


def parse_value(text: str, line: int = 0, column: int = 1):
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"malformed value: {exc.msg}", line, column + max((exc.offset or 1) - 1, 0)) from None
    return _Evaluator(line, column - 1)(tree.body)


@dataclass
class RawEntry:
    value: object
    line: int
    column: int


def parse_document(text: str) -> dict[str | None, dict[str, RawEntry]]:
    """Split into sections and evaluate every value."""
    doc: dict[str | None, dict[str, RawEntry]] = {None: {}}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _HEADER.match(line.strip())
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno, raw.index("[") + 1)
            if section in doc:
                raise ParseError(f"duplicate section [{section}]", lineno, raw.index("[") + 1)
            doc[section] = {}
            continue
        indent = len(line) - len(line.lstrip())
        m = _KEY.match(line.strip())
        if not m:
            raise ParseError("expected 'key = value' or '[section]'", lineno, indent + 1)
        key = m.group(1)
        if key not in _KNOWN_KEYS[section]:
            where = f"[{section}]" if section else "the preamble"
            raise ParseError(f"unknown key {key!r} in {where}", lineno, indent + 1)
        if key in doc[section]:
            raise ParseError(f"duplicate key {key!r}", lineno, indent + 1)
        vcol = indent + m.end() + 1
        rest = line[indent + m.end():]
        lead = len(rest) - len(rest.lstrip())
        if not rest.strip():
            raise ParseError(f"missing value for {key!r}", lineno, vcol)
        if section is None and key == "name" and rest.strip().isidentifier():
            value = rest.strip()
        else:
            value = parse_value(rest, lineno, vcol + lead)
        doc[section][key] = RawEntry(value, lineno, vcol + lead)
    for sec, keys in _REQUIRED.items():
        if sec not in doc:
            raise ParseError(f"missing section [{sec}]", 0, 0)
        for k in sorted(keys - doc[sec].keys()):
            raise ParseError(f"missing key {k!r} in [{sec}]", 0, 0)
    return doc


def _strip_comment(line: str) -> str:
    out = []
    quote = None
    for ch in line:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            break
        out.append(ch)
    return "".join(out).rstrip()


# -- construction -----------------------------------------------------------

def _number(entry: RawEntry, key: str) -> float:
    if not isinstance(entry.value, float):
        raise ParseError(f"{key} must be a number", entry.line, entry.column)
    return entry.value


def _build_matrix(entry: RawEntry) -> MatrixFunction:
    v = entry.value
    if isinstance(v, float):
        return MatrixFunction.constant([[v]])
    if isinstance(v, list):
        try:
            return MatrixFunction.constant(np.array(v, dtype=float, ndmin=2))
        except ValueError as exc:
            raise ParseError(f"A: {exc}", entry.line, entry.column) from None
    if isinstance(v, Call) and v.name in MATRIX_BUILTINS:
        try:
            if v.name == "constant":
                (m,) = v.args
                return MatrixFunction.constant(np.array(m, dtype=float, ndmin=2))
            return getattr(MatrixFunction, v.name)(*v.args)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{v.name}: {exc}", v.line, v.column) from None
    raise ParseError("A must be a matrix or one of " + ", ".join(MATRIX_BUILTINS), entry.line, entry.column)


def _build_term(entry: RawEntry, dim: int) -> NonlinearTerm:
    v = entry.value
    if not (isinstance(v, Call) and v.name in TERM_BUILTINS):
        raise ParseError("f must be one of " + ", ".join(TERM_BUILTINS), entry.line, entry.column)
    try:
        if v.name == "zero":
            if v.args:
                raise TypeError("zero takes no arguments")
            return NonlinearTerm.zero(dim)
        if v.name == "constant_shift":
            (c,) = v.args
            c = np.broadcast_to(np.atleast_1d(np.asarray(c, dtype=float)), (dim,))
            return NonlinearTerm.constant_shift(c)
        (c,) = v.args
        if not isinstance(c, float):
            raise TypeError("coefficient must be a number")
        return getattr(NonlinearTerm, v.name)(c, dim)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{v.name}: {exc}", v.line, v.column) from None


@dataclass(frozen=True)
class Probes:
    times: tuple[float, ...] = (0.0, 1.0, 5.0, 10.0, 50.0)
    states: np.ndarray = field(default=None)
    n_equiv: int = 32
    jacobian_times: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0)
    jacobian_box: tuple[float, float] = (-2.0, 2.0)
    n_jacobian: int = 16
    trajectories: int = 5
    horizon: float = 20.0
    equilibrium_guess: np.ndarray | None = None
    eps: float = 0.1
    uas_eps: tuple[float, ...] = (1e-3,)
    uas_c: tuple[float, ...] = (2.0,)
    box: float = 2.0
    probe_seed: int = 0


@dataclass
class Scenario:
    name: str
    text: str
    A: MatrixFunction
    f: NonlinearTerm
    K: float
    alpha: float
    M: float
    gamma: float
    mu: float
    r: int
    Q: np.ndarray
    probes: Probes
    cfg: IntegratorConfig
    t_max: float = 50.0
    picard_tol: float = 1e-10
    description: str = ""
    source: str | None = None

    @property
    def dim(self) -> int:
        return self.A.dim

    @property
    def linear(self) -> LinearSystem:
        return self.problem.linear

    @property
    def problem(self) -> ConjugacyProblem:
        if self._problem is None:
            lin = LinearSystem(self.A, self.M, self.K, self.alpha)
            pert = Perturbation(self.f, self.gamma, self.mu, smoothness_order=self.r)
            self._problem = ConjugacyProblem(lin, pert, self.cfg, self.t_max)
        return self._problem

    _problem: ConjugacyProblem | None = field(default=None, repr=False)

    @property
    def differentiable(self) -> bool:
        return self.r >= 1


def load_scenario(text: str, source: str | None = None) -> Scenario:
    """Parse scenario text and build the problem (certificates are checked here)."""
    doc = parse_document(text)
    pre = doc[None]
    name = pre["name"].value if "name" in pre else (Path(source).stem if source else "scenario")
    if not isinstance(name, str):
        raise ParseError("name must be a quoted string or identifier", pre["name"].line, pre["name"].column)
    desc = pre["description"].value if "description" in pre else ""

    A = _build_matrix(doc["linear"]["A"])
    f = _build_term(doc["perturbation"]["f"], A.dim)
    c = doc["constants"]
    consts = {k: _number(c[k], k) for k in ("K", "alpha", "M", "gamma", "mu")}
    r = int(_number(c["r"], "r")) if "r" in c else 1
    Q = np.eye(A.dim)
    if "Q" in c:
        qv = c["Q"].value
        Q = qv * np.eye(A.dim) if isinstance(qv, float) else np.array(qv, dtype=float, ndmin=2)
        if Q.shape != (A.dim, A.dim):
            raise ParseError(f"Q must be a scalar or a {A.dim}x{A.dim} matrix", c["Q"].line, c["Q"].column)

    tol = doc.get("tolerances", {})
    cfg_kw = {}
    for k in ("rtol", "atol", "h_max"):
        if k in tol:
            cfg_kw[k] = _number(tol[k], k)
    if "max_steps" in tol:
        cfg_kw["max_steps"] = int(_number(tol["max_steps"], "max_steps"))
    try:
        cfg = IntegratorConfig(**cfg_kw)
    except ValueError as exc:
        raise ParseError(str(exc), 0, 0) from None
    picard_tol = _number(tol["picard_tol"], "picard_tol") if "picard_tol" in tol else 1e-10

    probes, t_max = _build_probes(doc.get("probes", {}), A.dim)
    sc = Scenario(name=name, text=text, A=A, f=f, r=r, Q=Q, probes=probes, cfg=cfg, t_max=t_max,
                  picard_tol=picard_tol, description=desc, source=source, **consts)
    sc.problem  # raises CertificateRejected on bad constants
    return sc


def _vec_tuple(entry: RawEntry, key: str) -> tuple[float, ...]:
    v = entry.value
    if isinstance(v, float):
        return (v,)
    if isinstance(v, list) and all(isinstance(x, float) for x in v):
        return tuple(v)
    raise ParseError(f"{key} must be a number list", entry.line, entry.column)


def _build_probes(sec: dict[str, RawEntry], dim: int) -> tuple[Probes, float]:
    kw: dict = {}
    for key in ("times", "jacobian_times", "uas_eps", "uas_c"):
        if key in sec:
            kw[key] = _vec_tuple(sec[key], key)
    for key in ("n_equiv", "n_jacobian", "trajectories", "probe_seed"):
        if key in sec:
            kw[key] = int(_number(sec[key], key))
    for key in ("horizon", "eps", "box"):
        if key in sec:
            kw[key] = _number(sec[key], key)
    if "jacobian_box" in sec:
        jb = _vec_tuple(sec["jacobian_box"], "jacobian_box")
        if len(jb) != 2 or not jb[0] < jb[1]:
            raise ParseError("jacobian_box must be [lo, hi] with lo < hi", sec["jacobian_box"].line,
                             sec["jacobian_box"].column)
        kw["jacobian_box"] = jb
    if "equilibrium_guess" in sec:
        kw["equilibrium_guess"] = np.broadcast_to(
            np.array(_vec_tuple(sec["equilibrium_guess"], "equilibrium_guess")), (dim,)).copy()
    t_max = _number(sec["t_max"], "t_max") if "t_max" in sec else 50.0
    n_states = int(_number(sec["n_states"], "n_states")) if "n_states" in sec else 32
    box = kw.get("box", 2.0)
    if "states" in sec:
        e = sec["states"]
        try:
            states = np.array(e.value, dtype=float).reshape(-1, dim)
        except ValueError:
            raise ParseError(f"states must be a list of {dim}-vectors", e.line, e.column) from None
    else:
        rng = np.random.default_rng(kw.get("probe_seed", 0))
        states = rng.uniform(-box, box, (n_states, dim))
    states.setflags(write=False)
    times = kw.get("times", Probes.times)
    if any(t < 0 or t > t_max for t in times):
        e = sec["times"]
        raise ParseError(f"probe times must lie in [0, {t_max:g}]", e.line, e.column)
    return Probes(states=states, **kw), t_max


def shipped_names() -> list[str]:
    root = resources.files("conjlab") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def shipped_path(name: str) -> Path:
    return Path(str(resources.files("conjlab") / "scenarios" / f"{name}.scn"))


def load_file(path_or_name: str | Path) -> Scenario:
    """Load a scenario from a path, or by shipped name (``jiang``)."""
    p = Path(path_or_name)
    if not p.exists() and p.suffix == "" and str(path_or_name) in shipped_names():
        p = shipped_path(str(path_or_name))
    text = p.read_text(encoding="utf-8")
    return load_scenario(text, source=str(p))
