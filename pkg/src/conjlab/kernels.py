"""Backend selection for the integration kernels.

The compiled extension is used when it imports and the model is built from
built-in pieces; everything else runs on the numpy implementation. Setting
``CONJLAB_PURE_PYTHON=1`` forces the fallback for the whole process.
"""
from __future__ import annotations

import os

from . import _kernels_py
from ._kernels_py import KIND_ADJ, KIND_LIN, KIND_NL, KIND_PIC, KIND_VAR, KIND_WAUG  # noqa: F401

_compiled = None
if os.environ.get("CONJLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def solve(kind, model, t0, y0, t1, rtol, atol, h_init, h_max, max_steps,
          phi=None, mesh=None, backend: str | None = None):
    if backend is None:
        use_compiled = _compiled is not None and model.kernel is not None
    elif backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        use_compiled = True
    elif backend == "python":
        use_compiled = False
    else:
        raise ValueError(f"unknown backend {backend!r}")
    impl = _compiled if use_compiled else _kernels_py
    return impl.solve(kind, model, float(t0), y0, float(t1), rtol, atol, h_init, h_max,
                      int(max_steps), phi=phi, mesh=mesh)
