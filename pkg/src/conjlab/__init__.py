"""Numerical construction and verification of conjugacies between a stable
linear nonautonomous system and its bounded Lipschitz perturbation."""
from __future__ import annotations

__version__ = "0.1.0"

from .conjugacy import G, H, G_map, H_map, PicardConfig, w_star, z_star  # noqa: E402
from .errors import (CertificateRejected, ConjlabError, IntegrationError, MissingJacobian,  # noqa: E402
                     NewtonDiverged, NoConvergence, ParseError, ToleranceNotMet)
from .kernels import BACKEND  # noqa: E402
from .linear_flow import LinearSystem, transition  # noqa: E402
from .models import MatrixFunction, NonlinearTerm  # noqa: E402
from .nonlinear_flow import ConjugacyProblem, Perturbation, flow_y, variational_y  # noqa: E402
from .ode_core import IntegratorConfig, integrate  # noqa: E402
from .report import CertificateReport, ReportEntry  # noqa: E402
from .scenario import Scenario, load_file, load_scenario  # noqa: E402

__all__ = [
    "__version__", "BACKEND", "G", "H", "G_map", "H_map", "PicardConfig", "w_star", "z_star",
    "CertificateRejected", "ConjlabError", "IntegrationError", "MissingJacobian", "NewtonDiverged",
    "NoConvergence", "ParseError", "ToleranceNotMet", "LinearSystem", "transition", "MatrixFunction",
    "NonlinearTerm", "ConjugacyProblem", "Perturbation", "flow_y", "variational_y", "IntegratorConfig",
    "integrate", "CertificateReport", "ReportEntry", "Scenario", "load_file", "load_scenario",
]
