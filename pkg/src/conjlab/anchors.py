"""Formula labels attached to report entries.

Each check in a report names the identity or inequality it exercises. The
labels are kept in this one table so reports stay consistent.
"""
from __future__ import annotations

ANCHOR = {
    "P1": "P1",
    "P2": "P2",
    "P3": "P3",
    "uas": "UAS",
    "kga": "Kgamma/alpha<1",
    "det": "det-positive",
    "linealCI": "linealCI",
    "ContCondIni": "ContCondIni",
    "MDE1": "MDE1",
    "flow": "pivote2",
    "w-star": "w-star",
    "gamma-op": "Gamma-contraction",
    "identity1": "identity1",
    "identity2": "identity2",
    "Homeo-H": "Homeo-H",
    "Homeo-G": "Homeo-G",
    "bijective": "bijective",
    "conj1": "conj1",
    "conj2": "conj2",
    "proximity": "proximity",
    "auxiliares": "auxiliares",
    "continuity": "uniform-continuity",
    "lipschitz-C": "lipschitz-C",
    "jacobiano-G": "jacobiano-G",
    "hadamard": "hadamard-proper",
    "hessian": "hessian-symmetry",
    "equilibrio": "equilibrio",
    "PFE": "PFE",
    "ball": "ball",
    "UPF": "UPF",
    "HPF": "HPF",
    "translate": "translated-g",
    "uas2": "uas2",
    "cotas-lyap": "cotas-lyap",
    "lyap-decrease": "lyap-decrease",
}
