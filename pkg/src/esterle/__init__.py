"""Numerical toolkit for majorants, Esterle sequences and removable singularities on thin sets."""

__version__ = "0.1.0"

from .thinsets import (  # noqa: E402
    Atoms,
    GeometricCluster,
    SelfSimilarCantor,
    ThinSetError,
    Union,
    neighborhood_measure,
    standard_families,
    thin_set_from_dict,
)
from .majorant import MajorantOmega, RhoCurve, RuleParams, build_omega, verify_liminf_condition  # noqa: E402
from .sequence import EsterleSequence, solve_tn, u_sequence  # noqa: E402
from .inner import InnerEval, SingularMeasure, delta_n, verify_theorem, witness_points  # noqa: E402
from .removability import TestFunction, removability_test  # noqa: E402

__all__ = [
    "Atoms", "GeometricCluster", "SelfSimilarCantor", "Union", "ThinSetError",
    "neighborhood_measure", "standard_families", "thin_set_from_dict",
    "MajorantOmega", "RhoCurve", "RuleParams", "build_omega", "verify_liminf_condition",
    "EsterleSequence", "solve_tn", "u_sequence",
    "InnerEval", "SingularMeasure", "delta_n", "verify_theorem", "witness_points",
    "TestFunction", "removability_test",
]
