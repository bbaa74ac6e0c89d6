"""Finite-dimensional joint-measurement laboratory.

Joint POVMs, measuring processes and their ancilla form, noise metrics,
uncertainty relations for joint measurements, canonical models and a
derivative-free search over measurements.
"""
from .errors import DimensionError, InconsistencyError, JmlabError, RelationViolation, ValidationError
from .gallery import guess_model, truncated_ccr_demo
from .metrics import NoiseReport, noise_report
from .povm import JointPovm, MarginalPovm, OutcomeGrid, marginal, validate
from .process import Ancilla, MeasuringProcess, naimark_dilate, povm_from_ancilla, povm_from_process
from .relations import RelationReport, full_report
from .scenario import Scenario
from .search import SearchConfig, minimize
from .tolerances import Tolerances

__version__ = "0.1.0"

__all__ = [
    "Ancilla", "DimensionError", "InconsistencyError", "JmlabError", "JointPovm", "MarginalPovm",
    "MeasuringProcess", "NoiseReport", "OutcomeGrid", "RelationReport", "RelationViolation", "Scenario",
    "SearchConfig", "Tolerances", "ValidationError", "full_report", "guess_model", "marginal", "minimize",
    "naimark_dilate", "noise_report", "povm_from_ancilla", "povm_from_process", "truncated_ccr_demo", "validate",
]
