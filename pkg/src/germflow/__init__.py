"""Construct C^r right equivalences f = g o phi by integrating a homotopy vector field."""

__version__ = "0.1.0"

from .poly import MultiPoly, parse_poly, divide_exact
from .germ import GermCase, build_g, check_hypotheses, lemma1_check
from .grid import SampleGrid
from .homotopy import GapViolation, HomotopyField, certify_domain
from .flow import FlowConfig, Trajectory, integrate, phi, phi_inverse, equivalence_residual

__all__ = [
    "MultiPoly",
    "parse_poly",
    "divide_exact",
    "GermCase",
    "build_g",
    "check_hypotheses",
    "lemma1_check",
    "SampleGrid",
    "GapViolation",
    "HomotopyField",
    "certify_domain",
    "FlowConfig",
    "Trajectory",
    "integrate",
    "phi",
    "phi_inverse",
    "equivalence_residual",
]
