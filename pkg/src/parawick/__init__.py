"""Vacuum expectation values of parabose and parafermi products of order p."""

from .algebra import PPolynomial, Statistics, exchange_sign, falling_factorial, interpolate, ppoly_eval
from .correlator import (
    Charge,
    CorrelatorResult,
    FieldSpec,
    Insertion,
    Matching,
    Mode,
    OpKind,
    ProductSpec,
    crossing_edges,
    enumerate_matchings,
    evaluate,
    evaluate_green_components,
    matching_coefficient,
)
from .fock import FockConfig, FockSpace, check_rescaled_normalization, check_trilinear, vev
from .genfun import n_point
from .parser import parse_problem
from .perturb import VertexKind, VertexSpec, first_order_correction, vertex_admissibility

__all__ = [
    "Charge",
    "CorrelatorResult",
    "FieldSpec",
    "FockConfig",
    "FockSpace",
    "Insertion",
    "Matching",
    "Mode",
    "OpKind",
    "PPolynomial",
    "ProductSpec",
    "Statistics",
    "VertexKind",
    "VertexSpec",
    "check_rescaled_normalization",
    "check_trilinear",
    "crossing_edges",
    "enumerate_matchings",
    "evaluate",
    "evaluate_green_components",
    "exchange_sign",
    "falling_factorial",
    "first_order_correction",
    "interpolate",
    "matching_coefficient",
    "n_point",
    "parse_problem",
    "ppoly_eval",
    "vertex_admissibility",
    "vev",
]
