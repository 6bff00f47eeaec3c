"""Slice functions on real associative *-algebras and numerical checks of
their Cauchy-type integral formulas."""

__version__ = "0.1.0"

from .algebra import (
    AlgebraMismatchError,
    AlgebraSpec,
    Element,
    ElementParseError,
    NotInConeError,
    NotInvertibleError,
    clifford,
    conj,
    decompose,
    format_element,
    get_algebra,
    in_quadratic_cone,
    is_imaginary_unit,
    mul,
    norm,
    parse_element,
    quaternions,
    trace,
)
from .geometry import (
    Gis,
    PlanarDomain,
    boundary_point_psi,
    circularize_membership,
    jacobian_In,
    jacobian_In_det,
    jacobian_In_gram,
    parse_domain,
    parse_gis,
    polar_phi,
    sphere_volume,
    volume_point_gamma,
)
from .jump import (
    JumpReport,
    cauchy_transform,
    extension_test,
    jump_check,
    slice_transform_F_theta,
)
from .quadrature import (
    CauchyResult,
    DomainError,
    QuadratureGrid,
    boundary_integral,
    cauchy_reconstruct,
    kernel_CS,
    slice_reduction,
    summability_diagnostic,
    volume_integral,
)
from .slice import (
    CoordinateDatum,
    SliceRegularPolynomial,
    StemFunction,
    cauchy_kernel_C,
    char_poly,
    conj_stem,
    identity_stem,
    induce,
    normsq_stem,
    representation,
    slice_derivative,
)

__all__ = [
    "AlgebraMismatchError",
    "AlgebraSpec",
    "CauchyResult",
    "CoordinateDatum",
    "DomainError",
    "Element",
    "ElementParseError",
    "Gis",
    "JumpReport",
    "NotInConeError",
    "NotInvertibleError",
    "PlanarDomain",
    "QuadratureGrid",
    "SliceRegularPolynomial",
    "StemFunction",
    "boundary_integral",
    "boundary_point_psi",
    "cauchy_kernel_C",
    "cauchy_reconstruct",
    "cauchy_transform",
    "char_poly",
    "circularize_membership",
    "clifford",
    "conj",
    "conj_stem",
    "decompose",
    "extension_test",
    "format_element",
    "get_algebra",
    "identity_stem",
    "in_quadratic_cone",
    "induce",
    "is_imaginary_unit",
    "jacobian_In",
    "jacobian_In_det",
    "jacobian_In_gram",
    "jump_check",
    "kernel_CS",
    "mul",
    "norm",
    "normsq_stem",
    "parse_domain",
    "parse_element",
    "parse_gis",
    "polar_phi",
    "quaternions",
    "representation",
    "slice_derivative",
    "slice_reduction",
    "slice_transform_F_theta",
    "sphere_volume",
    "summability_diagnostic",
    "trace",
    "volume_integral",
    "volume_point_gamma",
]
