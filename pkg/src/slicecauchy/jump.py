"""Cauchy-type transforms of boundary data, their boundary limits and the
slice-regular extension test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .algebra import Element, decompose
from .geometry import (
    TWO_PI,
    Gis,
    PlanarDomain,
    circularize_membership,
    jacobian_In,
    sphere_volume,
    theta_grid,
)
from .quadrature import (
    QuadratureGrid,
    _slice_unit,
    _theta_total,
    boundary_slice_sums,
    slice_line_integral,
)
from .slice import evaluate_function

DEFAULT_OFFSETS = (0.08, 0.04, 0.02)
EXTENSION_TOL = 1e-3


class SideError(ValueError):
    """Point on the wrong side of the boundary, or too close to it."""


def _side_check(gis: Gis, domain: PlanarDomain, x: Element, side: str, margin: float):
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    dec = decompose(x)
    where = domain.classify(dec.alpha, dec.beta, 1e-12)
    wanted = "interior" if side == "plus" else "exterior"
    if where != wanted:
        raise SideError(f"x is {where}; side '{side}' needs an {wanted} point")
    if margin > 0 and domain.distance_to_boundary(dec.alpha, dec.beta) < margin:
        raise SideError("x is within the margin of the boundary")
    if side == "plus" and circularize_membership(domain, gis, x) == "outside-M":
        raise SideError("interior points must lie in M")


def _default_margin(domain: PlanarDomain, margin):
    return 0.05 * domain.diameter if margin is None else margin


def cauchy_transform(gis: Gis, domain: PlanarDomain, f, x: Element,
                     grid: QuadratureGrid | None = None, side: str = "plus",
                     margin: float | None = None) -> Element:
    """``F^+`` (x interior) or ``F^-`` (x exterior) of the boundary data ``f``."""
    grid = grid or QuadratureGrid()
    _side_check(gis, domain, x, side, _default_margin(domain, margin))
    wtheta, sums = boundary_slice_sums(gis, domain, f, x.coeffs, grid)
    return Element(gis.algebra, _theta_total(wtheta, sums) / TWO_PI)


def slice_transform_F_theta(gis: Gis, domain: PlanarDomain, f, x: Element, theta=(),
                            grid: QuadratureGrid | None = None, side: str = "plus",
                            margin: float | None = None) -> Element:
    """Transform over the single boundary ``dD_{J_theta}``.

    ``(2 / eta_{m-2}) * integral of I(theta) F_theta dtheta`` recovers ``cauchy_transform``.
    """
    grid = grid or QuadratureGrid()
    _side_check(gis, domain, x, side, _default_margin(domain, margin))
    J = _slice_unit(gis, theta)
    return Element(gis.algebra, slice_line_integral(gis, domain, f, x.coeffs, J, grid) / TWO_PI)


@dataclass
class JumpReport:
    point: Element
    f_plus: Element
    f_minus: Element
    jump: Element
    value: Element
    residual: float
    offsets: list[float]
    monotone: bool
    plus_samples: list[Element] = field(default_factory=list)
    minus_samples: list[Element] = field(default_factory=list)


def richardson(values: Sequence[Element], offsets: Sequence[float]) -> Element:
    """Order-1 extrapolation to offset 0 from the two smallest offsets."""
    d1, d2 = offsets[-2], offsets[-1]
    F1, F2 = values[-2], values[-1]
    return (F2 * d1 - F1 * d2) / (d1 - d2)


def _differences_shrink(values: Sequence[Element], noise: float = 1e-9) -> bool:
    """Successive differences do not grow; differences below ``noise`` count as zero."""
    scale = max(1.0, max(float(np.linalg.norm(v.coeffs)) for v in values))
    diffs = [float(np.linalg.norm((a - b).coeffs)) for a, b in zip(values, values[1:])]
    return all(d2 <= d1 or d2 <= noise * scale for d1, d2 in zip(diffs, diffs[1:]))


def _check_offsets(offsets) -> list[float]:
    offsets = [float(o) for o in offsets]
    if len(offsets) < 2:
        raise ValueError("need at least two offsets")
    if any(o <= 0 for o in offsets) or any(b >= a for a, b in zip(offsets, offsets[1:])):
        raise ValueError("offsets must be positive and strictly decreasing")
    return offsets


def _approach_geometry(gis: Gis, domain: PlanarDomain, xhat: Element, tol: float):
    """Planar position, outer normal and imaginary unit of a boundary point."""
    dec = decompose(xhat)
    if domain.classify(dec.alpha, dec.beta, tol) != "boundary":
        raise ValueError("x_hat is not on the boundary")
    _, comp, t = domain.nearest_boundary(dec.alpha, dec.beta)
    nr, ns = domain.components[comp].normal(t)
    nr, ns = float(nr), float(ns)
    I = dec.J if dec.J is not None else Element(gis.algebra, gis.basis_matrix[1])
    return dec.alpha, dec.beta, nr, ns, I


def _plane_point(gis, r, s, I):
    return gis.algebra.scalar(r) + I * s


def default_offsets(domain: PlanarDomain) -> list[float]:
    return [o * domain.diameter for o in DEFAULT_OFFSETS]


def near_boundary_grid(offset: float, base: QuadratureGrid | None = None) -> QuadratureGrid:
    """Grid whose periodic t-rule resolves a kernel pole at distance ``offset``.

    The t-rule error decays like ``exp(-N_t * offset)``, so ``N_t`` is the
    next power of two above ``30 / offset``.
    """
    base = base or QuadratureGrid()
    n_t = max(base.n_t, 2 ** math.ceil(math.log2(30.0 / offset)))
    return replace(base, n_t=n_t)


def jump_check(gis: Gis, domain: PlanarDomain, f, xhat: Element,
               grid: QuadratureGrid | None = None, offsets=None,
               tol: float = 1e-9) -> JumpReport:
    """Boundary limits of ``F^+`` and ``F^-`` at ``xhat`` and the jump residual.

    ``offsets`` are absolute distances along the planar outer normal; the
    default is ``DEFAULT_OFFSETS`` times the diameter of the domain.
    """
    offsets = default_offsets(domain) if offsets is None else _check_offsets(offsets)
    grid = grid or near_boundary_grid(offsets[-1])
    a, b, nr, ns, I = _approach_geometry(gis, domain, xhat, tol)
    plus, minus = [], []
    for d in offsets:
        xin = _plane_point(gis, a - d * nr, b - d * ns, I)
        xout = _plane_point(gis, a + d * nr, b + d * ns, I)
        try:
            plus.append(cauchy_transform(gis, domain, f, xin, grid, "plus", margin=0.0))
            minus.append(cauchy_transform(gis, domain, f, xout, grid, "minus", margin=0.0))
        except SideError as exc:
            raise ValueError(f"offset {d:g} leaves the admissible side: {exc}") from None
    Fp = richardson(plus, offsets)
    Fm = richardson(minus, offsets)
    value = Element(gis.algebra, evaluate_function(f, xhat.coeffs))
    jump = Fp - Fm
    return JumpReport(
        point=xhat, f_plus=Fp, f_minus=Fm, jump=jump, value=value,
        residual=float(np.linalg.norm((jump - value).coeffs)), offsets=offsets,
        monotone=_differences_shrink(plus) and _differences_shrink(minus),
        plus_samples=plus, minus_samples=minus)


@dataclass
class ExtensionResult:
    extends: bool
    max_minus_norm: float
    minus_limits: list[Element]
    extension: Callable[[Element], Element] | None = None


def boundary_points_on_plane(gis: Gis, domain: PlanarDomain, count: int = 8,
                             J: Element | None = None) -> list[Element]:
    """``count`` points of the outer boundary curve in the plane of ``J`` (default ``v_1``)."""
    J = J if J is not None else Element(gis.algebra, gis.basis_matrix[1])
    curve = domain.components[0]
    ts = (np.arange(count) + 0.5) / count
    return [_plane_point(gis, float(curve.a(t)), float(curve.b(t)), J) for t in ts]


def _project_to_boundary(gis, domain, x: Element, tol):
    dec = decompose(x)
    where = domain.classify(dec.alpha, dec.beta, tol)
    if where == "boundary":
        return x
    if where != "exterior":
        raise ValueError("probe points must be exterior or on the boundary")
    _, comp, t = domain.nearest_boundary(dec.alpha, dec.beta)
    curve = domain.components[comp]
    I = dec.J if dec.J is not None else Element(gis.algebra, gis.basis_matrix[1])
    return _plane_point(gis, float(curve.a(t)), abs(float(curve.b(t))), I)


def extension_test(gis: Gis, domain: PlanarDomain, f, grid: QuadratureGrid | None = None,
                   probes: Sequence[Element] | None = None, tol: float = EXTENSION_TOL,
                   offsets=None) -> ExtensionResult:
    """Whether the boundary data extend slice regularly: ``F^-`` vanishes on the boundary.

    Exterior probes are moved to the nearest boundary point of their plane and
    ``F^-`` is extrapolated there.
    """
    if grid is None:
        offs = default_offsets(domain) if offsets is None else _check_offsets(offsets)
        grid = near_boundary_grid(offs[-1])
    if probes is None:
        probes = boundary_points_on_plane(gis, domain)
    limits = []
    for p in probes:
        xhat = _project_to_boundary(gis, domain, p, 1e-9)
        report = jump_check(gis, domain, f, xhat, grid, offsets)
        limits.append(report.f_minus)
    worst = max(float(np.linalg.norm(F.coeffs)) for F in limits)
    extends = worst < tol

    def ext(x: Element) -> Element:
        return cauchy_transform(gis, domain, f, x, grid, "plus", margin=0.0)

    return ExtensionResult(extends, worst, limits, ext if extends else None)


def theta_average(gis: Gis, domain: PlanarDomain, f, x: Element,
                  grid: QuadratureGrid | None = None, side: str = "plus") -> Element:
    """``(2/eta) * sum_k w_k I(theta_k) F_theta_k(x)`` over the angular grid."""
    grid = grid or QuadratureGrid()
    nodes, weights = theta_grid(gis.m - 2, grid.n_theta)
    In = jacobian_In(gis.m - 2, nodes) if gis.m > 2 else np.ones(len(weights))
    vals = np.array([slice_transform_F_theta(gis, domain, f, x, th, grid, side, 0.0).coeffs
                     for th in nodes])
    total = np.array([math.fsum(col) for col in ((weights * In)[:, None] * vals).T])
    return Element(gis.algebra, 2.0 / sphere_volume(gis.m - 2) * total)
