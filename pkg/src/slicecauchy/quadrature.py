"""Numerical evaluation of the gis Cauchy formula on circularized domains.

The boundary term is integrated in the chart ``(t, theta) -> a(t) + b(t) J_theta``
and the volume term in ``(r, s, theta) -> r + s J_theta``. For a fixed point ``x``
the kernel is singular at the two planar points ``(alpha, +-beta)`` of every
slice, independently of ``theta``, so the planar volume nodes are built once per
``x``: each half of the domain is covered by polar rays from its singular point,
graded geometrically inside the excision radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import Element, decompose, decompose_arrays
from .geometry import (
    TWO_PI,
    Gis,
    PlanarDomain,
    circularize_membership,
    gauss_legendre,
    jacobian_In,
    psi_arrays,
    sphere_volume,
    theta_grid,
)
from .slice import evaluate_function, kernel_arrays

MAX_CHUNK = 400_000


class DomainError(ValueError):
    """Point outside the admissible region (or inside the boundary margin)."""


@dataclass(frozen=True)
class QuadratureGrid:
    """Node counts for the boundary and volume charts.

    ``n_theta`` counts nodes per angle of the sphere parameter box, so a gis of
    dimension ``m`` uses ``n_theta ** (m - 2)`` angular nodes. ``n_r`` is the
    number of radial nodes on each ray segment outside the excision disk and
    ``n_s`` the number of ray directions per angular panel.
    """

    n_t: int = 64
    n_theta: int = 16
    n_r: int = 48
    n_s: int = 48
    n_theta_vol: int | None = None
    n_rho: int = 8
    grading_levels: int = 4
    grading_ratio: float = 0.5
    excision_factor: float = 0.05
    margin_factor: float = 0.05
    t_rule: str = "trapezoid"

    def __post_init__(self):
        counts = (self.n_t, self.n_theta, self.n_r, self.n_s, self.n_rho, self.theta_vol)
        if min(counts) < 2:
            raise ValueError("all node counts must be >= 2")
        if self.excision_factor <= 0 or self.margin_factor < 0:
            raise ValueError("excision radius must be positive")
        if not 0 < self.grading_ratio < 1 or self.grading_levels < 0:
            raise ValueError("grading ratio must lie in (0, 1)")
        if self.t_rule not in ("trapezoid", "gauss"):
            raise ValueError("t_rule must be 'trapezoid' or 'gauss'")

    @property
    def theta_vol(self) -> int:
        return self.n_theta if self.n_theta_vol is None else self.n_theta_vol

    def coarsened(self) -> "QuadratureGrid":
        half = lambda n: max(2, n // 2)  # noqa: E731
        return replace(self, n_t=half(self.n_t), n_theta=half(self.n_theta), n_r=half(self.n_r),
                       n_s=half(self.n_s), n_theta_vol=half(self.theta_vol),
                       n_rho=half(self.n_rho))

    def doubled(self) -> "QuadratureGrid":
        return replace(self, n_t=2 * self.n_t, n_theta=2 * self.n_theta, n_r=2 * self.n_r,
                       n_s=2 * self.n_s, n_theta_vol=2 * self.theta_vol, n_rho=2 * self.n_rho)

    def t_nodes(self):
        if self.t_rule == "trapezoid":
            # periodic midpoint rule; avoids the axis crossings at t = 0, 1/2
            return (np.arange(self.n_t) + 0.5) / self.n_t, np.full(self.n_t, 1.0 / self.n_t)
        return gauss_legendre(self.n_t, 0.0, 1.0)


@dataclass
class CauchyResult:
    boundary_term: Element
    volume_term: Element
    combined: Element
    slice_reductions: list[Element] = field(default_factory=list)
    node_counts: dict[str, int] = field(default_factory=dict)
    error_estimate: float = float("nan")


# -- summation -------------------------------------------------------------------

def _fsum_rows(values) -> np.ndarray:
    """Compensated column sums in fixed row order."""
    values = np.asarray(values, dtype=float)
    return np.array([math.fsum(values[:, k]) for k in range(values.shape[1])])


# -- kernel ----------------------------------------------------------------------

def _kernel_scale(gis: Gis) -> float:
    return 2.0 / sphere_volume(gis.m - 2)


def _imag_norm(gis: Gis, w):
    alg = gis.algebra
    im = 0.5 * (w - alg.conj_arrays(w))
    return np.sqrt(np.maximum(alg.norm_arrays(im)[..., 0], 0.0))


def kernel_cs_arrays(gis: Gis, x, w):
    """Vectorized ``C_S(x, w)``; rows with real ``w`` come out non-finite for ``m > 2``."""
    C = kernel_arrays(gis.algebra, x, w)
    if gis.m == 2:
        return C
    with np.errstate(divide="ignore", invalid="ignore"):
        return _kernel_scale(gis) * C / (_imag_norm(gis, w) ** (gis.m - 2))[..., None]


def kernel_CS(gis: Gis, x: Element, w: Element, tol: float = 1e-9) -> Element:
    """Cauchy kernel relative to the gis S."""
    alg = gis.algebra
    c = gis.coordinates(w.coeffs)
    if np.linalg.norm(w.coeffs - c @ gis.basis_matrix) > tol:
        raise ValueError("w is not in the subspace M")
    if gis.m > 2 and np.linalg.norm(c[1:]) <= tol:
        raise ValueError("w must not be real")
    from .slice import cauchy_kernel_C

    C = cauchy_kernel_C(x, w, tol)
    if gis.m == 2:
        return C
    imw = float(_imag_norm(gis, w.coeffs))
    return Element(alg, _kernel_scale(gis) * C.coeffs / imw ** (gis.m - 2))


# -- node sets ---------------------------------------------------------------------

def _theta_nodes(gis: Gis, per_angle: int):
    nodes, weights = theta_grid(gis.m - 2, per_angle)
    In = jacobian_In(gis.m - 2, nodes) if gis.m > 2 else np.ones(len(weights))
    return nodes, weights, In


def plane_nodes(domain: PlanarDomain, alpha: float, beta: float, grid: QuadratureGrid):
    """Planar nodes ``(r, s, weight)`` for integrating over the domain.

    When ``(alpha, beta)`` lies in the domain the nodes resolve the ``1/rho``
    singularities at ``(alpha, +-beta)``; otherwise a smooth polar chart is used.
    """
    beta = abs(beta)
    if domain.contains(alpha, beta):
        r, s, w = _half_polar_cover(domain, (alpha, beta), grid)
        return np.concatenate([r, r]), np.concatenate([s, -s]), np.concatenate([w, w])
    rho, wr = gauss_legendre(grid.n_r, domain.inner, 1.0)
    v = (np.arange(grid.n_s * 4) + 0.5) * (TWO_PI / (grid.n_s * 4))
    wv = np.full(v.shape, TWO_PI / v.size)
    R, V = np.meshgrid(rho, v, indexing="ij")
    W = np.outer(wr, wv) * domain.ax * domain.ay * R
    return ((domain.center + domain.ax * R * np.cos(V)).ravel(),
            (domain.ay * R * np.sin(V)).ravel(), W.ravel())


def _half_polar_cover(domain: PlanarDomain, p, grid: QuadratureGrid):
    """Polar rays from ``p`` covering the upper half of the domain."""
    crit = domain.critical_directions(p)
    edges = np.append(crit, crit[0] + TWO_PI)
    phis, wphi = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo > 1e-13:
            x, w = gauss_legendre(grid.n_s, lo, hi)
            phis.append(x)
            wphi.append(w)
    phi = np.concatenate(phis)
    wphi = np.concatenate(wphi)
    lo1, hi1, lo2, hi2 = domain.ray_intervals(p, phi)

    eps = grid.excision_factor * domain.diameter
    seg_lo, seg_hi, seg_rule = [], [], []
    inner_end = np.minimum(eps, hi1)
    # graded panels toward the singular point
    q = grid.grading_ratio
    breaks = [inner_end * q ** k for k in range(grid.grading_levels + 1)] + [0.0 * inner_end]
    for k in range(len(breaks) - 1):
        seg_lo.append(breaks[k + 1])
        seg_hi.append(breaks[k])
        seg_rule.append(grid.n_rho)
    seg_lo.append(inner_end)
    seg_hi.append(hi1)
    seg_rule.append(grid.n_r)
    seg_lo.append(lo2)
    seg_hi.append(hi2)
    seg_rule.append(grid.n_r)

    rs, ss, ws = [], [], []
    er, es = np.cos(phi), np.sin(phi)
    for lo, hi, n in zip(seg_lo, seg_hi, seg_rule):
        lo = np.broadcast_to(lo, phi.shape)
        hi = np.broadcast_to(hi, phi.shape)
        ref, wref = gauss_legendre(n, 0.0, 1.0)
        length = np.maximum(hi - lo, 0.0)
        t = lo[:, None] + length[:, None] * ref[None, :]
        w = (length * wphi)[:, None] * wref[None, :] * t
        keep = w > 0
        rs.append((p[0] + t * er[:, None])[keep])
        ss.append((p[1] + t * es[:, None])[keep])
        ws.append(w[keep])
    return np.concatenate(rs), np.concatenate(ss), np.concatenate(ws)


# -- admissibility ---------------------------------------------------------------

def point_plane(x: Element):
    dec = decompose(x)
    return dec.alpha, dec.beta


def _check_interior(gis: Gis, domain: PlanarDomain, x: Element, margin: float):
    if circularize_membership(domain, gis, x) == "outside-M":
        raise DomainError("x does not lie in the span M of the gis")
    alpha, beta = point_plane(x)
    if not domain.contains(alpha, beta):
        raise DomainError("x is not in the circularized domain")
    if domain.distance_to_boundary(alpha, beta) < margin:
        raise DomainError("x is too close to the boundary")
    return alpha, beta


def _margin(domain: PlanarDomain, grid: QuadratureGrid, margin):
    return grid.margin_factor * domain.diameter if margin is None else margin


# -- per-slice sums ------------------------------------------------------------------

def boundary_slice_sums(gis: Gis, domain: PlanarDomain, f, x, grid: QuadratureGrid):
    """Per-theta sums of ``C_S(x,w) n(w) f(w) dsigma`` over ``t`` (psi chart).

    Returns ``(theta weights, per-theta sums (K, d))``; the boundary integral is
    the theta-weighted total.
    """
    alg = gis.algebra
    x = np.asarray(x, dtype=float)
    theta, wtheta, _ = _theta_nodes(gis, grid.n_theta)
    tn, wt = grid.t_nodes()
    K = len(wtheta)
    out = np.zeros((K, alg.dim))
    step = max(1, MAX_CHUNK // (len(tn) * len(domain.components)))
    for k0 in range(0, K, step):
        th = theta[k0:k0 + step]
        parts = []
        for comp in range(len(domain.components)):
            w, weight, normal = psi_arrays(domain, gis, tn[None, :], th[:, None, :], comp)
            val = _weighted_kernel(gis, x, w, weight, domain.components[comp].b(tn)[None, :])
            val = alg.mul_arrays(alg.mul_arrays(val, normal), evaluate_function(f, w))
            parts.append(val * wt[None, :, None])
        vals = np.concatenate(parts, axis=1)
        for j in range(vals.shape[0]):
            out[k0 + j] = _fsum_rows(vals[j])
    return wtheta, out


def _weighted_kernel(gis, x, w, weight, b):
    """``C_S(x, w) * weight`` with the ``|Im w|^{m-2}`` factors cancelled where ``Im w = 0``."""
    if gis.m == 2:
        return kernel_arrays(gis.algebra, x, w) * weight[..., None]
    imw = _imag_norm(gis, w)
    safe = np.where(imw > 0, imw, 1.0)
    ratio = np.where(imw > 0, weight / safe ** (gis.m - 2),
                     weight / np.where(np.abs(b) > 0, np.abs(b), 1.0) ** (gis.m - 2))
    return _kernel_scale(gis) * kernel_arrays(gis.algebra, x, w) * ratio[..., None]


def volume_slice_sums(gis: Gis, domain: PlanarDomain, df, x, grid: QuadratureGrid, nodes=None):
    """Per-theta sums of ``C_S(x,w) df(w) dw`` over the planar nodes (Gamma chart)."""
    alg = gis.algebra
    x = np.asarray(x, dtype=float)
    if nodes is None:
        alpha, beta, _ = decompose_arrays(alg, x)
        nodes = plane_nodes(domain, float(alpha), float(beta), grid)
    r, s, w2 = nodes
    theta, wtheta, In = _theta_nodes(gis, grid.theta_vol)
    K = len(wtheta)
    out = np.zeros((K, alg.dim))
    step = max(1, MAX_CHUNK // len(r))
    for k0 in range(0, K, step):
        J = gis.units(theta[k0:k0 + step])
        w = s[None, :, None] * J[:, None, :]
        w[..., 0] += r[None, :]
        weight = np.abs(s)[None, :] ** (gis.m - 2) * In[k0:k0 + step, None] * w2[None, :]
        val = _weighted_kernel(gis, x, w, weight, np.broadcast_to(s, weight.shape))
        val = alg.mul_arrays(val, evaluate_function(df, w))
        for j in range(val.shape[0]):
            out[k0 + j] = _fsum_rows(val[j])
    return wtheta, out


def _theta_total(wtheta, sums):
    return _fsum_rows(wtheta[:, None] * sums)


# -- public integrals ------------------------------------------------------------------

def boundary_integral(gis: Gis, domain: PlanarDomain, f, x: Element,
                      grid: QuadratureGrid | None = None, margin: float | None = None) -> Element:
    """``(1/2pi) * integral of C_S(x,w) n(w) f(w) dsigma_w`` over the boundary."""
    grid = grid or QuadratureGrid()
    _check_interior(gis, domain, x, _margin(domain, grid, margin))
    wtheta, sums = boundary_slice_sums(gis, domain, f, x.coeffs, grid)
    return Element(gis.algebra, _theta_total(wtheta, sums) / TWO_PI)


def volume_integral(gis: Gis, domain: PlanarDomain, df, x: Element,
                    grid: QuadratureGrid | None = None, margin: float | None = None) -> Element:
    """``(1/pi) * integral of C_S(x,w) df(w) dw`` over the circularized domain."""
    grid = grid or QuadratureGrid()
    _check_interior(gis, domain, x, _margin(domain, grid, margin))
    wtheta, sums = volume_slice_sums(gis, domain, df, x.coeffs, grid)
    return Element(gis.algebra, _theta_total(wtheta, sums) / math.pi)


def _resolve_derivative(f, df):
    if df is not None:
        return df
    if getattr(f, "slice_regular", False):
        return None
    if hasattr(f, "derivative"):
        return f.derivative()
    raise ValueError("df is required unless f is declared slice regular")


def _reconstruct_once(gis, domain, f, df, x, grid):
    alg = gis.algebra
    wb, bsums = boundary_slice_sums(gis, domain, f, x.coeffs, grid)
    boundary = _theta_total(wb, bsums) / TWO_PI
    counts = {"boundary": int(len(wb) * grid.n_t * len(domain.components))}
    volume = np.zeros(alg.dim)
    reductions = []
    scale = sphere_volume(gis.m - 2) / 2.0
    theta, _, In = _theta_nodes(gis, grid.n_theta)
    if df is not None:
        alpha, beta = point_plane(x)
        nodes = plane_nodes(domain, alpha, beta, grid)
        wv, vsums = volume_slice_sums(gis, domain, df, x.coeffs, grid, nodes)
        volume = _theta_total(wv, vsums) / math.pi
        counts["volume"] = int(len(wv) * len(nodes[0]))
        if grid.theta_vol == grid.n_theta:
            for k in range(len(wb)):
                line = scale * bsums[k] / In[k]
                area = scale * vsums[k] / In[k]
                reductions.append(Element(alg, line - 2.0 * area))
    else:
        counts["volume"] = 0
        for k in range(len(wb)):
            reductions.append(Element(alg, scale * bsums[k] / In[k]))
    return boundary, volume, reductions, counts


def cauchy_reconstruct(gis: Gis, domain: PlanarDomain, f, x: Element,
                       grid: QuadratureGrid | None = None, df=None,
                       estimate_error: bool = True, margin: float | None = None) -> CauchyResult:
    """Recover ``f(x)`` from boundary values and, unless ``f`` is slice regular,
    the slice derivative over the circularized domain.

    The error estimate is the distance to the same computation on the
    coarsened grid.
    """
    grid = grid or QuadratureGrid()
    _check_interior(gis, domain, x, _margin(domain, grid, margin))
    df = _resolve_derivative(f, df)
    alg = gis.algebra
    boundary, volume, reductions, counts = _reconstruct_once(gis, domain, f, df, x, grid)
    combined = boundary - volume
    err = float("nan")
    if estimate_error:
        b2, v2, _, _ = _reconstruct_once(gis, domain, f, df, x, grid.coarsened())
        err = float(np.linalg.norm(combined - (b2 - v2)))
    return CauchyResult(Element(alg, boundary), Element(alg, volume), Element(alg, combined),
                        reductions, counts, err)


# -- single slices ----------------------------------------------------------------------

def slice_line_integral(gis: Gis, domain: PlanarDomain, f, x, J, grid: QuadratureGrid):
    """``integral over dD_J of C(x, w) J^{-1} dw f(w)`` on coefficient arrays."""
    alg = gis.algebra
    J = np.asarray(J, dtype=float)
    tn, wt = grid.t_nodes()
    total = []
    for curve in domain.components:
        a, b, da, db = curve.a(tn), curve.b(tn), curve.da(tn), curve.db(tn)
        w = b[:, None] * J[None, :]
        w[:, 0] += a
        dw = db[:, None] * J[None, :]
        dw[:, 0] += da
        jinv_dw = alg.mul_arrays(-J, dw)
        val = alg.mul_arrays(alg.mul_arrays(kernel_arrays(alg, x, w), jinv_dw),
                             evaluate_function(f, w))
        total.append(val * wt[:, None])
    return _fsum_rows(np.concatenate(total))


def slice_area_integral(gis: Gis, domain: PlanarDomain, df, x, J, grid: QuadratureGrid,
                        nodes=None):
    """``integral over D_J of C(x, y) df(y) dr ds`` on coefficient arrays."""
    alg = gis.algebra
    if nodes is None:
        alpha, beta, _ = decompose_arrays(alg, np.asarray(x, dtype=float))
        nodes = plane_nodes(domain, float(alpha), float(beta), grid)
    r, s, w2 = nodes
    y = s[:, None] * np.asarray(J, dtype=float)[None, :]
    y[:, 0] += r
    val = alg.mul_arrays(kernel_arrays(alg, x, y), evaluate_function(df, y))
    return _fsum_rows(val * w2[:, None])


def _slice_unit(gis: Gis, theta):
    if gis.m == 2:
        return gis.basis_matrix[1]
    from .geometry import _check_theta

    theta = _check_theta(gis.m - 2, np.asarray(theta, dtype=float).reshape(gis.m - 2), True)
    return gis.units(theta)


def slice_reduction(gis: Gis, domain: PlanarDomain, f, x: Element, theta=(),
                    grid: QuadratureGrid | None = None, df=None,
                    margin: float | None = None) -> Element:
    """Cauchy-Pompeiu combination on the single slice ``D_{J_theta}``; equals ``2 pi f(x)``."""
    grid = grid or QuadratureGrid()
    _check_interior(gis, domain, x, _margin(domain, grid, margin))
    df = _resolve_derivative(f, df)
    J = _slice_unit(gis, theta)
    line = slice_line_integral(gis, domain, f, x.coeffs, J, grid)
    if df is None:
        return Element(gis.algebra, line)
    area = slice_area_integral(gis, domain, df, x.coeffs, J, grid)
    return Element(gis.algebra, line - 2.0 * area)


# -- summability -----------------------------------------------------------------------

def _aligned_gis(gis: Gis, x: Element) -> Gis:
    """Same sphere with the basis rotated so that ``I_x`` sits on the edge of the
    angular parameter box.

    ``||C_S(x, .)||`` has a conical kink in ``J`` at ``J = +-I_x``; on the box edge
    it no longer spoils the tensor Gauss rule. The integral is invariant under
    this rotation.
    """
    if gis.m <= 2:
        return gis
    _, beta, I = decompose_arrays(gis.algebra, x.coeffs)
    if beta == 0.0:
        return gis
    B = gis.basis_matrix[1:]
    u = gis.coordinates(I)[1:]
    # orthonormal completion of u, then put u first (n = 1) or last (n >= 2)
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(len(u))]))
    q = q[:, :len(u)]
    rest = [q[:, k] for k in range(1, len(u))]
    first = q[:, 0] * np.sign(q[:, 0] @ u)
    cols = [first] + rest if gis.m == 3 else rest + [first]
    vecs = [Element(gis.algebra, c @ B) for c in cols]
    return Gis(gis.algebra, (gis.basis[0], *vecs), gis.label)


def summability_diagnostic(gis: Gis, domain: PlanarDomain, x: Element, grids,
                           kind: str = "volume") -> list[float]:
    """Estimates of the integral of ``||C_S(x, w)||`` over a sequence of grids."""
    if kind not in ("volume", "boundary"):
        raise ValueError("kind must be 'volume' or 'boundary'")
    alpha, beta = point_plane(x)
    if domain.classify(alpha, beta, 1e-9) == "boundary":
        raise DomainError("x lies on the boundary")
    gis = _aligned_gis(gis, x)
    out = []
    for grid in grids:
        if kind == "volume":
            nodes = plane_nodes(domain, alpha, beta, grid)
            r, s, w2 = nodes
            theta, wtheta, In = _theta_nodes(gis, grid.theta_vol)
            per = []
            for k in range(len(wtheta)):
                J = gis.units(theta[k:k + 1])[0]
                w = s[:, None] * J[None, :]
                w[:, 0] += r
                weight = np.abs(s) ** (gis.m - 2) * In[k] * w2
                val = _weighted_kernel(gis, x.coeffs, w, weight, s)
                per.append(math.fsum(np.linalg.norm(val, axis=-1)))
        else:
            theta, wtheta, _ = _theta_nodes(gis, grid.n_theta)
            tn, wt = grid.t_nodes()
            per = []
            for k in range(len(wtheta)):
                acc = []
                for comp in range(len(domain.components)):
                    w, weight, _ = psi_arrays(domain, gis, tn, theta[k], comp)
                    val = _weighted_kernel(gis, x.coeffs, w, weight, domain.components[comp].b(tn))
                    acc.append(np.linalg.norm(val, axis=-1) * wt)
                per.append(math.fsum(np.concatenate(acc)))
        out.append(math.fsum(np.asarray(per) * wtheta))
    return out
