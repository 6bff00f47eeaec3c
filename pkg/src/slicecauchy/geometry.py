"""Planar domains, genuine imaginary spheres, polar coordinates and the charts
used to integrate over circularized domains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .algebra import DEFAULT_TOL, AlgebraSpec, Element, get_algebra, is_imaginary_unit

TWO_PI = 2.0 * math.pi


def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^n in R^{n+1}."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def gauss_legendre(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


# -- polar coordinates on spheres -----------------------------------------------

def _check_theta(n, theta, upper: bool):
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (n,):
        raise ValueError(f"theta must have {n} components")
    if n == 0:
        return theta
    tol = 1e-12
    t1_hi = math.pi if (upper and n == 1) else TWO_PI
    if np.any(theta[..., 0] < -tol) or np.any(theta[..., 0] > t1_hi + tol):
        raise ValueError("theta_1 out of range")
    if n > 1:
        rest = theta[..., 1:]
        if np.any(np.abs(rest) > math.pi / 2 + tol):
            raise ValueError("theta_k out of range")
        if upper and np.any(theta[..., -1] < -tol):
            raise ValueError("theta_n must be non-negative on the upper hemisphere")
    return theta


def polar_phi(n: int, theta) -> np.ndarray:
    """Polar coordinates on S^n: ``phi_n(theta', theta_n) = (cos theta_n phi_{n-1}, sin theta_n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = _check_theta(n, theta, upper=False)
    return _phi(n, theta)


def _phi(n, theta):
    out = np.stack([np.cos(theta[..., 0]), np.sin(theta[..., 0])], axis=-1)
    for k in range(1, n):
        c = np.cos(theta[..., k])[..., None]
        out = np.concatenate([c * out, np.sin(theta[..., k])[..., None]], axis=-1)
    return out


def jacobian_In(n: int, theta) -> np.ndarray:
    """Closed form ``prod_{k=2}^n cos(theta_k)^{k-1}`` (1 for n <= 1)."""
    theta = _check_theta(n, theta, upper=True)
    out = np.ones(theta.shape[:-1])
    for k in range(2, n + 1):
        out = out * np.cos(theta[..., k - 1]) ** (k - 1)
    return out


def _phi_jacobian(n, theta, h):
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((_phi(n, theta + e) - _phi(n, theta - e)) / (2 * h))
    return np.stack(cols, axis=-1)  # (n+1, n)


def jacobian_In_det(n: int, theta, h: float = 1e-6) -> float:
    """``det(phi_n | J_phi_n)`` with a central-difference Jacobian."""
    theta = _check_theta(n, theta, upper=True)
    M = np.concatenate([_phi(n, theta)[:, None], _phi_jacobian(n, theta, h)], axis=1)
    return float(np.linalg.det(M))


def jacobian_In_gram(n: int, theta, h: float = 1e-6) -> float:
    """``sqrt(det(J^T J))`` for the central-difference Jacobian of ``phi_n``."""
    theta = _check_theta(n, theta, upper=True)
    J = _phi_jacobian(n, theta, h)
    return float(math.sqrt(max(np.linalg.det(J.T @ J), 0.0)))


def parameter_box(n: int, upper: bool = True) -> list[tuple[float, float]]:
    """Angle ranges of ``I_n`` (or of the upper half ``I_n^+``)."""
    if n == 0:
        return []
    if n == 1:
        return [(0.0, math.pi if upper else TWO_PI)]
    half = math.pi / 2
    return [(0.0, TWO_PI)] + [(-half, half)] * (n - 2) + [(0.0 if upper else -half, half)]


def theta_grid(n: int, per_angle: int):
    """Tensor Gauss-Legendre nodes and weights on the half parameter box ``I_n^+``."""
    if n == 0:
        return np.zeros((1, 0)), np.ones(1)
    rules = [gauss_legendre(per_angle, lo, hi) for lo, hi in parameter_box(n)]
    nodes = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), axis=-1).reshape(-1, n)
    weights = np.ones(1)
    for r in rules:
        weights = np.multiply.outer(weights, r[1]).ravel()
    return nodes, weights


# -- planar domains --------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCurve:
    """Closed C^1 curve ``t -> (a(t), b(t))``, ``t in [0, 1]``."""

    a: Callable
    b: Callable
    da: Callable
    db: Callable

    def normal(self, t):
        da, db = self.da(t), self.db(t)
        speed = np.hypot(da, db)
        return db / speed, -da / speed


class PlanarDomain:
    """Region between two concentric, homothetic ellipses centred on the real axis.

    ``inner = 0`` gives a filled ellipse (or disk). The outer boundary runs
    counterclockwise, the inner one clockwise, so the domain is on the left.
    """

    def __init__(self, center: float, ax: float, ay: float, inner: float = 0.0, label: str = ""):
        if ax <= 0 or ay <= 0 or not 0.0 <= inner < 1.0:
            raise ValueError("invalid domain parameters")
        self.center = float(center)
        self.ax = float(ax)
        self.ay = float(ay)
        self.inner = float(inner)
        self.label = label or f"ellipse:{center:g},{ax:g},{ay:g}"
        self.components = [self._curve(1.0, +1)]
        if inner > 0:
            self.components.append(self._curve(inner, -1))

    @classmethod
    def disk(cls, center: float, radius: float) -> "PlanarDomain":
        return cls(center, radius, radius, label=f"disk:{center:g},{radius:g}")

    @classmethod
    def annulus(cls, center: float, r1: float, r2: float) -> "PlanarDomain":
        if not 0 < r1 < r2:
            raise ValueError("annulus needs 0 < r1 < r2")
        return cls(center, r2, r2, r1 / r2, label=f"annulus:{center:g},{r1:g},{r2:g}")

    @classmethod
    def ellipse(cls, center: float, ax: float, ay: float) -> "PlanarDomain":
        return cls(center, ax, ay, label=f"ellipse:{center:g},{ax:g},{ay:g}")

    def _curve(self, scale, orient):
        c, ax, ay = self.center, self.ax * scale, self.ay * scale
        w = TWO_PI * orient
        return BoundaryCurve(
            a=lambda t: c + ax * np.cos(TWO_PI * np.asarray(t)),
            b=lambda t: orient * ay * np.sin(TWO_PI * np.asarray(t)),
            da=lambda t: -TWO_PI * ax * np.sin(TWO_PI * np.asarray(t)),
            db=lambda t: w * ay * np.cos(TWO_PI * np.asarray(t)),
        )

    @property
    def diameter(self) -> float:
        return 2.0 * max(self.ax, self.ay)

    @property
    def bounding_box(self):
        return (self.center - self.ax, self.center + self.ax, -self.ay, self.ay)

    def level(self, r, s):
        return ((np.asarray(r) - self.center) / self.ax) ** 2 + (np.asarray(s) / self.ay) ** 2

    def contains(self, r, s, closed: bool = False):
        q = self.level(r, s)
        if closed:
            out = (q <= 1.0) & (q >= self.inner ** 2)
        elif self.inner > 0:
            out = (q < 1.0) & (q > self.inner ** 2)
        else:
            out = q < 1.0
        return bool(out) if np.ndim(out) == 0 else out

    def _nearest_on(self, k, r, s):
        curve = self.components[k]
        ts = np.linspace(0.0, 1.0, 721)[:-1]
        d2 = (curve.a(ts) - r) ** 2 + (curve.b(ts) - s) ** 2
        t0 = ts[int(np.argmin(d2))]
        if self.ax == self.ay:
            # circle: nearest point is radial
            ang = math.atan2(s * (1 if k == 0 else -1), r - self.center)
            if r == self.center and s == 0.0:
                ang = 0.0
            t = (ang / TWO_PI) % 1.0
        else:
            res = minimize_scalar(
                lambda t: (curve.a(t) - r) ** 2 + (curve.b(t) - s) ** 2,
                bounds=(t0 - 1 / 720, t0 + 1 / 720), method="bounded",
                options={"xatol": 1e-13})
            t = float(res.x) % 1.0
        dist = math.hypot(float(curve.a(t)) - r, float(curve.b(t)) - s)
        return dist, t

    def nearest_boundary(self, r: float, s: float):
        """``(distance, component, t)`` of the closest boundary point."""
        best = None
        for k in range(len(self.components)):
            dist, t = self._nearest_on(k, float(r), float(s))
            if best is None or dist < best[0]:
                best = (dist, k, t)
        return best

    def distance_to_boundary(self, r: float, s: float) -> float:
        return self.nearest_boundary(r, s)[0]

    def classify(self, r: float, s: float, tol: float = 1e-9) -> str:
        if self.distance_to_boundary(r, s) <= tol:
            return "boundary"
        return "interior" if self.contains(r, s) else "exterior"

    # -- polar cover of the upper half about an interior point -----------------

    def _unit_coords(self, r, s):
        return (np.asarray(r) - self.center) / self.ax, np.asarray(s) / self.ay

    def ray_intervals(self, p, phi):
        """Parameter intervals of ``p + t (cos phi, sin phi)``, ``t >= 0``, inside the upper half.

        Returns ``(lo1, hi1, lo2, hi2)`` arrays; empty intervals have ``hi <= lo``.
        ``p`` must lie in the closed upper half of the domain.
        """
        pr, ps = p
        er, es = np.cos(phi), np.sin(phi)
        ur, us = self._unit_coords(pr, ps)
        vr, vs = er / self.ax, es / self.ay
        A = vr ** 2 + vs ** 2
        B = 2 * (ur * vr + us * vs)

        def roots(level):
            C = ur ** 2 + us ** 2 - level
            disc = B ** 2 - 4 * A * C
            sq = np.sqrt(np.maximum(disc, 0.0))
            return (-B - sq) / (2 * A), (-B + sq) / (2 * A), disc

        _, t_out, _ = roots(1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_axis = np.where(es < 0, -ps / es, np.inf)
        T = np.minimum(np.maximum(t_out, 0.0), np.maximum(t_axis, 0.0))
        lo1 = np.zeros_like(T)
        hi1 = T.copy()
        lo2 = np.zeros_like(T)
        hi2 = np.zeros_like(T)
        if self.inner > 0:
            h1, h2, disc = roots(self.inner ** 2)
            hit = (disc > 0) & (h2 > 0)
            hi1 = np.where(hit, np.minimum(T, np.maximum(h1, 0.0)), T)
            lo2 = np.where(hit, h2, 0.0)
            hi2 = np.where(hit & (h2 < T), T, 0.0)
        return lo1, hi1, lo2, hi2

    def critical_directions(self, p) -> np.ndarray:
        """Ray directions from ``p`` where the upper-half ray intervals lose smoothness."""
        pr, ps = p
        angles = [0.0, math.pi]
        for scale in (1.0, self.inner):
            if scale == 0.0:
                continue
            for sx in (-1.0, 1.0):
                cr = self.center + sx * scale * self.ax
                if abs(cr - pr) + abs(ps) > 1e-14:
                    angles.append(math.atan2(-ps, cr - pr))
        if self.inner > 0:
            ur, us = self._unit_coords(pr, ps)
            dist = math.hypot(ur, us)
            if dist > self.inner:
                base = math.atan2(-us, -ur)
                half = math.asin(self.inner / dist)
                for psi in (base - half, base + half):
                    angles.append(math.atan2(self.ay * math.sin(psi), self.ax * math.cos(psi)))
        angles = np.unique(np.round(np.mod(angles, TWO_PI), 14))
        return angles

    def __repr__(self):
        return f"PlanarDomain({self.label})"


def parse_domain(text: str) -> PlanarDomain:
    """``disk:c,r``, ``annulus:c,r1,r2`` or ``ellipse:c,ax,ay``."""
    kind, _, rest = text.strip().partition(":")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise ValueError(f"bad number in domain spec {text!r}") from None
    kind = kind.lower()
    arity = {"disk": 2, "annulus": 3, "ellipse": 3}
    if kind not in arity:
        raise ValueError(f"unknown domain kind {kind!r}")
    if len(vals) != arity[kind]:
        raise ValueError(f"{kind} expects {arity[kind]} numbers, got {len(vals)}")
    return getattr(PlanarDomain, kind)(*vals)


# -- genuine imaginary spheres ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Gis:
    """Orthonormal basis ``(1, v_1, ..., v_{m-1})`` of the subspace M inducing S."""

    algebra: AlgebraSpec
    basis: tuple[Element, ...]
    label: str = ""

    @property
    def m(self) -> int:
        return len(self.basis)

    @property
    def basis_matrix(self) -> np.ndarray:
        return np.array([v.coeffs for v in self.basis])

    @classmethod
    def full_quaternion(cls) -> "Gis":
        H = get_algebra("quaternion")
        return cls(H, tuple(H.basis(k) for k in range(4)), "full")

    @classmethod
    def paravector(cls, algebra: AlgebraSpec) -> "Gis":
        if not algebra.name.startswith("clifford:"):
            raise ValueError("the paravector gis needs a Clifford algebra")
        n = int(algebra.name.split(":")[1])
        return cls(algebra, tuple(algebra.basis(k) for k in range(n + 1)), "paravector")

    @classmethod
    def plane(cls, J: Element, tol: float = DEFAULT_TOL) -> "Gis":
        if not is_imaginary_unit(J, tol):
            raise ValueError("plane gis needs an imaginary unit")
        return cls(J.algebra, (J.algebra.one(), J), "plane")

    def gram(self) -> np.ndarray:
        """``(x, y) = t(x y^c) / 2`` on the basis (real parts)."""
        B = self.basis_matrix
        alg = self.algebra
        prods = alg.mul_arrays(B[:, None, :], alg.conj_arrays(B)[None, :, :])
        return 0.5 * alg.trace_arrays(prods)[..., 0]

    def validate(self, samples: int = 64, tol: float = 1e-10, seed: int = 0) -> None:
        from .algebra import in_quadratic_cone

        if not self.basis[0].allclose(self.algebra.one()):
            raise ValueError("first gis basis vector must be 1")
        if np.abs(self.gram() - np.eye(self.m)).max() > tol:
            raise ValueError("gis basis is not orthonormal")
        rng = np.random.default_rng(seed)
        for v in self.basis:
            if not in_quadratic_cone(v):
                raise ValueError("gis basis vector outside the quadratic cone")
        B = self.basis_matrix
        for _ in range(samples):
            u = rng.normal(size=self.m - 1)
            u /= np.linalg.norm(u)
            J = Element(self.algebra, u @ B[1:])
            if not is_imaginary_unit(J, 1e-9):
                raise ValueError("a unit vector of the trace-free part is not an imaginary unit")
            x = Element(self.algebra, rng.normal(size=self.m) @ B)
            if not in_quadratic_cone(x):
                raise ValueError("M is not contained in the quadratic cone")

    def units(self, theta) -> np.ndarray:
        """``J_theta`` coefficient arrays for an array of angles ``(..., m-2)``."""
        B = self.basis_matrix
        if self.m == 2:
            shape = np.shape(theta)[:-1]
            return np.broadcast_to(B[1], shape + (self.algebra.dim,)).copy()
        return _phi(self.m - 2, np.asarray(theta, dtype=float)) @ B[1:]

    def coordinates(self, x) -> np.ndarray:
        """Orthogonal projection coefficients of ``x`` onto M."""
        return np.asarray(x, dtype=float) @ self.basis_matrix.T

    def __repr__(self):
        return f"Gis({self.label or 'custom'}, {self.algebra.name}, m={self.m})"


def parse_gis(text: str, algebra: AlgebraSpec) -> Gis:
    """``full``, ``paravector`` or ``plane:<unit>``."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    if kind == "full":
        if algebra.name != "quaternion":
            raise ValueError("the full gis is only available for quaternions")
        return Gis.full_quaternion()
    if kind == "paravector":
        return Gis.paravector(algebra)
    if kind == "plane":
        J = algebra.parse(rest)
        n = float(np.linalg.norm(J.coeffs))
        if n == 0:
            raise ValueError("plane unit must be non-zero")
        return Gis.plane(J / n)
    raise ValueError(f"unknown gis {text!r}")


def gis_unit(gis: Gis, theta) -> Element:
    if gis.m == 2:
        raise ValueError("m = 2: S = {J, -J} has no angular parameter")
    theta = _check_theta(gis.m - 2, theta, upper=True)
    return Element(gis.algebra, gis.units(theta))


# -- charts ----------------------------------------------------------------------

def psi_arrays(domain: PlanarDomain, gis: Gis, t, theta, component: int = 0):
    """Boundary chart on arrays: ``w``, weight, outer normal, plus ``a, b, a', b'``."""
    curve = domain.components[component]
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    J = gis.units(theta)
    a, b, da, db = curve.a(t), curve.b(t), curve.da(t), curve.db(t)
    speed = np.hypot(da, db)
    In = jacobian_In(gis.m - 2, theta) if gis.m > 2 else np.ones(theta.shape[:-1])
    w = b[..., None] * J
    w[..., 0] += a
    weight = np.abs(b) ** (gis.m - 2) * In * speed
    normal = (-da / speed)[..., None] * J
    normal[..., 0] += db / speed
    return w, weight, normal


def boundary_point_psi(domain: PlanarDomain, gis: Gis, t: float, theta=(), component: int = 0):
    """``(w, dsigma weight, outer normal)`` at chart coordinates ``(t, theta)``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    theta = _check_theta(gis.m - 2, np.asarray(theta, dtype=float).reshape(gis.m - 2), upper=True)
    curve = domain.components[component]
    if math.hypot(float(curve.da(t)), float(curve.db(t))) < 1e-14:
        raise ValueError("degenerate boundary tangent")
    w, weight, normal = psi_arrays(domain, gis, np.array(t), theta, component)
    return Element(gis.algebra, w), float(weight), Element(gis.algebra, normal)


def volume_point_gamma(domain: PlanarDomain, gis: Gis, r: float, s: float, theta=()):
    """``(w, dw weight)`` at ``w = r + s J_theta``."""
    if not domain.contains(r, s):
        raise ValueError(f"({r:g}, {s:g}) is not in the domain")
    if s == 0.0:
        raise ValueError("s must be non-zero")
    theta = _check_theta(gis.m - 2, np.asarray(theta, dtype=float).reshape(gis.m - 2), upper=True)
    J = gis.units(theta)
    w = s * J
    w[0] += r
    In = float(jacobian_In(gis.m - 2, theta)) if gis.m > 2 else 1.0
    return Element(gis.algebra, w), abs(s) ** (gis.m - 2) * In


def circularize_membership(domain: PlanarDomain, gis: Gis, x: Element, tol: float = 1e-9) -> str:
    """Classify ``x`` against the circularization: interior, boundary, exterior or outside-M."""
    c = gis.coordinates(x.coeffs)
    residual = np.linalg.norm(x.coeffs - c @ gis.basis_matrix)
    if residual > tol:
        return "outside-M"
    alpha = float(c[0])
    beta = float(np.linalg.norm(c[1:]))
    return domain.classify(alpha, beta, tol)
