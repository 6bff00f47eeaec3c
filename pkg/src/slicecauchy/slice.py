"""Stem functions, the slice functions they induce, and the slice Cauchy kernel."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    AlgebraSpec,
    Element,
    NotInConeError,
    NotInvertibleError,
    conj,
    decompose,
    decompose_arrays,
    in_quadratic_cone,
    invert_arrays,
    is_imaginary_unit,
    mul,
    norm,
    trace,
)

FD_STEP = 1e-5


class OutsideDomainError(ValueError):
    pass


def _embed(values, shape, dim):
    """Promote real-valued stem output to coefficient arrays."""
    v = np.asarray(values, dtype=float)
    if v.shape == shape + (dim,):
        return v
    v = np.broadcast_to(v, shape)
    out = np.zeros(shape + (dim,))
    out[..., 0] = v
    return out


class StemFunction:
    """A stem ``F = F1 + i F2`` on a conjugation-symmetric planar domain.

    ``F1`` and ``F2`` take broadcastable ``alpha, beta`` arrays and return either
    real arrays (embedded as real elements) or coefficient arrays of shape
    ``(..., d)``. ``dzbar`` optionally returns the pair of components of
    ``dF/dzbar`` in the same convention.
    """

    def __init__(self, algebra: AlgebraSpec, F1: Callable, F2: Callable, *,
                 dzbar: Callable | None = None, domain=None, smoothness: str = "C1",
                 slice_regular: bool = False, name: str = "stem"):
        if smoothness not in ("C0", "C1"):
            raise ValueError("smoothness must be 'C0' or 'C1'")
        self.algebra = algebra
        self.F1 = F1
        self.F2 = F2
        self.dzbar = dzbar
        self.domain = domain
        self.smoothness = smoothness
        self.slice_regular = slice_regular
        self.name = name

    def components(self, alpha, beta):
        alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float),
                                          np.asarray(beta, dtype=float))
        d = self.algebra.dim
        return (_embed(self.F1(alpha, beta), alpha.shape, d),
                _embed(self.F2(alpha, beta), alpha.shape, d))

    def dzbar_components(self, alpha, beta, h: float = FD_STEP):
        """Components of ``dF/dzbar``, analytic when available, else central differences."""
        alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float),
                                          np.asarray(beta, dtype=float))
        d = self.algebra.dim
        if self.dzbar is not None:
            G1, G2 = self.dzbar(alpha, beta)
            return _embed(G1, alpha.shape, d), _embed(G2, alpha.shape, d)
        a1p, a2p = self.components(alpha + h, beta)
        a1m, a2m = self.components(alpha - h, beta)
        b1p, b2p = self.components(alpha, beta + h)
        b1m, b2m = self.components(alpha, beta - h)
        dF1_da = (a1p - a1m) / (2 * h)
        dF2_da = (a2p - a2m) / (2 * h)
        dF1_db = (b1p - b1m) / (2 * h)
        dF2_db = (b2p - b2m) / (2 * h)
        # (1/2)(dF/dalpha + i dF/dbeta) split into A-valued parts
        return 0.5 * (dF1_da - dF2_db), 0.5 * (dF2_da + dF1_db)

    def evaluate(self, x):
        """Induced slice function on coefficient arrays ``(..., d)``, unchecked."""
        alpha, beta, J = decompose_arrays(self.algebra, x)
        F1, F2 = self.components(alpha, beta)
        return F1 + self.algebra.mul_arrays(J, F2)

    def __call__(self, x):
        if isinstance(x, Element):
            return induce(self, x)
        return self.evaluate(x)

    def derivative(self, h: float = FD_STEP) -> "StemFunction":
        """The stem ``dF/dzbar``, which induces the slice derivative ``df/dx^c``."""
        if self.smoothness != "C1":
            raise ValueError("slice derivative needs a C1 stem")
        if self.slice_regular:
            zero = lambda a, b: np.zeros(np.shape(a))  # noqa: E731
            return StemFunction(self.algebra, zero, zero, domain=self.domain,
                                smoothness="C0", slice_regular=True, name=f"d{self.name}")
        return StemFunction(
            self.algebra,
            lambda a, b: self.dzbar_components(a, b, h)[0],
            lambda a, b: self.dzbar_components(a, b, h)[1],
            domain=self.domain, smoothness="C0", name=f"d{self.name}")

    def symmetry_residual(self, alpha, beta) -> float:
        """Max violation of ``F1(a,-b) = F1(a,b)``, ``F2(a,-b) = -F2(a,b)`` on samples."""
        F1p, F2p = self.components(alpha, beta)
        F1m, F2m = self.components(alpha, -np.asarray(beta, dtype=float))
        return float(max(np.abs(F1p - F1m).max(), np.abs(F2p + F2m).max()))

    def __repr__(self):
        return f"StemFunction({self.name!r}, {self.algebra.name})"


def _point_plane(F: StemFunction, x: Element, tol: float):
    dec = decompose(x, tol)
    if F.domain is not None and not F.domain.contains(dec.alpha, dec.beta, closed=True):
        raise OutsideDomainError(f"({dec.alpha:g}, {dec.beta:g}) is outside the stem domain")
    return dec


def induce(F: StemFunction, x: Element, tol: float = DEFAULT_TOL) -> Element:
    """``f(x) = F1(alpha, beta) + J F2(alpha, beta)`` for ``x = alpha + beta J``."""
    if x.algebra is not F.algebra:
        raise ValueError("stem and point live in different algebras")
    dec = _point_plane(F, x, tol)
    F1, F2 = F.components(dec.alpha, dec.beta)
    if dec.J is None:
        if np.abs(F2).max() > max(tol, 1e-10):
            raise ValueError("F2 does not vanish at a real point; not a stem function")
        return Element(F.algebra, F1)
    return Element(F.algebra, F1 + F.algebra.mul_arrays(dec.J.coeffs, F2))


def slice_derivative(F: StemFunction, x: Element, h: float = FD_STEP,
                     tol: float = DEFAULT_TOL) -> Element:
    dec = _point_plane(F, x, tol)
    if F.dzbar is None and F.domain is not None:
        if F.domain.distance_to_boundary(dec.alpha, dec.beta) < 2 * h:
            raise OutsideDomainError("point too close to the boundary for the difference stencil")
    return induce(F.derivative(h), x, tol)


# -- characteristic polynomial and Cauchy kernel -------------------------------

def _require_cone(*xs, tol=DEFAULT_TOL):
    for x in xs:
        if not in_quadratic_cone(x, tol):
            raise NotInConeError("argument outside the quadratic cone")


def char_poly(w: Element, x: Element) -> Element:
    """``Delta_w(x) = x^2 - x t(w) + n(w)``."""
    _require_cone(w, x)
    return mul(x, x) - x * trace(w).real + norm(w).real


def kernel_arrays(algebra: AlgebraSpec, x, w):
    """Vectorized ``C(x, w) = Delta_w(x)^{-1} (w^c - x)``; no singularity checks."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    tw = 2.0 * w[..., 0]
    nw = algebra.norm_arrays(w)[..., 0]
    delta = algebra.mul_arrays(x, x) - x * tw[..., None]
    delta[..., 0] += nw
    return algebra.mul_arrays(invert_arrays(algebra, delta), algebra.conj_arrays(w) - x)


def cauchy_kernel_C(x: Element, w: Element, tol: float = DEFAULT_TOL) -> Element:
    delta = char_poly(w, x)
    nd = float(norm(delta).real)
    if abs(nd) <= tol:
        raise NotInvertibleError("x lies on the sphere S_w; Delta_w(x) is not invertible")
    inv = conj(delta) / nd
    return mul(inv, conj(w) - x)


def representation(f_plus: Element, f_minus: Element, I: Element, J: Element,
                   tol: float = DEFAULT_TOL) -> Element:
    """Value at ``alpha + beta I`` from the values at ``alpha +- beta J``."""
    for u in (I, J):
        if not is_imaginary_unit(u, tol):
            raise ValueError("representation formula needs imaginary units")
    return 0.5 * (f_plus + f_minus) - 0.5 * mul(mul(I, J), f_plus - f_minus)


# -- polynomials ---------------------------------------------------------------

class SliceRegularPolynomial:
    """``x -> sum_k x^k a_k`` with right coefficients."""

    slice_regular = True

    def __init__(self, coefficients):
        coefficients = list(coefficients)
        if not coefficients:
            raise ValueError("need at least one coefficient")
        self.algebra = coefficients[0].algebra
        if any(a.algebra is not self.algebra for a in coefficients):
            raise ValueError("coefficients from different algebras")
        self.coefficients = coefficients

    @classmethod
    def from_reals(cls, algebra: AlgebraSpec, values) -> "SliceRegularPolynomial":
        return cls([algebra.scalar(float(v)) for v in values])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.broadcast_to(self.coefficients[-1].coeffs, x.shape).copy()
        for a in reversed(self.coefficients[:-1]):
            acc = a.coeffs + self.algebra.mul_arrays(x, acc)
        return acc

    def __call__(self, x):
        if isinstance(x, Element):
            return Element(self.algebra, self.evaluate(x.coeffs))
        return self.evaluate(x)

    def __mul__(self, other: "SliceRegularPolynomial") -> "SliceRegularPolynomial":
        """Slice product: convolution of coefficient lists."""
        n = len(self.coefficients) + len(other.coefficients) - 1
        out = [self.algebra.scalar(0.0) for _ in range(n)]
        for k, a in enumerate(self.coefficients):
            for l, b in enumerate(other.coefficients):
                out[k + l] = out[k + l] + mul(a, b)
        return SliceRegularPolynomial(out)

    def stem(self) -> StemFunction:
        A = np.array([a.coeffs for a in self.coefficients])

        def parts(alpha, beta):
            z = np.asarray(alpha) + 1j * np.asarray(beta)
            powers = z[..., None] ** np.arange(len(A))
            return powers.real @ A, powers.imag @ A

        return StemFunction(self.algebra, lambda a, b: parts(a, b)[0],
                            lambda a, b: parts(a, b)[1],
                            dzbar=lambda a, b: (np.zeros(np.shape(a)), np.zeros(np.shape(a))),
                            slice_regular=True, name="poly")

    def derivative(self):
        return self.stem().derivative()


# -- built-in stems ------------------------------------------------------------

def identity_stem(algebra: AlgebraSpec) -> StemFunction:
    return StemFunction(algebra, lambda a, b: a, lambda a, b: b,
                        dzbar=lambda a, b: (np.zeros(np.shape(a)), np.zeros(np.shape(a))),
                        slice_regular=True, name="identity")


def conj_stem(algebra: AlgebraSpec) -> StemFunction:
    """``F(z) = zbar``, inducing ``x -> x^c``; ``dF/dzbar = 1``."""
    return StemFunction(algebra, lambda a, b: a, lambda a, b: -np.asarray(b),
                        dzbar=lambda a, b: (np.ones(np.shape(a)), np.zeros(np.shape(a))),
                        name="conj")


def normsq_stem(algebra: AlgebraSpec) -> StemFunction:
    """``F(z) = |z|^2``, inducing ``n(x)``; ``dF/dzbar = z``."""
    return StemFunction(algebra, lambda a, b: np.asarray(a) ** 2 + np.asarray(b) ** 2,
                        lambda a, b: np.zeros(np.shape(a)),
                        dzbar=lambda a, b: (np.asarray(a), np.asarray(b)),
                        name="normsq")


class CoordinateDatum:
    """Boundary datum ``x -> x_0 + x_1 v_1`` read off the coefficients.

    This is not a slice function on the whole algebra, only on a plane gis;
    it is meant as boundary data for Cauchy-type transforms.
    """

    slice_regular = False

    def __init__(self, algebra: AlgebraSpec):
        self.algebra = algebra
        self.name = "remark"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[..., 0] = x[..., 0]
        out[..., 1] = x[..., 1]
        return out

    def __call__(self, x):
        if isinstance(x, Element):
            return Element(self.algebra, self.evaluate(x.coeffs))
        return self.evaluate(x)


def evaluate_function(f, x):
    """Evaluate any supported function object on coefficient arrays."""
    if hasattr(f, "evaluate"):
        return f.evaluate(x)
    return np.asarray(f(x), dtype=float)
