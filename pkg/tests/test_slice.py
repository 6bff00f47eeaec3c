import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicecauchy import (
    CoordinateDatum,
    Element,
    NotInvertibleError,
    PlanarDomain,
    SliceRegularPolynomial,
    StemFunction,
    cauchy_kernel_C,
    char_poly,
    conj_stem,
    get_algebra,
    identity_stem,
    induce,
    mul,
    normsq_stem,
    representation,
    slice_derivative,
)
from slicecauchy.slice import OutsideDomainError, kernel_arrays

H = get_algebra("quaternion")
small = st.floats(min_value=-2, max_value=2, allow_nan=False)


def square_stem(algebra):
    return StemFunction(algebra, lambda a, b: a * a - b * b, lambda a, b: 2 * a * b, name="sq")


def random_quaternions(n, seed=0):
    rng = np.random.default_rng(seed)
    return [Element(H, v) for v in rng.normal(size=(n, 4))]


def test_induce_examples():
    for x in random_quaternions(10):
        assert induce(identity_stem(H), x).allclose(x)
        assert induce(square_stem(H), x).allclose(mul(x, x), atol=1e-12)
        assert induce(conj_stem(H), x).allclose(x.conj())


def test_induce_real_point_checks_F2():
    bad = StemFunction(H, lambda a, b: a, lambda a, b: np.ones_like(a))
    with pytest.raises(ValueError):
        induce(bad, H.scalar(0.5))
    assert induce(square_stem(H), H.scalar(3.0)).allclose(H.scalar(9.0))


def test_induce_outside_domain():
    F = StemFunction(H, lambda a, b: a, lambda a, b: b, domain=PlanarDomain.disk(0, 1))
    with pytest.raises(OutsideDomainError):
        induce(F, H.parse("2i"))


def test_slice_derivative_examples():
    x = H.parse("0.3+0.2i-0.1k")
    assert slice_derivative(identity_stem(H), x).allclose(H.scalar(0))
    assert slice_derivative(conj_stem(H), x).allclose(H.one())
    fd_normsq = StemFunction(H, lambda a, b: a * a + b * b, lambda a, b: np.zeros_like(a))
    assert slice_derivative(fd_normsq, x).allclose(x, atol=1e-9)
    assert slice_derivative(normsq_stem(H), x).allclose(x, atol=1e-15)


def test_slice_derivative_stencil_near_boundary():
    F = StemFunction(H, lambda a, b: a * a + b * b, lambda a, b: np.zeros_like(a),
                     domain=PlanarDomain.disk(0, 1))
    with pytest.raises(OutsideDomainError):
        slice_derivative(F, H.parse("0.999999"), h=1e-5)


def test_fd_and_analytic_derivative_agree_to_second_order():
    expo = StemFunction(
        H,
        lambda a, b: np.exp(a) * np.cos(b) + a * a + b * b,
        lambda a, b: np.exp(a) * np.sin(b),
        dzbar=lambda a, b: (a, b),
    )
    fd = StemFunction(H, expo.F1, expo.F2)
    x = H.parse("0.2+0.4j")
    exact = slice_derivative(expo, x)
    errs = [(slice_derivative(fd, x, h=h) - exact).euclidean_norm() for h in (1e-2, 5e-3)]
    assert errs[1] < errs[0] / 3.5


def test_stem_symmetry():
    a = np.linspace(-1, 1, 7)[:, None]
    b = np.linspace(0.1, 1, 5)[None, :]
    for F in (identity_stem(H), conj_stem(H), normsq_stem(H), square_stem(H)):
        assert F.symmetry_residual(a, b) <= 1e-10
    P = SliceRegularPolynomial([H.parse("1+i"), H.parse("-2j"), H.parse("0.5k")])
    assert P.stem().symmetry_residual(a, b) == 0.0


def test_char_poly_examples():
    w = H.parse("0.3-1.2i+0.5k")
    assert char_poly(w, w).allclose(H.scalar(0), atol=1e-14)
    x = H.parse("0.4+0.1j")
    assert char_poly(H.basis("i"), x).allclose(mul(x, x) + 1.0)
    assert char_poly(H.parse("1+j"), H.scalar(2)).allclose(H.scalar(2))


def test_kernel_in_a_plane_is_complex_inverse():
    x, w = H.parse("0.2+0.3i"), H.parse("-0.5+1.1i")
    q = 1.0 / (complex(-0.5, 1.1) - complex(0.2, 0.3))
    assert cauchy_kernel_C(x, w).allclose(H.parse(f"{q.real}") + H.basis("i") * q.imag, 1e-14)


def test_kernel_at_origin_is_inverse():
    w = H.parse("0.3-1.2i+0.5k")
    assert cauchy_kernel_C(H.scalar(0), w).allclose(w.conj() / float(np.dot(w.coeffs, w.coeffs)))


def test_kernel_mixed_planes_frozen():
    # frozen from the representation-formula oracle in the plane of w = i
    got = cauchy_kernel_C(H.parse("0.5j"), H.basis("i"))
    assert got.allclose(Element(H, [0.0, -4.0 / 3.0, -2.0 / 3.0, 0.0]), atol=1e-15)


def test_kernel_singular_on_sphere():
    with pytest.raises(NotInvertibleError):
        cauchy_kernel_C(H.basis("j"), H.basis("i"))


@settings(max_examples=100, deadline=None)
@given(small, small, small, small, st.sampled_from(["i", "j", "0.6i+0.8k"]))
def test_kernel_product_identity(a1, b1, a2, b2, unit):
    J = H.parse(unit)
    x, w = H.scalar(a1) + J * b1, H.scalar(a2) + J * b2
    if abs(complex(a1, b1) - complex(a2, b2)) < 1e-2 or abs(complex(a1, b1) - complex(a2, -b2)) < 1e-2:
        return
    assert mul(cauchy_kernel_C(x, w), w - x).allclose(H.one(), atol=1e-12)


def test_kernel_is_slice_regular_in_x():
    """Discrete Cauchy-Riemann check of C(., w) in the plane of i."""
    w = H.parse("1.3+0.4j-0.2k")
    I = H.basis("i")

    def stem_values(a, b):
        x = np.array([a, b, 0.0, 0.0])
        return kernel_arrays(H, x, w.coeffs)

    a0, b0 = 0.2, 0.3
    residuals = []
    for h in (1e-2, 1e-3):
        da = (stem_values(a0 + h, b0) - stem_values(a0 - h, b0)) / (2 * h)
        db = (stem_values(a0, b0 + h) - stem_values(a0, b0 - h)) / (2 * h)
        # d/dzbar on the plane: (d/da + I d/db) / 2
        residuals.append(np.linalg.norm(0.5 * (da + H.mul_arrays(I.coeffs, db))))
    assert residuals[1] < 1e-6 and residuals[1] < residuals[0]


def test_representation_examples():
    I = (H.basis("i") + H.basis("j")) / math.sqrt(2)
    J = H.basis("i")
    v = H.parse("0.7-0.1k")
    assert representation(v, v, I, J).allclose(v)
    a, b = 0.3, 0.8
    xp, xm = H.scalar(a) + J * b, H.scalar(a) - J * b
    assert representation(xp, xm, I, J).allclose(H.scalar(a) + I * b)
    x = H.scalar(a) + I * b
    sq = representation(mul(xp, xp), mul(xm, xm), I, J)
    assert sq.allclose(mul(x, x), atol=1e-14)
    assert representation(mul(xp, xp), mul(xm, xm), J, J).allclose(mul(xp, xp), atol=0)
    with pytest.raises(ValueError):
        representation(v, v, H.one(), J)


def test_polynomial_product_matches_pointwise_in_plane():
    J = H.parse("0.6j+0.8k")
    P = SliceRegularPolynomial([H.scalar(1) + J * 2, J * -1])
    Q = SliceRegularPolynomial([J * 0.5, H.scalar(3)])
    x = H.scalar(0.3) + J * 0.4
    assert (P * Q)(x).allclose(mul(P(x), Q(x)), atol=1e-14)
    assert (P * Q).degree == 2


def test_polynomial_horner_matches_powers():
    coeffs = [H.parse("1"), H.parse("-2+i"), H.parse("0"), H.parse("j")]
    P = SliceRegularPolynomial(coeffs)
    x = H.parse("0.3+0.2i-0.4k")
    acc, power = H.scalar(0), H.one()
    for a in coeffs:
        acc = acc + mul(power, a)
        power = mul(power, x)
    assert P(x).allclose(acc, atol=1e-14)
    assert induce(P.stem(), x).allclose(acc, atol=1e-14)


def test_coordinate_datum():
    f = CoordinateDatum(H)
    assert f(H.parse("0.3+0.2i+0.7j")).allclose(H.parse("0.3+0.2i"))
