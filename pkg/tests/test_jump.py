import pytest

from slicecauchy import (
    CoordinateDatum,
    Gis,
    PlanarDomain,
    SliceRegularPolynomial,
    conj_stem,
    mul,
)
from slicecauchy.algebra import invert_in_plane
from slicecauchy.jump import (
    SideError,
    boundary_points_on_plane,
    cauchy_transform,
    extension_test,
    jump_check,
    near_boundary_grid,
    richardson,
    slice_transform_F_theta,
    theta_average,
)
from slicecauchy.quadrature import QuadratureGrid

FINE_OFFSETS = (0.04, 0.02, 0.01)


@pytest.fixture(scope="module")
def planes(H):
    return Gis.plane(H.basis("i")), Gis.plane(H.basis("j"))


def test_plane_datum_values(H, disk, planes):
    S, Sp = planes
    f = CoordinateDatum(H)
    for text in ("0.3+0.2i", "-0.1-0.5i"):
        x = H.parse(text)
        assert cauchy_transform(S, disk, f, x).allclose(x, atol=1e-12)
    assert cauchy_transform(S, disk, f, H.parse("1.5+0.5i"), side="minus").allclose(H.scalar(0), atol=1e-12)
    for text in ("0.3+0.2j", "-0.4-0.1j"):
        x = H.parse(text)
        assert cauchy_transform(Sp, disk, f, x).allclose(x * 0.5, atol=1e-12)
    x = H.parse("1.5+0.5j")
    got = cauchy_transform(Sp, disk, f, x, side="minus")
    assert got.allclose(H.parse("-0.3+0.1j"), atol=1e-12)
    assert got.allclose(invert_in_plane(x) * -0.5, atol=1e-12)


def test_constant_has_zero_exterior_transform(H, full_gis, disk):
    one = SliceRegularPolynomial([H.one()])
    assert cauchy_transform(full_gis, disk, one, H.parse("0.1+0.2k"), QuadratureGrid(n_theta=8)).allclose(H.one(), atol=1e-13)
    assert cauchy_transform(full_gis, disk, one, H.parse("1.6-0.2i"), QuadratureGrid(n_theta=8),
                            side="minus").allclose(H.scalar(0), atol=1e-13)


def test_conjugate_on_circle(H, full_gis, disk):
    """On the unit circle x^c = x^{-1}: F^+ = 0 and F^- = -x^{-1}."""
    grid = QuadratureGrid(n_t=128, n_theta=8)
    f = conj_stem(H)
    assert cauchy_transform(full_gis, disk, f, H.parse("0.2-0.3j"), grid).allclose(H.scalar(0), atol=1e-13)
    x = H.parse("1.2+0.9i-0.3k")
    assert cauchy_transform(full_gis, disk, f, x, grid, side="minus").allclose(-invert_in_plane(x), atol=1e-12)


def test_exterior_decay(H, full_gis, disk):
    f = SliceRegularPolynomial([H.parse("j"), H.one()])
    grid = QuadratureGrid(n_theta=8)
    norms = [cauchy_transform(full_gis, disk, f, H.scalar(0) + H.basis("i") * R, grid, side="minus").euclidean_norm()
             for R in (2.0, 4.0, 8.0)]
    assert norms == pytest.approx([0.0, 0.0, 0.0], abs=1e-13)
    f = CoordinateDatum(H)
    Sp = Gis.plane(H.basis("j"))
    norms = [cauchy_transform(Sp, disk, f, H.basis("j") * R, side="minus").euclidean_norm()
             for R in (2.0, 4.0, 8.0)]
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] * 8 == pytest.approx(0.5, rel=1e-12)


def test_side_errors(H, full_gis, disk):
    f = SliceRegularPolynomial([H.one()])
    with pytest.raises(SideError):
        cauchy_transform(full_gis, disk, f, H.parse("2i"))
    with pytest.raises(SideError):
        cauchy_transform(full_gis, disk, f, H.parse("0.5i"), side="minus")
    with pytest.raises(SideError):
        cauchy_transform(full_gis, disk, f, H.parse("0.99i"))
    with pytest.raises(ValueError):
        cauchy_transform(full_gis, disk, f, H.parse("0.5i"), side="left")


def test_richardson_removes_linear_term(H):
    vals = [H.scalar(2 + 3 * d) for d in (0.4, 0.2, 0.1)]
    assert richardson(vals, [0.4, 0.2, 0.1]).allclose(H.scalar(2), atol=1e-14)


def test_offsets_validation(H, disk, planes):
    S, _ = planes
    f = CoordinateDatum(H)
    xhat = H.parse("0.6+0.8i")
    for bad in ([0.1], [0.01, 0.02], [0.02, -0.01]):
        with pytest.raises(ValueError):
            jump_check(S, disk, f, xhat, offsets=bad)
    with pytest.raises(ValueError):
        jump_check(S, disk, f, H.parse("0.5i"))
    with pytest.raises(ValueError):
        jump_check(S, PlanarDomain.annulus(0, 0.5, 1), f, xhat, offsets=[0.6, 0.3])


def test_near_boundary_grid():
    assert near_boundary_grid(0.01).n_t == 4096
    assert near_boundary_grid(1.0).n_t == QuadratureGrid().n_t
    assert near_boundary_grid(0.01, QuadratureGrid(n_theta=4)).n_theta == 4


def test_jump_equals_data_on_plane_S(H, disk, planes):
    S, _ = planes
    f = CoordinateDatum(H)
    for xhat in boundary_points_on_plane(S, disk, 4):
        rep = jump_check(S, disk, f, xhat, offsets=FINE_OFFSETS)
        assert rep.residual < 1e-8
        assert rep.f_minus.euclidean_norm() < 1e-8
        assert rep.monotone


def test_jump_equals_data_on_plane_S_prime(H, disk, planes):
    _, Sp = planes
    f = CoordinateDatum(H)
    for xhat in boundary_points_on_plane(Sp, disk, 4):
        rep = jump_check(Sp, disk, f, xhat, offsets=FINE_OFFSETS)
        assert rep.residual < 5e-4
        assert rep.f_plus.allclose(xhat * 0.5, atol=5e-4)
        assert rep.f_minus.allclose(invert_in_plane(xhat) * -0.5, atol=5e-4)


def test_jump_full_gis_square(H, full_gis, disk):
    f = SliceRegularPolynomial([H.scalar(0), H.scalar(0), H.one()])
    xhat = H.parse("0.6") + H.parse("0.8j")
    rep = jump_check(full_gis, disk, f, xhat, QuadratureGrid(n_t=2048, n_theta=8), offsets=FINE_OFFSETS)
    assert rep.residual < 1e-3
    assert rep.f_minus.euclidean_norm() < 1e-3
    assert rep.f_plus.allclose(mul(xhat, xhat), atol=1e-3)


def test_extension(H, disk, planes):
    S, Sp = planes
    f = CoordinateDatum(H)
    yes = extension_test(S, disk, f, offsets=FINE_OFFSETS)
    assert yes.extends and yes.max_minus_norm < 1e-8
    x = H.parse("0.2-0.4i")
    assert yes.extension(x).allclose(x, atol=1e-12)
    no = extension_test(Sp, disk, f, offsets=FINE_OFFSETS)
    assert not no.extends and no.max_minus_norm == pytest.approx(0.5, abs=1e-3)
    assert no.extension is None


def test_extension_projects_exterior_probes(H, disk, planes):
    S, _ = planes
    f = CoordinateDatum(H)
    res = extension_test(S, disk, f, probes=[H.parse("2+2i"), H.parse("-1.5i")], offsets=FINE_OFFSETS)
    assert res.extends and len(res.minus_limits) == 2
    with pytest.raises(ValueError):
        extension_test(S, disk, f, probes=[H.parse("0.1i")])


@pytest.mark.parametrize("side,point", [("plus", "0.2+0.3i-0.1j"), ("minus", "1.1-0.8k")])
def test_theta_average_matches_transform(H, full_gis, disk, side, point):
    f = SliceRegularPolynomial([H.parse("k"), H.parse("1-j")])
    x = H.parse(point)
    grid = QuadratureGrid(n_theta=8)
    assert theta_average(full_gis, disk, f, x, grid, side).allclose(
        cauchy_transform(full_gis, disk, f, x, grid, side), atol=1e-15)


def test_single_slice_transform(H, full_gis, disk):
    """Regular data: each slice transform already reproduces f inside."""
    f = SliceRegularPolynomial([H.parse("k"), H.parse("1-j")])
    x = H.parse("0.2+0.3i-0.1j")
    for th in ((0.5, 0.3), (3.0, 1.0)):
        assert slice_transform_F_theta(full_gis, disk, f, x, th).allclose(f(x), atol=1e-12)
