import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfgt.errors import BoundedWithoutClosure, NumericalFailure
from pfgt.fields import (
    Grid,
    ScalarField,
    SymTensorField,
    VectorField,
    bilaplacian,
    crop,
    divergence,
    gradient,
    hessian,
    integrate,
    laplacian,
    sh_linear_apply,
)


def periodic_2d(n=32, L=2 * np.pi):
    return Grid.box((n, n), (L, L))


def test_grid_layout_is_y_outermost():
    g = Grid.box((16, 10), (4.0, 2.0))
    assert g.shape == (10, 16)
    x = g.coords()
    assert x.shape == (10, 16, 2)
    assert x[0, 1, 0] == pytest.approx(0.25) and x[1, 0, 1] == pytest.approx(0.2)


def test_bounded_spacing_counts_cells_between_walls():
    g = Grid.box(11, 5.0, "bounded")
    assert g.h == (0.5,) and g.length == (5.0,)


@pytest.mark.parametrize("bad", [dict(dim=3, n=(8,), h=(1.0,)), dict(dim=1, n=(4,), h=(1.0,)), dict(dim=1, n=(8,), h=(0.0,))])
def test_grid_rejects_invalid_input(bad):
    with pytest.raises(ValueError):
        Grid(**bad)


def test_spectral_operators_exact_on_a_fourier_mode():
    g = periodic_2d()
    x, y = g.coords()[..., 0], g.coords()[..., 1]
    phi = ScalarField(g, np.sin(2 * x) * np.cos(3 * y))
    gr = gradient(phi).values
    assert np.allclose(gr[..., 0], 2 * np.cos(2 * x) * np.cos(3 * y), atol=1e-12)
    assert np.allclose(gr[..., 1], -3 * np.sin(2 * x) * np.sin(3 * y), atol=1e-12)
    assert np.allclose(laplacian(phi).values, -13 * phi.values, atol=1e-11)
    assert np.allclose(bilaplacian(phi).values, 169 * phi.values, atol=1e-9)
    H = hessian(phi).values
    assert np.allclose(H[..., 0, 1], H[..., 1, 0])
    assert np.allclose(H[..., 0, 1], -6 * np.cos(2 * x) * np.sin(3 * y), atol=1e-11)


def test_sh_operator_symbol():
    g = Grid.box(64, 8 * np.pi)
    x = g.coords()[..., 0]
    for k in (0.25, 0.5, 1.0, 1.5):
        phi = ScalarField(g, np.cos(k * x))
        out = sh_linear_apply(phi, 1.0).values
        assert np.allclose(out, (1 - k * k) ** 2 * phi.values, atol=1e-11)


def test_divergence_of_gradient_is_laplacian():
    # resolved well enough that the Nyquist content is below round-off
    g = periodic_2d(64)
    x = g.coords()
    phi = ScalarField(g, np.exp(np.sin(x[..., 0])) * np.cos(x[..., 1]))
    assert np.allclose(divergence(gradient(phi)).values, laplacian(phi).values, atol=1e-10)


def fd_error(n):
    g = Grid.box(n, 2.0, "bounded")
    x = g.coords(2)[..., 0]
    phi = ScalarField(g, np.sin(1.7 * x), pad=2)
    lap = laplacian(phi, trim=True)
    exact = -(1.7**2) * np.sin(1.7 * g.coords(lap.pad)[..., 0])
    return np.abs(lap.values - exact).max(), g.h[0]


def test_bounded_laplacian_is_second_order():
    (e1, h1), (e2, h2) = fd_error(41), fd_error(81)
    assert np.log(e1 / e2) / np.log(h1 / h2) == pytest.approx(2.0, abs=0.1)


def test_bounded_operators_need_ghosts_unless_trimmed():
    g = Grid.box(16, 1.0, "bounded")
    phi = ScalarField(g, np.zeros(16))
    with pytest.raises(BoundedWithoutClosure):
        laplacian(phi)
    assert laplacian(phi, trim=True).pad == -1


def test_crop_removes_layers():
    g = Grid.box((10, 9), (1.0, 1.0), "bounded")
    f = ScalarField(g, np.arange(13 * 14, dtype=float).reshape(13, 14), pad=2)
    c = crop(f, 0)
    assert c.values.shape == g.shape and c.values[0, 0] == f.values[2, 2]
    with pytest.raises(ValueError):
        crop(c, 1)


def test_non_finite_values_raise_numerical_failure():
    g = Grid.box(8, 1.0)
    v = np.zeros(8)
    v[3] = np.nan
    with pytest.raises(NumericalFailure):
        ScalarField(g, v)


def test_field_shapes_are_validated():
    g = Grid.box((8, 8), (1.0, 1.0))
    with pytest.raises(ValueError):
        VectorField(g, np.zeros((8, 8, 3)))
    with pytest.raises(ValueError):
        SymTensorField(g, np.tile(np.array([[0.0, 1.0], [0.0, 0.0]]), (8, 8, 1, 1)))


def test_trapezoidal_integral_on_bounded_grid():
    g = Grid.box(21, 2.0, "bounded")
    x = g.coords()[..., 0]
    assert integrate(ScalarField(g, 3 * x + 1)) == pytest.approx(8.0, rel=1e-14)


@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    seed=st.integers(0, 2**32 - 1),
)
def test_laplacian_is_linear(a, b, seed):
    g = periodic_2d(16)
    r = np.random.default_rng(seed)
    u, v = (ScalarField(g, r.standard_normal(g.shape)) for _ in range(2))
    lhs = laplacian(ScalarField(g, a * u.values + b * v.values)).values
    rhs = a * laplacian(u).values + b * laplacian(v).values
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + abs(a) + abs(b)))


@given(seed=st.integers(0, 2**32 - 1))
def test_periodic_laplacian_has_zero_mean(seed):
    g = periodic_2d(16)
    phi = ScalarField(g, np.random.default_rng(seed).standard_normal(g.shape))
    assert abs(integrate(laplacian(phi))) < 1e-10
