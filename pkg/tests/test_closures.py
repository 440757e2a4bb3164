import numpy as np
import pytest
from _manufactured import observed_orders
from hypothesis import given
from hypothesis import strategies as st

from pfgt.boundary import (
    ChemPot,
    Essential,
    Flux,
    Mixed,
    MixedMass,
    Natural,
    PfcClosure,
    ShClosure,
    enforce_essential,
    face_geometry,
    faces_of,
    ghost_closure_sh,
    natural_tractions,
)
from pfgt.boundary.closures import _lap
from pfgt.constitutive import BulkPotential, PfcParams, ShParams

from pfgt.fields import Grid

PARAMS = ShParams(1.0, 1.0, 1.0, BulkPotential((0.0, 0.0, 0.5, 0.0, 0.25)))
PFC = PfcParams(1.0, 1.0, 1.0, BulkPotential.quartic(0.3))


def wall_quantities(P, grid, face):
    """Central-difference ``dphi/dn``, ``Lap phi`` and ``d Lap/dn`` at a 1D wall."""
    _, s = face_geometry(face)
    h = grid.h[0]
    w = 2 if s < 0 else P.size - 3
    lap = _lap(grid, P)  # pad 1
    lw = w - 1
    dn = s * (P[w + 1] - P[w - 1]) / (2 * h)
    dn_lap = s * (lap[lw + 1] - lap[lw - 1]) / (2 * h)
    return dn, lap[lw], dn_lap


def smooth(grid):
    x = grid.coords()[..., 0]
    return np.cos(1.1 * x) + 0.2 * np.sin(2.3 * x)


def test_faces_and_geometry():
    assert faces_of(Grid.box(8, 1.0, "bounded")) == ("left", "right")
    assert face_geometry("top") == (1, 1)
    with pytest.raises(ValueError):
        face_geometry("front")


def test_natural_ghosts_reproduce_prescribed_tractions():
    grid = Grid.box(33, 3.0, "bounded")
    bc = Natural(xi_env=0.4, sigma_env=-0.3)
    P = ShClosure(grid, {"left": bc, "right": bc}, PARAMS).fill(smooth(grid), 0.0).values
    for face in ("left", "right"):
        dn, lap, dn_lap = wall_quantities(P, grid, face)
        xi_s, sigma_s = natural_tractions(dn, dn_lap, lap, PARAMS)
        assert xi_s == pytest.approx(0.4, abs=1e-12)
        assert sigma_s == pytest.approx(-0.3, abs=1e-12)


def test_essential_ghosts_fix_normal_derivative_and_wall_rate():
    grid = Grid.box(33, 3.0, "bounded")
    bc = Essential(phi_env=lambda x, t: 0.5 * t, dphi_dn_env=0.25)
    closure = ShClosure(grid, {"left": bc, "right": bc}, PARAMS)
    P = closure.fill(smooth(grid), 1.0).values
    rate = closure._rate(P, 1.0)
    for face, w in (("left", 0), ("right", -1)):
        dn, _, _ = wall_quantities(P, grid, face)
        assert dn == pytest.approx(0.25, abs=1e-12)
        assert rate[w] == pytest.approx(0.5, abs=1e-10)


def test_enforce_essential_pins_wall_values():
    grid = Grid.box(16, 1.0, "bounded")
    bc = Essential(phi_env=lambda x, t: 2.0 + t)
    out = enforce_essential(np.zeros(16), grid, {"left": bc, "right": Natural()}, 0.5)
    assert out[0] == 2.5 and out[-1] == 0.0


@pytest.mark.parametrize("shape,length", [((41,), (4.0,)), ((24, 20), (3.0, 2.5))])
def test_stiff_mixed_walls_approach_essential(shape, length):
    grid = Grid.box(shape, length, "bounded")
    x = grid.coords()
    phi = np.cos(1.1 * x[..., 0]) * (1 + 0.3 * np.sin(x[..., -1]))
    env = dict(phi_env=lambda x, t: 0.2 * np.sin(x[..., -1]) + 0.1 * t, dphi_dn_env=lambda x, t: 0.3 * np.cos(x[..., 0]))
    ess = ShClosure(grid, {f: Essential(**env) for f in faces_of(grid)}, PARAMS)
    mix = ShClosure(grid, {f: Mixed(1e8, 1e8, **env) for f in faces_of(grid)}, PARAMS)
    ge = ess.fill(phi, 0.5).values
    gm = mix.fill(phi, 0.5, prev=ess.fill(phi, 0.49).values, dt_back=0.01).values
    assert np.abs(ge - gm).max() <= 1e-6


def test_mixed_walls_need_the_step_size():
    grid = Grid.box(16, 1.0, "bounded")
    closure = ShClosure(grid, {f: Mixed(1.0, 1.0) for f in faces_of(grid)}, PARAMS)
    with pytest.raises(ValueError):
        closure.fill(np.zeros(16), 0.0)


def test_mixed_coefficients_are_validated():
    with pytest.raises(ValueError):
        Mixed(0.0, 1.0)
    with pytest.raises(ValueError):
        MixedMass(-1.0)


def test_functional_wrapper_matches_class():
    grid = Grid.box(20, 2.0, "bounded")
    phi = smooth(grid)
    a = ghost_closure_sh(phi, Natural(0.1, 0.2), t=0.0, params=PARAMS, grid=grid).values
    b = ShClosure(grid, {f: Natural(0.1, 0.2) for f in faces_of(grid)}, PARAMS).fill(phi, 0.0).values
    assert np.array_equal(a, b)


@pytest.mark.parametrize("family", ["essential", "natural"])
def test_manufactured_steady_state_converges_at_second_order(family):
    orders = observed_orders(family)
    assert orders[-1] == pytest.approx(2.0, abs=0.3)


def test_no_flux_ghost_makes_wall_flux_vanish():
    grid = Grid.box(32, 6.0, "bounded")
    g = PfcClosure(grid, {"left": Flux(0.0), "right": Flux(0.7)}, PFC).fill(smooth(grid), 0.0)
    mu = g.mu.values
    h = grid.h[0]
    assert (mu[0] - mu[2]) / (2 * h) == pytest.approx(0.0, abs=1e-12)
    assert PFC.mobility * (mu[-1] - mu[-3]) / (2 * h) == pytest.approx(-0.7, abs=1e-12)


def test_chempot_wall_value_is_prescribed():
    grid = Grid.box(32, 6.0, "bounded")
    g = PfcClosure(grid, {"left": ChemPot(0.3), "right": ChemPot(-0.1)}, PFC).fill(smooth(grid), 0.0)
    assert g.mu.values[1] == 0.3 and g.mu.values[-2] == -0.1


def test_stiff_mixed_mass_approaches_chempot():
    grid = Grid.box(32, 6.0, "bounded")
    a = PfcClosure(grid, {f: ChemPot(0.3) for f in faces_of(grid)}, PFC).fill(smooth(grid), 0.0).mu.values

    def gap(c):
        b = PfcClosure(grid, {f: MixedMass(c, 0.3) for f in faces_of(grid)}, PFC).fill(smooth(grid), 0.0).mu.values
        return np.abs(a - b).max()

    # the transfer law leaves an O(M |mu| / (h c)) remainder
    assert gap(1e10) <= 1e-8 * np.abs(a).max()
    assert gap(1e8) / gap(1e10) == pytest.approx(100.0, rel=1e-3)


def test_mixed_mass_balances_flux_and_transfer():
    grid = Grid.box(32, 6.0, "bounded")
    c, env = 2.0, 0.4
    mu = PfcClosure(grid, {f: MixedMass(c, env) for f in faces_of(grid)}, PFC).fill(smooth(grid), 0.0).mu.values
    h = grid.h[0]
    # one-sided outward derivative at the left wall (node index 1 in the padded array)
    dn = -(-3 * mu[1] + 4 * mu[2] - mu[3]) / (2 * h)
    assert PFC.mobility * dn == pytest.approx(c * (env - mu[1]), abs=1e-10)


def test_conserved_closure_rejects_2d():
    with pytest.raises(ValueError):
        PfcClosure(Grid.box((8, 8), (1.0, 1.0), "bounded"), {}, PFC)


@given(xi=st.floats(-2, 2), sigma=st.floats(-2, 2), seed=st.integers(0, 2**16))
def test_natural_closure_is_exact_for_any_data(xi, sigma, seed):
    grid = Grid.box(17, 2.0, "bounded")
    phi = np.random.default_rng(seed).uniform(-1, 1, 17)
    bc = Natural(xi, sigma)
    P = ShClosure(grid, {"left": bc, "right": bc}, PARAMS).fill(phi, 0.0).values
    for face in ("left", "right"):
        dn, lap, dn_lap = wall_quantities(P, grid, face)
        xs, ss = natural_tractions(dn, dn_lap, lap, PARAMS)
        assert abs(xs - xi) <= 1e-9 and abs(ss - sigma) <= 1e-9
