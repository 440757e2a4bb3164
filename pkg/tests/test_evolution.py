import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfgt.boundary import Essential, Flux, Natural
from pfgt.constitutive import BulkPotential, PfcParams, ShParams
from pfgt.diagnostics import total_free_energy, total_mass
from pfgt.errors import FitFailure, NumericalFailure, StabilityWarning
from pfgt.evolution import (
    InitialCondition,
    SimConfig,
    SimState,
    analytic_growth_rate,
    check_commensurate,
    default_stabilization,
    dispersion_scan,
    initial_field,
    run,
    stability_limit,
    step_pfc,
    step_sh,
)
from pfgt.fields import Grid, ScalarField

QUARTIC = BulkPotential.quartic(0.3)
RING = Grid.box(64, 16 * np.pi)


def mode_state(grid, k, amp=0.1, mean=0.0):
    x = grid.coords()[..., 0]
    return SimState.initial(ScalarField(grid, mean + amp * np.cos(k * x)))


def test_random_ic_is_pcg64_uniform_in_storage_order():
    g = Grid.box((16, 8), (1.0, 1.0))
    phi = initial_field(g, InitialCondition("random", mean=0.2, amplitude=0.1, seed=42))
    ref = 0.2 + np.random.Generator(np.random.PCG64(42)).uniform(-0.1, 0.1, (8, 16))
    assert np.array_equal(phi.values, ref)


def test_unknown_generator_is_rejected():
    with pytest.raises(ValueError):
        InitialCondition("random", rng="mt19937")


def test_commensurability():
    assert check_commensurate(RING, (0.5,)) == (4,)
    with pytest.raises(ValueError):
        check_commensurate(RING, (0.3,))


@pytest.mark.parametrize("k", [0.25, 0.5, 1.0, 1.5])
def test_periodic_sh_step_has_the_semi_implicit_amplification_factor(k):
    # f = (c/2) phi^2 keeps the scheme linear, so one step multiplies the mode
    # by (1 + dt (S - c)/beta) / (1 + dt (lam (1 - k^2)^2 + S)/beta)
    c, S, dt, beta = 0.4, 0.7, 0.3, 2.0
    p = ShParams(1.0, 1.0, beta, BulkPotential((0.0, 0.0, c / 2)))
    cfg = SimConfig("sh", RING, p, dt, 1.0)
    st0 = mode_state(RING, k)
    st1 = step_sh(st0, cfg, S)
    factor = (1 + dt * (S - c) / beta) / (1 + dt * ((1 - k * k) ** 2 + S) / beta)
    assert np.allclose(st1.phi.values, factor * st0.phi.values, atol=1e-14)


@pytest.mark.parametrize("k", [0.25, 0.5, 1.0, 1.5])
def test_periodic_pfc_step_has_the_semi_implicit_amplification_factor(k):
    c, S, dt, M = 0.4, 0.7, 0.3, 1.5
    p = PfcParams(1.0, 1.0, M, BulkPotential((0.0, 0.0, c / 2)))
    cfg = SimConfig("pfc", RING, p, dt, 1.0)
    st0 = mode_state(RING, k)
    st1 = step_pfc(st0, cfg, S)
    factor = (1 - dt * M * k * k * (c - S)) / (1 + dt * M * k * k * ((1 - k * k) ** 2 + S))
    assert np.allclose(st1.phi.values, factor * st0.phi.values, atol=1e-14)


def test_periodic_pfc_conserves_mass_to_the_last_bit():
    g = Grid.box((32, 32), (8 * np.pi, 8 * np.pi))
    cfg = SimConfig("pfc", g, PfcParams(1.0, 1.0, 1.0, QUARTIC), 0.1, 20.0,
                    ic=InitialCondition("random", mean=-0.25, amplitude=0.1, seed=7), cadence=50)
    _, series = run(cfg)
    m = series.column("mass")
    assert np.max(np.abs(m - m[0])) <= 1e-12 * abs(m[0])


def test_default_stabilization_covers_the_concave_part():
    phi = ScalarField(RING, np.full(RING.shape, 0.1))
    # quartic: f'' = -0.3 + 3 phi^2 is smallest at phi = 0
    assert default_stabilization(ShParams(1.0, 1.0, 1.0, QUARTIC), phi) == pytest.approx(0.3)
    # f = -phi^4/4: f'' = -3 phi^2 is smallest at the cap 1.5 max|phi| = 0.15
    concave = ShParams(1.0, 1.0, 1.0, BulkPotential((0.0, 0.0, 0.0, 0.0, -0.25)))
    assert default_stabilization(concave, phi) == pytest.approx(3 * 0.15**2)
    convex = ShParams(1.0, 1.0, 1.0, BulkPotential((0.0, 0.0, 1.0)))
    assert default_stabilization(convex, phi) == 0.0


@given(seed=st.integers(0, 2**32 - 1))
def test_periodic_sh_energy_never_increases(seed):
    g = Grid.box((32, 32), (8 * np.pi, 8 * np.pi))
    cfg = SimConfig("sh", g, ShParams(1.0, 1.0, 1.0, QUARTIC), 0.5, 15.0,
                    ic=InitialCondition("random", amplitude=0.1, seed=seed), cadence=1)
    _, series = run(cfg)
    E = series.column("energy")
    assert np.all(np.diff(E) <= 1e-10 * np.abs(E[:-1]))
    assert E[-1] < E[0]


def test_run_records_initial_cadence_and_final_rows():
    cfg = SimConfig("sh", RING, ShParams(1.0, 1.0, 1.0, QUARTIC), 0.5, 5.5,
                    ic=InitialCondition("random", amplitude=0.1, seed=1), cadence=4)
    seen = []
    state, series = run(cfg, on_snapshot=lambda s: seen.append(s.step))
    assert seen == [0, 4, 8, 11]
    assert list(series.column("t")) == [0.0, 2.0, 4.0, 5.5]
    assert state.time == 11 * 0.5


def test_zero_end_time_gives_one_row():
    cfg = SimConfig("sh", RING, ShParams(1.0, 1.0, 1.0, QUARTIC), 0.5, 0.0)
    state, series = run(cfg)
    assert len(series) == 1 and state.step == 0


def test_bounded_sh_warns_above_the_stability_limit():
    g = Grid.box(32, 8.0, "bounded")
    cfg = SimConfig("sh", g, ShParams(1.0, 1.0, 1.0, QUARTIC), 1.0, 1.0, bcs={"left": Natural(), "right": Natural()})
    assert stability_limit(cfg) == pytest.approx(0.1 * g.h[0] ** 4)
    with pytest.warns(StabilityWarning):
        with pytest.raises(NumericalFailure):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                run(SimConfig("sh", g, cfg.params, 1.0, 50.0, bcs=cfg.bcs,
                              ic=InitialCondition("random", amplitude=0.1, seed=1)))


def test_bounded_sh_keeps_essential_wall_values():
    g = Grid.box(24, 6.0, "bounded")
    bc = Essential(phi_env=0.3, dphi_dn_env=0.0)
    p = ShParams(1.0, 1.0, 1.0, QUARTIC)
    dt = 0.5 * 0.1 * g.h[0] ** 4
    cfg = SimConfig("sh", g, p, dt, 200 * dt, bcs={"left": bc, "right": bc},
                    ic=InitialCondition("constant", mean=0.3), cadence=50)
    state, _ = run(cfg)
    assert state.phi.values[0] == 0.3 and state.phi.values[-1] == 0.3


def test_bounded_no_flux_pfc_conserves_mass():
    g = Grid.box(48, 12.0, "bounded")
    p = PfcParams(1.0, 1.0, 1.0, QUARTIC)
    dt = 0.9 * 0.025 * g.h[0] ** 6
    cfg = SimConfig("pfc", g, p, dt, 300 * dt, bcs={"left": Flux(), "right": Flux()},
                    ic=InitialCondition("random", mean=-0.3, amplitude=0.1, seed=3), cadence=300)
    _, series = run(cfg)
    m = series.column("mass")
    assert abs(m[-1] - m[0]) <= 1e-8 * abs(m[0])


def test_inflow_raises_mass_at_the_prescribed_rate():
    g = Grid.box(48, 12.0, "bounded")
    p = PfcParams(1.0, 1.0, 1.0, QUARTIC)
    dt = 0.9 * 0.025 * g.h[0] ** 6
    steps = 200
    # j_env is the outward species flux, so a negative value feeds mass in
    cfg = SimConfig("pfc", g, p, dt, steps * dt, bcs={"left": Flux(-0.5), "right": Flux(0.0)},
                    ic=InitialCondition("constant", mean=-0.3), cadence=steps)
    state, _ = run(cfg)
    phi0 = ScalarField(g, np.full(g.shape, -0.3))
    gained = total_mass(state.phi) - total_mass(phi0)
    assert gained == pytest.approx(0.5 * steps * dt, rel=1e-6)


def test_analytic_growth_rates():
    sh = ShParams(1.0, 1.0, 2.0, QUARTIC)
    assert analytic_growth_rate("sh", sh, 1.0) == pytest.approx(0.15)
    pfc = PfcParams(1.0, 1.0, 1.0, QUARTIC)
    assert analytic_growth_rate("pfc", pfc, 0.0, -0.2) == 0.0
    assert analytic_growth_rate("pfc", pfc, 0.5, 0.0) == pytest.approx(-0.25 * (0.5625 - 0.3))


def test_dispersion_scan_recovers_rates():
    g = Grid.box(128, 20 * np.pi)
    cfg = SimConfig("sh", g, ShParams(1.0, 1.0, 1.0, QUARTIC), 1e-3, 1.0)
    for p in dispersion_scan(cfg, [0.5, 1.0], steps=400):
        assert p.measured == pytest.approx(p.analytic, rel=1e-2)


def test_dispersion_scan_zero_mode_is_exact_for_pfc():
    g = Grid.box(128, 20 * np.pi)
    cfg = SimConfig("pfc", g, PfcParams(1.0, 1.0, 1.0, QUARTIC), 1e-3, 1.0, ic=InitialCondition(mean=-0.1))
    (p,) = dispersion_scan(cfg, [0.0], steps=200)
    assert p.measured == 0.0 and p.analytic == 0.0


def test_dispersion_scan_reports_fit_failures():
    g = Grid.box(128, 20 * np.pi)
    cfg = SimConfig("sh", g, ShParams(1.0, 1.0, 1.0, QUARTIC), 0.5, 1.0)
    with pytest.raises(FitFailure):
        dispersion_scan(cfg, [0.33])
    with pytest.raises(FitFailure):
        dispersion_scan(cfg, [1.0], steps=400)  # grows out of the linear regime


def test_config_validation():
    p = ShParams(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        SimConfig("sh", RING, p, 0.0, 1.0)
    with pytest.raises(ValueError):
        SimConfig("pfc", RING, p, 0.1, 1.0)
    with pytest.raises(ValueError):
        SimConfig("sh", Grid.box(16, 1.0, "bounded"), p, 0.1, 1.0)


def test_energy_of_constant_field():
    phi = ScalarField(RING, np.full(RING.shape, 0.5))
    p = ShParams(1.0, 1.0, 1.0, QUARTIC)
    f = -0.15 * 0.25 + 0.25 * 0.5**4
    assert total_free_energy(phi, p) == pytest.approx((f + 0.5 * 0.25) * RING.length[0])
