"""Time integration of the Swift-Hohenberg and phase-field crystal equations.

Periodic grids use a first-order stabilized semi-implicit Fourier scheme: the
linear operator ``lam (1 + ell^2 Lap)^2`` and a splitting term ``S phi`` are
implicit, the rest of ``f'`` is explicit. The state keeps the Fourier
coefficients of ``phi`` between steps, so the mean mode of the conserved
scheme is carried bit-for-bit and only changes through the source.

Bounded grids use Heun's two-stage method on the closed semi-discrete
equations, with every operator evaluation preceded by a ghost closure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal, Mapping, Sequence

import numpy as np

from .boundary.closures import (
    Essential,
    PfcBoundary,
    PfcClosure,
    ShBoundary,
    ShClosure,
    enforce_essential,
)
from .constitutive import (
    PfcParams,
    ShParams,
    bulk_potential_eval,
    curvature_bounds,
    sample_handle,
)
from .diagnostics import (
    DiagnosticRow,
    DiagnosticsSeries,
    pfc_dissipation,
    sh_dissipation,
    total_free_energy,
    total_mass,
)
from .errors import FitFailure, NumericalFailure, StabilityWarning
from .fields import Grid, ScalarField, _fd_laplacian, _fwd, _inv

Model = Literal["sh", "pfc"]

#: Step-size constants of the bounded explicit schemes (see ``stability_limit``).
SH_BOUNDED_C = 0.1
PFC_BOUNDED_C = 0.025

RNG_ALGORITHMS = ("pcg64",)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class InitialCondition:
    """Initial field: ``constant``, ``random``, ``mode`` or ``file``.

    * ``constant``: ``mean`` everywhere.
    * ``random``: ``mean`` plus i.i.d. uniform values in ``[-amplitude, amplitude]``
      drawn from ``numpy.random.Generator(PCG64(seed))`` in storage order.
    * ``mode``: ``mean + amplitude cos(k . x)``.
    * ``file``: a snapshot written by :func:`pfgt.io.write_snapshot`.
    """

    kind: Literal["constant", "random", "mode", "file"] = "constant"
    mean: float = 0.0
    amplitude: float = 0.0
    seed: int = 0
    k: tuple[float, ...] = (1.0,)
    path: str | None = None
    rng: str = "pcg64"

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "random", "mode", "file"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.rng not in RNG_ALGORITHMS:
            raise ValueError(f"unsupported random generator {self.rng!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("file initial condition needs a path")
        object.__setattr__(self, "k", tuple(float(v) for v in np.atleast_1d(self.k)))


@dataclass(frozen=True)
class SimConfig:
    model: Model
    grid: Grid
    params: ShParams | PfcParams
    dt: float
    t_end: float
    stabilization: float | None = None
    ic: InitialCondition = field(default_factory=InitialCondition)
    bcs: Mapping[str, ShBoundary | PfcBoundary] | None = None
    cadence: int = 10

    def __post_init__(self) -> None:
        if self.model not in ("sh", "pfc"):
            raise ValueError(f"unknown model {self.model!r}")
        expected = ShParams if self.model == "sh" else PfcParams
        if not isinstance(self.params, expected):
            raise ValueError(f"model {self.model} needs {expected.__name__}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError("t_end must be non-negative")
        if self.stabilization is not None and not self.stabilization >= 0:
            raise ValueError("stabilization must be non-negative")
        if self.cadence < 1:
            raise ValueError("cadence must be at least 1")
        if not self.grid.periodic:
            if not self.bcs:
                raise ValueError("bounded grids need boundary conditions")
            if self.model == "pfc" and self.grid.dim != 1:
                raise ValueError("bounded conserved runs are 1D only")
        if self.ic.kind == "mode" and self.grid.periodic:
            check_commensurate(self.grid, self.ic.k)

    @cached_property
    def closure(self) -> ShClosure | PfcClosure:
        """Ghost closure of a bounded run, built once per config."""
        if self.grid.periodic:
            raise ValueError("periodic runs have no ghost closure")
        cls = ShClosure if self.model == "sh" else PfcClosure
        return cls(self.grid, self.bcs, self.params)

    @property
    def n_steps(self) -> int:
        """Number of steps to reach ``t_end`` (the last one lands on or past it)."""
        ratio = self.t_end / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return int(math.ceil(ratio))


def check_commensurate(grid: Grid, k: Sequence[float]) -> tuple[int, ...]:
    """Return the integer mode indices of wavevector ``k`` or raise ``ValueError``."""
    k = tuple(float(v) for v in k)
    if len(k) == 1 and grid.dim == 2:
        k = (k[0], 0.0)
    if len(k) != grid.dim:
        raise ValueError(f"wavevector needs {grid.dim} components")
    out = []
    for kc, L, n in zip(k, grid.length, grid.n):
        m = kc * L / (2 * math.pi)
        if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)):
            raise ValueError(f"wavenumber {kc} is not commensurate with box length {L}")
        if abs(round(m)) > n // 2:
            raise ValueError(f"wavenumber {kc} exceeds the Nyquist limit")
        out.append(int(round(m)))
    return tuple(out)


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True, eq=False)
class SimState:
    """``phi`` on the nodes, the time, the step count and the prior field.

    ``phi_hat`` caches the Fourier coefficients on periodic grids;
    ``ghosted_prev`` holds the previous field with its ghost layers, which
    the bounded mixed closure needs.
    """

    phi: ScalarField
    time: float = 0.0
    step: int = 0
    phi_prev: ScalarField | None = None
    phi_hat: np.ndarray | None = field(default=None, repr=False)
    ghosted_prev: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, phi: ScalarField, time: float = 0.0) -> "SimState":
        hat = _fwd(phi.grid, phi.values) if phi.grid.periodic else None
        return cls(phi, time, 0, None, hat)


def initial_field(grid: Grid, ic: InitialCondition) -> ScalarField:
    if ic.kind == "constant":
        return ScalarField(grid, np.full(grid.shape, ic.mean))
    if ic.kind == "random":
        rng = np.random.Generator(np.random.PCG64(ic.seed))
        return ScalarField(grid, ic.mean + rng.uniform(-ic.amplitude, ic.amplitude, grid.shape))
    if ic.kind == "mode":
        x = grid.coords()
        k = np.array(ic.k if len(ic.k) == grid.dim else ic.k + (0.0,) * (grid.dim - len(ic.k)))
        return ScalarField(grid, ic.mean + ic.amplitude * np.cos(x @ k))
    from .io import read_snapshot

    state = read_snapshot(ic.path)
    if state.phi.grid.n != grid.n:
        raise ValueError(f"snapshot grid {state.phi.grid.n} does not match {grid.n}")
    return ScalarField(grid, state.phi.values)


def default_stabilization(params: ShParams | PfcParams, phi: ScalarField) -> float:
    """``max(0, sup of -f'')`` over ``[-cap, cap]``, ``cap = 1.5 max|phi|``."""
    cap = 1.5 * float(np.max(np.abs(phi.values)))
    lo, _ = curvature_bounds(params.potential, cap)
    return max(0.0, -lo)


def stability_limit(config: SimConfig) -> float | None:
    """Largest documented stable ``dt`` of the bounded explicit schemes.

    Swift-Hohenberg: ``C beta h^4 / (lam ell^4 dim^2)``; conserved 1D:
    ``C h^6 / (M lam ell^4)``. Periodic schemes have no limit (``None``).
    """
    grid, p = config.grid, config.params
    if grid.periodic:
        return None
    h = min(grid.h)
    if config.model == "sh":
        return SH_BOUNDED_C * p.beta * h**4 / (p.lam * p.ell**4 * grid.dim**2)
    return PFC_BOUNDED_C * h**6 / (p.mobility * p.lam * p.ell**4)


# ---------------------------------------------------------------------------
# periodic steppers


def _stab(config: SimConfig, state: SimState) -> float:
    if config.stabilization is not None:
        return float(config.stabilization)
    return default_stabilization(config.params, state.phi)


def _linear_symbol(grid: Grid, p) -> np.ndarray:
    return p.lam * (1.0 - p.ell**2 * grid.k_squared()) ** 2


def _advance(state: SimState, config: SimConfig, hat: np.ndarray, **extra) -> SimState:
    grid = config.grid
    values = _inv(grid, hat)
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"non-finite phi at step {state.step + 1}")
    step = state.step + 1
    return SimState(ScalarField(grid, values), step * config.dt, step, state.phi, hat, **extra)


def _periodic_sh(state: SimState, config: SimConfig, S: float) -> SimState:
    grid, p, dt = config.grid, config.params, config.dt
    phi = state.phi.values
    hat = state.phi_hat if state.phi_hat is not None else _fwd(grid, phi)
    _, df, _ = bulk_potential_eval(p.potential, phi)
    gamma = sample_handle(p.gamma, grid.coords(), state.time)
    rhs = hat + (dt / p.beta) * _fwd(grid, -df + gamma + S * phi)
    return _advance(state, config, rhs / (1.0 + (dt / p.beta) * (_linear_symbol(grid, p) + S)))


def _periodic_pfc(state: SimState, config: SimConfig, S: float) -> SimState:
    grid, p, dt = config.grid, config.params, config.dt
    phi = state.phi.values
    hat = state.phi_hat if state.phi_hat is not None else _fwd(grid, phi)
    _, df, _ = bulk_potential_eval(p.potential, phi)
    x = grid.coords()
    gamma = sample_handle(p.gamma, x, state.time)
    Mk2 = p.mobility * grid.k_squared()
    num = hat - dt * Mk2 * _fwd(grid, df - gamma - S * phi)
    if callable(p.source) or p.source != 0:
        num = num + dt * _fwd(grid, sample_handle(p.source, x, state.time))
    return _advance(state, config, num / (1.0 + dt * Mk2 * (_linear_symbol(grid, p) + S)))


# ---------------------------------------------------------------------------
# bounded steppers


def _check_dt(config: SimConfig) -> None:
    limit = stability_limit(config)
    if limit is not None and config.dt > limit:
        warnings.warn(
            f"dt = {config.dt:.3g} exceeds the explicit limit {limit:.3g} of the bounded scheme",
            StabilityWarning,
            stacklevel=3,
        )


def _closure(config: SimConfig):
    return config.closure


def _pin(values: np.ndarray, config: SimConfig, t: float) -> np.ndarray:
    if any(isinstance(bc, Essential) for bc in config.bcs.values()):
        return enforce_essential(values, config.grid, config.bcs, t)
    return values


def sh_rate(closure: ShClosure, P: ScalarField, t: float) -> np.ndarray:
    """Semi-discrete ``phi_dot`` on the nodes from a ghost-filled field."""
    return closure._rate(P.values, t)


def pfc_rate(closure: PfcClosure, phi: np.ndarray, t: float) -> tuple[np.ndarray, ScalarField]:
    """``M Lap mu + s`` on the nodes and the ghost-filled ``mu``."""
    p, grid = closure.params, closure.grid
    ghosts = closure.fill(phi, t)
    rate = p.mobility * _fd_laplacian(grid, ghosts.mu.values)
    if callable(p.source) or p.source != 0:
        rate = rate + sample_handle(p.source, grid.coords(), t)
    return rate, ghosts.mu


def _bounded_sh(state: SimState, config: SimConfig) -> SimState:
    closure = _closure(config)
    dt, t = config.dt, state.time
    phi = state.phi.values
    P1 = closure.fill(phi, t, state.ghosted_prev, dt)
    k1 = sh_rate(closure, P1, t)
    stage = _pin(phi + dt * k1, config, t + dt)
    P2 = closure.fill(stage, t + dt, P1.values, dt)
    k2 = sh_rate(closure, P2, t + dt)
    new = _pin(phi + 0.5 * dt * (k1 + k2), config, t + dt)
    if not np.all(np.isfinite(new)):
        raise NumericalFailure(f"non-finite phi at step {state.step + 1}")
    step = state.step + 1
    return SimState(ScalarField(config.grid, new), step * dt, step, state.phi, None, P1.values)


def _bounded_pfc(state: SimState, config: SimConfig) -> SimState:
    closure = _closure(config)
    dt, t = config.dt, state.time
    phi = state.phi.values
    k1, _ = pfc_rate(closure, phi, t)
    k2, _ = pfc_rate(closure, phi + dt * k1, t + dt)
    new = phi + 0.5 * dt * (k1 + k2)
    if not np.all(np.isfinite(new)):
        raise NumericalFailure(f"non-finite phi at step {state.step + 1}")
    step = state.step + 1
    return SimState(ScalarField(config.grid, new), step * dt, step, state.phi)


# ---------------------------------------------------------------------------
# public steppers


def step_sh(state: SimState, config: SimConfig, stabilization: float | None = None) -> SimState:
    """One step of ``beta phi_dot = -lam (1 + ell^2 Lap)^2 phi - f'(phi) + gamma``."""
    if config.model != "sh":
        raise ValueError("step_sh needs a Swift-Hohenberg config")
    if config.grid.periodic:
        S = _stab(config, state) if stabilization is None else stabilization
        return _periodic_sh(state, config, S)
    _check_dt(config)
    return _bounded_sh(state, config)


def step_pfc(state: SimState, config: SimConfig, stabilization: float | None = None) -> SimState:
    """One step of ``phi_dot = div(M grad mu) + s``."""
    if config.model != "pfc":
        raise ValueError("step_pfc needs a phase-field crystal config")
    if config.grid.periodic:
        S = _stab(config, state) if stabilization is None else stabilization
        return _periodic_pfc(state, config, S)
    _check_dt(config)
    return _bounded_pfc(state, config)


def stepper(config: SimConfig) -> Callable[..., SimState]:
    return step_sh if config.model == "sh" else step_pfc


# ---------------------------------------------------------------------------
# diagnostics of a state


def ghosted(state: SimState, config: SimConfig) -> ScalarField:
    """``phi`` with ghosts on bounded grids (the field itself when periodic)."""
    if config.grid.periodic:
        return state.phi
    closure = _closure(config)
    if config.model == "sh":
        return closure.fill(state.phi.values, state.time, state.ghosted_prev, config.dt)
    return closure.fill(state.phi.values, state.time).phi


def chemical_potential_field(state: SimState, config: SimConfig) -> ScalarField:
    """``mu`` of the conserved theory (one ghost layer on bounded grids)."""
    grid, p = config.grid, config.params
    if grid.periodic:
        from .constitutive import chemical_potential

        hat = state.phi_hat if state.phi_hat is not None else _fwd(grid, state.phi.values)
        k2 = grid.k_squared()
        lap = _inv(grid, -k2 * hat)
        bilap = _inv(grid, k2 * k2 * hat)
        gamma = sample_handle(p.gamma, grid.coords(), state.time)
        return ScalarField(grid, chemical_potential(state.phi.values, lap, bilap, gamma, p))
    return _closure(config).fill(state.phi.values, state.time).mu


def instantaneous_rate(state: SimState, config: SimConfig) -> ScalarField:
    """Right-hand side ``phi_dot`` of the continuous-time equation at ``state``."""
    grid, p = config.grid, config.params
    if config.model == "sh":
        if grid.periodic:
            hat = state.phi_hat if state.phi_hat is not None else _fwd(grid, state.phi.values)
            _, df, _ = bulk_potential_eval(p.potential, state.phi.values)
            gamma = sample_handle(p.gamma, grid.coords(), state.time)
            lin = _inv(grid, _linear_symbol(grid, p) * hat)
            return ScalarField(grid, (-lin - df + gamma) / p.beta)
        return ScalarField(grid, sh_rate(_closure(config), ghosted(state, config), state.time))
    if grid.periodic:
        mu = chemical_potential_field(state, config)
        rate = -p.mobility * _inv(grid, grid.k_squared() * _fwd(grid, mu.values))
        if callable(p.source) or p.source != 0:
            rate = rate + sample_handle(p.source, grid.coords(), state.time)
        return ScalarField(grid, rate)
    rate, _ = pfc_rate(_closure(config), state.phi.values, state.time)
    return ScalarField(grid, rate)


def dissipation_rate(state: SimState, config: SimConfig) -> float:
    """Energy dissipation estimate recorded in the diagnostics.

    Swift-Hohenberg: ``-beta int phi_dot^2`` with the backward difference
    ``phi_dot``, or the instantaneous right-hand side before the first step.
    Conserved: ``-int M |grad mu|^2``.
    """
    p = config.params
    if config.model == "sh":
        if state.phi_prev is None:
            rate = instantaneous_rate(state, config)
            return -p.beta * total_mass(ScalarField(config.grid, rate.values**2))
        return sh_dissipation(state.phi, state.phi_prev, config.dt, p.beta)
    return pfc_dissipation(chemical_potential_field(state, config), p.mobility)


def diagnostic_row(state: SimState, config: SimConfig) -> DiagnosticRow:
    phi = ghosted(state, config)
    v = state.phi.values
    return DiagnosticRow(
        state.time,
        total_free_energy(phi, config.params),
        total_mass(state.phi),
        float(v.min()),
        float(v.max()),
        dissipation_rate(state, config),
    )


# ---------------------------------------------------------------------------
# driver


def run(
    config: SimConfig,
    state: SimState | None = None,
    on_row: Callable[[DiagnosticRow], None] | None = None,
    on_snapshot: Callable[[SimState], None] | None = None,
) -> tuple[SimState, DiagnosticsSeries]:
    """Integrate to ``t_end``, recording a diagnostic row every ``cadence`` steps.

    The initial and the final state are always recorded.

    ``on_row`` and ``on_snapshot`` are called as soon as a record exists, so a
    failure later in the run leaves the earlier records with the caller.
    """
    if state is None:
        state = SimState.initial(initial_field(config.grid, config.ic))
    S = None
    if config.grid.periodic:
        S = config.stabilization if config.stabilization is not None else default_stabilization(config.params, state.phi)
    step = stepper(config)
    series = DiagnosticsSeries()

    def record(s: SimState) -> None:
        row = diagnostic_row(s, config)
        series.append(row)
        if on_row:
            on_row(row)
        if on_snapshot:
            on_snapshot(s)

    record(state)
    n = config.n_steps
    for i in range(n):
        state = step(state, config, S)
        if (i + 1) % config.cadence == 0 or i + 1 == n:
            record(state)
    return state, series


# ---------------------------------------------------------------------------
# linear stability


@dataclass(frozen=True)
class DispersionPoint:
    k: float
    measured: float
    analytic: float


def analytic_growth_rate(model: Model, params, k: float, phi0: float = 0.0) -> float:
    """Growth rate of ``cos(k x)`` about ``phi0`` from the linearized equation."""
    _, _, d2f = bulk_potential_eval(params.potential, phi0)
    lin = params.lam * (1.0 - params.ell**2 * k * k) ** 2 + d2f
    if model == "sh":
        return -lin / params.beta + 0.0
    return -params.mobility * k * k * lin + 0.0


def _slope(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and max residual, exact for constant ``y``."""
    tau = t - t[0]
    eta = y - y[0]
    tc = tau - tau.mean()
    slope = float(np.sum(tc * eta) / np.sum(tc * tc))
    intercept = eta.mean() - slope * tau.mean()
    resid = float(np.max(np.abs(eta - (intercept + slope * tau))))
    return slope, resid


def dispersion_scan(
    config: SimConfig,
    k_list: Sequence[float],
    amplitude: float = 1e-4,
    steps: int = 1000,
    linear_bound: float = 1e-2,
) -> list[DispersionPoint]:
    """Measure growth rates of single modes about the mean of ``config.ic``.

    Each mode starts as ``phi0 + amplitude cos(k x)``; its Fourier amplitude is
    tracked for ``steps`` steps (or until it decays by eight decades) and the
    log-amplitude slope is fitted by least squares.
    """
    grid = config.grid
    if not grid.periodic:
        raise ValueError("dispersion scans need a periodic grid")
    if not 0 < amplitude <= 1e-4:
        raise ValueError("amplitude must lie in (0, 1e-4]")
    phi0 = config.ic.mean
    S = config.stabilization if config.stabilization is not None else default_stabilization(
        config.params, ScalarField(grid, np.full(grid.shape, abs(phi0) + amplitude))
    )
    step = stepper(config)
    out = []
    for k in k_list:
        try:
            mode = check_commensurate(grid, (k,))
        except ValueError as exc:
            raise FitFailure(str(exc)) from exc
        index = tuple(reversed(mode))
        ic = InitialCondition("mode", mean=phi0, amplitude=amplitude, k=(k,))
        state = SimState.initial(initial_field(grid, ic))
        ts, amps = [0.0], [_mode_amplitude(state, index, phi0 if k == 0 else None, grid)]
        for _ in range(steps):
            state = step(state, config, S)
            a = _mode_amplitude(state, index, phi0 if k == 0 else None, grid)
            if a > linear_bound:
                raise FitFailure(f"mode k={k} left the linear regime (amplitude {a:.3g})")
            if a < 1e-8 * amps[0]:
                break
            ts.append(state.time)
            amps.append(a)
        if len(ts) < 3:
            raise FitFailure(f"mode k={k} decayed before a slope could be fitted")
        slope, resid = _slope(np.array(ts), np.log(np.array(amps)))
        if resid > 1e-6:
            raise FitFailure(f"log-amplitude of mode k={k} is not linear in time (residual {resid:.3g})")
        out.append(DispersionPoint(float(k), slope, analytic_growth_rate(config.model, config.params, k, phi0)))
    return out


def _mode_amplitude(state: SimState, index, phi0, grid: Grid) -> float:
    hat = state.phi_hat if state.phi_hat is not None else _fwd(grid, state.phi.values)
    c = hat[index]
    if phi0 is not None:
        # the mean mode carries the background; measure the perturbation
        return float(abs(c - phi0 * grid.size)) / grid.size
    return 2.0 * float(abs(c)) / grid.size


__all__ = [
    "DispersionPoint",
    "InitialCondition",
    "SimConfig",
    "SimState",
    "analytic_growth_rate",
    "check_commensurate",
    "default_stabilization",
    "diagnostic_row",
    "dispersion_scan",
    "initial_field",
    "instantaneous_rate",
    "run",
    "stability_limit",
    "step_pfc",
    "step_sh",
]
