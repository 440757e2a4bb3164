"""Global functionals, the pointwise dissipation identity and virtual power.

Periodic fields are differentiated spectrally; bounded fields must arrive with
their ghost layers filled (``pad >= 2``) so that every derivative reaches the
walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .constitutive import (
    Handle,
    Params,
    ShParams,
    bulk_potential_eval,
    free_energy_density,
    hypermicrostress_scalar,
    internal_microforce,
    microstress,
    sample_handle,
)
from .fields import (
    Grid,
    ScalarField,
    _fd_first,
    _fd_laplacian,
    crop,
    gradient,
    hessian,
    integrate,
)

COLUMNS = ("t", "energy", "mass", "min_phi", "max_phi", "dissipation")


class DiagnosticRow(NamedTuple):
    t: float
    energy: float
    mass: float
    min_phi: float
    max_phi: float
    dissipation: float


@dataclass
class DiagnosticsSeries:
    """Rows of :class:`DiagnosticRow`, strictly increasing in ``t``."""

    rows: list[DiagnosticRow] = field(default_factory=list)

    def append(self, row: DiagnosticRow) -> None:
        if self.rows and not row.t > self.rows[-1].t:
            raise ValueError(f"diagnostic times must increase strictly ({row.t} after {self.rows[-1].t})")
        self.rows.append(DiagnosticRow(*(float(v) for v in row)))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[DiagnosticRow]:
        return iter(self.rows)

    def __getitem__(self, i: int) -> DiagnosticRow:
        return self.rows[i]

    def column(self, name: str) -> np.ndarray:
        j = COLUMNS.index(name)
        return np.array([r[j] for r in self.rows])


# ---------------------------------------------------------------------------
# global functionals


def _on_nodes(f: ScalarField) -> ScalarField:
    return f if f.pad == 0 else crop(f, 0)


def energy_density(phi: ScalarField, params: Params) -> ScalarField:
    """``psi`` on the nodes; bounded fields need ``pad >= 1``."""
    trim = not phi.grid.periodic
    g = gradient(phi, trim=trim)
    H = hessian(phi, trim=trim)
    p = min(g.pad, H.pad, phi.pad)
    g, H, phi0 = (f if f.pad == p else crop(f, p) for f in (g, H, phi))
    psi = free_energy_density(params, phi0.values, g.values, H.values)
    return _on_nodes(ScalarField(phi.grid, psi, p))


def total_free_energy(phi: ScalarField, params: Params) -> float:
    """``Psi = integral of psi``."""
    return integrate(energy_density(phi, params))


def total_mass(phi: ScalarField) -> float:
    """``integral of phi`` (rectangle rule periodic, trapezoid bounded)."""
    return integrate(_on_nodes(phi))


def sh_dissipation(phi_new: ScalarField, phi_old: ScalarField, dt: float, beta: float) -> float:
    """``-beta * integral ((phi_new - phi_old) / dt)**2``."""
    rate = (_on_nodes(phi_new).values - _on_nodes(phi_old).values) / dt
    return -beta * integrate(ScalarField(phi_new.grid, rate * rate))


def pfc_dissipation(mu: ScalarField, mobility: float) -> float:
    """``-integral M |grad mu|**2``; bounded ``mu`` needs one ghost layer."""
    g = gradient(mu, trim=not mu.grid.periodic)
    g = g if g.pad == 0 else crop(g, 0)
    return -mobility * integrate(ScalarField(mu.grid, np.sum(g.values**2, axis=-1)))


# ---------------------------------------------------------------------------
# pointwise dissipation identity


@dataclass(frozen=True)
class PointwiseRates:
    """Local state and rates; ``psi_dot`` defaults to the analytic chain rule."""

    phi: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    phi_dot: np.ndarray
    grad_dot: np.ndarray
    hess_dot: np.ndarray
    psi_dot: np.ndarray | None = None


def chain_rule_psi_dot(r: PointwiseRates, params: Params) -> np.ndarray:
    """``psi_dot`` from partial derivatives of ``psi`` in ``(phi, grad, hess)``.

    The partials are written from the density itself rather than through the
    stress closures, so the identity below tests them against each other.
    """
    _, df, _ = bulk_potential_eval(params.potential, r.phi)
    lam, ell2 = params.lam, params.ell**2
    lap = np.trace(r.hess, axis1=-2, axis2=-1)
    lap_dot = np.trace(r.hess_dot, axis1=-2, axis2=-1)
    return (
        (df + lam * np.asarray(r.phi)) * r.phi_dot
        - 2 * lam * ell2 * np.sum(r.grad * r.grad_dot, axis=-1)
        + lam * ell2 * ell2 * lap * lap_dot
    )


def imbalance(r: PointwiseRates, params: ShParams) -> np.ndarray:
    """``psi_dot + pi phi_dot - xi . grad phi_dot - Sigma : grad^2 phi_dot``."""
    psi_dot = chain_rule_psi_dot(r, params) if r.psi_dot is None else np.asarray(r.psi_dot)
    pi = internal_microforce(r.phi, r.phi_dot, params).total
    xi = microstress(r.grad, params)
    s = hypermicrostress_scalar(np.trace(r.hess, axis1=-2, axis2=-1), params)
    sigma_work = s * np.trace(r.hess_dot, axis1=-2, axis2=-1)
    return psi_dot + pi * r.phi_dot - np.sum(xi * r.grad_dot, axis=-1) - sigma_work


def dissipation_identity_residual(r: PointwiseRates, params: ShParams) -> float:
    """``max |imbalance + beta phi_dot**2|``."""
    res = imbalance(r, params) + params.beta * np.asarray(r.phi_dot) ** 2
    return float(np.max(np.abs(res)))


def discrete_rates(phi_old: ScalarField, phi_new: ScalarField, dt: float, params: Params) -> PointwiseRates:
    """Backward-difference rates between two periodic snapshots.

    State quantities are taken at the new level and ``psi_dot`` is a backward
    difference of the density, so the identity holds only to ``O(dt)``.
    """
    if not phi_new.grid.periodic:
        raise ValueError("discrete rates are assembled on periodic grids")
    parts = []
    for f in (phi_old, phi_new):
        parts.append((f.values, gradient(f).values, hessian(f).values, energy_density(f, params).values))
    (p0, g0, h0, e0), (p1, g1, h1, e1) = parts
    return PointwiseRates(p1, g1, h1, (p1 - p0) / dt, (g1 - g0) / dt, (h1 - h0) / dt, (e1 - e0) / dt)


# ---------------------------------------------------------------------------
# virtual power


class VirtualPower(NamedTuple):
    internal: float
    external: float
    residual: float


def _node_integral(grid: Grid, values: np.ndarray) -> float:
    return integrate(ScalarField(grid, values))


def virtual_power_residual(phi: ScalarField, phi_dot: ScalarField, gamma: Handle, chi: ScalarField, params: ShParams, t: float = 0.0) -> VirtualPower:
    """``V_int = int(-pi chi + xi . grad chi + Sigma : grad^2 chi)`` against ``V_ext``.

    Periodic: ``V_ext = int gamma chi``. Bounded (1D): ``phi`` needs ghost
    layers (``pad >= 2``), ``chi`` at least one, and ``V_ext`` adds the wall
    terms ``xi_S chi + sigma_S dchi/dn`` built from the natural tractions.
    """
    grid = phi.grid
    gam = sample_handle(gamma, grid.coords(), t)
    phi_dot_n = _on_nodes(phi_dot).values
    if grid.periodic:
        g_phi, H_phi = gradient(phi).values, hessian(phi).values
        g_chi, H_chi = gradient(chi).values, hessian(chi).values
        phi_n, chi_n = phi.values, chi.values
    else:
        if grid.dim != 1:
            raise ValueError("bounded virtual power is implemented in 1D")
        if phi.pad < 2 or chi.pad < 1:
            raise ValueError("bounded virtual power needs phi with pad >= 2 and chi with pad >= 1")
        ph = crop(phi, 2).values if phi.pad > 2 else phi.values
        ch = crop(chi, 1).values if chi.pad > 1 else chi.values
        phi_n = ph[2:-2]
        chi_n = ch[1:-1]
        g_phi = _fd_first(grid, ph, 0)[1:-1, None]
        H_phi = _fd_laplacian(grid, ph)[1:-1, None, None]
        g_chi = _fd_first(grid, ch, 0)[:, None]
        H_chi = _fd_laplacian(grid, ch)[:, None, None]
    pi = internal_microforce(phi_n, phi_dot_n, params).total
    xi = microstress(g_phi, params)
    s = hypermicrostress_scalar(np.trace(H_phi, axis1=-2, axis2=-1), params)
    integrand = -pi * chi_n + np.sum(xi * g_chi, axis=-1) + s * np.trace(H_chi, axis1=-2, axis2=-1)
    v_int = _node_integral(grid, integrand)
    v_ext = _node_integral(grid, gam * chi_n)
    if not grid.periodic:
        from .boundary.closures import natural_tractions

        lap = _fd_laplacian(grid, ph)
        h = grid.h[0]
        for w, s_out in ((0, -1), (grid.n[0] - 1, 1)):
            i = w + 2
            dn = s_out * (ph[i + 1] - ph[i - 1]) / (2 * h)
            dn_lap = s_out * (lap[w + 2] - lap[w]) / (2 * h)
            xi_s, sigma_s = natural_tractions(dn, dn_lap, lap[w + 1], params)
            dchi_dn = s_out * (ch[w + 2] - ch[w]) / (2 * h)
            v_ext += float(xi_s * ch[w + 1] + sigma_s * dchi_dn)
    return VirtualPower(v_int, v_ext, abs(v_int - v_ext))


def band_limited_field(grid: Grid, rng: np.random.Generator, cutoff: float = 0.5) -> ScalarField:
    """Random periodic field with Fourier content below ``cutoff`` times Nyquist."""
    if not grid.periodic:
        raise ValueError("band-limited fields are periodic")
    ks = np.meshgrid(*grid.wavenumbers(), indexing="ij")
    nyq = min(np.pi / h for h in grid.h)
    shape = ks[0].shape
    coef = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    kmax = np.max([np.abs(k) for k in ks], axis=0)
    coef[kmax > cutoff * nyq] = 0.0
    from .fields import _inv

    values = _inv(grid, coef)
    values /= max(np.max(np.abs(values)), 1e-300)
    return ScalarField(grid, values)


# ---------------------------------------------------------------------------
# spectra


def radial_spectrum(phi: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Radially averaged power ``|phi_hat|**2`` in bins of width ``2 pi / max(L)``.

    Returns bin-centre wavenumbers and mean power; the mean mode is excluded.
    """
    grid = phi.grid
    if not grid.periodic:
        raise ValueError("radial spectra are defined on periodic grids")
    a = np.fft.fftn(phi.values - phi.values.mean())
    ks = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n, h) for n, h in zip(reversed(grid.n), reversed(grid.h))], indexing="ij")
    kmag = np.sqrt(sum(k * k for k in ks))
    dk = 2 * np.pi / max(grid.length)
    idx = np.rint(kmag / dk).astype(int).ravel()
    power = (np.abs(a) ** 2).ravel()
    nb = idx.max() + 1
    total = np.bincount(idx, power, nb)
    count = np.bincount(idx, minlength=nb)
    keep = count > 0
    keep[0] = False
    return np.arange(nb)[keep] * dk, total[keep] / count[keep]


def peak_wavenumber(phi: ScalarField) -> float:
    k, p = radial_spectrum(phi)
    return float(k[np.argmax(p)])
