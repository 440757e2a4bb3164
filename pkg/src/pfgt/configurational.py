"""Eshelby stress and configurational forces of both theories.

With ``zeta = xi - div Sigma`` the configurational stress is

    C = psi I - grad phi (x) zeta - (grad^2 phi)^T Sigma        (nonconserved)
    C = (psi - mu phi) I - grad phi (x) zeta - (grad^2 phi)^T Sigma  (conserved)

with internal force ``f = -pi_dis grad phi`` (nonconserved) or
``f = phi grad mu`` (conserved) and external force ``e = -gamma grad phi``.
For symmetric ``Sigma`` the product rule gives
``div C = grad phi (d psi / d phi - div zeta)`` (minus ``grad(mu phi)`` in the
conserved case), so ``div C + f + e`` vanishes whenever the microforce balance
or the definition of ``mu`` holds.

``(C)_ij`` pairs ``i`` with the free index of ``grad phi`` and
``(div C)_i = d_j C_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import (
    Handle,
    PfcParams,
    ShParams,
    bulk_potential_eval,
    free_energy_density,
    hypermicrostress_scalar,
    microstress,
    sample_handle,
)
from .fields import (
    ScalarField,
    TensorField,
    VectorField,
    _Field,
    crop,
    divergence,
    gradient,
    hessian,
    laplacian,
)

#: Ghost layers a bounded ``phi`` must carry for the residual to reach the walls.
REQUIRED_PAD = 3


@dataclass(frozen=True)
class ConfigurationalFields:
    """``C``, ``f_int`` and ``e_ext`` plus the ingredients used to build them.

    On bounded grids ``C`` keeps one ghost layer so that its divergence reaches
    the nodes; everything else lives on the nodes.
    """

    C: TensorField
    f_int: VectorField
    e_ext: VectorField
    psi: ScalarField
    zeta: VectorField
    grad_phi: VectorField
    hess_phi: TensorField
    sigma: TensorField


def _to(f: _Field, pad: int) -> _Field:
    return f if f.pad == pad else crop(f, pad)


def _gamma_field(grid, gamma: Handle, t: float, pad: int) -> np.ndarray:
    return sample_handle(gamma, grid.coords(pad), t)


def _assemble(phi: ScalarField, params, spherical_shift=None):
    grid = phi.grid
    periodic = grid.periodic
    if not periodic and phi.pad < REQUIRED_PAD:
        raise ValueError(f"bounded configurational fields need phi with pad >= {REQUIRED_PAD}")
    trim = not periodic
    g = gradient(phi, trim=trim)
    H = hessian(phi, trim=trim)
    lap = laplacian(phi, trim=trim)
    d = grid.dim
    s = hypermicrostress_scalar(lap.values, params)
    sigma = TensorField(grid, s[..., None, None] * np.eye(d), lap.pad)
    div_sigma = divergence(sigma, trim=trim)
    p = div_sigma.pad  # pad of the stress (nodes + 1 ghost layer when bounded)
    g, H, sigma, phi_c = (_to(f, p) for f in (g, H, sigma, phi))
    xi = microstress(g.values, params)
    zeta = VectorField(grid, xi - div_sigma.values, p)
    psi = free_energy_density(params, phi_c.values, g.values, H.values)
    spherical = psi if spherical_shift is None else psi - spherical_shift(p)
    hT_sigma = np.einsum("...ki,...kj->...ij", H.values, sigma.values)
    C = spherical[..., None, None] * np.eye(d) - np.einsum("...i,...j->...ij", g.values, zeta.values) - hT_sigma
    return TensorField(grid, C, p), ScalarField(grid, psi, p), zeta, g, H, sigma


def _nodes(f: _Field) -> _Field:
    return _to(f, 0)


def eshelby_nonconserved(phi: ScalarField, phi_dot: ScalarField, params: ShParams, t: float = 0.0) -> ConfigurationalFields:
    """Fields of the Swift-Hohenberg theory with ``pi_dis = -beta phi_dot``."""
    C, psi, zeta, g, H, sigma = _assemble(phi, params)
    grid = phi.grid
    gn = _nodes(g).values
    pi_dis = -params.beta * _nodes(phi_dot).values
    f = VectorField(grid, -pi_dis[..., None] * gn)
    e = VectorField(grid, -_gamma_field(grid, params.gamma, t, 0)[..., None] * gn)
    return ConfigurationalFields(C, f, e, _nodes(psi), _nodes(zeta), _nodes(g), _nodes(H), _nodes(sigma))


def eshelby_conserved(phi: ScalarField, mu: ScalarField, params: PfcParams, t: float = 0.0) -> ConfigurationalFields:
    """Fields of the conserved theory; bounded ``mu`` needs one ghost layer."""
    grid = phi.grid
    trim = not grid.periodic
    if trim and mu.pad < 1:
        raise ValueError("bounded chemical potential needs one ghost layer")
    mu_p = mu if grid.periodic else _to(mu, 1)
    phi_p = phi if grid.periodic else _to(phi, 1)
    C, psi, zeta, g, H, sigma = _assemble(phi, params, lambda p: (_to(mu_p, p).values * _to(phi_p, p).values))
    grad_mu = _nodes(gradient(mu, trim=trim)).values
    gn = _nodes(g).values
    f = VectorField(grid, _nodes(phi).values[..., None] * grad_mu)
    e = VectorField(grid, -_gamma_field(grid, params.gamma, t, 0)[..., None] * gn)
    return ConfigurationalFields(C, f, e, _nodes(psi), _nodes(zeta), _nodes(g), _nodes(H), _nodes(sigma))


@dataclass(frozen=True)
class Residual:
    field: VectorField
    max_norm: float
    per_component: tuple[float, ...]


def configurational_residual(cf: ConfigurationalFields) -> Residual:
    """``div C + f + e`` on the nodes with its max norm."""
    div_C = _nodes(divergence(cf.C, trim=not cf.C.grid.periodic))
    r = div_C.values + cf.f_int.values + cf.e_ext.values
    per = tuple(float(np.max(np.abs(r[..., c]))) for c in range(r.shape[-1]))
    return Residual(VectorField(cf.C.grid, r), max(per), per)


def spherical_part(cf: ConfigurationalFields) -> ScalarField:
    """``tr(C + grad phi (x) zeta + (grad^2 phi)^T Sigma) / dim`` on the nodes."""
    C = _nodes(cf.C).values
    g, z, H, S = cf.grad_phi.values, cf.zeta.values, cf.hess_phi.values, cf.sigma.values
    full = C + np.einsum("...i,...j->...ij", g, z) + np.einsum("...ki,...kj->...ij", H, S)
    d = cf.C.grid.dim
    return ScalarField(cf.C.grid, np.trace(full, axis1=-2, axis2=-1) / d)


def sh_rate_field(phi: ScalarField, params: ShParams, t: float = 0.0) -> ScalarField:
    """``phi_dot`` from the Swift-Hohenberg right-hand side, using the same operators.

    Bounded fields need ``pad >= 2``; the result lives on the nodes.
    """
    trim = not phi.grid.periodic
    lap = laplacian(phi, trim=trim)
    bilap = laplacian(lap, trim=True) if trim else laplacian(lap)
    phi_n, lap_n, bilap_n = (_nodes(f).values for f in (phi, lap, bilap))
    ell2 = params.ell**2
    _, df, _ = bulk_potential_eval(params.potential, phi_n)
    gamma = _gamma_field(phi.grid, params.gamma, t, 0)
    rate = (-params.lam * (phi_n + 2 * ell2 * lap_n + ell2 * ell2 * bilap_n) - df + gamma) / params.beta
    return ScalarField(phi.grid, rate)


def chemical_potential_field(phi: ScalarField, params: PfcParams, t: float = 0.0) -> ScalarField:
    """``mu`` with the same operators; bounded output keeps ``pad - 2`` layers."""
    from .constitutive import chemical_potential

    trim = not phi.grid.periodic
    lap = laplacian(phi, trim=trim)
    bilap = laplacian(lap, trim=True) if trim else laplacian(lap)
    p = bilap.pad
    phi_c, lap_c = _to(phi, p), _to(lap, p)
    gamma = _gamma_field(phi.grid, params.gamma, t, p)
    return ScalarField(phi.grid, chemical_potential(phi_c.values, lap_c.values, bilap.values, gamma, params), p)
