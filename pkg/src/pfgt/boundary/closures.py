"""Wall conditions and ghost-layer closures on bounded node-centred grids.

Swift-Hohenberg walls come in three families:

* ``Natural``: prescribed environmental microtractions,
  ``-xi_env/(2 lam ell^2) = dphi/dn + (ell^2/2) d(Lap phi)/dn`` and
  ``sigma_env/(lam ell^4) = Lap phi``.
* ``Essential``: prescribed ``phi`` and ``dphi/dn`` on the wall.
* ``Mixed``: microtractions proportional to the mismatch of the rates,
  ``a (phi_env' - phi') = -2 lam ell^2 (dphi/dn + (ell^2/2) d(Lap phi)/dn)`` and
  ``b (dphi_env'/dn - dphi'/dn) = lam ell^4 Lap phi``.

Every family contributes two linear equations per wall node, in the two ghost
layers outside that node. How each family uses them:

* ``Natural`` discretizes both conditions with central differences.
* ``Essential`` pairs the normal-derivative constraint with the requirement
  that the semi-discrete rate of the wall node equals ``d phi_env/dt``, so the
  wall value follows the prescribed history. The stepper also pins it
  afterwards with :func:`enforce_essential`.
* ``Mixed`` uses the same semi-discrete wall rate for ``phi'``, and the
  backward difference of the normal derivative for ``dphi'/dn``. In the limit
  ``a, b -> inf`` it therefore reduces to ``Essential``.

In 2D each corner quadrant holds four ghost values. Each is the mean of the two
cubic extrapolations along the grid lines through it. If the two faces meeting
at a corner both constrain the same nodal quantity (the wall rate for
``Essential`` and ``Mixed``, ``Lap phi`` for ``Natural``), the second copy is
replaced by a cubic extrapolation of the matching ghost layer.

All conditions are affine in the ghost values, so the closure is a fixed
linear system ``M g = -c``. ``M`` is assembled once by probing and factored;
only ``c`` changes from step to step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
import scipy.linalg

from ..constitutive import Handle, bulk_potential_eval, sample_handle
from ..errors import SingularClosure
from ..fields import Grid, ScalarField

GHOSTS = 2

# cubic extrapolation to offsets +1 and +2 from nodes at 0, -1, -2, -3
_EXTRAP = {1: (4.0, -6.0, 4.0, -1.0), 2: (10.0, -20.0, 15.0, -4.0)}


@dataclass(frozen=True)
class Natural:
    xi_env: Handle = 0.0
    sigma_env: Handle = 0.0


@dataclass(frozen=True)
class Essential:
    phi_env: Handle = 0.0
    dphi_dn_env: Handle = 0.0


@dataclass(frozen=True)
class Mixed:
    a: float
    b: float
    phi_env: Handle = 0.0
    dphi_dn_env: Handle = 0.0

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ValueError("mixed transfer coefficients a and b must be positive")


@dataclass(frozen=True)
class Flux:
    j_env: Handle = 0.0


@dataclass(frozen=True)
class ChemPot:
    mu_env: Handle = 0.0


@dataclass(frozen=True)
class MixedMass:
    c: float
    mu_env: Handle = 0.0

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValueError("mixed mass-transfer coefficient c must be positive")


ShBoundary = Union[Natural, Essential, Mixed]
PfcBoundary = Union[Flux, ChemPot, MixedMass]


def faces_of(grid: Grid) -> tuple[str, ...]:
    return ("left", "right") if grid.dim == 1 else ("left", "right", "bottom", "top")


def face_geometry(face: str) -> tuple[int, int]:
    """Return ``(component, side)`` with ``side = -1`` for the lower face."""
    try:
        return {"left": (0, -1), "right": (0, 1), "bottom": (1, -1), "top": (1, 1)}[face]
    except KeyError:
        raise ValueError(f"unknown face {face!r}") from None


def time_rate(handle: Handle, x: np.ndarray, t: float) -> np.ndarray:
    """``d/dt`` of a boundary datum by a central difference (zero for constants)."""
    if not callable(handle):
        return np.zeros(np.asarray(x).shape[:-1])
    delta = 1e-6 * max(1.0, abs(t))
    return (sample_handle(handle, x, t + delta) - sample_handle(handle, x, t - delta)) / (2 * delta)


class _Faces:
    """Index bookkeeping for the walls of a padded array."""

    def __init__(self, grid: Grid):
        self.grid = grid

    def wall_index(self, c: int, s: int) -> int:
        return 0 if s < 0 else self.grid.n[c] - 1

    def line(self, a: np.ndarray, q: int, c: int, s: int, m: int, tangential=None):
        """Entries of ``a`` (pad ``q``) at normal offset ``m`` from wall ``(c, s)``.

        Positive ``m`` points along the outward normal.
        """
        grid = self.grid
        index = [None] * grid.dim
        index[grid.axis_of(c)] = q + self.wall_index(c, s) + s * m
        if grid.dim == 2:
            t = 1 - c
            index[grid.axis_of(t)] = slice(q, q + grid.n[t]) if tangential is None else q + tangential
        return a[tuple(index)]

    def wall_coords(self, c: int, s: int) -> np.ndarray:
        grid = self.grid
        x = grid.coords()
        index = [slice(None)] * grid.dim
        index[grid.axis_of(c)] = self.wall_index(c, s)
        return x[tuple(index)].reshape(-1, grid.dim)


def _lap(grid: Grid, a: np.ndarray) -> np.ndarray:
    """5-point Laplacian shrinking the pad by one."""
    from ..fields import _fd_laplacian

    return _fd_laplacian(grid, a)


def natural_tractions(dphi_dn, dlap_dn, lap, params) -> tuple[np.ndarray, np.ndarray]:
    """Wall microtraction and hypermicrotraction of the isotropic closure.

    ``xi_S = -2 lam ell^2 (dphi/dn + (ell^2/2) dLap/dn)`` and
    ``sigma_S = lam ell^4 Lap phi``; these are what a natural wall prescribes.
    """
    ell2 = params.ell**2
    xi_s = -2.0 * params.lam * ell2 * (np.asarray(dphi_dn) + 0.5 * ell2 * np.asarray(dlap_dn))
    return xi_s, params.lam * ell2 * ell2 * np.asarray(lap)


class ShClosure:
    """Ghost-layer closure for the Swift-Hohenberg operator on a bounded grid.

    ``params`` needs ``lam`` and ``ell``; the rate-based families also use
    ``beta``, ``potential`` and ``gamma``.
    """

    def __init__(self, grid: Grid, bcs: Mapping[str, ShBoundary], params):
        if grid.periodic:
            raise ValueError("ghost closures apply to bounded grids only")
        missing = set(faces_of(grid)) - set(bcs)
        if missing:
            raise ValueError(f"missing boundary conditions for faces {sorted(missing)}")
        self.grid = grid
        self.bcs = {face: bcs[face] for face in faces_of(grid)}
        self.params = params
        self.faces = _Faces(grid)
        shape = grid.padded_shape(GHOSTS)
        mask = np.ones(shape, dtype=bool)
        mask[tuple(slice(GHOSTS, GHOSTS + s) for s in grid.shape)] = False
        self.ghost_mask = mask
        self.n_ghost = int(mask.sum())
        self._factor: dict[float | None, tuple] = {}
        needs_rate = any(isinstance(bc, (Essential, Mixed)) for bc in self.bcs.values())
        if needs_rate and not hasattr(params, "beta"):
            raise ValueError("essential and mixed walls need the viscosity beta")

    # -- discrete pieces ------------------------------------------------------

    def _rate(self, P: np.ndarray, t: float) -> np.ndarray:
        """Semi-discrete ``phi_dot`` on the nodes from a padded array."""
        grid, p = self.grid, self.params
        lap1 = _lap(grid, P)
        bilap = _lap(grid, lap1)
        core = P[tuple(slice(GHOSTS, GHOSTS + s) for s in grid.shape)]
        lapc = lap1[tuple(slice(1, 1 + s) for s in grid.shape)]
        ell2 = p.ell**2
        _, df, _ = bulk_potential_eval(p.potential, core)
        gamma = sample_handle(p.gamma, grid.coords(), t)
        return (-p.lam * (core + 2 * ell2 * lapc + ell2 * ell2 * bilap) - df + gamma) / p.beta

    def _residual(self, P: np.ndarray, t: float, prev: np.ndarray | None, dt_back: float | None) -> np.ndarray:
        grid, p, F = self.grid, self.params, self.faces
        h = grid.h
        lam, ell2 = p.lam, p.ell**2
        lap1 = _lap(grid, P)
        rate = None
        rows: list[np.ndarray] = []
        claimed: dict[tuple, tuple] = {}
        for face, bc in self.bcs.items():
            c, s = face_geometry(face)
            x = F.wall_coords(c, s)
            dn = (F.line(P, 2, c, s, 1) - F.line(P, 2, c, s, -1)) / (2 * h[c])
            lap_w = F.line(lap1, 1, c, s, 0)
            dn_lap = (F.line(lap1, 1, c, s, 1) - F.line(lap1, 1, c, s, -1)) / (2 * h[c])
            flux = dn + 0.5 * ell2 * dn_lap
            if isinstance(bc, Natural):
                xi_s, sigma_s = natural_tractions(dn, dn_lap, lap_w, p)
                e1 = (xi_s - sample_handle(bc.xi_env, x, t)) / (2 * lam * ell2)
                e2 = (sample_handle(bc.sigma_env, x, t) - sigma_s) / (lam * ell2 * ell2)
                # (tag, coefficient of the shared nodal quantity, row is only that quantity)
                tags = (None, ("lap", -1.0, True))
            else:
                if rate is None:
                    rate = self._rate(P, t)
                rate_w = np.atleast_1d(F.line(rate, 0, c, s, 0))
                target_rate = time_rate(bc.phi_env, x, t)
                if isinstance(bc, Essential):
                    e1 = rate_w - target_rate
                    e2 = dn - sample_handle(bc.dphi_dn_env, x, t)
                    tags = (("rate", 1.0, True), None)
                else:
                    if dt_back is None:
                        raise ValueError("mixed walls need the previous step size")
                    if prev is not None:
                        dn_prev = (F.line(prev, 2, c, s, 1) - F.line(prev, 2, c, s, -1)) / (2 * h[c])
                    else:  # compatible initial data
                        dn_prev = sample_handle(bc.dphi_dn_env, x, t - dt_back)
                    env_dn_rate = (
                        sample_handle(bc.dphi_dn_env, x, t) - sample_handle(bc.dphi_dn_env, x, t - dt_back)
                    ) / dt_back
                    e1 = bc.a * (target_rate - rate_w) + 2 * lam * ell2 * flux
                    e2 = bc.b * (env_dn_rate - (dn - dn_prev) / dt_back) - lam * ell2 * ell2 * lap_w
                    # at a corner the second face's rate relation is replaced like the
                    # essential one, which keeps the large-coefficient limit consistent
                    tags = (("rate", -bc.a, True), None)
            for m, (eq, tag) in enumerate(zip((e1, e2), tags)):
                eq = np.atleast_1d(np.array(eq, dtype=float))
                if grid.dim == 2 and tag is not None:
                    name, coef, pure = tag
                    for end in (0, grid.n[1 - c] - 1):
                        node = self._corner_node(c, s, end)
                        first = claimed.get((name, node))
                        if first is None:
                            claimed[(name, node)] = (coef, eq[end], pure)
                        elif first[2] and pure:
                            # the same nodal constraint twice: extrapolate instead
                            layer = 1 if name == "lap" else 2
                            eq[end] = self._extrapolation_residual(P, c, s, end, layer)
                        else:
                            # eliminate the shared nodal quantity (an exact row operation)
                            eq[end] = eq[end] - (coef / first[0]) * first[1]
                rows.append(eq)
        if grid.dim == 2:
            rows.append(self._corner_residuals(P))
        return np.concatenate(rows)

    def _corner_node(self, c: int, s: int, end: int) -> tuple[int, int]:
        """Grid node ``(ix, iy)`` at tangential end ``end`` of wall ``(c, s)``."""
        w = self.faces.wall_index(c, s)
        return (w, end) if c == 0 else (end, w)

    def _extrapolation_residual(self, P, c, s, end, layer) -> float:
        F = self.faces
        ghost = F.line(P, 2, c, s, layer, tangential=end)
        inner = sum(k * F.line(P, 2, c, s, -j, tangential=end) for j, k in enumerate(_EXTRAP[layer]))
        return float(ghost - inner)

    def _corner_residuals(self, P: np.ndarray) -> np.ndarray:
        grid = self.grid
        nx, ny = grid.n
        out = []
        for sy in (-1, 1):
            for sx in (-1, 1):
                wx = GHOSTS + (0 if sx < 0 else nx - 1)
                wy = GHOSTS + (0 if sy < 0 else ny - 1)
                for q in (1, 2):
                    for p in (1, 2):
                        gx, gy = wx + sx * p, wy + sy * q
                        ex = sum(k * P[gy, wx - sx * j] for j, k in enumerate(_EXTRAP[p]))
                        ey = sum(k * P[wy - sy * j, gx] for j, k in enumerate(_EXTRAP[q]))
                        out.append(P[gy, gx] - 0.5 * (ex + ey))
        return np.array(out)

    # -- linear solve ---------------------------------------------------------

    def _assemble(self, t: float, dt_back: float | None):
        key = None if dt_back is None else float(dt_back)
        if key in self._factor:
            return self._factor[key]
        base = np.zeros(self.grid.padded_shape(GHOSTS))
        # probe around a zero state; the rate term's nonlinearity lives on the
        # nodes only, so the response to ghost values is exactly affine
        r0 = self._residual(base, t, None, dt_back)
        idx = np.flatnonzero(self.ghost_mask)
        M = np.empty((r0.size, idx.size))
        for col, k in enumerate(idx):
            probe = base.copy()
            probe.flat[k] = 1.0
            M[:, col] = self._residual(probe, t, None, dt_back) - r0
        if M.shape[0] != M.shape[1]:
            raise SingularClosure(f"closure has {M.shape[0]} equations for {M.shape[1]} ghost values")
        scale = np.max(np.abs(M), axis=1)
        if np.any(scale == 0):
            raise SingularClosure("a closure equation does not involve any ghost value")
        Ms = M / scale[:, None]
        cond = np.linalg.cond(Ms)
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularClosure(f"ghost system is singular (condition number {cond:.3g})")
        lu = scipy.linalg.lu_factor(Ms)
        self._factor[key] = (lu, scale, idx)
        return self._factor[key]

    def fill(
        self,
        phi: np.ndarray | ScalarField,
        t: float,
        prev: ScalarField | np.ndarray | None = None,
        dt_back: float | None = None,
    ) -> ScalarField:
        """Return ``phi`` with both ghost layers filled (a pad-2 field)."""
        grid = self.grid
        nodes = phi.nodes if isinstance(phi, ScalarField) else np.asarray(phi, dtype=float)
        P = np.zeros(grid.padded_shape(GHOSTS))
        P[tuple(slice(GHOSTS, GHOSTS + s) for s in grid.shape)] = nodes
        prev_arr = None
        if prev is not None:
            prev_arr = prev.values if isinstance(prev, ScalarField) else np.asarray(prev)
            if prev_arr.shape != P.shape:
                raise ValueError("previous state must carry both ghost layers")
        lu, scale, idx = self._assemble(t, dt_back)
        c = self._residual(P, t, prev_arr, dt_back) / scale
        P.flat[idx] = scipy.linalg.lu_solve(lu, -c)
        return ScalarField(grid, P, GHOSTS)


def ghost_closure_sh(phi, bc: Mapping[str, ShBoundary] | ShBoundary, face=None, t: float = 0.0, params=None, *, grid=None, prev=None, dt_back=None) -> ScalarField:
    """Fill both ghost layers of ``phi``.

    ``bc`` is either a mapping ``face -> condition`` or one condition applied to
    every face (``face`` is then ignored).
    """
    if isinstance(phi, ScalarField):
        grid = phi.grid
    if grid is None:
        raise ValueError("pass a ScalarField or the grid")
    bcs = bc if isinstance(bc, Mapping) else {f: bc for f in faces_of(grid)}
    return ShClosure(grid, bcs, params).fill(phi, t, prev, dt_back)


def enforce_essential(phi: np.ndarray, grid: Grid, bcs: Mapping[str, ShBoundary], t: float) -> np.ndarray:
    """Overwrite wall nodes of essential faces with ``phi_env(t)``.

    Faces are applied in the order left, right, bottom, top, so the ``x``
    faces set the corner nodes when both meeting faces are essential.
    """
    out = np.array(phi, dtype=float, copy=True)
    F = _Faces(grid)
    for face in reversed(faces_of(grid)):
        bc = bcs[face]
        if isinstance(bc, Essential):
            c, s = face_geometry(face)
            index = [slice(None)] * grid.dim
            index[grid.axis_of(c)] = F.wall_index(c, s)
            out[tuple(index)] = sample_handle(bc.phi_env, F.wall_coords(c, s), t).reshape(out[tuple(index)].shape)
    return out


# ---------------------------------------------------------------------------
# conserved species (1D)


@dataclass(frozen=True)
class PfcGhosts:
    """Closure output for the conserved equation.

    ``phi`` carries two ghost layers; ``mu`` carries one, and its wall entries
    hold the wall chemical potential used by the flux stencil.
    """

    phi: ScalarField
    mu: ScalarField


class PfcClosure:
    """Ghost closure for the 6th-order conserved operator on a bounded 1D grid.

    The ``phi`` ghosts come from homogeneous natural Swift-Hohenberg conditions;
    the ``mu`` ghost and wall value from the species condition of each face.

    * ``Flux``: central ``M dmu/dn = -j_env`` and the computed wall ``mu``.
    * ``ChemPot``: wall ``mu = mu_env`` with a cubic ghost extrapolation.
    * ``MixedMass``: ``M dmu/dn = c (mu_env - mu_w)`` with a one-sided normal
      derivative, solved for the wall value ``mu_w``, then the same
      extrapolation.
    """

    def __init__(self, grid: Grid, bcs: Mapping[str, PfcBoundary], params):
        if grid.periodic or grid.dim != 1:
            raise ValueError("conserved closures are implemented for bounded 1D grids only")
        self.grid = grid
        self.bcs = {face: bcs[face] for face in faces_of(grid)}
        self.params = params
        self.phi_closure = ShClosure(grid, {f: Natural(0.0, 0.0) for f in faces_of(grid)}, params)

    def chemical_potential(self, P: ScalarField, t: float) -> np.ndarray:
        from ..constitutive import chemical_potential as mu_of

        grid, p = self.grid, self.params
        lap1 = _lap(grid, P.values)
        bilap = _lap(grid, lap1)
        core = P.nodes
        gamma = sample_handle(p.gamma, grid.coords(), t)
        return mu_of(core, lap1[1:-1], bilap, gamma, p)

    def fill(self, phi, t: float) -> PfcGhosts:
        grid, p = self.grid, self.params
        h = grid.h[0]
        n = grid.n[0]
        P = self.phi_closure.fill(phi, t)
        mu = self.chemical_potential(P, t)
        out = np.empty(n + 2)
        out[1:-1] = mu
        for face, bc in self.bcs.items():
            _, s = face_geometry(face)
            w = 0 if s < 0 else n - 1
            inner = [mu[w - s * j] for j in (1, 2, 3)]
            x = np.array([[grid.origin[0] + w * h]])
            if isinstance(bc, Flux):
                dn = -float(sample_handle(bc.j_env, x, t)[0]) / p.mobility
                mu_w = mu[w]
                ghost = inner[0] + 2 * h * dn
            else:
                if isinstance(bc, ChemPot):
                    mu_w = float(sample_handle(bc.mu_env, x, t)[0])
                else:
                    mu_env = float(sample_handle(bc.mu_env, x, t)[0])
                    k = p.mobility / (2 * h)
                    denom = 3 * k + bc.c
                    if denom == 0:
                        raise SingularClosure("mixed mass closure is singular")
                    mu_w = (bc.c * mu_env + k * (4 * inner[0] - inner[1])) / denom
                e = _EXTRAP[1]
                ghost = e[0] * mu_w + e[1] * inner[0] + e[2] * inner[1] + e[3] * inner[2]
            out[1 + w] = mu_w
            out[1 + w + s] = ghost
        return PfcGhosts(P, ScalarField(grid, out, 1))


def ghost_closure_pfc(phi, mu_unused, bc: Mapping[str, PfcBoundary] | PfcBoundary, face=None, t: float = 0.0, params=None, *, grid=None) -> PfcGhosts:
    """Functional wrapper around :class:`PfcClosure`.

    The chemical potential is recomputed from ``phi`` so that it is consistent
    with the ghost values; ``mu_unused`` is accepted for signature symmetry.
    """
    if isinstance(phi, ScalarField):
        grid = phi.grid
    if grid is None:
        raise ValueError("pass a ScalarField or the grid")
    bcs = bc if isinstance(bc, Mapping) else {f: bc for f in faces_of(grid)}
    return PfcClosure(grid, bcs, params).fill(phi, t)
