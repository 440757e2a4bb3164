"""Surface and edge microtractions induced by the microstress pair ``(xi, Sigma)``.

On a smooth oriented surface with unit normal ``n`` and curvature
``L = -Grad_S n``::

    zeta    = xi - div Sigma
    xi_S    = zeta . n - Div_S(P Sigma n)
    sigma_S = n . Sigma n,   varpi_S = sigma_S n
    tau_dS  = nu . Sigma n                       (boundary edge)
    tau_C   = nu+ . Sigma n+ + nu- . Sigma n-    (internal edge)

The surface divergence is evaluated intrinsically as
``Div_S(P Sigma n) = n_j P_lk d_l Sigma_kj - Sigma : L + (n . Sigma n) tr L``,
which needs only the value and first gradient of ``Sigma`` plus ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constitutive import Params, hypermicrostress_scalar, microstress
from ..errors import DegenerateFrame


@dataclass(frozen=True)
class OrientedSurfacePatch:
    """Sample points on a surface with normals ``n`` ``(N, d)`` and curvature ``L`` ``(N, d, d)``."""

    x: np.ndarray
    n: np.ndarray
    L: np.ndarray

    def __post_init__(self) -> None:
        n = np.atleast_2d(np.asarray(self.n, dtype=float))
        d = n.shape[-1]
        x = np.asarray(self.x, dtype=float).reshape(n.shape)
        L = np.asarray(self.L, dtype=float).reshape(n.shape[0], d, d)
        norms = np.linalg.norm(n, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise DegenerateFrame("surface normals must be unit vectors")
        if np.any(np.abs(np.einsum("pij,pj->pi", L, n)) > 1e-10 * (1 + np.abs(L).max())):
            raise DegenerateFrame("curvature tensor must annihilate the normal")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", L)

    @property
    def projection(self) -> np.ndarray:
        d = self.n.shape[-1]
        return np.eye(d) - np.einsum("pi,pj->pij", self.n, self.n)

    def flipped(self) -> "OrientedSurfacePatch":
        return OrientedSurfacePatch(self.x, -self.n, -self.L)


def surface_divergence_projected(sigma: np.ndarray, grad_sigma: np.ndarray, patch: OrientedSurfacePatch) -> np.ndarray:
    """``Div_S(P Sigma n)`` with ``grad_sigma[p, i, j, k] = d_k Sigma_ij``."""
    n, L, P = patch.n, patch.L, patch.projection
    term = np.einsum("pj,plk,pkjl->p", n, P, grad_sigma)
    sig_L = np.einsum("pij,pij->p", sigma, L)
    sig_nn = np.einsum("pi,pij,pj->p", n, sigma, n)
    return term - sig_L + sig_nn * np.trace(L, axis1=-2, axis2=-1)


def surface_microtraction(xi: np.ndarray, sigma: np.ndarray, grad_sigma: np.ndarray, patch: OrientedSurfacePatch) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(xi_S, zeta)`` with ``zeta = xi - div Sigma`` at each patch point.

    ``xi`` has shape ``(N, d)``, ``sigma`` ``(N, d, d)`` and ``grad_sigma``
    ``(N, d, d, d)`` with the derivative index last.
    """
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    grad_sigma = np.asarray(grad_sigma, dtype=float)
    zeta = xi - np.einsum("pijj->pi", grad_sigma)
    xi_s = np.einsum("pi,pi->p", zeta, patch.n) - surface_divergence_projected(sigma, grad_sigma, patch)
    return xi_s, zeta


def hypermicrotraction(sigma: np.ndarray, n: np.ndarray) -> np.ndarray:
    """``sigma_S = n . Sigma n``; broadcasts over leading axes."""
    n = np.asarray(n, dtype=float)
    return np.einsum("...i,...ij,...j->...", n, np.asarray(sigma, dtype=float), n)


def surface_couple(sigma: np.ndarray, n: np.ndarray) -> np.ndarray:
    """``varpi_S = sigma_S n``."""
    n = np.asarray(n, dtype=float)
    return hypermicrotraction(sigma, n)[..., None] * n


@dataclass(frozen=True)
class EdgeFrame:
    """Normal and tangent-normal on one side of an edge, optionally with the other side."""

    n: np.ndarray
    nu: np.ndarray
    n_minus: np.ndarray | None = None
    nu_minus: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("n", "nu", "n_minus", "nu_minus"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > 1e-10):
                raise DegenerateFrame(f"edge vector {name} must be a unit vector")
            object.__setattr__(self, name, v)
        if np.any(np.abs(np.einsum("...i,...i->...", self.n, self.nu)) > 1e-10):
            raise DegenerateFrame("nu must be orthogonal to n")
        if (self.n_minus is None) != (self.nu_minus is None):
            raise ValueError("the second limiting pair needs both n_minus and nu_minus")
        if self.n_minus is not None and np.any(np.abs(np.einsum("...i,...i->...", self.n_minus, self.nu_minus)) > 1e-10):
            raise DegenerateFrame("nu_minus must be orthogonal to n_minus")


def _pair(sigma, n, nu) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", nu, np.asarray(sigma, dtype=float), n)


def edge_microtractions(sigma: np.ndarray, edge: EdgeFrame) -> tuple[np.ndarray, np.ndarray | None]:
    """``(tau_dS, tau_C)``; ``tau_C`` is ``None`` on edges without a second side."""
    tau = _pair(sigma, edge.n, edge.nu)
    if edge.n_minus is None:
        return tau, None
    return tau, tau + _pair(sigma, edge.n_minus, edge.nu_minus)


def isotropic_tractions(grad_phi: np.ndarray, lap: np.ndarray, grad_lap: np.ndarray, patch: OrientedSurfacePatch, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """``(xi_S, sigma_S)`` for the constitutive pair ``xi = -2 lam ell^2 grad phi``, ``Sigma = s I``.

    Field data are analytic values at the patch points: ``grad_phi`` and
    ``grad_lap`` have shape ``(N, d)``, ``lap`` ``(N,)``.
    """
    grad_phi = np.asarray(grad_phi, dtype=float)
    d = grad_phi.shape[-1]
    s = hypermicrostress_scalar(lap, params)
    ds = hypermicrostress_scalar(grad_lap, params)
    sigma = s[:, None, None] * np.eye(d)
    grad_sigma = np.einsum("ij,pk->pijk", np.eye(d), ds)
    xi_s, _ = surface_microtraction(microstress(grad_phi, params), sigma, grad_sigma, patch)
    return xi_s, hypermicrotraction(sigma, patch.n)
