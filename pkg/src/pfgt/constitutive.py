"""Pointwise constitutive closures of the Brazovskii free energy.

The free-energy density is

    psi = f(phi) + lam/2 * (phi**2 - 2 ell**2 |grad phi|**2 + ell**4 (tr grad^2 phi)**2)

and everything here derives from it: the microstress ``xi``, the
hypermicrostress ``Sigma``, the internal microforce ``pi`` with its
dissipative part, and the chemical potential ``mu`` of the conserved theory.

All functions broadcast over leading axes, so the same code evaluates a single
point or a whole grid: scalars have shape ``(...)``, vectors ``(..., d)`` and
tensors ``(..., d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

#: A spatially varying input: a constant, or a callable ``fn(x, t)`` where
#: ``x`` has shape ``(..., dim)`` and the result has shape ``(...)``.
Handle = Union[float, Callable[[np.ndarray, float], np.ndarray]]


def sample_handle(handle: Handle, x: np.ndarray, t: float) -> np.ndarray:
    """Evaluate a constant-or-callable handle on points ``x`` of shape ``(..., dim)``."""
    x = np.asarray(x, dtype=float)
    if callable(handle):
        out = np.asarray(handle(x, t), dtype=float)
        return np.broadcast_to(out, x.shape[:-1]).copy()
    return np.full(x.shape[:-1], float(handle))


@dataclass(frozen=True)
class BulkPotential:
    """Polynomial bulk energy ``f(phi) = sum_k coeffs[k] * phi**k``."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) < 3:
            raise ValueError("a bulk potential needs degree >= 2 (at least three coefficients)")
        if not all(np.isfinite(coeffs)):
            raise ValueError("bulk potential coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def quartic(cls, g: float) -> "BulkPotential":
        """The default potential ``-(g/2) phi**2 + phi**4 / 4``."""
        return cls((0.0, 0.0, -0.5 * g, 0.0, 0.25))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def bulk_potential_eval(p: BulkPotential, phi):
    """Return ``(f, f', f'')`` at ``phi`` by a single Horner sweep."""
    phi = np.asarray(phi, dtype=float)
    f = np.zeros_like(phi)
    df = np.zeros_like(phi)
    d2f = np.zeros_like(phi)
    for c in reversed(p.coeffs):
        d2f = d2f * phi + 2.0 * df
        df = df * phi + f
        f = f * phi + c
    if f.ndim == 0:
        return float(f), float(df), float(d2f)
    return f, df, d2f


def curvature_bounds(p: BulkPotential, cap: float) -> tuple[float, float]:
    """Return ``(min f'', max f'')`` over ``[-cap, cap]``.

    The extrema of a polynomial on an interval sit at the endpoints or at real
    roots of its derivative, so this is exact up to root-finding round-off.
    """
    cap = abs(float(cap))
    coeffs = np.array(p.coeffs)
    d2 = np.polynomial.polynomial.polyder(coeffs, 2)
    candidates = [-cap, cap]
    if len(d2) > 1:
        d3 = np.polynomial.polynomial.polyder(d2)
        if np.any(d3 != 0):
            roots = np.polynomial.polynomial.polyroots(d3)
            candidates += [r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and abs(r.real) <= cap]
    values = np.polynomial.polynomial.polyval(np.array(candidates), d2)
    return float(values.min()), float(values.max())


@dataclass(frozen=True)
class ShParams:
    """Constants of the nonconserved (Swift-Hohenberg) theory."""

    lam: float
    ell: float
    beta: float
    potential: BulkPotential = field(default_factory=lambda: BulkPotential.quartic(0.0))
    gamma: Handle = 0.0

    def __post_init__(self) -> None:
        for name in ("lam", "ell", "beta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class PfcParams:
    """Constants of the conserved (phase-field crystal) theory."""

    lam: float
    ell: float
    mobility: float
    potential: BulkPotential = field(default_factory=lambda: BulkPotential.quartic(0.0))
    gamma: Handle = 0.0
    source: Handle = 0.0

    def __post_init__(self) -> None:
        for name in ("lam", "ell", "mobility"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")


Params = Union[ShParams, PfcParams]


@dataclass(frozen=True)
class PointState:
    """Local data ``(phi, grad phi, grad^2 phi, phi_dot)`` at one point."""

    phi: float
    grad: np.ndarray
    hess: np.ndarray
    phi_dot: float = 0.0

    def __post_init__(self) -> None:
        grad = np.atleast_1d(np.asarray(self.grad, dtype=float))
        hess = np.asarray(self.hess, dtype=float).reshape(grad.size, grad.size)
        # symmetric by storage: only the upper triangle is kept
        upper = np.triu(hess)
        hess = upper + np.triu(hess, 1).T
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "hess", hess)
        object.__setattr__(self, "phi", float(self.phi))
        object.__setattr__(self, "phi_dot", float(self.phi_dot))


def free_energy_density(params: Params, phi, grad, hess):
    """Brazovskii density ``psi`` with the Laplacian taken as ``tr(hess)``."""
    phi = np.asarray(phi, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    f, _, _ = bulk_potential_eval(params.potential, phi)
    lap = np.trace(hess, axis1=-2, axis2=-1)
    grad2 = np.sum(grad * grad, axis=-1)
    ell2 = params.ell**2
    return f + 0.5 * params.lam * (phi * phi - 2.0 * ell2 * grad2 + ell2 * ell2 * lap * lap)


def psi_at(params: Params, s: PointState) -> float:
    return float(free_energy_density(params, s.phi, s.grad, s.hess))


def microstress(grad, params: Params):
    """``xi = -2 lam ell**2 grad phi``."""
    return -2.0 * params.lam * params.ell**2 * np.asarray(grad, dtype=float)


def hypermicrostress_scalar(lap, params: Params):
    """The scalar ``lam ell**4 lap`` multiplying the identity in ``Sigma``."""
    return params.lam * params.ell**4 * np.asarray(lap, dtype=float)


def hypermicrostress(hess, params: Params):
    """``Sigma = lam ell**4 tr(hess) I``, isotropic and hence symmetric."""
    hess = np.asarray(hess, dtype=float)
    d = hess.shape[-1]
    s = hypermicrostress_scalar(np.trace(hess, axis1=-2, axis2=-1), params)
    return s[..., None, None] * np.eye(d)


@dataclass(frozen=True)
class Microforce:
    """Internal microforce ``pi`` with its energetic/dissipative split."""

    total: np.ndarray | float
    energetic: np.ndarray | float
    dissipative: np.ndarray | float


def internal_microforce(phi, phi_dot, params: ShParams) -> Microforce:
    """``pi = -f'(phi) - lam phi - beta phi_dot``; the last term is ``pi_dis``."""
    _, df, _ = bulk_potential_eval(params.potential, phi)
    energetic = -df - params.lam * np.asarray(phi, dtype=float)
    dissipative = -params.beta * np.asarray(phi_dot, dtype=float)
    total = energetic + dissipative
    if np.ndim(total) == 0:
        return Microforce(float(total), float(energetic), float(dissipative))
    return Microforce(total, energetic, dissipative)


def chemical_potential(phi, lap_phi, bilap_phi, gamma, params: Params):
    """``mu = f'(phi) + lam (phi + 2 ell**2 lap + ell**4 bilap) - gamma``."""
    _, df, _ = bulk_potential_eval(params.potential, phi)
    ell2 = params.ell**2
    linear = np.asarray(phi, dtype=float) + 2.0 * ell2 * np.asarray(lap_phi) + ell2 * ell2 * np.asarray(bilap_phi)
    out = df + params.lam * linear - np.asarray(gamma, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def _psi_long(params: Params, phi, grad, hess_trace):
    """Density in extended precision, used only by the differencing checker."""
    ld = np.longdouble
    phi = ld(phi)
    acc = ld(0)
    for c in reversed(params.potential.coeffs):
        acc = acc * phi + ld(c)
    grad2 = sum((ld(g) * ld(g) for g in grad), ld(0))
    lam = ld(params.lam)
    ell2 = ld(params.ell) ** 2
    tr = ld(hess_trace)
    return acc + lam / 2 * (phi * phi - 2 * ell2 * grad2 + ell2 * ell2 * tr * tr)


def coleman_noll_residual(params: Params, s: PointState, h: float = 1e-5) -> tuple[float, float, float]:
    """Compare the closed forms of ``xi``, ``Sigma`` and ``pi`` with differenced ``psi``.

    Each argument of the response function is perturbed by ``+-h`` and the
    partial derivative is taken by central differences. The evaluation is done
    in extended precision so that the round-off floor sits well below the
    ``1e-10`` level at which ``xi`` and ``Sigma`` are exact (the density is
    quadratic in those arguments). The ``pi`` error is a genuine
    ``O(h**2)`` truncation error whenever ``f`` has a nonzero third derivative.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    d = s.grad.size
    hl = np.longdouble(h)
    grad = [np.longdouble(g) for g in s.grad]
    hess = np.array(s.hess, dtype=np.longdouble)
    trace = hess.trace()

    # d psi / d grad
    xi = microstress(s.grad, params)
    err_xi = 0.0
    for i in range(d):
        gp = list(grad)
        gm = list(grad)
        gp[i] += hl
        gm[i] -= hl
        diff = (_psi_long(params, s.phi, gp, trace) - _psi_long(params, s.phi, gm, trace)) / (2 * hl)
        err_xi = max(err_xi, abs(float(diff) - xi[i]))

    # d psi / d hess, every entry perturbed independently
    sigma = hypermicrostress(s.hess, params)
    err_sigma = 0.0
    for i in range(d):
        for j in range(d):
            delta = hl if i == j else np.longdouble(0)
            diff = (_psi_long(params, s.phi, grad, trace + delta) - _psi_long(params, s.phi, grad, trace - delta)) / (2 * hl)
            err_sigma = max(err_sigma, abs(float(diff) - sigma[i, j]))

    # -d psi / d phi against the energetic microforce
    pi_eq = internal_microforce(s.phi, 0.0, params).energetic if isinstance(params, ShParams) else None
    if pi_eq is None:
        _, df, _ = bulk_potential_eval(params.potential, s.phi)
        pi_eq = -df - params.lam * s.phi
    phi = np.longdouble(s.phi)
    diff = (_psi_long(params, phi + hl, grad, trace) - _psi_long(params, phi - hl, grad, trace)) / (2 * hl)
    err_pi = abs(float(-diff) - pi_eq)
    return err_xi, err_sigma, err_pi
