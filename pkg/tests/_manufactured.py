"""Manufactured steady Swift-Hohenberg solutions on a bounded 1D interval.

The exact field ``phi_m`` is a smooth non-polynomial function; the external
microforce is chosen so that ``phi_m`` is an exact steady state, and the wall
data of each family is read off ``phi_m``. The discrete steady problem is then
solved with ``scipy.optimize.root`` and compared with ``phi_m``.
"""

import numpy as np
import scipy.optimize

from pfgt.boundary import Essential, Natural, ShClosure
from pfgt.constitutive import BulkPotential, ShParams
from pfgt.fields import Grid

LENGTH = 4.0
_A, _B = 1.3, 0.7


def phi_m(x, d=0):
    """``d``-th derivative of ``0.3 sin(1.3 x) + 0.2 cos(0.7 x) + 0.05 x``."""
    s = 0.3 * _A**d * np.sin(_A * x + d * np.pi / 2) + 0.2 * _B**d * np.cos(_B * x + d * np.pi / 2)
    if d == 0:
        s = s + 0.05 * x
    elif d == 1:
        s = s + 0.05
    return s


POTENTIAL = BulkPotential((0.0, 0.0, 0.5, 0.0, 0.25))


def _gamma(x, t):
    u = phi_m(x[..., 0])
    # lam (1 + Lap)^2 phi + f'(phi) with lam = ell = 1, f' = phi + phi^3
    return u + 2 * phi_m(x[..., 0], 2) + phi_m(x[..., 0], 4) + u + u**3


PARAMS = ShParams(1.0, 1.0, 1.0, POTENTIAL, _gamma)


def _normal(x):
    return np.where(x[..., 0] < LENGTH / 2, -1.0, 1.0)


def wall_families():
    essential = Essential(lambda x, t: phi_m(x[..., 0]), lambda x, t: _normal(x) * phi_m(x[..., 0], 1))
    natural = Natural(
        lambda x, t: -2 * _normal(x) * (phi_m(x[..., 0], 1) + 0.5 * phi_m(x[..., 0], 3)),
        lambda x, t: phi_m(x[..., 0], 2),
    )
    return {"essential": essential, "natural": natural}


def steady_error(family: str, n: int) -> tuple[float, float]:
    """Return ``(max |phi_h - phi_m|, h)`` for the discrete steady state."""
    bc = wall_families()[family]
    grid = Grid.box(n, LENGTH, "bounded")
    closure = ShClosure(grid, {"left": bc, "right": bc}, PARAMS)
    exact = phi_m(grid.coords()[..., 0])

    def rate(v):
        return closure._rate(closure.fill(v, 0.0).values, 0.0)

    if family == "essential":
        # wall values are pinned to the data; the interior is unknown

        def residual(u):
            v = exact.copy()
            v[1:-1] = u
            return rate(v)[1:-1]

        sol = scipy.optimize.root(residual, exact[1:-1], tol=1e-14)
        full = exact.copy()
        full[1:-1] = sol.x
        leftover = residual(sol.x)
    else:
        sol = scipy.optimize.root(rate, exact, tol=1e-14)
        full = sol.x
        leftover = rate(sol.x)
    # hybr may stop on its step tolerance after converging, so judge the residual
    if np.abs(leftover).max() > 1e-9:
        raise RuntimeError(f"steady solve failed: {sol.message}")
    return float(np.abs(full - exact).max()), grid.h[0]


def observed_orders(family: str, ns=(21, 41, 81, 161)) -> list[float]:
    pts = [steady_error(family, n) for n in ns]
    return [float(np.log(e0 / e1) / np.log(h0 / h1)) for (e0, h0), (e1, h1) in zip(pts, pts[1:])]
