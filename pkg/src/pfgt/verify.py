"""Check suites behind the ``verify`` subcommand.

Every suite returns a list of :class:`Check` rows: a measured error (or a
measured order, for convergence checks) against its tolerance. All random
draws come from fixed seeds so the tables are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundary.closures import Natural, ShClosure, natural_tractions
from .boundary.tractions import (
    EdgeFrame,
    OrientedSurfacePatch,
    edge_microtractions,
    hypermicrotraction,
    isotropic_tractions,
    surface_couple,
    surface_microtraction,
)
from .configurational import (
    chemical_potential_field,
    configurational_residual,
    eshelby_conserved,
    eshelby_nonconserved,
    sh_rate_field,
)
from .constitutive import BulkPotential, PfcParams, PointState, ShParams, coleman_noll_residual
from .diagnostics import band_limited_field, virtual_power_residual
from .fields import Grid, ScalarField, crop
from .surface_calculus import (
    QUANTITIES,
    Deformation,
    biquadratic_graph,
    closed_form,
    cylinder,
    fd_variation_oracle,
    frame_variation,
    plane,
    polynomial_field,
    sphere,
    surface_point,
    surplus_divergence_check,
    unit_cube,
    unit_sphere,
)

DEFAULT_SEED = 20240607


@dataclass(frozen=True)
class Check:
    """One row of a verification table.

    ``kind = "max"`` passes when ``value <= tol``; ``kind = "order"`` passes when
    ``|value - target| <= tol``; ``kind = "min_order"`` passes when ``value >= target``.
    """

    name: str
    value: float
    tol: float
    kind: str = "max"
    target: float = 0.0

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.kind == "max":
            return self.value <= self.tol
        if self.kind == "order":
            return abs(self.value - self.target) <= self.tol
        return self.value >= self.target

    def describe(self) -> str:
        if self.kind == "max":
            bound = f"<= {self.tol:.1e}"
        elif self.kind == "order":
            bound = f"= {self.target:g} +- {self.tol:g}"
        else:
            bound = f">= {self.target:g}"
        return f"{self.name:<52s} {self.value:12.4e}  {bound:<16s} {'PASS' if self.passed else 'FAIL'}"


def observed_order(errors, hs) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


# ---------------------------------------------------------------------------
# constitutive


def random_potential(rng: np.random.Generator, degree: int = 4) -> BulkPotential:
    return BulkPotential(tuple(rng.uniform(-1, 1, degree + 1)))


def random_sh_params(rng: np.random.Generator, potential: BulkPotential | None = None) -> ShParams:
    return ShParams(
        float(rng.uniform(0.2, 3.0)),
        float(rng.uniform(0.3, 2.0)),
        float(rng.uniform(0.2, 3.0)),
        potential or random_potential(rng),
    )


def random_point_state(rng: np.random.Generator, dim: int | None = None) -> PointState:
    d = dim or int(rng.integers(1, 4))
    return PointState(float(rng.uniform(-1.5, 1.5)), rng.uniform(-2, 2, d), rng.uniform(-2, 2, (d, d)), float(rng.uniform(-1, 1)))


def coleman_noll_checks(seed: int = DEFAULT_SEED, samples: int = 1000) -> list[Check]:
    rng = np.random.default_rng(seed)
    ex = es = 0.0
    for _ in range(samples):
        params = random_sh_params(rng)
        e_xi, e_sigma, _ = coleman_noll_residual(params, random_point_state(rng))
        ex, es = max(ex, e_xi), max(es, e_sigma)
    hs = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
    orders = []
    for _ in range(20):
        params = random_sh_params(rng)
        state = random_point_state(rng)
        errs = np.array([coleman_noll_residual(params, state, h)[2] for h in hs])
        if np.all(errs > 1e-13):
            orders.append(observed_order(errs, hs))
    order = float(np.median(orders)) if orders else float("nan")
    return [
        Check(f"xi closed form vs differenced psi ({samples} states)", ex, 1e-10),
        Check(f"Sigma closed form vs differenced psi ({samples} states)", es, 1e-10),
        Check("pi equilibrium part: observed order in h", order, 0.2, "order", 2.0),
    ]


# ---------------------------------------------------------------------------
# virtual power


def _smooth_bump(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """``C^inf`` bump supported on ``(lo, hi)``."""
    r = (2 * x - (lo + hi)) / (hi - lo)
    out = np.zeros_like(x)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def bounded_power_residual(n: int, params: ShParams, length: float = 8.0) -> float:
    grid = Grid.box((n,), (length,), "bounded")
    x = grid.coords()[..., 0]
    phi = 0.3 * np.sin(1.3 * x) + 0.2 * np.cos(0.7 * x) + 0.05 * x
    closure = ShClosure(grid, {"left": Natural(), "right": Natural()}, params)
    P = closure.fill(phi, 0.0)
    phi_dot = ScalarField(grid, closure._rate(P.values, 0.0))
    xc = grid.coords(1)[..., 0]
    chi = ScalarField(grid, _smooth_bump(xc, 0.25 * length, 0.75 * length) * np.cos(0.9 * xc), 1)
    return virtual_power_residual(P, phi_dot, params.gamma, chi, params).residual


def power_checks(seed: int = DEFAULT_SEED, samples: int = 20, n: int = 128) -> list[Check]:
    rng = np.random.default_rng(seed)
    gamma = lambda x, t: 0.05 * np.sin(x[..., 0]) * np.cos(2 * x[..., 1])  # noqa: E731
    params = ShParams(1.0, 1.0, 1.0, BulkPotential.quartic(0.3), gamma)
    grid = Grid.box((n, n), (4 * np.pi, 4 * np.pi))
    phi = ScalarField(grid, 0.2 * band_limited_field(grid, rng, 0.25).values)
    phi_dot = sh_rate_field(phi, params)
    worst = 0.0
    for _ in range(samples):
        vp = virtual_power_residual(phi, phi_dot, gamma, band_limited_field(grid, rng), params)
        worst = max(worst, vp.residual / max(abs(vp.internal), abs(vp.external), 1.0))
    bparams = ShParams(1.0, 1.0, 1.0, BulkPotential.quartic(0.3), 0.1)
    ns = [41, 81, 161, 321]
    errs = [bounded_power_residual(m, bparams) for m in ns]
    hs = [8.0 / (m - 1) for m in ns]
    return [
        Check(f"periodic |V_int - V_ext| / scale ({samples} fields)", worst, 1e-10),
        Check("bounded 1D interior chi: observed order", observed_order(errs, hs), 0.3, "order", 2.0),
    ]


# ---------------------------------------------------------------------------
# configurational balance


def _manufactured_params():
    gamma = lambda x, t: 0.05 * np.sin(x[..., 0])  # noqa: E731
    pot = BulkPotential((0.1, 0.2, -0.15, 0.3, 0.25))
    return ShParams(1.0, 0.8, 1.3, pot, gamma), PfcParams(1.0, 0.8, 1.3, pot, gamma)


def _bounded_config_residuals(n: int):
    sh, pfc = _manufactured_params()
    grid = Grid.box((n, n), (3.0, 3.0), "bounded")
    X = grid.coords(3)
    phi = ScalarField(grid, 0.3 * np.sin(1.1 * X[..., 0]) + 0.2 * np.cos(0.35 * X[..., 0] + 0.9 * X[..., 1]), 3)
    r_sh = configurational_residual(eshelby_nonconserved(phi, sh_rate_field(crop(phi, 2), sh), sh)).max_norm
    r_pfc = configurational_residual(eshelby_conserved(phi, chemical_potential_field(phi, pfc), pfc)).max_norm
    return r_sh, r_pfc


def configurational_checks(n: int = 128) -> list[Check]:
    sh, pfc = _manufactured_params()
    grid = Grid.box((n, n), (2 * np.pi, 2 * np.pi))
    x = grid.coords()
    phi = ScalarField(grid, 0.1 * np.cos(x[..., 0]) * np.cos(x[..., 1]))
    r_sh = configurational_residual(eshelby_nonconserved(phi, sh_rate_field(phi, sh), sh)).max_norm
    r_pfc = configurational_residual(eshelby_conserved(phi, chemical_potential_field(phi, pfc), pfc)).max_norm
    ns = [17, 33, 65]
    res = np.array([_bounded_config_residuals(m) for m in ns])
    hs = [3.0 / (m - 1) for m in ns]
    return [
        Check(f"nonconserved |div C + f + e| (periodic {n}^2)", r_sh, 1e-8),
        Check(f"conserved |div C + f + e| (periodic {n}^2)", r_pfc, 1e-8),
        Check("nonconserved bounded: observed order", observed_order(res[:, 0], hs), 0.0, "min_order", 2.0 - 0.1),
        Check("conserved bounded: observed order", observed_order(res[:, 1], hs), 0.0, "min_order", 2.0 - 0.1),
    ]


# ---------------------------------------------------------------------------
# surface identities


def random_surface_sample(rng: np.random.Generator):
    """A random (patch, parameters, tangent direction, displacement) tuple."""
    which = int(rng.integers(0, 4))
    if which == 0:
        patch = sphere(float(rng.uniform(0.5, 2.0)))
        a, b = rng.uniform(-0.9, 0.9), rng.uniform(0, 2 * np.pi)
    elif which == 1:
        patch = cylinder(float(rng.uniform(0.5, 2.0)))
        a, b = rng.uniform(0, 2 * np.pi), rng.uniform(-1, 1)
    elif which == 2:
        # keep sample points within O(1) of the origin, like the curved patches,
        # so |grad u| stays O(1) for the unit-scale random displacement
        e1 = rng.normal(size=3)
        e2 = rng.normal(size=3)
        patch = plane(rng.uniform(-0.5, 0.5, 3), e1 / np.linalg.norm(e1), e2 / np.linalg.norm(e2))
        a, b = rng.uniform(0, 1, 2)
    else:
        patch = biquadratic_graph(rng.uniform(-0.5, 0.5, 9))
        a, b = rng.uniform(-1, 1, 2)
    direction = rng.normal(size=2)
    return patch, float(a), float(b), direction, Deformation.random(rng)


def identity_checks(seed: int = DEFAULT_SEED, samples: int = 120, eps: float = 1e-5) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = {q: 0.0 for q in QUANTITIES}
    ortho = 0.0
    product = 0.0
    for _ in range(samples):
        patch, a, b, direction, u = random_surface_sample(rng)
        p = surface_point(patch, a, b, direction)
        for q in QUANTITIES:
            err = np.max(np.abs(np.asarray(closed_form(p, u, q)) - fd_variation_oracle(patch, a, b, u, eps, q, direction)))
            worst[q] = max(worst[q], float(err))
        dn, dt, dnu = frame_variation(p, u)
        n, t, nu = p.frame.n, p.t, p.nu
        ortho = max(ortho, abs(dn @ n), abs(dt @ t), abs(dnu @ nu))
        product = max(product, float(np.max(np.abs(dnu - (np.cross(dt, n) + np.cross(t, dn))))))
    labels = {
        "t": "dt/deps", "n": "dn/deps", "nu": "dnu/deps", "L": "dL/deps",
        "length": "d|F t|/deps", "area": "d(J|F^-T n|)/deps", "volume": "dJ/deps",
    }  # fmt: skip
    rows = [Check(f"{labels[q]} closed form vs eps-oracle ({samples} samples)", worst[q], 1e-8) for q in QUANTITIES]
    rows.append(Check("first-order norm preservation of t, n, nu", ortho, 1e-12))
    rows.append(Check("nu = t x n product rule", product, 1e-12))
    return rows


# ---------------------------------------------------------------------------
# surplus divergence theorem


def monomial_fields(max_degree: int = 3):
    """Vector fields ``x^m e_i`` for every monomial of total degree ``<= max_degree``."""
    for total in range(max_degree + 1):
        for i in range(total + 1):
            for j in range(total - i + 1):
                m = (i, j, total - i - j)
                for c in range(3):
                    e = np.zeros(3)
                    e[c] = 1.0
                    yield m, c, polynomial_field({m: e})


def surplus_checks(seed: int = DEFAULT_SEED, order: int = 8) -> list[Check]:
    rng = np.random.default_rng(seed)
    cube = unit_cube()
    worst = 0.0
    for _, _, g in monomial_fields(3):
        worst = max(worst, surplus_divergence_check(cube, g, order)[2])
    sph = unit_sphere(1.0)
    lhs_max = 0.0
    for _ in range(5):
        coeffs = {m: rng.normal(size=3) for m, c, _ in monomial_fields(3) if c == 0}
        lhs_max = max(lhs_max, abs(surplus_divergence_check(sph, polynomial_field(coeffs), order)[0]))
    return [
        Check(f"unit cube |lhs - rhs|, degree <= 3 basis (order {order})", worst, 1e-10),
        Check("unit sphere |lhs|, random cubic fields", lhs_max, 1e-10),
    ]


# ---------------------------------------------------------------------------
# microtractions


def _random_patch(rng: np.random.Generator, count: int = 8) -> OrientedSurfacePatch:
    patch = biquadratic_graph(rng.uniform(-0.5, 0.5, 9))
    pts = [surface_point(patch, *rng.uniform(-1, 1, 2)) for _ in range(count)]
    return OrientedSurfacePatch(
        np.array([p.frame.x for p in pts]), np.array([p.frame.n for p in pts]), np.array([p.frame.L for p in pts])
    )


def _random_edge(rng: np.random.Generator) -> EdgeFrame:
    t = rng.normal(size=3)
    t /= np.linalg.norm(t)
    frames = []
    for _ in range(2):
        n = rng.normal(size=3)
        n -= (n @ t) * t
        n /= np.linalg.norm(n)
        frames.append((n, np.cross(t, n)))
    (n1, nu1), (n2, nu2) = frames
    return EdgeFrame(n1, nu1, n2, -nu2)


def microtraction_checks(seed: int = DEFAULT_SEED, samples: int = 100) -> list[Check]:
    rng = np.random.default_rng(seed)
    flip = sym = couple_flip = tau_flip = 0.0
    for _ in range(samples):
        patch = _random_patch(rng)
        N = patch.n.shape[0]
        xi = rng.normal(size=(N, 3))
        S = rng.normal(size=(N, 3, 3))
        G = rng.normal(size=(N, 3, 3, 3))
        xs, _ = surface_microtraction(xi, S, G, patch)
        xf, _ = surface_microtraction(xi, S, G, patch.flipped())
        flip = max(flip, float(np.max(np.abs(xs + xf))))
        couple_flip = max(couple_flip, float(np.max(np.abs(surface_couple(S, patch.n) + surface_couple(S, -patch.n)))))
        Ssym = 0.5 * (S + np.swapaxes(S, 1, 2))
        Gsym = 0.5 * (G + np.swapaxes(G, 1, 2))
        xsym, _ = surface_microtraction(xi, Ssym, Gsym, patch)
        sym = max(sym, float(np.max(np.abs(xs - xsym))))
        sym = max(sym, float(np.max(np.abs(hypermicrotraction(S, patch.n) - hypermicrotraction(Ssym, patch.n)))))
        edge = _random_edge(rng)
        S0 = rng.normal(size=(3, 3))
        _, tc = edge_microtractions(S0, edge)
        _, tc_sym = edge_microtractions(0.5 * (S0 + S0.T), edge)
        flipped = EdgeFrame(-edge.n, edge.nu, -edge.n_minus, edge.nu_minus)
        _, tc_flip = edge_microtractions(S0, flipped)
        sym = max(sym, abs(float(tc - tc_sym)))
        tau_flip = max(tau_flip, abs(float(tc + tc_flip)))
        # planar pairing: a constant skew Sigma contributes w . t to tau_dS, whose
        # circulation around a closed planar boundary vanishes
        sym = max(sym, _planar_circulation(S0 - S0.T, rng))
    iso = _isotropic_specialization(rng)
    return [
        Check("action-reaction xi_S(-n, -L) = -xi_S(n, L)", flip, 1e-12),
        Check("action-reaction varpi_S(-n) = -varpi_S(n)", couple_flip, 1e-12),
        Check("action-reaction tau_C with flipped normals", tau_flip, 1e-12),
        Check(f"symmetric-part invariance ({samples} random Sigma fields)", sym, 1e-10),
        Check("isotropic Sigma: xi_S, sigma_S vs closure tractions", iso, 1e-10),
    ]


def _planar_circulation(W: np.ndarray, rng: np.random.Generator, m: int = 64) -> float:
    """``|closed integral of nu . W n ds|`` around a circle in a random plane."""
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    e1 = np.cross(n, rng.normal(size=3))
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    s = 2 * np.pi * np.arange(m) / m
    t = -np.sin(s)[:, None] * e1 + np.cos(s)[:, None] * e2
    nu = np.cross(t, n)
    tau, _ = edge_microtractions(W, EdgeFrame(np.broadcast_to(n, nu.shape), nu))
    return float(abs(np.sum(tau) * 2 * np.pi / m))


def _isotropic_specialization(rng: np.random.Generator) -> float:
    """Compare isotropic ``xi_S``/``sigma_S`` with the closure's natural tractions."""
    params = ShParams(1.3, 0.7, 1.0)
    k = rng.uniform(0.5, 1.5, 3)

    def phi_derivs(x):
        # phi = sin(k . x): grad, Laplacian and grad Laplacian in closed form
        arg = x @ k
        k2 = k @ k
        grad = np.cos(arg)[:, None] * k
        lap = -k2 * np.sin(arg)
        grad_lap = -k2 * np.cos(arg)[:, None] * k
        return grad, lap, grad_lap

    patch = _random_patch(rng)
    grad, lap, grad_lap = phi_derivs(patch.x)
    xi_s, sigma_s = isotropic_tractions(grad, lap, grad_lap, patch, params)
    dn = np.einsum("pi,pi->p", grad, patch.n)
    dn_lap = np.einsum("pi,pi->p", grad_lap, patch.n)
    ref_xi, ref_sigma = natural_tractions(dn, dn_lap, lap, params)
    err = max(float(np.max(np.abs(xi_s - ref_xi))), float(np.max(np.abs(sigma_s - ref_sigma))))
    # tau_dS and tau_C vanish for Sigma = s I
    S = lap[0] * params.lam * params.ell**4 * np.eye(3)
    tau, tc = edge_microtractions(S, _random_edge(rng))
    return max(err, abs(float(tau)), abs(float(tc)))


TARGETS: dict[str, Callable[[], list[Check]]] = {
    "coleman-noll": coleman_noll_checks,
    "power": power_checks,
    "configurational": configurational_checks,
    "identities": identity_checks,
    "surplus": surplus_checks,
    "microtractions": microtraction_checks,
}
