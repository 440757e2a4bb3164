"""Variations of surface frames, curvature and measures under ``y = x + eps u``.

Closed forms evaluated at ``eps = 0`` (``G = grad u``, ``P = I - n n``):

==========  =====================================================
quantity    variation
==========  =====================================================
``t``       ``G t - (G t . t) t``
``n``       ``-(G P)^T n``
``nu``      ``-(G t . nu) t + (G P)^T n x t``
``L``       ``Grad_S((G P)^T n) - L G P + L (G P)^T n (x) n``
length      ``G : t (x) t``
area        ``Div_S u = G : P``
volume      ``div u``
==========  =====================================================

Each is certified by :func:`fd_variation_oracle`, which rebuilds the frame of
the displaced patch from its parametrization and differences in ``eps``.

Surfaces are analytic parametric patches; :class:`ClosedSurface` bundles
patches and edges for the nonsmooth divergence theorem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import DegenerateFrame

Quantity = Literal["n", "t", "nu", "L", "length", "area", "volume"]
QUANTITIES: tuple[Quantity, ...] = ("n", "t", "nu", "L", "length", "area", "volume")


# ---------------------------------------------------------------------------
# parametric patches


@dataclass(frozen=True)
class PatchJet:
    """Position and parametric derivatives up to second order at one point."""

    x: np.ndarray
    xa: np.ndarray
    xb: np.ndarray
    xaa: np.ndarray
    xab: np.ndarray
    xbb: np.ndarray


@dataclass(frozen=True)
class ParamPatch:
    """A smooth patch ``(a, b) -> x`` on a parameter rectangle.

    ``jet(a, b)`` returns :class:`PatchJet` for scalar parameters; ``orientation``
    is ``+1`` if ``x_a x x_b`` points along the chosen normal and ``-1`` otherwise.
    ``rule`` selects the quadrature per parameter axis: ``"gauss"`` or
    ``"periodic"`` (rectangle rule, exact for trigonometric polynomials).
    """

    jet: Callable[[float, float], PatchJet]
    a_range: tuple[float, float]
    b_range: tuple[float, float]
    orientation: int = 1
    rule: tuple[str, str] = ("gauss", "gauss")
    name: str = "patch"


@dataclass(frozen=True)
class Frame:
    """Darboux data at a patch point."""

    x: np.ndarray
    n: np.ndarray
    L: np.ndarray
    xa: np.ndarray
    xb: np.ndarray
    dual_a: np.ndarray
    dual_b: np.ndarray
    na: np.ndarray
    nb: np.ndarray

    @property
    def P(self) -> np.ndarray:
        return np.eye(3) - np.outer(self.n, self.n)

    def tangent(self, direction: Sequence[float]) -> np.ndarray:
        v = direction[0] * self.xa + direction[1] * self.xb
        return _unit(v, "tangent direction", max(np.linalg.norm(self.xa), np.linalg.norm(self.xb)))


def _unit(v: np.ndarray, what: str, scale: float = 1.0) -> np.ndarray:
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm <= 1e-10 * scale:
        raise DegenerateFrame(f"{what} is degenerate (norm {norm:.3g})")
    return v / norm


def frame_from_jet(j: PatchJet, orientation: int = 1) -> Frame:
    """Unit normal, curvature tensor ``L = -Grad_S n`` and dual basis from a jet."""
    N = orientation * np.cross(j.xa, j.xb)
    scale = np.linalg.norm(j.xa) * np.linalg.norm(j.xb)
    normN = np.linalg.norm(N)
    n = _unit(N, "surface normal", scale)
    P = np.eye(3) - np.outer(n, n)
    Na = orientation * (np.cross(j.xaa, j.xb) + np.cross(j.xa, j.xab))
    Nb = orientation * (np.cross(j.xab, j.xb) + np.cross(j.xa, j.xbb))
    na = P @ Na / normN
    nb = P @ Nb / normN
    g = np.array([[j.xa @ j.xa, j.xa @ j.xb], [j.xb @ j.xa, j.xb @ j.xb]])
    gi = np.linalg.inv(g)
    dual_a = gi[0, 0] * j.xa + gi[0, 1] * j.xb
    dual_b = gi[1, 0] * j.xa + gi[1, 1] * j.xb
    grad_s_n = np.outer(na, dual_a) + np.outer(nb, dual_b)
    return Frame(j.x, n, -grad_s_n, j.xa, j.xb, dual_a, dual_b, na, nb)


def _zero3():
    return np.zeros(3)


def sphere(R: float = 1.0, center=(0.0, 0.0, 0.0)) -> ParamPatch:
    """Sphere parametrized by ``(u = cos theta, phi)`` with outward normal."""
    c = np.asarray(center, dtype=float)

    def jet(u: float, p: float) -> PatchJet:
        s = np.sqrt(1.0 - u * u)
        ds = -u / s
        d2s = -1.0 / s**3
        cp, sp = np.cos(p), np.sin(p)
        x = c + R * np.array([s * cp, s * sp, u])
        xa = R * np.array([ds * cp, ds * sp, 1.0])
        xb = R * np.array([-s * sp, s * cp, 0.0])
        xaa = R * np.array([d2s * cp, d2s * sp, 0.0])
        xab = R * np.array([-ds * sp, ds * cp, 0.0])
        xbb = R * np.array([-s * cp, -s * sp, 0.0])
        return PatchJet(x, xa, xb, xaa, xab, xbb)

    # x_u x x_phi points inward for this parametrization
    return ParamPatch(jet, (-1.0, 1.0), (0.0, 2 * np.pi), orientation=-1, rule=("gauss", "periodic"), name="sphere")


def plane(origin=(0.0, 0.0, 0.0), e1=(1.0, 0.0, 0.0), e2=(0.0, 1.0, 0.0), a_range=(0.0, 1.0), b_range=(0.0, 1.0), orientation: int = 1, name="plane") -> ParamPatch:
    o, u, v = (np.asarray(w, dtype=float) for w in (origin, e1, e2))

    def jet(a: float, b: float) -> PatchJet:
        return PatchJet(o + a * u + b * v, u.copy(), v.copy(), _zero3(), _zero3(), _zero3())

    return ParamPatch(jet, a_range, b_range, orientation, name=name)


def cylinder(R: float = 1.0, height: tuple[float, float] = (-1.0, 1.0)) -> ParamPatch:
    """Cylinder about the ``z`` axis, ``(theta, z)`` parameters, outward normal."""

    def jet(th: float, z: float) -> PatchJet:
        c, s = np.cos(th), np.sin(th)
        x = np.array([R * c, R * s, z])
        xa = np.array([-R * s, R * c, 0.0])
        xb = np.array([0.0, 0.0, 1.0])
        xaa = np.array([-R * c, -R * s, 0.0])
        return PatchJet(x, xa, xb, xaa, _zero3(), _zero3())

    return ParamPatch(jet, (0.0, 2 * np.pi), height, orientation=1, rule=("periodic", "gauss"), name="cylinder")


def biquadratic_graph(coeffs: np.ndarray, a_range=(-1.0, 1.0), b_range=(-1.0, 1.0)) -> ParamPatch:
    """Graph ``z = sum_{i,j<=2} c[i, j] a**i b**j`` with upward normal."""
    C = np.asarray(coeffs, dtype=float).reshape(3, 3)

    def jet(a: float, b: float) -> PatchJet:
        pa = np.array([1.0, a, a * a])
        pb = np.array([1.0, b, b * b])
        da = np.array([0.0, 1.0, 2 * a])
        db = np.array([0.0, 1.0, 2 * b])
        d2 = np.array([0.0, 0.0, 2.0])
        z = pa @ C @ pb
        za, zb = da @ C @ pb, pa @ C @ db
        zaa, zab, zbb = d2 @ C @ pb, da @ C @ db, pa @ C @ d2
        return PatchJet(
            np.array([a, b, z]),
            np.array([1.0, 0.0, za]),
            np.array([0.0, 1.0, zb]),
            np.array([0.0, 0.0, zaa]),
            np.array([0.0, 0.0, zab]),
            np.array([0.0, 0.0, zbb]),
        )

    return ParamPatch(jet, a_range, b_range, orientation=1, name="biquadratic")


# ---------------------------------------------------------------------------
# displacements


@dataclass(frozen=True)
class Deformation:
    """Quadratic displacement ``u(x) = c + A x + (1/2) B[x, x]``.

    ``B`` is symmetric in its last two indices, so ``grad u = A + B x`` and the
    second gradient is ``B`` everywhere.
    """

    c: np.ndarray = field(default_factory=_zero3)
    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    B: np.ndarray = field(default_factory=lambda: np.zeros((3, 3, 3)))

    def __post_init__(self) -> None:
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", 0.5 * (B + np.swapaxes(B, 1, 2)))

    @classmethod
    def dilation(cls, alpha: float) -> "Deformation":
        return cls(A=alpha * np.eye(3))

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0) -> "Deformation":
        return cls(
            rng.uniform(-scale, scale, 3),
            rng.uniform(-scale, scale, (3, 3)),
            rng.uniform(-scale, scale, (3, 3, 3)),
        )

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.c + self.A @ x + 0.5 * np.einsum("ijk,j,k->i", self.B, x, x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.A + np.einsum("ijk,k->ij", self.B, x)

    def hess(self, x: np.ndarray) -> np.ndarray:
        return self.B


# ---------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class SurfacePoint:
    """A frame together with a unit edge tangent ``t`` (``nu = t x n``)."""

    frame: Frame
    t: np.ndarray

    @property
    def nu(self) -> np.ndarray:
        return np.cross(self.t, self.frame.n)


def surface_point(patch: ParamPatch, a: float, b: float, direction=(1.0, 0.0)) -> SurfacePoint:
    fr = frame_from_jet(patch.jet(a, b), patch.orientation)
    return SurfacePoint(fr, fr.tangent(direction))


def frame_variation(p: SurfacePoint, u: Deformation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(dn, dt, dnu)`` at ``eps = 0``."""
    n, t, nu = p.frame.n, p.t, p.nu
    G = u.grad(p.frame.x)
    grad_s_u = G @ p.frame.P
    du_ds = G @ t
    w = grad_s_u.T @ n
    dn = -w
    dt = du_ds - (du_ds @ t) * t
    dnu = -(du_ds @ nu) * t + np.cross(w, t)
    return dn, dt, dnu


def curvature_variation(p: SurfacePoint, u: Deformation) -> np.ndarray:
    """Return ``dL/deps`` at ``eps = 0``."""
    fr = p.frame
    n, L, P = fr.n, fr.L, fr.P
    G = u.grad(fr.x)
    B = u.hess(fr.x)
    w = P @ G.T @ n
    # surface gradient of w_i = P_ij G_kj n_k, with Grad_S n = -L and
    # Grad_S P_ij = L_il n_j + n_i L_jl
    grad_s_w = (
        np.einsum("il,j,kj,k->il", L, n, G, n)
        + np.einsum("i,jl,kj,k->il", n, L, G, n)
        + np.einsum("ij,kjm,ml,k->il", P, B, P, n)
        - np.einsum("ij,kj,kl->il", P, G, L)
    )
    return grad_s_w - L @ G @ P + np.outer(L @ w, n)


def measure_variations(p: SurfacePoint, u: Deformation) -> tuple[float, float, float]:
    """Return ``(d|F t|, d(J |F^-T n|), dJ)`` at ``eps = 0``."""
    G = u.grad(p.frame.x)
    return float(p.t @ G @ p.t), float(np.sum(G * p.frame.P)), float(np.trace(G))


def normal_stretch_variation(p: SurfacePoint, u: Deformation) -> float:
    """``d|F^-T n|/deps = -G : n (x) n``."""
    n = p.frame.n
    return float(-(n @ u.grad(p.frame.x) @ n))


def closed_form(p: SurfacePoint, u: Deformation, quantity: Quantity):
    if quantity in ("n", "t", "nu"):
        dn, dt, dnu = frame_variation(p, u)
        return {"n": dn, "t": dt, "nu": dnu}[quantity]
    if quantity == "L":
        return curvature_variation(p, u)
    length, area, volume = measure_variations(p, u)
    return {"length": length, "area": area, "volume": volume}[quantity]


# ---------------------------------------------------------------------------
# oracle


def _displaced_jet(j: PatchJet, u: Deformation, eps: float) -> PatchJet:
    G = u.grad(j.x)
    B = u.hess(j.x)

    def second(xa, xb, xab):
        return xab + eps * (np.einsum("ijk,j,k->i", B, xa, xb) + G @ xab)

    return PatchJet(
        j.x + eps * u.value(j.x),
        j.xa + eps * G @ j.xa,
        j.xb + eps * G @ j.xb,
        second(j.xa, j.xa, j.xaa),
        second(j.xa, j.xb, j.xab),
        second(j.xb, j.xb, j.xbb),
    )


def _quantity_on(j0: PatchJet, j: PatchJet, orientation: int, direction, G: np.ndarray, eps: float, quantity: Quantity):
    fr = frame_from_jet(j, orientation)
    v = direction[0] * j.xa + direction[1] * j.xb
    v0 = direction[0] * j0.xa + direction[1] * j0.xb
    scale = np.linalg.norm(v0)
    t = _unit(v, "edge tangent", scale)
    if quantity == "n":
        return fr.n
    if quantity == "t":
        return t
    if quantity == "nu":
        return np.cross(t, fr.n)
    if quantity == "L":
        return fr.L
    if quantity == "length":
        return np.linalg.norm(v) / scale
    if quantity == "area":
        return np.linalg.norm(np.cross(j.xa, j.xb)) / np.linalg.norm(np.cross(j0.xa, j0.xb))
    if quantity == "volume":
        return np.linalg.det(np.eye(3) + eps * G)
    raise ValueError(f"unknown quantity {quantity!r}")


def fd_variation_oracle(patch: ParamPatch, a: float, b: float, u: Deformation, eps: float, quantity: Quantity, direction=(1.0, 0.0)):
    """Central difference in ``eps`` of ``quantity`` on the displaced patch."""
    if not 0 < eps <= 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    j0 = patch.jet(a, b)
    G = u.grad(j0.x)
    plus = _quantity_on(j0, _displaced_jet(j0, u, eps), patch.orientation, direction, G, eps, quantity)
    minus = _quantity_on(j0, _displaced_jet(j0, u, -eps), patch.orientation, direction, G, -eps, quantity)
    return (np.asarray(plus) - np.asarray(minus)) / (2 * eps)


# ---------------------------------------------------------------------------
# nonsmooth divergence theorem


@dataclass(frozen=True)
class Edge:
    """Straight or curved edge ``s -> x(s)``, ``s`` in ``[0, 1]``, with limiting frames."""

    point: Callable[[float], np.ndarray]
    speed: Callable[[float], float]
    n_plus: Callable[[float], np.ndarray]
    n_minus: Callable[[float], np.ndarray]
    nu_plus: Callable[[float], np.ndarray]
    nu_minus: Callable[[float], np.ndarray]
    t: Callable[[float], np.ndarray]


@dataclass(frozen=True)
class ClosedSurface:
    patches: tuple[ParamPatch, ...]
    edges: tuple[Edge, ...] = ()
    closed: bool = True


def unit_cube() -> ClosedSurface:
    """Surface of ``[0, 1]^3`` as six outward-oriented faces and twelve edges."""
    e = np.eye(3)
    patches = []
    for axis in range(3):
        i, j = (axis + 1) % 3, (axis + 2) % 3
        for side in (0.0, 1.0):
            origin = side * e[axis]
            orient = 1 if side == 1.0 else -1
            patches.append(plane(origin, e[i], e[j], orientation=orient, name=f"face{axis}{int(side)}"))
    edges = []
    for axis in range(3):  # edge direction
        i, j = (axis + 1) % 3, (axis + 2) % 3
        for si in (0.0, 1.0):
            for sj in (0.0, 1.0):
                base = si * e[i] + sj * e[j]
                # the two faces meeting here have outward normals along +-e_i and +-e_j
                ni = (1 if si else -1) * e[i]
                nj = (1 if sj else -1) * e[j]
                t = np.cross(ni, nj)  # orientation from the "+" side
                # nu of each face is the in-face direction pointing out across the edge
                nu_i = nj
                nu_j = ni

                def const(v):
                    v = v.copy()
                    return lambda s: v

                edges.append(
                    Edge(
                        point=(lambda base, axis: lambda s: base + s * e[axis])(base, axis),
                        speed=lambda s: 1.0,
                        n_plus=const(ni),
                        n_minus=const(nj),
                        nu_plus=const(nu_i),
                        nu_minus=const(nu_j),
                        t=const(t / np.linalg.norm(t)),
                    )
                )
    return ClosedSurface(tuple(patches), tuple(edges))


def unit_sphere(R: float = 1.0) -> ClosedSurface:
    return ClosedSurface((sphere(R),), ())


@dataclass(frozen=True)
class VectorHandle:
    """Smooth vector field with analytic gradient, ``grad[..., i, j] = d g_i / d x_j``.

    Both callables broadcast over leading axes of ``x`` (shape ``(..., 3)``).
    """

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]


def polynomial_field(coeffs: dict[tuple[int, int, int], np.ndarray]) -> VectorHandle:
    """Vector field ``sum c_m x^m`` from a map multi-index -> 3-vector."""
    items = [(np.array(m), np.asarray(c, dtype=float)) for m, c in coeffs.items()]

    def value(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for m, c in items:
            out += np.prod(x**m, axis=-1)[..., None] * c
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (3,))
        for m, c in items:
            for k in range(3):
                if m[k] == 0:
                    continue
                mk = m.copy()
                mk[k] -= 1
                out[..., :, k] += (m[k] * np.prod(x**mk, axis=-1))[..., None] * c
        return out

    return VectorHandle(value, grad)


def surface_divergence_of_projection(fr: Frame, g: VectorHandle) -> float:
    """``Div_S(P g)`` from parametric derivatives of ``P g`` at one frame."""
    q = _Quadrature.from_frames([fr], np.ones(1))
    return float(q.divergence(g)[0])


@dataclass(frozen=True)
class _Quadrature:
    """Frames and weights of a patch quadrature, stacked along axis 0."""

    x: np.ndarray
    n: np.ndarray
    xa: np.ndarray
    xb: np.ndarray
    na: np.ndarray
    nb: np.ndarray
    dual_a: np.ndarray
    dual_b: np.ndarray
    w: np.ndarray

    @classmethod
    def from_frames(cls, frames: Sequence[Frame], w: np.ndarray) -> "_Quadrature":
        stack = lambda name: np.array([getattr(f, name) for f in frames])  # noqa: E731
        return cls(*(stack(k) for k in ("x", "n", "xa", "xb", "na", "nb", "dual_a", "dual_b")), np.asarray(w))

    def divergence(self, g: VectorHandle) -> np.ndarray:
        n = self.n
        gv = g.value(self.x)
        Gg = g.grad(self.x)
        ng = np.einsum("pi,pi->p", n, gv)
        out = np.zeros(len(self.w))
        for xal, nal, dual in ((self.xa, self.na, self.dual_a), (self.xb, self.nb, self.dual_b)):
            # d_alpha (P g) = -(n_alpha (x) n + n (x) n_alpha) g + P (grad g) x_alpha
            dPg = -(nal * ng[:, None] + n * np.einsum("pi,pi->p", nal, gv)[:, None])
            Gx = np.einsum("pij,pj->pi", Gg, xal)
            PGx = Gx - n * np.einsum("pi,pi->p", n, Gx)[:, None]
            out += np.einsum("pi,pi->p", dual, dPg + PGx)
        return out


def _nodes(rule: str, order: int, lo: float, hi: float):
    if rule == "periodic":
        x = lo + (hi - lo) * np.arange(order) / order
        return x, np.full(order, (hi - lo) / order)
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


@lru_cache(maxsize=32)
def _patch_quadrature(patch: ParamPatch, order_a: int, order_b: int) -> _Quadrature:
    xa, wa = _nodes(patch.rule[0], order_a, *patch.a_range)
    xb, wb = _nodes(patch.rule[1], order_b, *patch.b_range)
    frames, weights = [], []
    for a, w1 in zip(xa, wa):
        for b, w2 in zip(xb, wb):
            j = patch.jet(a, b)
            frames.append(frame_from_jet(j, patch.orientation))
            weights.append(w1 * w2 * np.linalg.norm(np.cross(j.xa, j.xb)))
    return _Quadrature.from_frames(frames, np.array(weights))


def surplus_divergence_check(surface: ClosedSurface, g: VectorHandle, order: int = 8, periodic_order: int | None = None) -> tuple[float, float, float]:
    """Return ``(lhs, rhs, |lhs - rhs|)`` of the surplus divergence theorem.

    Patches use tensor-product rules of ``order`` points per Gauss axis (or
    ``periodic_order``, default ``2 * order``, per periodic axis); edges use
    ``order``-point Gauss rules.
    """
    lhs = 0.0
    for patch in surface.patches:
        orders = [order if r == "gauss" else (periodic_order or 2 * order) for r in patch.rule]
        q = _patch_quadrature(patch, *orders)
        lhs += float(np.sum(q.w * q.divergence(g)))
    rhs = 0.0
    xs, ws = _nodes("gauss", order, 0.0, 1.0)
    for edge in surface.edges:
        x = np.array([edge.point(s) for s in xs])
        gv = g.value(x)
        nu = np.array([edge.nu_plus(s) for s in xs]), np.array([edge.nu_minus(s) for s in xs])
        speed = np.array([edge.speed(s) for s in xs])
        rhs += float(np.sum(ws * speed * (np.einsum("pi,pi->p", gv, nu[0]) + np.einsum("pi,pi->p", gv, nu[1]))))
    return lhs, rhs, abs(lhs - rhs)
