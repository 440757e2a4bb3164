"""Uniform 1D/2D grids, sampled fields and their differential operators.

Periodic grids use Fourier collocation; bounded grids use second-order central
differences. Bounded fields carry their ghost layers inside ``values``: a field
with ``pad = p`` stores nodes ``-p .. n-1+p`` along every axis. A stencil of
radius ``r`` turns a field with pad ``p`` into one with pad ``p - r``; a
negative pad means the result only covers the interior nodes ``-p .. n-1+p``.

Storage is row-major with ``y`` outermost: a 2D scalar field has shape
``(ny, nx)``, a vector field ``(ny, nx, 2)`` and a tensor field
``(ny, nx, 2, 2)``. Vector component 0 is ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import BoundedWithoutClosure, NumericalFailure

Topology = Literal["periodic", "bounded"]
DifferentialKind = Literal[
    "gradient", "divergence_vec", "divergence_tensor", "laplacian", "bilaplacian", "hessian"
]


@dataclass(frozen=True)
class Grid:
    """A uniform grid with ``n`` nodes and spacing ``h`` per axis.

    ``n``, ``h`` and ``origin`` are ordered by coordinate (``x`` first).
    """

    dim: int
    n: tuple[int, ...]
    h: tuple[float, ...]
    origin: tuple[float, ...] = ()
    topology: Topology = "periodic"

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        h = tuple(float(v) for v in np.atleast_1d(self.h))
        origin = tuple(float(v) for v in self.origin) if self.origin else (0.0,) * self.dim
        if len(n) != self.dim or len(h) != self.dim or len(origin) != self.dim:
            raise ValueError("n, h and origin need one entry per dimension")
        if min(n) < 8:
            raise ValueError("grids need at least 8 points per axis")
        if not all(np.isfinite(v) and v > 0 for v in h):
            raise ValueError("grid spacing must be positive")
        if self.topology not in ("periodic", "bounded"):
            raise ValueError(f"unknown topology {self.topology!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def box(cls, n, length, topology: Topology = "periodic", origin=()) -> "Grid":
        """Grid covering ``[origin, origin + length]`` with ``n`` nodes per axis."""
        n = tuple(int(v) for v in np.atleast_1d(n))
        length = np.broadcast_to(np.atleast_1d(np.asarray(length, dtype=float)), (len(n),))
        cells = [v if topology == "periodic" else v - 1 for v in n]
        h = tuple(float(L / c) for L, c in zip(length, cells))
        return cls(len(n), n, h, tuple(origin), topology)

    @property
    def periodic(self) -> bool:
        return self.topology == "periodic"

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of a scalar field (``y`` outermost)."""
        return tuple(reversed(self.n))

    def padded_shape(self, pad: int) -> tuple[int, ...]:
        return tuple(v + 2 * pad for v in self.shape)

    @property
    def length(self) -> tuple[float, ...]:
        cells = [v if self.periodic else v - 1 for v in self.n]
        return tuple(c * h for c, h in zip(cells, self.h))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def axis_of(self, component: int) -> int:
        """Array axis holding coordinate ``component``."""
        return self.dim - 1 - component

    def coords(self, pad: int = 0) -> np.ndarray:
        """Node coordinates of shape ``padded_shape(pad) + (dim,)``."""
        axes = [self.origin[c] + self.h[c] * np.arange(-pad, self.n[c] + pad) for c in range(self.dim)]
        mesh = np.meshgrid(*reversed(axes), indexing="ij")
        return np.stack(list(reversed(mesh)), axis=-1)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers per coordinate, shaped for the ``rfftn`` layout."""
        return _wavenumbers(self)[0]

    def odd_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers with the Nyquist entry zeroed (used for odd derivatives)."""
        return _wavenumbers(self)[1]

    def k_squared(self) -> np.ndarray:
        return _wavenumbers(self)[2]


@lru_cache(maxsize=64)
def _wavenumbers(grid: Grid):
    full, odd = [], []
    for c in range(grid.dim):
        n, h = grid.n[c], grid.h[c]
        last = c == 0  # x is the last array axis and the rfft axis
        k = 2 * np.pi * (np.fft.rfftfreq(n, h) if last else np.fft.fftfreq(n, h))
        k_odd = k.copy()
        if n % 2 == 0:
            k_odd[-1 if last else n // 2] = 0.0
        shape = [1] * grid.dim
        shape[grid.axis_of(c)] = k.size
        full.append(k.reshape(shape))
        odd.append(k_odd.reshape(shape))
    k2 = sum(k * k for k in full)
    for arr in full + odd + [k2]:
        arr.flags.writeable = False
    return tuple(full), tuple(odd), k2


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"non-finite value in {what}")


@dataclass(frozen=True, eq=False)
class _Field:
    grid: Grid
    values: np.ndarray
    pad: int = 0

    rank = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        d = self.grid.dim
        expected = self.grid.padded_shape(self.pad) + (d,) * self.rank
        if values.shape != expected:
            if values.size == int(np.prod(expected)):
                values = values.reshape(expected)
            else:
                raise ValueError(f"{type(self).__name__} expects shape {expected}, got {values.shape}")
        if self.pad != 0 and self.grid.periodic:
            raise ValueError("periodic fields carry no ghost layers")
        _check_finite(values, type(self).__name__)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def nodes(self) -> np.ndarray:
        """Values on the grid nodes only (ghost layers stripped)."""
        if self.pad < 0:
            raise BoundedWithoutClosure("field covers only interior nodes")
        p = self.pad
        if p == 0:
            return self.values
        index = tuple(slice(p, p + s) for s in self.grid.shape)
        return self.values[index]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


class ScalarField(_Field):
    rank = 0


class VectorField(_Field):
    rank = 1

    def component(self, c: int) -> ScalarField:
        return ScalarField(self.grid, self.values[..., c], self.pad)


class TensorField(_Field):
    """General (not necessarily symmetric) second-order tensor field."""

    rank = 2

    def component(self, i: int, j: int) -> ScalarField:
        return ScalarField(self.grid, self.values[..., i, j], self.pad)


class SymTensorField(TensorField):
    """Symmetric tensor field; ``packed`` gives the ``dim(dim+1)/2`` independent components."""

    def __post_init__(self) -> None:
        super().__post_init__()
        v = self.values
        sym = 0.5 * (v + np.swapaxes(v, -1, -2))
        if not np.array_equal(sym, v):
            if np.max(np.abs(sym - v)) > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
                raise ValueError("SymTensorField values are not symmetric")
            sym.flags.writeable = False
            object.__setattr__(self, "values", sym)

    @property
    def packed(self) -> np.ndarray:
        """Components ordered ``(xx)`` in 1D and ``(xx, yy, xy)`` in 2D."""
        v = self.values
        if self.grid.dim == 1:
            return v[..., 0, :]
        return np.stack([v[..., 0, 0], v[..., 1, 1], v[..., 0, 1]], axis=-1)

    @classmethod
    def from_packed(cls, grid: Grid, packed: np.ndarray, pad: int = 0) -> "SymTensorField":
        packed = np.asarray(packed, dtype=float)
        if grid.dim == 1:
            return cls(grid, packed[..., None], pad)
        full = np.empty(packed.shape[:-1] + (2, 2))
        full[..., 0, 0] = packed[..., 0]
        full[..., 1, 1] = packed[..., 1]
        full[..., 0, 1] = full[..., 1, 0] = packed[..., 2]
        return cls(grid, full, pad)


# ---------------------------------------------------------------------------
# spectral path


def _fwd(grid: Grid, a: np.ndarray) -> np.ndarray:
    return np.fft.rfftn(a, axes=tuple(range(grid.dim)))


def _inv(grid: Grid, a_hat: np.ndarray) -> np.ndarray:
    return np.fft.irfftn(a_hat, s=grid.shape, axes=tuple(range(grid.dim)))


def fourier_multiply(grid: Grid, values: np.ndarray, multiplier) -> np.ndarray:
    """Apply a real-valued or imaginary Fourier multiplier to a scalar array."""
    return _inv(grid, _fwd(grid, values) * multiplier)


def _spectral(kind: str, f: _Field) -> _Field:
    grid = f.grid
    d = grid.dim
    k = grid.wavenumbers()
    ko = grid.odd_wavenumbers()
    v = f.values
    if kind == "gradient":
        _require_rank(f, 0, kind)
        hat = _fwd(grid, v)
        out = np.stack([_inv(grid, 1j * ko[c] * hat) for c in range(d)], axis=-1)
        return VectorField(grid, out)
    if kind == "laplacian":
        _require_rank(f, 0, kind)
        return ScalarField(grid, fourier_multiply(grid, v, -grid.k_squared()))
    if kind == "bilaplacian":
        _require_rank(f, 0, kind)
        return ScalarField(grid, fourier_multiply(grid, v, grid.k_squared() ** 2))
    if kind == "hessian":
        _require_rank(f, 0, kind)
        hat = _fwd(grid, v)
        out = np.empty(grid.shape + (d, d))
        for i in range(d):
            out[..., i, i] = _inv(grid, -(k[i] ** 2) * hat)
            for j in range(i + 1, d):
                out[..., i, j] = out[..., j, i] = _inv(grid, -(ko[i] * ko[j]) * hat)
        return SymTensorField(grid, out)
    if kind == "divergence_vec":
        _require_rank(f, 1, kind)
        hat = sum(1j * ko[c] * _fwd(grid, v[..., c]) for c in range(d))
        return ScalarField(grid, _inv(grid, hat))
    if kind == "divergence_tensor":
        _require_rank(f, 2, kind)
        out = np.empty(grid.shape + (d,))
        for i in range(d):
            hat = sum(1j * ko[j] * _fwd(grid, v[..., i, j]) for j in range(d))
            out[..., i] = _inv(grid, hat)
        return VectorField(grid, out)
    raise ValueError(f"unknown differential kind {kind!r}")


def _require_rank(f: _Field, rank: int, kind: str) -> None:
    if f.rank != rank:
        raise TypeError(f"{kind} expects a rank-{rank} field, got {type(f).__name__}")


# ---------------------------------------------------------------------------
# finite-difference path


def _window(a: np.ndarray, dim: int, r: int, offsets: dict[int, int]) -> np.ndarray:
    """Slice of ``a`` shrunk by ``r`` on every spatial axis and shifted by ``offsets``."""
    index = []
    for axis in range(dim):
        s = offsets.get(axis, 0)
        stop = a.shape[axis] - r + s
        index.append(slice(r + s, stop if stop != 0 else None))
    return a[tuple(index)]


def _fd_first(grid: Grid, a: np.ndarray, c: int) -> np.ndarray:
    ax = grid.axis_of(c)
    return (_window(a, grid.dim, 1, {ax: 1}) - _window(a, grid.dim, 1, {ax: -1})) / (2 * grid.h[c])


def _fd_second(grid: Grid, a: np.ndarray, c: int) -> np.ndarray:
    ax = grid.axis_of(c)
    d = grid.dim
    return (_window(a, d, 1, {ax: 1}) - 2 * _window(a, d, 1, {}) + _window(a, d, 1, {ax: -1})) / grid.h[c] ** 2


def _fd_mixed(grid: Grid, a: np.ndarray) -> np.ndarray:
    d = grid.dim
    ax, ay = grid.axis_of(0), grid.axis_of(1)
    pp = _window(a, d, 1, {ax: 1, ay: 1})
    pm = _window(a, d, 1, {ax: 1, ay: -1})
    mp = _window(a, d, 1, {ax: -1, ay: 1})
    mm = _window(a, d, 1, {ax: -1, ay: -1})
    return (pp - pm - mp + mm) / (4 * grid.h[0] * grid.h[1])


def _fd_laplacian(grid: Grid, a: np.ndarray) -> np.ndarray:
    return sum(_fd_second(grid, a, c) for c in range(grid.dim))


def _finite_difference(kind: str, f: _Field, trim: bool) -> _Field:
    grid = f.grid
    d = grid.dim
    radius = 2 if kind == "bilaplacian" else 1
    if f.pad < radius and not trim:
        raise BoundedWithoutClosure(
            f"{kind} on a bounded grid needs {radius} ghost layer(s), field has {max(f.pad, 0)}"
        )
    if min(f.values.shape[:d]) <= 2 * radius:
        raise BoundedWithoutClosure(f"not enough points left to apply {kind}")
    v = f.values
    pad = f.pad - radius
    if kind == "gradient":
        _require_rank(f, 0, kind)
        return VectorField(grid, np.stack([_fd_first(grid, v, c) for c in range(d)], axis=-1), pad)
    if kind == "laplacian":
        _require_rank(f, 0, kind)
        return ScalarField(grid, _fd_laplacian(grid, v), pad)
    if kind == "bilaplacian":
        _require_rank(f, 0, kind)
        return ScalarField(grid, _fd_laplacian(grid, _fd_laplacian(grid, v)), pad)
    if kind == "hessian":
        _require_rank(f, 0, kind)
        shape = f.values.shape[:d]
        out = np.empty(tuple(s - 2 for s in shape) + (d, d))
        for i in range(d):
            out[..., i, i] = _fd_second(grid, v, i)
        if d == 2:
            out[..., 0, 1] = out[..., 1, 0] = _fd_mixed(grid, v)
        return SymTensorField(grid, out, pad)
    if kind == "divergence_vec":
        _require_rank(f, 1, kind)
        return ScalarField(grid, sum(_fd_first(grid, v[..., c], c) for c in range(d)), pad)
    if kind == "divergence_tensor":
        _require_rank(f, 2, kind)
        out = np.stack(
            [sum(_fd_first(grid, v[..., i, j], j) for j in range(d)) for i in range(d)], axis=-1
        )
        return VectorField(grid, out, pad)
    raise ValueError(f"unknown differential kind {kind!r}")


def apply_differential(kind: DifferentialKind, field: _Field, *, trim: bool = False) -> _Field:
    """Apply ``kind`` to ``field``.

    On bounded grids the field must carry enough ghost layers for the stencil
    unless ``trim`` is set, in which case the result simply covers fewer nodes.
    """
    if field.grid.periodic:
        out = _spectral(kind, field)
    else:
        out = _finite_difference(kind, field, trim)
    return out


def gradient(f: ScalarField, **kw) -> VectorField:
    return apply_differential("gradient", f, **kw)


def laplacian(f: ScalarField, **kw) -> ScalarField:
    return apply_differential("laplacian", f, **kw)


def bilaplacian(f: ScalarField, **kw) -> ScalarField:
    return apply_differential("bilaplacian", f, **kw)


def hessian(f: ScalarField, **kw) -> SymTensorField:
    return apply_differential("hessian", f, **kw)


def divergence(f: _Field, **kw) -> _Field:
    kind = "divergence_vec" if f.rank == 1 else "divergence_tensor"
    return apply_differential(kind, f, **kw)


def crop(f: _Field, pad: int) -> _Field:
    """Return ``f`` restricted to a smaller pad (more negative means fewer nodes)."""
    if pad > f.pad:
        raise ValueError("cannot grow a field by cropping")
    if pad == f.pad:
        return f
    r = f.pad - pad
    values = _window(f.values, f.grid.dim, r, {})
    return type(f)(f.grid, values, pad)


def sh_linear_apply(phi: ScalarField, ell: float, *, trim: bool = False) -> ScalarField:
    """``(1 + ell**2 Delta)**2 phi``; a Fourier multiplier on periodic grids."""
    grid = phi.grid
    ell2 = float(ell) ** 2
    if grid.periodic:
        return ScalarField(grid, fourier_multiply(grid, phi.values, (1.0 - ell2 * grid.k_squared()) ** 2))
    lap = laplacian(phi, trim=trim)
    bilap = laplacian(lap, trim=True)
    p = bilap.pad
    return ScalarField(grid, crop(phi, p).values + 2 * ell2 * crop(lap, p).values + ell2 * ell2 * bilap.values, p)


def integrate(field: ScalarField) -> float:
    """Rectangle rule on periodic grids, trapezoidal rule on bounded ones."""
    grid = field.grid
    v = field.nodes
    if grid.periodic:
        return float(np.sum(v) * grid.cell_volume)
    w = np.ones(grid.shape)
    for c in range(grid.dim):
        ax = grid.axis_of(c)
        edge = [slice(None)] * grid.dim
        edge[ax] = 0
        w[tuple(edge)] *= 0.5
        edge[ax] = -1
        w[tuple(edge)] *= 0.5
    return float(np.sum(w * v) * grid.cell_volume)
