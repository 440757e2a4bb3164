"""Bit-exact writers: PFGT1 snapshots, diagnostics CSV and binary PGM images.

Snapshot layout::

    PFGT1 <dim> <nx> <ny> <hx> <hy> <time>\\n
    nx * ny little-endian float64 values, y outermost

``ny = 1`` and ``hy = 0`` in 1D. Decimals are written with 17 significant
digits so that parsing them back reproduces the doubles exactly.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .diagnostics import COLUMNS, DiagnosticsSeries
from .errors import FormatError
from .evolution import SimState
from .fields import Grid, ScalarField, Topology

MAGIC = "PFGT1"


def _g17(v: float) -> str:
    return "%.17g" % v


def snapshot_header(phi: ScalarField, time: float) -> bytes:
    grid = phi.grid
    nx = grid.n[0]
    ny = grid.n[1] if grid.dim == 2 else 1
    hx = grid.h[0]
    hy = grid.h[1] if grid.dim == 2 else 0.0
    return f"{MAGIC} {grid.dim} {nx} {ny} {_g17(hx)} {_g17(hy)} {_g17(time)}\n".encode("ascii")


def write_snapshot(state: SimState, path: str | os.PathLike) -> None:
    phi = state.phi
    payload = np.ascontiguousarray(phi.nodes, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(snapshot_header(phi, state.time))
        fh.write(payload)


def read_snapshot(path: str | os.PathLike, topology: Topology = "periodic") -> SimState:
    """Inverse of :func:`write_snapshot`; the grid topology is not stored in the file."""
    data = Path(path).read_bytes()
    end = data.find(b"\n")
    if end < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        fields = data[:end].decode("ascii").split(" ")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: header is not ASCII") from exc
    if len(fields) != 7 or fields[0] != MAGIC:
        raise FormatError(f"{path}: bad magic or header layout")
    try:
        dim, nx, ny = (int(v) for v in fields[1:4])
        hx, hy, time = (float(v) for v in fields[4:7])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed header value") from exc
    if dim not in (1, 2) or (dim == 1 and (ny != 1 or hy != 0.0)):
        raise FormatError(f"{path}: inconsistent dimension {dim} with ny={ny}, hy={hy}")
    payload = data[end + 1 :]
    if len(payload) != 8 * nx * ny:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, expected {8 * nx * ny}")
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    if dim == 1:
        grid = Grid(1, (nx,), (hx,), topology=topology)
        values = values.reshape(nx)
    else:
        grid = Grid(2, (nx, ny), (hx, hy), topology=topology)
        values = values.reshape(ny, nx)
    return SimState(ScalarField(grid, values), time)


def write_csv(series: DiagnosticsSeries, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in series:
            fh.write(",".join(_g17(v) for v in row) + "\n")


class CsvWriter:
    """Streaming CSV of diagnostic rows, flushed after every row."""

    def __init__(self, path: str | os.PathLike):
        self.path = path
        self._fh = open(path, "w", encoding="ascii", newline="\n")
        self._fh.write(",".join(COLUMNS) + "\n")
        self._fh.flush()

    def __call__(self, row) -> None:
        self._fh.write(",".join(_g17(v) for v in row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "CsvWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_csv(path: str | os.PathLike) -> DiagnosticsSeries:
    from .diagnostics import DiagnosticRow

    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != ",".join(COLUMNS):
        raise FormatError(f"{path}: unexpected CSV header")
    series = DiagnosticsSeries()
    for line in lines[1:]:
        series.append(DiagnosticRow(*(float(v) for v in line.split(","))))
    return series


def pgm_pixels(values: np.ndarray) -> np.ndarray:
    """Linear map of ``[min, max]`` onto ``0..255``; constant input maps to 128."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.full(v.shape, 128, dtype=np.uint8)
    return np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(phi: ScalarField, path: str | os.PathLike) -> None:
    """Binary ``P5`` image, one row per ``y`` node in storage order."""
    pixels = np.atleast_2d(pgm_pixels(phi.nodes))
    ny, nx = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
