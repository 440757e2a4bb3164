import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pfgt.diagnostics import DiagnosticRow, DiagnosticsSeries
from pfgt.errors import FormatError
from pfgt.evolution import SimState
from pfgt.fields import Grid, ScalarField
from pfgt.io import CsvWriter, pgm_pixels, read_csv, read_snapshot, write_csv, write_pgm, write_snapshot

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(values=arrays(np.float64, (9, 8), elements=finite), time=finite)
def test_snapshot_round_trip_is_bitwise(tmp_path_factory, values, time):
    path = tmp_path_factory.mktemp("snap") / "a.pfgt"
    g = Grid(2, (8, 9), (0.1, 1.0 / 3.0))
    write_snapshot(SimState(ScalarField(g, values), time), path)
    back = read_snapshot(path)
    assert back.phi.values.tobytes() == values.tobytes()
    assert back.time == time or (time == 0 and back.time == 0)
    assert back.phi.grid == g


def test_1d_snapshot_layout(tmp_path):
    g = Grid.box(8, 1.0)
    path = tmp_path / "z.pfgt"
    write_snapshot(SimState(ScalarField(g, np.zeros(8)), 0.1), path)
    data = path.read_bytes()
    header = data[: data.index(b"\n") + 1]
    assert header == b"PFGT1 1 8 1 0.125 0 0.10000000000000001\n"
    assert os.path.getsize(path) == len(header) + 64


def test_payload_is_little_endian_y_outer(tmp_path):
    g = Grid.box((8, 8), (1.0, 1.0))
    v = np.arange(64, dtype=float).reshape(8, 8)
    path = tmp_path / "o.pfgt"
    write_snapshot(SimState(ScalarField(g, v), 0.0), path)
    payload = path.read_bytes().split(b"\n", 1)[1]
    assert np.array_equal(np.frombuffer(payload, "<f8"), np.arange(64.0))


@pytest.mark.parametrize(
    "blob",
    [b"PFGT2 1 8 1 0.1 0 0\n" + bytes(64), b"PFGT1 1 8 1 0.1 0 0\n" + bytes(63), b"no newline", b"PFGT1 1 8 2 0.1 0 0\n" + bytes(128)],
)
def test_malformed_snapshots_raise(tmp_path, blob):
    path = tmp_path / "bad.pfgt"
    path.write_bytes(blob)
    with pytest.raises(FormatError):
        read_snapshot(path)


def test_empty_series_gives_header_only_csv(tmp_path):
    path = tmp_path / "e.csv"
    write_csv(DiagnosticsSeries(), path)
    assert path.read_text() == "t,energy,mass,min_phi,max_phi,dissipation\n"


def test_csv_round_trip_is_exact(tmp_path):
    s = DiagnosticsSeries()
    s.append(DiagnosticRow(0.0, 1 / 3, -2.5e-17, -0.1, 0.7, -1e300))
    s.append(DiagnosticRow(0.1, np.pi, 1.0, 2.0, 3.0, 0.0))
    path = tmp_path / "s.csv"
    write_csv(s, path)
    assert read_csv(path).rows == s.rows


def test_streaming_writer_matches_batch_writer(tmp_path):
    rows = [DiagnosticRow(float(i), i / 7, 1.0, 0.0, 1.0, -0.5) for i in range(4)]
    s = DiagnosticsSeries(list(rows))
    write_csv(s, tmp_path / "a.csv")
    with CsvWriter(tmp_path / "b.csv") as w:
        for r in rows[:2]:
            w(r)
        # rows are on disk before the writer is closed
        assert len((tmp_path / "b.csv").read_text().splitlines()) == 3
        for r in rows[2:]:
            w(r)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_pgm_constant_and_two_level_fields(tmp_path):
    assert np.all(pgm_pixels(np.full((3, 4), 2.5)) == 128)
    px = pgm_pixels(np.array([[1.0, 3.0], [3.0, 1.0]]))
    assert px.tolist() == [[0, 255], [255, 0]]
    g = Grid.box((8, 9), (1.0, 1.0))
    path = tmp_path / "p.pgm"
    write_pgm(ScalarField(g, np.zeros((9, 8))), path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n8 9\n255\n") and data[-72:] == bytes([128]) * 72


@given(values=arrays(np.float64, (5, 6), elements=st.floats(-1e6, 1e6)))
def test_pgm_map_is_monotone_and_hits_both_ends(values):
    px = pgm_pixels(values)
    if values.max() > values.min():
        assert px[values == values.min()].min() == 0 and px[values == values.max()].max() == 255
        order = np.argsort(values, axis=None)
        assert np.all(np.diff(px.ravel()[order].astype(int)) >= 0)
