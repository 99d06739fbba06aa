import numpy as np
import pytest

from symrfm import io
from symrfm.rfm import IterationMetrics


def test_matrix_roundtrip(tmp_path):
    M = np.random.default_rng(0).normal(size=(5, 3))
    path = io.save_matrix(tmp_path / "m.mat", M, csv_mirror=True)
    np.testing.assert_array_equal(io.load_matrix(path), M)
    np.testing.assert_array_equal(np.loadtxt(tmp_path / "m.csv", delimiter=","), M)
    raw = path.read_bytes()
    header, payload = raw.split(b"\n", 1)
    assert header == b"SYMRFM-MATRIX/1 rows=5 cols=3 dtype=float64 order=C endian=little"
    assert payload == M.astype("<f8").tobytes()


def test_matrix_corrupt(tmp_path):
    p = tmp_path / "bad.mat"
    p.write_bytes(b"SYMRFM-MATRIX/1 rows=2 cols=2 dtype=float64 order=C endian=little\n" + b"\0" * 8)
    with pytest.raises(ValueError):
        io.load_matrix(p)
    p.write_bytes(b"hello\n")
    with pytest.raises(ValueError):
        io.load_matrix(p)


def test_history_roundtrip(tmp_path):
    hist = [IterationMetrics(t, 1.0, 0.5, 1e-9, 0.1, 0.01) for t in (1, 2)]
    rows = io.load_history(io.save_history(tmp_path / "h.csv", hist))
    assert rows[1]["iteration"] == 2.0 and rows[0]["test_accuracy"] == 0.5


def test_results_append_only(tmp_path):
    path = tmp_path / "r.csv"
    with io.ResultsWriter(path) as w:
        w.append({"experiment": "e", "label": "a", "status": "ok", "test_accuracy": 0.5, "partition": {"x": 1}})
    with io.ResultsWriter(path) as w:
        w.append({"experiment": "e", "label": "a", "status": "ok", "test_accuracy": 1.0})
        w.append({"experiment": "e", "label": "a", "status": "failed", "error": "boom"})
    rows = io.read_results(path)
    assert len(rows) == 3 and rows[0]["partition"] == '{"x": 1}'
    (s,) = io.summarize(rows, tmp_path / "s.csv")
    assert s["runs"] == 3 and s["failed"] == 1
    assert s["test_accuracy_mean"] == 0.75
    assert (s["test_accuracy_min"], s["test_accuracy_max"]) == (0.5, 1.0)
