import json

import numpy as np

from nlslab.grid import Grid, GridField
from nlslab.io import (
    canonical_json,
    write_csv,
    write_field_csv,
    write_jsonl,
    write_measure_csv,
)
from nlslab.measures import LevySpec, sample
from nlslab.rng import replica_rng


class TestCanonicalJson:
    def test_sorted_compact(self):
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'

    def test_numpy_scalars_unwrapped(self):
        out = canonical_json({"x": np.float64(0.5), "n": np.int64(3)})
        assert json.loads(out) == {"x": 0.5, "n": 3}

    def test_non_finite_becomes_null(self):
        out = canonical_json({"x": float("inf"), "y": float("nan"), "z": [np.nan]})
        assert json.loads(out) == {"x": None, "y": None, "z": [None]}

    def test_float_repr_roundtrip(self):
        value = 0.1 + 0.2
        assert json.loads(canonical_json({"v": value}))["v"] == value


class TestWriters:
    def test_jsonl_deterministic(self, tmp_path):
        records = [{"b": 1.5, "a": [1, 2]}, {"a": None, "b": 0.25}]
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_jsonl(records, p1)
        write_jsonl(records, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert len(p1.read_text().splitlines()) == 2

    def test_csv_column_order_and_blanks(self, tmp_path):
        rows = [{"x": 1, "y": None}, {"y": 2.5, "x": 0}]
        path = tmp_path / "t.csv"
        write_csv(rows, path, ["x", "y"])
        lines = path.read_text().splitlines()
        assert lines == ["x,y", "1,", "0,2.5"]

    def test_measure_csv_header(self, tmp_path):
        grid = Grid(16.0, 256)
        measure = sample(LevySpec.poisson(), 0.5, grid, replica_rng(1, "io"))
        path = tmp_path / "m.csv"
        write_measure_csv(measure, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# c=0.0 epsilon=0.5 L=16.0")
        assert lines[1] == "position,weight"
        assert len(lines) == 2 + len(measure.atom_positions)

    def test_field_csv(self, tmp_path):
        grid = Grid(16.0, 64)
        field = GridField(grid, (1 + 2j) * np.ones(grid.size))
        path = tmp_path / "f.csv"
        write_field_csv(field, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,Re,Im"
        assert lines[1].endswith(",1.0,2.0")
