"""Tests for our_pd_approx.reports module."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from our_pd_approx.reports import (
    dumps_json,
    error_report,
    format_cell,
    schema_name,
    success_report,
    to_jsonable,
    write_csv,
    write_json,
)


class TestSuccessReport:
    """Tests for success_report helper function."""

    def test_basic_success(self) -> None:
        """Should return success=True with a versioned schema."""
        result = success_report("spectrum")
        assert result["success"] is True
        assert result["schema"] == "our-pd-approx/spectrum/v1"

    def test_with_kwargs(self) -> None:
        """Should include additional kwargs."""
        result = success_report("approx", results=[{"N": 2}], count=1)
        assert result["results"][0]["N"] == 2
        assert result["count"] == 1

    def test_schema_name(self) -> None:
        """Should prefix the kind with the project name."""
        assert schema_name("repro") == "our-pd-approx/repro/v1"


class TestErrorReport:
    """Tests for error_report helper function."""

    def test_basic_error(self) -> None:
        """Should return success=False with error message."""
        result = error_report("Something went wrong")
        assert result == {"success": False, "error": "Something went wrong"}

    def test_with_kwargs(self) -> None:
        """Should include additional kwargs."""
        result = error_report("Failed", path="config.Ns[0]")
        assert result["path"] == "config.Ns[0]"


class TestJson:
    """Tests for to_jsonable, dumps_json and write_json."""

    def test_numpy_values(self) -> None:
        """Should convert numpy scalars and arrays."""
        data = to_jsonable({"a": np.float64(0.5), "b": np.int64(3), "c": np.array([1.0, 2.0]), "d": np.bool_(True)})
        assert data == {"a": 0.5, "b": 3, "c": [1.0, 2.0], "d": True}
        assert type(data["b"]) is int

    def test_non_finite_become_null(self) -> None:
        """Should map NaN and infinities to None."""
        assert to_jsonable([math.nan, math.inf, 1.0]) == [None, None, 1.0]

    def test_sorted_and_exact(self) -> None:
        """Should sort keys and keep floats round-trip exact."""
        text = dumps_json({"b": 1 / 3, "a": Path("x")})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text)["b"] == 1 / 3
        assert json.loads(text)["a"] == "x"

    def test_write_json_timestamp(self, tmp_path: Path) -> None:
        """Should add the generation time only when one is given."""
        stamped = write_json(tmp_path / "out" / "a.json", {"x": 1}, timestamp="2026-01-01T00:00:00")
        plain = write_json(tmp_path / "b.json", {"x": 1})
        assert json.loads(stamped.read_text())["generated"] == "2026-01-01T00:00:00"
        assert "generated" not in json.loads(plain.read_text())


class TestCsv:
    """Tests for format_cell and write_csv."""

    def test_format_cell(self) -> None:
        """Should render empty cells, booleans and exact floats."""
        assert format_cell(None) == ""
        assert format_cell(True) == "true"
        assert format_cell(np.bool_(False)) == "false"
        assert format_cell(0.1) == "0.1"
        assert format_cell(math.nan) == ""
        assert format_cell(7) == "7"

    def test_write_csv(self, tmp_path: Path) -> None:
        """Should write an optional generation line, the header and the rows."""
        path = write_csv(tmp_path / "t.csv", ["k", "lambda"], [(1, 1.5), (2, None)], timestamp="ts")
        assert path.read_text().splitlines() == ["# generated: ts", "k,lambda", "1,1.5", "2,"]

    def test_write_csv_without_timestamp(self, tmp_path: Path) -> None:
        """Should start with the header when no timestamp is given."""
        path = write_csv(tmp_path / "t.csv", ["k"], [(1,)])
        assert path.read_text() == "k\n1\n"
