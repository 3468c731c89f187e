"""Tests for parameter sweeps and their CSV output."""

import csv
import io
from pathlib import Path

import pytest
from pytest_mock import MockerFixture

from app import sweep as sweep_module
from app.config import config
from app.errors import DegenerateInstanceError, InputError
from app.sweep import (
    CSV_COLUMNS,
    SweepConfig,
    SweepGrid,
    evaluate_point,
    load_sweep_config,
    run_sweep,
    write_csv,
)
from tests.conftest import REPO_ROOT


def read_csv(rows) -> list[dict[str, str]]:
    stream = io.StringIO()
    write_csv(rows, stream)
    stream.seek(0)
    return list(csv.DictReader(stream))


def write_sweep(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


@pytest.fixture
def orthogonal_sweep() -> SweepConfig:
    return SweepConfig(grids=[SweepGrid(k=[4], l=[4, 8], seeds=[0, 1])])


class TestSweepConfig:
    def test_default_sweep_size(self) -> None:
        sweep = load_sweep_config(REPO_ROOT / "sweeps" / "default.yaml")

        assert len(list(sweep.points())) == 161

    def test_points_in_grid_then_seed_order(self, orthogonal_sweep: SweepConfig) -> None:
        points = [(p.l, p.seed) for p in orthogonal_sweep.points()]

        assert points == [(4, 0), (4, 1), (8, 0), (8, 1)]

    def test_chain_path_relative_to_file(self, tmp_path: Path) -> None:
        path = write_sweep(
            tmp_path / "sweep.yaml",
            "grids:\n  - {k: [3], l: [3], seeds: [0], scheme_kinds: ['chain:p/cj.yaml']}\n",
        )

        (point,) = load_sweep_config(path).points()

        assert point.pattern_path == tmp_path / "p" / "cj.yaml"
        assert point.bits == config.DEFAULT_BITS

    @pytest.mark.parametrize(
        "text",
        [
            "grids:\n  - {k: [3], l: [3], seeds: [0], scheme_kinds: [greedy]}\n",
            "grids:\n  - {k: [3], l: [3], seeds: [0], scheme_kinds: ['chain:']}\n",
            "grids:\n  - {k: [3], l: [65], seeds: [0]}\n",
            "grids:\n  - {k: [3], l: [0], seeds: [0]}\n",
            "restarts: 0\n",
            "grids: [",
        ],
    )
    def test_invalid_config(self, tmp_path: Path, text: str) -> None:
        with pytest.raises(InputError):
            load_sweep_config(write_sweep(tmp_path / "sweep.yaml", text))

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(InputError):
            load_sweep_config(tmp_path / "missing.yaml")


class TestRunSweep:
    def test_empty_sweep_writes_header(self) -> None:
        stream = io.StringIO()

        write_csv(run_sweep(SweepConfig()), stream)

        assert stream.getvalue() == ",".join(CSV_COLUMNS) + "\n"

    def test_orthogonal_rows(self, orthogonal_sweep: SweepConfig) -> None:
        rows = read_csv(run_sweep(orthogonal_sweep))

        assert len(rows) == 4
        assert [row["d"] for row in rows] == ["1", "1", "2", "2"]
        for row in rows:
            assert row["feasible"] == "true"
            assert row["dof"] == "1"
            assert row["eps"] == "1/2"
            assert row["max_width"] == "0"
            assert row["consistent"] == "true"
            assert row["error"] == ""
        assert rows[0]["bound_thm1"] == "21/11"

    def test_deterministic(self, orthogonal_sweep: SweepConfig) -> None:
        assert run_sweep(orthogonal_sweep) == run_sweep(orthogonal_sweep)

    @pytest.mark.slow
    def test_parallel_matches_sequential(self, orthogonal_sweep: SweepConfig) -> None:
        parallel = orthogonal_sweep.model_copy(update={"parallel": 2})

        assert run_sweep(parallel) == run_sweep(orthogonal_sweep)

    def test_capacity_error_fills_error_column(
        self, orthogonal_sweep: SweepConfig, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setattr(config, "SPARSITY_CAP", 2)

        rows = read_csv(run_sweep(orthogonal_sweep))

        assert len(rows) == 4
        for row in rows:
            assert row["feasible"] == "true"
            assert row["consistent"] == ""
            assert "cap" in row["error"]

    def test_chain_point(self, tmp_path: Path, patterns_dir: Path) -> None:
        (tmp_path / "p").mkdir()
        (tmp_path / "p" / "cj.yaml").write_text((patterns_dir / "cj-k3-l3.yaml").read_text())
        path = write_sweep(
            tmp_path / "sweep.yaml",
            "grids:\n  - {k: [3], l: [3], seeds: [0], scheme_kinds: ['chain:p/cj.yaml']}\n",
        )

        (row,) = run_sweep(load_sweep_config(path))

        assert row.feasible
        assert str(row.dof) == "4/3"
        assert row.d is None
        assert row.bound_eq1 == "4/3"
        assert row.consistent

    def test_unsuccessful_search_is_consistent(self) -> None:
        sweep = SweepConfig(
            grids=[SweepGrid(k=[3], l=[1], seeds=[0], scheme_kinds=["search"])], restarts=2
        )

        (row,) = run_sweep(sweep)

        assert row.feasible is False
        assert row.consistent is True
        assert row.d == 1
        assert row.dof is None

    def test_missing_pattern_is_a_row_error(self, tmp_path: Path) -> None:
        sweep = SweepConfig(
            grids=[SweepGrid(k=[3], l=[3], seeds=[0, 1], scheme_kinds=["chain:missing.yaml"])],
            base_dir=tmp_path,
        )

        rows = run_sweep(sweep)

        assert len(rows) == 2
        assert all("missing.yaml" in row.error for row in rows)
        assert all(row.feasible is None for row in rows)

    def test_evaluate_point_keeps_parameters(self, orthogonal_sweep: SweepConfig) -> None:
        point = next(orthogonal_sweep.points())

        row = evaluate_point(point)

        assert (row.k, row.l, row.t, row.seed, row.scheme_kind) == (4, 4, 1, 0, "orthogonal")

    def test_points_sample_generic_instances(
        self, orthogonal_sweep: SweepConfig, mocker: MockerFixture
    ) -> None:
        spy = mocker.spy(sweep_module, "sample_generic_instance")
        point = next(orthogonal_sweep.points())

        evaluate_point(point)

        spy.assert_called_once_with(4, 4, 1, point.bits, 0)

    def test_degenerate_instance_is_a_row_error(
        self, orthogonal_sweep: SweepConfig, mocker: MockerFixture
    ) -> None:
        mocker.patch(
            "app.sweep.sample_generic_instance",
            side_effect=DegenerateInstanceError("no generic instance within 8 resamples", seed=0),
        )

        row = evaluate_point(next(orthogonal_sweep.points()))

        assert "no generic instance" in row.error
        assert row.feasible is None
