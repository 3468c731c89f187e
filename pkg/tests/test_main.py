"""Tests for the command-line front end."""

import csv
import io
import json
from pathlib import Path

import pytest
from rich.console import Console

from app.main import run_command
from app.selftest import CheckResult


def run_json(capsys: pytest.CaptureFixture[str], *argv: str) -> tuple[int, dict]:
    code = run_command(list(argv))
    return code, json.loads(capsys.readouterr().out)


class TestGenSchemeVerify:
    def test_full_flow(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        instance = tmp_path / "instance.json"
        scheme = tmp_path / "scheme.json"

        assert run_command(["gen", "--k", "4", "--l", "8", "--seed", "7", "--out", str(instance)]) == 0
        assert run_command(["scheme", "orthogonal", str(instance), "--out", str(scheme)]) == 0
        code, report = run_json(capsys, "verify", str(instance), str(scheme))

        assert code == 0
        assert report["feasible"] is True
        assert report["dof"] == "1"
        assert report["eps"] == "1/2"
        assert report["seed"] == 7

    def test_generic_flag(self, capsys: pytest.CaptureFixture[str]) -> None:
        code, instance = run_json(capsys, "gen", "--k", "3", "--l", "3", "--generic")

        assert code == 0
        assert instance["k"] == 3

    def test_chain_scheme(
        self, tmp_path: Path, patterns_dir: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        instance = tmp_path / "k3.json"
        run_command(["gen", "--k", "3", "--l", "3", "--out", str(instance)])

        code, document = run_json(
            capsys, "scheme", "chain", str(instance), "--pattern", str(patterns_dir / "cj-k3-l3.yaml")
        )

        assert code == 0
        assert document["dims"] == [2, 1, 1]

    def test_infeasible_scheme(
        self, tmp_path: Path, instance_file: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        scheme = tmp_path / "collided.json"
        scheme.write_text(
            json.dumps({"k": 4, "dims": [1] * 4, "bases": [[["1", "0", "0", "0"]]] * 4})
        )

        code, report = run_json(capsys, "verify", str(instance_file), str(scheme))

        assert code == 3
        assert report["feasible"] is False

    def test_orthogonal_without_shape(self) -> None:
        assert run_command(["scheme", "orthogonal"]) == 2

    def test_chain_without_pattern(self, instance_file: Path) -> None:
        assert run_command(["scheme", "chain", str(instance_file)]) == 2


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv, expected",
        [
            (["gen", "--k", "2", "--l", "4"], 2),
            (["gen", "--k", "3", "--l", "65"], 4),
            (["bounds", "--k", "4", "--l", "4", "--eps", "one-half"], 2),
            (["bounds", "--k", "4", "--l", "4", "--eps", "0"], 2),
            (["frobnicate"], 2),
            ([], 2),
            (["--help"], 0),
        ],
    )
    def test_argument_errors(self, argv: list[str], expected: int) -> None:
        assert run_command(argv) == expected

    def test_missing_file(self, tmp_path: Path, scheme_file: Path) -> None:
        assert run_command(["verify", str(tmp_path / "missing.json"), str(scheme_file)]) == 2

    def test_malformed_json(
        self, tmp_path: Path, scheme_file: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        instance = tmp_path / "instance.json"
        instance.write_text('{"k": 3')

        assert run_command(["verify", str(instance), str(scheme_file)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_mismatched_documents(self, tmp_path: Path, scheme_file: Path) -> None:
        instance = tmp_path / "k3.json"
        run_command(["gen", "--k", "3", "--l", "4", "--out", str(instance)])

        assert run_command(["verify", str(instance), str(scheme_file)]) == 2

    def test_verbose_sets_debug(self, mocker, capsys: pytest.CaptureFixture[str]) -> None:
        set_level = mocker.patch("app.main.set_level")

        assert run_command(["--verbose", "bounds", "--k", "3", "--l", "1", "--json"]) == 0

        set_level.assert_called_once_with("DEBUG")


class TestBounds:
    def test_json_table(self, capsys: pytest.CaptureFixture[str]) -> None:
        code, table = run_json(capsys, "bounds", "--k", "3", "--l", "1", "--json")

        assert code == 0
        assert table["bresler_eq1"]["exact"] == "1"
        assert table["thm1"] is None

    def test_rich_table(self, mocker) -> None:
        console = mocker.patch("app.main.console", Console(record=True, width=1000))

        assert run_command(["bounds", "--k", "4", "--l", "4", "--eps", "1/2"]) == 0

        out = console.export_text()
        assert "21/11" in out
        assert "thm6_l_min" in out
        assert "m = 2, N = 5, C = 1" in out

    def test_checks_scheme(self, instance_file: Path, scheme_file: Path) -> None:
        argv = ["bounds", "--k", "4", "--l", "4", "--instance", str(instance_file)]

        assert run_command([*argv, "--scheme", str(scheme_file)]) == 0


class TestAnalyze:
    @pytest.mark.parametrize("what", ["widths", "sparsity"])
    def test_orthogonal_passes(
        self, what: str, instance_file: Path, scheme_file: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        assert run_command(["analyze", what, str(instance_file), str(scheme_file)]) == 0
        assert "requirement" in capsys.readouterr().out

    def test_witness_needs_matching_dimension(self, instance_file: Path, scheme_file: Path) -> None:
        """Test dim V_2 = 1 against (1 − ε)L/2 = 1 at ε = 1/2 on an orthogonal scheme."""
        argv = ["analyze", "witness", str(instance_file), str(scheme_file), "--user", "2"]

        assert run_command(argv) == 0

    def test_witness_rejects_three_users(self, tmp_path: Path, patterns_dir: Path) -> None:
        instance = tmp_path / "k3.json"
        scheme = tmp_path / "cj.json"
        run_command(["gen", "--k", "3", "--l", "3", "--out", str(instance)])
        pattern = str(patterns_dir / "cj-k3-l3.yaml")
        run_command(["scheme", "chain", str(instance), "--pattern", pattern, "--out", str(scheme)])

        assert run_command(["analyze", "witness", str(instance), str(scheme)]) == 2


class TestWalkSearchSweep:
    def test_walk(
        self, instance_file: Path, scheme_file: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        code, result = run_json(capsys, "walk", str(instance_file), str(scheme_file), "--a", "1")

        assert code == 0
        assert result["n_tilde"] == 1
        assert result["case_tag"] == "full_extension"

    def test_walk_rejects_low_threshold(self, instance_file: Path, scheme_file: Path) -> None:
        assert run_command(["walk", str(instance_file), str(scheme_file), "--a", "0"]) == 2

    def test_search_prints_result(
        self, instance_file: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        code, result = run_json(capsys, "search", str(instance_file), "--d", "1", "--restarts", "20")

        assert code == 0
        assert result["scheme"] is not None
        assert result["stats"]["trials"] >= 1

    def test_search_writes_scheme(self, tmp_path: Path, instance_file: Path) -> None:
        out = tmp_path / "found.json"

        assert run_command(["search", str(instance_file), "--d", "1", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["dims"] == [1, 1, 1, 1]

    def test_sweep_to_file(self, tmp_path: Path) -> None:
        config = tmp_path / "sweep.yaml"
        config.write_text("grids:\n  - {k: [4], l: [4], seeds: [0, 1]}\n")
        out = tmp_path / "sweep.csv"

        assert run_command(["sweep", "--config", str(config), "--out", str(out)]) == 0

        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert [row["seed"] for row in rows] == ["0", "1"]
        assert all(row["consistent"] == "true" for row in rows)

    def test_sweep_bad_config(self, tmp_path: Path) -> None:
        config = tmp_path / "sweep.yaml"
        config.write_text("grids:\n  - {k: [3], l: [3], seeds: [0], scheme_kinds: [greedy]}\n")

        assert run_command(["sweep", "--config", str(config)]) == 2


class TestSelftest:
    def test_failure_exits_three(self, mocker) -> None:
        failing = CheckResult(name="operator identity", cases=4, failures=1)
        mocker.patch("app.main.run_selftest", return_value=[failing])

        assert run_command(["selftest", "--quick"]) == 3

    def test_success(self, mocker) -> None:
        run = mocker.patch(
            "app.main.run_selftest", return_value=[CheckResult(name="closed forms", cases=8, failures=0)]
        )

        assert run_command(["selftest"]) == 0
        run.assert_called_once_with(quick=False)
