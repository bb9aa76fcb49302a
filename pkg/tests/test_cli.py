import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from main import cli
from src.console import reset_logging

SMALL_RUN = {
    "jobs": 1,
    "engine": {"sweeps_per_microsecond": 10, "reads_per_batch": 5, "gauges": 1},
    "grid": {"chain_strength": {"min": 3.0, "max": 3.0, "step": 1.0}, "ga_iterations": [5], "ga_restarts": 3},
}


@pytest.fixture
def runner():
    runner = CliRunner()
    with runner.isolated_filesystem():
        Path("config.yaml").write_text(yaml.safe_dump(SMALL_RUN))
        yield runner
        reset_logging()


def _generate(runner, *extra):
    return runner.invoke(cli, ["generate", "--sizes", "6", "--count", "2", "--seed", "1", *extra])


def test_generate_is_byte_reproducible(runner):
    assert _generate(runner).exit_code == 0
    first = Path("registry/manifest.json").read_bytes()
    assert _generate(runner).exit_code == 0
    assert Path("registry/manifest.json").read_bytes() == first
    assert Path("registry/N06-001.json").exists()
    assert Path("registry/run_config.yaml").exists()


def test_generate_writes_the_ensemble_summary(runner):
    result = _generate(runner)
    assert "N=6: greedy solved" in result.output
    lines = Path("registry/ensemble_summary.csv").read_text().splitlines()
    assert lines[0].startswith("n,instances,greedy_solved,greedy_solve_rate")
    assert lines[1].startswith("6,2,")


def test_oversized_problem_exits_with_validation_status(runner):
    result = runner.invoke(cli, ["generate", "--sizes", "70", "--count", "1"])
    assert result.exit_code == 2
    assert "error code=validation type=TooLarge" in result.output


def test_invalid_correlation_exits_with_validation_status(runner):
    result = runner.invoke(cli, ["generate", "--sizes", "6", "--count", "1", "--rho", "1.2"])
    assert result.exit_code == 2


def test_report_on_empty_directory(runner):
    Path("empty").mkdir()
    result = runner.invoke(cli, ["report", "--input", "empty", "--output", "out"])
    assert result.exit_code == 0
    assert len(Path("out/results.csv").read_text().strip().splitlines()) == 1


def test_solve_exact(runner):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "exact", "--results", "out"])
    assert result.exit_code == 0, result.output
    data = json.loads(Path("out/N06-000.exact.json").read_text())
    manifest = json.loads(Path("registry/manifest.json").read_text())
    assert data["value"] == manifest["instances"][0]["best_known"]
    assert len(data["bitstring"]) == 6


def test_solve_reverse_writes_reads(runner):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-001", "--solver", "reverse", "--results", "out"])
    assert result.exit_code == 0, result.output
    assert Path("out/N06-001.reverse.reads.csv").exists()


def test_bad_seed_state(runner):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "reverse", "--seed-state", "01x"])
    assert result.exit_code == 2


def test_unknown_instance_is_a_validation_error(runner):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-009", "--solver", "greedy"])
    assert result.exit_code == 2


def test_embed_with_defects(runner):
    Path("defects.txt").write_text("# broken qubits\n0, 1\n2\n")
    result = runner.invoke(cli, ["embed", "--size", "8", "--defects", "defects.txt", "--output", "emb.json"])
    assert result.exit_code == 0, result.output
    data = json.loads(Path("emb.json").read_text())
    assert data["chain_length"] == 3
    assert data["defects"] == [0, 1, 2]
    assert not {0, 1, 2} & {q for chain in data["chains"] for q in chain}


def test_sweep_then_report(runner):
    _generate(runner)
    result = runner.invoke(cli, ["sweep", "--protocol", "forward", "--sizes", "6", "--results", "res"])
    assert result.exit_code == 0, result.output
    for name in ("results.csv", "points.csv", "summary.json", "bench_report.json", "run_config.yaml"):
        assert Path("res", name).exists()
    summary = json.loads(Path("res/summary.json").read_text())
    assert summary["solver"] == "forward_annealing"
    assert summary["sizes"][0]["n_instances"] == 2

    result = runner.invoke(cli, ["report", "--input", "res", "--output", "again"])
    assert result.exit_code == 0
    assert Path("again/results.csv").read_bytes() == Path("res/results.csv").read_bytes()


def test_ga_sweep_reports_modeled_call_time(runner):
    _generate(runner)
    result = runner.invoke(cli, ["sweep", "--protocol", "ga", "--sizes", "6", "--results", "res"])
    assert result.exit_code == 0, result.output
    assert "GA SWEEP" in result.output
    summary = json.loads(Path("res/summary.json").read_text())
    assert summary["solver"] == "ga"
    header = Path("res/points.csv").read_text().splitlines()[0]
    assert "ga_iterations" in header.split(",")


def test_view_table(runner):
    _generate(runner)
    runner.invoke(cli, ["sweep", "--protocol", "forward", "--sizes", "6", "--results", "res"])
    result = runner.invoke(cli, ["view-table", "res"])
    assert result.exit_code == 0
    assert "TIME-TO-SOLUTION BY PROBLEM SIZE" in result.output


def test_reverse_grid_preset_needs_reverse_ranges(runner):
    _generate(runner)
    result = runner.invoke(cli, ["sweep", "--grid", "table2:24", "--protocol", "reverse", "--sizes", "6"])
    assert result.exit_code == 2


def test_init_keeps_an_existing_config(runner):
    before = Path("config.yaml").read_text()
    result = runner.invoke(cli, ["init"])
    assert result.exit_code == 0
    assert Path("registry").is_dir() and Path("results").is_dir()
    assert Path("config.yaml").read_text() == before
    assert "PQA_CONFIG" in Path(".env").read_text()


def test_reverse_without_seed_state_logs_greedy_seeding(runner, caplog):
    _generate(runner)
    with caplog.at_level("INFO"):
        result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "reverse", "--results", "out"])
    assert result.exit_code == 0, result.output
    assert "seeding reverse anneal with the greedy solution" in caplog.text


def test_ga_stops_at_target(runner):
    _generate(runner)
    best = json.loads(Path("registry/manifest.json").read_text())["instances"][0]["best_known"]
    result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "ga", "--target", str(best),
                                 "--results", "out"])
    assert result.exit_code == 0, result.output
    data = json.loads(Path("out/N06-000.ga.json").read_text())
    assert data["value"] == best
    assert data["extra"]["iterations"] < 10_000


@pytest.mark.parametrize("m", [0, 6])
def test_solve_at_the_cardinality_extremes(runner, m):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "exact", "--cardinality", str(m),
                                 "--results", "out"])
    assert result.exit_code == 0, result.output
    data = json.loads(Path("out/N06-000.exact.json").read_text())
    assert data["cardinality"] == m
    assert data["bitstring"].count("1") == m
    assert data["extra"]["target_cardinality"] == m
    assert not data["extra"]["cardinality_not_attained"]


def test_solve_with_a_mid_cardinality_reports_whether_it_was_held(runner):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "greedy", "--cardinality", "2",
                                 "--results", "out"])
    assert result.exit_code == 0, result.output
    data = json.loads(Path("out/N06-000.greedy.json").read_text())
    assert (data["cardinality"] == 2) is not data["extra"]["cardinality_not_attained"]
    assert data["extra"]["rounds"] >= 1


def test_cardinality_above_the_asset_count_is_rejected(runner):
    _generate(runner)
    result = runner.invoke(cli, ["solve", "--instance", "N06-000", "--solver", "exact", "--cardinality", "9"])
    assert result.exit_code == 2
