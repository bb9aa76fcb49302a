"""
Report files for a finished sweep.

    results.csv         best grid point per evaluated instance
    points.csv          every grid point
    summary.json        per-size medians and percentiles plus per-instance bests
    tts_vs_n.dat        gnuplot table: N median p30 p70
    optimal_params.csv  chain strength / pause point of every instance best
    tau_comparison.csv  median TTS per size and annealing time, when several were swept

Generation writes ensemble_summary.csv next to the registry manifest: greedy
solve rate and optimal-portfolio cardinality per size.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List

import pandas as pd

from src.errors import ReportIoError
from src.models import BenchReport, GridPointResult, InstanceBest
from src.registry import EnsembleSummary
from src.utils import load_json_file, save_json_result

logger = logging.getLogger(__name__)

REPORT_FILE = "bench_report.json"

RESULT_COLUMNS = [
    "instance_id", "N", "solver", "J_F", "tau_us", "rho_us", "s_p", "ga_iterations",
    "reads", "successes", "p", "t_run_us", "tts_us",
]
POINT_COLUMNS = RESULT_COLUMNS + ["min_energy", "unbroken_chain_fraction"]
ENSEMBLE_COLUMNS = [
    "n", "instances", "greedy_solved", "greedy_solve_rate", "exact_references",
    "median_cardinality", "min_cardinality", "max_cardinality",
]


def _row(point: GridPointResult) -> Dict:
    return {
        "instance_id": point.instance_id,
        "N": point.n,
        "solver": point.solver,
        "J_F": point.chain_strength,
        "tau_us": point.tau_us,
        "rho_us": point.rho_us,
        "s_p": point.s_pause,
        "ga_iterations": point.ga_iterations,
        "reads": point.reads,
        "successes": point.successes,
        "p": point.p,
        "t_run_us": point.t_run_us,
        "tts_us": point.tts_us,
        "min_energy": point.min_energy,
        "unbroken_chain_fraction": point.unbroken_chain_fraction,
    }


def _unsolved_row(item: InstanceBest, solver: str) -> Dict:
    return {"instance_id": item.instance_id, "N": item.n, "solver": solver, "successes": 0, "p": 0.0, "tts_us": math.inf}


def _frame(rows: List[Dict], columns: List[str]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=columns)


def ensemble_frame(summaries: List[EnsembleSummary]) -> pd.DataFrame:
    rows = [
        {**summary.model_dump(), "greedy_solve_rate": summary.greedy_solve_rate}
        for summary in summaries
    ]
    return _frame(rows, ENSEMBLE_COLUMNS)


def write_ensemble_summary(summaries: List[EnsembleSummary], path: str | Path) -> Path:
    path = Path(path)
    try:
        ensemble_frame(summaries).to_csv(path, index=False)
    except OSError as exc:
        raise ReportIoError(f"cannot write {path}: {exc}") from exc
    return path


def results_frame(report: BenchReport) -> pd.DataFrame:
    rows = []
    for item in report.instances:
        if item.skipped:
            continue
        rows.append(_row(item.best) if item.best is not None else _unsolved_row(item, report.solver))
    return _frame(rows, RESULT_COLUMNS)


def points_frame(report: BenchReport) -> pd.DataFrame:
    return _frame([_row(point) for point in report.points], POINT_COLUMNS)


def optimal_params_frame(report: BenchReport) -> pd.DataFrame:
    rows = [
        {"N": item.n, "instance_id": item.instance_id, "J_F": item.best.chain_strength, "s_p": item.best.s_pause}
        for item in report.instances if item.best is not None
    ]
    return _frame(rows, ["N", "instance_id", "J_F", "s_p"])


def tau_comparison_frame(report: BenchReport) -> pd.DataFrame:
    rows = [
        {"N": size.n, "tau_us": float(tau), "median_tts_us": median}
        for size in report.sizes
        for tau, median in size.median_tts_by_tau.items()
    ]
    return _frame(rows, ["N", "tau_us", "median_tts_us"])


def summary_dict(report: BenchReport) -> Dict:
    return {
        "solver": report.solver,
        "protocol": report.protocol,
        "alpha": report.alpha,
        "success_definition": report.success_definition,
        "sizes": [
            {**size.model_dump(), "unsolved": size.unsolved_text}
            for size in report.sizes
        ],
        "instances": [
            {
                "instance_id": item.instance_id,
                "n": item.n,
                "best_known": item.best_known,
                "best_known_provenance": item.best_known_provenance,
                "solved_by_greedy": item.solved_by_greedy,
                "skipped": item.skipped,
                "min_tts_us": item.min_tts,
                "best_point": None if item.best is None else {
                    "J_F": item.best.chain_strength,
                    "tau_us": item.best.tau_us,
                    "rho_us": item.best.rho_us,
                    "s_p": item.best.s_pause,
                    "p": item.best.p,
                },
                "best_tts_by_tau": item.best_by_tau,
            }
            for item in report.instances
        ],
    }


def _write_gnuplot_table(report: BenchReport, path: Path) -> None:
    lines = ["# N median_tts_us p30_tts_us p70_tts_us"]
    for size in report.sizes:
        if size.median_tts_us is not None:
            lines.append(f"{size.n} {size.median_tts_us:.6g} {size.p30_tts_us:.6g} {size.p70_tts_us:.6g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_bench_report(report: BenchReport, out_dir: str | Path) -> Path:
    path = Path(out_dir) / REPORT_FILE
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_json_result(report.model_dump(), path)
    except OSError as exc:
        raise ReportIoError(f"cannot write {path}: {exc}") from exc
    return path


def load_bench_report(in_dir: str | Path) -> BenchReport:
    """The saved report in `in_dir`, or an empty one when the directory holds none."""
    path = Path(in_dir) / REPORT_FILE
    if not path.exists():
        logger.warning("no %s in %s; reporting an empty result set", REPORT_FILE, in_dir)
        return BenchReport(solver="none", protocol="none")
    return BenchReport.model_validate(load_json_file(path))


def write_report(report: BenchReport, out_dir: str | Path) -> List[Path]:
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, frame in (
            ("results.csv", results_frame(report)),
            ("points.csv", points_frame(report)),
            ("optimal_params.csv", optimal_params_frame(report)),
        ):
            frame.to_csv(out / name, index=False)
            written.append(out / name)

        save_json_result(summary_dict(report), out / "summary.json")
        written.append(out / "summary.json")

        _write_gnuplot_table(report, out / "tts_vs_n.dat")
        written.append(out / "tts_vs_n.dat")

        taus = {tau for size in report.sizes for tau in size.median_tts_by_tau}
        if len(taus) > 1:
            tau_comparison_frame(report).to_csv(out / "tau_comparison.csv", index=False)
            written.append(out / "tau_comparison.csv")
    except OSError as exc:
        raise ReportIoError(f"cannot write report to {out}: {exc}") from exc

    logger.info("wrote %d report files to %s", len(written), out)
    return written
