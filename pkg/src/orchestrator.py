import logging
import re
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from colorama import Fore

from src.bench import GA_KINDS, SOLVER_NAMES, Kind, ParameterGrid, sweep
from src.chimera import build_chimera, clique_embed
from src.config import Config, RunConfig
from src.console import log_step, print_box, print_progress_bar
from src.engine import ReadSet, save_readset
from src.errors import InvalidConfig, InvalidDefectId
from src.models import BenchReport, SolverResult
from src.qubo import QuboInstance, add_penalty, load_instance
from src.registry import InstanceRegistry, RegistryEntry, generate_ensemble, summarize_ensemble
from src.report import load_bench_report, save_bench_report, write_ensemble_summary, write_report
from src.schedule import Schedule, default_schedule, load_schedule
from src.solvers.annealer import forward_solve, reverse_solve
from src.solvers.cardinality import cardinality_search
from src.solvers.exact import exact_result
from src.solvers.genetic import ga_solve
from src.solvers.greedy import greedy_solve
from src.solvers.hybrid import hybrid_reverse_solve
from src.telemetry import traced
from src.utils import derive_seed, save_json_result

logger = logging.getLogger(__name__)

SOLVERS = ("exact", "greedy", "ga", "forward", "reverse", "hybrid")
RUN_CONFIG_FILE = "run_config.yaml"
ENSEMBLE_SUMMARY_FILE = "ensemble_summary.csv"


def read_defects(path: Optional[str | Path]) -> List[int]:
    """Qubit ids separated by whitespace or commas; '#' starts a comment"""
    if path is None:
        return []
    text = Path(path).read_text(encoding="utf-8")
    tokens = re.split(r"[\s,]+", re.sub(r"#.*", "", text))
    try:
        return sorted({int(token) for token in tokens if token})
    except ValueError as exc:
        raise InvalidDefectId(f"defect file {path} holds a non-integer id: {exc}") from exc


class BenchmarkOrchestrator:
    """Runs the pipeline stages behind the CLI commands and reports progress on the terminal"""

    def __init__(self, run_config: RunConfig, settings: Optional[Config] = None):
        self.config = run_config
        self.settings = settings or Config.from_env()
        self.registry = InstanceRegistry(run_config.registry_dir)

    def _persist_config(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.config.dump_yaml(directory / RUN_CONFIG_FILE)

    def generate(self) -> Path:
        cfg = self.config
        sizes, per_size = cfg.ensemble.sizes, cfg.ensemble.per_size
        print_box(
            "INSTANCE GENERATION",
            [
                f"Sizes: {', '.join(str(n) for n in sizes)}",
                f"Instances per size: {per_size}",
                f"Seed: {cfg.seed}",
                f"Exact enumeration up to N={cfg.exact_cap}",
            ],
            Fore.CYAN,
        )
        started = time.time()
        with traced("generate", {"sizes": str(sizes), "per_size": per_size, "seed": cfg.seed}):
            entries = generate_ensemble(
                sizes,
                per_size,
                base=cfg.market,
                bucket_map=cfg.buckets,
                seed=cfg.seed,
                exact_cap=cfg.exact_cap,
                ga=cfg.ga,
                on_instance_done=lambda done, total, _: print_progress_bar(done, total, "instances"),
            )
            header = {
                "seed": cfg.seed,
                "sizes": sizes,
                "per_size": per_size,
                "gbm": cfg.market.model_dump(mode="json"),
                "buckets": cfg.buckets.model_dump(mode="json"),
            }
            manifest = self.registry.save(entries, header)
            summaries = summarize_ensemble(entries)
            write_ensemble_summary(summaries, self.registry.root / ENSEMBLE_SUMMARY_FILE)
        self._persist_config(self.registry.root)

        by_provenance = {}
        for entry in entries:
            by_provenance[entry.provenance] = by_provenance.get(entry.provenance, 0) + 1
        print_box(
            "GENERATION SUMMARY",
            [f"Instances: {len(entries)}"]
            + [f"Best known from {name}: {count}" for name, count in sorted(by_provenance.items())]
            + [
                f"N={s.n}: greedy solved {s.greedy_solved}/{s.instances}, "
                f"optimal cardinality {s.median_cardinality:g} ({s.min_cardinality}-{s.max_cardinality})"
                for s in summaries
            ]
            + ["", f"Total Time: {time.time() - started:.2f}s", f"Manifest: {manifest}"],
            Fore.GREEN,
        )
        return manifest

    def embed(self, size: int, defects_file: Optional[str] = None, output: Optional[str] = None) -> Path:
        defects = read_defects(defects_file)
        graph = build_chimera(16, defects)
        log_step(logger, f"C_16 with {graph.num_qubits} active qubits and {graph.num_edges} couplers", "PROCESSING")
        embedding = clique_embed(graph, size)
        path = Path(output or Path(self.config.results_dir) / f"embedding_N{size:02d}.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        save_json_result({
            **embedding.to_json(),
            "grid_size": graph.grid_size,
            "chain_length": embedding.chain_length,
            "physical_qubits": len(embedding.qubits),
            "defects": defects,
            "couplers": [
                {"i": i, "j": j, "edges": [list(edge) for edge in edges]}
                for (i, j), edges in embedding.couplers.items()
            ],
        }, path)
        log_step(logger, f"K_{size} embedded with chain length {embedding.chain_length}: {path}", "SUCCESS")
        return path

    def _load_target(self, instance: str) -> Tuple[Optional[RegistryEntry], QuboInstance]:
        path = Path(instance)
        if path.suffix == ".json" and path.exists():
            return None, load_instance(path)
        entry = self.registry.get(instance)
        return entry, entry.instance

    def _schedule(self, schedule_file: Optional[str]) -> Schedule:
        return load_schedule(schedule_file) if schedule_file else default_schedule()

    def solve(
        self,
        instance: str,
        solver: str,
        seed_state=None,
        target: Optional[float] = None,
        schedule_file: Optional[str] = None,
        cardinality: Optional[int] = None,
    ) -> Path:
        if solver not in SOLVERS:
            raise InvalidConfig(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
        cfg = self.config
        entry, q = self._load_target(instance)
        if cfg.penalty is not None:
            q = add_penalty(q, cfg.penalty)
        instance_id = q.metadata.instance_id or Path(instance).stem
        log_step(logger, f"Solving {instance_id} (N={q.n}) with {solver}", "PROCESSING")

        schedule = self._schedule(schedule_file)
        with traced("solve", {"instance_id": instance_id, "solver": solver, "n": q.n}):
            if cardinality is None:
                result, reads = self._dispatch(q, solver, instance_id, seed_state, target, schedule)
            else:
                result, reads = self._solve_at_cardinality(q, solver, instance_id, seed_state, schedule, cardinality), None

        out = Path(cfg.results_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{instance_id}.{solver}.json"
        save_json_result(self._result_json(instance_id, result), path)
        if reads is not None:
            save_readset(reads, out / f"{instance_id}.{solver}.reads.csv")

        if entry is not None and cfg.penalty is None:
            self.registry.register_value(instance_id, result.best.value, solver, result.best.bits)
            gap = result.best.value - entry.best_known
            log_step(logger, f"Gap to best known ({entry.provenance}): {gap:.6g}", "INFO")
        log_step(logger, f"{solver}: value {result.best.value:.6f}, {result.best.cardinality} assets -> {path}", "SUCCESS")
        return path

    def _dispatch(
        self,
        q: QuboInstance,
        solver: str,
        instance_id: str,
        seed_state,
        target: Optional[float],
        schedule: Schedule,
    ) -> Tuple[SolverResult, Optional[ReadSet]]:
        cfg = self.config
        anneal = cfg.anneal
        if solver == "exact":
            return exact_result(q, cfg.exact_cap), None
        if solver == "greedy":
            return greedy_solve(q), None
        if solver == "ga":
            ga_cfg = cfg.ga.model_copy(update={
                "seed": derive_seed(cfg.seed, "ga", instance_id),
                "target_value": target if target is not None else cfg.ga.target_value,
            })
            return ga_solve(q, ga_cfg, initial=seed_state), None
        if solver == "forward":
            return forward_solve(q, anneal.chain_strength, anneal.tau_us, cfg.engine, schedule)
        if solver == "reverse":
            return reverse_solve(
                q, anneal.chain_strength, anneal.tau_us, anneal.rho_us, anneal.s_pause,
                initial=seed_state, cfg=cfg.engine, schedule=schedule,
            )
        result = hybrid_reverse_solve(
            q, anneal.chain_strength, anneal.tau_us, anneal.rho_us, anneal.s_pause,
            budget=anneal.budget, cfg=cfg.engine, schedule=schedule, target=target,
        )
        return result, None

    def _solve_at_cardinality(
        self,
        q: QuboInstance,
        solver: str,
        instance_id: str,
        seed_state,
        schedule: Schedule,
        cardinality: int,
    ) -> SolverResult:
        """Bisect a desirability shift, running `solver` on every shifted instance."""
        runs: List[SolverResult] = []

        def inner(shifted: QuboInstance):
            result, _ = self._dispatch(shifted, solver, instance_id, seed_state, None, schedule)
            runs.append(result)
            return result.best

        search = cardinality_search(q, cardinality, inner)
        if not search.attained:
            log_step(logger, f"Cardinality {cardinality} not attained; closest has {search.selection.cardinality} assets", "WARNING")
        return SolverResult(
            solver=solver,
            best=search.selection,
            objective_calls=sum(r.objective_calls for r in runs),
            elapsed_model_time=sum(r.elapsed_model_time for r in runs),
            extra={
                "target_cardinality": cardinality,
                "cardinality_not_attained": not search.attained,
                "delta": search.delta,
                "rounds": search.rounds,
            },
        )

    @staticmethod
    def _result_json(instance_id: str, result: SolverResult) -> dict:
        return {
            "instance_id": instance_id,
            "solver": result.solver,
            "bitstring": "".join(str(b) for b in result.best.bits),
            "value": result.best.value,
            "cardinality": result.best.cardinality,
            "objective_calls": result.objective_calls,
            "elapsed_model_time_us": result.elapsed_model_time,
            "trace": result.trace,
            "extra": result.extra,
        }

    def sweep(
        self,
        grid: ParameterGrid,
        kind: Kind,
        sizes: Optional[Sequence[int]] = None,
        schedule_file: Optional[str] = None,
    ) -> BenchReport:
        cfg = self.config
        entries = self.registry.load(sizes)
        n_points = len(grid.points(kind))
        if kind in GA_KINDS:
            budget_lines = [
                f"Generation budgets: {', '.join(str(i) for i in grid.ga_iterations)}",
                f"Restarts per budget: {grid.ga_restarts}",
            ]
        else:
            budget_lines = [
                f"Annealing times (us): {', '.join(f'{t:g}' for t in grid.tau_us)}",
                f"Reads per point: {cfg.engine.total_reads}",
            ]
        print_box(
            f"{SOLVER_NAMES[kind].replace('_', ' ').upper()} SWEEP",
            [
                f"Registry: {self.registry.root}",
                f"Instances: {len(entries)}",
                f"Grid points per instance: {n_points}",
            ] + budget_lines,
            Fore.CYAN,
        )
        started = time.time()
        with traced("sweep", {"kind": kind, "instances": len(entries), "points": n_points}):
            report = sweep(
                entries,
                grid,
                kind,
                cfg=cfg.engine,
                schedule=self._schedule(schedule_file),
                jobs=cfg.jobs,
                ga=cfg.ga,
                on_instance_done=lambda done, total, _: print_progress_bar(done, total, "instances"),
            )

        for item in report.instances:
            self.registry.register_value(item.instance_id, item.best_known, item.best_known_provenance)

        save_bench_report(report, cfg.results_dir)
        self._persist_config(cfg.results_dir)
        write_report(report, cfg.results_dir)

        lines = [
            f"N={size.n}: median {size.median_tts_us:.4g} us ({size.unsolved_text})"
            if size.median_tts_us is not None else f"N={size.n}: {size.unsolved_text}"
            for size in report.sizes
        ]
        print_box(
            "SWEEP SUMMARY",
            lines + ["", f"Total Time: {time.time() - started:.2f}s", f"Results: {cfg.results_dir}"],
            Fore.GREEN,
        )
        return report

    def report(self, input_dir: str, output_dir: Optional[str] = None) -> List[Path]:
        report = load_bench_report(input_dir)
        written = write_report(report, output_dir or input_dir)
        for path in written:
            log_step(logger, f"  {path}", "PROCESSING")
        log_step(logger, f"Report written ({len(report.instances)} instances)", "SUCCESS")
        return written
