"""
Time-to-solution benchmarking over annealing parameter grids.

    TTS = t_run * ln(1 - alpha) / ln(1 - p)

Every grid point runs one batch of reads per instance. Success probabilities
are counted only after the whole sweep so that every point is judged against
the same (final) best-known value. Per instance the best case over the grid
is reported; per size the median and the 30th / 70th percentiles over the
instances with finite TTS, with the unsolved ones counted alongside.

GA sweeps replace the annealing grid by a list of generation budgets: each
budget is restarted `ga_restarts` times, a restart counts as a read, and its
t_run is the modeled cost of the calls it made. Hybrid sweeps run the reverse
grid on every instance and keep the greedy seed as a candidate of each read,
so instances greedy already solves score p = 1 at t_run = 2 tau + rho.
"""
import itertools
import logging
import math
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.chimera import ChimeraGraph, build_chimera, clique_embed, embed_ising
from src.engine import EngineConfig, ReadSet, Sampler, run
from src.errors import InvalidConfig, InvalidFraction, UndefinedTts
from src.models import BenchReport, GridPointResult, InstanceBest, SizeSummary, SolverResult, TtsEstimate
from src.qubo import TOLERANCE, evaluate, qubo_to_ising
from src.registry import RegistryEntry
from src.schedule import Schedule, build_forward_protocol, build_reverse_protocol, default_schedule
from src.solvers.annealer import greedy_seed
from src.solvers.genetic import GaConfig, call_cost_us, ga_solve
from src.telemetry import traced
from src.utils import derive_seed, load_preset

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.99
PERCENTILES = (30.0, 50.0, 70.0)

Kind = Literal["forward", "reverse", "ga", "ga-greedy", "hybrid"]
KINDS = ("forward", "reverse", "ga", "ga-greedy", "hybrid")
GA_KINDS = ("ga", "ga-greedy")
# only instances the greedy seed leaves unsolved are benchmarked
GREEDY_FILTERED_KINDS = ("reverse", "ga-greedy")

SOLVER_NAMES = {
    "forward": "forward_annealing",
    "reverse": "reverse_annealing",
    "ga": "ga",
    "ga-greedy": "ga_greedy",
    "hybrid": "hybrid",
}


def tts(p: float, alpha: float = DEFAULT_ALPHA, t_run: float = 1.0) -> float:
    if not 0.0 <= p <= 1.0:
        raise InvalidFraction(f"success probability {p} outside [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise InvalidFraction(f"confidence {alpha} outside (0, 1)")
    if t_run <= 0:
        raise InvalidFraction(f"t_run must be positive, got {t_run}")
    if p == 0.0:
        raise UndefinedTts("no successful read; TTS is undefined")
    if p >= alpha:
        return t_run
    return t_run * math.log(1.0 - alpha) / math.log(1.0 - p)


def _values(reads) -> np.ndarray:
    if isinstance(reads, ReadSet):
        return reads.energies
    if isinstance(reads, SolverResult):
        return np.array([reads.best.value])
    reads = list(reads)
    if reads and isinstance(reads[0], SolverResult):
        return np.array([r.best.value for r in reads])
    return np.asarray(reads, dtype=float)


def estimate_success(reads, best_known: float) -> Tuple[float, int, int]:
    """(p, successes, reads); a read succeeds when its value is within tolerance of best_known."""
    if not math.isfinite(best_known):
        raise InvalidConfig(f"best-known value must be finite, got {best_known}")
    values = _values(reads)
    total = len(values)
    successes = int(np.count_nonzero(values <= best_known + TOLERANCE))
    return (successes / total if total else 0.0), successes, total


def tts_estimate(reads, best_known: float, t_run: float, alpha: float = DEFAULT_ALPHA) -> TtsEstimate:
    p, successes, total = estimate_success(reads, best_known)
    value = tts(p, alpha, t_run) if successes else math.inf
    return TtsEstimate(p=p, alpha=alpha, t_run=t_run, tts=value, n_reads=total, n_success=successes)


class FloatRange(BaseModel):
    """Inclusive range min, min + step, ..., max."""

    model_config = ConfigDict(frozen=True)

    min: float
    max: float
    step: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _check_bounds(self) -> "FloatRange":
        if self.max < self.min:
            raise ValueError(f"empty range {self.min}..{self.max}")
        return self

    def values(self) -> List[float]:
        count = int(round((self.max - self.min) / self.step)) + 1
        return [round(self.min + i * self.step, 10) for i in range(count)]


class GridPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    chain_strength: Optional[float] = None
    tau: Optional[float] = None
    rho: Optional[float] = None
    s_pause: Optional[float] = None
    iterations: Optional[int] = None


class ParameterGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    chain_strength: FloatRange
    s_pause: Optional[FloatRange] = None
    rho_us: List[float] = Field(default_factory=list)
    tau_us: List[float] = Field(default_factory=lambda: [1.0])
    ga_iterations: List[int] = Field(default_factory=lambda: [10, 30, 100, 300, 1000])
    ga_restarts: int = Field(default=20, ge=1)

    @model_validator(mode="after")
    def _check_lists(self) -> "ParameterGrid":
        if not self.tau_us or any(t <= 0 for t in self.tau_us):
            raise ValueError("tau_us needs at least one positive value")
        if any(r < 0 for r in self.rho_us):
            raise ValueError("rho_us values must be non-negative")
        if not self.ga_iterations or any(i < 0 for i in self.ga_iterations):
            raise ValueError("ga_iterations needs at least one non-negative budget")
        return self

    def points(self, kind: Kind) -> List[GridPoint]:
        """Grid points in a fixed order: chain strength, then s_p, then rho, then tau."""
        if kind in GA_KINDS:
            return [GridPoint(iterations=i) for i in self.ga_iterations]
        if kind == "forward":
            return [
                GridPoint(chain_strength=jf, tau=tau)
                for jf, tau in itertools.product(self.chain_strength.values(), self.tau_us)
            ]
        if self.s_pause is None or not self.rho_us:
            raise InvalidConfig("reverse sweeps need s_pause and rho_us ranges")
        return [
            GridPoint(chain_strength=jf, tau=tau, rho=rho, s_pause=sp)
            for jf, sp, rho, tau in itertools.product(
                self.chain_strength.values(), self.s_pause.values(), self.rho_us, self.tau_us
            )
        ]


def table2_grid(n: int, tau_us: Optional[Sequence[float]] = None) -> ParameterGrid:
    """Shipped search space for problem size n; `tau_us` overrides the annealing times."""
    preset = load_preset("table2")
    row = preset["sizes"].get(n)
    if row is None:
        raise InvalidConfig(f"no preset grid for N={n}; available: {sorted(preset['sizes'])}")
    return ParameterGrid(**row, tau_us=list(tau_us) if tau_us else preset["tau_us"])


def grid_from_spec(spec: str, tau_us: Optional[Sequence[float]] = None) -> ParameterGrid:
    """Parse `table2:<N>`; `appendix_c` style tau presets are applied through `tau_us`."""
    name, _, arg = spec.partition(":")
    if name != "table2" or not arg.isdigit():
        raise InvalidConfig(f"unknown grid preset {spec!r}; expected table2:<N>")
    return table2_grid(int(arg), tau_us)


def percentiles(values: Iterable[float]) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """(p30, median, p70) with linear interpolation; None for an empty sample."""
    values = np.asarray(list(values), dtype=float)
    if not len(values):
        return None, None, None
    p30, p50, p70 = np.percentile(values, PERCENTILES)
    return float(p30), float(p50), float(p70)


class _PointRun(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: GridPoint
    energies: np.ndarray
    t_run_us: float
    unbroken_fraction: Optional[float] = None


class _InstanceRun(BaseModel):
    entry: RegistryEntry
    greedy_value: float
    skipped: bool
    points: List[_PointRun] = Field(default_factory=list)


def _ga_points(
    entry: RegistryEntry,
    grid: ParameterGrid,
    kind: Kind,
    ga: GaConfig,
    seed_bits: np.ndarray,
) -> List[_PointRun]:
    q = entry.instance
    initial = seed_bits if kind == "ga-greedy" else None
    runs = []
    for index, point in enumerate(grid.points(kind)):
        budget = ga.model_copy(update={"max_iterations": point.iterations, "max_objective_calls": None, "target_value": None})
        values = [
            ga_solve(q, budget.model_copy(update={"seed": derive_seed(ga.seed, entry.instance_id, index, restart)}),
                     initial=initial).best.value
            for restart in range(grid.ga_restarts)
        ]
        calls = ga.population * (point.iterations + 1)
        runs.append(_PointRun(point=point, energies=np.asarray(values), t_run_us=calls * call_cost_us(q.n)))
    return runs


def _annealing_points(
    entry: RegistryEntry,
    grid: ParameterGrid,
    kind: Kind,
    cfg: EngineConfig,
    schedule: Schedule,
    graph: ChimeraGraph,
    sampler: Optional[Sampler],
    seed_bits: np.ndarray,
    greedy_value: float,
) -> List[_PointRun]:
    q = entry.instance
    ising = qubo_to_ising(q)
    embedding = clique_embed(graph, q.n)
    runs = []
    for index, point in enumerate(grid.points(kind)):
        e = embed_ising(ising, embedding, point.chain_strength)
        if kind == "forward":
            protocol = build_forward_protocol(point.tau)
        else:
            protocol = build_reverse_protocol(point.tau, point.rho, point.s_pause, seed_bits)
        point_cfg = cfg.model_copy(update={"seed": derive_seed(cfg.seed, entry.instance_id, index)})
        reads = run(e, protocol, schedule, point_cfg, sampler=sampler)
        energies = np.minimum(reads.energies, greedy_value) if kind == "hybrid" else reads.energies
        runs.append(_PointRun(
            point=point,
            energies=energies,
            t_run_us=reads.t_run_us,
            unbroken_fraction=reads.unbroken_fraction(),
        ))
    return runs


def _run_instance(
    entry: RegistryEntry,
    grid: ParameterGrid,
    kind: Kind,
    cfg: EngineConfig,
    schedule: Schedule,
    graph: Optional[ChimeraGraph],
    sampler: Optional[Sampler],
    ga: GaConfig,
) -> _InstanceRun:
    q = entry.instance
    seed_bits = greedy_seed(q)
    greedy_value = evaluate(q, seed_bits)
    solved_by_greedy = greedy_value <= entry.best_known + TOLERANCE
    if kind in GREEDY_FILTERED_KINDS and solved_by_greedy:
        logger.debug("%s solved by greedy; skipped", entry.instance_id)
        return _InstanceRun(entry=entry, greedy_value=greedy_value, skipped=True)

    with traced("sweep.instance", {"instance_id": entry.instance_id, "n": q.n, "kind": kind}):
        if kind in GA_KINDS:
            runs = _ga_points(entry, grid, kind, ga, seed_bits)
        else:
            runs = _annealing_points(entry, grid, kind, cfg, schedule, graph, sampler, seed_bits, greedy_value)
    return _InstanceRun(entry=entry, greedy_value=greedy_value, skipped=False, points=runs)


def _best_known(run_: _InstanceRun, solver: str) -> Tuple[float, str]:
    value, provenance = run_.entry.best_known, run_.entry.provenance
    if run_.greedy_value < value - TOLERANCE:
        value, provenance = run_.greedy_value, "greedy"
    for point in run_.points:
        low = float(point.energies.min())
        if low < value - TOLERANCE:
            value, provenance = low, solver
    return value, provenance


def _score(run_: _InstanceRun, solver: str, alpha: float) -> Tuple[InstanceBest, List[GridPointResult]]:
    entry = run_.entry
    best_known, provenance = _best_known(run_, solver)
    if provenance != entry.provenance:
        logger.info("%s: best-known value improved to %.6f by %s", entry.instance_id, best_known, provenance)

    rows = []
    for point in run_.points:
        estimate = tts_estimate(point.energies, best_known, point.t_run_us, alpha)
        rows.append(GridPointResult(
            instance_id=entry.instance_id,
            n=entry.instance.n,
            solver=solver,
            chain_strength=point.point.chain_strength,
            tau_us=point.point.tau,
            rho_us=point.point.rho,
            s_pause=point.point.s_pause,
            ga_iterations=point.point.iterations,
            reads=estimate.n_reads,
            successes=estimate.n_success,
            p=estimate.p,
            t_run_us=point.t_run_us,
            tts_us=estimate.tts,
            min_energy=float(point.energies.min()),
            unbroken_chain_fraction=point.unbroken_fraction,
        ))

    # strict comparison keeps the first grid point among equal minima
    best = None
    best_by_tau: Dict[str, float] = {}
    for row in rows:
        if not math.isfinite(row.tts_us):
            continue
        if best is None or row.tts_us < best.tts_us:
            best = row
        if row.tau_us is None:
            continue
        key = f"{row.tau_us:g}"
        if row.tts_us < best_by_tau.get(key, math.inf):
            best_by_tau[key] = row.tts_us

    summary = InstanceBest(
        instance_id=entry.instance_id,
        n=entry.instance.n,
        best_known=best_known,
        best_known_provenance=provenance,
        solved_by_greedy=run_.greedy_value <= best_known + TOLERANCE,
        skipped=run_.skipped,
        best=best,
        best_by_tau=best_by_tau,
    )
    return summary, rows


def summarize_sizes(instances: Sequence[InstanceBest], taus: Sequence[float] = ()) -> List[SizeSummary]:
    sizes = []
    for n in sorted({item.n for item in instances}):
        group = [item for item in instances if item.n == n]
        evaluated = [item for item in group if not item.skipped]
        solved = [item for item in evaluated if item.best is not None]
        p30, median, p70 = percentiles(item.min_tts for item in solved)
        by_tau = {}
        for tau in taus:
            key = f"{tau:g}"
            by_tau[key] = percentiles(
                item.best_by_tau[key] for item in evaluated if key in item.best_by_tau
            )[1]
        sizes.append(SizeSummary(
            n=n,
            n_instances=len(group),
            n_evaluated=len(evaluated),
            n_unsolved=len(evaluated) - len(solved),
            n_solved_by_greedy=sum(item.solved_by_greedy for item in group),
            median_tts_us=median,
            p30_tts_us=p30,
            p70_tts_us=p70,
            optimal_chain_strengths=[item.best.chain_strength for item in solved if item.best.chain_strength is not None],
            optimal_pause_points=[item.best.s_pause for item in solved if item.best.s_pause is not None],
            median_tts_by_tau=by_tau,
        ))
    return sizes


def sweep(
    entries: Sequence[RegistryEntry],
    grid: ParameterGrid,
    kind: Kind,
    cfg: EngineConfig = EngineConfig(),
    schedule: Optional[Schedule] = None,
    graph: Optional[ChimeraGraph] = None,
    sampler: Optional[Sampler] = None,
    jobs: int = 1,
    alpha: float = DEFAULT_ALPHA,
    ga: GaConfig = GaConfig(),
    on_instance_done: Optional[Callable[[int, int, str], None]] = None,
) -> BenchReport:
    """
    Run every grid point on every instance and reduce to a BenchReport.

    Reverse and greedy-seeded GA sweeps skip instances the greedy seed already
    solves. Work items are instances; results do not depend on `jobs`.
    """
    if kind not in KINDS:
        raise InvalidConfig(f"unknown sweep kind {kind!r}; expected one of {', '.join(KINDS)}")
    schedule = schedule or default_schedule()
    if graph is None and kind not in GA_KINDS:
        graph = build_chimera()
    solver = SOLVER_NAMES[kind]
    logger.info("sweeping %d instances over %d %s points", len(entries), len(grid.points(kind)), kind)

    runs: List[_InstanceRun] = []
    work = (delayed(_run_instance)(entry, grid, kind, cfg, schedule, graph, sampler, ga) for entry in entries)
    for done, run_ in enumerate(Parallel(n_jobs=jobs, prefer="threads", return_as="generator")(work), start=1):
        runs.append(run_)
        if on_instance_done is not None:
            on_instance_done(done, len(entries), run_.entry.instance_id)

    instances, points = [], []
    for run_ in runs:
        summary, rows = _score(run_, solver, alpha)
        instances.append(summary)
        points.extend(rows)

    return BenchReport(
        solver=solver,
        protocol=kind,
        alpha=alpha,
        instances=instances,
        points=points,
        sizes=summarize_sizes(instances, [] if kind in GA_KINDS else grid.tau_us),
    )
