"""
Instance ensembles and their on-disk registry.

A registry directory holds `manifest.json` and one `<instance_id>.json` per
instance. The manifest carries the generation parameters and, per instance,
the best-known objective value with the solver that found it. Nothing
time-dependent is written, so regenerating with the same seed reproduces the
directory byte for byte.
"""
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.errors import MalformedInstance, ReportIoError, TooLarge
from src.market import RNG_ALGORITHM, GbmParams, realized_stats, simulate_scenario
from src.qubo import TOLERANCE, BucketMap, InstanceMetadata, QuboInstance, bucketize, load_instance, save_instance
from src.solvers.exact import DEFAULT_EXACT_CAP, exact_solve
from src.solvers.genetic import GaConfig, ga_solve
from src.solvers.greedy import greedy_solve
from src.utils import derive_seed, load_json_file, save_json_result

logger = logging.getLogger(__name__)

MAX_LOGICAL = 64
MANIFEST = "manifest.json"


class RegistryEntry(BaseModel):
    instance_id: str
    instance: QuboInstance
    best_known: float
    provenance: str
    best_bits: Optional[str] = Field(default=None, description="0/1 string of the incumbent")

    @property
    def n(self) -> int:
        return self.instance.n


def instance_id_for(n: int, index: int) -> str:
    return f"N{n:02d}-{index:03d}"


def generate_instance(n: int, index: int, base: GbmParams, bucket_map: BucketMap, seed: int) -> QuboInstance:
    instance_id = instance_id_for(n, index)
    params = GbmParams(**{**base.model_dump(), "n_assets": n, "seed": derive_seed(seed, n, index)})
    stats = realized_stats(simulate_scenario(params))
    metadata = InstanceMetadata(
        instance_id=instance_id,
        seed=params.seed,
        gbm=params,
        rng_algorithm=RNG_ALGORITHM,
    )
    return bucketize(stats, bucket_map, metadata)


def initial_best_known(q: QuboInstance, exact_cap: int, ga: GaConfig) -> RegistryEntry:
    """Exact optimum when n <= exact_cap; otherwise the better of greedy and greedy-seeded GA."""
    instance_id = q.metadata.instance_id
    if q.n <= exact_cap:
        best = exact_solve(q, exact_cap)
        provenance = "exact"
    else:
        greedy = greedy_solve(q)
        ga_cfg = ga.model_copy(update={"seed": derive_seed(ga.seed, instance_id)})
        found = ga_solve(q, ga_cfg, initial=greedy.best.as_array())
        if found.best.value < greedy.best.value - TOLERANCE:
            best, provenance = found.best, "ga"
        else:
            best, provenance = greedy.best, "greedy"
    return RegistryEntry(
        instance_id=instance_id,
        instance=q,
        best_known=best.value,
        provenance=provenance,
        best_bits="".join(str(b) for b in best.bits),
    )


def generate_ensemble(
    sizes: Sequence[int],
    per_size: int,
    base: GbmParams = GbmParams(),
    bucket_map: BucketMap = BucketMap(),
    seed: int = 0,
    exact_cap: int = DEFAULT_EXACT_CAP,
    ga: GaConfig = GaConfig(),
    on_instance_done: Optional[Callable[[int, int, str], None]] = None,
) -> List[RegistryEntry]:
    too_large = [n for n in sizes if n > MAX_LOGICAL or n < 2]
    if too_large:
        raise TooLarge(f"sizes {too_large} outside the embeddable range 2..{MAX_LOGICAL}")
    total = len(sizes) * per_size
    entries = []
    for n in sizes:
        for index in range(per_size):
            q = generate_instance(n, index, base, bucket_map, seed)
            entries.append(initial_best_known(q, exact_cap, ga))
            if on_instance_done is not None:
                on_instance_done(len(entries), total, q.metadata.instance_id)
    return entries


class EnsembleSummary(BaseModel):
    """Per-size characterization: greedy solve rate and optimal-portfolio cardinality."""

    n: int
    instances: int
    greedy_solved: int
    exact_references: int = Field(description="instances whose best-known value is a proven optimum")
    median_cardinality: float
    min_cardinality: int
    max_cardinality: int

    @property
    def greedy_solve_rate(self) -> float:
        return self.greedy_solved / self.instances if self.instances else 0.0


def summarize_ensemble(entries: Sequence[RegistryEntry]) -> List[EnsembleSummary]:
    """
    Group entries by size and compare greedy against each best-known value.

    Above the exact cap the best-known value is a heuristic bound, so the
    greedy rate there is an upper bound on the true rate.
    """
    by_size: Dict[int, List[RegistryEntry]] = {}
    for entry in entries:
        by_size.setdefault(entry.n, []).append(entry)

    summaries = []
    for n, group in sorted(by_size.items()):
        solved = sum(greedy_solve(entry.instance).best.value <= entry.best_known + TOLERANCE for entry in group)
        cardinalities = [entry.best_bits.count("1") for entry in group if entry.best_bits]
        summaries.append(EnsembleSummary(
            n=n,
            instances=len(group),
            greedy_solved=int(solved),
            exact_references=sum(entry.provenance == "exact" for entry in group),
            median_cardinality=float(np.median(cardinalities)) if cardinalities else float("nan"),
            min_cardinality=min(cardinalities, default=0),
            max_cardinality=max(cardinalities, default=0),
        ))
    return summaries


class InstanceRegistry:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def save(self, entries: Sequence[RegistryEntry], header: Optional[Dict] = None) -> Path:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            for entry in entries:
                save_instance(entry.instance, self.root / f"{entry.instance_id}.json")
            manifest = {
                **(header or {}),
                "rng_algorithm": RNG_ALGORITHM,
                "instances": [
                    {
                        "instance_id": entry.instance_id,
                        "n": entry.n,
                        "file": f"{entry.instance_id}.json",
                        "best_known": entry.best_known,
                        "provenance": entry.provenance,
                        "best_bits": entry.best_bits,
                    }
                    for entry in entries
                ],
            }
            save_json_result(manifest, self.manifest_path)
        except OSError as exc:
            raise ReportIoError(f"cannot write registry {self.root}: {exc}") from exc
        logger.info("registry %s holds %d instances", self.root, len(entries))
        return self.manifest_path

    def _manifest(self) -> Dict:
        if not self.exists():
            raise MalformedInstance(f"no {MANIFEST} in {self.root}")
        return load_json_file(self.manifest_path)

    def header(self) -> Dict:
        return {k: v for k, v in self._manifest().items() if k != "instances"}

    def load(self, sizes: Optional[Sequence[int]] = None) -> List[RegistryEntry]:
        entries = []
        for row in self._manifest()["instances"]:
            if sizes and row["n"] not in sizes:
                continue
            entries.append(RegistryEntry(
                instance_id=row["instance_id"],
                instance=load_instance(self.root / row["file"]),
                best_known=float(row["best_known"]),
                provenance=row["provenance"],
                best_bits=row.get("best_bits"),
            ))
        return entries

    def get(self, instance_id: str) -> RegistryEntry:
        for entry in self.load():
            if entry.instance_id == instance_id:
                return entry
        raise MalformedInstance(f"instance {instance_id} not in registry {self.root}")

    def register_value(self, instance_id: str, value: float, provenance: str, bits: Optional[Sequence[int]] = None) -> bool:
        """Record `value` as best-known when it beats the incumbent; returns whether it did."""
        manifest = self._manifest()
        for row in manifest["instances"]:
            if row["instance_id"] != instance_id:
                continue
            if value >= float(row["best_known"]) - TOLERANCE:
                return False
            if row["provenance"] == "exact":
                logger.warning("%s: %s reports %.9f below the exact optimum %.9f",
                               instance_id, provenance, value, row["best_known"])
            row.update(best_known=value, provenance=provenance)
            row["best_bits"] = None if bits is None else "".join(str(int(b)) for b in bits)
            save_json_result(manifest, self.manifest_path)
            logger.info("%s: best-known value now %.6f (%s)", instance_id, value, provenance)
            return True
        raise MalformedInstance(f"instance {instance_id} not in registry {self.root}")
