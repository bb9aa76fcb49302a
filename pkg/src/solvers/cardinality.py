import logging
from typing import Callable

import numpy as np
from pydantic import BaseModel

from src.errors import InvalidConfig
from src.models import Selection
from src.qubo import QuboInstance, evaluate, shift_desirability

logger = logging.getLogger(__name__)

MAX_ROUNDS = 64

InnerSolver = Callable[[QuboInstance], Selection]


class CardinalitySearchResult(BaseModel):
    selection: Selection
    delta: float
    rounds: int
    attained: bool

    @property
    def cardinality_not_attained(self) -> bool:
        return not self.attained


def delta_bound(q: QuboInstance) -> float:
    """Shift beyond which the exact optimum is empty (+) or full (-)."""
    row_abs = np.abs(q.coupling_matrix()).sum(axis=1)
    return float(2.0 * row_abs.max() + (q.a.max() - q.a.min()) + np.abs(q.a).max())


def cardinality_search(q: QuboInstance, target: int, inner: InnerSolver) -> CardinalitySearchResult:
    """
    Bisect a uniform desirability shift until the inner solver returns `target` assets.

    The optimal cardinality is non-increasing in the shift, so too many assets
    move the lower bracket up and too few move the upper bracket down.
    Reported values are re-evaluated on the unshifted instance.
    """
    if not 0 <= target <= q.n:
        raise InvalidConfig(f"target cardinality {target} outside [0, {q.n}]")

    bound = delta_bound(q)
    lo, hi = -bound, bound
    delta = 0.0
    closest = None

    for rounds in range(1, MAX_ROUNDS + 1):
        found = inner(shift_desirability(q, delta))
        selection = Selection.from_bits(found.bits, evaluate(q, found.bits))
        gap = abs(selection.cardinality - target)
        if closest is None or gap < closest[0] or (gap == closest[0] and abs(delta) < abs(closest[2])):
            closest = (gap, selection, delta)
        logger.debug("round %d: delta=%.6g cardinality=%d target=%d", rounds, delta, selection.cardinality, target)
        if gap == 0:
            return CardinalitySearchResult(selection=selection, delta=delta, rounds=rounds, attained=True)
        if selection.cardinality > target:
            lo = delta
        else:
            hi = delta
        delta = 0.5 * (lo + hi)

    _, selection, delta = closest
    logger.info("cardinality %d not attained; closest has %d assets", target, selection.cardinality)
    return CardinalitySearchResult(selection=selection, delta=delta, rounds=MAX_ROUNDS, attained=False)
