import heapq
import logging
import time

import numpy as np

from src.models import Selection, SolverResult
from src.qubo import IsingInstance, QuboInstance, evaluate, qubo_to_ising

logger = logging.getLogger(__name__)


def greedy_search(m: IsingInstance) -> np.ndarray:
    """
    Fix spins one at a time, largest effective field first.

    Each heap entry is (-|e|, index, e). The popped spin is set against its
    field (-1 when e > 0, +1 otherwise), its coupling is folded into every
    remaining field and the heap is rebuilt. Equal magnitudes pop in index
    order.
    """
    coupling = m.coupling_matrix()
    solution = np.zeros(m.n, dtype=np.int8)
    energies = [[-abs(float(m.h[i])), i, float(m.h[i])] for i in range(m.n)]
    heapq.heapify(energies)

    while energies:
        _, i, e = heapq.heappop(energies)
        solution[i] = -1 if e > 0 else 1
        for z in energies:
            n = z[1]
            z[2] = z[2] + solution[i] * coupling[i, n]
            z[0] = -abs(z[2])
        heapq.heapify(energies)

    return solution


def greedy_solve(q: QuboInstance) -> SolverResult:
    started = time.perf_counter()
    spins = greedy_search(qubo_to_ising(q))
    bits = (spins + 1) // 2
    value = evaluate(q, bits)
    return SolverResult(
        solver="greedy",
        best=Selection.from_bits(bits, value),
        objective_calls=1,
        trace=[value],
        elapsed_model_time=0.0,
        wall_time_s=time.perf_counter() - started,
    )
