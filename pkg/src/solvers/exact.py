import logging
import time

import numpy as np

from src.errors import TooLarge
from src.models import Selection, SolverResult
from src.qubo import TOLERANCE, QuboInstance, all_bitstrings

logger = logging.getLogger(__name__)

DEFAULT_EXACT_CAP = 28
LOW_BITS = 12
HIGH_CHUNK = 1024


def exact_solve(q: QuboInstance, cap: int = DEFAULT_EXACT_CAP) -> Selection:
    """
    Global minimum by exhaustive enumeration.

    Variables are split into a high prefix and a low suffix of at most
    LOW_BITS bits. For a fixed prefix the objective is quadratic in the
    suffix with a prefix-dependent linear term, so every completion of a chunk
    of prefixes is one matrix product. Ties resolve to the lexicographically
    smallest bitstring, i.e. the smallest enumeration index.
    """
    if q.n > cap:
        raise TooLarge(f"exact enumeration capped at n={cap}, instance has n={q.n}")

    n = q.n
    k = min(n, LOW_BITS)
    hi_n = n - k
    a, b = q.a, q.b

    low_bits = all_bitstrings(k).astype(float)
    a_low, b_low = a[hi_n:], b[hi_n:, hi_n:]
    low_values = low_bits @ a_low + np.einsum("ri,ij,rj->r", low_bits, b_low, low_bits)

    a_high, b_high = a[:hi_n], b[:hi_n, :hi_n]
    cross = b[:hi_n, hi_n:]

    best_value = np.inf
    best_index = -1
    n_high = 2**hi_n
    for start in range(0, n_high, HIGH_CHUNK):
        stop = min(start + HIGH_CHUNK, n_high)
        index = np.arange(start, stop, dtype=np.int64)
        shifts = np.arange(hi_n - 1, -1, -1, dtype=np.int64)
        high_bits = ((index[:, None] >> shifts) & 1).astype(float)
        high_values = high_bits @ a_high + np.einsum("ri,ij,rj->r", high_bits, b_high, high_bits)
        linear = high_bits @ cross
        # rows: prefixes, columns: suffixes
        values = high_values[:, None] + low_values[None, :] + linear @ low_bits.T

        chunk_min = float(values.min())
        if chunk_min < best_value - TOLERANCE:
            flat = np.flatnonzero(values.ravel() <= chunk_min + TOLERANCE)[0]
            best_value = chunk_min
            best_index = start * 2**k + int(flat)
        elif chunk_min < best_value:
            best_value = chunk_min

    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (best_index >> shifts) & 1
    value = float(a @ bits + bits @ b @ bits + q.constant)
    return Selection.from_bits(bits, value)


def exact_result(q: QuboInstance, cap: int = DEFAULT_EXACT_CAP) -> SolverResult:
    started = time.perf_counter()
    best = exact_solve(q, cap)
    return SolverResult(
        solver="exact",
        best=best,
        objective_calls=2**q.n,
        trace=[best.value],
        wall_time_s=time.perf_counter() - started,
    )
