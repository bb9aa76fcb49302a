import numpy as np
import pytest

from src.chimera import CliqueEmbedding, embed_ising
from src.qubo import QuboInstance, qubo_to_ising


def random_qubo(n: int, seed: int = 0, integer: bool = True) -> QuboInstance:
    rng = np.random.default_rng(seed)
    if integer:
        a = rng.integers(-15, 16, size=n).astype(float)
        b = rng.integers(-5, 6, size=(n, n)).astype(float)
    else:
        a = rng.normal(size=n)
        b = rng.normal(size=(n, n))
    return QuboInstance.from_coefficients(a, b)


@pytest.fixture
def make_qubo():
    return random_qubo


@pytest.fixture
def two_variable_qubo() -> QuboInstance:
    # a = (2, 0), b_12 = 4; values 00:0 01:0 10:2 11:6
    return QuboInstance.from_coefficients([2.0, 0.0], [[0.0, 4.0], [0.0, 0.0]])


@pytest.fixture
def logical_problem():
    """Embed a QUBO with one qubit per variable so the engine runs it directly."""
    def _build(q: QuboInstance, chain_strength: float = 1.0):
        return embed_ising(qubo_to_ising(q), CliqueEmbedding.identity(q.n), chain_strength)
    return _build
