"""
Chimera hardware graph, native clique embedding and chain decoding.

Qubit ids are linear: 8 * (m * x + y) + 4 * u + k for cell row x, cell
column y, orientation u and index k. Orientation 0 couples to the same (u, k)
in the cells above and below, orientation 1 to the cells left and right.
"""
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import dwave_networkx as dnx
import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import (
    EmbeddingInvariantViolated,
    InfeasibleWithDefects,
    InvalidDefectId,
    LengthMismatch,
    MalformedInstance,
    MissingCoupler,
    TooLarge,
)
from src.qubo import IsingInstance

logger = logging.getLogger(__name__)

SHORE_SIZE = 4


def linear_index(m: int, x: int, y: int, u: int, k: int) -> int:
    return 2 * SHORE_SIZE * (m * x + y) + SHORE_SIZE * u + k


def coordinates(m: int, q: int) -> Tuple[int, int, int, int]:
    cell, rest = divmod(q, 2 * SHORE_SIZE)
    x, y = divmod(cell, m)
    u, k = divmod(rest, SHORE_SIZE)
    return x, y, u, k


class ChimeraGraph(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid_size: int = 16
    shore_size: int = SHORE_SIZE
    defects: frozenset = frozenset()
    graph: nx.Graph

    @property
    def ideal_qubits(self) -> int:
        return 2 * self.shore_size * self.grid_size**2

    @property
    def num_qubits(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def num_edges(self) -> int:
        return self.graph.number_of_edges()

    def is_active(self, q: int) -> bool:
        return self.graph.has_node(q)

    def has_edge(self, q: int, r: int) -> bool:
        return self.graph.has_edge(q, r)

    def qubit(self, x: int, y: int, u: int, k: int) -> int:
        return linear_index(self.grid_size, x, y, u, k)


def build_chimera(m: int = 16, defects: Iterable[int] = ()) -> ChimeraGraph:
    graph = dnx.chimera_graph(m, m, SHORE_SIZE)
    defects = frozenset(int(d) for d in defects)
    invalid = sorted(d for d in defects if not 0 <= d < 2 * SHORE_SIZE * m * m)
    if invalid:
        raise InvalidDefectId(f"qubit ids {invalid} outside C_{m}")
    graph.remove_nodes_from(defects)
    logger.debug("built C_%d with %d active qubits, %d couplers", m, graph.number_of_nodes(), graph.number_of_edges())
    return ChimeraGraph(grid_size=m, defects=defects, graph=graph)


class CliqueEmbedding(BaseModel):
    """
    Chains of physical qubits, one per logical variable, in path order.

    `couplers` lists, for every logical pair (i, j) with i < j, the physical
    couplers joining chain i to chain j; `chain_edges` the path edges of each
    chain.
    """

    model_config = ConfigDict(frozen=True)

    n_logical: int
    chains: Tuple[Tuple[int, ...], ...]
    chain_length: int
    couplers: Dict[Tuple[int, int], Tuple[Tuple[int, int], ...]] = Field(default_factory=dict)
    chain_edges: Tuple[Tuple[Tuple[int, int], ...], ...] = ()

    @property
    def qubits(self) -> Tuple[int, ...]:
        """Physical qubits in chain-major order; the order of embedded problems."""
        return tuple(q for chain in self.chains for q in chain)

    @classmethod
    def identity(cls, n: int) -> "CliqueEmbedding":
        """Chains of length one over qubits 0..n-1, for running logical problems directly."""
        couplers = {(i, j): ((i, j),) for i in range(n) for j in range(i + 1, n)}
        return cls(
            n_logical=n,
            chains=tuple((i,) for i in range(n)),
            chain_length=1,
            couplers=couplers,
            chain_edges=tuple(() for _ in range(n)),
        )

    @classmethod
    def from_chains(cls, graph: ChimeraGraph, chains: Sequence[Sequence[int]]) -> "CliqueEmbedding":
        chains = tuple(tuple(int(q) for q in chain) for chain in chains)
        lengths = {len(chain) for chain in chains}
        if len(lengths) != 1:
            raise EmbeddingInvariantViolated("all chains must have the same length")
        owner = {q: i for i, chain in enumerate(chains) for q in chain}
        couplers: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
        for q, i in owner.items():
            for r in graph.graph.neighbors(q) if graph.is_active(q) else ():
                j = owner.get(r)
                if j is not None and i < j:
                    couplers.setdefault((i, j), []).append((q, r))
        chain_edges = tuple(tuple(zip(chain, chain[1:])) for chain in chains)
        embedding = cls(
            n_logical=len(chains),
            chains=chains,
            chain_length=lengths.pop(),
            couplers={pair: tuple(sorted(edges)) for pair, edges in sorted(couplers.items())},
            chain_edges=chain_edges,
        )
        validate_embedding(graph, embedding)
        return embedding

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n_logical, "chains": [list(chain) for chain in self.chains]}


def validate_embedding(graph: ChimeraGraph, embedding: CliqueEmbedding) -> None:
    """Raise EmbeddingInvariantViolated unless chains are disjoint connected paths covering every pair."""
    seen = set()
    for i, chain in enumerate(embedding.chains):
        if seen.intersection(chain):
            raise EmbeddingInvariantViolated(f"chain {i} shares qubits with another chain")
        seen.update(chain)
        for q in chain:
            if not graph.is_active(q):
                raise EmbeddingInvariantViolated(f"chain {i} uses inactive qubit {q}")
        for q, r in zip(chain, chain[1:]):
            if not graph.has_edge(q, r):
                raise EmbeddingInvariantViolated(f"chain {i} is not a path at ({q}, {r})")
        if not nx.is_connected(graph.graph.subgraph(chain)):
            raise EmbeddingInvariantViolated(f"chain {i} is not connected")
    n = embedding.n_logical
    for i in range(n):
        for j in range(i + 1, n):
            if not embedding.couplers.get((i, j)):
                raise EmbeddingInvariantViolated(f"no coupler between chains {i} and {j}")


def chain_length_for(n: int) -> int:
    return math.ceil(n / SHORE_SIZE) + 1


def _clique_chains(graph: ChimeraGraph, n: int, x0: int, y0: int) -> List[Tuple[int, ...]]:
    # group g, index k: vertical run down column y0+g to the diagonal cell,
    # then horizontal run along row x0+g to the right edge of the block
    t = math.ceil(n / SHORE_SIZE)
    chains = []
    for i in range(n):
        g, k = divmod(i, SHORE_SIZE)
        vertical = [graph.qubit(x0 + r, y0 + g, 0, k) for r in range(g + 1)]
        horizontal = [graph.qubit(x0 + g, y0 + c, 1, k) for c in range(g, t)]
        chains.append(tuple(vertical + horizontal))
    return chains


def clique_embed(graph: ChimeraGraph, n: int) -> CliqueEmbedding:
    """Native clique embedding of K_n with chains of length ceil(n/4) + 1."""
    if n < 2:
        raise MalformedInstance(f"clique embedding needs n >= 2, got {n}")
    t = math.ceil(n / SHORE_SIZE)
    if t > graph.grid_size:
        capacity = SHORE_SIZE * graph.grid_size
        raise TooLarge(f"K_{n} does not fit on C_{graph.grid_size} (maximum {capacity} logical variables)")

    for x0 in range(graph.grid_size - t + 1):
        for y0 in range(graph.grid_size - t + 1):
            chains = _clique_chains(graph, n, x0, y0)
            if all(graph.is_active(q) for chain in chains for q in chain):
                embedding = CliqueEmbedding.from_chains(graph, chains)
                logger.debug("embedded K_%d at block origin (%d, %d)", n, x0, y0)
                return embedding
    raise InfeasibleWithDefects(f"every {t}x{t} block placement of K_{n} touches a defective qubit")


class EmbeddedIsing(BaseModel):
    """
    Physical Ising over the chain qubits, in `embedding.qubits` order.

    `edges` holds position pairs (p < r) into that order and `weights` their
    couplings; chain edges carry -|J_F|.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    chain_strength: float
    logical: IsingInstance
    embedding: CliqueEmbedding

    @property
    def num_qubits(self) -> int:
        return len(self.h)

    def energy(self, spins) -> float:
        return float(self.energies(np.atleast_2d(spins))[0])

    def energies(self, spins_matrix) -> np.ndarray:
        s = np.atleast_2d(np.asarray(spins_matrix, dtype=float))
        if s.shape[1] != self.num_qubits:
            raise LengthMismatch(f"expected {self.num_qubits} physical spins, got {s.shape[1]}")
        pair = s[:, self.edges[:, 0]] * s[:, self.edges[:, 1]] if len(self.edges) else np.zeros((len(s), 0))
        return s @ self.h + pair @ self.weights

    def expand_logical(self, logical_spins) -> np.ndarray:
        """Chain-uniform physical state for a logical spin vector."""
        logical_spins = np.asarray(logical_spins)
        if logical_spins.shape[-1] != self.embedding.n_logical:
            raise LengthMismatch(f"expected {self.embedding.n_logical} logical spins")
        return np.repeat(logical_spins, self.embedding.chain_length, axis=-1)


def embed_ising(m: IsingInstance, e: CliqueEmbedding, chain_strength: float) -> EmbeddedIsing:
    if m.n != e.n_logical:
        raise LengthMismatch(f"Ising has {m.n} variables, embedding {e.n_logical}")
    position = {q: p for p, q in enumerate(e.qubits)}
    n_c = e.chain_length

    h = np.repeat(m.h / n_c, n_c)
    edges: List[Tuple[int, int]] = []
    weights: List[float] = []
    for chain in e.chain_edges:
        for q, r in chain:
            p1, p2 = sorted((position[q], position[r]))
            edges.append((p1, p2))
            weights.append(-abs(chain_strength))
    for i in range(m.n):
        for j in range(i + 1, m.n):
            value = float(m.J[i, j])
            if value == 0.0:
                continue
            served = e.couplers.get((i, j), ())
            if not served:
                raise MissingCoupler(f"no physical coupler for logical pair ({i}, {j})")
            for q, r in served:
                p1, p2 = sorted((position[q], position[r]))
                edges.append((p1, p2))
                weights.append(value / len(served))

    return EmbeddedIsing(
        h=h,
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        weights=np.asarray(weights, dtype=float),
        chain_strength=abs(chain_strength),
        logical=m,
        embedding=e,
    )


def chain_sums(readouts: np.ndarray, e: CliqueEmbedding) -> np.ndarray:
    readouts = np.atleast_2d(readouts)
    return readouts.reshape(len(readouts), e.n_logical, e.chain_length).sum(axis=2)


def chain_break_fraction(readouts: np.ndarray, e: CliqueEmbedding) -> np.ndarray:
    """Per read, the fraction of chains whose qubits disagree."""
    sums = chain_sums(readouts, e)
    return (np.abs(sums) != e.chain_length).mean(axis=1)


def decode_majority(readout, e: CliqueEmbedding, logical: Optional[IsingInstance] = None) -> np.ndarray:
    """
    Logical spins by majority vote over each chain.

    Tied chains are decided after the others, in index order, by the sign
    that lowers the logical energy given the spins decoded so far; +1 when
    that is also a tie or no logical problem is given.
    """
    sums = chain_sums(np.asarray(readout), e)
    decoded = np.where(sums >= 0, 1, -1).astype(np.int8)
    tied_rows, _ = np.nonzero(sums == 0)
    if logical is not None and len(tied_rows):
        coupling = logical.coupling_matrix()
        for row in np.unique(tied_rows):
            tied = np.flatnonzero(sums[row] == 0)
            known = sums[row] != 0
            for i in tied:
                field = logical.h[i] + coupling[i, known] @ decoded[row, known]
                decoded[row, i] = -1 if field > 0 else 1
                known[i] = True
    return decoded[0] if np.ndim(readout) == 1 else decoded
