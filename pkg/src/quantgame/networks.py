"""Communication structure: the row-stochastic matrix P, graph queries,
and construction of true / observed environment mixtures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .densities import BetaDensity, MixtureDensity, NoiseKernel, POINT_KERNEL

_ROW_TOL = 1e-12


class IllPosedEnvironmentError(ValueError):
    """The true-environment linear system is singular (a closed
    communication cycle with no physical observation)."""


class StateConsistencyError(ValueError):
    """A peer's word-usage vector is not a probability vector."""


@dataclass(frozen=True)
class CommMatrix:
    """Row-stochastic N x N frequency matrix; P[i, j] is how often agent i
    hears from agent j (diagonal = own-environment fraction)."""

    entries: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", p)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("communication matrix must be square")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("entries must lie in [0, 1]")
        rows = p.sum(axis=1)
        bad = np.nonzero(np.abs(rows - 1.0) > _ROW_TOL)[0]
        if bad.size:
            raise ValueError(f"row {bad[0]} sums to {rows[bad[0]]!r}, expected 1")

    @property
    def n_agents(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, key):
        return self.entries[key]

    def peers_of(self, i: int) -> List[int]:
        """Agents j != i that agent i listens to."""
        return [j for j in range(self.n_agents) if j != i and self.entries[i, j] > 0.0]


@dataclass(frozen=True)
class AgentSpec:
    id: int
    physical: BetaDensity
    levels: int

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be at least 1")


def detect_acyclic(P: CommMatrix) -> Tuple[bool, Optional[List[int]]]:
    """Kahn's algorithm on the transmitter->receiver graph (edge j->i iff
    i != j and P[i, j] > 0). On success the order lists every agent after
    all agents it listens to."""
    n = P.n_agents
    listens = [P.peers_of(i) for i in range(n)]
    indeg = [len(listens[i]) for i in range(n)]
    queue = [i for i in range(n) if indeg[i] == 0]
    order: List[int] = []
    while queue:
        j = queue.pop(0)
        order.append(j)
        for i in range(n):
            if j in listens[i]:
                indeg[i] -= 1
                if indeg[i] == 0:
                    queue.append(i)
    if len(order) != n:
        return False, None
    return True, order


def true_environment(P: CommMatrix, physicals: Sequence[BetaDensity]) -> List[MixtureDensity]:
    """Each agent's true environment as a beta mixture.

    Solves the self-consistency system p_sp = diag(P) p_phys + P_off p_sp,
    giving weights W = (I - P_off)^{-1} diag(P); rows of W are stochastic.
    """
    n = P.n_agents
    if len(physicals) != n:
        raise ValueError("need one physical density per agent")
    p = P.entries
    off = p - np.diag(np.diag(p))
    lhs = np.eye(n) - off
    if abs(np.linalg.det(lhs)) < 1e-12:
        raise IllPosedEnvironmentError(
            "closed communication cycle with no physical observation"
        )
    w = np.linalg.solve(lhs, np.diag(np.diag(p)))
    if np.any(w < -1e-10):
        raise IllPosedEnvironmentError("negative environment weights")
    w = np.clip(w, 0.0, None)
    out = []
    for i in range(n):
        row = w[i] / w[i].sum()
        out.append(MixtureDensity(
            continuous_parts=tuple((row[j], physicals[j]) for j in range(n))))
    return out


def true_environment_weights(P: CommMatrix) -> np.ndarray:
    """The mixing weight matrix W = (I - P_off)^{-1} diag(P)."""
    p = P.entries
    off = p - np.diag(np.diag(p))
    return np.linalg.solve(np.eye(P.n_agents) - off, np.diag(np.diag(p)))


def observed_environment(
    i: int,
    physical: BetaDensity,
    quantizers: Sequence,
    usage: Sequence[np.ndarray],
    P: CommMatrix,
    noise: NoiseKernel = POINT_KERNEL,
) -> MixtureDensity:
    """Mixture actually seen by agent i: own physical source with weight
    P[i, i], plus one (possibly smeared) atom per peer word, weighted by
    the peer's communication frequency times its word-usage probability."""
    atoms = []
    for j in P.peers_of(i):
        u = np.asarray(usage[j], dtype=float)
        if abs(u.sum() - 1.0) > 1e-9 or np.any(u < 0.0):
            raise StateConsistencyError(
                f"usage vector of agent {j} sums to {u.sum()!r}, expected 1"
            )
        words = quantizers[j].words
        if u.size != words.size:
            raise StateConsistencyError(
                f"usage vector of agent {j} has {u.size} entries for {words.size} words"
            )
        for k in range(words.size):
            atoms.append((P[i, j] * u[k], float(words[k]), noise))
    return MixtureDensity(
        continuous_parts=((float(P[i, i]), physical),),
        smeared_atoms=tuple(atoms),
    )


def word_usage(observed: MixtureDensity, quantizer) -> np.ndarray:
    """p_k = mass of the observed mixture in cell k of the quantizer."""
    b = quantizer.boundaries
    u = np.array([observed.mass_in(b[k], b[k + 1]) for k in range(quantizer.levels)])
    return u / u.sum()
