"""Regular scalar quantizers and Lloyd-Max design on (0, 1).

A regular quantizer has cells (a_{k-1}, a_k] covering (0, 1) with each
word strictly inside its cell. Design alternates the nearest-neighbor
boundary rule (midpoints of adjacent words, squared-error case) with
the centroid rule against a MixtureDensity source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .densities import (
    EMPTY_CELL_MASS,
    Density,
    DomainError,
    EmptyCellError,
    MixtureDensity,
    as_mixture,
)

# minimal gap used to keep words strictly interior / strictly increasing
_SEP = 1e-14


@dataclass(frozen=True)
class RegularQuantizer:
    """Ordered cell boundaries 0 = a_0 < ... < a_M = 1 and interior words."""

    boundaries: np.ndarray
    words: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        w = np.asarray(self.words, dtype=float)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "words", w)
        if b.ndim != 1 or w.ndim != 1 or b.size != w.size + 1:
            raise ValueError("need M words and M+1 boundaries")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("boundaries must start at 0 and end at 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        if np.any(w <= b[:-1]) or np.any(w >= b[1:]):
            raise ValueError("each word must lie strictly inside its cell")

    @property
    def levels(self) -> int:
        return self.words.size

    def cell_index(self, x) -> np.ndarray:
        """0-based cell index for x in (0, 1); cells are (a_k, a_{k+1}]."""
        xa = np.asarray(x, dtype=float)
        if np.any(xa <= 0.0) or np.any(xa >= 1.0):
            raise DomainError("quantizer input must be strictly inside (0, 1)")
        idx = np.searchsorted(self.boundaries, xa, side="left") - 1
        return idx if np.ndim(x) else int(idx)

    def quantize(self, x):
        """Map x to (cell index, word value)."""
        idx = self.cell_index(x)
        return idx, self.words[idx] if np.ndim(x) else float(self.words[idx])

    def __call__(self, x):
        return self.quantize(x)[1]


def nearest_neighbor_boundaries(words: Sequence[float]) -> np.ndarray:
    """Midpoint boundaries for strictly increasing words in (0, 1)."""
    w = np.asarray(words, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("need at least one word")
    if np.any(w <= 0.0) or np.any(w >= 1.0):
        raise ValueError("words must lie strictly inside (0, 1)")
    if np.any(np.diff(w) <= 0):
        raise ValueError("words must be strictly increasing")
    return np.concatenate(([0.0], (w[:-1] + w[1:]) / 2.0, [1.0]))


def quantizer_from_words(words: Sequence[float]) -> RegularQuantizer:
    return RegularQuantizer(nearest_neighbor_boundaries(words), np.asarray(words, float))


def quantization_loss(q: RegularQuantizer, d: Density) -> float:
    """Expected squared error sum_k int_(cell k) (x - y_k)^2 dP."""
    mix = as_mixture(d)
    total = 0.0
    b, w = q.boundaries, q.words
    for k in range(q.levels):
        m0, m1, m2 = mix.partial_moments(b[k], b[k + 1])
        y = w[k]
        total += m2 - 2.0 * y * m1 + y * y * m0
    return total


def centroid_residual(q: RegularQuantizer, d: Density) -> float:
    """Max over cells of |centroid - word|; zero iff the centroid condition holds."""
    mix = as_mixture(d)
    b, w = q.boundaries, q.words
    worst = 0.0
    for k in range(q.levels):
        c = mix.cell_centroid(b[k], b[k + 1])
        worst = max(worst, abs(c - w[k]))
    return worst


@dataclass
class LloydMaxResult:
    quantizer: RegularQuantizer
    converged: bool
    iterations: int
    final_move: float
    loss_history: List[float] = field(default_factory=list)
    empty_cell_events: int = 0

    @property
    def loss(self) -> float:
        return self.loss_history[-1]


def _resolve_empty_cells(words: np.ndarray, mix: MixtureDensity) -> Tuple[np.ndarray, int]:
    """Move words of starved cells into the fattest cell, then re-sort.

    Returns (possibly new) words and the number of relocation events.
    """
    events = 0
    for _ in range(words.size):
        b = nearest_neighbor_boundaries(words)
        masses = np.array([mix.mass_in(b[k], b[k + 1]) for k in range(words.size)])
        starved = np.nonzero(masses < EMPTY_CELL_MASS)[0]
        if starved.size == 0:
            return words, events
        k = int(starved[0])
        fat = int(np.argmax(masses))
        # split the fattest cell: park the starved word between the fat
        # cell's word and its nearer boundary
        lo, hi = b[fat], b[fat + 1]
        mid = mix.cell_centroid(lo, hi)
        new = 0.5 * (mid + (lo if abs(mid - lo) > abs(hi - mid) else hi))
        words = np.sort(np.concatenate((np.delete(words, k), [new])))
        words = _separate(words)
        events += 1
    return words, events


def _separate(words: np.ndarray) -> np.ndarray:
    """Nudge coincident or boundary-touching words apart."""
    w = np.clip(words, _SEP, 1.0 - _SEP)
    for k in range(1, w.size):
        if w[k] <= w[k - 1]:
            w[k] = w[k - 1] + _SEP
    return np.minimum(w, 1.0 - _SEP)


def lloyd_max(
    d: Density,
    levels: Optional[int] = None,
    init: Optional[Sequence[float]] = None,
    max_iters: int = 10_000,
    tol: float = 1e-10,
) -> LloydMaxResult:
    """Alternate midpoint boundaries and centroid words until words settle.

    `init` defaults to the source quantiles at levels (2k-1)/(2M). The
    iteration never raises on starved cells; their words are relocated
    and the event counted.
    """
    mix = as_mixture(d)
    if init is None:
        if levels is None:
            raise ValueError("need levels or an explicit init")
        init = [mix.quantile((2 * k + 1) / (2.0 * levels)) for k in range(levels)]
    words = _separate(np.asarray(init, dtype=float))
    if levels is not None and words.size != levels:
        raise ValueError(f"init has {words.size} words, expected {levels}")
    if np.any(np.diff(words) <= 0):
        raise ValueError("init words must be strictly increasing")

    events_total = 0
    loss_history: List[float] = []
    move = np.inf
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        words, events = _resolve_empty_cells(words, mix)
        events_total += events
        b = nearest_neighbor_boundaries(words)
        new_words = np.empty_like(words)
        for k in range(words.size):
            new_words[k] = mix.cell_centroid(b[k], b[k + 1])
        new_words = _separate(new_words)
        move = float(np.max(np.abs(new_words - words)))
        words = new_words
        loss_history.append(quantization_loss(
            RegularQuantizer(nearest_neighbor_boundaries(words), words), mix))
        if move < tol:
            converged = True
            break

    q = RegularQuantizer(nearest_neighbor_boundaries(words), words)
    return LloydMaxResult(q, converged, it, move, loss_history, events_total)


def multi_start_lloyd_max(
    d: Density,
    levels: int,
    n_starts: int = 8,
    seed: int = 0,
    warm_start: Optional[RegularQuantizer] = None,
    max_iters: int = 10_000,
    tol: float = 1e-10,
) -> LloydMaxResult:
    """Best of several Lloyd-Max runs: quantile init, jittered variants,
    and an optional warm start. Returns the minimum-loss result."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    mix = as_mixture(d)
    quant = np.array([mix.quantile((2 * k + 1) / (2.0 * levels)) for k in range(levels)])
    inits = []
    if warm_start is not None:
        if warm_start.levels != levels:
            raise ValueError("warm start has wrong number of levels")
        inits.append(warm_start.words.copy())
    inits.append(quant)
    rng = np.random.default_rng(seed)
    while len(inits) < n_starts + (warm_start is not None):
        jitter = rng.uniform(-0.5, 0.5, levels) / (2.0 * levels)
        cand = np.sort(np.clip(quant + jitter, 1e-6, 1.0 - 1e-6))
        inits.append(_separate(cand))

    best: Optional[LloydMaxResult] = None
    for init in inits:
        res = lloyd_max(mix, levels=levels, init=init, max_iters=max_iters, tol=tol)
        if best is None or res.loss < best.loss:
            best = res
    return best
