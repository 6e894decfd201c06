"""Path-sampling simulator of signal propagation, empirical loss
decomposition, and translation-chain / shared-vocabulary analysis.

Signals originate at some agent's physical source and hop through the
network, being re-quantized (and noised) at every transmission. Sampling
is vectorized by grouping in-flight samples per agent, so million-sample
estimates stay cheap; a scalar `sample_signal` is kept for tracing single
draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .densities import NoiseKernel, POINT_KERNEL, KernelShape
from .game import GameState, QuantizationGame
from .quantizers import RegularQuantizer

DEPTH_CAP = 64

# keep clamped samples strictly inside the open interval
_CLAMP = 1e-12


class NoChainError(LookupError):
    """No communication chain exists between the requested agents."""


@dataclass
class SignalSample:
    origin_agent: int
    true_value: float
    observed_value: float
    path: List[int]  # origin first, receiver last
    cycle_count: int
    truncated: bool = False


def sample_signal(i: int, state: GameState, game: QuantizationGame,
                  rng: np.random.Generator, depth_cap: int = DEPTH_CAP) -> SignalSample:
    """Draw one signal as observed by agent i, recording its path."""
    P = game.comm.entries
    route = [i]  # receiver-first; reversed into the path at the end
    truncated = False
    while True:
        cur = route[-1]
        j = int(np.searchsorted(np.cumsum(P[cur]), rng.random(), side="right"))
        j = min(j, game.n_agents - 1)
        if j == cur:
            break
        route.append(j)
        if len(route) > depth_cap:
            truncated = True
            break
    origin = route[-1]
    a = game.agents[origin].physical
    x = float(rng.beta(a.alpha, a.beta_param))
    value = x
    for hop in range(len(route) - 1, 0, -1):
        transmitter = route[hop]
        value = state.quantizers[transmitter](value)
        if game.noise.shape is not KernelShape.POINT:
            value = float(np.clip(value + game.noise.sample(rng),
                                  _CLAMP, 1.0 - _CLAMP))
    path = list(reversed(route))
    return SignalSample(
        origin_agent=origin,
        true_value=x,
        observed_value=value,
        path=path,
        cycle_count=path.count(i) - 1,
        truncated=truncated,
    )


def sample_paths(i: int, state: GameState, game: QuantizationGame, n: int,
                 rng: np.random.Generator, depth_cap: int = DEPTH_CAP):
    """Vectorized batch of n signals observed at agent i.

    Returns (x_true, x_obs, path_lengths, n_truncated, n_clamped).
    Truncated samples carry NaN values and must be masked by callers.
    """
    P = game.comm.entries
    cum = np.cumsum(P, axis=1)
    n_agents = game.n_agents

    cur = np.full(n, i, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    routes = [cur.copy()]
    for _ in range(depth_cap):
        if not active.any():
            break
        u = rng.random(n)
        nxt = cur.copy()
        for a in np.unique(cur[active]):
            m = active & (cur == a)
            nxt[m] = np.minimum(
                np.searchsorted(cum[a], u[m], side="right"), n_agents - 1
            )
        terminal = active & (nxt == cur)
        active = active & ~terminal
        step = np.where(active, nxt, -1)
        cur = np.where(active, nxt, cur)
        if active.any():
            routes.append(step)

    truncated = active
    route = np.stack(routes, axis=1)  # (n, depth); -1 past the terminal hop
    lengths = (route >= 0).sum(axis=1)

    # physical draw at each sample's terminal agent
    x = np.full(n, np.nan)
    terminal_agent = route[np.arange(n), lengths - 1]
    for a in range(n_agents):
        m = (~truncated) & (terminal_agent == a)
        if m.any():
            d = game.agents[a].physical
            x[m] = rng.beta(d.alpha, d.beta_param, int(m.sum()))

    # propagate back towards the receiver: quantize at each transmitter,
    # then add channel noise
    value = x.copy()
    n_clamped = 0
    max_len = int(lengths.max(initial=1))
    for pos in range(max_len - 2, -1, -1):
        m = (~truncated) & (lengths > pos + 1)
        if not m.any():
            continue
        transmitter = route[:, pos + 1]
        for a in np.unique(transmitter[m]):
            ma = m & (transmitter == a)
            q = state.quantizers[a]
            idx = np.searchsorted(q.boundaries, value[ma], side="left") - 1
            value[ma] = q.words[np.clip(idx, 0, q.levels - 1)]
        if game.noise.shape is not KernelShape.POINT:
            noised = value[m] + game.noise.sample(rng, int(m.sum()))
            clipped = np.clip(noised, _CLAMP, 1.0 - _CLAMP)
            n_clamped += int(np.sum(noised != clipped))
            value[m] = clipped

    return x, value, lengths, int(truncated.sum()), n_clamped


@dataclass
class LossReport:
    """Empirical loss decomposition: total = quantization + communication
    + cross, an exact per-sample identity."""

    total: float
    quantization: float
    communication: float
    cross: float
    total_se: float
    quantization_se: float
    communication_se: float
    cross_se: float
    n_samples: int
    n_truncated: int = 0
    n_clamped: int = 0


def estimate_losses(i: int, state: GameState, game: QuantizationGame,
                    n: int, seed: int = 0) -> LossReport:
    if n < 1:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    x, xhat, _lengths, n_trunc, n_clamp = sample_paths(i, state, game, n, rng)
    ok = ~np.isnan(x)
    x, xhat = x[ok], xhat[ok]
    q = state.quantizers[i]
    idx = np.searchsorted(q.boundaries, xhat, side="left") - 1
    word = q.words[np.clip(idx, 0, q.levels - 1)]
    total = (x - word) ** 2
    quant = (xhat - word) ** 2
    comm = (x - xhat) ** 2
    cross = total - quant - comm
    m = x.size

    def se(v):
        return float(np.std(v, ddof=1) / np.sqrt(m)) if m > 1 else float("nan")

    return LossReport(
        total=float(total.mean()),
        quantization=float(quant.mean()),
        communication=float(comm.mean()),
        cross=float(cross.mean()),
        total_se=se(total),
        quantization_se=se(quant),
        communication_se=se(comm),
        cross_se=se(cross),
        n_samples=m,
        n_truncated=n_trunc,
        n_clamped=n_clamp,
    )


def true_env_residuals(i: int, state: GameState, game: QuantizationGame,
                       n_samples: int = 1_000_000, seed: int = 0):
    """Per-word residual mean(x_true | word k) - y_k with standard errors.

    Zero residuals (within noise) certify the centroid condition against
    the true environment.
    """
    rng = np.random.default_rng(seed)
    x, xhat, _lengths, _t, _c = sample_paths(i, state, game, n_samples, rng)
    ok = ~np.isnan(x)
    x, xhat = x[ok], xhat[ok]
    q = state.quantizers[i]
    idx = np.searchsorted(q.boundaries, xhat, side="left") - 1
    idx = np.clip(idx, 0, q.levels - 1)
    resid = np.full(q.levels, np.nan)
    se = np.full(q.levels, np.nan)
    counts = np.zeros(q.levels, dtype=int)
    for k in range(q.levels):
        m = idx == k
        counts[k] = int(m.sum())
        if counts[k] > 1:
            resid[k] = float(x[m].mean() - q.words[k])
            se[k] = float(np.std(x[m], ddof=1) / np.sqrt(counts[k]))
    return resid, se, counts


def shared_vocabulary(quantizers: Sequence[RegularQuantizer],
                      agents: Optional[Sequence[int]] = None):
    """Whether the agent set shares a vocabulary: every index-k cell
    intersection is a nonempty open interval containing every member's
    k-th word. Returns (ok, witness intervals)."""
    if agents is None:
        agents = range(len(quantizers))
    qs = [quantizers[a] for a in agents]
    levels = {q.levels for q in qs}
    if len(levels) != 1:
        raise ValueError("agents must share the number of levels")
    M = levels.pop()
    witnesses = []
    ok = True
    for k in range(M):
        lo = max(q.boundaries[k] for q in qs)
        hi = min(q.boundaries[k + 1] for q in qs)
        witnesses.append((float(lo), float(hi)))
        if lo >= hi:
            ok = False
            continue
        for q in qs:
            if not lo < q.words[k] < hi:
                ok = False
    return ok, witnesses


@dataclass
class ChainReport:
    chain: List[int]
    x: float
    hop_words: List[float]
    final_word: float
    translation_loss: float  # squared error of the final word vs the input
    word_drift: float  # |final word - first word|, the translation-bound quantity
    cell_index: int
    bound: Optional[float]  # cell-intersection width when the chain shares a vocabulary
    n_clamped: int = 0


def chain_translate(quantizers: Sequence[RegularQuantizer], chain: Sequence[int],
                    x: float, noise: NoiseKernel = POINT_KERNEL,
                    rng: Optional[np.random.Generator] = None) -> ChainReport:
    """Push input x through the chain, re-quantizing at every agent."""
    chain = list(chain)
    if len(chain) < 2:
        raise ValueError("a chain needs at least two agents")
    if noise.shape is not KernelShape.POINT and rng is None:
        raise ValueError("noisy translation needs an rng")
    k, w = quantizers[chain[0]].quantize(x)
    hop_words = [w]
    clamped = 0
    for agent in chain[1:]:
        v = w
        if noise.shape is not KernelShape.POINT:
            nv = v + float(noise.sample(rng))
            v = float(np.clip(nv, _CLAMP, 1.0 - _CLAMP))
            clamped += int(v != nv)
        _, w = quantizers[agent].quantize(v)
        hop_words.append(w)
    shared, witnesses = shared_vocabulary(quantizers, chain)
    bound = witnesses[k][1] - witnesses[k][0] if shared else None
    return ChainReport(
        chain=chain,
        x=float(x),
        hop_words=hop_words,
        final_word=float(w),
        translation_loss=float((w - x) ** 2),
        word_drift=float(abs(w - hop_words[0])),
        cell_index=int(k),
        bound=bound,
        n_clamped=clamped,
    )


def enumerate_chains(P, i: int, j: int, max_len: int) -> List[List[int]]:
    """All directed communication chains i -> j of length <= max_len,
    following edges with positive frequency (transmitter to receiver).
    Chains may revisit agents."""
    entries = getattr(P, "entries", np.asarray(P))
    n = entries.shape[0]
    receivers = [
        [m for m in range(n) if m != l and entries[m, l] > 0.0] for l in range(n)
    ]
    out: List[List[int]] = []
    stack = [[i]]
    while stack:
        w = stack.pop()
        if w[-1] == j and len(w) >= 2:
            out.append(w)
        if len(w) < max_len:
            for m in receivers[w[-1]]:
                stack.append(w + [m])
    return out


@dataclass
class ProbeReport:
    source: int
    target: int
    n_chains: int
    inputs: np.ndarray
    spread_per_input: np.ndarray
    spread: float
    worst_input: float


def path_dependence_probe(quantizers: Sequence[RegularQuantizer], P,
                          i: int, j: int, max_len: int = 5,
                          n_inputs: int = 101) -> ProbeReport:
    """Compare final words across every chain i -> j of bounded length on a
    grid of inputs (noiseless). Zero spread means path independence on the
    probe set."""
    chains = enumerate_chains(P, i, j, max_len)
    if not chains:
        raise NoChainError(f"no communication chain from {i} to {j} "
                           f"within length {max_len}")
    grid = np.linspace(0.0, 1.0, n_inputs + 2)[1:-1]
    finals = np.empty((len(chains), grid.size))
    for c, chain in enumerate(chains):
        v = grid
        for pos, agent in enumerate(chain):
            q = quantizers[agent]
            idx = np.clip(np.searchsorted(q.boundaries, v, side="left") - 1,
                          0, q.levels - 1)
            v = q.words[idx]
        finals[c] = v
    spread = finals.max(axis=0) - finals.min(axis=0)
    worst = int(np.argmax(spread))
    return ProbeReport(
        source=i,
        target=j,
        n_chains=len(chains),
        inputs=grid,
        spread_per_input=spread,
        spread=float(spread[worst]),
        worst_input=float(grid[worst]),
    )


def path_length_fraction(i: int, state: GameState, game: QuantizationGame,
                         n: int, seed: int = 0, length: int = 1) -> float:
    """Empirical fraction of signals at agent i whose path has the given
    length (length 1 = direct physical observation)."""
    rng = np.random.default_rng(seed)
    _x, _v, lengths, _t, _c = sample_paths(i, state, game, n, rng)
    return float(np.mean(lengths == length))
