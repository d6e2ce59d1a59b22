"""Monte Carlo oracle: trajectory simulation independent of the linear algebra.

Every uniform variate is addressed by a fixed Philox counter block
``step * trials + trial`` under the run's seed, so trial i sees its own
counter-based stream no matter how the trial axis is split across threads.
Results are therefore bit-identical for any value of MARKOV_RANK_THREADS.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import analyze_structure, as_distribution, as_transition_matrix
from .errors import HorizonTooSmall, NotIrreducible, ValidationError
from .spectral import stationary
from .validation import check_hole

__all__ = [
    "SimConfig",
    "SurvivalEstimate",
    "sample_hitting_time",
    "estimate_survival",
    "estimate_tv",
    "thread_count",
    "DEFAULT_HORIZON",
]

DEFAULT_HORIZON = 500

_Z95 = 1.96


@dataclass(frozen=True)
class SimConfig:
    """Trial count, seed, and per-trajectory step budget for one run."""

    trials: int
    seed: int
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class SurvivalEstimate:
    """Monte Carlo estimate of P(T > n) with a 95% normal-approximation CI."""

    n: int
    p_hat: float
    ci_half_width: float
    trials: int


def thread_count() -> int:
    """Worker count from MARKOV_RANK_THREADS; defaults to 1."""
    raw = os.environ.get("MARKOV_RANK_THREADS", "")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _cumulative_rows(entries):
    cum = np.cumsum(entries, axis=1)
    cum[:, -1] = 1.0
    return cum


def _uniform_cells(seed, offset, count):
    # cell i occupies Philox counter block offset+i outright (first of the
    # block's four doubles); advance() is avoided because its units do not
    # line up with Generator.random draws, which would break slice alignment
    bg = np.random.Philox(key=np.uint64(seed), counter=int(offset))
    raw = np.random.Generator(bg).random(4 * count)
    return raw[0::4]


def sample_hitting_time(P, p, hole, rng_stream, horizon=DEFAULT_HORIZON) -> int:
    """Draw one trajectory and return min{n >= 0 : X_n in hole}.

    X_0 is drawn from ``p``; a start inside the hole returns 0. Trajectories
    still alive after ``horizon`` steps return horizon + 1 as a censoring
    marker. ``rng_stream`` is any numpy Generator; this scalar path is the
    slow, obviously-correct reference for the vectorized estimators.
    """
    tm = as_transition_matrix(P)
    dist = as_distribution(p, tm.n)
    hole_set = check_hole(hole, tm.n)

    init_cum = np.cumsum(dist.weights)
    init_cum[-1] = 1.0
    row_cum = _cumulative_rows(tm.entries)

    state = int(np.searchsorted(init_cum, rng_stream.random(), side="right"))
    state = min(state, tm.n - 1)
    if state in hole_set:
        return 0
    for step in range(1, horizon + 1):
        state = int(np.searchsorted(row_cum[state], rng_stream.random(), side="right"))
        state = min(state, tm.n - 1)
        if state in hole_set:
            return step
    return horizon + 1


def _run_slice(row_cum, init_cum, hole_mask, seed, total, lo, hi, n_steps):
    # simulate trials lo..hi-1 through n_steps transitions; -1 marks alive
    width = hi - lo
    n = row_cum.shape[0]
    u = _uniform_cells(seed, lo, width)
    state = np.minimum(np.searchsorted(init_cum, u, side="right"), n - 1)
    hit = np.full(width, -1, dtype=np.int64)
    hit[hole_mask[state]] = 0
    alive = hit < 0
    for step in range(1, n_steps + 1):
        if not alive.any():
            break
        u = _uniform_cells(seed, step * total + lo, width)
        st = state[alive]
        nxt = (u[alive][:, None] > row_cum[st]).sum(axis=1)
        state[alive] = np.minimum(nxt, n - 1)
        newly = alive & hole_mask[state]
        hit[newly] = step
        alive &= ~newly
    return hit


def _evolve_slice(row_cum, init_cum, seed, total, lo, hi, n_steps):
    width = hi - lo
    n = row_cum.shape[0]
    u = _uniform_cells(seed, lo, width)
    state = np.minimum(np.searchsorted(init_cum, u, side="right"), n - 1)
    for step in range(1, n_steps + 1):
        u = _uniform_cells(seed, step * total + lo, width)
        nxt = (u[:, None] > row_cum[state]).sum(axis=1)
        state = np.minimum(nxt, n - 1)
    return np.bincount(state, minlength=n)


def _slices(total, workers):
    workers = min(workers, total)
    bounds = np.linspace(0, total, workers + 1, dtype=int)
    return [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]


def estimate_survival(P, p, hole, ns, cfg: SimConfig):
    """Estimate P(T > n) for each requested n in one pass of cfg.trials runs.

    Parameters
    ----------
    ns : iterable of int
        Step indices, each below cfg.horizon (HorizonTooSmall otherwise).
    cfg : SimConfig

    Returns
    -------
    list of SurvivalEstimate
        In the order the steps were requested. Censored trajectories count
        as survivors at every requested step. The CI uses a variance floor
        of 1/trials so endpoints p_hat in {0, 1} keep a nonzero width.
    """
    tm = as_transition_matrix(P)
    dist = as_distribution(p, tm.n)
    hole_set = check_hole(hole, tm.n)
    steps = [int(n) for n in ns]
    if not steps:
        raise ValidationError("at least one step index is required")
    if min(steps) < 0:
        raise ValidationError("step indices must be >= 0")
    if max(steps) >= cfg.horizon:
        raise HorizonTooSmall(
            f"requested step {max(steps)} needs horizon > {max(steps)}, have {cfg.horizon}"
        )

    row_cum = _cumulative_rows(tm.entries)
    init_cum = np.cumsum(dist.weights)
    init_cum[-1] = 1.0
    hole_mask = np.zeros(tm.n, dtype=bool)
    hole_mask[list(hole_set)] = True
    n_steps = min(cfg.horizon, max(steps))

    parts = _slices(cfg.trials, thread_count())
    if len(parts) == 1:
        lo, hi = parts[0]
        hits = [_run_slice(row_cum, init_cum, hole_mask, cfg.seed, cfg.trials, lo, hi, n_steps)]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            hits = list(
                pool.map(
                    lambda ab: _run_slice(
                        row_cum, init_cum, hole_mask, cfg.seed, cfg.trials, ab[0], ab[1], n_steps
                    ),
                    parts,
                )
            )
    T = np.concatenate(hits)

    out = []
    for n in steps:
        survivors = int(np.count_nonzero((T < 0) | (T > n)))
        p_hat = survivors / cfg.trials
        var = max(p_hat * (1.0 - p_hat), 1.0 / cfg.trials)
        out.append(
            SurvivalEstimate(
                n=n,
                p_hat=p_hat,
                ci_half_width=_Z95 * (var / cfg.trials) ** 0.5,
                trials=cfg.trials,
            )
        )
    return out


def estimate_tv(P, start, n, cfg: SimConfig) -> float:
    """Empirical L1 distance of the step-n state histogram from stationarity.

    Plain multinomial sampling, so the estimate carries an O(sqrt(n_states /
    trials)) noise floor even at stationarity; report it alongside.
    """
    tm = as_transition_matrix(P)
    report = analyze_structure(tm)
    if not report.irreducible:
        raise NotIrreducible("estimate_tv requires an irreducible chain")
    dist = as_distribution(start, tm.n)
    n = int(n)
    if n < 0:
        raise ValidationError("step index must be >= 0")

    pi = stationary(tm).weights
    row_cum = _cumulative_rows(tm.entries)
    init_cum = np.cumsum(dist.weights)
    init_cum[-1] = 1.0

    parts = _slices(cfg.trials, thread_count())
    if len(parts) == 1:
        lo, hi = parts[0]
        counts = [_evolve_slice(row_cum, init_cum, cfg.seed, cfg.trials, lo, hi, n)]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            counts = list(
                pool.map(
                    lambda ab: _evolve_slice(
                        row_cum, init_cum, cfg.seed, cfg.trials, ab[0], ab[1], n
                    ),
                    parts,
                )
            )
    hist = np.sum(counts, axis=0)
    return float(np.abs(hist / cfg.trials - pi).sum())
