"""Sink ranking: which hole absorbs the chain fastest.

Survival mass after n steps is a vector-matrix iteration against the punched
matrix. Escape rates come from :func:`markov_rank.spectral.escape_rate`, and
two-sided geometric envelopes around every survival curve follow from the
principal right vector of the punched matrix. Crossing certificates combine
the envelopes of two holes into a step index past which the ordering of the
two curves is guaranteed, not just observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Distribution, as_distribution, as_transition_matrix, remove_states
from .errors import DegenerateInit, RatesNotSeparated, ReducibleAfterRemoval
from .spectral import DEFAULT_TOL, EscapeRate, escape_rate
from .validation import check_hole

__all__ = [
    "SurvivalCurve",
    "Envelope",
    "SinkRanking",
    "CrossingCertificate",
    "survival_curve",
    "envelope",
    "rank_sinks",
    "crossing_time",
    "UNDERFLOW_FLOOR",
]

DEFAULT_RANK_TOL = 1e-9

# survival masses below this are cut off rather than carried as denormals
UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Survival mass M_n for n = 0..len(values)-1.

    ``truncated_at`` is the first step whose mass underflowed (None if the
    full requested range was computed); ``values`` stops just before it.
    """

    hole: frozenset
    init: Distribution
    values: np.ndarray
    n_max: int
    truncated_at: int | None = None


@dataclass(frozen=True, eq=False)
class Envelope:
    """Two-sided geometric bounds c1*mu^n <= M_n <= c2*mu^n for one hole."""

    hole: frozenset
    mu: float
    lam: float
    c1: float
    c2: float
    h: np.ndarray
    h_min: float

    def lower(self, n):
        return self.c1 * self.mu ** np.asarray(n, dtype=float)

    def upper(self, n):
        return self.c2 * self.mu ** np.asarray(n, dtype=float)


@dataclass(frozen=True, eq=False)
class SinkRanking:
    """Escape data for every singleton hole, fastest escape first.

    ``records[k]`` is the EscapeRate for hole {k}. ``ranking`` orders states
    by decreasing escape rate; ``ties`` groups states whose rates are within
    rank_tol of their neighbor in that order.
    """

    records: tuple
    ranking: tuple
    ties: tuple
    rank_tol: float


@dataclass(frozen=True, eq=False)
class CrossingCertificate:
    """Certified and observed step indices where one curve drops below another.

    For every n >= n_star_certified the fast hole's survival mass is provably
    below the slow hole's; n0_empirical is where the computed curves actually
    stopped violating that order (0 if they never did).
    """

    fast: Envelope
    slow: Envelope
    n_star_certified: int
    n0_empirical: int
    horizon_used: int


def survival_curve(P, hole, init, n_max) -> SurvivalCurve:
    """Survival masses M_0..M_n_max for an initial law and a hole.

    Parameters
    ----------
    P : TransitionMatrix or array-like
    hole : int or iterable of int
    init : Distribution or array-like
        Initial law over all n states; its mass on the hole must be < 1.
    n_max : int
        Last step index requested.

    Notes
    -----
    Computed by iterating the surviving row vector against the punched
    matrix, never by matrix powers. If the mass underflows below 1e-300 the
    curve is truncated at that step.
    """
    tm = as_transition_matrix(P)
    hole_set = check_hole(hole, tm.n)
    p = as_distribution(init, tm.n)
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")

    sub = remove_states(tm, hole_set)
    v = p.weights[list(sub.kept)].copy()
    if v.sum() <= 0.0:
        raise DegenerateInit("initial distribution has no mass outside the hole")

    values = [v.sum()]
    truncated_at = None
    for k in range(1, n_max + 1):
        v = v @ sub.entries
        mass = float(v.sum())
        if mass < UNDERFLOW_FLOOR:
            truncated_at = k
            break
        values.append(mass)
    out = np.array(values)
    out.setflags(write=False)
    return SurvivalCurve(
        hole=hole_set, init=p, values=out, n_max=n_max, truncated_at=truncated_at
    )


def envelope(P, hole, init, tol=DEFAULT_TOL) -> Envelope:
    """Constructive geometric envelope around the survival curve of one hole.

    Requires the punched matrix to be irreducible. With h the right principal
    vector scaled to max 1 and b = p_surv . h, the bounds are c1 = b * h_min
    and c2 = b / h_min: sandwiching the all-ones vector between h/h_max and
    h/h_min turns the exact identity for p Q^n h into two-sided bounds on the
    mass.
    """
    tm = as_transition_matrix(P)
    er = escape_rate(tm, hole, tol=tol)
    if er.reducible_after_removal or er.perron_data.degenerate:
        raise ReducibleAfterRemoval(
            f"punched matrix for hole {sorted(er.sub.hole)} is not irreducible"
        )
    p = as_distribution(init, tm.n)
    v = p.weights[list(er.sub.kept)]
    if v.sum() <= 0.0:
        raise DegenerateInit("initial distribution has no mass outside the hole")

    h = er.perron_data.right
    h_min = float(np.min(h))
    b = float(v @ h)
    return Envelope(
        hole=er.sub.hole,
        mu=er.mu,
        lam=er.lam,
        c1=b * h_min,
        c2=b / h_min,
        h=h,
        h_min=h_min,
    )


def _lam_gap(a, b):
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b)


def rank_sinks(P, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL) -> SinkRanking:
    """Rank every state by the escape rate of its singleton hole.

    Parameters
    ----------
    P : TransitionMatrix or array-like
        Irreducible row-stochastic matrix.
    rank_tol : float
        Two adjacent rates closer than this are reported as tied rather
        than given a fabricated strict order.
    tol : float
        Residual tolerance for the eigensolves.

    Returns
    -------
    SinkRanking
        Fastest-escaping state first. A nilpotent punched matrix gives an
        infinite rate and therefore ranks first.
    """
    tm = as_transition_matrix(P)
    records = tuple(escape_rate(tm, k, tol=tol) for k in range(tm.n))

    # sort on mu ascending, which is lam descending without inf arithmetic
    ranking = tuple(sorted(range(tm.n), key=lambda k: (records[k].mu, k)))

    ties = []
    group = [ranking[0]]
    for prev, cur in zip(ranking, ranking[1:]):
        if _lam_gap(records[prev].lam, records[cur].lam) <= rank_tol:
            group.append(cur)
        else:
            ties.append(tuple(group))
            group = [cur]
    ties.append(tuple(group))

    return SinkRanking(records=records, ranking=ranking, ties=tuple(ties), rank_tol=rank_tol)


def crossing_time(
    P, fast_hole, slow_hole, p, q, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL
) -> CrossingCertificate:
    """Certify the step past which ``fast_hole``'s survival is below ``slow_hole``'s.

    Parameters
    ----------
    P : TransitionMatrix or array-like
    fast_hole, slow_hole : int or iterable of int
        Holes whose escape rates must differ by more than rank_tol, fast
        strictly larger; otherwise RatesNotSeparated is raised.
    p, q : Distribution or array-like
        Initial laws for the fast and slow curves respectively.

    Returns
    -------
    CrossingCertificate
        n_star_certified is the smallest n where the fast upper envelope
        drops strictly below the slow lower envelope, so the ordering holds
        for every n >= n_star_certified regardless of anything the finite
        curves did. n0_empirical is the last observed violation plus one,
        from curves computed out to n_star_certified.
    """
    tm = as_transition_matrix(P)
    env_fast = envelope(tm, fast_hole, p, tol=tol)
    env_slow = envelope(tm, slow_hole, q, tol=tol)

    if not env_fast.lam > env_slow.lam + rank_tol:
        raise RatesNotSeparated(
            f"escape rates {env_fast.lam!r} (fast) and {env_slow.lam!r} (slow) "
            f"are not separated by more than {rank_tol}"
        )

    # smallest integer n with c2_f mu_f^n < c1_s mu_s^n, compared in log
    # space so the guard cannot underflow for large n
    x = math.log(env_fast.c2 / env_slow.c1) / (env_fast.lam - env_slow.lam)
    n_star = 0 if x < 0 else int(math.floor(x)) + 1
    lc2f, lc1s = math.log(env_fast.c2), math.log(env_slow.c1)
    while not lc2f - n_star * env_fast.lam < lc1s - n_star * env_slow.lam:
        n_star += 1  # guards the float boundary; terminates immediately after

    curve_fast = survival_curve(tm, fast_hole, p, n_star)
    curve_slow = survival_curve(tm, slow_hole, q, n_star)
    scan = min(len(curve_fast.values), len(curve_slow.values))
    n0 = 0
    for n in range(scan):
        if curve_fast.values[n] >= curve_slow.values[n]:
            n0 = n + 1
    return CrossingCertificate(
        fast=env_fast,
        slow=env_slow,
        n_star_certified=n_star,
        n0_empirical=n0,
        horizon_used=n_star,
    )
