"""Perron root solvers: spectral radius, stationary vector, escape rates.

The workhorse is a two-sided power iteration with a Rayleigh quotient
estimate. It converges fast on primitive matrices; on periodic or otherwise
awkward inputs it stalls, and we fall back to a dense eigensolve. Nilpotent
inputs are detected exactly up front (a nonnegative matrix has spectral
radius 0 iff its positive-entry digraph is acyclic), so ``mu = 0`` never
depends on a floating-point threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import (
    Distribution,
    SubMarkovMatrix,
    TransitionMatrix,
    analyze_structure,
    as_transition_matrix,
    remove_states,
)
from .errors import ConvergenceFailure, NotIrreducible
from .validation import as_float_matrix, check_nonnegative

__all__ = ["PerronData", "EscapeRate", "perron", "stationary", "escape_rate"]

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000

# iterations without residual improvement before giving up on power iteration
_STALL_LIMIT = 50

# extra improving iterations allowed after the tolerance is already met
_POLISH_LIMIT = 200


@dataclass(frozen=True, eq=False)
class PerronData:
    """Principal eigendata of a nonnegative square matrix.

    ``left`` is normalized to sum 1, ``right`` to maximum entry 1. For a
    degenerate (nilpotent) matrix ``mu`` is 0, ``lam`` is ``inf`` and the
    vectors are None. ``residual`` is the larger of the two infinity-norm
    eigen-residuals on the normalized vectors.
    """

    mu: float
    lam: float
    left: np.ndarray | None
    right: np.ndarray | None
    residual: float
    iterations: int
    degenerate: bool
    method: str


@dataclass(frozen=True, eq=False)
class EscapeRate:
    """Escape rate of one hole: decay factor, rate, and quasi-stationary vector."""

    mu: float
    lam: float
    qsd: Distribution | None
    sub: SubMarkovMatrix
    reducible_after_removal: bool
    perron_data: PerronData


def _as_square_nonneg(Q) -> np.ndarray:
    if isinstance(Q, (TransitionMatrix, SubMarkovMatrix)):
        arr = Q.entries
    else:
        arr = as_float_matrix(Q)
    check_nonnegative(arr)
    return arr


def _residual(arr, mu, left, right):
    rl = np.max(np.abs(left @ arr - mu * left))
    rr = np.max(np.abs(arr @ right - mu * right))
    return max(rl, rr)


def _clip_tiny_negatives(v, floor=1e-12):
    # dense eigensolves can leave -1e-17 noise on components that are really 0
    if np.any(v < -floor * max(1.0, np.max(np.abs(v)))):
        return v
    return np.clip(v, 0.0, None)


def _dense_perron(arr, tol, iterations_used):
    vals_r, vecs_r = np.linalg.eig(arr)
    vals_l, vecs_l = np.linalg.eig(arr.T)
    rho = float(np.max(np.abs(vals_r)))

    # the spectral radius itself is an eigenvalue of a nonnegative matrix;
    # pick the computed eigenvalue nearest to it on each side
    i = int(np.argmin(np.abs(vals_r - rho)))
    j = int(np.argmin(np.abs(vals_l - rho)))
    mu = max(float(np.real(vals_r[i])), 0.0)

    right = np.real(vecs_r[:, i]).copy()
    right *= np.sign(right[np.argmax(np.abs(right))]) or 1.0
    right = _clip_tiny_negatives(right)
    right /= np.max(right)

    left = np.real(vecs_l[:, j]).copy()
    left *= np.sign(left[np.argmax(np.abs(left))]) or 1.0
    left = _clip_tiny_negatives(left)
    left /= left.sum()

    res = _residual(arr, mu, left, right)
    data = PerronData(
        mu=mu,
        lam=-math.log(mu) if mu > 0 else math.inf,
        left=left,
        right=right,
        residual=float(res),
        iterations=iterations_used,
        degenerate=False,
        method="dense",
    )
    if res > tol:
        raise ConvergenceFailure(
            f"Perron solve stalled at residual {res:.3e} (tol {tol:.1e})",
            best=data,
            residual=float(res),
            iterations=iterations_used,
        )
    return data


def perron(Q, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> PerronData:
    """Compute spectral radius and both principal eigenvectors of ``Q >= 0``.

    Parameters
    ----------
    Q : array-like, TransitionMatrix, or SubMarkovMatrix
        Square nonnegative matrix.
    tol : float
        Acceptance threshold for the infinity-norm eigen-residuals.
    max_iter : int
        Power iteration budget before switching to the dense fallback.

    Raises
    ------
    ConvergenceFailure
        If neither power iteration nor the dense fallback reaches ``tol``.
        The exception carries the best iterate found.
    """
    arr = _as_square_nonneg(Q)
    n = arr.shape[0]

    if analyze_structure(arr).period == 0:
        # acyclic positive-entry digraph: exactly nilpotent
        return PerronData(
            mu=0.0, lam=math.inf, left=None, right=None,
            residual=0.0, iterations=0, degenerate=True, method="graph",
        )

    if n == 1:
        a = float(arr[0, 0])
        one = np.ones(1)
        return PerronData(
            mu=a, lam=-math.log(a), left=one, right=one.copy(),
            residual=0.0, iterations=0, degenerate=False, method="direct",
        )

    x = np.full(n, 1.0 / n)
    y = np.ones(n)
    best_res = math.inf
    stall = 0
    it = 0
    while it < max_iter:
        it += 1
        xq = x @ arr
        qy = arr @ y
        denom = x @ y
        if denom <= 0 or xq.sum() <= 0 or np.max(qy) <= 0:
            break
        mu = float((x @ qy) / denom)
        res = _residual(arr, mu, x, y / np.max(np.abs(y)))
        if res < best_res - 1e-18:
            best_res = res
            stall = 0
        else:
            stall += 1
        if res <= tol:
            # tol is an acceptance threshold, not the attainable floor:
            # keep iterating while the residual still improves so downstream
            # consumers (QSD differences, basis construction) get the extra
            # digits for free
            best_mu, best_x, best_y, best = mu, x, y, res
            for _ in range(_POLISH_LIMIT):
                it += 1
                x = x @ arr
                x /= x.sum()
                y = arr @ y
                y /= np.max(y)
                mu2 = float((x @ (arr @ y)) / (x @ y))
                r2 = _residual(arr, mu2, x, y)
                if r2 < best:
                    best_mu, best_x, best_y, best = mu2, x, y, r2
                else:
                    break
            mu = best_mu
            left = best_x / best_x.sum()
            right = best_y / np.max(best_y)
            return PerronData(
                mu=mu,
                lam=-math.log(mu) if mu > 0 else math.inf,
                left=left,
                right=right,
                residual=float(_residual(arr, mu, left, right)),
                iterations=it,
                degenerate=False,
                method="power",
            )
        if stall >= _STALL_LIMIT:
            break
        x = xq / xq.sum()
        y = qy / np.max(qy)

    return _dense_perron(arr, tol, it)


def stationary(P, tol=DEFAULT_TOL) -> Distribution:
    """Stationary distribution of an irreducible row-stochastic matrix.

    Raises NotIrreducible for reducible chains. Periodicity is fine here;
    the stationary vector exists either way.
    """
    tm = as_transition_matrix(P)
    report = analyze_structure(tm)
    if not report.irreducible:
        raise NotIrreducible(
            f"chain has {len(report.components)} strongly connected components"
        )
    data = perron(tm.entries, tol=tol, max_iter=DEFAULT_MAX_ITER)
    return Distribution(data.left)


def escape_rate(P, hole, tol=DEFAULT_TOL) -> EscapeRate:
    """Escape data for one hole of an irreducible chain.

    Parameters
    ----------
    P : TransitionMatrix or array-like
        Irreducible row-stochastic matrix.
    hole : int or iterable of int
        States to punch out.
    tol : float
        Residual tolerance passed to :func:`perron`.

    Returns
    -------
    EscapeRate
        ``mu`` is the spectral radius of the punched matrix, ``lam`` the
        escape rate ``-log(mu)`` (``inf`` when the punched matrix is
        nilpotent, where every trajectory is absorbed in at most n steps).
        ``qsd`` is the left principal vector normalized to a distribution
        over surviving states; when the punched matrix is reducible it is
        still returned but flagged, since it may not be unique.
    """
    tm = as_transition_matrix(P)
    report = analyze_structure(tm)
    if not report.irreducible:
        raise NotIrreducible(
            f"chain has {len(report.components)} strongly connected components"
        )
    sub = remove_states(tm, hole)
    sub_report = analyze_structure(sub)
    data = perron(sub.entries, tol=tol, max_iter=DEFAULT_MAX_ITER)
    qsd = None if data.degenerate else Distribution(data.left)
    return EscapeRate(
        mu=data.mu,
        lam=data.lam,
        qsd=qsd,
        sub=sub,
        reducible_after_removal=not sub_report.irreducible,
        perron_data=data,
    )
