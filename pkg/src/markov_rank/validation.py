"""Input coercion and validation helpers.

Everything here works on plain arrays so the typed wrappers in
:mod:`markov_rank.chain` and the estimators in :mod:`markov_rank.estimators`
can share one set of checks.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "parse_number",
    "as_float_matrix",
    "check_nonnegative",
    "check_stochastic",
    "check_substochastic",
    "check_distribution",
    "check_hole",
]

STOCHASTIC_TOL = 1e-12


def parse_number(value):
    """Convert a matrix entry to ``float``.

    Accepts ints, floats, and strings holding either a decimal literal or an
    exact rational like ``"5/12"``. Rational strings go through
    :class:`fractions.Fraction` so ``"1/3"`` parses to the nearest double of
    the exact value.
    """
    if isinstance(value, bool):
        raise ParseError(f"boolean is not a valid matrix entry: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        text = value.strip()
        try:
            out = float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            try:
                out = float(text)
            except ValueError:
                raise ParseError(f"cannot parse entry {value!r}") from None
    else:
        raise ParseError(f"cannot parse entry of type {type(value).__name__}")
    if not np.isfinite(out):
        raise ParseError(f"entry {value!r} is not finite")
    return out


def as_float_matrix(entries):
    """Coerce to a square C-contiguous float64 array, validating shape."""
    try:
        arr = np.array(entries, dtype=float, copy=True)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"cannot interpret input as a float matrix: {exc}") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValidationError("matrix must have at least one state")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix entries must be finite")
    return np.ascontiguousarray(arr)


def check_nonnegative(arr, what="matrix"):
    if np.any(arr < 0):
        idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
        pos = idx[0] if len(idx) == 1 else idx
        raise ValidationError(f"{what} has negative entry at {pos}: {arr[idx]}")


def check_stochastic(arr, tol=STOCHASTIC_TOL):
    """Require every row sum to be within ``tol`` of 1."""
    check_nonnegative(arr)
    sums = arr.sum(axis=1)
    bad = np.argwhere(np.abs(sums - 1.0) > tol)
    if bad.size:
        i = int(bad[0][0])
        raise ValidationError(f"row {i} sums to {sums[i]!r}, not 1 within {tol}")


def check_substochastic(arr, tol=STOCHASTIC_TOL):
    """Require nonnegative entries and row sums at most 1 (within ``tol``)."""
    check_nonnegative(arr)
    sums = arr.sum(axis=1)
    bad = np.argwhere(sums > 1.0 + tol)
    if bad.size:
        i = int(bad[0][0])
        raise ValidationError(f"row {i} sums to {sums[i]!r}, above 1")


def check_distribution(weights, n=None, tol=STOCHASTIC_TOL):
    """Coerce and validate a probability vector; returns a float64 copy."""
    w = np.array(weights, dtype=float, copy=True).reshape(-1)
    if n is not None and w.shape[0] != n:
        raise ValidationError(f"distribution has length {w.shape[0]}, expected {n}")
    if w.shape[0] < 1:
        raise ValidationError("distribution must have at least one entry")
    if not np.all(np.isfinite(w)):
        raise ValidationError("distribution entries must be finite")
    check_nonnegative(w, what="distribution")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"distribution sums to {total!r}, not 1 within {tol}")
    return w


def check_hole(hole, n):
    """Normalize a hole spec (int or iterable of ints) to a frozenset.

    The hole must be a nonempty proper subset of the 0-based state set.
    """
    if isinstance(hole, (int, np.integer)):
        states = frozenset([int(hole)])
    else:
        try:
            states = frozenset(int(s) for s in hole)
        except (TypeError, ValueError):
            raise ValidationError(f"cannot interpret hole spec {hole!r}") from None
    if not states:
        raise ValidationError("hole must contain at least one state")
    out_of_range = [s for s in states if s < 0 or s >= n]
    if out_of_range:
        raise ValidationError(f"hole states {sorted(out_of_range)} outside 0..{n - 1}")
    if len(states) >= n:
        raise ValidationError("hole must leave at least one surviving state")
    return states
