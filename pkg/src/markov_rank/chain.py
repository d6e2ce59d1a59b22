"""Finite Markov chain containers: loading, structure checks, state removal.

States are indexed 0..n-1 throughout the library. The command line interface
presents 1-based labels and converts at the boundary.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ParseError, ValidationError
from .validation import (
    as_float_matrix,
    check_distribution,
    check_hole,
    check_stochastic,
    check_substochastic,
    parse_number,
)

__all__ = [
    "TransitionMatrix",
    "Distribution",
    "Hole",
    "SubMarkovMatrix",
    "StructureReport",
    "load_matrix",
    "analyze_structure",
    "remove_states",
    "absorbing_matrix",
    "as_transition_matrix",
    "as_distribution",
]

# A hole is just a frozen set of 0-based state indices. Functions accept an
# int or any iterable of ints and normalize through validation.check_hole.
Hole = frozenset


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic square matrix over at least two states."""

    entries: np.ndarray

    def __post_init__(self):
        arr = as_float_matrix(self.entries)
        if arr.shape[0] < 2:
            raise ValidationError("transition matrix needs at least 2 states")
        check_stochastic(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector: nonnegative weights summing to 1 within 1e-12."""

    weights: np.ndarray

    def __post_init__(self):
        w = check_distribution(self.weights)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class SubMarkovMatrix:
    """Principal submatrix left after punching a hole in a transition matrix.

    ``kept`` maps compact indices back to the original state labels, so
    ``entries[a, b]`` is the original ``P[kept[a], kept[b]]``.
    """

    entries: np.ndarray
    kept: tuple
    hole: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        arr = as_float_matrix(self.entries)
        check_substochastic(arr)
        kept = tuple(int(k) for k in self.kept)
        if len(kept) != arr.shape[0]:
            raise ValidationError("kept index list does not match matrix size")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "kept", kept)
        object.__setattr__(self, "hole", frozenset(int(s) for s in self.hole))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def embed(self, sub_vector, n_total=None):
        """Lift a vector over surviving states to one over all original states."""
        v = np.asarray(sub_vector, dtype=float).reshape(-1)
        if v.shape[0] != self.n:
            raise ValidationError(f"vector has length {v.shape[0]}, expected {self.n}")
        if n_total is None:
            n_total = len(self.kept) + len(self.hole)
        full = np.zeros(n_total)
        full[list(self.kept)] = v
        return full


@dataclass(frozen=True)
class StructureReport:
    """Connectivity summary of the positive-entry digraph."""

    irreducible: bool
    period: int
    aperiodic: bool
    components: tuple


def as_transition_matrix(X) -> TransitionMatrix:
    """Coerce an array-like (or pass through a TransitionMatrix) with validation."""
    if isinstance(X, TransitionMatrix):
        return X
    return TransitionMatrix(X)


def as_distribution(x, n=None) -> Distribution:
    if isinstance(x, Distribution):
        if n is not None and x.n != n:
            raise ValidationError(f"distribution has length {x.n}, expected {n}")
        return x
    return Distribution(check_distribution(x, n))


def _entries_of(P) -> np.ndarray:
    if isinstance(P, (TransitionMatrix, SubMarkovMatrix)):
        return P.entries
    return as_float_matrix(P)


def load_matrix(path, fmt=None) -> TransitionMatrix:
    """Load a transition matrix from a JSON or CSV file.

    Parameters
    ----------
    path : str or os.PathLike
        File to read.
    fmt : {"json", "csv"}, optional
        Forced format. By default inferred from the file extension.

    Returns
    -------
    TransitionMatrix

    Notes
    -----
    JSON input is a 2-D array whose entries are numbers or exact rational
    strings like ``"5/12"``. CSV input is one row per line with the same
    entry grammar; blank lines and lines starting with ``#`` are skipped.
    Shape problems (ragged or non-square data) raise ParseError; sign and
    row-sum problems raise ValidationError.
    """
    path = os.fspath(path)
    if fmt is None:
        ext = os.path.splitext(path)[1].lower()
        if ext == ".json":
            fmt = "json"
        elif ext == ".csv":
            fmt = "csv"
        else:
            raise ParseError(f"cannot infer format from extension {ext!r}; pass fmt")
    if fmt not in ("json", "csv"):
        raise ParseError(f"unknown matrix format {fmt!r}")

    try:
        with open(path, "r", encoding="utf-8") as fh:
            if fmt == "json":
                try:
                    raw = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON in {path}: {exc}") from None
            else:
                raw = [
                    row
                    for row in csv.reader(fh)
                    if row and not (row[0].lstrip().startswith("#"))
                ]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None

    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise ParseError(f"{path}: expected a 2-D array of entries")
    grid = [[parse_number(v) for v in row] for row in raw]
    widths = {len(row) for row in grid}
    if len(widths) != 1:
        raise ParseError(f"{path}: ragged rows with lengths {sorted(widths)}")
    if widths.pop() != len(grid):
        raise ParseError(f"{path}: matrix is {len(grid)}x{len(grid[0])}, not square")
    return TransitionMatrix(np.array(grid, dtype=float))


def analyze_structure(P) -> StructureReport:
    """Report irreducibility and period of the positive-entry digraph.

    Parameters
    ----------
    P : TransitionMatrix, SubMarkovMatrix, or array-like
        Any square nonnegative matrix. Accepting punched matrices here lets
        callers check connectivity either before or after hole removal.

    Returns
    -------
    StructureReport
        ``components`` lists strongly connected components as sorted tuples,
        ordered by smallest member. ``period`` is the cycle-length gcd of the
        single component when irreducible, the gcd of all component periods
        otherwise, and 0 when the graph has no cycle at all.
    """
    arr = _entries_of(P)
    n = arr.shape[0]
    adj = arr > 0.0

    n_comp, labels = connected_components(csr_matrix(adj), directed=True, connection="strong")
    comps = [[] for _ in range(n_comp)]
    for state, lab in enumerate(labels):
        comps[lab].append(state)
    comps.sort(key=lambda c: c[0])

    periods = []
    for comp in comps:
        periods.append(_component_period(adj, comp))

    nonzero = [p for p in periods if p > 0]
    period = math.gcd(*nonzero) if nonzero else 0
    irreducible = n_comp == 1 and period >= 1
    return StructureReport(
        irreducible=irreducible,
        period=period if irreducible else period,
        aperiodic=bool(irreducible and period == 1),
        components=tuple(tuple(c) for c in comps),
    )


def _component_period(adj, comp):
    # gcd of (level[u] + 1 - level[v]) over edges u -> v inside the component,
    # with levels from a BFS rooted at the first member. 0 when edge-free.
    members = set(comp)
    level = {comp[0]: 0}
    frontier = [comp[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.nonzero(adj[u])[0]:
                v = int(v)
                if v in members and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in comp:
        for v in np.nonzero(adj[u])[0]:
            v = int(v)
            if v in members:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g)


def remove_states(P, hole) -> SubMarkovMatrix:
    """Punch a hole: drop the given rows and columns, keeping original labels.

    Parameters
    ----------
    P : TransitionMatrix or array-like
    hole : int or iterable of int
        0-based states to remove; must leave at least one survivor.
    """
    tm = as_transition_matrix(P)
    hole_set = check_hole(hole, tm.n)
    kept = [s for s in range(tm.n) if s not in hole_set]
    sub = tm.entries[np.ix_(kept, kept)]
    return SubMarkovMatrix(sub, kept=tuple(kept), hole=hole_set)


def absorbing_matrix(P, hole) -> TransitionMatrix:
    """Return the chain with every hole state turned into an absorbing state.

    Rows of hole states become unit vectors; all other rows are unchanged, so
    the spectrum is that of the punched matrix plus one eigenvalue 1 per hole
    state.
    """
    tm = as_transition_matrix(P)
    hole_set = check_hole(hole, tm.n)
    arr = tm.entries.copy()
    for k in hole_set:
        arr[k, :] = 0.0
        arr[k, k] = 1.0
    return TransitionMatrix(arr)
