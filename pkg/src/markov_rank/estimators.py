"""Estimator-style front ends so rankings compose with sklearn tooling.

Both classes follow the usual contract: constructor stores hyperparameters
verbatim, ``fit`` validates input and computes, fitted attributes carry a
trailing underscore, and ``get_params``/``set_params``/``clone`` come from
``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .chain import as_transition_matrix
from .sink import DEFAULT_RANK_TOL, rank_sinks
from .source import DEFAULT_CLUSTER_TOL, compare_convergence, eigen_structure, rank_sources
from .spectral import DEFAULT_TOL, stationary

__all__ = ["SinkRanker", "SourceRanker"]


class SinkRanker(BaseEstimator):
    """Rank the states of a chain by how fast a hole there absorbs mass.

    Parameters
    ----------
    rank_tol : float
        Escape rates closer than this are reported as tied.
    tol : float
        Residual tolerance for the spectral solves.

    Attributes
    ----------
    ranking_ : ndarray of int
        States ordered by decreasing escape rate.
    mu_, escape_rate_ : ndarray of float
        Per-state decay factor and rate (rate is inf for nilpotent holes).
    ties_ : tuple of tuples
        Rank groups whose rates are within rank_tol.
    stationary_ : ndarray
        Stationary distribution of the fitted chain.
    """

    def __init__(self, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL):
        self.rank_tol = rank_tol
        self.tol = tol

    def fit(self, X, y=None):
        tm = as_transition_matrix(X)
        result = rank_sinks(tm, rank_tol=self.rank_tol, tol=self.tol)
        self.n_states_ = tm.n
        self.mu_ = np.array([rec.mu for rec in result.records])
        self.escape_rate_ = np.array([rec.lam for rec in result.records])
        self.ranking_ = np.array(result.ranking, dtype=int)
        self.ties_ = result.ties
        self.records_ = result.records
        self.stationary_ = stationary(tm, tol=self.tol).weights
        return self

    def fit_rank(self, X):
        """Fit and return the ranking array in one call."""
        return self.fit(X).ranking_


class SourceRanker(BaseEstimator):
    """Rank starting states by how fast they converge to stationarity.

    Parameters
    ----------
    cluster_tol : float
        Eigenvalue clustering tolerance for the canonical basis.

    Attributes
    ----------
    sigma_ : ndarray of int
        States sorted by ascending dominant-block projection size (best
        source first).
    q_ : ndarray of float
        The projection magnitudes themselves.
    degenerate_ : bool
        True when the dominant block's image is not one-dimensional and the
        order is therefore not justified by the pairwise theory.
    structure_ : EigenStructure
        The fitted canonical basis, reusable for projections and
        comparisons.
    """

    def __init__(self, cluster_tol=DEFAULT_CLUSTER_TOL):
        self.cluster_tol = cluster_tol

    def fit(self, X, y=None):
        tm = as_transition_matrix(X)
        es = eigen_structure(tm, tol=self.cluster_tol)
        ranking = rank_sources(es)
        self.n_states_ = tm.n
        self.structure_ = es
        self.q_ = np.asarray(ranking.q)
        self.sigma_ = np.array(ranking.sigma, dtype=int)
        self.degenerate_ = ranking.degenerate
        self.key_mu_ = ranking.key.mu
        self.key_r_ = ranking.key.r
        self.condition_number_ = es.cond
        return self

    def compare(self, u, v):
        """Pairwise faster-convergence verdict between two initial laws."""
        check_is_fitted(self, "structure_")
        return compare_convergence(self.structure_, u, v)
