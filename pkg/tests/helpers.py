"""Shared fixtures: worked example chains, random generators, planted chains."""

from fractions import Fraction as F

import numpy as np

from markov_rank import analyze_structure


def _mat(rows):
    return np.array([[float(F(x)) for x in row] for row in rows])


def example1():
    # uniform stationary law, yet three different escape rates
    return _mat([["1/3", "1/6", "1/2"],
                 ["1/3", "5/12", "1/4"],
                 ["1/3", "5/12", "1/4"]])


EX1_MUS = (2 / 3, (7 + np.sqrt(97)) / 24, (9 + np.sqrt(33)) / 24)


def example2():
    # escape through the heaviest state is not the fastest
    return _mat([["1/2", "1/12", "5/12"],
                 ["1/2", "0", "1/2"],
                 ["1/3", "1/3", "1/3"]])


EX2_PI = (36 / 83, 14 / 83, 33 / 83)
EX2_MUS = ((1 + np.sqrt(7)) / 6, (5 + np.sqrt(21)) / 12, (3 + np.sqrt(15)) / 12)


def example3():
    # simple spectrum 1, 3/4, -3/16; best source is state 0, not the
    # heaviest state
    return _mat([["1/8", "5/8", "1/4"],
                 ["3/8", "9/16", "1/16"],
                 ["1/24", "1/12", "7/8"]])


EX3_EIGS = (1.0, 0.75, -0.1875)
EX3_Q = (11 / 15, 17 / 15, 1.0)


def cycle3_lazy():
    # symmetric holding + rotation: every state equivalent, rates tie
    n = 3
    P = np.full((n, n), 0.0)
    for i in range(n):
        P[i, i] = 0.4
        P[i, (i + 1) % n] = 0.3
        P[i, (i - 1) % n] = 0.3
    return P


def rotation3():
    # circulant with a dominant complex pair (modulus 0.7)
    return np.array([[0.1, 0.8, 0.1],
                     [0.1, 0.1, 0.8],
                     [0.8, 0.1, 0.1]])


def line4():
    # nearest-neighbor walk; removing an interior state disconnects it
    return np.array([[0.5, 0.5, 0.0, 0.0],
                     [0.25, 0.5, 0.25, 0.0],
                     [0.0, 0.25, 0.5, 0.25],
                     [0.0, 0.0, 0.5, 0.5]])


def random_dense_chain(rng, n):
    return rng.dirichlet(np.full(n, 0.8), size=n)


def random_sparse_chain(rng, n, zero_prob=0.4):
    raw = rng.dirichlet(np.full(n, 0.8), size=n)
    mask = rng.random((n, n)) < zero_prob
    for i in range(n):
        keep = ~mask[i]
        if not keep.any():
            keep[rng.integers(n)] = True
        row = np.where(keep, raw[i], 0.0)
        raw[i] = row / row.sum()
    return raw


def random_irreducible_aperiodic(rng, n_min=3, n_max=5, sparse=False):
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        P = random_sparse_chain(rng, n) if sparse else random_dense_chain(rng, n)
        rep = analyze_structure(P)
        if rep.irreducible and rep.aperiodic:
            return P


def random_hole_irreducible(rng, P, tries=50):
    """A singleton hole whose punched matrix is still irreducible, or None."""
    from markov_rank import remove_states

    n = P.shape[0]
    for _ in range(tries):
        k = int(rng.integers(n))
        if analyze_structure(remove_states(P, k)).irreducible:
            return k
    return None


def random_distribution(rng, n, off=None):
    """Dirichlet draw; with ``off`` set, guarantees mass outside that state."""
    while True:
        p = rng.dirichlet(np.full(n, 0.9))
        if off is None or p[off] < 1.0 - 1e-6:
            return p


# ---- planted Jordan structure ------------------------------------------
#
# P = V^{-1} J V with left rows V = [w1, w2, w3, pi]: a 2-chain at LAM
# (coupling COUPLE keeps entries positive), a simple eigenvalue LAM2, and
# the stationary row. Seeds were screened so that P is strictly positive,
# every e_i carries a solid coefficient on the chain top, and the
# first-order decay term dominates cleanly over steps 10..60.

PLANTED_LAM = 0.6
PLANTED_LAM2 = 0.25
PLANTED_COUPLE = 0.3
PLANTED_SEEDS = (2273, 2810, 5157, 6699, 8841, 14397, 15058, 18018)


def planted_jordan(seed):
    rng = np.random.default_rng(seed)
    J = np.array([[PLANTED_LAM, 0, 0, 0],
                  [PLANTED_COUPLE, PLANTED_LAM, 0, 0],
                  [0, 0, PLANTED_LAM2, 0],
                  [0, 0, 0, 1.0]])
    pi = rng.dirichlet(np.full(4, 25.0))
    ws = []
    for _ in range(3):
        w = rng.normal(size=4)
        w -= w.mean()
        w /= np.abs(w).max()
        ws.append(w)
    V = np.vstack([ws[0], ws[1], ws[2], pi])
    P = np.linalg.solve(V, J @ V)
    assert P.min() > 0, f"seed {seed} no longer yields a positive matrix"
    return P
