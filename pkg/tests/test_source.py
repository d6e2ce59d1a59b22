"""Left eigenbasis construction, convergence comparison, source ranking."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_rank import (
    EQUAL,
    FASTER,
    INCOMPARABLE,
    SLOWER,
    AperiodicityViolation,
    NotIrreducible,
    ProjectionKey,
    ValidationError,
    compare_convergence,
    eigen_structure,
    predicted_decay,
    project,
    rank_sources,
    tv_curve,
)

from helpers import (
    EX3_EIGS,
    EX3_Q,
    PLANTED_COUPLE,
    PLANTED_LAM,
    PLANTED_SEEDS,
    example3,
    planted_jordan,
    random_distribution,
    random_irreducible_aperiodic,
    rotation3,
)

E = np.eye(3)


def test_structure_third_example():
    es = eigen_structure(example3())
    # simple real spectrum: rows ordered by decreasing modulus, pi last
    np.testing.assert_allclose(es.mu, [0.75, 0.1875, 1.0], atol=1e-10)
    np.testing.assert_allclose(es.phi, [0.0, np.pi, 0.0], atol=1e-10)
    assert list(es.r) == [1, 1, 1]
    assert list(es.pair) == [-1, -1, -1]
    np.testing.assert_allclose(es.pi, [1 / 6, 1 / 3, 1 / 2], atol=1e-10)

    # each row really is a left eigenvector of its signed eigenvalue
    P = example3()
    for i, lam in enumerate([0.75, -0.1875, 1.0]):
        np.testing.assert_allclose(es.W[i] @ P, lam * es.W[i], atol=1e-10)
    # row scaling: largest-magnitude component of a simple real row is +1
    # (the stationary row is sum-normalized instead)
    for i in range(2):
        assert es.W[i][np.argmax(np.abs(es.W[i]))] == pytest.approx(1.0, abs=1e-12)


def test_structure_eigenvalue_set_matches_trace():
    es = eigen_structure(example3())
    signed = sorted(m * np.cos(p) for m, p in zip(es.mu, es.phi))
    assert signed == pytest.approx(sorted(EX3_EIGS), abs=1e-10)


def test_structure_rejects_bad_chains():
    with pytest.raises(NotIrreducible):
        eigen_structure(np.eye(2))
    with pytest.raises(AperiodicityViolation):
        eigen_structure(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_coefficients_roundtrip():
    es = eigen_structure(example3())
    rng = np.random.default_rng(7)
    for _ in range(5):
        v = rng.normal(size=3)
        c = es.coefficients(v)
        np.testing.assert_allclose(c @ es.W, v, atol=1e-10)


def test_distribution_coefficient_on_pi_is_one():
    es = eigen_structure(example3())
    for i in range(3):
        c = es.coefficients(E[i])
        assert c[-1] == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(es.stationary_projection(E[i]), es.pi, atol=1e-10)


def test_keys_descending():
    es = eigen_structure(example3())
    keys = es.keys()
    assert [k.r for k in keys] == [1, 1]
    assert keys[0].mu == pytest.approx(0.75, abs=1e-10)
    assert keys[1].mu == pytest.approx(0.1875, abs=1e-10)


def test_project_magnitudes():
    es = eigen_structure(example3())
    key = es.keys()[0]
    for i, want in enumerate(EX3_Q):
        assert np.abs(project(es, E[i], key)).sum() == pytest.approx(want, abs=1e-8)
    # missing block projects to zero
    assert np.all(project(es, E[0], ProjectionKey(0.5, 1)) == 0.0)


def test_rank_sources_third_example():
    rk = rank_sources(example3())
    assert not rk.degenerate
    assert rk.key == ProjectionKey(pytest.approx(0.75, abs=1e-9), 1)
    np.testing.assert_allclose(rk.q, EX3_Q, atol=1e-8)
    assert rk.sigma == (0, 2, 1)


def test_compare_third_example_verdicts():
    es = eigen_structure(example3())
    r01 = compare_convergence(es, E[0], E[1])
    r02 = compare_convergence(es, E[0], E[2])
    r21 = compare_convergence(es, E[2], E[1])
    assert (r01.verdict, r02.verdict, r21.verdict) == (FASTER, FASTER, FASTER)
    assert r01.scalar_a == pytest.approx(11 / 17, abs=1e-8)
    assert r02.scalar_a == pytest.approx(-11 / 15, abs=1e-8)
    assert r21.scalar_a == pytest.approx(-15 / 17, abs=1e-8)


def test_compare_equal_and_swap():
    es = eigen_structure(example3())
    assert compare_convergence(es, E[1], E[1]).verdict == EQUAL
    fwd = compare_convergence(es, E[0], E[1])
    rev = compare_convergence(es, E[1], E[0])
    assert (fwd.verdict, rev.verdict) == (FASTER, SLOWER)
    # the scalar always reports winner over loser, so the swap preserves it
    assert rev.scalar_a == pytest.approx(fwd.scalar_a, abs=1e-10)
    assert fwd.witness_key == rev.witness_key


def test_compare_vanishing_projection_is_faster():
    # a start with zero weight on the dominant block: u = pi + w2-direction
    es = eigen_structure(example3())
    u = es.pi + 0.05 * es.W[1]
    res = compare_convergence(es, u, E[0])
    assert res.verdict == FASTER
    assert res.scalar_a == 0.0
    assert res.witness_key == es.keys()[0]


def test_faster_verdict_means_smaller_tv_tail():
    # semantic check of the order: the winner's distance curve must
    # eventually run strictly below the loser's, in every norm
    # stop well before the curves sink into floating-point noise near 1e-15
    P = example3()
    for norm in ("L1", "L2", "Linf"):
        cu = tv_curve(P, 0, norm, 80).values
        cv = tv_curve(P, 1, norm, 80).values
        assert np.all(cu[20:] < cv[20:])


def test_degenerate_dominant_pair():
    rk = rank_sources(rotation3())
    assert rk.degenerate
    es = eigen_structure(rotation3())
    assert es.keys()[0].mu == pytest.approx(0.7, abs=1e-9)
    assert es.key_indices(es.keys()[0]).size == 2
    # the pair rows reference each other
    i, j = es.key_indices(es.keys()[0])
    assert es.pair[i] == j and es.pair[j] == i


def test_incomparable_on_rotated_projections():
    # by symmetry the three point masses have equal-size dominant
    # projections that are rotations, not scalar multiples, of each other
    es = eigen_structure(rotation3())
    res = compare_convergence(es, np.eye(3)[0], np.eye(3)[1])
    assert res.verdict == INCOMPARABLE
    assert res.witness_key == es.keys()[0]


def test_tv_curve_pure_eigenvector_start():
    # start = pi + w1 decays exactly like (3/4)^n in every norm
    values = tv_curve(example3(), 2, "L1", 40).values
    np.testing.assert_allclose(values, 0.75 ** np.arange(41), rtol=1e-10)
    values = tv_curve(example3(), 2, "Linf", 40).values
    np.testing.assert_allclose(values, 0.5 * 0.75 ** np.arange(41), rtol=1e-10)


def test_tv_curve_distribution_start_and_gates():
    curve = tv_curve(example3(), np.full(3, 1 / 3), "L2", 10)
    assert curve.values.shape == (11,)
    assert curve.values[0] == pytest.approx(np.linalg.norm(np.full(3, 1 / 3) - np.array([1 / 6, 1 / 3, 1 / 2])))
    with pytest.raises(NotIrreducible):
        tv_curve(np.eye(2), 0)
    with pytest.raises(AperiodicityViolation):
        tv_curve(np.array([[0.0, 1.0], [1.0, 0.0]]), 0)
    with pytest.raises(ValidationError):
        tv_curve(example3(), 0, norm_id="L7")


def test_predicted_decay_simple_block():
    es = eigen_structure(example3())
    key = es.keys()[0]
    assert predicted_decay(es, key, -11 / 15, 6) == pytest.approx((11 / 15) * 0.75**6, rel=1e-12)
    assert predicted_decay(es, key, 2.0, 0) == 2.0
    with pytest.raises(ValidationError):
        predicted_decay(es, ProjectionKey(0.5, 1), 1.0, 3)


def test_planted_chain_recovery():
    P = planted_jordan(PLANTED_SEEDS[0])
    es = eigen_structure(P, tol=1e-6)
    keys = es.keys()
    assert keys[0].r == 2
    assert keys[0].mu == pytest.approx(PLANTED_LAM, abs=1e-6)
    assert [k.r for k in keys] == [2, 1, 1]
    assert es.key_indices(keys[0]).size == 1

    # chain relation: top row maps to lam * itself + bottom row
    (top,) = es.key_indices(ProjectionKey(keys[0].mu, 2))
    (bot,) = es.key_indices(ProjectionKey(keys[0].mu, 1))
    np.testing.assert_allclose(
        es.W[top] @ P, keys[0].mu * es.W[top] + es.W[bot], atol=1e-6
    )


def test_predicted_decay_generalized_block():
    # n mu^(n-1) |c| envelope tracks the observed distance within a decade
    P = planted_jordan(PLANTED_SEEDS[1])
    es = eigen_structure(P, tol=1e-6)
    key = es.keys()[0]
    assert key.r == 2
    (top,) = es.key_indices(key)
    start = np.eye(4)[0]
    c = es.coefficients(start)[top]
    curve = tv_curve(P, 0, "L1", 60).values
    for n in (10, 25, 40, 60):
        ratio = curve[n] / predicted_decay(es, key, c, n)
        assert 0.1 < ratio < 10.0


def test_predicted_decay_below_chain_depth():
    P = planted_jordan(PLANTED_SEEDS[0])
    es = eigen_structure(P, tol=1e-6)
    key = es.keys()[0]
    assert predicted_decay(es, key, 1.0, 0) == 0.0
    assert predicted_decay(es, key, 1.0, 1) == pytest.approx(PLANTED_LAM ** 0, rel=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_compare_antisymmetry_random(seed):
    rng = np.random.default_rng(seed)
    P = random_irreducible_aperiodic(rng, 3, 5)
    es = eigen_structure(P)
    n = P.shape[0]
    u = random_distribution(rng, n)
    v = random_distribution(rng, n)
    fwd = compare_convergence(es, u, v)
    rev = compare_convergence(es, v, u)
    mirror = {FASTER: SLOWER, SLOWER: FASTER, EQUAL: EQUAL, INCOMPARABLE: INCOMPARABLE}
    assert rev.verdict == mirror[fwd.verdict]


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_basis_reconstructs_random_vectors(seed):
    rng = np.random.default_rng(seed)
    P = random_irreducible_aperiodic(rng, 3, 5)
    es = eigen_structure(P)
    v = rng.normal(size=P.shape[0])
    c = es.coefficients(v)
    scale = max(1.0, np.abs(v).max())
    np.testing.assert_allclose(c @ es.W, v, atol=1e-7 * scale)
