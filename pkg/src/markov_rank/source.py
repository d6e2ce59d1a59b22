"""Source ranking: which starting state converges to stationarity fastest.

The engine is a real canonical basis of left row vectors for the transition
matrix: eigenvectors and generalized-eigenvector chains, with conjugate pairs
split into real and imaginary parts. On top of it sit projections onto
(modulus, chain index) blocks, a pairwise faster-convergence comparator, a
per-state ranking, and total-variation decay curves.

Numerical Jordan structure is ill-posed, so eigenvalues are clustered with an
absolute tolerance, ranks are decided by singular-value thresholds, and the
basis condition number is reported instead of trusted silently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .chain import TransitionMatrix, analyze_structure, as_distribution, as_transition_matrix
from .errors import AperiodicityViolation, IllConditioned, NotIrreducible, ValidationError
from .spectral import stationary

__all__ = [
    "EigenStructure",
    "ProjectionKey",
    "DominanceResult",
    "SourceRanking",
    "TVCurve",
    "eigen_structure",
    "project",
    "compare_convergence",
    "rank_sources",
    "tv_curve",
    "predicted_decay",
    "FASTER",
    "SLOWER",
    "EQUAL",
    "INCOMPARABLE",
]

DEFAULT_CLUSTER_TOL = 1e-8
COND_WARN_THRESHOLD = 1e12

FASTER = "Faster"
SLOWER = "Slower"
EQUAL = "Equal"
INCOMPARABLE = "Incomparable"

_EPS = np.finfo(float).eps


@dataclass(frozen=True, order=True)
class ProjectionKey:
    """Block label: eigenvalue modulus and chain index within its Jordan chain."""

    mu: float
    r: int


@dataclass(frozen=True, eq=False)
class DominanceResult:
    """Outcome of comparing two initial distributions.

    ``witness_key`` is the largest block at which the comparison was decided
    (absent for Equal). ``scalar_a`` is the signed ratio of the winning
    projection over the losing one, so its magnitude is below 1 for both
    strict verdicts; present exactly for Faster and Slower.
    """

    verdict: str
    witness_key: ProjectionKey | None = None
    scalar_a: float | None = None


@dataclass(frozen=True, eq=False)
class SourceRanking:
    """Per-state projection magnitudes on the dominant block, sorted ascending.

    ``q[i]`` is the L1 magnitude of the dominant-block projection of the
    point mass at state i; ``sigma`` sorts states by increasing q, best
    source first. ``degenerate`` is set when the dominant block's image is
    not one-dimensional, in which case no strict order is justified.
    """

    key: ProjectionKey
    q: np.ndarray
    sigma: tuple
    degenerate: bool


@dataclass(frozen=True, eq=False)
class TVCurve:
    """Distance to stationarity per step, for one start and one norm."""

    start: object
    norm_id: str
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Real canonical left basis of a stochastic matrix.

    Rows of ``W`` are the basis vectors; the last row is the stationary
    distribution. Real rows with chain index 1 are scaled so their
    largest-magnitude component is 1; vectors inside a generalized chain or a
    conjugate pair share one common scale so the chain relation
    ``w_k (P - lam I) = w_{k-1}`` and the rotation-block structure survive.

    ``mu`` and ``phi`` store each row's eigenvalue as modulus and argument in
    [0, pi] (pi marks negative real eigenvalues). ``r`` is the chain index,
    ``pair`` the partner row of a complex pair (-1 for real rows), and
    ``key_mu`` the cluster-representative modulus used for block matching.
    """

    W: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    r: np.ndarray
    pair: np.ndarray
    key_mu: np.ndarray
    cond: float
    tol: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def pi(self) -> np.ndarray:
        return self.W[-1]

    @cached_property
    def _inv_wt(self):
        return np.linalg.inv(self.W.T)

    @cached_property
    def _row_l1(self):
        return np.abs(self.W).sum(axis=1)

    def coefficients(self, v) -> np.ndarray:
        """Expansion coefficients of ``v`` in the basis rows."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != self.n:
            raise ValidationError(f"vector has length {v.shape[0]}, expected {self.n}")
        return self._inv_wt @ v

    def key_indices(self, key) -> np.ndarray:
        key = _as_key(key)
        mask = (
            (np.abs(self.key_mu - key.mu) <= self.tol)
            & (self.r == key.r)
            & (np.arange(self.n) != self.n - 1)
        )
        return np.nonzero(mask)[0]

    def keys(self) -> list:
        """Non-stationary block labels, lexicographically largest first."""
        seen = {}
        for i in range(self.n - 1):
            seen.setdefault((float(self.key_mu[i]), int(self.r[i])), None)
        return sorted((ProjectionKey(m, r) for m, r in seen), key=lambda k: (k.mu, k.r), reverse=True)

    def stationary_projection(self, v) -> np.ndarray:
        c = self.coefficients(v)
        return c[-1] * self.W[-1]


def _as_key(key) -> ProjectionKey:
    if isinstance(key, ProjectionKey):
        return key
    mu, r = key
    return ProjectionKey(float(mu), int(r))


def _cluster(values, tol):
    # union-find on |v_i - v_j| <= tol; returns groups of indices
    n = len(values)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _orthonormal_columns(M, rel_tol=1e-10):
    if M.shape[1] == 0:
        return M
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = s > rel_tol * s[0] if s.size else np.zeros(0, bool)
    return U[:, keep]


def _jordan_chains(B, m, tol):
    """Generalized-eigenvector chains for one eigenvalue cluster.

    ``B`` is (A - lam I) restricted to nothing: full size, with the cluster's
    algebraic multiplicity ``m`` known from eigenvalue counting. Returns a
    list of chains, each ordered eigenvector first. Kernel dimensions come
    from SVD thresholds scaled by ``norm(B)**r`` so that near-nilpotent powers
    do not fool a purely relative cutoff.
    """
    n = B.shape[0]
    base = max(float(np.linalg.norm(B, 2)), 64.0 * _EPS)

    level_ker = {}
    d = [0]
    Bp = np.eye(n, dtype=B.dtype)
    r = 0
    while d[-1] < m and r < m:
        r += 1
        Bp = Bp @ B
        _, s, Vh = np.linalg.svd(Bp)
        cnt = int(np.sum(s <= tol * base**r))
        cnt = min(cnt, m)
        if cnt <= d[-1]:
            r -= 1
            break
        level_ker[r] = Vh[n - cnt:].conj().T
        d.append(cnt)
    r_max = len(d) - 1
    if r_max == 0:
        return []

    tops = {}
    for s_lvl in range(r_max, 0, -1):
        ge_s = d[s_lvl] - d[s_lvl - 1]
        ge_next = (d[s_lvl + 1] - d[s_lvl]) if s_lvl + 1 <= r_max else 0
        need = ge_s - ge_next
        if need <= 0:
            continue
        avoid = []
        if s_lvl - 1 >= 1:
            avoid.append(level_ker[s_lvl - 1])
        if s_lvl + 1 <= r_max:
            avoid.append(B @ level_ker[s_lvl + 1])
        C = level_ker[s_lvl]
        if avoid:
            S = _orthonormal_columns(np.hstack(avoid))
            Cp = C - S @ (S.conj().T @ C) if S.shape[1] else C
        else:
            Cp = C
        _, s2, V2h = np.linalg.svd(Cp)
        take = min(need, V2h.shape[0])
        combos = V2h[:take].conj().T
        vecs = C @ combos
        tops[s_lvl] = [vecs[:, j] for j in range(vecs.shape[1])]

    chains = []
    for s_lvl in sorted(tops, reverse=True):
        for v in tops[s_lvl]:
            chain = [v]
            w = v
            for _ in range(s_lvl - 1):
                w = B @ w
                chain.append(w)
            chain.reverse()
            chains.append(chain)
    return chains


def _refine_and_scale_chain(chain, B, pi):
    # remove stationary leakage from the top vector (every non-stationary
    # basis vector has zero component sum), rebuild the chain downward so the
    # chain relation stays exact, then fix one common scale from the bottom
    # vector's largest component
    top = chain[-1]
    top = top - top.sum() * pi.astype(top.dtype)
    rebuilt = [top]
    w = top
    for _ in range(len(chain) - 1):
        w = B @ w
        rebuilt.append(w)
    rebuilt.reverse()
    bottom = rebuilt[0]
    scale = bottom[int(np.argmax(np.abs(bottom)))]
    if scale == 0:
        scale = 1.0
    return [v / scale for v in rebuilt]


def eigen_structure(P, tol=DEFAULT_CLUSTER_TOL) -> EigenStructure:
    """Real canonical left eigenbasis of an irreducible aperiodic chain.

    Parameters
    ----------
    P : TransitionMatrix or array-like
    tol : float
        Absolute eigenvalue clustering tolerance, also the scale for the
        rank-revealing SVD cutoffs. The default suits well-separated spectra;
        pass something looser (1e-6, say) for matrices built around genuinely
        defective eigenvalues, whose computed eigenvalues split at the square
        root of machine precision.

    Returns
    -------
    EigenStructure

    Warns
    -----
    IllConditioned
        When the basis condition number exceeds 1e12, when an eigenvalue
        cluster touches 1, or when chain construction had to fall back to
        raw eigenvectors. Results are still returned.
    """
    tm = as_transition_matrix(P)
    report = analyze_structure(tm)
    if not report.irreducible:
        raise NotIrreducible(
            f"chain has {len(report.components)} strongly connected components"
        )
    if report.period != 1:
        raise AperiodicityViolation(f"chain has period {report.period}")

    n = tm.n
    pi = stationary(tm).weights
    A = tm.entries.T
    evals, evecs = np.linalg.eig(A)

    i_stat = int(np.argmin(np.abs(evals - 1.0)))
    clusters = []
    for group in _cluster(evals, tol):
        trimmed = [i for i in group if i != i_stat]
        if len(trimmed) < len(group) and trimmed:
            warnings.warn(
                IllConditioned(
                    "an eigenvalue cluster touches the stationary eigenvalue 1"
                )
            )
        if trimmed:
            clusters.append((trimmed, complex(np.mean(evals[trimmed]))))

    # pair up complex clusters with their conjugates; keep the Im > 0 one
    specs = []
    used = [False] * len(clusters)
    for ci, (group, rep) in enumerate(clusters):
        if used[ci]:
            continue
        used[ci] = True
        if abs(rep.imag) <= tol:
            specs.append(("real", rep.real, group))
            continue
        partner = None
        for cj in range(len(clusters)):
            if not used[cj] and abs(clusters[cj][1] - rep.conjugate()) <= 2 * tol:
                partner = cj
                break
        if partner is None:
            # conjugate symmetry of real matrices makes this unreachable in
            # practice; degrade to a real cluster at the real part
            warnings.warn(IllConditioned("unpaired complex eigenvalue cluster"))
            specs.append(("real", rep.real, group))
            continue
        used[partner] = True
        pos_group, pos_rep = (
            (group, rep) if rep.imag > 0 else (clusters[partner][0], clusters[partner][1])
        )
        specs.append(("pair", pos_rep, pos_group))

    specs.sort(key=lambda s: (-abs(s[1]), _phi_of(s[1])))

    rows, mus, phis, rs, pairs = [], [], [], [], []
    rescued = 0
    for kind, lam, group in specs:
        m = len(group)
        if kind == "real":
            B = A - float(lam.real if isinstance(lam, complex) else lam) * np.eye(n)
            lam_val = float(lam.real if isinstance(lam, complex) else lam)
            mu_val, phi_val = abs(lam_val), (0.0 if lam_val >= 0 else math.pi)
        else:
            B = A - lam * np.eye(n, dtype=complex)
            mu_val, phi_val = abs(lam), _phi_of(lam)

        chains = _jordan_chains(B, m, tol)
        got = sum(len(c) for c in chains)
        if got < m:
            # fall back to raw eigenvector columns for the missing ones
            rescued += m - got
            warnings.warn(
                IllConditioned(
                    f"chain construction recovered {got} of {m} vectors near "
                    f"eigenvalue {lam}; filling with raw eigenvectors"
                )
            )
            for idx in group[: m - got]:
                chains.append([evecs[:, idx].astype(B.dtype)])

        for chain in chains:
            chain = _refine_and_scale_chain(chain, B, pi)
            for level, v in enumerate(chain, start=1):
                if kind == "real":
                    rows.append(np.real(v))
                    mus.append(mu_val)
                    phis.append(phi_val)
                    rs.append(level)
                    pairs.append(-1)
                else:
                    i_re = len(rows)
                    rows.append(np.real(v))
                    rows.append(np.imag(v))
                    mus.extend([mu_val, mu_val])
                    phis.extend([phi_val, phi_val])
                    rs.extend([level, level])
                    pairs.extend([i_re + 1, i_re])

    rows.append(pi)
    mus.append(1.0)
    phis.append(0.0)
    rs.append(1)
    pairs.append(-1)

    W = np.vstack(rows)
    if W.shape[0] != n:
        raise ValidationError(
            f"basis construction produced {W.shape[0]} vectors for {n} states"
        )

    mu_arr = np.array(mus)
    key_mu = _merge_moduli(mu_arr, tol)
    cond = float(np.linalg.cond(W))
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(IllConditioned(f"basis condition number {cond:.3e}"))

    reps = sorted({complex(lam) for _, lam, _ in specs} | {1.0 + 0j}, key=lambda z: abs(z))
    gaps = [abs(a - b) for i, a in enumerate(reps) for b in reps[i + 1:]]
    diagnostics = {
        "cond": cond,
        "min_cluster_gap": float(min(gaps)) if gaps else math.inf,
        "rescued": rescued,
    }

    for arr in (W, mu_arr, key_mu):
        arr.setflags(write=False)
    phi_arr = np.array(phis)
    r_arr = np.array(rs, dtype=int)
    pair_arr = np.array(pairs, dtype=int)
    for arr in (phi_arr, r_arr, pair_arr):
        arr.setflags(write=False)
    return EigenStructure(
        W=W, mu=mu_arr, phi=phi_arr, r=r_arr, pair=pair_arr, key_mu=key_mu,
        cond=cond, tol=float(tol), diagnostics=diagnostics,
    )


def _phi_of(lam) -> float:
    phi = abs(math.atan2(lam.imag, lam.real)) if isinstance(lam, complex) else (
        0.0 if lam >= 0 else math.pi
    )
    return float(phi)


def _merge_moduli(mu_arr, tol):
    # moduli of one block family can differ by rounding (a negative real and
    # a positive real of equal modulus, say); snap them to one representative.
    # The stationary row keeps its exact 1.0 and never merges.
    rep = mu_arr.copy()
    order = np.argsort(mu_arr[:-1])
    if order.size == 0:
        return rep
    group = [int(order[0])]
    for cur in order[1:]:
        cur = int(cur)
        if mu_arr[cur] - mu_arr[group[-1]] <= tol:
            group.append(cur)
        else:
            rep[group] = max(float(mu_arr[i]) for i in group)
            group = [cur]
    rep[group] = max(float(mu_arr[i]) for i in group)
    return rep


def project(es: EigenStructure, v, key) -> np.ndarray:
    """Component of ``v`` along one (modulus, chain index) block.

    Expands ``v`` in the basis, keeps the coefficients whose rows match the
    key, and recombines. An empty key gives the zero vector.
    """
    c = es.coefficients(v)
    idx = es.key_indices(key)
    if idx.size == 0:
        return np.zeros(es.n)
    return c[idx] @ es.W[idx]


def _expansion_scale(es, c):
    return float(np.abs(c[:-1]) @ es._row_l1[:-1])


def compare_convergence(es: EigenStructure, u, v, tol=None) -> DominanceResult:
    """Decide whether start ``u`` converges to stationarity faster than ``v``.

    Walks block labels from lexicographically largest (modulus, then chain
    index) down to the first where the two projections are not both
    negligible. ``u`` is Faster when its projection there is a scalar multiple
    ``a`` of ``v``'s with ``|a| < 1 - tol`` (a vanishing projection counts,
    with a = 0); Slower is the mirror image; anything else at that block is
    Incomparable. Equal means the distributions coincide within tol.
    """
    if tol is None:
        tol = es.tol
    u = as_distribution(u, es.n).weights
    v = as_distribution(v, es.n).weights
    if np.max(np.abs(u - v)) <= tol:
        return DominanceResult(EQUAL)

    cu = es.coefficients(u)
    cv = es.coefficients(v)
    scale = max(1.0, _expansion_scale(es, cu), _expansion_scale(es, cv))

    for key in es.keys():
        idx = es.key_indices(key)
        pu = cu[idx] @ es.W[idx]
        pv = cv[idx] @ es.W[idx]
        nu = float(np.abs(pu).sum())
        nv = float(np.abs(pv).sum())
        zu = nu <= tol * scale
        zv = nv <= tol * scale
        if zu and zv:
            continue
        if zu:
            return DominanceResult(FASTER, key, 0.0)
        if zv:
            return DominanceResult(SLOWER, key, 0.0)

        sign = float(np.sign(pu @ pv))
        a = sign * nu / nv
        residual = float(np.abs(pu - a * pv).sum())
        if sign == 0.0 or residual > tol * scale * max(1.0, abs(a)):
            return DominanceResult(INCOMPARABLE, key)
        if nu / nv < 1.0 - tol:
            return DominanceResult(FASTER, key, a)
        if nv / nu < 1.0 - tol:
            return DominanceResult(SLOWER, key, sign * nv / nu)
        return DominanceResult(INCOMPARABLE, key)

    return DominanceResult(INCOMPARABLE)


def rank_sources(es, tol=None) -> SourceRanking:
    """Rank all point-mass starts by their dominant-block projection size.

    Parameters
    ----------
    es : EigenStructure, TransitionMatrix, or array-like
        A prebuilt structure, or a chain from which to build one.
    tol : float, optional
        Clustering tolerance when a structure has to be built, and zero
        threshold otherwise; defaults to the structure's own.

    Returns
    -------
    SourceRanking
        States sorted by ascending projection magnitude. When the dominant
        block's image is more than one-dimensional (a complex pair, two
        blocks of equal modulus and index) the ranking is flagged degenerate:
        the pairwise theory cannot produce a strict order there.
    """
    if not isinstance(es, EigenStructure):
        es = eigen_structure(es, tol if tol is not None else DEFAULT_CLUSTER_TOL)
    keys = es.keys()
    key0 = keys[0]
    idx = es.key_indices(key0)
    degenerate = idx.size != 1

    coeffs = es._inv_wt[idx, :]
    proj = coeffs.T @ es.W[idx]
    q = np.abs(proj).sum(axis=1)
    sigma = tuple(int(s) for s in np.argsort(q, kind="stable"))
    q.setflags(write=False)
    return SourceRanking(key=key0, q=q, sigma=sigma, degenerate=degenerate)


_NORMS = {
    "L1": lambda d: float(np.abs(d).sum()),
    "L2": lambda d: float(np.sqrt((d * d).sum())),
    "Linf": lambda d: float(np.max(np.abs(d))),
}


def tv_curve(P, start, norm_id="L1", n_max=500) -> TVCurve:
    """Distance of ``start . P^n`` to the stationary distribution, n = 0..n_max.

    ``start`` may be a 0-based state index or a distribution. ``norm_id`` is
    one of L1, L2, Linf; L1 is the total-variation convention used by the
    sink/source theory (no factor 1/2).
    """
    tm = as_transition_matrix(P)
    report = analyze_structure(tm)
    if not report.irreducible:
        raise NotIrreducible("tv_curve requires an irreducible chain")
    if report.period != 1:
        raise AperiodicityViolation(f"chain has period {report.period}")
    if norm_id not in _NORMS:
        raise ValidationError(f"unknown norm {norm_id!r}; expected one of {sorted(_NORMS)}")
    norm = _NORMS[norm_id]

    if isinstance(start, (int, np.integer)):
        w = np.zeros(tm.n)
        w[int(start)] = 1.0
        start_dist = as_distribution(w)
    else:
        start_dist = as_distribution(start, tm.n)

    pi = stationary(tm).weights
    d = start_dist.weights.copy()
    values = np.empty(int(n_max) + 1)
    for k in range(int(n_max) + 1):
        values[k] = norm(d - pi)
        if k < n_max:
            d = d @ tm.entries
    values.setflags(write=False)
    return TVCurve(start=start, norm_id=norm_id, values=values)


def predicted_decay(es: EigenStructure, key, coeff, n) -> float:
    """Leading-term magnitude C(n, r-1) mu^(n-(r-1)) |coeff| for one block.

    This is the decay scale a start with coefficient ``coeff`` on the block's
    chain top exhibits at step ``n``; use it to normalize empirical curves.
    """
    key = _as_key(key)
    if es.key_indices(key).size == 0:
        raise ValidationError(f"no basis block matches key {key}")
    n = int(n)
    k = key.r - 1
    if n < k:
        return 0.0
    return float(math.comb(n, k) * key.mu ** (n - k) * abs(coeff))
