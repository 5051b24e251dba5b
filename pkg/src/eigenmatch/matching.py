"""Sign and permutation search aligning the eigenfunctions of shape Y to shape X.

Parameters ``(signs, perm)`` act on Y: the matched i-th eigenfunction is
``signs[i] * phiY[:, perm[i]]``. All indices are 0-based.

The search runs in four steps:

1. initial signs from the products of the diagonal moments, identity perm;
2. steepest descent over permutation moves (adjacent swaps, pairs of
   adjacent swaps, rearrangements of three consecutive slots and 4-cycles
   of four consecutive slots, each with every sign option on the touched
   slots), minimizing the value-moment cost ``C + C^S``;
3. every flip of at most four signs, again on ``C + C^S``; steps 2 and 3
   repeat while the cost decreases, and the best sign sequences are kept.
   The descent runs from the Step-1 signs and from the best Step-3 signs
   of that start, and the lower result wins;
4. the kept candidates are ranked by the full cost including the
   gradient terms weighted by ``alpha``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, EmptyCandidateError
from .moments import MomentSet

log = logging.getLogger(__name__)

ZERO_DIAGONAL_RTOL = 1e-10
MAX_FLIPS = 4
DEFAULT_K = 32
TIE_RTOL = 1e-12


def _is_full_cycle(order):
    seen, k = 0, 0
    while True:
        k = order[k]
        seen += 1
        if k == 0:
            return seen == len(order)


FOUR_CYCLES = [q for q in itertools.permutations(range(4)) if _is_full_cycle(q)]


@dataclass(frozen=True)
class MatchParams:
    signs: tuple
    perm: tuple

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        perm = tuple(int(p) for p in self.perm)
        if len(signs) != len(perm):
            raise ValueError("signs and perm must have the same length")
        if any(s not in (1, -1) for s in signs):
            raise ValueError(f"signs must be +1 or -1, got {signs}")
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"perm is not a permutation of 0..{len(perm) - 1}: {perm}")
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, N):
        return cls((1,) * N, tuple(range(N)))

    @property
    def N(self):
        return len(self.perm)

    @property
    def n_flips(self):
        return sum(s < 0 for s in self.signs)

    def inverse(self):
        inv = [0] * self.N
        signs = [1] * self.N
        for i, p in enumerate(self.perm):
            inv[p] = i
            signs[p] = self.signs[i]
        return MatchParams(signs, inv)

    def then(self, other):
        """Params equivalent to applying ``self`` and then ``other``."""
        return MatchParams(
            [other.signs[i] * self.signs[other.perm[i]] for i in range(self.N)],
            [self.perm[other.perm[i]] for i in range(self.N)],
        )

    def sort_key(self):
        return (self.n_flips, tuple(s < 0 for s in self.signs))


@dataclass(frozen=True)
class CostBreakdown:
    c_mu: float
    c_muS: float
    c_xi: float
    c_xiS: float
    alpha: float

    @property
    def base(self):
        return self.c_mu + self.c_muS

    @property
    def total(self):
        return self.c_mu + self.c_muS + self.alpha * (self.c_xi + self.c_xiS)

    def as_dict(self):
        return {"c_mu": self.c_mu, "c_muS": self.c_muS, "c_xi": self.c_xi,
                "c_xiS": self.c_xiS, "alpha": self.alpha, "total": self.total}


@dataclass
class MatchResult:
    params: MatchParams
    cost: CostBreakdown
    candidates: list  # [(MatchParams, CostBreakdown)] sorted by total cost
    degeneracy_flags: list = field(default_factory=list)
    undetermined: tuple = ()
    iterations: int = 0


def _check_dims(mx, my):
    if mx.mu.shape != my.mu.shape:
        raise DimensionMismatchError(f"N differs: {mx.N} vs {my.N}")
    if mx.muS.shape != my.muS.shape or mx.xi.shape != my.xi.shape:
        raise DimensionMismatchError(
            f"moment shapes differ: Q {mx.Q} vs {my.Q}, P {mx.P} vs {my.P}")


def _arrays(params):
    if isinstance(params, MatchParams):
        params = [params]
    perms = np.array([p.perm for p in params], dtype=np.int64)
    signs = np.array([p.signs for p in params], dtype=np.float64)
    return perms, signs


def cost_mu(mx, my, p):
    _check_dims(mx, my)
    return float(kernels.cost_mu_batch(mx.mu, my.mu, *_arrays(p))[0])


def cost_muS(mx, my, p):
    _check_dims(mx, my)
    return float(kernels.cost_muS_batch(mx.muS, my.muS, *_arrays(p))[0])


def cost_xi(mx, my, p):
    _check_dims(mx, my)
    return float(kernels.cost_xi_batch(mx.xi, my.xi, *_arrays(p))[0])


def cost_xiS(mx, my, p):
    _check_dims(mx, my)
    return float(kernels.cost_xiS_batch(mx.xiS, my.xiS, *_arrays(p))[0])


def base_costs(mx, my, perms, signs):
    """``C + C^S`` for a batch of parameter rows."""
    return (kernels.cost_mu_batch(mx.mu, my.mu, perms, signs)
            + kernels.cost_muS_batch(mx.muS, my.muS, perms, signs))


def total_cost(mx, my, p, alpha=None):
    """Per-term costs of ``p``; ``alpha`` defaults to shape X's balance weight."""
    _check_dims(mx, my)
    alpha = mx.alpha if alpha is None else float(alpha)
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return CostBreakdown(cost_mu(mx, my, p), cost_muS(mx, my, p),
                         cost_xi(mx, my, p), cost_xiS(mx, my, p), alpha)


def gauge_transform(m, p):
    """Moments of the eigenbasis that ``p`` maps back onto ``m``.

    If ``my = gauge_transform(mx, p)`` then ``total_cost(mx, my, p) == 0``.
    """
    perm = np.asarray(p.perm)
    s = np.asarray(p.signs, dtype=np.float64)
    s3 = s[:, None, None] * s[None, :, None] * s[None, None, :]
    mu = np.empty_like(m.mu)
    mu[np.ix_(perm, perm, perm)] = s3 * m.mu
    xi = np.empty_like(m.xi)
    xi[np.ix_(perm, perm, perm)] = s3[..., None] * m.xi
    muS = np.empty_like(m.muS)
    muS[perm] = s[:, None] * m.muS
    xiS = np.empty_like(m.xiS)
    xiS[perm[:, None], :, perm[None, :]] = (s[:, None, None, None] * s[None, None, :, None] * m.xiS
                                             ).transpose(0, 2, 1, 3)
    return MomentSet(mu, xi, muS, xiS, m.alpha, m.TH)


def _zero_diagonal(m):
    diag = np.abs(np.einsum("iii->i", m.mu))
    return diag < ZERO_DIAGONAL_RTOL * np.linalg.norm(m.mu)


def undetermined_indices(mx, my, p):
    """Slots whose diagonal third moment vanishes on either shape."""
    zx = _zero_diagonal(mx)
    zy = _zero_diagonal(my)[list(p.perm)]
    return tuple(int(i) for i in np.flatnonzero(zx | zy))


def init_signs(mx, my):
    """Step 1: ``s_i = sign(muX_iii * muY_iii)`` with +1 where that product vanishes."""
    _check_dims(mx, my)
    prod = np.einsum("iii->i", mx.mu) * np.einsum("iii->i", my.mu)
    zero = _zero_diagonal(mx) | _zero_diagonal(my)
    signs = np.where((prod < 0) & ~zero, -1, 1)
    return MatchParams(signs, range(mx.N))


def _flip_masks(m):
    return list(itertools.product((1.0, -1.0), repeat=m))


def permutation_moves(p):
    """All Step-2 neighbours of ``p`` in fixed scan order, as (perms, signs) arrays."""
    N = p.N
    perm0 = np.array(p.perm, dtype=np.int64)
    sign0 = np.array(p.signs, dtype=np.float64)
    perms, signs = [], []

    def emit(order, touched):
        base_p = perm0[order]
        base_s = sign0[order]
        for mask in _flip_masks(len(touched)):
            s = base_s.copy()
            s[touched] *= mask
            perms.append(base_p)
            signs.append(s)

    # adjacent swap at i, optionally combined with a disjoint adjacent swap at k
    for i in range(N - 1):
        for k in [None] + list(range(i + 2, N - 1)):
            order = np.arange(N)
            order[[i, i + 1]] = [i + 1, i]
            touched = [i, i + 1]
            if k is not None:
                order[[k, k + 1]] = [k + 1, k]
                touched += [k, k + 1]
            emit(order, touched)
    # rearrangements of three consecutive slots not covered by adjacent swaps
    for i in range(N - 2):
        for shift in ((1, 2, 0), (2, 0, 1), (2, 1, 0)):
            order = np.arange(N)
            order[i:i + 3] = [i + shift[0], i + shift[1], i + shift[2]]
            emit(order, [i, i + 1, i + 2])
    # 4-cycles of four consecutive slots: an adjacent swap overlapping a 3-cycle
    for i in range(N - 3):
        for shift in FOUR_CYCLES:
            order = np.arange(N)
            order[i:i + 4] = [i + k for k in shift]
            emit(order, [i, i + 1, i + 2, i + 3])
    if not perms:
        return np.empty((0, N), dtype=np.int64), np.empty((0, N))
    return np.array(perms), np.array(signs)


def search_permutations(mx, my, p):
    """Step 2: steepest descent over the permutation move profiles.

    Each pass applies the best move of the whole neighbourhood (the first
    in scan order on exact ties) until no move lowers ``C + C^S``.
    """
    _check_dims(mx, my)
    current = p
    cost = base_costs(mx, my, *_arrays(current))[0]
    while True:
        perms, signs = permutation_moves(current)
        if perms.shape[0] == 0:
            return current
        costs = base_costs(mx, my, perms, signs)
        m = int(np.argmin(costs))
        if not costs[m] < cost:
            return current
        current = MatchParams(signs[m].astype(int), perms[m])
        cost = costs[m]


def _flip_subsets(N, priority=()):
    """Index subsets of size <= MAX_FLIPS, subsets of ``priority`` first."""
    pri = [i for i in priority if 0 <= i < N]
    seen = set()
    out = []
    for pool in (pri, range(N)):
        for m in range(min(MAX_FLIPS, N) + 1):
            for sub in itertools.combinations(pool, m):
                key = tuple(sorted(sub))
                if key not in seen:
                    seen.add(key)
                    out.append(key)
    return out


def _flip_matrix(N, priority=()):
    subsets = _flip_subsets(N, priority)
    masks = np.ones((len(subsets), N))
    for row, sub in enumerate(subsets):
        masks[row, list(sub)] = -1.0
    return subsets, masks


def escape_search(mx, my, p, chunk=8192):
    """Every Step-2 move followed by every flip of at most four signs.

    Used once Steps 2 and 3 stall: a permutation move whose benefit only
    shows after re-signing untouched slots is invisible to either step
    alone. Returns the best params found (``p`` itself if nothing improves).
    """
    cost = base_costs(mx, my, *_arrays(p))[0]
    perms, signs = permutation_moves(p)
    if perms.shape[0] == 0:
        return p
    _, masks = _flip_matrix(p.N)
    S = masks.shape[0]
    best, best_cost = p, cost
    rows_per_chunk = max(1, chunk // S)
    for start in range(0, perms.shape[0], rows_per_chunk):
        mp = perms[start:start + rows_per_chunk]
        ms = signs[start:start + rows_per_chunk]
        cand_p = np.repeat(mp, S, axis=0)
        cand_s = (ms[:, None, :] * masks[None, :, :]).reshape(-1, p.N)
        costs = base_costs(mx, my, cand_p, cand_s)
        m = int(np.argmin(costs))
        if costs[m] < best_cost:
            best_cost = costs[m]
            best = MatchParams(cand_s[m].astype(int), cand_p[m])
    return best


def _rank(entries, tol=0.0):
    """Sort ``[(cost, MatchParams)]`` by cost; costs within ``tol`` of a
    group's lowest cost tie and are ordered by fewer flips, then signs."""
    entries = sorted(entries, key=lambda e: (e[0],) + e[1].sort_key())
    out = []
    n = 0
    while n < len(entries):
        m = n + 1
        while m < len(entries) and entries[m][0] - entries[n][0] <= tol:
            m += 1
        out += sorted(entries[n:m], key=lambda e: e[1].sort_key())
        n = m
    return out


def tie_tolerance(mx, alpha=0.0):
    """Absolute cost difference treated as a tie: relative to the size of X's moments."""
    scale = np.sum(mx.mu**2) + mx.N * np.sum(mx.muS**2)
    scale += alpha * (np.sum(mx.xi**2) + np.sum(mx.xiS**2))
    return TIE_RTOL * float(scale)


def search_signs(mx, my, p, K=DEFAULT_K, priority=()):
    """Step 3: try every flip of up to four signs at fixed permutation.

    Returns the best params and the ``K`` lowest-cost distinct sign
    sequences as ``[(MatchParams, base_cost)]``. Sign sequences that only
    flip ``priority`` slots relative to the best are always kept.
    """
    _check_dims(mx, my)
    N = p.N
    _, masks = _flip_matrix(N, priority)
    signs = np.array(p.signs, dtype=np.float64)[None, :] * masks
    perms = np.tile(np.array(p.perm, dtype=np.int64), (masks.shape[0], 1))
    costs = base_costs(mx, my, perms, signs)
    tol = tie_tolerance(mx)
    entries = _rank([(float(c), MatchParams(s.astype(int), p.perm)) for c, s in zip(costs, signs)], tol)
    best = entries[0][1]
    kept = entries[:K]
    pri = [i for i in priority if 0 <= i < N]
    if pri:
        keep = {e[1] for e in kept}
        best_s = np.array(best.signs)
        for c, q in entries[K:]:
            diff = np.flatnonzero(np.array(q.signs) != best_s)
            if q not in keep and set(diff.tolist()) <= set(pri):
                kept.append((c, q))
                keep.add(q)
        kept = _rank(kept, tol)
    return best, [(q, c) for c, q in kept]


def final_select(mx, my, candidates, alpha=None):
    """Step 4: rank candidates by the full cost including gradient terms."""
    if not candidates:
        raise EmptyCandidateError("no candidates to select from")
    _check_dims(mx, my)
    alpha = mx.alpha if alpha is None else float(alpha)
    params = [c[0] if isinstance(c, tuple) else c for c in candidates]
    perms, signs = _arrays(params)
    c_mu = kernels.cost_mu_batch(mx.mu, my.mu, perms, signs)
    c_muS = kernels.cost_muS_batch(mx.muS, my.muS, perms, signs)
    c_xi = kernels.cost_xi_batch(mx.xi, my.xi, perms, signs)
    c_xiS = kernels.cost_xiS_batch(mx.xiS, my.xiS, perms, signs)
    costs = {q: CostBreakdown(float(a), float(b), float(c), float(d), alpha)
             for a, b, c, d, q in zip(c_mu, c_muS, c_xi, c_xiS, params)}
    ranked = _rank([(c.total, q) for q, c in costs.items()], tie_tolerance(mx, alpha))
    best = ranked[0][1]
    return MatchResult(best, costs[best], [(q, costs[q]) for _, q in ranked])


def _descend(mx, my, p, cost, K, max_rounds, escape):
    """Alternate Step 2 and Step 3 from ``p`` until neither improves."""
    rounds = 0
    while True:
        rounds += 1
        p2 = search_permutations(mx, my, p)
        undetermined = undetermined_indices(mx, my, p2)
        p3, candidates = search_signs(mx, my, p2, K=K, priority=undetermined)
        new_cost = candidates[0][1]
        log.debug("round %d: cost %.6e -> %.6e", rounds, cost, new_cost)
        improved = new_cost < cost
        p, cost = p3, new_cost
        if rounds >= max_rounds:
            break
        if not improved and escape and cost > 0:
            p_esc = escape_search(mx, my, p)
            if p_esc != p:
                log.debug("escape move: %s", p_esc)
                p, cost = p_esc, base_costs(mx, my, *_arrays(p_esc))[0]
                continue
        if not improved:
            break
    return cost, candidates, undetermined, rounds


def match(mx, my, K=DEFAULT_K, alpha=None, max_rounds=100, degeneracy_flags=(), escape=True):
    """Run the full four-step search; ``alpha`` defaults to ``mx.alpha``.

    The Step 2/3 descent runs from two starts: the Step 1 signs as they are,
    and the same signs after one sign search. Noisy diagonal signs can steer
    the permutation descent into a wrong basin, and neither start dominates,
    so the lower final cost wins (the plain start on ties). With ``escape``
    (default) a stalled descent gets combined move-and-resign passes
    (:func:`escape_search`) before giving up.
    """
    _check_dims(mx, my)
    p0 = init_signs(mx, my)
    cost0 = base_costs(mx, my, *_arrays(p0))[0]
    best = _descend(mx, my, p0, cost0, K, max_rounds, escape)
    if best[0] > 0:
        p1, cands = search_signs(mx, my, p0, K=K, priority=undetermined_indices(mx, my, p0))
        if p1 != p0:
            other = _descend(mx, my, p1, cands[0][1], K, max_rounds, escape)
            if other[0] < best[0] - tie_tolerance(mx):
                best = other[:3] + (best[3] + other[3],)
            else:
                best = best[:3] + (best[3] + other[3],)
    _, candidates, undetermined, rounds = best
    result = final_select(mx, my, candidates, alpha)
    result.undetermined = undetermined
    result.iterations = rounds
    result.degeneracy_flags = list(degeneracy_flags)
    return result


def degeneracy_warnings(pairs, N, shape):
    """Human-readable warnings for near-equal eigenvalue pairs inside the band."""
    return [f"shape {shape}: eigenvalues {i} and {j} are nearly equal; "
            "their eigenfunctions may mix" for i, j in pairs if j < N]


def apply_match(basis_y, p, N=None):
    """Matched eigenfunction stack ``signs[i] * phiY[:, perm[i]]``, shape (V, N)."""
    N = p.N if N is None else N
    if N > p.N or N > basis_y.h:
        raise ValueError(f"N={N} exceeds the parameter or basis size")
    phi = basis_y.eigenfunctions
    idx = list(p.perm[:N])
    return phi[:, idx] * np.asarray(p.signs[:N], dtype=np.float64)


def apply_match_stack(stack, p):
    """Same as :func:`apply_match` on a raw (V, N) array."""
    return stack[:, list(p.perm)] * np.asarray(p.signs, dtype=np.float64)
