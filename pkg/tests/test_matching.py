import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_moments, sliced
from eigenmatch import kernels
from eigenmatch.errors import DimensionMismatchError, EmptyCandidateError
from eigenmatch.matching import (
    MatchParams, apply_match, apply_match_stack, base_costs, cost_mu, cost_muS, cost_xi, cost_xiS,
    final_select, gauge_transform, init_signs, match, permutation_moves, search_permutations,
    search_signs, total_cost, undetermined_indices,
)
from eigenmatch.moments import MomentSet


def naive_costs(mx, my, p):
    s, pi = p.signs, p.perm
    N, Q, P = mx.N, mx.Q, mx.P
    c = cs = cx = cxs = 0.0
    for i in range(N):
        for q in range(Q):
            cs += (mx.muS[i, q] - s[i] * my.muS[pi[i], q]) ** 2
            for k in range(N):
                for r in range(P):
                    cxs += (mx.xiS[i, q, k, r] - s[i] * s[k] * my.xiS[pi[i], q, pi[k], r]) ** 2
        for j in range(N):
            for k in range(N):
                sss = s[i] * s[j] * s[k]
                c += (mx.mu[i, j, k] - sss * my.mu[pi[i], pi[j], pi[k]]) ** 2
                for r in range(P):
                    cx += (mx.xi[i, j, k, r] - sss * my.xi[pi[i], pi[j], pi[k], r]) ** 2
    return c, N * cs, cx, cxs


def params_strategy(N):
    return st.tuples(st.permutations(range(N)), st.lists(st.sampled_from([1, -1]), min_size=N, max_size=N)
                     ).map(lambda t: MatchParams(t[1], t[0]))


@pytest.fixture(scope="module")
def rnd():
    rng = np.random.default_rng(0)
    return random_moments(rng, 5), random_moments(rng, 5)


@pytest.fixture(scope="module")
def blob6(blob_shape):
    return sliced(blob_shape.moments, 6)


# --- cost terms -------------------------------------------------------------

def test_costs_match_naive_loops(rnd):
    mx, my = rnd
    p = MatchParams([1, -1, -1, 1, -1], [2, 0, 4, 1, 3])
    c = total_cost(mx, my, p, alpha=0.7)
    ref = naive_costs(mx, my, p)
    assert np.allclose([c.c_mu, c.c_muS, c.c_xi, c.c_xiS], ref, rtol=1e-12)
    assert c.total == c.c_mu + c.c_muS + 0.7 * (c.c_xi + c.c_xiS)
    assert total_cost(mx, my, p, alpha=0.0).total == c.base


def test_small_naive_examples():
    rng = np.random.default_rng(2)
    a, b = random_moments(rng, 3, Q=2), random_moments(rng, 3, Q=2)
    p = MatchParams([1, -1, 1], [1, 2, 0])
    ref = naive_costs(a, b, p)
    assert cost_mu(a, b, p) == pytest.approx(ref[0], rel=1e-12)
    assert cost_muS(a, b, p) == pytest.approx(ref[1], rel=1e-12)
    assert cost_xi(a, b, p) == pytest.approx(ref[2], rel=1e-12)
    assert cost_xiS(a, b, p) == pytest.approx(ref[3], rel=1e-12)


def test_muS_cost_scales_with_N():
    rng = np.random.default_rng(3)
    a, b = random_moments(rng, 3), random_moments(rng, 3)
    p = MatchParams.identity(3)
    # the same muS rows embedded in a 6-slot set (zero tensors elsewhere)
    def pad(m):
        mu = np.zeros((6, 6, 6))
        xi = np.zeros((6, 6, 6, 2))
        muS = np.zeros((6, m.Q))
        muS[:3] = m.muS
        return MomentSet(mu, xi, muS, np.zeros((6, m.Q, 6, 2)), 1.0, 0.1)
    assert cost_muS(pad(a), pad(b), MatchParams.identity(6)) == pytest.approx(2 * cost_muS(a, b, p), rel=1e-14)


def test_xi_flip_parity():
    rng = np.random.default_rng(4)
    m = random_moments(rng, 4)
    zero = np.zeros_like
    xonly = MomentSet(zero(m.mu), m.xi, zero(m.muS), zero(m.xiS), 1.0, 0.1)
    flip = MatchParams([1, 1, -1, 1], range(4))
    assert cost_xi(xonly, xonly, flip) == pytest.approx(4 * np.sum(m.xi[_odd(4, 2)] ** 2), rel=1e-12)


def _odd(N, a):
    idx = np.indices((N, N, N))
    return ((idx == a).sum(axis=0) % 2 == 1)


def test_self_cost_zero_and_flip_zero(blob_shape):
    m = blob_shape.moments
    assert total_cost(m, m, MatchParams.identity(10)).total == 0.0
    p = MatchParams([1, 1, -1] + [1] * 7, range(10))
    assert cost_mu(m, gauge_transform(m, p), p) == 0.0


def test_dimension_mismatch(rnd, blob6):
    with pytest.raises(DimensionMismatchError):
        cost_mu(rnd[0], blob6, MatchParams.identity(5))
    with pytest.raises(DimensionMismatchError):
        match(rnd[0], sliced(blob6, 4))


@settings(max_examples=60, deadline=None)
@given(params_strategy(6), st.floats(0.0, 5.0))
def test_gauge_consistency(p, alpha):
    m = random_moments(np.random.default_rng(11), 6)
    assert total_cost(m, gauge_transform(m, p), p, alpha).total == 0.0


@settings(max_examples=60, deadline=None)
@given(params_strategy(5), params_strategy(5))
def test_cost_nonnegative_and_recomputable(p, q):
    rng = np.random.default_rng(12)
    mx, my = random_moments(rng, 5), random_moments(rng, 5)
    c = total_cost(mx, my, p, 0.3)
    assert min(c.c_mu, c.c_muS, c.c_xi, c.c_xiS) >= 0
    assert c.total == c.c_mu + c.c_muS + 0.3 * (c.c_xi + c.c_xiS)
    # composing gauges: q undoes the transform of Y, then p applies as before
    my2 = gauge_transform(my, q)
    assert total_cost(mx, my2, q.then(p), 0.3).total == pytest.approx(c.total, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(params_strategy(7), params_strategy(7))
def test_params_group_laws(p, q):
    stack = np.random.default_rng(13).normal(size=(9, 7))
    assert p.then(p.inverse()) == MatchParams.identity(7)
    assert np.array_equal(apply_match_stack(apply_match_stack(stack, p), p.inverse()), stack)
    assert np.array_equal(apply_match_stack(apply_match_stack(stack, p), q),
                          apply_match_stack(stack, p.then(q)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(2, 9), st.integers(0, 2**31 - 1))
def test_kernel_backends_agree(M, N, seed):
    try:
        kernels.get_backend("cython")
    except ImportError:
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(seed)
    mx, my = random_moments(rng, N), random_moments(rng, N)
    perms = np.array([rng.permutation(N) for _ in range(M)])
    signs = rng.choice([-1.0, 1.0], size=(M, N))
    for name, a, b in (("mu", mx.mu, my.mu), ("muS", mx.muS, my.muS),
                       ("xi", mx.xi, my.xi), ("xiS", mx.xiS, my.xiS)):
        fn = getattr(kernels, f"cost_{name}_batch")
        c = fn(a, b, perms, signs, backend="cython")
        py = fn(a, b, perms, signs, backend="python")
        assert np.allclose(c, py, rtol=1e-12, atol=0)


def test_params_validation():
    with pytest.raises(ValueError):
        MatchParams([1, 1], [0, 0])
    with pytest.raises(ValueError):
        MatchParams([1, 0], [0, 1])
    with pytest.raises(ValueError):
        MatchParams([1], [0, 1])


# --- step 1 ------------------------------------------------------------------

def _diag_set(values):
    N = len(values)
    mu = np.zeros((N, N, N))
    for i, v in enumerate(values):
        mu[i, i, i] = v
    mu[0, 1, 2] = 1.0  # keeps the tensor norm away from zero
    return MomentSet(mu, np.zeros((N, N, N, 2)), np.zeros((N, 1)), np.zeros((N, 1, N, 2)), 1.0, 0.1)


def test_init_signs_examples():
    mx = _diag_set([0.3, 0.3, 0.0])
    my = _diag_set([0.3, -0.2, 0.4])
    p = init_signs(mx, my)
    assert p.signs == (1, -1, 1)
    assert p.perm == (0, 1, 2)
    assert undetermined_indices(mx, my, p) == (2,)


def test_antisymmetric_diagonal_vanishes(mirror_shape):
    # odd eigenfunctions of the mirror-symmetric blob have mu_iii = 0
    m = mirror_shape.moments
    und = undetermined_indices(m, m, MatchParams.identity(10))
    assert und == (3, 6, 7)
    for i in und:
        assert abs(m.mu[i, i, i]) < 1e-10 * np.linalg.norm(m.mu)
    assert init_signs(m, m).signs[3] == 1


# --- step 2 ------------------------------------------------------------------

def test_move_profiles():
    perms, signs = permutation_moves(MatchParams.identity(5))
    assert perms.shape == signs.shape
    orders = {tuple(p) for p in perms}
    assert (1, 0, 2, 3, 4) in orders
    assert (1, 0, 3, 2, 4) in orders
    assert (0, 2, 3, 1, 4) in orders and (0, 3, 1, 2, 4) in orders
    assert (0, 4, 2, 3, 1) not in orders
    # 4-cycles of consecutive slots, but not the double transposition (0 3)(1 2)
    assert (1, 2, 3, 0, 4) in orders and (0, 4, 1, 2, 3) in orders
    assert (3, 2, 1, 0, 4) not in orders
    assert len(orders) == 4 + 3 + 3 * 3 + 2 * 6


def test_step2_recovers_overlapping_swap_and_cycle(blob_shape):
    # a swap sharing one slot with a 3-cycle makes a 4-cycle; no single
    # smaller move lowers the cost from the identity
    m = blob_shape.moments
    p = MatchParams([1] * 10, [0, 3, 1, 4, 2, 5, 6, 7, 8, 9])
    out = search_permutations(m, gauge_transform(m, p), MatchParams.identity(10))
    assert out == p


def test_step2_recovers_pair_swap(blob_shape):
    m = blob_shape.moments
    p = MatchParams.identity(10)
    swapped = MatchParams([1] * 10, [0, 1, 2, 4, 3, 5, 6, 7, 8, 9])
    my = gauge_transform(m, swapped)
    out = search_permutations(m, my, p)
    assert out == swapped
    assert base_costs(m, my, [out.perm], [out.signs])[0] == 0.0
    assert search_permutations(m, m, p) == p


def test_step2_recovers_triple_cycle(blob_shape):
    m = blob_shape.moments
    cyc = MatchParams([1] * 10, [0, 1, 3, 4, 2, 5, 6, 7, 8, 9])
    my = gauge_transform(m, cyc)
    out = search_permutations(m, my, MatchParams.identity(10))
    assert out == cyc
    assert total_cost(m, my, out).base == 0.0


# --- step 3 ------------------------------------------------------------------

def test_step3_four_flips(blob_shape):
    m = blob_shape.moments
    p = MatchParams([1, -1, 1, -1, 1, 1, -1, 1, -1, 1], range(10))
    best, cands = search_signs(m, gauge_transform(m, p), MatchParams.identity(10), K=8)
    assert best == p and cands[0][1] == 0.0
    assert len(cands) == 8
    assert all(cands[i][1] <= cands[i + 1][1] for i in range(7))
    best, _ = search_signs(m, m, MatchParams.identity(10))
    assert best == MatchParams.identity(10)


def test_step3_matches_exhaustive_signs(blob_shape):
    m = sliced(blob_shape.moments, 5)
    rng = np.random.default_rng(7)
    my = random_moments(rng, 5, Q=m.Q)
    best, _ = search_signs(m, my, MatchParams.identity(5))
    allp = [MatchParams(s, range(5)) for s in itertools.product((1, -1), repeat=5)]
    costs = [total_cost(m, my, q).base for q in allp]
    assert total_cost(m, my, best).base == pytest.approx(min(costs), rel=1e-12)


# --- step 4 and the full search ---------------------------------------------

def test_final_select():
    rng = np.random.default_rng(8)
    mx, my = random_moments(rng, 4), random_moments(rng, 4)
    only = MatchParams([1, -1, 1, 1], range(4))
    assert final_select(mx, my, [(only, 0.0)]).params == only
    with pytest.raises(EmptyCandidateError):
        final_select(mx, my, [])


def test_final_select_uses_gradient_terms(mirror_shape):
    m = mirror_shape.moments
    truth = MatchParams([1, 1, 1, 1, 1, 1, -1, -1, 1, 1], range(10))
    mirrored = MatchParams([1, 1, 1, -1, 1, 1, 1, 1, 1, 1], range(10))
    my = gauge_transform(m, truth)
    assert abs(total_cost(m, my, truth).base - total_cost(m, my, mirrored).base) <= 1e-10
    res = final_select(m, my, [(mirrored, 0.0), (truth, 0.0)])
    assert res.params == truth
    # without gradient terms the tie goes to fewer flips, i.e. the mirror image
    assert final_select(m, my, [(truth, 0.0), (mirrored, 0.0)], alpha=0.0).params == mirrored


def test_self_match(blob_shape):
    m = blob_shape.moments
    r = match(m, m)
    assert r.params == MatchParams.identity(10)
    assert r.cost.total == 0.0
    assert r.cost.total <= min(c.total for _, c in r.candidates)


def _exhaustive(mx, my):
    N = mx.N
    perms = np.array(list(itertools.permutations(range(N))))
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=N)))
    P = np.repeat(perms, len(signs), axis=0)
    S = np.tile(signs, (len(perms), 1))
    c = base_costs(mx, my, P, S)
    return float(c.min())


@pytest.mark.parametrize("perm, signs", [
    ((1, 0, 2, 3, 4, 5), (1, 1, 1, 1, 1, 1)),
    ((0, 2, 1, 4, 3, 5), (1, -1, 1, 1, -1, 1)),
    ((0, 1, 3, 4, 2, 5), (1, 1, -1, 1, 1, -1)),
    ((0, 2, 1, 3, 5, 4), (-1, 1, -1, 1, -1, 1)),
])
def test_small_N_exhaustive_agreement(blob6, perm, signs):
    p = MatchParams(signs, perm)
    my = gauge_transform(blob6, p)
    r = match(blob6, my)
    assert r.cost.base == pytest.approx(_exhaustive(blob6, my), abs=1e-14)
    assert r.params == p


def test_small_N_unrelated_pair_audit(blob6):
    # an unrelated Y: no zero-cost answer, but the audit trail must hold
    my = random_moments(np.random.default_rng(9), 6, Q=blob6.Q)
    r = match(blob6, my)
    assert r.cost.base >= _exhaustive(blob6, my) - 1e-12
    totals = [total_cost(blob6, my, q).total for q, _ in r.candidates]
    assert r.cost.total == pytest.approx(min(totals), rel=1e-12)
    assert r.params in [q for q, _ in r.candidates]


def test_loop_is_monotone(blob_shape, monkeypatch):
    import eigenmatch.matching as mm
    m = blob_shape.moments
    my = gauge_transform(m, MatchParams([1, -1, 1, 1, -1, 1, 1, 1, 1, 1], [0, 2, 1, 3, 5, 6, 4, 7, 8, 9]))
    seen = []
    orig = mm.search_signs

    def spy(*a, **k):
        out = orig(*a, **k)
        seen.append(out[1][0][1])
        return out

    monkeypatch.setattr(mm, "search_signs", spy)
    mm.match(m, my)
    assert seen[-1] <= seen[0]


def test_apply_match(blob_shape):
    b = blob_shape.basis
    p = MatchParams([1, -1, 1], [2, 0, 1])
    out = apply_match(b, p, 3)
    assert np.array_equal(out[:, 0], b.eigenfunctions[:, 2])
    assert np.array_equal(out[:, 1], -b.eigenfunctions[:, 0])
    assert np.array_equal(apply_match(b, MatchParams.identity(4)), b.eigenfunctions[:, :4])
