from fractions import Fraction

import pytest

from rpm3.algebra import make_rng, mat_mul, mat_mul_schoolbook, random_matrix
from rpm3.errors import MissingSharedEvals, TooFewWorkers
from rpm3.fountain import encode_blocks
from rpm3.lagrange import EvalPoints, eval_pair
from rpm3.protocol import (
    BOOTSTRAP,
    ClusterPlan,
    RoundState,
    cluster_workers,
    d_first,
    d_other,
    encode_task,
    interpolate_cluster,
    run_coordinator,
)
from rpm3.sim import ClusterRates
from rpm3.fountain import SpecSampler

Q = 10007


def lemma_identity_holds(st):
    mk = st.m * st.k
    denom = 2 * mk * (1 + st.epsilon) + (st.z - 1) * sum(st.taus) + st.z * st.taus[0]
    return Fraction(mk, st.responses_used) == Fraction(mk, 1) / denom


# ---------------------------------------------------------------- clustering


def test_cluster_workers_two_groups():
    comps = [(0, 1.0), (1, 1.0), (2, 1.0), (3, 10.0), (4, 10.0)]
    plan = cluster_workers(comps, delta=1.0, z=1)
    assert plan.sizes == [3, 2]
    assert plan.d_values == [1, 1]
    assert plan.needed_responses(0) == 3
    assert plan.needed_responses(1) == 2


def test_cluster_workers_absorbs_until_payload_room():
    # a tight window would leave cluster 1 with no payload room; the window
    # grows until the plan is decodable, then the short tail is merged
    comps = [(0, 1.0), (1, 2.0), (2, 10.0), (3, 11.0)]
    plan = cluster_workers(comps, delta=2.0, z=1)
    assert sum(plan.sizes) == 4
    assert all(d >= 1 for d in plan.d_values)


def test_cluster_workers_setting_like_groups():
    # synthetic completion times with five well-separated bands reproduce
    # the band sizes; payload counts follow the floor formulas
    z = 10
    sizes = [220, 240, 160, 150, 230]
    comps = []
    w = 0
    for g, size in enumerate(sizes):
        for i in range(size):
            comps.append((w, 10.0 * g + i / (size + 1)))
            w += 1
    plan = cluster_workers(comps, delta=2.0, z=z)
    assert plan.sizes == sizes
    assert plan.d_values[0] == d_first(220, z) == 100
    assert plan.d_values[1] == d_other(240, z) == 115


def test_cluster_workers_too_few():
    with pytest.raises(TooFewWorkers):
        cluster_workers([(0, 1.0), (1, 2.0)], delta=1.0, z=1)


def test_cluster_plan_rejects_empty_payload():
    with pytest.raises(TooFewWorkers):
        ClusterPlan(z=2, members=[[0, 1, 2, 3], [4, 5, 6]])  # d_1 = 0


# ---------------------------------------------------------------- encoding


def build_state(z, m, k, n, seed=0, q=Q):
    rng = make_rng(seed, 0)
    a = random_matrix(rng, 2 * m, 3, q=q)
    b = random_matrix(rng, 3, 2 * k, q=q)
    ablocks = [type(a)(q, a.data[2 * i : 2 * i + 2, :]) for i in range(m)]
    bblocks = [type(b)(q, b.data[:, 2 * j : 2 * j + 2]) for j in range(k)]
    d_boot = d_first(n, z)
    pts = EvalPoints.canonical(d_boot, z, n, q)
    state = RoundState(
        z=z,
        q=q,
        pts=pts,
        sampler=SpecSampler(m, k),
        ablocks=ablocks,
        bblocks=bblocks,
        field_rng=make_rng(seed, 1),
        fountain_rng=make_rng(seed, 3),
    )
    state.ensure_pair(1, BOOTSTRAP, d_boot)
    return state, pts, ablocks, bblocks


def test_encode_task_caches_pair_and_masks():
    z, m, k, n = 1, 2, 2, 8
    state, pts, _, _ = build_state(z, m, k, n)
    plan = cluster_workers([(w, float(w < 4)) for w in range(n)], delta=0.5, z=z)
    s1 = encode_task(state, plan, pts, plan.members[0][0], 2)
    s2 = encode_task(state, plan, pts, plan.members[0][1], 2)
    assert s1.x != s2.x
    assert state.specs[(2, 0)] is not None
    assert len(state.masks[2][0]) == z
    # second cluster of the same round reuses the round masks
    encode_task(state, plan, pts, plan.members[1][0], 2)
    assert state.pairs[(2, 1)].randoms_f == state.masks[2][0]
    # masks are fresh across rounds
    encode_task(state, plan, pts, plan.members[0][0], 3)
    assert state.masks[3][0] != state.masks[2][0]


def test_share_is_lagrange_combination():
    z, m, k, n = 1, 1, 1, 5
    state, pts, ablocks, bblocks = build_state(z, m, k, n, seed=7)
    share = encode_task(state, None, pts, 2, 1)
    pair = state.pairs[(1, BOOTSTRAP)]
    fv, gv = eval_pair(pair, pts, pts.betas[2])
    assert share.fshare == fv and share.gshare == gv


def test_interpolate_cluster_flow():
    z, m, k, n = 1, 2, 1, 9
    state, pts, ablocks, bblocks = build_state(z, m, k, n, seed=3)
    plan = cluster_workers(
        [(w, 0.0 if w < 5 else 5.0) for w in range(n)], delta=1.0, z=z
    )
    assert plan.sizes == [5, 4]
    # cluster 1, round 2: needs 2d+2z-1 responses and caches the shared values
    responses = []
    for w in plan.members[0]:
        sh = encode_task(state, plan, pts, w, 2)
        responses.append((sh.x, mat_mul(sh.fshare, sh.gshare)))
    needed = plan.needed_responses(0)
    packets = interpolate_cluster(state, plan, pts, 0, 2, responses[:needed])
    assert len(packets) == plan.d_values[0]
    for spec, value in packets:
        av, bv = encode_blocks(spec, ablocks, bblocks)
        assert value == mat_mul(av, bv)
    assert 2 in state.shared
    masks = state.masks[2]
    for delta in range(z):
        assert state.shared[2][delta] == mat_mul(masks[0][delta], masks[1][delta])
    # cluster 2 decodes with 2d+z-1 worker responses plus the cached values
    responses2 = []
    for w in plan.members[1]:
        sh = encode_task(state, plan, pts, w, 2)
        responses2.append((sh.x, mat_mul(sh.fshare, sh.gshare)))
    needed2 = plan.needed_responses(1)
    assert needed2 == 2 * plan.d_values[1] + z - 1
    packets2 = interpolate_cluster(state, plan, pts, 1, 2, responses2[:needed2])
    for spec, value in packets2:
        av, bv = encode_blocks(spec, ablocks, bblocks)
        assert value == mat_mul(av, bv)


def test_interpolate_requires_shared_values():
    z, m, k, n = 1, 2, 1, 9
    state, pts, _, _ = build_state(z, m, k, n, seed=3)
    plan = cluster_workers(
        [(w, 0.0 if w < 5 else 5.0) for w in range(n)], delta=1.0, z=z
    )
    responses2 = []
    for w in plan.members[1]:
        sh = encode_task(state, plan, pts, w, 3)
        responses2.append((sh.x, mat_mul(sh.fshare, sh.gshare)))
    with pytest.raises(MissingSharedEvals):
        interpolate_cluster(state, plan, pts, 1, 3, responses2[: plan.needed_responses(1)])


# ---------------------------------------------------------------- coordinator


def oracle_product(seed, dims, q):
    rng = make_rng(seed, 0)
    r, s, ell = dims
    a = random_matrix(rng, r, s, q=q)
    b = random_matrix(rng, s, ell, q=q)
    return mat_mul_schoolbook(a, b)


def test_coordinator_smallest_instance():
    rates = ClusterRates((1.0,), (0.5,))
    res = run_coordinator(
        n=3, z=1, m=1, k=1, rates=rates, worker_class=[0, 0, 0], model=1,
        delta=10.0, seed=5, dims=(2, 2, 2), q=Q,
    )
    st = res.stats
    assert st.taus[0] == 1
    assert res.product == oracle_product(5, (2, 2, 2), Q)
    assert lemma_identity_holds(st)


@pytest.mark.parametrize("model", [1, 2])
def test_coordinator_decodes_exactly(model):
    rates = ClusterRates.from_t_m((8.0, 2.0, 1.0), t_m=2.0)
    wc = [0] * 8 + [1] * 6 + [2] * 6
    for seed in range(6):
        res = run_coordinator(
            n=20, z=2, m=3, k=3, rates=rates, worker_class=wc, model=model,
            delta=0.01, seed=seed, dims=(6, 2, 6), q=Q,
        )
        assert res.product == oracle_product(seed, (6, 2, 6), Q)
        assert lemma_identity_holds(res.stats)
        assert res.stats.responses_observed >= res.stats.responses_used


def test_coordinator_example_topology_both_finishes():
    # n=5 with 3 fast and 2 slow workers, z=1, two row-blocks: across seeds
    # some runs finish from the fast cluster alone and some consume the slow
    # cluster's round; the product is always exact
    rates = ClusterRates.from_t_m((2.0, 1.0), t_m=1.0)
    wc = [0, 0, 0, 1, 1]
    slow_used = fast_only = 0
    for seed in range(30):
        res = run_coordinator(
            n=5, z=1, m=2, k=2, rates=rates, worker_class=wc, model=2,
            delta=0.2, seed=seed, dims=(4, 2, 4), q=Q,
        )
        assert res.product == oracle_product(seed, (4, 2, 4), Q)
        assert lemma_identity_holds(res.stats)
        st = res.stats
        if len(st.taus) >= 2 and st.taus[-1] >= 1:
            slow_used += 1
        else:
            fast_only += 1
    assert slow_used > 0 and fast_only > 0


def test_coordinator_deterministic_replay():
    rates = ClusterRates.from_t_m((4.0, 1.0), t_m=1.0)
    wc = [0] * 6 + [1] * 6
    kwargs = dict(
        n=12, z=1, m=2, k=2, rates=rates, worker_class=wc, model=2,
        delta=0.05, seed=99, dims=(4, 2, 4), q=Q, collect_trace=True,
    )
    r1 = run_coordinator(**kwargs)
    r2 = run_coordinator(**kwargs)
    assert r1.stats.trace == r2.stats.trace
    assert r1.stats.makespan == r2.stats.makespan
    assert r1.product == r2.product


def test_coordinator_round_order_per_cluster():
    rates = ClusterRates.from_t_m((20.0, 5.0, 1.0), t_m=3.0)
    wc = [0] * 12 + [1] * 10 + [2] * 8
    res = run_coordinator(
        n=30, z=2, m=5, k=5, rates=rates, worker_class=wc, model=2,
        delta=0.002, seed=1, dims=(10, 2, 10), q=Q, collect_trace=True,
    )
    per_cluster = {}
    for _, u, t in res.stats.interp_log:
        per_cluster.setdefault(u, []).append(t)
    for rounds in per_cluster.values():
        assert rounds == sorted(rounds)


def test_coordinator_latency_mode_matches_accounting():
    rates = ClusterRates.from_t_m((8.0, 2.0, 1.0), t_m=2.0)
    wc = [0] * 8 + [1] * 6 + [2] * 6
    res = run_coordinator(
        n=20, z=2, m=3, k=3, rates=rates, worker_class=wc, model=1,
        delta=0.01, seed=4, latency_only=True,
    )
    assert res.product is None
    assert lemma_identity_holds(res.stats)


def test_coordinator_rejects_hopeless_pool():
    rates = ClusterRates((1.0,), (0.1,))
    with pytest.raises(TooFewWorkers):
        run_coordinator(
            n=10, z=5, m=2, k=2, rates=rates, worker_class=[0] * 10, model=1,
            delta=1.0, seed=0, latency_only=True,
        )


def test_trace_schema():
    rates = ClusterRates((2.0,), (0.5,))
    res = run_coordinator(
        n=5, z=1, m=2, k=2, rates=rates, worker_class=[0] * 5, model=1,
        delta=5.0, seed=8, latency_only=True, collect_trace=True,
    )
    trace = res.stats.trace
    assert trace, "trace rows expected"
    idx = [row[0] for row in trace]
    assert idx == sorted(idx)
    times = [row[1] for row in trace]
    assert times == sorted(times)
    for row in trace:
        event_index, sim_time, worker, cluster, rnd, decoded = row
        assert 0 <= worker < 5
        assert cluster >= 1
        assert rnd >= 1
        assert 0 <= decoded <= 4
