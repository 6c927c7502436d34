"""Coordinator state machine: clustering, encoding, decoding, accounting.

Round 1 treats the whole worker pool as a single cluster (membership is
unknown until completion times are observed), encoding one polynomial pair
with d_boot = floor((n - 2z + 1)/2) payload blocks. The observed round-1
completion times then fix the cluster plan for the rest of the run.

From round 2 on, each cluster u has its own polynomial pair per round t.
All pairs of a round share the same z random masks, so every product
polynomial agrees at the first z nodes; cluster 1 (the fastest) decodes
from its own responses alone and caches those z shared values, and every
other cluster combines 2*d_u + z - 1 responses with the cached values. A
cluster that completes a round before the round's shared values exist is
buffered and decoded the moment cluster 1 delivers them.

Response accounting: an interpolation consumes exactly the evaluations it
needs (2d + 2z - 1 for a mask-producing round, 2d + z - 1 otherwise).
Cluster sizes can exceed that count by one when the floor in d_u rounds
down; the extra member still computes every round and its responses are
checked against the encoder's polynomials, but they are not counted in N.
With this convention mk/N equals the closed-form rate at the trace's
(tau, gamma, epsilon, z) exactly, the bootstrap round counting as one
round of cluster 1 (it pays the same 2z - 1 mask overhead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import DEFAULT_Q, FMatrix, make_rng, mat_mul, random_matrix
from .errors import (
    InconsistentSamples,
    MissingSharedEvals,
    PlanViolation,
    Timeout,
    TooFewWorkers,
)
from .fountain import DecodedGrid, SpecSampler, encode_blocks
from .lagrange import EvalPoints, PolyPair, eval_pair, interpolate_at
from .sim import ClusterRates, EventQueue, ServiceSampler

_INPUT_STREAM = 0
_FIELD_STREAM = 1
_FOUNTAIN_STREAM = 3

BOOTSTRAP = -1  # pseudo-cluster index of the round-1 pair


def d_first(n_u: int, z: int) -> int:
    """Payload count of a mask-producing cluster: floor((n_u - 2z + 1)/2)."""
    return (n_u - 2 * z + 1) // 2


def d_other(n_u: int, z: int) -> int:
    """Payload count of a mask-reusing cluster: floor((n_u - z + 1)/2)."""
    return (n_u - z + 1) // 2


@dataclass
class ClusterPlan:
    """Frozen grouping of workers by observed round-1 completion rank."""

    z: int
    members: list  # list of lists of worker ids, fastest cluster first

    def __post_init__(self):
        self.sizes = [len(ms) for ms in self.members]
        self.d_values = [
            d_first(self.sizes[0], self.z)
            if u == 0
            else d_other(self.sizes[u], self.z)
            for u in range(len(self.sizes))
        ]
        if any(d < 1 for d in self.d_values):
            raise TooFewWorkers(f"cluster sizes {self.sizes} leave no payload room")
        self.cluster_of = {}
        for u, ms in enumerate(self.members):
            for w in ms:
                self.cluster_of[w] = u

    @property
    def c(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def needed_responses(self, u: int) -> int:
        """Evaluations an interpolation of cluster u consumes."""
        if u == 0:
            return 2 * self.d_values[0] + 2 * self.z - 1
        return 2 * self.d_values[u] + self.z - 1


def cluster_workers(completions, delta: float, z: int) -> ClusterPlan:
    """Group workers by round-1 completion times into time windows.

    completions: iterable of (worker, time). Cluster 1 absorbs workers until
    it can both produce the masks and carry payload (n_1 >= 2z + 1), growing
    its window by 50% whenever it is still short at the window end; later
    clusters need n_u >= z + 1. Leftover workers (< z + 1) are absorbed into
    the last cluster. Workers are never dropped, so sum(n_u) = n.
    """
    order = sorted(completions, key=lambda wt: (wt[1], wt[0]))
    n = len(order)
    if n < 2 * z + 1:
        raise TooFewWorkers(f"n={n} cannot support z={z} (need n >= 2z+1)")
    clusters = []
    i = 0
    while i < n:
        u = len(clusters)
        start = order[i][1]
        width = delta
        members = [order[i][0]]
        i += 1
        min_size = 2 * z + 1 if u == 0 else z + 1
        while i < n:
            t = order[i][1]
            if t >= start + width:
                if len(members) >= min_size:
                    break
                if u == 0:
                    while t >= start + width:
                        width *= 1.5
            members.append(order[i][0])
            i += 1
        clusters.append(members)
    if len(clusters) >= 2 and len(clusters[-1]) < z + 1:
        clusters[-2].extend(clusters.pop())
    return ClusterPlan(z=z, members=clusters)


@dataclass
class TaskShare:
    worker: int
    round: int
    cluster: int  # BOOTSTRAP marks the round-1 pair
    x: int
    fshare: FMatrix
    gshare: FMatrix


class RoundState:
    """Caches per-round masks, per-(round, cluster) polynomial pairs and specs.

    In latency-only mode no field values exist; only the Fountain specs are
    drawn (same stream and order as a full run with the same seed).
    """

    def __init__(
        self,
        *,
        z: int,
        q: int,
        pts: EvalPoints | None,
        sampler: SpecSampler,
        ablocks=None,
        bblocks=None,
        field_rng=None,
        fountain_rng=None,
        latency_only: bool = False,
    ):
        self.z = z
        self.q = q
        self.pts = pts
        self.sampler = sampler
        self.ablocks = ablocks
        self.bblocks = bblocks
        self.field_rng = field_rng
        self.fountain_rng = fountain_rng
        self.latency_only = latency_only
        self.masks = {}  # round -> (R list, S list)
        self.pairs = {}  # (round, cluster) -> PolyPair
        self.specs = {}  # (round, cluster) -> list of FountainSpec
        self.shared = {}  # round -> list of z FMatrix products R_delta * S_delta

    def round_masks(self, t: int):
        """Masks are drawn once per round, by whichever cluster first encodes it."""
        if t not in self.masks:
            rshape = self.ablocks[0].shape
            sshape = self.bblocks[0].shape
            rs = [
                random_matrix(self.field_rng, rshape[0], rshape[1], self.q)
                for _ in range(self.z)
            ]
            ss = [
                random_matrix(self.field_rng, sshape[0], sshape[1], self.q)
                for _ in range(self.z)
            ]
            self.masks[t] = (rs, ss)
        return self.masks[t]

    def ensure_pair(self, t: int, u: int, d: int):
        """Create (once) the specs and polynomial pair for cluster u at round t."""
        key = (t, u)
        if key in self.specs:
            return
        self.specs[key] = [self.sampler.sample(self.fountain_rng) for _ in range(d)]
        if self.latency_only:
            return
        rs, ss = self.round_masks(t)
        payload = [encode_blocks(s, self.ablocks, self.bblocks) for s in self.specs[key]]
        self.pairs[key] = PolyPair(
            z=self.z,
            d=d,
            randoms_f=rs,
            randoms_g=ss,
            payload_f=[p[0] for p in payload],
            payload_g=[p[1] for p in payload],
        )


def encode_task(
    state: RoundState, plan: ClusterPlan | None, pts: EvalPoints, worker: int, t: int
) -> TaskShare:
    """Task share for `worker` at round t: its pair evaluated at beta_worker.

    Round 1 uses the bootstrap pair spanning all workers; later rounds use
    the worker's plan cluster. Pairs are created once, on first use, and the
    round's masks by whichever cluster encodes the round first.
    """
    if t == 1:
        u = BOOTSTRAP
        if (1, BOOTSTRAP) not in state.specs:
            raise PlanViolation("bootstrap pair not initialised")
    else:
        if plan is None or worker not in plan.cluster_of:
            raise PlanViolation(f"worker {worker} has no cluster")
        u = plan.cluster_of[worker]
        state.ensure_pair(t, u, plan.d_values[u])
    pair = state.pairs[(t, u)]
    x = pts.betas[worker]
    fv, gv = eval_pair(pair, pts, x)
    return TaskShare(worker=worker, round=t, cluster=u, x=x, fshare=fv, gshare=gv)


def interpolate_cluster(
    state: RoundState, plan: ClusterPlan | None, pts: EvalPoints, u: int, t: int, responses
):
    """Decode cluster u's round-t product polynomial from worker responses.

    responses: list of (beta, FMatrix) holding exactly the needed count. A
    mask-producing interpolation (bootstrap or cluster 1) also caches the
    round's z shared values; any other cluster requires them and raises
    MissingSharedEvals when called out of order. Returns the d pairs
    (spec, payload product) ready for peeling.
    """
    key = (t, u)
    specs = state.specs[key]
    d = len(specs)
    z = state.z
    q = state.q
    degree = 2 * (d + z - 1)
    if u <= 0:
        values = interpolate_at(list(responses), degree, list(pts.alphas[: z + d]), q)
        state.shared[t] = values[:z]
        payload = values[z:]
    else:
        if t not in state.shared:
            raise MissingSharedEvals(f"round {t} shared values not yet decoded")
        samples = list(responses) + [
            (pts.alphas[i], v) for i, v in enumerate(state.shared[t])
        ]
        payload = interpolate_at(samples, degree, list(pts.alphas[z : z + d]), q)
    return list(zip(specs, payload))


@dataclass
class RunStats:
    """Per-run trace summary; rate quantities are exact rationals."""

    n: int
    z: int
    m: int
    k: int
    model: int
    makespan: float
    responses_used: int
    responses_observed: int
    packets: int
    taus: list
    plan_sizes: list
    d_values: list
    d_bootstrap: int
    epsilon: Fraction
    empirical_rate: Fraction
    events: int
    trace: list | None = None
    interp_log: list | None = None  # (time, cluster, round) per interpolation

    @property
    def gammas(self):
        """tau_u / tau_c as exact fractions; None when the slowest cluster idled."""
        tau_c = self.taus[-1]
        if tau_c == 0:
            return None
        return [Fraction(t, tau_c) for t in self.taus]


@dataclass
class CoordinatorResult:
    product: FMatrix | None
    stats: RunStats


def _split_rows(mat: FMatrix, parts: int):
    step = mat.rows // parts
    return [FMatrix(mat.q, mat.data[i * step : (i + 1) * step, :]) for i in range(parts)]


def _split_cols(mat: FMatrix, parts: int):
    step = mat.cols // parts
    return [FMatrix(mat.q, mat.data[:, j * step : (j + 1) * step]) for j in range(parts)]


def run_coordinator(
    *,
    n: int,
    z: int,
    m: int,
    k: int,
    rates: ClusterRates,
    worker_class,
    model: int,
    delta: float,
    seed: int,
    q: int = DEFAULT_Q,
    a: FMatrix | None = None,
    b: FMatrix | None = None,
    dims=None,
    latency_only: bool = False,
    soliton_c: float = 0.1,
    soliton_delta: float = 0.5,
    event_budget: int | None = None,
    collect_trace: bool = False,
) -> CoordinatorResult:
    """Event-driven run of the full protocol until the product decodes.

    dims = (r, s, ell) generates uniform input matrices from the run's seed
    when a/b are not supplied (full mode only); m | r and k | ell required.
    Returns the decoded product (None in latency-only mode) plus RunStats.
    """
    d_boot = d_first(n, z)
    if d_boot < 1:
        raise TooFewWorkers(f"n={n}, z={z}: bootstrap round has no payload room")
    mk = m * k

    ablocks = bblocks = None
    if not latency_only:
        if a is None or b is None:
            if dims is None:
                raise PlanViolation("full mode needs dims or explicit input matrices")
            r, s, ell = dims
            input_rng = make_rng(seed, _INPUT_STREAM)
            a = random_matrix(input_rng, r, s, q)
            b = random_matrix(input_rng, s, ell, q)
        if a.rows % m or b.cols % k:
            raise PlanViolation("m must divide rows(A) and k must divide cols(B)")
        ablocks = _split_rows(a, m)
        bblocks = _split_cols(b, k)

    sampler = ServiceSampler(rates, worker_class, 1.0 / mk, model, seed)
    round1 = [(w, sampler.task_duration(w)) for w in range(n)]
    plan = cluster_workers(round1, delta, z)

    pts = None if latency_only else EvalPoints.canonical(d_boot, z, n, q)
    state = RoundState(
        z=z,
        q=q,
        pts=pts,
        sampler=SpecSampler(m, k, soliton_c, soliton_delta),
        ablocks=ablocks,
        bblocks=bblocks,
        field_rng=None if latency_only else make_rng(seed, _FIELD_STREAM),
        fountain_rng=make_rng(seed, _FOUNTAIN_STREAM),
        latency_only=latency_only,
    )
    state.ensure_pair(1, BOOTSTRAP, d_boot)

    grid = DecodedGrid(m, k)
    queue = EventQueue()
    inflight = {}
    worker_round = {}
    for w, t1 in round1:
        worker_round[w] = 1
        if not latency_only:
            inflight[w] = encode_task(state, plan, pts, w, 1)
        queue.push(t1, w)

    needed_boot = 2 * d_boot + 2 * z - 1
    buffers = {}  # (round, cluster) -> list of (beta, value)
    interpolated = set()
    shared_ready = set()  # rounds whose z shared values are decoded
    deferred = {}  # round -> set of clusters complete but waiting on shared values
    budget = event_budget if event_budget is not None else 20_000 + 400 * (n + mk)

    taus = [0] * plan.c
    responses_used = 0
    responses_observed = 0
    packets_fed = 0
    events = 0
    makespan = math.nan
    trace = [] if collect_trace else None
    interp_log = [] if collect_trace else None
    now = 0.0

    def needed_for(u: int) -> int:
        return needed_boot if u == BOOTSTRAP else plan.needed_responses(u)

    def feed(u: int, t: int):
        """Interpolate (u, t) and push its packets through the peeling decoder."""
        nonlocal responses_used, packets_fed
        key = (t, u)
        needed = needed_for(u)
        if latency_only:
            packets = [(s, None) for s in state.specs[key]]
            if u <= 0:
                shared_ready.add(t)
        else:
            packets = interpolate_cluster(state, plan, pts, u, t, buffers[key][:needed])
            if u <= 0:
                shared_ready.add(t)
        interpolated.add(key)
        responses_used += needed
        taus[max(u, 0)] += 1  # bootstrap pays a cluster-1-style round
        if interp_log is not None:
            interp_log.append((now, max(u, 0), t))
        for spec, value in packets:
            packets_fed += 1
            grid.peel(spec, value)

    while not grid.is_complete():
        if len(queue) == 0:
            raise Timeout("event queue drained before decoding completed")
        time, w = queue.advance()
        now = time
        events += 1
        if events > budget:
            raise Timeout(f"event budget {budget} exceeded")
        responses_observed += 1
        t = worker_round[w]
        u = BOOTSTRAP if t == 1 else plan.cluster_of[w]
        key = (t, u)
        value = None
        if not latency_only:
            share = inflight.pop(w)
            value = mat_mul(share.fshare, share.gshare)
        if key in interpolated:
            # slack response beyond what the decoder needed; verify, don't count
            if not latency_only:
                fv, gv = eval_pair(state.pairs[key], pts, pts.betas[w])
                if mat_mul(fv, gv) != value:
                    raise InconsistentSamples(
                        f"slack response of worker {w} disagrees with its polynomial"
                    )
        else:
            bucket = buffers.setdefault(key, [])
            bucket.append((w if latency_only else pts.betas[w], value))
            if len(bucket) >= needed_for(u):
                if u <= 0:
                    feed(u, t)
                    for uu in sorted(deferred.pop(t, ())):
                        if grid.is_complete():
                            break
                        feed(uu, t)
                elif t in shared_ready:
                    feed(u, t)
                else:
                    deferred.setdefault(t, set()).add(u)
        if trace is not None:
            trace.append(
                (events, time, w, plan.cluster_of[w] + 1, t, grid.resolved_count)
            )
        if grid.is_complete():
            makespan = time
            break
        # dispatch the next task immediately; workers are never idle
        worker_round[w] = t + 1
        if latency_only:
            u_next = plan.cluster_of[w]
            state.ensure_pair(t + 1, u_next, plan.d_values[u_next])
        else:
            inflight[w] = encode_task(state, plan, pts, w, t + 1)
        queue.push(time + sampler.task_duration(w), w)

    epsilon = Fraction(packets_fed, mk) - 1
    stats = RunStats(
        n=n,
        z=z,
        m=m,
        k=k,
        model=model,
        makespan=makespan,
        responses_used=responses_used,
        responses_observed=responses_observed,
        packets=packets_fed,
        taus=taus,
        plan_sizes=list(plan.sizes),
        d_values=list(plan.d_values),
        d_bootstrap=d_boot,
        epsilon=epsilon,
        empirical_rate=Fraction(mk, responses_used),
        events=events,
        trace=trace,
        interp_log=interp_log,
    )
    product = None
    if not latency_only:
        br, bc = ablocks[0].rows, bblocks[0].cols
        out = np.empty((br * m, bc * k), dtype=object)
        for i in range(m):
            for j in range(k):
                out[i * br : (i + 1) * br, j * bc : (j + 1) * bc] = grid.cells[(i, j)].data
        product = FMatrix(q, out)
    return CoordinatorResult(product=product, stats=stats)
