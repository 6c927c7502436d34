"""Fixed-rate (KES) and perfect-load-balancing baselines.

The fixed-rate scheme splits the inputs into m_I x k_I chunks chosen so
that (m_I + z)(k_I + 1) - 1 worker responses suffice while tolerating n_s
stragglers; its rate is m_I k_I / ((m_I + z)(k_I + 1) - 1). Parameter
selection requires the worker-count identity to hold with equality (the
straggler budget is exactly spent); among equality pairs the product
m_I k_I is maximised with ties going to the larger m_I. A relaxed <=
search is available for callers that allow overshooting the budget.

Load balancing assumes the master knows every worker's speed and assigns
task counts proportional to it, using a scheme with the appropriate rate:
an idealised (n-z)/n scheme, or GASP in one of its four collusion regimes.
The regime constructions assume worker counts that match their identities
exactly; identities are relaxed to <= with product maximisation and the
per-prefix partitions are resolved by exhaustive search.

Simulators are vectorised over replications and return makespan arrays;
model 1 draws one whole-job exponential per worker, model 2 per-task sums
(Erlang totals). Draw stream: (seed, 5), row-major over (rep, worker).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .algebra import make_rng
from .errors import DimensionMismatch, Infeasible, ModelUnsupported, RegimeViolation
from .sim import ClusterRates


@dataclass(frozen=True)
class KesParams:
    m_i: int
    k_i: int
    n_s: int
    z: int

    @property
    def responses_needed(self) -> int:
        return (self.m_i + self.z) * (self.k_i + 1) - 1


def kes_rate(p: KesParams) -> Fraction:
    """m_I k_I / ((m_I + z)(k_I + 1) - 1)."""
    return Fraction(p.m_i * p.k_i, p.responses_needed)


def kes_select(n: int, n_s: int, z: int, m: int, k: int, require_exact: bool = True) -> KesParams:
    """Pick (m_I, k_I) maximising m_I k_I subject to the worker-count budget.

    With require_exact (the default) the identity
    (m_I + z)(k_I + 1) - 1 = n - n_s must hold exactly; divisor pairs of
    n - n_s + 1 are enumerated. Otherwise any pair within the budget
    qualifies. Ties prefer the larger m_I. Raises Infeasible when no pair
    with m_I, k_I >= 1 exists.
    """
    if n - n_s <= z:
        raise Infeasible(f"n - n_s = {n - n_s} must exceed z = {z}")
    target = n - n_s + 1
    best = None

    def consider(m_i, k_i):
        nonlocal best
        if m_i < 1 or k_i < 1 or m_i > m or k_i > k:
            return
        cand = (m_i * k_i, m_i)
        if best is None or cand > (best.m_i * best.k_i, best.m_i):
            best = KesParams(m_i=m_i, k_i=k_i, n_s=n_s, z=z)

    if require_exact:
        for div in range(2, target + 1):
            if target % div == 0:
                consider(target // div - z, div - 1)
    else:
        for k_i in range(1, min(k, target) + 1):
            consider(target // (k_i + 1) - z, k_i)
    if best is None:
        raise Infeasible(
            f"no (m_I, k_I) with m_I, k_I >= 1 fits n - n_s = {n - n_s}, z = {z}"
        )
    return best


def kes_max_z(n: int, n_s: int, m: int, k: int, z_cap: int = 1 << 16) -> int:
    """Largest z for which kes_select succeeds (exact identity)."""
    last = 0
    for z in range(1, z_cap):
        try:
            kes_select(n, n_s, z, m, k)
            last = z
        except Infeasible:
            break
    return last


def kes_task_count(p: KesParams, m: int, k: int) -> int:
    """Tasks per worker: ceil(m / m_I) * ceil(k / k_I)."""
    return math.ceil(m / p.m_i) * math.ceil(k / p.k_i)


def simulate_kes(
    p: KesParams,
    *,
    n: int,
    m: int,
    k: int,
    rates: ClusterRates,
    worker_class,
    model: int,
    reps: int,
    seed: int,
) -> np.ndarray:
    """Makespans of the fixed-rate scheme: the (n - n_s)-th fastest worker's
    total over ceil(m/m_I) ceil(k/k_I) tasks of work fraction m_I k_I / (mk).
    """
    q_tasks = kes_task_count(p, m, k)
    frac = (p.m_i * p.k_i) / (m * k)
    lam = np.array([rates.lams[u] for u in worker_class])
    shift = np.array([rates.shifts[u] for u in worker_class])
    rng = make_rng(seed, 5)
    if model == 1:
        y = rng.exponential(1.0, size=(reps, n)) / lam
        totals = q_tasks * frac * (shift + y)
    elif model == 2:
        sums = rng.gamma(q_tasks, 1.0, size=(reps, n)) * (frac / lam)
        totals = q_tasks * frac * shift + sums
    else:
        raise ModelUnsupported(f"unknown model {model}")
    order = np.sort(totals, axis=1)
    return order[:, n - p.n_s - 1]


class LbKind(str, Enum):
    IDEAL = "lb-ideal"
    GASP_Z1 = "lb-gasp-z1"
    GASP_LOW = "lb-gasp-low"
    GASP_MEDIUM = "lb-gasp-medium"
    GASP_LARGE = "lb-gasp-large"


def gasp_partition(N: int, z: int, kind: LbKind):
    """Split counts (m', k') maximising m'k' for a GASP variant fed N workers.

    Worker-count identities are relaxed to <=; the regime constraint on z
    must be satisfiable or RegimeViolation is raised, and Infeasible when
    no admissible pair fits the budget.
    """
    best = None

    def consider(a, b):
        nonlocal best
        if best is None or a * b > best[0] * best[1]:
            best = (a, b)

    if kind == LbKind.GASP_Z1:
        if z != 1:
            raise RegimeViolation("the z=1 construction needs z == 1")
        for a in range(1, N + 1):
            b_max = (N - a) // (a + 1)
            if b_max >= 1:
                consider(a, b_max)
    elif kind == LbKind.GASP_LOW:
        if z < 2:
            raise RegimeViolation("low-collusion regime needs z >= 2")
        budget = N - (z * z + z - 3)
        lo = z + 1  # regime: z < min(m', k')
        for a in range(lo, max(lo, budget) + 1):
            if a + lo + a * lo > budget:
                break
            b_max = (budget - a) // (a + 1)
            if b_max >= lo:
                consider(a, b_max)
    elif kind == LbKind.GASP_MEDIUM:
        # orientation: small side <= z < large side; try both roles
        budget = N + 1
        for small in range(1, z + 1):
            large_max = budget // (small + 1) - z
            if large_max > z:
                consider(small, large_max)
    elif kind == LbKind.GASP_LARGE:
        budget = (N - 2 * z + 1) // 2
        for a in range(1, min(z, budget) + 1):
            b = min(z, budget // a)
            if b >= 1:
                consider(a, b)
    else:
        raise DimensionMismatch(f"unknown scheme {kind}")
    if best is None:
        raise Infeasible(f"no regime-feasible split for N={N}, z={z} under {kind.value}")
    return best


def lb_tau_c(kind: LbKind, mk: int, gammas, sizes, z: int) -> Fraction:
    """Task count of the slowest cluster under perfect load balancing.

    gammas are relative speeds (gamma_c = 1, non-increasing); sizes the
    cluster sizes, fastest first. Prefix partitions for the GASP variants
    are chosen by gasp_partition on the worker counts of clusters 1..u.
    """
    gs = [Fraction(g) for g in gammas]
    if gs[-1] != 1 or any(a < b for a, b in zip(gs, gs[1:])):
        raise DimensionMismatch("gammas must be non-increasing with gamma_c = 1")
    if len(gs) != len(sizes):
        raise DimensionMismatch("gammas and sizes must align")
    c = len(gs)
    sum_gn = sum(g * n_u for g, n_u in zip(gs, sizes))
    if kind == LbKind.IDEAL:
        denom = sum_gn - gs[0] * z
    elif kind == LbKind.GASP_LARGE:
        denom = sum_gn - gs[0] * (2 * z - 1)
        if denom <= 0:
            raise Infeasible("z too large for the large-collusion construction")
        return Fraction(2 * mk) / denom
    else:
        prefixes = np.cumsum(sizes)
        gs_pad = gs + [Fraction(0)]
        overhead = Fraction(0)
        for u in range(c):
            a, b = gasp_partition(int(prefixes[u]), z, kind)
            if kind == LbKind.GASP_MEDIUM:
                small, large = min(a, b), max(a, b)
                per = large + z * small
            else:
                per = a + b
            overhead += (gs_pad[u] - gs_pad[u + 1]) * per
        denom = sum_gn - overhead
        if kind == LbKind.GASP_LOW:
            denom -= gs[0] * (z * z + z - 3)
        elif kind == LbKind.GASP_MEDIUM:
            denom -= gs[0] * (z - 1)
    if denom <= 0:
        raise Infeasible("z too large for these cluster sizes")
    return Fraction(mk) / denom


def lb_task_counts(tau_c: Fraction, gammas):
    """Integer per-cluster task counts: ceil(gamma_u * tau_c), conservative."""
    return [int(math.ceil(Fraction(g) * tau_c)) for g in gammas]


def simulate_lb(
    tau_by_cluster,
    *,
    n: int,
    mk: int,
    rates: ClusterRates,
    worker_class,
    model: int,
    reps: int,
    seed: int,
) -> np.ndarray:
    """Makespans under perfect load balancing (model 1 only).

    Every worker of cluster u computes tau_by_cluster[u] tasks of fraction
    1/mk; the makespan is the slowest of all n workers.
    """
    if model != 1:
        raise ModelUnsupported("load balancing analysis covers model 1 only")
    tau = np.array([tau_by_cluster[u] for u in worker_class], dtype=float)
    lam = np.array([rates.lams[u] for u in worker_class])
    shift = np.array([rates.shifts[u] for u in worker_class])
    rng = make_rng(seed, 5)
    y = rng.exponential(1.0, size=(reps, n)) / lam
    totals = tau * (shift + y) / mk
    return totals.max(axis=1)
