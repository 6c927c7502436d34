"""Stochastic service times and the deterministic event queue.

Scaling convention: a worker's time to multiply the whole pair of input
matrices is shifted-exponential with shift s and rate lam; a task covering
a fraction f of that work has shift f*s and exponential rate lam/f. The
protocol's unit tasks use f = 1/(m*k), so the per-task shift is s/(m*k)
and the per-task rate lam*m*k. Reported times always carry this scaling.

Model 1 (worker-dependent fixed service time): each worker draws its
exponential component once and reuses it for every task, so a worker's
tasks all take the same time.

Model 2 (cluster-dependent additive service time): every task draws a
fresh exponential, so a worker's total over tau tasks is shifted-Erlang
with shape tau.

Draw order: worker w's service stream is the Philox substream
(seed, _SERVICE_STREAM, w); Model 1 consumes one uniform per worker, Model 2
one uniform per completed task, in dispatch order. Exponentials use the
inverse CDF, -log1p(-U)/rate.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .algebra import make_rng
from .errors import DimensionMismatch, EmptyQueue

_SERVICE_STREAM = 2


@dataclass(frozen=True)
class ClusterRates:
    """Per-class service parameters; class 1 is the fastest (lams non-increasing)."""

    lams: tuple
    shifts: tuple

    def __post_init__(self):
        if len(self.lams) != len(self.shifts):
            raise DimensionMismatch("lams and shifts must align")
        if any(l <= 0 for l in self.lams):
            raise DimensionMismatch("service rates must be positive")
        if any(s < 0 for s in self.shifts):
            raise DimensionMismatch("shifts must be nonnegative")
        if any(a < b - 1e-12 for a, b in zip(self.lams, self.lams[1:])):
            raise DimensionMismatch("lams must be non-increasing (class 1 fastest)")

    @classmethod
    def from_t_m(cls, lams, t_m: float) -> "ClusterRates":
        """Shifts coupled as s_u = t_m / lam_u, the convention the bounds assume."""
        lams = tuple(lams)
        return cls(lams, tuple(t_m / l for l in lams))

    @property
    def count(self) -> int:
        return len(self.lams)


def exp_draw(rng: np.random.Generator, rate: float) -> float:
    """Inverse-CDF exponential draw; consumes one uniform."""
    u = rng.random()
    return -math.log1p(-u) / rate


class ServiceSampler:
    """Per-worker service-time draws for one simulation run.

    worker_class maps worker id -> class index into rates; fraction is the
    work fraction of one task (1/(m*k) for protocol tasks).
    """

    def __init__(self, rates: ClusterRates, worker_class, fraction: float, model: int, seed: int):
        if model not in (1, 2):
            raise DimensionMismatch(f"unknown service model {model}")
        self.rates = rates
        self.worker_class = list(worker_class)
        self.fraction = fraction
        self.model = model
        self._seed = seed
        self._rngs = {}
        self._fixed = {}

    def _rng(self, worker: int) -> np.random.Generator:
        if worker not in self._rngs:
            self._rngs[worker] = make_rng(self._seed, _SERVICE_STREAM, worker)
        return self._rngs[worker]

    def task_duration(self, worker: int) -> float:
        """Duration of the next task for this worker."""
        u = self.worker_class[worker]
        lam, shift = self.rates.lams[u], self.rates.shifts[u]
        f = self.fraction
        if self.model == 1:
            if worker not in self._fixed:
                self._fixed[worker] = exp_draw(self._rng(worker), lam / f)
            return f * shift + self._fixed[worker]
        return f * shift + exp_draw(self._rng(worker), lam / f)


def draw_model1(sampler: ServiceSampler, worker: int) -> float:
    """Fixed per-task duration of a worker (drawn once, then reused)."""
    if sampler.model != 1:
        raise DimensionMismatch("sampler is not configured for model 1")
    return sampler.task_duration(worker)


def draw_model2(sampler: ServiceSampler, worker: int) -> float:
    """Fresh iid task duration for a worker."""
    if sampler.model != 2:
        raise DimensionMismatch("sampler is not configured for model 2")
    return sampler.task_duration(worker)


class EventQueue:
    """Min-time queue of pending completions; ties break on worker index."""

    def __init__(self):
        self._heap = []

    def push(self, time: float, worker: int):
        heapq.heappush(self._heap, (time, worker))

    def advance(self):
        if not self._heap:
            raise EmptyQueue("no pending events")
        return heapq.heappop(self._heap)

    def __len__(self) -> int:
        return len(self._heap)
