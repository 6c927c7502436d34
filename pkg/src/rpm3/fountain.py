"""Factored Fountain coding over the m x k grid of product cells.

A packet is defined by a pair of index sets (S_A subset of [m], S_B subset
of [k]) with implicit coefficient 1: the encoded pair is
(sum_{i in S_A} A_i, sum_{j in S_B} B_j) and its product equals
sum_{(i,j) in S_A x S_B} A_i B_j, an LT symbol whose neighborhood is the
product set S_A x S_B.

The total degree D = |S_A| * |S_B| follows a robust-soliton distribution
conditioned on D having a factorization (a, b) with a <= m, b <= k; the
factor pair is uniform among feasible divisor pairs and the index sets are
uniform given their sizes. This factored stand-in keeps the product-set
structure the peeling decoder needs; it is deliberately isolated behind
SpecSampler so a differently tuned joint design can replace it.

The peeling decoder resolves packets with exactly one unknown cell and
substitutes the value back until a fixpoint. Values may be field matrices
(full runs) or None (latency-only runs track resolution structure alone).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .algebra import FMatrix
from .errors import IndexOutOfRange, InconsistentPacket


@dataclass(frozen=True)
class FountainSpec:
    """Sorted index sets into the A-blocks and B-blocks (0-based)."""

    sa: tuple
    sb: tuple

    def __post_init__(self):
        if not self.sa or not self.sb:
            raise IndexOutOfRange("index sets must be nonempty")
        object.__setattr__(self, "sa", tuple(sorted(self.sa)))
        object.__setattr__(self, "sb", tuple(sorted(self.sb)))

    def cells(self):
        return [(i, j) for i in self.sa for j in self.sb]

    @property
    def degree(self) -> int:
        return len(self.sa) * len(self.sb)


def robust_soliton_pmf(K: int, c: float = 0.1, delta: float = 0.5) -> np.ndarray:
    """Robust soliton distribution over degrees 1..K (index 0 unused)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rho = np.zeros(K + 1)
    rho[1] = 1.0 / K
    for i in range(2, K + 1):
        rho[i] = 1.0 / (i * (i - 1))
    tau = np.zeros(K + 1)
    R = c * math.log(K / delta) * math.sqrt(K)
    if R > 0:
        spike = min(int(K / R), K)
        for i in range(1, spike):
            tau[i] = R / (i * K)
        if 1 <= spike <= K:
            tau[spike] = R * math.log(R / delta) / K if R > delta else 0.0
        tau = np.clip(tau, 0.0, None)
    pmf = rho + tau
    return pmf / pmf.sum()


def _divisor_pairs(D: int, m: int, k: int):
    pairs = []
    for a in range(1, min(m, D) + 1):
        if D % a == 0 and D // a <= k:
            pairs.append((a, D // a))
    return pairs


class SpecSampler:
    """Draws FountainSpecs for an m x k grid.

    The degree pmf is the robust soliton over [1, mk] conditioned on
    feasibility (at least one divisor pair (a, b) with a <= m, b <= k);
    `degree_pmf` exposes the conditioned distribution so tests can use it
    as the oracle. Draw order per sample: one degree draw, one pair draw,
    one subset draw per side.
    """

    def __init__(self, m: int, k: int, c: float = 0.1, delta: float = 0.5):
        self.m, self.k = m, k
        raw = robust_soliton_pmf(m * k, c, delta)
        self._pairs = {D: _divisor_pairs(D, m, k) for D in range(1, m * k + 1)}
        mask = np.array([False] + [bool(self._pairs[D]) for D in range(1, m * k + 1)])
        pmf = np.where(mask, raw, 0.0)
        self.degree_pmf = pmf / pmf.sum()
        self._degrees = np.flatnonzero(self.degree_pmf)
        self._probs = self.degree_pmf[self._degrees]

    def sample(self, rng: np.random.Generator) -> FountainSpec:
        D = int(rng.choice(self._degrees, p=self._probs))
        pairs = self._pairs[D]
        a, b = pairs[int(rng.integers(len(pairs)))]
        sa = rng.choice(self.m, size=a, replace=False)
        sb = rng.choice(self.k, size=b, replace=False)
        return FountainSpec(tuple(int(x) for x in sa), tuple(int(x) for x in sb))


def sample_spec(rng: np.random.Generator, m: int, k: int, c: float = 0.1, delta: float = 0.5) -> FountainSpec:
    """One-off spec draw; build a SpecSampler for repeated use."""
    return SpecSampler(m, k, c, delta).sample(rng)


def encode_blocks(spec: FountainSpec, ablocks, bblocks):
    """(sum of selected A-blocks, sum of selected B-blocks) over the field."""
    if spec.sa[-1] >= len(ablocks) or spec.sb[-1] >= len(bblocks):
        raise IndexOutOfRange("spec indexes outside the block lists")
    asum = ablocks[spec.sa[0]]
    for i in spec.sa[1:]:
        asum = asum + ablocks[i]
    bsum = bblocks[spec.sb[0]]
    for j in spec.sb[1:]:
        bsum = bsum + bblocks[j]
    return asum, bsum


@dataclass
class _Packet:
    unknown: set
    value: object  # FMatrix or None in latency-only mode


@dataclass
class DecodedGrid:
    """Peeling-decoder state over the m x k product cells.

    cells maps (i, j) -> FMatrix (full mode) or True (latency mode) once
    resolved. Resolved values never change; pending packets reference only
    unresolved cells.
    """

    m: int
    k: int
    cells: dict = field(default_factory=dict)
    _pending: list = field(default_factory=list, repr=False)
    _by_cell: dict = field(default_factory=dict, repr=False)

    @property
    def resolved_count(self) -> int:
        return len(self.cells)

    def is_complete(self) -> bool:
        return len(self.cells) == self.m * self.k

    def missing_cells(self):
        return [
            (i, j)
            for i in range(self.m)
            for j in range(self.k)
            if (i, j) not in self.cells
        ]

    def peel(self, spec: FountainSpec, value=None) -> int:
        """Feed one packet; returns the number of newly resolved cells.

        The packet is first reduced by already-resolved cells. A packet
        whose residual covers exactly one cell resolves it, and resolution
        cascades through pending packets until no degree-1 packet remains.
        A fully reduced packet must have residual zero (full mode); anything
        else means upstream corruption.
        """
        for i in spec.sa:
            if i >= self.m:
                raise IndexOutOfRange(f"row index {i} >= m={self.m}")
        for j in spec.sb:
            if j >= self.k:
                raise IndexOutOfRange(f"col index {j} >= k={self.k}")
        packet = _Packet(unknown=set(spec.cells()), value=value)
        self._reduce(packet)
        before = len(self.cells)
        work = deque()
        self._settle(packet, work, register=True)
        while work:
            cell = work.popleft()
            for pkt in self._by_cell.pop(cell, []):
                if cell in pkt.unknown:
                    pkt.unknown.discard(cell)
                    if pkt.value is not None:
                        pkt.value = pkt.value - self.cells[cell]
                    # already registered under its other cells; don't re-add
                    self._settle(pkt, work, register=False)
        return len(self.cells) - before

    def _reduce(self, packet: _Packet):
        for cell in [c for c in packet.unknown if c in self.cells]:
            packet.unknown.discard(cell)
            if packet.value is not None:
                packet.value = packet.value - self.cells[cell]

    def _settle(self, packet: _Packet, work: deque, register: bool):
        if len(packet.unknown) == 0:
            if packet.value is not None and not packet.value.is_zero():
                raise InconsistentPacket("fully reduced packet has nonzero residual")
            return
        if len(packet.unknown) == 1:
            cell = next(iter(packet.unknown))
            packet.unknown.clear()
            if cell not in self.cells:
                self.cells[cell] = True if packet.value is None else packet.value
                work.append(cell)
            else:
                # resolved concurrently in this cascade; consistency-check
                if packet.value is not None and packet.value != self.cells[cell]:
                    raise InconsistentPacket(f"conflicting values for cell {cell}")
            return
        if register:
            for cell in packet.unknown:
                self._by_cell.setdefault(cell, []).append(packet)


def peel(grid: DecodedGrid, spec: FountainSpec, value=None) -> DecodedGrid:
    """Functional wrapper over DecodedGrid.peel."""
    grid.peel(spec, value)
    return grid


def ge_solvable(specs, m: int, k: int) -> bool:
    """True iff the specs' incidence vectors span all mk unit vectors.

    Gaussian elimination over GF(2) on the cell-incidence matrix; used as
    the decodability oracle (peeling success implies this, never the
    converse).
    """
    nbits = m * k
    rows = []
    for spec in specs:
        bits = 0
        for (i, j) in spec.cells():
            bits |= 1 << (i * k + j)
        rows.append(bits)
    pivots = {}
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top in pivots:
                row ^= pivots[top]
            else:
                pivots[top] = row
                break
    return len(pivots) == nbits
