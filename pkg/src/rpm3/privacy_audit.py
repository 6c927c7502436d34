"""Exhaustive verification of the double-sided privacy constraint.

On instances small enough to enumerate (scalar blocks, m = k = 1, prime
q <= 13, z in {1, 2}), every choice of z colluding workers must see share
tuples whose distribution over the masks' randomness is uniform and
identical for every input pair (A, B): zero mutual information by exact
counting, not by argument.

The audit also demonstrates the converse direction constructively: given
the inputs as side information, z shares determine the masks exactly
(the conditional entropy of the masks given shares and inputs is zero),
and a negative control with a worker placed on an interpolation node
breaks uniformity, showing why worker points must avoid the node set.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field

from .errors import InstanceTooLarge, InsufficientShares
from .lagrange import basis_at
from .algebra import field_inv, is_prime

ENUMERATION_CAP = 10_000_000


@dataclass(frozen=True)
class TinyInstance:
    """Enumerable audit instance: scalar blocks, one payload node.

    Nodes are alphas = (1, .., z+1) (z mask nodes plus one payload node);
    worker points follow. negative_control=True instead places worker 1 on
    the first mask node, which must break the audit.
    """

    q: int = 5
    n: int = 4
    z: int = 1
    negative_control: bool = False

    def __post_init__(self):
        if not is_prime(self.q) or self.q > 13:
            raise InstanceTooLarge("audit instances use a prime q <= 13")
        if self.z not in (1, 2):
            raise InstanceTooLarge("audit instances use z in {1, 2}")
        if self.q ** (2 * self.z) > ENUMERATION_CAP:
            raise InstanceTooLarge("randomness space exceeds the enumeration cap")
        if self.n + self.z + 1 + 1 > self.q and not self.negative_control:
            raise InstanceTooLarge(
                f"q={self.q} too small for {self.n} worker points plus nodes"
            )

    @property
    def alphas(self):
        return tuple(range(1, self.z + 2))

    @property
    def betas(self):
        start = self.z + 2
        pts = tuple(range(start, start + self.n))
        if self.negative_control:
            return (self.alphas[0],) + pts[1:]
        return pts


def _share_row(inst: TinyInstance, masks, payload: int, beta: int) -> int:
    """Evaluate the scalar mask/payload polynomial at beta."""
    coeffs = basis_at(inst.alphas, beta, inst.q)
    acc = payload * coeffs[-1]
    for r, c in zip(masks, coeffs[:-1]):
        acc += r * c
    return acc % inst.q


def share_distribution(inst: TinyInstance, a: int, b: int, zset) -> dict:
    """Histogram of the z workers' (f, g) share tuples over all mask draws.

    Enumerates the full q^(2z) randomness space for fixed scalar inputs
    (a, b); keys are tuples ((f_w, g_w) for w in zset).
    """
    zset = tuple(zset)
    if len(zset) != inst.z:
        raise InsufficientShares(f"zset must have exactly z = {inst.z} workers")
    q, z = inst.q, inst.z
    betas = [inst.betas[w] for w in zset]
    hist: dict = {}
    for rs in itertools.product(range(q), repeat=z):
        fvals = tuple(_share_row(inst, rs, a, bt) for bt in betas)
        for ss in itertools.product(range(q), repeat=z):
            gvals = tuple(_share_row(inst, ss, b, bt) for bt in betas)
            key = tuple(zip(fvals, gvals))
            hist[key] = hist.get(key, 0) + 1
    return hist


def _hist_checksum(hist: dict) -> str:
    canon = sorted((repr(k), v) for k, v in hist.items())
    return hashlib.sha256(json.dumps(canon).encode()).hexdigest()[:16]


def _mutual_information_bits(hists: list) -> float:
    """I(inputs; shares) for uniformly chosen inputs, from exact counts."""
    n_inputs = len(hists)
    total_per_input = [sum(h.values()) for h in hists]
    keys = set()
    for h in hists:
        keys.update(h)
    mi = 0.0
    for key in keys:
        p_key = sum(h.get(key, 0) / t for h, t in zip(hists, total_per_input)) / n_inputs
        for h, t in zip(hists, total_per_input):
            p_cond = h.get(key, 0) / t
            if p_cond > 0:
                mi += (p_cond / n_inputs) * math.log2(p_cond / p_key)
    return max(0.0, mi)


def audit_zset(inst: TinyInstance, zset) -> dict:
    """Uniformity and input-independence verdict for one collusion set."""
    hists = []
    for a in range(inst.q):
        for b in range(inst.q):
            hists.append(share_distribution(inst, a, b, zset))
    first = hists[0]
    counts = set(first.values())
    uniform = len(counts) == 1 and len(first) == inst.q ** (2 * inst.z)
    independent = all(h == first for h in hists[1:])
    return {
        "zset": list(zset),
        "uniform": uniform,
        "input_independent": independent,
        "mutual_information_bits": _mutual_information_bits(hists),
        "histogram_checksum": _hist_checksum(first),
        "pass": uniform and independent,
    }


def recover_masks(inst: TinyInstance, a: int, shares) -> list:
    """Solve for the masks from z f-shares given the payload value.

    shares: list of (worker_index, f_value) at distinct worker points.
    Subtracting the payload contribution leaves z linear equations in the
    z masks; the system solves exactly over GF(q).
    """
    if len(shares) < inst.z:
        raise InsufficientShares(f"need {inst.z} shares, got {len(shares)}")
    q, z = inst.q, inst.z
    rows = []
    rhs = []
    for w, val in shares[:z]:
        coeffs = basis_at(inst.alphas, inst.betas[w], q)
        rows.append([c % q for c in coeffs[:z]])
        rhs.append((val - a * coeffs[-1]) % q)
    # Gaussian elimination mod q on the z x z system
    n = z
    aug = [rows[i] + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] % q != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = field_inv(aug[col][col], q)
        aug[col] = [v * inv % q for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [(vr - factor * vc) % q for vr, vc in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def cross_round_independence(inst: TinyInstance, worker: int, a: int) -> bool:
    """Shares of one worker across two rounds are jointly uniform.

    Enumerates both rounds' (independent) mask draws; the joint histogram
    over the two f-shares must be flat, which by counting proves the
    per-round privacy argument composes across rounds.
    """
    q, z = inst.q, inst.z
    beta = inst.betas[worker]
    joint: dict = {}
    for rs1 in itertools.product(range(q), repeat=z):
        v1 = _share_row(inst, rs1, a, beta)
        for rs2 in itertools.product(range(q), repeat=z):
            v2 = _share_row(inst, rs2, a, beta)
            joint[(v1, v2)] = joint.get((v1, v2), 0) + 1
    return len(joint) == q * q and len(set(joint.values())) == 1


def run_audit(inst: TinyInstance) -> dict:
    """Full audit report across every z-subset of workers."""
    results = [
        audit_zset(inst, zset)
        for zset in itertools.combinations(range(inst.n), inst.z)
    ]
    # constructive mask recovery on the all-zero and a nonzero input
    rec_ok = True
    for a in (0, 1 % inst.q):
        masks = tuple(range(1, inst.z + 1))
        shares = [
            (w, _share_row(inst, masks, a, inst.betas[w])) for w in range(inst.z)
        ]
        rec_ok &= recover_masks(inst, a, shares) == list(masks)
    report = {
        "instance": {
            "q": inst.q,
            "n": inst.n,
            "z": inst.z,
            "negative_control": inst.negative_control,
        },
        "zsets": results,
        "mask_recovery_ok": rec_ok,
        "cross_round_independent": cross_round_independence(inst, 0, 1 % inst.q),
        "pass": all(r["pass"] for r in results) and rec_ok,
    }
    return report
