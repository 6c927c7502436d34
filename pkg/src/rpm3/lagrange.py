"""Lagrange polynomial pairs: construction, evaluation, interpolation.

A task polynomial pair (f, g) is defined on the nodes alpha_1..alpha_{d+z}:
the first z nodes carry the round's random masks (R_delta, S_delta), the
remaining d nodes carry Fountain-coded payload blocks. Workers receive
evaluations at points beta_i disjoint from the node set, so no worker ever
sees a mask or a payload block directly.

The product h = f*g has degree 2(d+z-1). A decoder holding 2d+2z-1 values
of h recovers h at every node; h(alpha_delta) = R_delta*S_delta for
delta <= z are the values shared by all clusters of a round.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .algebra import batch_inv, linear_combination
from .errors import (
    DimensionMismatch,
    DuplicateAbscissa,
    DuplicateNode,
    InconsistentSamples,
    InsufficientSamples,
)


@dataclass(frozen=True)
class EvalPoints:
    """Node points (alphas) and worker points (betas), pairwise distinct and disjoint."""

    alphas: tuple
    betas: tuple
    q: int

    def __post_init__(self):
        if len(set(self.alphas)) != len(self.alphas):
            raise DuplicateNode("alpha points collide")
        if len(set(self.betas)) != len(self.betas):
            raise DuplicateNode("beta points collide")
        if set(self.alphas) & set(self.betas):
            raise DuplicateNode("beta points must avoid the alpha nodes")

    @classmethod
    def canonical(cls, d_max: int, z: int, n: int, q: int) -> "EvalPoints":
        """alphas = 1..d_max+z, betas = d_max+z+1..d_max+z+n.

        Requires q > d_max + z + n so all points are distinct field elements.
        """
        total = d_max + z + n
        if q <= total:
            raise DimensionMismatch(
                f"q={q} too small for {total} distinct evaluation points"
            )
        alphas = tuple(range(1, d_max + z + 1))
        betas = tuple(range(d_max + z + 1, total + 1))
        return cls(alphas, betas, q)


@dataclass
class PolyPair:
    """One round's (f, g) for a single cluster.

    randoms_f/randoms_g hold the z masks, payload_f/payload_g the d
    Fountain-coded blocks; node kappa of f is randoms_f[kappa] for kappa < z
    and payload_f[kappa - z] otherwise.
    """

    z: int
    d: int
    randoms_f: list
    randoms_g: list
    payload_f: list
    payload_g: list

    def __post_init__(self):
        if len(self.randoms_f) != self.z or len(self.randoms_g) != self.z:
            raise DimensionMismatch("need exactly z random masks per side")
        if len(self.payload_f) != self.d or len(self.payload_g) != self.d:
            raise DimensionMismatch("need exactly d payload blocks per side")
        fshape = self.randoms_f[0].shape if self.randoms_f else self.payload_f[0].shape
        gshape = self.randoms_g[0].shape if self.randoms_g else self.payload_g[0].shape
        for m in list(self.randoms_f) + list(self.payload_f):
            if m.shape != fshape:
                raise DimensionMismatch("f-side blocks must share one shape")
        for m in list(self.randoms_g) + list(self.payload_g):
            if m.shape != gshape:
                raise DimensionMismatch("g-side blocks must share one shape")

    @property
    def f_nodes(self):
        return list(self.randoms_f) + list(self.payload_f)

    @property
    def g_nodes(self):
        return list(self.randoms_g) + list(self.payload_g)


@lru_cache(maxsize=256)
def _inv_bary_weights(nodes, q: int):
    """1 / prod_{i != j} (x_j - x_i) for each node j; cached per node set."""
    weights = []
    for j, xj in enumerate(nodes):
        w = 1
        for i, xi in enumerate(nodes):
            if i != j:
                w = w * (xj - xi) % q
        weights.append(w)
    return tuple(batch_inv(weights, q))


def basis_at(nodes, x: int, q: int):
    """Lagrange basis values L_j(x) for the given distinct nodes.

    Uses barycentric weights with batched inversions; if x is itself a node
    the basis degenerates to an indicator.
    """
    nodes = tuple(v % q for v in nodes)
    if len(set(nodes)) != len(nodes):
        raise DuplicateNode("interpolation nodes collide")
    x %= q
    if x in nodes:
        return [1 if v == x else 0 for v in nodes]
    diffs = [(x - v) % q for v in nodes]
    total = 1
    for dv in diffs:
        total = total * dv % q
    inv_w = _inv_bary_weights(nodes, q)
    inv_d = batch_inv(diffs, q)
    return [total * iw % q * idf % q for iw, idf in zip(inv_w, inv_d)]


def eval_pair(pair: PolyPair, pts: EvalPoints, x: int):
    """Evaluate (f, g) at x; returns the two Lagrange combinations."""
    nodes = pts.alphas[: pair.d + pair.z]
    if len(nodes) < pair.d + pair.z:
        raise DimensionMismatch("not enough alpha nodes for this polynomial pair")
    coeffs = basis_at(nodes, x, pts.q)
    fval = linear_combination(coeffs, pair.f_nodes, pts.q)
    gval = linear_combination(coeffs, pair.g_nodes, pts.q)
    return fval, gval


def interpolate_at(samples, degree_bound: int, targets, q: int):
    """Evaluate the unique degree <= degree_bound polynomial through the samples.

    samples: list of (x, FMatrix). The first degree_bound + 1 samples define
    the polynomial; any extra samples are cross-checked against it and a
    disagreement raises InconsistentSamples (it means the caller fed values
    that do not lie on one polynomial, i.e. an upstream bug).
    """
    if len(samples) < degree_bound + 1:
        raise InsufficientSamples(
            f"need {degree_bound + 1} samples, got {len(samples)}"
        )
    xs = [x % q for x, _ in samples]
    if len(set(xs)) != len(xs):
        raise DuplicateAbscissa("sample x-coordinates collide")
    base = samples[: degree_bound + 1]
    base_xs = [x for x, _ in base]
    base_vals = [v for _, v in base]
    out = []
    for t in targets:
        coeffs = basis_at(base_xs, t, q)
        out.append(linear_combination(coeffs, base_vals, q))
    for x, val in samples[degree_bound + 1 :]:
        coeffs = basis_at(base_xs, x, q)
        check = linear_combination(coeffs, base_vals, q)
        if check != val:
            raise InconsistentSamples(
                f"extra sample at x={x} disagrees with the interpolant"
            )
    return out


def product_degree(d: int, z: int):
    """Degree of h = f*g and the number of evaluations needed to interpolate it.

    Returns (2d + 2z - 2, 2d + 2z - 1).
    """
    if d < 1 or z < 1:
        raise DimensionMismatch("d and z must be >= 1")
    deg = 2 * d + 2 * z - 2
    return deg, deg + 1
