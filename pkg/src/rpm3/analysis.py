"""Closed-form rate and waiting-time formulas.

Rate quantities are exact rationals. Waiting-time bounds follow the two
service models: under the worker-dependent fixed service time (model 1)
the master's makespan is bounded through the n-th order statistic of
shifted exponentials; under the cluster-dependent additive model (model 2)
through the n-th order statistic of shifted Erlang variables.

The Erlang order-statistic mean is computed exactly (rational arithmetic,
no cancellation) up to a configurable size, with a numerical-integration
fallback for larger instances. The printed form of the model-2 bound
multiplies by the slowest rate where a time must divide by it; the
dimensionally consistent order-statistic mean with rate lam_c * m * k is
implemented here (the shape-1 reduction to H_n / rate pins the reading).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import ConventionViolation, DimensionMismatch, PrecisionLoss

EXACT_ORDER_STAT_LIMIT = 120


@lru_cache(maxsize=4096)
def harmonic(n: int) -> Fraction:
    """H_n = sum_{i=1..n} 1/i, with H_0 = 0, as an exact rational."""
    if n < 0:
        raise DimensionMismatch("harmonic sum needs n >= 0")
    if n == 0:
        return Fraction(0)
    return harmonic(n - 1) + Fraction(1, n)


# --------------------------------------------------------------------- rate


@dataclass(frozen=True)
class RateInputs:
    """Inputs of the download-rate formula; gammas[-1] must be 1."""

    m: int
    k: int
    z: int
    epsilon: Fraction
    tau_c: Fraction
    gammas: tuple

    def __post_init__(self):
        gs = tuple(Fraction(g) for g in self.gammas)
        object.__setattr__(self, "gammas", gs)
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(self, "tau_c", Fraction(self.tau_c))
        if gs[-1] != 1:
            raise DimensionMismatch("gamma_c must equal 1")
        if any(a < b for a, b in zip(gs, gs[1:])):
            raise DimensionMismatch("gammas must be non-increasing")
        if self.epsilon < 0:
            raise DimensionMismatch("epsilon must be nonnegative")


def rate_rpm3(inp: RateInputs) -> Fraction:
    """mk / (2mk(1+eps) + (z-1) tau_c sum(gammas) + z tau_c gamma_1)."""
    mk = Fraction(inp.m * inp.k)
    denom = (
        2 * mk * (1 + inp.epsilon)
        + (inp.z - 1) * inp.tau_c * sum(inp.gammas)
        + inp.z * inp.tau_c * inp.gammas[0]
    )
    return mk / denom


def rate_from_counts(m: int, k: int, z: int, taus, packets: int) -> Fraction:
    """Rate evaluated directly from a trace's round counts and packet total.

    Equivalent to rate_rpm3 at gamma_u = tau_u / tau_c and
    eps = packets/mk - 1, but stays defined when the slowest cluster never
    completed a round (tau_c = 0).
    """
    mk = m * k
    denom = 2 * packets + (z - 1) * sum(taus) + z * taus[0]
    return Fraction(mk, denom)


# ------------------------------------------------------------ model-1 bounds


@dataclass(frozen=True)
class BoundInputs:
    """Cluster profile used by the waiting-time bounds.

    lams are per-cluster service rates (fastest first), taus the per-cluster
    round counts; t_m couples shifts as s_u = t_m / lam_u. u_star picks the
    cluster minimising lam_u / tau_u (idle clusters are skipped; ties go to
    the smallest index).
    """

    n: int
    mk: int
    t_m: float
    lams: tuple
    taus: tuple
    shifts: tuple | None = None

    def __post_init__(self):
        if len(self.lams) != len(self.taus):
            raise DimensionMismatch("lams and taus must align")
        if all(t == 0 for t in self.taus):
            raise DimensionMismatch("at least one cluster must have tau >= 1")
        if self.shifts is not None:
            for lam, s in zip(self.lams, self.shifts):
                if abs(lam * s - self.t_m) > 1e-9 * max(1.0, abs(self.t_m)):
                    raise ConventionViolation(
                        "shifts must satisfy lam_u * s_u = t_m for every cluster"
                    )

    @property
    def u_star(self) -> int:
        best, best_ratio = None, None
        for u, (lam, tau) in enumerate(zip(self.lams, self.taus)):
            if tau == 0:
                continue
            ratio = lam / tau
            if best_ratio is None or ratio < best_ratio:
                best, best_ratio = u, ratio
        return best

    @property
    def s_m(self) -> float:
        """max_u s_u tau_u under the s_u = t_m / lam_u coupling."""
        return max(self.t_m * tau / lam for lam, tau in zip(self.lams, self.taus))

    @property
    def tau_max(self) -> int:
        return max(self.taus)


def rpm3_cdf_bound_model1(inp: BoundInputs, x: float) -> float:
    """Upper bound on P(makespan > x) under model 1; 0 below s_m/(mk)."""
    if x < inp.s_m / inp.mk:
        return 0.0
    u = inp.u_star
    expo = inp.t_m - inp.lams[u] * inp.mk / inp.taus[u] * x
    val = 1.0 - (1.0 - math.exp(expo)) ** inp.n
    return min(1.0, max(0.0, val))


def rpm3_mean_bound_model1(inp: BoundInputs) -> float:
    """(t_m + H_n) tau_u* / (lam_u* mk): mean-makespan upper bound, model 1."""
    u = inp.u_star
    return (inp.t_m + float(harmonic(inp.n))) * inp.taus[u] / (inp.lams[u] * inp.mk)


def kes_mean_lower_model1(n: int, n_s: int, t_m: float, lam1: float, m_i: int, k_i: int) -> float:
    """(t_m + H_n - H_{n-n_s}) / (lam_1 m_I k_I): fixed-rate lower bound."""
    if n_s >= n:
        raise DimensionMismatch("n_s must be < n")
    return float(t_m + harmonic(n) - harmonic(n - n_s)) / (lam1 * m_i * k_i)


# -------------------------------------------------- Erlang order statistics


@lru_cache(maxsize=64)
def _int_power_polys(shape: int, pmax: int):
    """Integer coefficient lists of ((shape-1)! * S)^p for p = 0..pmax,
    where S(x) = sum_{i < shape} x^i / i!."""
    fact = math.factorial(shape - 1)
    base = [fact // math.factorial(i) for i in range(shape)]
    polys = [[1]]
    for _ in range(pmax):
        prev = polys[-1]
        out = [0] * (len(prev) + shape - 1)
        for i, a in enumerate(prev):
            if a:
                for j, b in enumerate(base):
                    out[i + j] += a * b
        polys.append(out)
    return polys


def erlang_order_stat_mean_exact(n: int, d: int, shape: int) -> Fraction:
    """Exact mean of the d-th order statistic of n iid Erlang(shape, rate 1).

    Alternating binomial sum evaluated in integer arithmetic with a common
    denominator per term, so no cancellation is lost. Shape 1 reduces to
    the harmonic-difference identity H_n - H_{n-d}.
    """
    if not (1 <= d <= n) or shape < 1:
        raise DimensionMismatch("need 1 <= d <= n and shape >= 1")
    if shape == 1:
        return harmonic(n) - harmonic(n - d)
    polys = _int_power_polys(shape, n - 1)
    fact_sm1 = math.factorial(shape - 1)
    total = Fraction(0)
    for j in range(d):
        p = n - d + j  # power of the truncated series in this term
        coeffs = polys[p]
        lmax = len(coeffs) - 1
        base = n - d + j + 1  # decay rate of the exponential in this term
        numer = 0
        for l, cl in enumerate(coeffs):
            if cl:
                numer += cl * math.factorial(shape + l) * base ** (lmax - l)
        numer *= math.comb(d - 1, j)
        denom = base ** (shape + lmax + 1) * fact_sm1**p
        term = Fraction(numer, denom)
        total += -term if j % 2 else term
    return Fraction(n * math.comb(n - 1, d - 1), fact_sm1) * total


def erlang_order_stat_mean_quad(n: int, d: int, shape: int) -> float:
    """Mean of the d-th order statistic via integrating the survival function.

    E[X_(d)] = int_0^inf (1 - I_{F(x)}(d, n-d+1)) dx with F the Erlang CDF;
    adaptive quadrature at relative tolerance 1e-8.
    """

    def survival(x):
        fx = special.gammainc(shape, x)
        return 1.0 - special.betainc(d, n - d + 1, fx)

    # integrate out to where the survival is negligible
    tail = shape + 20.0 * math.sqrt(shape) + 20.0 * math.log(max(n, 2))
    val, err = integrate.quad(survival, 0.0, tail, limit=400, epsrel=1e-10, epsabs=1e-12)
    if not math.isfinite(val) or (val > 0 and err / val > 1e-8):
        raise PrecisionLoss(f"quadrature error {err} too large for value {val}")
    return val


def erlang_order_stat_mean(
    n: int, d: int, shape: int, rate=1, shift=0, exact_limit: int = EXACT_ORDER_STAT_LIMIT
):
    """Mean of the d-th order statistic of n iid shifted Erlang variables.

    Exact rational when shape == 1 or the instance is small enough
    (n <= exact_limit and (shape-1)*n <= 1200, keeping the integer
    polynomials tractable); numerical integration otherwise.
    """
    if shape == 1 or (n <= exact_limit and (shape - 1) * n <= 1200):
        unit = erlang_order_stat_mean_exact(n, d, shape)
        if isinstance(rate, (int, Fraction)) and isinstance(shift, (int, Fraction)):
            return shift + unit / rate
        return float(shift) + float(unit) / float(rate)
    return float(shift) + erlang_order_stat_mean_quad(n, d, shape) / float(rate)


def erlang_max_mean(n: int, shape: int, rate=1, shift=0, exact_limit: int = EXACT_ORDER_STAT_LIMIT):
    """Mean of the maximum of n iid shifted Erlang variables."""
    return erlang_order_stat_mean(n, n, shape, rate, shift, exact_limit)


# ------------------------------------------------------------ model-2 bounds


def rpm3_mean_bound_model2(inp: BoundInputs) -> float:
    """s_m/mk plus the max-order-statistic mean at shape tau_max, rate lam_c*mk."""
    lam_c = inp.lams[-1]
    stat = erlang_max_mean(inp.n, inp.tau_max, rate=1.0)
    return inp.s_m / inp.mk + float(stat) / (lam_c * inp.mk)


def kes_mean_lower_model2(n: int, n_s: int, shape: int, rate: float, shift: float) -> float:
    """Mean of the (n - n_s)-th order statistic of n iid shifted Erlang."""
    if n_s >= n:
        raise DimensionMismatch("n_s must be < n")
    return float(erlang_order_stat_mean(n, n - n_s, shape, rate=1.0)) / rate + shift


# ---------------------------------------------------------- load balancing


def lb_mean(tau_c_lb, s_c: float, lam_c: float, n: int, mk: int) -> float:
    """Exact mean makespan of the load-balancing scheme (model 1):
    s_c tau_c / mk + H_n tau_c / (lam_c mk)."""
    tau = float(tau_c_lb)
    if tau <= 0:
        raise DimensionMismatch("tau_c must be positive")
    return s_c * tau / mk + float(harmonic(n)) * tau / (lam_c * mk)


def lb_gap_brackets(gammas, sizes, z: int):
    """Rate-loss brackets of the two load-balancing comparisons.

    Both lie in (0, 1] away from the boundary and reach exactly 0 when every
    cluster is at its minimum usable size (n_1 = 2z+1, n_u = z+1).
    """
    gs = [Fraction(g) for g in gammas]
    if len(gs) != len(sizes):
        raise DimensionMismatch("gammas and sizes must align")
    sum_g = sum(gs)
    sum_gn = sum(g * n_u for g, n_u in zip(gs, sizes))
    ideal = 1 - Fraction(z + 1) * sum_g / (sum_gn - gs[0] * z)
    large = 1 - (sum(g * (z + 1) for g in gs[1:]) + 2 * gs[0]) / (
        sum_gn - gs[0] * (2 * z - 1)
    )
    return ideal, large


def lb_gap_factors(gammas, sizes, z: int, epsilon, lams):
    """Multiplicative gaps between the scheme's mean waiting time and the
    ideal / large-z load-balancing baselines.

    Returns (ideal_factor, gasp_large_factor) as exact rationals when the
    inputs are rational. Each factor is gamma_u* (1+eps) lam_c / lam_u*
    (doubled for the ideal comparison) divided by its bracket.
    """
    gs = [Fraction(g) for g in gammas]
    eps = Fraction(epsilon)
    if len(gs) != len(lams):
        raise DimensionMismatch("gammas and lams must align")
    lam_list = [Fraction(l) for l in lams]
    # u* minimises lam_u / gamma_u (tau_u proportional to gamma_u)
    ratios = [l / g for l, g in zip(lam_list, gs)]
    u_star = min(range(len(gs)), key=lambda u: (ratios[u], u))
    lam_ratio = lam_list[-1] / lam_list[u_star]
    ideal_bracket, large_bracket = lb_gap_brackets(gammas, sizes, z)
    if ideal_bracket <= 0 or large_bracket <= 0:
        raise DimensionMismatch("z too large for these cluster sizes (bracket <= 0)")
    ideal = 2 * gs[u_star] * (1 + eps) * lam_ratio / ideal_bracket
    large = gs[u_star] * (1 + eps) * lam_ratio / large_bracket
    return ideal, large
