"""Deviation thresholds and rate functions for sums of dependent sequences.

Everything in this module is a pure formula: given a sample size, a variance
quantity, a dependence profile and a tail exponent x, compute the threshold t
such that P(S >= t) <= exp(-x), or evaluate the underlying rate functions.
Observables are assumed bounded by 1/2, so all variance inputs are per-term
(variance of a length-k block sum divided by k).

Profiles come in two flavours.  A "phi" profile bounds conditional
expectations of block averages (selector: smallest k with k*delta_k below the
variance envelope).  A "linf" profile bounds almost-sure coupling distances
of blocks (selector couples k to the tail exponent x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoValidBlockSizeError, ValidationError

PROFILE_KINDS = ("phi", "linf")
VARIANCE_SOURCES = ("analytic", "estimated")

# Monotonicity slack for profile validation.
_MONOTONE_TOL = 1e-12


# ---------------------------------------------------------------------------
# rate functions


def bennett_h(x: float) -> float:
    """h(x) = (1+x) ln(1+x) - x for x >= 0."""
    if x < 0:
        raise DomainError(f"bennett_h needs x >= 0, got {x}")
    if x < 1e-4:
        # series sum_{k>=2} (-1)^k x^k / (k(k-1)); truncation error < x^6/30
        return x * x * (0.5 - x / 6.0 + x * x / 12.0 - x * x * x / 20.0)
    return (1.0 + x) * math.log1p(x) - x


def bernstein_h1(x: float) -> float:
    """h1(x) = 1 + x - sqrt(1 + 2x), evaluated cancellation-free.

    Algebraically 1 + x - sqrt(1+2x) = x^2 / (1 + x + sqrt(1+2x)); the second
    form avoids the subtraction of nearly equal numbers for small x.
    """
    if x < 0:
        raise DomainError(f"bernstein_h1 needs x >= 0, got {x}")
    return x * x / (1.0 + x + math.sqrt(1.0 + 2.0 * x))


def h1_inverse(x: float) -> float:
    """Inverse of h1 on [0, inf): h1^{-1}(x) = sqrt(2x) + x."""
    if x < 0:
        raise DomainError(f"h1_inverse needs x >= 0, got {x}")
    return math.sqrt(2.0 * x) + x


# ---------------------------------------------------------------------------
# profile containers


@dataclass(frozen=True, eq=False)
class DependenceProfile:
    """Dependence coefficients delta_r, r = 1..n, non-increasing in [0, 1]."""

    delta: np.ndarray
    kind: str
    n: int = field(init=False)

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}", field="kind")
        arr = np.asarray(self.delta, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("delta must be a non-empty 1-d array", field="delta")
        object.__setattr__(self, "delta", arr)
        object.__setattr__(self, "n", int(arr.size))

    def at(self, r: int) -> float:
        """delta_r with mathematical (1-based) indexing."""
        if not 1 <= r <= self.n:
            raise DomainError(f"lag r={r} outside 1..{self.n}")
        return float(self.delta[r - 1])


@dataclass(frozen=True, eq=False)
class VarianceProfile:
    """Per-term block variances sigma_k^2 and their upper envelope.

    envelope[k] = max_{j >= k} sigma_sq[j]; since |f| <= 1/2 forces
    sigma_k^2 <= k/4, construction rejects values above that cap.
    """

    sigma_sq: np.ndarray
    envelope: np.ndarray
    n: int
    source: str

    def sigma_at(self, k: int) -> float:
        if not 1 <= k <= self.n:
            raise DomainError(f"block length k={k} outside 1..{self.n}")
        return float(self.sigma_sq[k - 1])

    def envelope_at(self, k: int) -> float:
        if not 1 <= k <= self.n:
            raise DomainError(f"block length k={k} outside 1..{self.n}")
        return float(self.envelope[k - 1])


def variance_profile(sigma_sq: np.ndarray, source: str = "analytic") -> VarianceProfile:
    """Build a VarianceProfile, computing the envelope by a backward pass."""
    if source not in VARIANCE_SOURCES:
        raise ValidationError(f"unknown variance source {source!r}", field="source")
    arr = np.asarray(sigma_sq, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("sigma_sq must be a non-empty 1-d array", field="sigma_sq")
    if np.any(arr < 0):
        k = int(np.argmax(arr < 0)) + 1
        raise ValidationError(f"sigma_sq[{k}] < 0", field=f"sigma_sq[{k}]")
    caps = np.arange(1, arr.size + 1, dtype=np.float64) / 4.0
    over = arr > caps * (1.0 + 1e-9)
    if np.any(over):
        k = int(np.argmax(over)) + 1
        raise ValidationError(
            f"sigma_sq[{k}] = {arr[k-1]} exceeds the cap k/4 = {caps[k-1]}",
            field=f"sigma_sq[{k}]",
        )
    env = np.maximum.accumulate(arr[::-1])[::-1]
    return VarianceProfile(sigma_sq=arr, envelope=env, n=int(arr.size), source=source)


def variance_envelope(profile: VarianceProfile) -> VarianceProfile:
    """Recompute the suffix-max envelope of an existing profile."""
    return variance_profile(profile.sigma_sq, source=profile.source)


@dataclass(frozen=True)
class BlockSelection:
    """Result of a block-size search; k is None when no k is admissible."""

    k: int | None
    variance_at_k: float | None

    @property
    def found(self) -> bool:
        return self.k is not None

    def require(self) -> tuple[int, float | None]:
        if self.k is None:
            raise NoValidBlockSizeError("no admissible block size; cannot form a bound")
        # coupling-route selections carry no variance alongside the block size
        var = None if self.variance_at_k is None else float(self.variance_at_k)
        return self.k, var


# ---------------------------------------------------------------------------
# block-size selectors


def select_k_star(delta: DependenceProfile, variance: VarianceProfile) -> BlockSelection:
    """Smallest k in 1..n with k * delta_k <= envelope_k (phi-route selector)."""
    if delta.n != variance.n:
        raise ValidationError(
            f"profile lengths differ: delta has n={delta.n}, variance has n={variance.n}",
            field="n",
        )
    ks = np.arange(1, delta.n + 1, dtype=np.float64)
    hits = np.nonzero(ks * delta.delta <= variance.envelope)[0]
    if hits.size == 0:
        return BlockSelection(k=None, variance_at_k=None)
    k = int(hits[0]) + 1
    return BlockSelection(k=k, variance_at_k=float(variance.envelope[k - 1]))


def select_k_star_prime(delta_prime: DependenceProfile, n: int, x: float) -> BlockSelection:
    """Smallest k in 1..n with n * delta'_k <= k * x (coupling-route selector).

    The admissibility condition couples k to the tail exponent, so x = 0 is
    rejected rather than silently selecting nothing.
    """
    if delta_prime.kind != "linf":
        raise ValidationError(
            f"selector needs a linf profile, got kind={delta_prime.kind!r}", field="kind"
        )
    if x <= 0:
        raise DomainError(f"select_k_star_prime needs x > 0, got {x}")
    if n < 1:
        raise DomainError(f"select_k_star_prime needs n >= 1, got {n}")
    if delta_prime.n < n:
        raise ValidationError(
            f"profile covers lags 1..{delta_prime.n}, need 1..{n}", field="n"
        )
    ks = np.arange(1, n + 1, dtype=np.float64)
    hits = np.nonzero(n * delta_prime.delta[:n] <= ks * x)[0]
    if hits.size == 0:
        return BlockSelection(k=None, variance_at_k=None)
    return BlockSelection(k=int(hits[0]) + 1, variance_at_k=None)


# ---------------------------------------------------------------------------
# thresholds and tail bounds


def iid_bernstein_threshold(n: int, sigma1_sq: float, x: float) -> float:
    """Independent-case threshold sqrt(2 n sigma1^2 x) + x/6."""
    _check_threshold_args(n, sigma1_sq, x, "sigma1_sq")
    return max(0.0, math.sqrt(2.0 * n * sigma1_sq * x) + x / 6.0)


def thm1_threshold(n: int, envelope_at_k_star: float, k_star: int, x: float) -> float:
    """Bernstein-type threshold 5.8 sqrt(n sigma_bar^2 x) + 1.5 k* x."""
    _check_threshold_args(n, envelope_at_k_star, x, "envelope_at_k_star")
    _check_k(k_star)
    return max(0.0, 5.8 * math.sqrt(n * envelope_at_k_star * x) + 1.5 * k_star * x)


def thm2_threshold(n: int, sigma_sq_at_kp: float, k_star_prime: int, x: float) -> float:
    """Coupling-route threshold 2 sqrt(n sigma_k^2 x) + 1.34 k*' x."""
    _check_threshold_args(n, sigma_sq_at_kp, x, "sigma_sq_at_kp")
    _check_k(k_star_prime)
    return max(0.0, 2.0 * math.sqrt(n * sigma_sq_at_kp * x) + 1.34 * k_star_prime * x)


def thm2_bennett_tail(
    n: int, k: int, sigma_k_sq: float, delta_prime_k: float, x: float
) -> float:
    """Bennett-form tail exp(-(2n sigma^2/k^2) h(k (x - n delta') / (2n sigma^2))).

    Defined for x >= n*delta'_k.  A degenerate block variance gives the
    limiting point mass: 0 for x strictly above n*delta'_k, 1 at equality.
    """
    _check_k(k)
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if sigma_k_sq < 0:
        raise DomainError(f"need sigma_k_sq >= 0, got {sigma_k_sq}")
    if delta_prime_k < 0:
        raise DomainError(f"need delta_prime_k >= 0, got {delta_prime_k}")
    shift = n * delta_prime_k
    if x < shift:
        raise DomainError(f"need x >= n*delta'_k = {shift}, got x = {x}")
    if sigma_k_sq == 0.0:
        return 1.0 if x == shift else 0.0
    scale = 2.0 * n * sigma_k_sq
    exponent = (scale / (k * k)) * bennett_h(k * (x - shift) / scale)
    return min(1.0, math.exp(-exponent))


def hoeffding_threshold(n: int, phi, x: float) -> float:
    """Whole-tail Hoeffding threshold sqrt(x/2 * sum_j (1 + 2(n-j) phi_j)^2).

    phi_j bounds the dependence of the entire future block (X_{j+1},...,X_n)
    on the first j coordinates; the j = n summand is 1 by convention (the
    factor n - j vanishes, so phi_n never enters).
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if x < 0:
        raise DomainError(f"need x >= 0, got {x}")
    w = np.asarray(phi, dtype=np.float64)
    if w.size < n - 1:
        raise ValidationError(f"phi has {w.size} entries, need at least n-1 = {n-1}", field="phi")
    w = w[: n - 1]
    if np.any((w < 0) | (w > 1)):
        j = int(np.argmax((w < 0) | (w > 1))) + 1
        raise ValidationError(f"phi[{j}] = {w[j-1]} outside [0, 1]", field=f"phi[{j}]")
    j = np.arange(1, n, dtype=np.float64)
    total = float(np.sum((1.0 + 2.0 * (n - j) * w) ** 2)) + 1.0
    return max(0.0, math.sqrt(0.5 * total * x))


def varest_bound(sigma1_sq: float, mean_abs_f: float, delta: DependenceProfile, k: int) -> float:
    """Variance bound sigma_1^2 + 2 E|f| sum_{r<k} delta_r."""
    if sigma1_sq < 0:
        raise DomainError(f"need sigma1_sq >= 0, got {sigma1_sq}")
    if mean_abs_f < 0:
        raise DomainError(f"need mean_abs_f >= 0, got {mean_abs_f}")
    _check_k(k)
    if k > delta.n:
        raise DomainError(f"k = {k} exceeds profile length n = {delta.n}")
    return sigma1_sq + 2.0 * mean_abs_f * float(np.sum(delta.delta[: k - 1]))


# ---------------------------------------------------------------------------
# log moment generating function diagnostics


def log_mgf_bound_thm1(t: float, n: int, k: int, sigma_k_sq: float, delta_k: float) -> float:
    """Blocking-route bound 4 n t^2 (2(e-2) sigma_k^2 + e k delta_k), 0 <= t <= 1.

    Intended pairing is k = min(floor(1/t), n); the formula is evaluated for
    whatever k the caller supplies so both sides of that choice can be probed.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"need 0 <= t <= 1, got {t}")
    _check_k(k)
    if n < 1 or sigma_k_sq < 0 or delta_k < 0:
        raise DomainError("need n >= 1, sigma_k_sq >= 0, delta_k >= 0")
    return 4.0 * n * t * t * (2.0 * (math.e - 2.0) * sigma_k_sq + math.e * k * delta_k)


def log_mgf_bound_thm2(t: float, n: int, k: int, sigma_k_sq: float, delta_prime_k: float) -> float:
    """Coupling-route bound (2n sigma^2/k^2)(e^{kt} - kt - 1) + n delta'_k t."""
    if t < 0:
        raise DomainError(f"need t >= 0, got {t}")
    _check_k(k)
    if n < 1 or sigma_k_sq < 0 or delta_prime_k < 0:
        raise DomainError("need n >= 1, sigma_k_sq >= 0, delta_prime_k >= 0")
    kt = k * t
    return (2.0 * n * sigma_k_sq / (k * k)) * (math.expm1(kt) - kt) + n * delta_prime_k * t


# ---------------------------------------------------------------------------


def _check_threshold_args(n: int, variance: float, x: float, name: str) -> None:
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if variance < 0:
        raise DomainError(f"need {name} >= 0, got {variance}")
    if x < 0:
        raise DomainError(f"need x >= 0, got {x}")


def _check_k(k) -> None:
    if k is None:
        raise NoValidBlockSizeError("block size is the no-selection sentinel; refuse to compute")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise DomainError(f"block size must be a positive integer, got {k!r}")
