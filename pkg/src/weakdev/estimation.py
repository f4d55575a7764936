"""Monte Carlo estimators with exact-binomial uncertainty.

All estimators fan replications out over a thread pool in fixed-size chunks.
Each replication's stream is derived from (base seed, replication index)
alone and every chunk writes a disjoint slice of one replication-ordered
array; reductions then run over that array in a single deterministic pass.
Results are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as _beta

from .errors import DomainError
from .processes import (
    ObservableF,
    ProcessModel,
    coupled_distance_sums,
    observable_sums,
    stationary_init_batch,
)
from .rng import derive_seed, replication_seeds

DEFAULT_ALPHA = 0.01

_CHUNK = 16384


@dataclass(frozen=True)
class TailEstimate:
    """Exceedance frequency of S(f) over a threshold, with exact CI."""

    threshold: float
    x: float
    hits: int
    reps: int
    p_hat: float
    ci_low: float
    ci_high: float
    alpha: float


@dataclass(frozen=True)
class SigmaEstimate:
    """Block-sum variance over k, from independent length-k replicas."""

    k: int
    sigma_sq_hat: float
    std_error: float
    reps: int


@dataclass(frozen=True)
class CouplingEstimate:
    """Largest observed coupled-block distance sum at one (r, j)."""

    r: int
    j: int
    max_sum: float
    witness: float  # max_sum / r, an empirical lower witness for delta'_r
    reps: int


@dataclass(frozen=True)
class MeanAbsEstimate:
    value: float
    std_error: float
    reps: int


def clopper_pearson(hits: int, reps: int, alpha: float = DEFAULT_ALPHA) -> tuple[float, float]:
    """Exact two-sided binomial interval at confidence 1 - alpha."""
    if not 0 <= hits <= reps:
        raise DomainError(f"need 0 <= hits <= reps, got {hits}/{reps}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"need 0 < alpha < 1, got {alpha}")
    lo = 0.0 if hits == 0 else float(_beta.ppf(alpha / 2.0, hits, reps - hits + 1))
    hi = 1.0 if hits == reps else float(_beta.ppf(1.0 - alpha / 2.0, hits + 1, reps - hits))
    return lo, hi


def _per_rep_values(fn, reps: int, seed: int, threads: int | None) -> np.ndarray:
    """Assemble fn(seeds of chunk) for replications 0..reps-1, in order.

    fn must map a seed array to one float per seed. Chunks cover disjoint
    index ranges, so scheduling cannot reorder or change anything.
    """
    if threads is None:
        threads = os.cpu_count() or 1
    out = np.empty(reps)
    spans = [(lo, min(lo + _CHUNK, reps)) for lo in range(0, reps, _CHUNK)]

    def fill(span):
        lo, hi = span
        out[lo:hi] = fn(replication_seeds(seed, lo, hi))

    if threads <= 1 or len(spans) == 1:
        for span in spans:
            fill(span)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, spans))
    return out


def per_rep_sums(
    model: ProcessModel,
    f: ObservableF,
    n: int,
    reps: int,
    seed: int,
    threads: int | None = 1,
) -> np.ndarray:
    """S(f) = sum_{t<=n} f(X_t) for each replication, in replication order."""
    if reps < 1:
        raise DomainError(f"need reps >= 1, got {reps}")
    return _per_rep_values(lambda s: observable_sums(model, f, n, s), reps, seed, threads)


def tail_from_sums(
    sums: np.ndarray, threshold: float, *, x: float = math.nan, alpha: float = DEFAULT_ALPHA
) -> TailEstimate:
    """Exceedance estimate over an already-simulated S(f) sample."""
    reps = int(sums.size)
    hits = int(np.count_nonzero(sums >= threshold))
    lo, hi = clopper_pearson(hits, reps, alpha)
    return TailEstimate(
        threshold=float(threshold),
        x=float(x),
        hits=hits,
        reps=reps,
        p_hat=hits / reps,
        ci_low=lo,
        ci_high=hi,
        alpha=alpha,
    )


def estimate_tail(
    model: ProcessModel,
    f: ObservableF,
    n: int,
    threshold: float,
    reps: int,
    seed: int,
    *,
    x: float = math.nan,
    alpha: float = DEFAULT_ALPHA,
    threads: int | None = 1,
) -> TailEstimate:
    """P(S(f) >= threshold) by brute-force MC with a Clopper-Pearson CI."""
    sums = per_rep_sums(model, f, n, reps, seed, threads)
    return tail_from_sums(sums, threshold, x=x, alpha=alpha)


def estimate_sigma_profile(
    model: ProcessModel,
    f: ObservableF,
    k_list,
    reps: int,
    seed: int,
    threads: int | None = 1,
) -> list[SigmaEstimate]:
    """sigma_k^2 = Var(block sum)/k from reps independent length-k replicas.

    Each k gets its own seed lane keyed by the value of k, so estimates do
    not depend on which other block lengths were requested alongside.
    """
    if reps < 2:
        raise DomainError(f"need reps >= 2, got {reps}")
    out = []
    for k in k_list:
        k = int(k)
        if k < 1:
            raise DomainError(f"need k >= 1, got {k}")
        sums = _per_rep_values(
            lambda s, k=k: observable_sums(model, f, k, s), reps, derive_seed(seed, k), threads
        )
        s2 = float(np.var(sums, ddof=1))
        centered = sums - sums.mean()
        m4 = float(np.mean(centered**4))
        var_s2 = max(0.0, (m4 - s2 * s2 * (reps - 3) / (reps - 1)) / reps)
        out.append(
            SigmaEstimate(k=k, sigma_sq_hat=s2 / k, std_error=math.sqrt(var_s2) / k, reps=reps)
        )
    return out


def estimate_coupling_delta(
    model: ProcessModel,
    r_list,
    j_list,
    reps: int,
    seed: int,
    threads: int | None = 1,
    share_presplit: bool = False,
) -> list[CouplingEstimate]:
    """Per-(r, j) maxima of coupled-block distance sums over reps pairs.

    The max over replications of distance_sum / r witnesses delta'_r from
    below; profiles must dominate it. Seeds are keyed by (r, j) values.
    """
    if reps < 1:
        raise DomainError(f"need reps >= 1, got {reps}")
    out = []
    for r in r_list:
        lane_r = derive_seed(seed, int(r))
        for j in j_list:
            sums = _per_rep_values(
                lambda s, r=int(r), j=int(j): coupled_distance_sums(
                    model, j, r, s, share_presplit=share_presplit
                ),
                reps,
                derive_seed(lane_r, int(j)),
                threads,
            )
            m = float(np.max(sums))
            out.append(CouplingEstimate(r=int(r), j=int(j), max_sum=m, witness=m / r, reps=reps))
    return out


def estimate_mean_abs_f(
    model: ProcessModel,
    f: ObservableF,
    reps: int,
    seed: int,
    threads: int | None = 1,
) -> MeanAbsEstimate:
    """E|f(X_1)| under the stationary law, with its standard error."""
    if reps < 2:
        raise DomainError(f"need reps >= 2, got {reps}")
    vals = _per_rep_values(
        lambda s: np.abs(f.values(stationary_init_batch(model, s))), reps, seed, threads
    )
    return MeanAbsEstimate(
        value=float(vals.mean()),
        std_error=float(vals.std(ddof=1)) / math.sqrt(reps),
        reps=reps,
    )


# ---------------------------------------------------------------------------
# CSV rows

ESTIMATE_CSV_HEADER = [
    "model",
    "f",
    "k_or_n",
    "statistic",
    "estimate",
    "se_or_ci_low",
    "ci_high",
    "reps",
    "seed",
]


def sigma_csv_row(model_label: str, f_label: str, est: SigmaEstimate, seed: int) -> list:
    return [
        model_label,
        f_label,
        est.k,
        "sigma_sq",
        repr(est.sigma_sq_hat),
        repr(est.std_error),
        "",
        est.reps,
        seed,
    ]


def tail_csv_row(model_label: str, f_label: str, n: int, est: TailEstimate, seed: int) -> list:
    return [
        model_label,
        f_label,
        n,
        f"tail@{repr(est.threshold)}",
        repr(est.p_hat),
        repr(est.ci_low),
        repr(est.ci_high),
        est.reps,
        seed,
    ]


def coupling_csv_row(model_label: str, est: CouplingEstimate, seed: int) -> list:
    return [
        model_label,
        "",
        f"r={est.r},j={est.j}",
        "coupling_max_sum",
        repr(est.max_sum),
        repr(est.witness),
        "",
        est.reps,
        seed,
    ]


def write_estimates_csv(rows: list[list], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_CSV_HEADER)
        w.writerows(rows)
