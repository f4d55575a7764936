"""Experiment orchestration: configs, verification runs, CSV reports.

A verification run ties the layers together: build the model's dependence
profile, obtain a variance profile (closed form where one exists, Monte
Carlo otherwise), select block sizes, evaluate thresholds, and compare each
bound against the empirical tail of S(f) with an exact binomial interval.

Seed layout (all derived from config.base_seed, so reports are functions of
the config document alone): lane 1 feeds tail simulations (child i for the
i-th x-grid entry), lane 2 feeds variance estimation, lane 3 feeds
observable centering. Whenever the configured theorem is a blockwise bound,
each x also gets a plain iid-formula row on the same simulated sample,
tagged iid_eq1_ref; it is a reference curve, not a claimed bound.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .bounds import (
    VarianceProfile,
    hoeffding_threshold,
    iid_bernstein_threshold,
    select_k_star,
    select_k_star_prime,
    thm1_threshold,
    thm2_threshold,
    variance_profile,
)
from .coefficients import (
    DependenceProfile,
    WeightSequence,
    bernoulli_shift_linf_profile,
    doubling_map_profile,
    infinite_memory_profile,
    markov_contraction_profile,
)
from .errors import ConfigError, DomainError, NoValidBlockSizeError
from .estimation import (
    DEFAULT_ALPHA,
    estimate_sigma_profile,
    per_rep_sums,
    tail_from_sums,
)
from .processes import (
    BernoulliShiftGeometric,
    DoublingMap,
    IidUniform,
    InfiniteMemoryChain,
    LipschitzKernelChain,
    ProcessModel,
    analytic_sigma_profile,
    model_name,
    observable_for,
)
from .rng import derive_seed

THEOREMS = ("iid_eq1", "thm1", "thm2", "hoeffding")

_LANE_TAILS = 1
_LANE_VARIANCE = 2
_LANE_CENTERING = 3


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    model: ProcessModel
    observable: str
    omega: int
    n: int
    x_grid: tuple[float, ...]
    theorem: str
    reps: int
    base_seed: int
    alpha: float
    out: str | None

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ConfigError(f"unknown theorem {self.theorem!r}", field="theorem")
        if self.n < 1:
            raise ConfigError(f"need n >= 1, got {self.n}", field="n")
        if self.reps < 1:
            raise ConfigError(f"need reps >= 1, got {self.reps}", field="reps")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"need 0 < alpha < 1, got {self.alpha}", field="alpha")
        if any(x <= 0.0 for x in self.x_grid):
            raise ConfigError("x_grid entries must be positive", field="x_grid")
        if any(b <= a for a, b in zip(self.x_grid, self.x_grid[1:])):
            raise ConfigError("x_grid must be strictly increasing", field="x_grid")


_MODEL_KEYS = {
    "iid-uniform": set(),
    "doubling-map": set(),
    "kernel-chain": {"kappa"},
    "bernoulli-shift": {"theta", "truncation"},
    "infinite-memory": {"weights", "truncation"},
}

_WEIGHT_KEYS = {
    "zero": set(),
    "geometric": {"c", "ratio"},
    "polynomial": {"c", "power"},
}


def build_weights(doc: dict) -> WeightSequence:
    if "family" not in doc:
        raise ConfigError("weights need a 'family' key", field="model.weights.family")
    family = doc["family"]
    if family not in _WEIGHT_KEYS:
        raise ConfigError(f"unknown weight family {family!r}", field="model.weights.family")
    extra = set(doc) - _WEIGHT_KEYS[family] - {"family"}
    if extra:
        raise ConfigError(
            f"unknown weight key {sorted(extra)[0]!r}",
            field=f"model.weights.{sorted(extra)[0]}",
        )
    if family == "zero":
        return WeightSequence.zero()
    missing = _WEIGHT_KEYS[family] - set(doc)
    if missing:
        raise ConfigError(
            f"weight family {family!r} needs {sorted(missing)[0]!r}",
            field=f"model.weights.{sorted(missing)[0]}",
        )
    if family == "geometric":
        return WeightSequence.geometric(float(doc["c"]), float(doc["ratio"]))
    return WeightSequence.polynomial(float(doc["c"]), float(doc["power"]))


def build_model(doc: dict | str) -> ProcessModel:
    if isinstance(doc, str):
        doc = {"variant": doc}
    if "variant" not in doc:
        raise ConfigError("model needs a 'variant' key", field="model.variant")
    variant = doc["variant"]
    if variant not in _MODEL_KEYS:
        raise ConfigError(f"unknown model variant {variant!r}", field="model.variant")
    extra = set(doc) - _MODEL_KEYS[variant] - {"variant"}
    if extra:
        bad = sorted(extra)[0]
        raise ConfigError(f"unknown model key {bad!r}", field=f"model.{bad}")
    if variant == "iid-uniform":
        return IidUniform()
    if variant == "doubling-map":
        return DoublingMap()
    if variant == "kernel-chain":
        if "kappa" not in doc:
            raise ConfigError("kernel-chain needs 'kappa'", field="model.kappa")
        return LipschitzKernelChain(kappa=float(doc["kappa"]))
    if variant == "bernoulli-shift":
        if "theta" not in doc:
            raise ConfigError("bernoulli-shift needs 'theta'", field="model.theta")
        trunc = doc.get("truncation")
        return BernoulliShiftGeometric(
            theta=float(doc["theta"]), truncation=None if trunc is None else int(trunc)
        )
    if "weights" not in doc:
        raise ConfigError("infinite-memory needs 'weights'", field="model.weights")
    trunc = doc.get("truncation")
    return InfiniteMemoryChain(
        weights=build_weights(doc["weights"]),
        truncation=None if trunc is None else int(trunc),
    )


_TOP_KEYS = {"model", "observable", "n", "x_grid", "theorem", "reps", "base_seed", "alpha", "out"}
_REQUIRED_KEYS = {"model", "n", "x_grid", "theorem", "reps", "base_seed"}


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a JSON config document; unknown keys are hard errors."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", field="<root>")
    extra = set(doc) - _TOP_KEYS
    if extra:
        bad = sorted(extra)[0]
        raise ConfigError(f"unknown config key {bad!r}", field=bad)
    missing = _REQUIRED_KEYS - set(doc)
    if missing:
        bad = sorted(missing)[0]
        raise ConfigError(f"missing config key {bad!r}", field=bad)
    obs = doc.get("observable", "centered-identity")
    omega = 1
    if isinstance(obs, dict):
        extra = set(obs) - {"id", "omega"}
        if extra:
            bad = sorted(extra)[0]
            raise ConfigError(f"unknown observable key {bad!r}", field=f"observable.{bad}")
        omega = int(obs.get("omega", 1))
        obs = obs.get("id", "centered-identity")
    if obs not in ("centered-identity", "centered-cosine"):
        raise ConfigError(f"unknown observable {obs!r}", field="observable")
    x_grid = doc["x_grid"]
    if not isinstance(x_grid, (list, tuple)):
        raise ConfigError("x_grid must be a list", field="x_grid")
    return ExperimentConfig(
        model=build_model(doc["model"]),
        observable=obs,
        omega=omega,
        n=int(doc["n"]),
        x_grid=tuple(float(x) for x in x_grid),
        theorem=doc["theorem"],
        reps=int(doc["reps"]),
        base_seed=int(doc["base_seed"]),
        alpha=float(doc.get("alpha", DEFAULT_ALPHA)),
        out=doc.get("out"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


# ---------------------------------------------------------------------------
# model profiles and harness glue


def dependence_profile_for(model: ProcessModel, n: int) -> DependenceProfile:
    """The linf dependence profile each simulator provably satisfies."""
    if isinstance(model, IidUniform):
        return DependenceProfile(delta=np.zeros(n), kind="linf")
    if isinstance(model, DoublingMap):
        return doubling_map_profile(n)
    if isinstance(model, LipschitzKernelChain):
        return markov_contraction_profile(model.kappa, n)
    if isinstance(model, BernoulliShiftGeometric):
        th = model.theta
        # lag-i innovation weight (1-theta) theta^i gives block tails
        # r delta'_r = theta^r / (1-theta)
        return bernoulli_shift_linf_profile(
            th / (1.0 - th), WeightSequence.geometric((1.0 - th) / th, th), n
        )
    return infinite_memory_profile(model.weights, n)


def hoeffding_phi(profile: DependenceProfile, n: int) -> np.ndarray:
    """Future-block coefficients phi_1..phi_{n-1} from a blockwise profile.

    The future lags 1..n-j are covered by dyadic blocks (length 2^p starting
    at lag 2^p), each contributing its blockwise bound 2^p delta'_{2^p}; the
    total T_j is spread uniformly as phi_j = min(1, T_j / (n-j)), so the
    threshold's (n-j) phi_j term recovers T_j. Conservative glue.
    """
    if profile.kind != "linf":
        raise DomainError("per-lag construction needs an linf profile")
    if profile.n < n:
        raise DomainError(f"profile covers {profile.n} lags, need {n}")
    phis = np.empty(n - 1)
    for j in range(1, n):
        L = n - j
        total = 0.0
        p = 0
        while (1 << p) <= L:
            r = 1 << p
            total += r * profile.at(r)
            p += 1
        phis[j - 1] = min(1.0, total / L)
    return phis


def mc_variance_profile(
    model: ProcessModel,
    f,
    n: int,
    reps: int,
    seed: int,
    threads: int | None = 1,
) -> VarianceProfile:
    """Estimated variance profile on a dyadic block grid, step-filled.

    sigma_k^2 is estimated at k in {1, 2, 4, ..., n}; intermediate k reuse
    the estimate at the nearest grid point below. Grid estimation keeps MC
    cost at O(n log n) trajectory steps instead of O(n^2).
    """
    ks = sorted({min(1 << p, n) for p in range(n.bit_length() + 1)} | {1, n})
    ks = [k for k in ks if 1 <= k <= n]
    ests = estimate_sigma_profile(model, f, ks, reps, seed, threads)
    by_k = {e.k: e.sigma_sq_hat for e in ests}
    filled = np.empty(n)
    current = by_k[1]
    for k in range(1, n + 1):
        if k in by_k:
            current = by_k[k]
        filled[k - 1] = current
    return variance_profile(filled, source="estimated")


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ReportRow:
    theorem: str
    x: float
    k_selected: int | None
    variance_used: float | None
    variance_source: str
    threshold: float | None
    bound_value: float
    p_hat: float | None
    ci_high: float | None
    verdict: str


REPORT_CSV_HEADER = [f.name for f in fields(ReportRow)]


def run_verification(config: ExperimentConfig, threads: int | None = 1) -> list[ReportRow]:
    """One ReportRow per x (plus an iid reference row for blockwise bounds)."""
    model = config.model
    n = config.n
    f = observable_for(
        model,
        config.observable,
        config.omega,
        seed=derive_seed(config.base_seed, _LANE_CENTERING),
    )
    tail_lane = derive_seed(config.base_seed, _LANE_TAILS)
    var_lane = derive_seed(config.base_seed, _LANE_VARIANCE)

    analytic = analytic_sigma_profile(model, f, n)
    source = "analytic" if analytic is not None else "estimated"
    needs_profile = config.theorem in ("thm1", "thm2", "hoeffding")
    profile = dependence_profile_for(model, n) if needs_profile else None

    # sigma at a single k, from the closed form or a per-k MC lane
    mc_cache: dict[int, float] = {}

    def sigma_at(k: int) -> float:
        if analytic is not None:
            return analytic.sigma_at(k)
        if k not in mc_cache:
            est = estimate_sigma_profile(model, f, [k], config.reps, var_lane, threads)[0]
            mc_cache[k] = est.sigma_sq_hat
        return mc_cache[k]

    thm1_selection = None
    thm1_sigma_bar = None
    if config.theorem == "thm1":
        if analytic is not None:
            varprof = analytic
        else:
            varprof = mc_variance_profile(model, f, n, config.reps, var_lane, threads)
        thm1_selection = select_k_star(profile, varprof)
        if thm1_selection.found:
            thm1_sigma_bar = varprof.envelope_at(thm1_selection.k)
    phis = hoeffding_phi(profile, n) if config.theorem == "hoeffding" else None

    rows: list[ReportRow] = []
    for i, x in enumerate(config.x_grid):
        bound = math.exp(-x)
        sums = per_rep_sums(model, f, n, config.reps, derive_seed(tail_lane, i), threads)

        def tail_row(theorem: str, threshold: float, k: int | None, var: float | None,
                     var_source: str) -> ReportRow:
            est = tail_from_sums(sums, threshold, x=x, alpha=config.alpha)
            verdict = "pass" if est.ci_high <= bound else "fail"
            return ReportRow(
                theorem=theorem,
                x=x,
                k_selected=k,
                variance_used=var,
                variance_source=var_source,
                threshold=threshold,
                bound_value=bound,
                p_hat=est.p_hat,
                ci_high=est.ci_high,
                verdict=verdict,
            )

        if config.theorem == "iid_eq1":
            s1 = sigma_at(1)
            rows.append(
                tail_row("iid_eq1", iid_bernstein_threshold(n, s1, x), None, s1, source)
            )
            continue

        if config.theorem == "thm1":
            if thm1_selection is not None and thm1_selection.found:
                k = thm1_selection.k
                rows.append(
                    tail_row("thm1", thm1_threshold(n, thm1_sigma_bar, k, x), k,
                             thm1_sigma_bar, source)
                )
            else:
                rows.append(_skipped_row("thm1", x, bound))
        elif config.theorem == "thm2":
            selection = select_k_star_prime(profile, n, x)
            if selection.found:
                k = selection.k
                s = sigma_at(k)
                rows.append(tail_row("thm2", thm2_threshold(n, s, k, x), k, s, source))
            else:
                rows.append(_skipped_row("thm2", x, bound))
        else:
            rows.append(tail_row("hoeffding", hoeffding_threshold(n, phis, x), None, None, ""))

        s1 = sigma_at(1)
        rows.append(
            tail_row("iid_eq1_ref", iid_bernstein_threshold(n, s1, x), None, s1, source)
        )
    return rows


def _skipped_row(theorem: str, x: float, bound: float) -> ReportRow:
    return ReportRow(
        theorem=theorem,
        x=x,
        k_selected=None,
        variance_used=None,
        variance_source="",
        threshold=None,
        bound_value=bound,
        p_hat=None,
        ci_high=None,
        verdict="skipped",
    )


def emit_report(rows: list[ReportRow], path) -> None:
    """Deterministic CSV: fixed header, round-trip float formatting."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_CSV_HEADER)
            for row in rows:
                w.writerow(
                    [
                        row.theorem,
                        repr(float(row.x)),
                        "" if row.k_selected is None else row.k_selected,
                        "" if row.variance_used is None else repr(row.variance_used),
                        row.variance_source,
                        "" if row.threshold is None else repr(row.threshold),
                        repr(row.bound_value),
                        "" if row.p_hat is None else repr(row.p_hat),
                        "" if row.ci_high is None else repr(row.ci_high),
                        row.verdict,
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# block-size asymptotics


@dataclass(frozen=True)
class AsymptoticsRow:
    target: float
    k_star: int
    ratio: float


_SCAN_CAP = 1 << 30


def run_blocksize_asymptotics(
    family: str, targets, c: float = 1.0, decay: float = 0.5
) -> list[AsymptoticsRow]:
    """k*(v) = min{k : k delta_k <= v} by exhaustive scan, with the
    normalization that should stabilize: k*/ln(1/v) for geometric profiles
    k delta_k = c decay^k, and k*/v^{1/(1-decay)} for polynomial profiles
    delta_k = c k^{-decay} (decay > 1)."""
    targets = [float(v) for v in targets]
    if any(v <= 0.0 for v in targets):
        raise DomainError("targets must be positive")
    if any(b >= a for a, b in zip(targets, targets[1:])):
        raise DomainError("targets must be strictly decreasing")
    if family == "geometric":
        if not 0.0 < decay < 1.0:
            raise DomainError(f"need 0 < decay < 1, got {decay}")
        kdelta = lambda ks: c * decay**ks
        norm = lambda v: math.log(1.0 / v)
    elif family == "polynomial":
        if decay <= 1.0:
            raise DomainError(f"need decay > 1, got {decay}")
        kdelta = lambda ks: c * ks ** (1.0 - decay)
        norm = lambda v: v ** (1.0 / (1.0 - decay))
    else:
        raise DomainError(f"unknown profile family {family!r}")
    if c <= 0.0:
        raise DomainError(f"need c > 0, got {c}")

    rows = []
    for v in targets:
        k = _scan_first_k(kdelta, v)
        rows.append(AsymptoticsRow(target=v, k_star=k, ratio=k / norm(v)))
    return rows


def _scan_first_k(kdelta, v: float) -> int:
    lo = 1
    chunk = 1 << 16
    while lo <= _SCAN_CAP:
        hi = min(lo + chunk, _SCAN_CAP + 1)
        ks = np.arange(lo, hi, dtype=np.float64)
        ok = np.nonzero(kdelta(ks) <= v)[0]
        if ok.size:
            return lo + int(ok[0])
        lo = hi
        chunk *= 2
    raise DomainError(f"no block size up to {_SCAN_CAP} meets target {v}")


def ratio_spread(rows: list[AsymptoticsRow]) -> float:
    """max/min of the normalized ratios; 1.0 means perfectly stable."""
    ratios = [r.ratio for r in rows]
    return max(ratios) / min(ratios)
