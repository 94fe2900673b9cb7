"""Weak-Lp estimation and confidence-bounded Monte Carlo tail checks.

A Monte Carlo run cannot certify an upper bound on a probability, only
refute it. Every check here therefore compares the *lower* exact binomial
confidence bound of an empirical tail probability against the theoretical
bound: a FAIL means the bound is contradicted at 99.9% confidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Sequence

import numpy as np
from scipy.stats import beta

from smilab import matrix_core
from smilab.ensembles import EnsembleSpec, Family, SeedPath, ShiftSpec, sample_entries, sample_stack
from smilab.errors import ConfigError, DomainError, UnsupportedFamilyError
from smilab.parallel import map_trials

__all__ = [
    "CONFIDENCE",
    "MAX_EXCLUDED_FRACTION",
    "SampleSet",
    "TrialRecord",
    "TrialBatch",
    "TailReport",
    "HagelsteinReport",
    "CounterexampleRow",
    "CounterexampleReport",
    "GinibreLowerReport",
    "clopper_pearson",
    "weak_lp_norm",
    "empirical_tail",
    "tail_report",
    "draw_trials",
    "check_theorem_bound",
    "check_sst_bound",
    "check_hagelstein",
    "counterexample_growth",
    "check_ginibre_lower",
]

CONFIDENCE = 0.999
MAX_EXCLUDED_FRACTION = 1e-3
THEOREM_CONSTANT = 8.0
SST_CONSTANT = 2.35
HAGELSTEIN_CONSTANT = 4.0
GINIBRE_LOWER_THRESHOLD = 0.1
GINIBRE_LOWER_MIN_N = 20


@dataclass
class SampleSet:
    """Nonnegative samples plus the number of degenerate draws dropped."""

    values: np.ndarray
    excluded: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def excluded_fraction(self) -> float:
        total = self.count + self.excluded
        return self.excluded / total if total else 0.0


def clopper_pearson(k: int, n: int, confidence: float = CONFIDENCE):
    """Exact binomial bounds for ``k`` successes in ``n`` trials.

    Each side is a one-sided bound at level ``confidence``: the lower bound
    is the ``1 - confidence`` quantile of Beta(k, n-k+1) and the upper bound
    the ``confidence`` quantile of Beta(k+1, n-k).
    """
    if n < 1 or not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    alpha = 1.0 - confidence
    lo = 0.0 if k == 0 else float(beta.ppf(alpha, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(confidence, k + 1, n - k))
    return lo, hi


def weak_lp_norm(samples, p: float = 1.0, min_exceedances: Optional[int] = None) -> float:
    """Empirical weak-Lp norm ``sup_t t * P(|X| > t)**(1/p)``.

    With ascending order statistics ``v[0] <= ... <= v[N-1]`` the supremum
    of the empirical functional is ``max_k v[k] * ((N - k) / N)**(1/p)``,
    approached as ``t`` rises to each ``v[k]``.

    The supremum is taken only over thresholds exceeded by at least
    ``min_exceedances`` samples (default ``ceil(sqrt(N))``). For heavy tails
    the unrestricted maximum is decided by the single largest draw and does
    not converge; ``min_exceedances=1`` gives the unrestricted value.
    """
    values = samples.values if isinstance(samples, SampleSet) else np.asarray(samples, dtype=np.float64).ravel()
    if values.size == 0:
        raise DomainError("weak-Lp norm of an empty sample set")
    if values.size < 100:
        raise DomainError(f"weak-Lp norm needs at least 100 samples, got {values.size}")
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    v = np.sort(np.abs(values))
    n = v.size
    k0 = math.isqrt(n - 1) + 1 if min_exceedances is None else int(min_exceedances)
    if not 1 <= k0 <= n:
        raise DomainError(f"min_exceedances must lie in [1, {n}], got {k0}")
    w = ((n - np.arange(n - k0 + 1)) / n) ** (1.0 / p)
    return float(np.max(v[: n - k0 + 1] * w))


def empirical_tail(samples: SampleSet, t: float, confidence: float = CONFIDENCE):
    """``(estimate, ci_lower, ci_upper)`` for ``P(X > t)``."""
    if samples.count < 1:
        raise DomainError("empirical tail needs at least one sample")
    k = int(np.count_nonzero(samples.values > t))
    lo, hi = clopper_pearson(k, samples.count, confidence)
    return k / samples.count, lo, hi


@dataclass
class TailReport:
    """Tail probabilities on a t-grid against a theoretical bound."""

    bound_name: str
    t_grid: np.ndarray
    thresholds: np.ndarray
    exceed_counts: np.ndarray
    trials: int
    empirical: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    bound: np.ndarray
    excluded: int = 0
    max_excluded_fraction: Optional[float] = MAX_EXCLUDED_FRACTION

    @property
    def capped_bound(self) -> np.ndarray:
        return np.minimum(self.bound, 1.0)

    @property
    def row_pass(self) -> np.ndarray:
        return self.ci_lower <= self.capped_bound

    @property
    def excluded_fraction(self) -> float:
        total = self.trials + self.excluded
        return self.excluded / total if total else 0.0

    @property
    def exclusions_ok(self) -> bool:
        if self.max_excluded_fraction is None:
            return True
        return self.excluded_fraction <= self.max_excluded_fraction

    @property
    def passed(self) -> bool:
        return bool(np.all(self.row_pass)) and self.exclusions_ok

    def rows(self):
        for k in range(len(self.t_grid)):
            yield {
                "t": float(self.t_grid[k]),
                "threshold": float(self.thresholds[k]),
                "exceed_count": int(self.exceed_counts[k]),
                "trials": int(self.trials),
                "empirical": float(self.empirical[k]),
                "ci_lower": float(self.ci_lower[k]),
                "ci_upper": float(self.ci_upper[k]),
                "bound": float(self.bound[k]),
                "capped_bound": float(self.capped_bound[k]),
                "pass": bool(self.row_pass[k]),
            }

    def to_dict(self):
        return {
            "bound_name": self.bound_name,
            "trials": int(self.trials),
            "excluded": int(self.excluded),
            "passed": self.passed,
            "rows": list(self.rows()),
        }


def _check_t_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=np.float64).ravel()
    if t.size == 0:
        raise ConfigError("t_grid must not be empty", "t_grid")
    if not np.all(t > 0) or not np.all(np.isfinite(t)):
        raise ConfigError("t_grid values must be positive and finite", "t_grid")
    if np.any(np.diff(t) <= 0):
        raise ConfigError("t_grid must be strictly increasing", "t_grid")
    return t


def tail_report(samples: SampleSet, t_grid, thresholds, bounds, bound_name: str,
                max_excluded_fraction=MAX_EXCLUDED_FRACTION) -> TailReport:
    t = _check_t_grid(t_grid)
    thr = np.asarray(thresholds, dtype=np.float64)
    counts = np.array([np.count_nonzero(samples.values > x) for x in thr], dtype=np.int64)
    ci = [clopper_pearson(int(k), samples.count) for k in counts]
    return TailReport(
        bound_name=bound_name,
        t_grid=t,
        thresholds=thr,
        exceed_counts=counts,
        trials=samples.count,
        empirical=counts / samples.count,
        ci_lower=np.array([c[0] for c in ci]),
        ci_upper=np.array([c[1] for c in ci]),
        bound=np.asarray(bounds, dtype=np.float64),
        excluded=samples.excluded,
        max_excluded_fraction=max_excluded_fraction,
    )


# ---------------------------------------------------------------- trials


@dataclass
class TrialRecord:
    """Outputs of one Monte Carlo draw."""

    seed: SeedPath
    inverse_norm: float
    hs_norm: Optional[float] = None
    entries: dict = field(default_factory=dict)
    degenerate: bool = False


@dataclass
class TrialBatch:
    """Per-trial outputs in trial-index order.

    ``entries`` has one column per requested ``(i, j)``; degenerate draws
    carry ``inf`` norms and ``nan`` entries.
    """

    master_seed: int
    inverse_norm: np.ndarray
    degenerate: np.ndarray
    hs_norm: Optional[np.ndarray] = None
    entry_index: tuple = ()
    entries: Optional[np.ndarray] = None

    @property
    def excluded(self) -> int:
        return int(np.count_nonzero(self.degenerate))

    def norm_samples(self) -> SampleSet:
        return SampleSet(self.inverse_norm[~self.degenerate], self.excluded)

    def hs_samples(self) -> SampleSet:
        return SampleSet(self.hs_norm[~self.degenerate], self.excluded)

    def entry_samples(self, i: int, j: int) -> SampleSet:
        col = self.entry_index.index((i, j))
        return SampleSet(np.abs(self.entries[~self.degenerate, col]), self.excluded)

    def records(self):
        for k in range(self.inverse_norm.size):
            ents = {}
            if self.entries is not None:
                ents = {ij: float(self.entries[k, c]) for c, ij in enumerate(self.entry_index)}
            yield TrialRecord(
                seed=SeedPath(self.master_seed, k),
                inverse_norm=float(self.inverse_norm[k]),
                hs_norm=None if self.hs_norm is None else float(self.hs_norm[k]),
                entries=ents,
                degenerate=bool(self.degenerate[k]),
            )


def _trial_chunk(spec: EnsembleSpec, master_seed: int, entry_index: tuple, want_hs: bool, start: int, stop: int):
    stack = sample_stack(spec, master_seed, start, stop)
    if spec.family is Family.GINIBRE:
        norms, bad = matrix_core.general_inverse_op_norms(stack)
    else:
        norms, bad = matrix_core.inverse_op_norms(stack)
    nb = stop - start
    hs = np.full(nb, np.nan)
    ents = np.full((nb, len(entry_index)), np.nan)
    if want_hs or entry_index:
        with np.errstate(all="ignore"):
            if want_hs:
                inv = matrix_core.solve(stack, np.eye(spec.n))
                hs = matrix_core.hs_norm(inv)
                cols = inv
            else:
                js = sorted({j for _, j in entry_index})
                rhs = np.eye(spec.n)[:, js]
                sol = matrix_core.solve(stack, rhs)
                cols = np.zeros((nb, spec.n, spec.n))
                cols[:, :, js] = sol
            for c, (i, j) in enumerate(entry_index):
                ents[:, c] = cols[:, i, j]
        hs[bad] = np.inf
        ents[bad] = np.nan
    return norms, bad, hs, ents


def draw_trials(spec: EnsembleSpec, trials: int, master_seed: int = 0, workers: int = 1,
                entries: Sequence = (), hs: bool = False) -> TrialBatch:
    """Sample ``trials`` matrices and record inverse norms and entries.

    Trial ``k`` uses ``SeedPath(master_seed, k)``. Output is identical for
    any ``workers`` value.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1", "trials")
    entry_index = tuple((int(i), int(j)) for i, j in entries)
    for i, j in entry_index:
        if not (0 <= i < spec.n and 0 <= j < spec.n):
            raise IndexError(f"entry ({i}, {j}) out of range for n={spec.n}")
    fn = partial(_trial_chunk, spec, int(master_seed), entry_index, bool(hs))
    norms, bad, hsn, ents = map_trials(fn, trials, workers)
    return TrialBatch(
        master_seed=int(master_seed),
        inverse_norm=norms,
        degenerate=bad,
        hs_norm=hsn if hs else None,
        entry_index=entry_index,
        entries=ents if entry_index else None,
    )


def _require_trials(trials, minimum=1000):
    if trials < minimum:
        raise ConfigError(f"need at least {minimum} trials, got {trials}", "trials")


# ---------------------------------------------------------------- checks


def check_theorem_bound(spec: EnsembleSpec, trials: int, t_grid, master_seed: int = 0,
                        workers: int = 1) -> TailReport:
    """Check ``P(||A^{-1}|| >= n^2 t) <= 8K/t`` for a symmetric continuous law."""
    if not (spec.family.continuous and spec.family.symmetric):
        raise UnsupportedFamilyError(
            f"theorem bound needs a symmetric continuous family, got {spec.family.value}", "ensemble.family")
    _require_trials(trials)
    t = _check_t_grid(t_grid)
    batch = draw_trials(spec, trials, master_seed, workers)
    return tail_report(batch.norm_samples(), t, spec.n ** 2 * t, THEOREM_CONSTANT * spec.K / t, "8K/t")


def check_sst_bound(n: int, shift: ShiftSpec, trials: int, t_grid, master_seed: int = 0,
                    workers: int = 1) -> TailReport:
    """Check the Gaussian bound ``P(||(D+R)^{-1}|| >= t sqrt(n)) <= 2.35/t``."""
    _require_trials(trials)
    t = _check_t_grid(t_grid)
    spec = EnsembleSpec(Family.GINIBRE, n, shift=shift)
    batch = draw_trials(spec, trials, master_seed, workers)
    return tail_report(batch.norm_samples(), t, math.sqrt(n) * t, SST_CONSTANT / t, "2.35/t")


@dataclass
class HagelsteinReport:
    component_count: int
    trials: int
    left: float
    component_norms: list
    right: float
    ratio: float
    passed: bool

    def to_dict(self):
        return {
            "component_count": self.component_count,
            "trials": self.trials,
            "left": self.left,
            "right": self.right,
            "ratio": self.ratio,
            "passed": self.passed,
        }


def check_hagelstein(component_count: int, trials: int, master_seed: int = 0) -> HagelsteinReport:
    """Compare ``||(sum X_i^2)^{1/2}||_{1,inf}`` with ``4 sum ||X_i||_{1,inf}``.

    The ``X_i`` are i.i.d. standard Cauchy; component ``i`` is drawn from
    ``SeedPath(master_seed, i)``. Passes iff left <= 1.05 * right.
    """
    if component_count < 1:
        raise ConfigError("component_count must be >= 1", "components")
    if trials < 100:
        raise ConfigError("need at least 100 trials", "trials")
    cauchy = EnsembleSpec(Family.CAUCHY, 1, K=1.0 / math.pi)
    sumsq = np.zeros(trials)
    norms = []
    for i in range(component_count):
        x = sample_entries(cauchy, trials, SeedPath(master_seed, i).generator())
        norms.append(weak_lp_norm(x, 1.0))
        sumsq += x * x
    left = weak_lp_norm(np.sqrt(sumsq), 1.0)
    right = HAGELSTEIN_CONSTANT * math.fsum(norms)
    return HagelsteinReport(
        component_count=component_count,
        trials=trials,
        left=left,
        component_norms=norms,
        right=right,
        ratio=left / right,
        passed=left <= 1.05 * right,
    )


@dataclass
class CounterexampleRow:
    d: float
    trials: int
    excluded: int
    median_norm: float
    scaled_median: float
    exceed_fraction: float
    passed: bool


@dataclass
class CounterexampleReport:
    n: int
    c0: float
    band_ratio: float
    rows: list
    passed: bool
    quantile: float = 0.5

    @property
    def excluded(self) -> int:
        return sum(r.excluded for r in self.rows)

    def to_dict(self):
        return {
            "n": self.n,
            "c0": self.c0,
            "band_ratio": self.band_ratio,
            "quantile": self.quantile,
            "passed": self.passed,
            "rows": [vars(r).copy() for r in self.rows],
        }


def counterexample_growth(n: int, d_list, trials: int, master_seed: int = 0,
                          workers: int = 1, quantile: float = 0.5) -> CounterexampleReport:
    """Growth of ``||(D+R)^{-1}||`` with ``D = diag(0, d, ..., d)``, lazy Rademacher ``R``.

    Every ``d`` reuses the same trial seeds, so the random part ``R`` is
    shared across the sweep and only the shift changes. ``m(d)`` is the
    median of ``||(D+R)^{-1}|| sqrt(n) / d``; the exceedance threshold
    ``c0 d / sqrt(n)`` uses ``c0 = m(d_min) / 2``. Passes iff
    ``max m / min m <= 3`` and every exceedance fraction is >= 0.4.
    Singular draws (possible for discrete entries) are excluded and counted.

    ``quantile`` replaces the median by another order statistic. The law of
    the norm splits into two clusters of mass exactly 1/2 (``R[0, 0] == 0``
    or not), so the sample median lands in either cluster depending on the
    draw; any level above 1/2 stays inside the upper cluster.
    """
    if not 0.0 < quantile < 1.0:
        raise ConfigError("quantile must lie in (0, 1)", "quantile")
    d = np.asarray(d_list, dtype=np.float64).ravel()
    if d.size < 3:
        raise ConfigError("need at least 3 values of d", "d_list")
    if np.any(d <= 0) or np.any(np.diff(d) <= 0):
        raise ConfigError("d_list must be positive and strictly increasing", "d_list")
    if d[-1] / d[0] < 100:
        raise ConfigError("d_list must span at least two decades", "d_list")
    if trials < 1:
        raise ConfigError("trials must be >= 1", "trials")
    root_n = math.sqrt(n)
    samples = []
    for dv in d:
        spec = EnsembleSpec(Family.LAZY_RADEMACHER, n, shift=ShiftSpec.counterexample_diag(dv))
        samples.append(draw_trials(spec, trials, master_seed, workers).norm_samples())
    centers = [float(np.quantile(s.values, quantile)) for s in samples]
    scaled = [float(c * root_n / dv) for c, dv in zip(centers, d)]
    c0 = scaled[0] / 2.0
    band = max(scaled) / min(scaled)
    rows = []
    for s, dv, m, center in zip(samples, d, scaled, centers):
        frac = float(np.count_nonzero(s.values >= c0 * dv / root_n)) / s.count
        in_band = max(scaled) / 3.0 <= m <= 3.0 * min(scaled)
        rows.append(CounterexampleRow(
            d=float(dv),
            trials=s.count,
            excluded=s.excluded,
            median_norm=center,
            scaled_median=m,
            exceed_fraction=frac,
            passed=bool(frac >= 0.4 and in_band),
        ))
    passed = band <= 3.0 and all(r.exceed_fraction >= 0.4 for r in rows)
    return CounterexampleReport(n=n, c0=c0, band_ratio=band, rows=rows, passed=bool(passed), quantile=quantile)


@dataclass
class GinibreLowerReport:
    n: int
    trials: int
    excluded: int
    threshold: float
    exceed_fraction: float
    passed: bool
    asserted: bool

    def to_dict(self):
        return dict(vars(self))


def check_ginibre_lower(n: int, trials: int, master_seed: int = 0, workers: int = 1) -> GinibreLowerReport:
    """Estimate ``P(||R^{-1}|| >= 0.1 sqrt(n))`` for a Ginibre ``R``.

    Passes iff the fraction is >= 0.9. For ``n < 20`` the outcome is
    reported but ``asserted`` is False.
    """
    _require_trials(trials)
    spec = EnsembleSpec(Family.GINIBRE, n)
    s = draw_trials(spec, trials, master_seed, workers).norm_samples()
    thr = GINIBRE_LOWER_THRESHOLD * math.sqrt(n)
    # degenerate draws have an unbounded inverse and count as exceedances
    frac = (np.count_nonzero(s.values >= thr) + s.excluded) / (s.count + s.excluded)
    return GinibreLowerReport(
        n=n,
        trials=trials,
        excluded=s.excluded,
        threshold=thr,
        exceed_fraction=float(frac),
        passed=bool(frac >= 0.9),
        asserted=n >= GINIBRE_LOWER_MIN_N,
    )
