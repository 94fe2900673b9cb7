"""Seeded random matrix ensembles.

Symmetric matrices ``A = D + R`` whose upper-triangle entries (diagonal
included) are independent draws from a scalar law, plus the non-symmetric
Ginibre ensemble used as a Gaussian reference.

Every draw is a pure function of ``(spec, SeedPath)``: the per-trial stream
is derived from ``(master_seed, trial_index)`` through
:class:`numpy.random.SeedSequence`, so trials can be generated in any order
or in parallel with identical results.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from smilab.errors import ConfigError, UnsupportedFamilyError

__all__ = [
    "Family",
    "ShiftKind",
    "ShiftSpec",
    "EnsembleSpec",
    "SeedPath",
    "shift_matrix",
    "sample_entries",
    "sample_matrix",
    "sample_stack",
    "density_bound_check",
    "DensityReport",
]


class Family(str, enum.Enum):
    BOUNDED_UNIFORM = "bounded_uniform"
    BOUNDED_GAUSSIAN = "bounded_gaussian"
    CAUCHY = "cauchy"
    GINIBRE = "ginibre"
    LAZY_RADEMACHER = "lazy_rademacher"

    @property
    def continuous(self) -> bool:
        return self in (Family.BOUNDED_UNIFORM, Family.BOUNDED_GAUSSIAN, Family.CAUCHY)

    @property
    def symmetric(self) -> bool:
        return self is not Family.GINIBRE


class ShiftKind(str, enum.Enum):
    ZERO = "zero"
    SCALAR_IDENTITY = "scalar_identity"
    COUNTEREXAMPLE_DIAG = "counterexample_diag"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class ShiftSpec:
    """Deterministic shift ``D``.

    ``value`` is ``c`` for ``SCALAR_IDENTITY`` and ``d`` for
    ``COUNTEREXAMPLE_DIAG``; ``matrix`` is the payload of ``EXPLICIT`` stored
    as a tuple of row tuples.
    """

    kind: ShiftKind = ShiftKind.ZERO
    value: float = 0.0
    matrix: Optional[tuple] = None

    def __post_init__(self):
        kind = ShiftKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not math.isfinite(self.value):
            raise ConfigError("shift parameter must be finite", "shift")
        if kind is ShiftKind.COUNTEREXAMPLE_DIAG and self.value < 0:
            raise ConfigError("d must be >= 0", "shift.d")
        if kind is ShiftKind.EXPLICIT:
            if self.matrix is None:
                raise ConfigError("explicit shift needs a matrix", "shift.matrix")
            m = np.asarray(self.matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
                raise ConfigError(f"matrix must be square, got shape {m.shape}", "shift.matrix")
            if not np.array_equal(m, m.T):
                raise ConfigError("matrix must be symmetric", "shift.matrix")
            object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in m))
        elif self.matrix is not None:
            raise ConfigError("matrix only allowed for explicit shifts", "shift.matrix")

    @classmethod
    def zero(cls):
        return cls(ShiftKind.ZERO)

    @classmethod
    def scalar_identity(cls, c):
        return cls(ShiftKind.SCALAR_IDENTITY, float(c))

    @classmethod
    def counterexample_diag(cls, d):
        return cls(ShiftKind.COUNTEREXAMPLE_DIAG, float(d))

    @classmethod
    def explicit(cls, matrix):
        return cls(ShiftKind.EXPLICIT, 0.0, matrix)


@dataclass(frozen=True)
class EnsembleSpec:
    """One random-matrix law: entry family, density bound ``K``, size, shift."""

    family: Family
    n: int
    K: Optional[float] = None
    shift: ShiftSpec = field(default_factory=ShiftSpec.zero)

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            raise ConfigError(f"unknown family {self.family!r}", "family") from None
        object.__setattr__(self, "family", fam)
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}", "n")
        object.__setattr__(self, "n", int(self.n))
        if fam.continuous:
            if self.K is None or not (self.K > 0 and math.isfinite(self.K)):
                raise ConfigError(f"K must be a positive finite number for {fam.value}", "K")
            object.__setattr__(self, "K", float(self.K))
        if self.shift.kind is ShiftKind.EXPLICIT and len(self.shift.matrix) != self.n:
            raise ConfigError(
                f"explicit shift has dimension {len(self.shift.matrix)}, expected {self.n}", "shift.matrix"
            )


@dataclass(frozen=True)
class SeedPath:
    """Address of one random stream: ``(master_seed, trial_index)``."""

    master_seed: int
    trial_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer", "master_seed")
        if self.trial_index < 0:
            raise ConfigError("trial_index must be nonnegative", "trial_index")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.trial_index,))
        return np.random.Generator(np.random.PCG64(ss))


def shift_matrix(shift: ShiftSpec, n: int) -> np.ndarray:
    """Dense ``n x n`` matrix of the shift ``D``."""
    if n < 1:
        raise ConfigError("n must be >= 1", "n")
    if shift.kind is ShiftKind.ZERO:
        return np.zeros((n, n))
    if shift.kind is ShiftKind.SCALAR_IDENTITY:
        return shift.value * np.eye(n)
    if shift.kind is ShiftKind.COUNTEREXAMPLE_DIAG:
        diag = np.full(n, shift.value)
        diag[0] = 0.0
        return np.diag(diag)
    m = np.array(shift.matrix, dtype=np.float64)
    if m.shape != (n, n):
        raise ConfigError(f"explicit shift has shape {m.shape}, expected {(n, n)}", "shift.matrix")
    return m


def sample_entries(spec: EnsembleSpec, size, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. scalars from the family's entry law (no shift)."""
    fam = spec.family
    if fam is Family.BOUNDED_UNIFORM:
        # density exactly K on an interval of length 1/K
        half = 0.5 / spec.K
        return rng.uniform(-half, half, size)
    if fam is Family.BOUNDED_GAUSSIAN:
        # peak density 1/(sigma sqrt(2 pi)) = K
        return rng.normal(0.0, 1.0 / (spec.K * math.sqrt(2.0 * math.pi)), size)
    if fam is Family.CAUCHY:
        # peak density 1/(pi gamma) = K
        return rng.standard_cauchy(size) / (math.pi * spec.K)
    if fam is Family.GINIBRE:
        return rng.standard_normal(size)
    # lazy Rademacher: -1, +1 w.p. 1/4 each, 0 w.p. 1/2
    codes = rng.integers(0, 4, size)
    return np.select([codes == 0, codes == 1], [-1.0, 1.0], 0.0)


def sample_matrix(spec: EnsembleSpec, seed: SeedPath) -> np.ndarray:
    """One draw of ``D + R``.

    Symmetric families draw the upper triangle (row-major, diagonal
    included) and mirror it, so the result is exactly symmetric. Ginibre
    draws every entry independently.
    """
    n = spec.n
    rng = seed.generator()
    if spec.family is Family.GINIBRE:
        r = sample_entries(spec, (n, n), rng)
    else:
        iu = np.triu_indices(n)
        r = np.zeros((n, n))
        r[iu] = sample_entries(spec, len(iu[0]), rng)
        r.T[iu] = r[iu]
    if spec.shift.kind is not ShiftKind.ZERO:
        r += shift_matrix(spec.shift, n)
    return r


def sample_stack(spec: EnsembleSpec, master_seed: int, start: int, stop: int) -> np.ndarray:
    """Matrices for trial indices ``start..stop-1`` stacked along axis 0."""
    out = np.empty((stop - start, spec.n, spec.n))
    for k, t in enumerate(range(start, stop)):
        out[k] = sample_matrix(spec, SeedPath(master_seed, t))
    return out


@dataclass
class DensityReport:
    family: Family
    K: float
    samples: int
    bin_width: float
    max_density: float
    argmax_center: float
    passed: bool


def density_bound_check(spec: EnsembleSpec, samples: int, seed: SeedPath) -> DensityReport:
    """Histogram check that the entry density never exceeds ``K`` (5% slack).

    Bin width is the interquartile range times ``samples**(-1/3)``. Bins are
    laid over a window of 20 IQRs around the quartiles; draws outside still
    count toward the normalisation.
    """
    if not spec.family.continuous:
        raise UnsupportedFamilyError(f"density check needs a continuous family, got {spec.family.value}", "family")
    if samples < 10**5:
        raise ConfigError("density check needs at least 1e5 samples", "samples")
    x = sample_entries(spec, samples, seed.generator())
    q1, q3 = np.quantile(x, [0.25, 0.75])
    iqr = q3 - q1
    width = iqr * samples ** (-1.0 / 3.0)
    lo = max(x.min(), q1 - 20 * iqr)
    hi = min(x.max(), q3 + 20 * iqr)
    nbins = max(1, int(math.ceil((hi - lo) / width)))
    counts, edges = np.histogram(x, bins=nbins, range=(lo, lo + nbins * width))
    dens = counts / (samples * width)
    k = int(np.argmax(dens))
    peak = float(dens[k])
    return DensityReport(
        family=spec.family,
        K=spec.K,
        samples=samples,
        bin_width=float(width),
        max_density=peak,
        argmax_center=float(0.5 * (edges[k] + edges[k + 1])),
        passed=peak <= spec.K * 1.05,
    )
