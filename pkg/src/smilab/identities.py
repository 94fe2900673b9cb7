"""Verifiers for the determinant identities behind the entrywise inverse bound.

Freezing every entry of a symmetric ``A`` except the symmetric pair
``(i, j), (j, i)`` and calling that value ``x``:

* ``det A(x)`` is a polynomial of degree <= 2 in ``x`` (degree <= 1 when
  ``i == j``),
* the first minor ``det A_(i,j)(x)`` is linear in ``x``,
* hence ``|(A^{-1})_{ij}(x)| = |x + p| / |(x + p)^2 + q|`` for constants
  ``p, q``.

The coefficients are recovered by fitting determinant evaluations, which
avoids committing to a sign convention for the minors. Indices are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, partial
from itertools import combinations

import numpy as np

from smilab import matrix_core
from smilab.ensembles import EnsembleSpec, SeedPath
from smilab.errors import ConfigError, DimensionError, DomainError, UnsupportedFamilyError
from smilab.parallel import map_trials
from smilab.tail_stats import TailReport, draw_trials, tail_report

__all__ = [
    "PolyFit",
    "RationalEntryForm",
    "AntiConcentration",
    "IdentitySuiteReport",
    "IDENTITY_TOLERANCES",
    "cofactor_det",
    "with_entry",
    "fit_entry_dependence",
    "held_out_residual",
    "second_minor_scale",
    "fit_rational_entry_form",
    "rational_form_residual",
    "verify_jacobi",
    "anticoncentration_measure",
    "verify_entry_tail_pointwise",
    "identity_suite",
]

PROBES = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
DEGENERACY_RTOL = 1e-10


def cofactor_det(m) -> float:
    """Determinant by Laplace expansion along the first remaining row.

    Reference implementation, independent of elimination. Sub-determinants
    are memoised on the set of remaining columns, so the cost is
    ``O(n 2^n)``; intended for ``n <= 12`` or so.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected square matrix, got shape {a.shape}")
    n = a.shape[0]
    rows = [list(map(float, r)) for r in a]

    @lru_cache(maxsize=None)
    def expand(cols: int) -> float:
        row = bin(cols).count("1")
        if row == n:
            return 1.0
        total = 0.0
        sign = 1.0
        for c in range(n):
            if cols >> c & 1:
                continue
            v = rows[row][c]
            if v != 0.0:
                total += sign * v * expand(cols | 1 << c)
            sign = -sign
        return total

    return expand(0)


def with_entry(a, i: int, j: int, xs) -> np.ndarray:
    """Stack of copies of ``a`` with entries ``(i, j)`` and ``(j, i)`` set to each x."""
    a = np.asarray(a, dtype=np.float64)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    out = np.repeat(a[None], xs.size, axis=0)
    out[:, i, j] = xs
    out[:, j, i] = xs
    return out


def _check_index(a, i, j):
    n = a.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"entry ({i}, {j}) out of range for n={n}")


@dataclass
class PolyFit:
    """Polynomial in ascending coefficient order with its fit residual.

    ``residual`` is the largest absolute misfit at the fitting points.
    """

    coefficients: np.ndarray
    residual: float

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


def _fit(xs, ys, degree, radius) -> PolyFit:
    # scaled variable keeps the Vandermonde system well conditioned
    u = xs / radius
    vander = np.vander(u, degree + 1, increasing=True)
    c, *_ = np.linalg.lstsq(vander, ys, rcond=None)
    resid = float(np.max(np.abs(vander @ c - ys)))
    return PolyFit(c / radius ** np.arange(degree + 1), resid)


def _probe_radius(a) -> float:
    return 1.0 + float(matrix_core.hs_norm(a))


def fit_entry_dependence(a, i: int, j: int) -> PolyFit:
    """Fit ``x -> det A(x)`` with a polynomial of degree <= 2.

    ``x`` replaces entry ``(i, j)`` and, by symmetry, ``(j, i)``. The
    determinant is evaluated at ``{-2, -1, 0, 1, 2} * (1 + ||A||_HS)``.
    """
    a = np.asarray(a, dtype=np.float64)
    _check_index(a, i, j)
    radius = _probe_radius(a)
    xs = PROBES * radius
    return _fit(xs, matrix_core.det(with_entry(a, i, j, xs)), 2, radius)


def held_out_residual(a, i: int, j: int, fit: PolyFit, xs) -> float:
    """Max ``|det A(x) - fit(x)|`` over ``xs``, relative to the largest ``|det A(x)|``."""
    xs = np.asarray(xs, dtype=np.float64)
    radius = _probe_radius(a)
    vals = matrix_core.det(with_entry(a, i, j, xs))
    probe_vals = matrix_core.det(with_entry(a, i, j, PROBES * radius))
    scale = max(float(np.max(np.abs(vals))), float(np.max(np.abs(probe_vals))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(vals - fit(xs)))) / scale


def second_minor_scale(a) -> float:
    """Median ``|det|`` over all second minors (two rows and two columns removed)."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    if n < 2:
        raise DimensionError("second minors need n >= 2")
    if n == 2:
        return 1.0
    pairs = list(combinations(range(n), 2))
    keep = np.array([[k for k in range(n) if k not in p] for p in pairs], dtype=np.intp)
    stack = a[keep[:, None, :, None], keep[None, :, None, :]]
    return float(np.median(np.abs(matrix_core.det(stack))))


@dataclass
class RationalEntryForm:
    """``|(A^{-1})_{ij}(x)| = |x + p| / |(x + p)^2 + q|``.

    ``leading`` is the fitted ``x^2`` coefficient of ``det A(x)``; its
    magnitude equals the determinant of ``A`` with rows and columns ``i``
    and ``j`` removed. When ``degenerate`` the determinant is linear in
    ``x`` and the entry is ``1 / (2 |x + p|)``; ``q`` is then NaN.
    """

    i: int
    j: int
    p: float
    q: float
    degenerate: bool
    leading: float
    denominator: PolyFit
    numerator: PolyFit

    def evaluate(self, x):
        """Predicted ``|(A^{-1})_{ij}|`` when the pair is set to ``x``."""
        x = np.asarray(x, dtype=np.float64)
        if self.degenerate:
            if math.isnan(self.p):
                return np.zeros_like(x)
            return 0.5 / np.abs(x + self.p)
        y = x + self.p
        return np.abs(y) / np.abs(y * y + self.q)


def fit_rational_entry_form(a, i: int, j: int) -> RationalEntryForm:
    """Recover ``p, q`` for an off-diagonal inverse entry from determinant fits.

    From ``det A(x) = alpha x^2 + beta x + gamma`` and
    ``d/dx det A(x) = 2 * cofactor_ij(x)`` it follows that
    ``(A^{-1})_{ij} = (2 alpha x + beta) / (2 (alpha x^2 + beta x + gamma))``,
    i.e. ``p = beta / (2 alpha)`` and ``q = gamma / alpha - p^2``.
    ``alpha`` counts as zero when ``|alpha| <= 1e-10 * second_minor_scale(A)``.
    """
    a = np.asarray(a, dtype=np.float64)
    _check_index(a, i, j)
    if i == j:
        raise DomainError("rational form is for off-diagonal entries; use fit_entry_dependence for i == j")
    den = fit_entry_dependence(a, i, j)
    radius = _probe_radius(a)
    xs = PROBES * radius
    minors = matrix_core.det(matrix_core.minor(with_entry(a, i, j, xs), [i], [j]))
    num = _fit(xs, minors, 1, radius)
    gamma, beta_, alpha = den.coefficients
    degenerate = abs(alpha) <= DEGENERACY_RTOL * second_minor_scale(a)
    if degenerate:
        p = gamma / beta_ if beta_ != 0.0 else math.nan
        q = math.nan
    else:
        p = beta_ / (2.0 * alpha)
        q = gamma / alpha - p * p
    return RationalEntryForm(i=i, j=j, p=float(p), q=float(q), degenerate=bool(degenerate),
                             leading=float(alpha), denominator=den, numerator=num)


def rational_form_residual(a, form: RationalEntryForm, xs) -> float:
    """Largest relative error of ``form.evaluate`` against the explicit inverse."""
    stack = with_entry(a, form.i, form.j, xs)
    e = np.zeros((stack.shape[-1], 1))
    e[form.j, 0] = 1.0
    true = np.abs(matrix_core.solve(stack, e)[:, form.i, 0])
    pred = form.evaluate(np.asarray(xs, dtype=np.float64))
    return float(np.max(np.abs(pred - true) / np.abs(true)))


def verify_jacobi(a, e) -> float:
    """Relative gap between ``tr(adj(A) E)`` and a central difference of ``det(A + tE)``.

    Step ``h = 1e-5 (1 + ||A||_HS)``; returns
    ``|analytic - numeric| / (1 + |analytic|)``.
    """
    a = np.asarray(a, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if a.shape != e.shape or a.ndim != 2:
        raise DimensionError(f"shapes differ: {a.shape} vs {e.shape}")
    analytic = float(np.trace(matrix_core.adjugate(a) @ e))
    h = 1e-5 * _probe_radius(a)
    plus, minus = matrix_core.det(np.stack([a + h * e, a - h * e]))
    numeric = (plus - minus) / (2.0 * h)
    return abs(analytic - numeric) / (1.0 + abs(analytic))


@dataclass
class AntiConcentration:
    """Solution set of ``|x - s/x| < eps``: two open intervals."""

    intervals: list
    component_lengths: list
    total_measure: float
    diameter: float


def anticoncentration_measure(s: float, eps: float) -> AntiConcentration:
    """Closed-form solution of ``|x - s/x| < eps`` for ``s, eps > 0``.

    On ``x > 0`` the set is ``(a, b)`` with ``a = (sqrt(eps^2 + 4s) - eps) / 2``
    and ``b = (sqrt(eps^2 + 4s) + eps) / 2``; it is mirrored on ``x < 0``.
    """
    if not (s > 0 and math.isfinite(s)):
        raise DomainError(f"s must be positive, got {s}")
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be positive, got {eps}")
    r = math.sqrt(eps * eps + 4.0 * s)
    hi = 0.5 * (r + eps)
    lo = 2.0 * s / (r + eps)  # = (r - eps) / 2 without cancellation
    length = hi - lo
    return AntiConcentration(
        intervals=[(-hi, -lo), (lo, hi)],
        component_lengths=[length, length],
        total_measure=2.0 * length,
        diameter=2.0 * hi,
    )


def verify_entry_tail_pointwise(spec: EnsembleSpec, i: int, j: int, trials: int, t_grid,
                                master_seed: int = 0, workers: int = 1) -> TailReport:
    """Check ``P(|(A^{-1})_{ij}| > t) <= 2K/t`` on a t-grid."""
    if not (spec.family.continuous and spec.family.symmetric):
        raise UnsupportedFamilyError(
            f"entry bound needs a symmetric continuous family, got {spec.family.value}", "ensemble.family")
    if trials < 1000:
        raise ConfigError(f"need at least 1000 trials, got {trials}", "trials")
    t = np.asarray(t_grid, dtype=np.float64)
    batch = draw_trials(spec, trials, master_seed, workers, entries=[(i, j)])
    return tail_report(batch.entry_samples(i, j), t, t, 2.0 * spec.K / t, "2K/t")


# ---------------------------------------------------------------- suite

IDENTITY_TOLERANCES = {
    "det_cofactor": 1e-9,
    "quadratic_offdiag": 1e-9,
    "linear_diag": 1e-9,
    "diag_quadratic_coeff": 1e-10,
    "cramer": 1e-8,
    "jacobi": 1e-5,
    "rational_form": 1e-8,
}


def _det_residual(a) -> float:
    ref = cofactor_det(a)
    got = matrix_core.det(a)
    # relative 1e-9, with absolute 1e-12 for |det| < 1e-3
    return abs(got - ref) / max(abs(ref), 1e-3)


def _cramer_residual(a) -> float:
    inv = matrix_core.solve(a, np.eye(a.shape[0]))
    d = abs(matrix_core.det(a))
    # |adj[j, i]| = |det minor(a, {i}, {j})|
    minors = np.abs(matrix_core.adjugate(a)).T
    return float(np.max(np.abs(np.abs(inv) * d - minors)) / np.max(minors))


def case_residuals(a, rng: np.random.Generator) -> dict:
    """All identity residuals for one symmetric matrix."""
    n = a.shape[0]
    radius = _probe_radius(a)
    out = {"det_cofactor": _det_residual(a)}
    quad = lin = coeff = 0.0
    for i in range(n):
        for j in range(i, n):
            fit = fit_entry_dependence(a, i, j)
            held = rng.uniform(-2.0 * radius, 2.0 * radius, 10)
            r = held_out_residual(a, i, j, fit, held)
            if i == j:
                lin = max(lin, r)
                scale = float(np.max(np.abs(matrix_core.det(with_entry(a, i, i, PROBES * radius)))))
                coeff = max(coeff, abs(fit.coefficients[2]) * radius ** 2 / scale)
            else:
                quad = max(quad, r)
    out["quadratic_offdiag"] = quad
    out["linear_diag"] = lin
    out["diag_quadratic_coeff"] = coeff
    out["cramer"] = _cramer_residual(a)
    e = rng.uniform(-1.0, 1.0, (n, n))
    out["jacobi"] = verify_jacobi(a, 0.5 * (e + e.T))
    i, j = rng.choice(n, 2, replace=False)
    form = fit_rational_entry_form(a, int(i), int(j))
    xs = rng.uniform(-2.0 * radius, 2.0 * radius, 20)
    out["rational_form"] = rational_form_residual(a, form, xs)
    return out


def suite_matrix(master_seed: int, case: int, n_max: int):
    """Symmetric test matrix for suite case ``case``: n in [2, n_max], entries U[-1, 1]."""
    rng = SeedPath(master_seed, case).generator()
    n = int(rng.integers(2, n_max + 1))
    m = rng.uniform(-1.0, 1.0, (n, n))
    m = np.triu(m) + np.triu(m, 1).T
    return m, rng


def _suite_chunk(master_seed, n_max, start, stop):
    names = list(IDENTITY_TOLERANCES)
    res = np.empty((stop - start, len(names)))
    for k, case in enumerate(range(start, stop)):
        a, rng = suite_matrix(master_seed, case, n_max)
        r = case_residuals(a, rng)
        res[k] = [r[name] for name in names]
    return res


@dataclass
class IdentitySuiteReport:
    cases: int
    n_max: int
    max_residual: dict
    passed: bool

    def rows(self):
        for name, tol in IDENTITY_TOLERANCES.items():
            r = self.max_residual[name]
            yield {"identity": name, "cases": self.cases, "max_residual": r,
                   "tolerance": tol, "pass": r < tol}

    def to_dict(self):
        return {"cases": self.cases, "n_max": self.n_max, "passed": self.passed, "rows": list(self.rows())}


def identity_suite(cases: int = 1000, n_max: int = 8, master_seed: int = 0, workers: int = 1) -> IdentitySuiteReport:
    """Run every deterministic identity on ``cases`` seeded symmetric matrices."""
    if cases < 1:
        raise ConfigError("cases must be >= 1", "cases")
    if not 2 <= n_max <= 12:
        raise ConfigError("n_max must lie in [2, 12]", "n_max")
    res = map_trials(partial(_suite_chunk, int(master_seed), int(n_max)), cases, workers, chunk_size=100)
    worst = {name: float(np.max(res[:, k])) for k, name in enumerate(IDENTITY_TOLERANCES)}
    passed = all(worst[name] < tol for name, tol in IDENTITY_TOLERANCES.items())
    return IdentitySuiteReport(cases=cases, n_max=n_max, max_residual=worst, passed=passed)
