"""Analytic bid-ask-spread distribution and supporting numerics.

For centered normal components xi ~ N(0, xi1) and kappa ~ N(0, kappa1) the
spread Delta = sqrt(xi^2 + kappa^2) has density

    P(Delta) = (Delta / (xi1*kappa1)) * exp(-a*Delta^2) * I0(b*Delta^2)

with a = (1/xi1^2 + 1/kappa1^2)/4 and b = (1/xi1^2 - 1/kappa1^2)/4, where I0
is the modified Bessel function of the first kind. The leading
Delta*exp(-a*Delta^2) factor is the small-spacing signature of random-matrix
level repulsion; at xi1 = kappa1 the law collapses to a Rayleigh density.

This module provides the density (in an overflow-safe form), its CDF by
adaptive Simpson quadrature, direct sampling, histogramming and a
Kolmogorov-Smirnov distance against the law. I0 is implemented locally
(power series below x = 15, asymptotic expansion above; see DLMF 10.25.2 and
10.40.1) so the core carries no special-function dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "SpreadLaw",
    "Histogram",
    "bessel_i0",
    "bessel_i0_scaled",
    "spread_pdf",
    "spread_log_pdf",
    "spread_cdf",
    "SpreadCdfCache",
    "sample_spread",
    "ks_distance",
    "tabulate_law",
    "write_law_csv",
    "law_from_model",
]

# Switch point between the power series and the asymptotic expansion. At
# x = 15 both sides agree to ~1e-13 relative, comfortably inside the 1e-10
# contract for the function.
_I0_SWITCH = 15.0


def _i0_series(ax: np.ndarray) -> np.ndarray:
    """I0 power series sum_k (x^2/4)^k / (k!)^2, for |x| <= ~15.

    All terms are positive so there is no cancellation; ~40 terms reach
    machine precision at the switch point.
    """
    q = 0.25 * ax * ax
    term = np.ones_like(ax)
    total = np.ones_like(ax)
    for k in range(1, 64):
        term = term * q / (k * k)
        total += term
        if np.all(term <= 1e-17 * total):
            break
    return total


def _i0_asymptotic_scaled(ax: np.ndarray) -> np.ndarray:
    """e^-x * I0(x) via the large-x expansion, valid for x >= ~15.

    e^-x I0(x) ~ (2*pi*x)^(-1/2) * sum_k ((2k-1)!!)^2 / (k! (8x)^k); the
    series is truncated once terms stop mattering (they shrink through
    k ~ 30 for every x past the switch point).
    """
    inv8x = 1.0 / (8.0 * ax)
    term = np.ones_like(ax)
    total = np.ones_like(ax)
    for k in range(1, 30):
        term = term * ((2 * k - 1) ** 2) * inv8x / k
        total += term
        if np.all(term <= 1e-17 * total):
            break
    return total / np.sqrt(2.0 * math.pi * ax)


def _i0_dispatch(x, scaled: bool):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    ax = np.abs(np.atleast_1d(arr)).astype(float)
    if not np.all(np.isfinite(ax)):
        raise ValidationError("bessel_i0 requires finite input")
    out = np.empty_like(ax)
    small = ax <= _I0_SWITCH
    if small.any():
        s = _i0_series(ax[small])
        out[small] = s * np.exp(-ax[small]) if scaled else s
    big = ~small
    if big.any():
        t = _i0_asymptotic_scaled(ax[big])
        out[big] = t if scaled else np.exp(ax[big]) * t
    return float(out[0]) if scalar else out


def bessel_i0(x):
    """Modified Bessel function I0(x); even in x, monotone on x >= 0.

    Accepts scalars or arrays. Overflows for x beyond ~709 like exp(x) does;
    use :func:`bessel_i0_scaled` in exponent-heavy expressions.
    """
    return _i0_dispatch(x, scaled=False)


def bessel_i0_scaled(x):
    """Exponentially scaled e^-|x| * I0(x); stays in (0, 1] for all x."""
    return _i0_dispatch(x, scaled=True)


@dataclass(frozen=True)
class SpreadLaw:
    """Parameter pair (xi1, kappa1) of the spread distribution, both > 0."""

    xi1: float
    kappa1: float

    def __post_init__(self):
        for name in ("xi1", "kappa1"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                raise ValidationError(f"{name} must be a finite positive number")
            object.__setattr__(self, name, float(v))

    @property
    def a(self) -> float:
        return 0.25 * (1.0 / self.xi1**2 + 1.0 / self.kappa1**2)

    @property
    def b(self) -> float:
        return 0.25 * (1.0 / self.xi1**2 - 1.0 / self.kappa1**2)

    def tail_cutoff(self) -> float:
        """Upper limit beyond which the density mass is negligible (< 1e-30).

        The decay rate a - |b| equals 1/(2*max(xi1, kappa1)^2), so twelve of
        the larger scales bound the support for any practical quadrature.
        """
        return 12.0 * max(self.xi1, self.kappa1)


def spread_pdf(delta, law: SpreadLaw):
    """Density of the spread law at ``delta`` (0 for delta < 0).

    Evaluated in the overflow-safe form
    (delta/(xi1*kappa1)) * exp(-(a-|b|)*delta^2) * [e^-|b|d^2 I0(b*delta^2)],
    where the bracket is the scaled Bessel function; a - |b| > 0, so no
    exponential can overflow regardless of parameter asymmetry.
    """
    d = np.asarray(delta, dtype=float)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    abs_b = abs(law.b)
    decay = law.a - abs_b
    dd = d * d
    out = (d / (law.xi1 * law.kappa1)) * np.exp(-decay * dd) * bessel_i0_scaled(abs_b * dd)
    out = np.where(d < 0.0, 0.0, out)
    return float(out[0]) if scalar else out


def spread_log_pdf(delta, law: SpreadLaw):
    """log of :func:`spread_pdf`; -inf at delta <= 0. Used by the MLE fit."""
    d = np.asarray(delta, dtype=float)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    abs_b = abs(law.b)
    decay = law.a - abs_b
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = d * d
        out = (
            np.log(d)
            - math.log(law.xi1 * law.kappa1)
            - decay * dd
            + np.log(bessel_i0_scaled(abs_b * dd))
        )
    out = np.where(d <= 0.0, -np.inf, out)
    return float(out[0]) if scalar else out


def _adaptive_simpson(f, lo: float, hi: float, tol: float, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(a, fa, b, fb, m, fm):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = simpson(a, fa, m, fm, lm, flm)
        right = simpson(m, fm, b, fb, rm, frm)
        err = left + right - whole
        if depth <= 0 or abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        return recurse(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) + recurse(
            m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1
        )

    if hi <= lo:
        return 0.0
    m = 0.5 * (lo + hi)
    fa, fb, fm = f(lo), f(hi), f(m)
    return recurse(lo, fa, hi, fb, m, fm, simpson(lo, fa, hi, fb, m, fm), tol, max_depth)


def spread_cdf(delta: float, law: SpreadLaw, tol: float = 1e-9) -> float:
    """CDF of the spread law at ``delta``, by adaptive Simpson quadrature.

    The law has no elementary antiderivative, so the density is integrated
    numerically to absolute tolerance ``tol``. The integration range is
    pre-split on the smaller parameter scale so narrow peaks are resolved
    even when xi1 and kappa1 are orders of magnitude apart.
    """
    if not math.isfinite(delta):
        raise ValidationError("delta must be finite")
    if delta <= 0.0:
        return 0.0
    f = lambda x: spread_pdf(x, law)
    smin = min(law.xi1, law.kappa1)
    panels = max(1, min(64, int(math.ceil(delta / smin))))
    edges = np.linspace(0.0, delta, panels + 1)
    return float(
        sum(_adaptive_simpson(f, a, b, tol / panels) for a, b in zip(edges[:-1], edges[1:]))
    )


class SpreadCdfCache:
    """CDF tabulated on a grid for repeated evaluation (KS tests, tables).

    Each grid panel is integrated by adaptive Simpson and accumulated, then
    lookups interpolate linearly. With the default 4096 panels over the tail
    cutoff the interpolation error is < 1e-5, far below KS tolerances.
    """

    def __init__(self, law: SpreadLaw, n_panels: int = 4096, upper: float | None = None,
                 tol: float = 1e-9):
        self.law = law
        self.upper = float(upper) if upper is not None else law.tail_cutoff()
        if self.upper <= 0:
            raise ValidationError("upper integration limit must be > 0")
        f = lambda x: spread_pdf(x, law)
        xs = np.linspace(0.0, self.upper, n_panels + 1)
        panel_tol = tol / n_panels
        parts = [
            _adaptive_simpson(f, a, b, panel_tol) for a, b in zip(xs[:-1], xs[1:])
        ]
        cdf = np.concatenate([[0.0], np.cumsum(parts)])
        self.xs = xs
        self.cdf = np.minimum(cdf, 1.0)
        self.total_mass = float(cdf[-1])

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.cdf, left=0.0, right=1.0)


def sample_spread(law: SpreadLaw, rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. spread draws sqrt(xi^2 + kappa^2) with centered normal parts."""
    if n < 0:
        raise ValidationError("sample count must be >= 0")
    xi = rng.normal(0.0, law.xi1, size=n)
    kappa = rng.normal(0.0, law.kappa1, size=n)
    return np.hypot(xi, kappa)


def ks_distance(samples, law: SpreadLaw, cdf: SpreadCdfCache | None = None) -> float:
    """Kolmogorov-Smirnov sup-distance between samples and the spread law.

    The model CDF comes from quadrature (a shared :class:`SpreadCdfCache` can
    be passed in to amortize it). Any nonempty sample set gives a well-defined
    statistic in (0, 1]; meaningful comparisons want far more than a handful
    of points.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValidationError("cannot compute a KS distance for an empty sample set")
    model = (cdf or SpreadCdfCache(law))(x)
    i = np.arange(1, n + 1, dtype=float)
    d_plus = np.max(i / n - model)
    d_minus = np.max(model - (i - 1.0) / n)
    return float(max(d_plus, d_minus, 0.0))


@dataclass(frozen=True)
class Histogram:
    """Normalized histogram: bin edges, per-bin probability mass, sample count."""

    edges: np.ndarray
    masses: np.ndarray
    count: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValidationError("histogram edges must be strictly increasing")
        if masses.shape != (edges.size - 1,):
            raise ValidationError("histogram masses must align with edges")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise ValidationError("histogram masses must be finite and >= 0")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_samples(cls, values, bins: int, value_range: tuple[float, float] | None = None
                     ) -> "Histogram":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise ValidationError("cannot histogram an empty sample set")
        counts, edges = np.histogram(values, bins=bins, range=value_range)
        total = counts.sum()
        if total == 0:
            raise ValidationError("all samples fall outside the histogram range")
        return cls(edges=edges, masses=counts / total, count=int(values.size))

    def densities(self) -> np.ndarray:
        """Per-bin probability density (mass / bin width)."""
        return self.masses / np.diff(self.edges)

    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def tabulate_law(law: SpreadLaw, n_points: int = 513, upper: float | None = None):
    """(delta, pdf, cdf) arrays for export and plotting."""
    hi = float(upper) if upper is not None else law.tail_cutoff()
    cache = SpreadCdfCache(law, upper=hi)
    deltas = np.linspace(0.0, hi, n_points)
    return deltas, spread_pdf(deltas, law), cache(deltas)


def write_law_csv(path, law: SpreadLaw, n_points: int = 513, upper: float | None = None):
    """Write the tabulated law to ``path`` as CSV with header delta,pdf,cdf."""
    deltas, pdf, cdf = tabulate_law(law, n_points=n_points, upper=upper)
    lines = ["delta,pdf,cdf"]
    lines.extend(
        f"{float(d)!r},{float(p)!r},{float(c)!r}" for d, p, c in zip(deltas, pdf, cdf)
    )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def law_from_model(params) -> SpreadLaw:
    """Spread law implied by model parameters with centered element draws.

    The analytic density describes sqrt(xi^2 + kappa^2) only when both draws
    have zero mean; nonzero means admit no closed form here, so they are
    rejected and such models must be compared against Monte-Carlo samples
    instead.
    """
    if params.xi0 != 0.0 or params.kappa0 != 0.0:
        raise ValidationError(
            "analytic spread law requires xi0 = kappa0 = 0; compare nonzero-mean "
            "models against Monte-Carlo spread samples instead"
        )
    return SpreadLaw(xi1=params.xi1, kappa1=params.kappa1)
