"""Score distributions and gauge scores.

A leaf's normalized samples are summarized two ways: a Gaussian KDE on [0, 1]
(reflected at both ends) for display, and a gauge score that applies pessimistic
OWA weighting either to the sorted samples themselves or to the smoothed
distribution.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from rrmeval import aggregation
from rrmeval.errors import InvalidInputError

DISCRETE_OWA = "discrete-owa"
SMOOTHED_QUANTILE_OWA = "smoothed-quantile-owa"
LITERAL_PRODUCT = "literal-product"
GAUGE_MODES = (DISCRETE_OWA, SMOOTHED_QUANTILE_OWA, LITERAL_PRODUCT)
DEFAULT_MODE = DISCRETE_OWA

DEFAULT_GRID_SIZE = 512
MIN_BANDWIDTH = 1e-3
_KERNEL_REACH = 8.0  # kernel truncated at this many bandwidths


@dataclass(frozen=True)
class OwaConfig:
    """How a leaf's samples are OWA-aggregated.

    Exactly one of ``alpha`` (pessimism of the quantifier ``1 - (1 - p)**alpha``)
    or ``weights`` (a raw weight vector, worst sample first) is set. ``mode`` is
    one of :data:`GAUGE_MODES`, or ``None`` to use the evaluator's default.
    """

    id: str = ""
    alpha: float | None = 2.0
    weights: tuple[float, ...] | None = None
    mode: str | None = None

    def __post_init__(self):
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
            object.__setattr__(self, "alpha", None)
        elif self.alpha is None:
            raise InvalidInputError(f"OWA config {self.id!r} needs alpha or weights")
        else:
            object.__setattr__(self, "alpha", float(self.alpha))

    def quantifier(self):
        if self.weights is not None:
            return aggregation.quantifier_from_weights(self.weights)
        return aggregation.pessimistic_quantifier(self.alpha)

    def weights_for(self, n: int) -> np.ndarray:
        if self.weights is not None and len(self.weights) == n:
            return aggregation.check_owa_weights(self.weights)
        return aggregation.weights_from_quantifier(self.quantifier(), n)

    def weight_curve(self, p: np.ndarray) -> np.ndarray:
        """Density of the quantifier on [0, 1] (the continuous OWA weight curve)."""
        p = np.asarray(p, dtype=float)
        if self.weights is not None:
            m = len(self.weights)
            cell = np.minimum((p * m).astype(int), m - 1)
            return np.asarray(self.weights)[cell] * m
        return self.alpha * (1.0 - p) ** (self.alpha - 1.0)


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


@dataclass(frozen=True)
class GaugeScore:
    score: float
    mode: str
    density: DensityEstimate
    weight_curve: np.ndarray
    n_samples: int
    notes: tuple[str, ...] = field(default_factory=tuple)


def _samples_array(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidInputError("empty sample set")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("samples must be finite")
    return arr


def silverman_bandwidth(samples) -> float:
    """``0.9 * min(std, IQR / 1.34) * n**(-1/5)``, without the lower floor.

    Falls back to the standard deviation alone when the IQR is zero but the
    spread is not, so a few outliers around a repeated value still smooth.
    """
    arr = _samples_array(samples)
    if arr.size < 2 or np.ptp(arr) == 0.0:
        return 0.0
    sigma = float(np.std(arr, ddof=1))
    q75, q25 = np.percentile(arr, [75, 25])
    spread = min(sigma, (q75 - q25) / 1.34)
    if spread <= 0.0:
        spread = sigma
    return 0.9 * spread * arr.size ** (-0.2)


def _reflected_density(samples: np.ndarray, grid: np.ndarray, h: float) -> np.ndarray:
    # Images x + 2k and 2k - x for all k reproduce the Neumann kernel on [0, 1],
    # which conserves mass exactly; truncate once images are beyond kernel reach.
    reach = int(np.ceil((_KERNEL_REACH * h + 1.0) / 2.0))
    shifts = 2.0 * np.arange(-reach, reach + 1)
    centres = np.concatenate([(samples[:, None] + shifts).ravel(), (shifts - samples[:, None]).ravel()])
    centres = centres[(centres > -_KERNEL_REACH * h) & (centres < 1.0 + _KERNEL_REACH * h)]
    z = (grid[:, None] - centres[None, :]) / h
    z = np.where(np.abs(z) <= _KERNEL_REACH, z, np.inf)
    return np.exp(-0.5 * z * z).sum(axis=1) / (samples.size * h * np.sqrt(2.0 * np.pi))


def kde(samples, grid_size: int = DEFAULT_GRID_SIZE, bandwidth: float | None = None) -> DensityEstimate:
    """Gaussian KDE of scores on a uniform grid over [0, 1], reflected at 0 and 1.

    The default bandwidth is Silverman's rule floored at ``MIN_BANDWIDTH``. The
    grid values are rescaled so their trapezoidal integral is exactly 1; this only
    corrects discretization error when the kernel is narrower than the grid step.
    """
    arr = _samples_array(samples)
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise InvalidInputError("KDE samples must lie in [0, 1]")
    if grid_size < 2:
        raise InvalidInputError("grid_size must be >= 2")
    h = silverman_bandwidth(arr) if bandwidth is None else float(bandwidth)
    h = max(h, MIN_BANDWIDTH)
    grid = np.linspace(0.0, 1.0, grid_size)
    values = _reflected_density(arr, grid, h)
    values = values / np.trapezoid(values, grid)
    return DensityEstimate(grid, values, h)


def density_on_range(samples, lo: float, hi: float, grid_size: int = DEFAULT_GRID_SIZE) -> DensityEstimate:
    """KDE of raw metric values, computed in the coordinate ``(x - lo) / (hi - lo)``."""
    arr = np.clip((_samples_array(samples) - lo) / (hi - lo), 0.0, 1.0)
    return kde(arr, grid_size)


def cdf_and_quantile(d: DensityEstimate):
    """Return ``(cdf, quantile)``: the CDF on ``d.grid`` and its piecewise-linear inverse.

    ``quantile`` accepts scalars or arrays of probabilities; where the CDF is flat
    the lowest grid point reaching the probability wins.
    """
    grid, values = d.grid, d.values
    increments = 0.5 * (values[1:] + values[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    cdf = cdf / cdf[-1]

    def quantile(p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        k = np.clip(np.searchsorted(cdf, p, side="left"), 1, grid.size - 1)
        lo_c, hi_c = cdf[k - 1], cdf[k]
        width = hi_c - lo_c
        frac = np.where(width > 0, (p - lo_c) / np.where(width > 0, width, 1.0), 1.0)
        out = grid[k - 1] + np.clip(frac, 0.0, 1.0) * (grid[k] - grid[k - 1])
        # p at or below the first positive CDF value maps to the start of the support
        start = grid[max(int(np.searchsorted(cdf, 0.0, side="right")) - 1, 0)]
        return np.where(p <= 0.0, start, out)

    return cdf, quantile


def _cell_masses(cfg: OwaConfig, m: int) -> np.ndarray:
    return aggregation.weights_from_quantifier(cfg.quantifier(), m)


def gauge_score(samples, owa_cfg: OwaConfig, mode: str | None = None,
                grid_size: int = DEFAULT_GRID_SIZE, bandwidth: float | None = None) -> GaugeScore:
    """Gauge score of normalized samples in [0, 1].

    ``discrete-owa``
        OWA of the sorted samples with the config's weights for ``n`` samples.
    ``smoothed-quantile-owa``
        ``integral_0^1 w(p) F^-1(p) dp`` with ``F`` the KDE's CDF, discretized on a
        quantile grid using exact quantifier masses per cell. With zero sample
        spread the KDE collapses to the empirical distribution and the result
        equals the discrete OWA.
    ``literal-product``
        Mean score under the density tilted by the weight curve,
        ``int u f(u) w(u) du / int f(u) w(u) du``. A reading of the display, not
        an OWA functional; not exactly idempotent on degenerate sets.
    """
    mode = mode or owa_cfg.mode or DEFAULT_MODE
    if mode not in GAUGE_MODES:
        raise InvalidInputError(f"unknown gauge mode {mode!r}; expected one of {GAUGE_MODES}")
    arr = _samples_array(samples)
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise InvalidInputError("gauge samples must be normalized scores in [0, 1]")
    density = kde(arr, grid_size, bandwidth)
    grid = density.grid
    curve = owa_cfg.weight_curve(grid)
    notes: tuple[str, ...] = ()

    if mode == DISCRETE_OWA:
        score = aggregation.owa(owa_cfg.weights_for(arr.size), arr)
    elif mode == SMOOTHED_QUANTILE_OWA:
        raw_h = silverman_bandwidth(arr) if bandwidth is None else float(bandwidth)
        if raw_h <= 0.0:
            score = aggregation.owa(owa_cfg.weights_for(arr.size), arr)
            notes = ("zero spread: empirical quantiles used",)
        else:
            m = grid_size
            mids = (np.arange(m) + 0.5) / m
            _, quantile = cdf_and_quantile(density)
            score = float(np.dot(_cell_masses(owa_cfg, m), quantile(mids)))
    else:
        tilted = density.values * curve
        mass = np.trapezoid(tilted, grid)
        if mass <= 0.0:
            score = float(arr.min())
        else:
            score = float(np.trapezoid(grid * tilted, grid) / mass)
        notes = ("figure-literal reading, interpretation uncertain",)

    return GaugeScore(float(np.clip(score, 0.0, 1.0)), mode, density, curve, int(arr.size), notes)
