"""Seeded surrogate series with prescribed scaling exponents.

Long-range correlated Gaussian series are produced by Fourier filtering:
white Gaussian noise is transformed, its amplitudes are multiplied by
``f**(-beta/2)`` with ``beta = 2*alpha - 1`` and the result is transformed
back.  All randomness comes from :func:`numpy.random.default_rng`
(PCG64), so a seed fixes the output bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .series import Series, as_series

ALPHA_RANGE = (0.0, 1.5)


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    alpha: float
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        _check_length(self.n)
        _check_alpha(self.alpha, "alpha")


@dataclass(frozen=True)
class CrossoverSpec:
    n: int
    alpha1: float
    alpha2: float
    s_cross: int
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        _check_length(self.n)
        _check_alpha(self.alpha1, "alpha1")
        _check_alpha(self.alpha2, "alpha2")
        if not 1 < self.s_cross < self.n:
            raise ParameterError(f"s_cross={self.s_cross} must lie in (1, N={self.n})")


@dataclass(frozen=True)
class TrendSpec:
    amplitude: float
    exponent: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.amplitude):
            raise ParameterError("trend amplitude must be finite")
        if not (np.isfinite(self.exponent) and self.exponent >= 0):
            raise ParameterError(f"trend exponent {self.exponent} must be >= 0")


def _check_length(n):
    if int(n) != n or n < 1:
        raise ParameterError(f"length {n} must be a positive integer")


def _check_alpha(alpha, name):
    lo, hi = ALPHA_RANGE
    if not lo < alpha < hi:
        raise ParameterError(f"{name}={alpha} outside supported range ({lo}, {hi})")


def _padded_length(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


def _filtered_noise(n: int, seed: int, amplitude, normalize: bool) -> np.ndarray:
    """Shape white noise of length ``n'`` (power of two) by ``amplitude(f)``.

    ``amplitude`` receives the positive frequencies ``k/n'`` for
    ``k = 1..n'/2`` and returns the multiplicative factor for each; the
    zero-frequency coefficient is dropped.
    """
    n_pad = _padded_length(n)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n_pad)
    spec = np.fft.rfft(noise)
    freqs = np.arange(1, spec.size) / n_pad
    spec[0] = 0.0
    spec[1:] *= amplitude(freqs)
    x = np.fft.irfft(spec, n=n_pad)[:n]
    if normalize:
        x = x - x.mean()
        sd = x.std()
        if sd > 0:
            x = x / sd
            # second pass removes the residual rounding offset of the first
            x = x - x.mean()
    return x


def generate_power_law(spec: GeneratorSpec) -> Series:
    """Gaussian series with fluctuation exponent ``spec.alpha``."""
    beta = 2.0 * spec.alpha - 1.0
    x = _filtered_noise(spec.n, spec.seed, lambda f: f ** (-beta / 2.0), spec.normalize)
    return Series(x, label=f"alpha={spec.alpha:g},seed={spec.seed}")


def crossover_frequency(n: int, s_cross: float) -> float:
    """Grid frequency nearest to ``1/s_cross`` on the padded length of ``n``."""
    n_pad = _padded_length(n)
    k = min(max(int(round(n_pad / s_cross)), 1), n_pad // 2)
    return k / n_pad


def generate_crossover(spec: CrossoverSpec) -> Series:
    """Gaussian series with exponent ``alpha1`` below and ``alpha2`` above
    ``s_cross``.

    The power spectrum is multiplied by ``(f/f_x)**-beta2`` for ``f < f_x``
    and ``(f/f_x)**-beta1`` above, both equal to one at ``f_x``.
    """
    beta1 = 2.0 * spec.alpha1 - 1.0
    beta2 = 2.0 * spec.alpha2 - 1.0
    fx = crossover_frequency(spec.n, spec.s_cross)

    def amplitude(f):
        r = f / fx
        return np.where(f < fx, r ** (-beta2 / 2.0), r ** (-beta1 / 2.0))

    x = _filtered_noise(spec.n, spec.seed, amplitude, spec.normalize)
    return Series(
        x, label=f"alpha1={spec.alpha1:g},alpha2={spec.alpha2:g},sx={spec.s_cross},seed={spec.seed}"
    )


def add_trend(series, trend: TrendSpec) -> Series:
    """Return ``x_i + A (i/N)**q`` for ``i = 1..N``."""
    s = as_series(series)
    if trend.amplitude == 0:
        return s
    n = len(s)
    i = np.arange(1, n + 1, dtype=float)
    return Series(s.values + trend.amplitude * (i / n) ** trend.exponent, label=s.label)


def shuffle_boxes(series, box: int, seed: int = 0) -> Series:
    """Permute consecutive boxes of length ``box``.

    Correlations above the box length are destroyed.  A trailing partial
    box stays at the end, unshuffled.
    """
    s = as_series(series)
    n = len(s)
    if int(box) != box or box < 1:
        raise ParameterError(f"box length {box} must be a positive integer")
    if box > n:
        raise ParameterError(f"box length {box} exceeds series length {n}")
    n_box = n // box
    full = s.values[: n_box * box].reshape(n_box, box)
    order = np.random.default_rng(seed).permutation(n_box)
    out = np.concatenate([full[order].ravel(), s.values[n_box * box:]])
    return Series(out, label=s.label)


def downsample(series, factor: int) -> Series:
    """Keep samples ``i = factor, 2 factor, ...`` (1-based)."""
    s = as_series(series)
    if int(factor) != factor or factor < 1:
        raise ParameterError(f"downsampling factor {factor} must be a positive integer")
    if factor > len(s):
        raise ParameterError(f"downsampling factor {factor} leaves no samples")
    return Series(s.values[factor - 1 :: factor], label=s.label)
