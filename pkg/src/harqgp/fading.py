"""Per-block mutual-information laws.

A block of length L carrying power p over a link with pathloss-to-noise ratio S
delivers c = L log2(1 + S lam p) bits, where lam is the fading power gain. With
lam ~ Gamma(shape a, rate b) (see :class:`FadingModel`), writing
u_p(x) = (2^(x/L) - 1) / (S p),

    F(x) = P(a, b u_p(x))                  (regularized lower incomplete gamma)
    f(x) = b^a u_p^(a-1) e^(-b u_p) / Gamma(a) * 2^(x/L) ln2 / (L S p)

The relaxed versions replace p by the power cap P inside the exponential only,
which gives f_relaxed = (P/p)^a f(x; p=P) and F_relaxed = (P/p)^a F(x; p=P).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import FadingFamily, FadingModel
from .special import log_gamma, regularized_lower_gamma

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateDistribution:
    model: FadingModel
    block_length: float
    snr: float
    power: float
    power_cap: float

    def __post_init__(self):
        for name in ("block_length", "snr", "power", "power_cap"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.power > self.power_cap * (1.0 + 1e-12):
            raise ValueError(f"power {self.power} exceeds cap {self.power_cap}")

    @property
    def shape(self) -> float:
        return self.model.shape

    @property
    def rate(self) -> float:
        return self.model.rate

    def at_power(self, p: float) -> "RateDistribution":
        return RateDistribution(self.model, self.block_length, self.snr, p, self.power_cap)

    def outage_threshold(self, x):
        """u_p(x): the fading power below which the block carries fewer than x bits."""
        x = np.asarray(x, dtype=float)
        return np.expm1(x * LN2 / self.block_length) / (self.snr * self.power)


def _as_nonneg(x):
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise ValueError("rate arguments must be >= 0")
    return xs


def _ret(v: np.ndarray):
    return float(v) if np.ndim(v) == 0 else v


def _log_density(d: RateDistribution, x: np.ndarray, power_in_exp: float) -> np.ndarray:
    a, b = d.shape, d.rate
    L, S, p = d.block_length, d.snr, d.power
    g = np.expm1(x * LN2 / L)
    u = g / (S * p)
    with np.errstate(divide="ignore"):
        logu = np.log(u)
    head = 0.0 if a == 1.0 else (a - 1.0) * logu
    return (a * math.log(b) + head - b * g / (S * power_in_exp) - log_gamma(a)
            + x * LN2 / L + math.log(LN2 / (L * S * p)))


def rate_cdf(d: RateDistribution, x):
    """Pr[c < x]."""
    xs = _as_nonneg(x)
    return _ret(regularized_lower_gamma(d.shape, d.rate * d.outage_threshold(xs)))


def rate_pdf(d: RateDistribution, x):
    """Density of c; infinite at x = 0 when the fading shape is below 1."""
    xs = _as_nonneg(x)
    return _ret(np.exp(_log_density(d, xs, d.power)))


def relaxed_rate_pdf(d: RateDistribution, x):
    """Density bound with the exponential evaluated at the power cap."""
    xs = _as_nonneg(x)
    return _ret(np.exp(_log_density(d, xs, d.power_cap)))


def relaxed_rate_cdf(d: RateDistribution, x):
    """(P/p)^a F(x; p=P). An upper bound on rate_cdf; may exceed 1."""
    xs = _as_nonneg(x)
    full = d.at_power(d.power_cap)
    scale = (d.power_cap / d.power) ** d.shape
    return _ret(scale * np.asarray(regularized_lower_gamma(d.shape, d.rate * full.outage_threshold(xs))))


def cell_mass(d: RateDistribution, lo, hi, relaxed: bool = False):
    """Integral of the (relaxed) density over [lo, hi], from the closed-form CDF.

    Used by the convolution engine for the first grid cell when the density is
    singular at the origin.
    """
    cdf = relaxed_rate_cdf if relaxed else rate_cdf
    return cdf(d, hi) - cdf(d, lo)


def sample_fading_power(model: FadingModel, rng: np.random.Generator, size=None):
    """Draw |z|^2: Exp(1) by inversion (Rayleigh), Gamma(kappa, rate kappa) (Nakagami/Rician),
    or a sum of M Exp(1) (M-branch diversity)."""
    fam = model.family
    if fam is FadingFamily.RAYLEIGH or (fam is FadingFamily.DIVERSITY and model.antennas == 1):
        return rng.standard_exponential(size, method="inv")
    if fam is FadingFamily.DIVERSITY:
        m = model.antennas
        shp = (m,) if size is None else (m,) + tuple(np.atleast_1d(size))
        return rng.standard_exponential(shp, method="inv").sum(axis=0)
    k = model.shape
    return rng.standard_gamma(k, size) / k


def sample_rate(d: RateDistribution, rng: np.random.Generator, size=None):
    """Draw c = L log2(1 + S |z|^2 p) in bits."""
    lam = sample_fading_power(d.model, rng, size)
    return d.block_length * np.log1p(d.snr * lam * d.power) / LN2
