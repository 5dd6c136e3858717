"""Outage probabilities of HARQ and their monomial upper bounds.

Incremental redundancy accumulates c_1 + ... + c_n, so the outage after n
blocks is the CDF of a sum, Q_n = (F_1 * f_2 * ... * f_n)(t). It is evaluated
by successive trapezoid-rule convolutions on a uniform grid over [0, t]; the
integrand of the convolution vanishes off the simplex, so truncating at t is
exact.

The bounds replace each density by its relaxed version (exponential evaluated
at the power cap). Every relaxed density is (P/p)^a times a p-free kernel, so
the bound is a monomial: Q_hat_n = A_n / prod_{i<=n} p_i^a. The classic bound
is the P -> infinity limit of the same construction.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .fading import LN2, RateDistribution, cell_mass, rate_cdf, rate_pdf, relaxed_rate_cdf, relaxed_rate_pdf
from .scenario import FadingModel, HarqType, PowerSchedule, Receiver, ScenarioConfig
from .special import log_gamma, regularized_lower_gamma


class GridKind(str, enum.Enum):
    PDF = "pdf"
    CDF = "cdf"


@dataclass(frozen=True)
class DensityGrid:
    """Samples of a density (or CDF-like function) at 0, step, ..., G*step.

    ``head_mass``, when set, is the exact integral over the first cell [0, step]
    of a density that behaves like x^(head_order - 1) near the origin; the
    sample at 0 is then ignored.
    """

    values: np.ndarray
    step: float
    kind: GridKind = GridKind.PDF
    head_mass: float | None = None
    head_order: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", GridKind(self.kind))
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a density grid needs at least two samples")
        if not self.step > 0.0:
            raise ValueError("grid step must be positive")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise ValueError("grid values must be finite and nonnegative")

    @property
    def points(self) -> np.ndarray:
        return self.step * np.arange(self.values.size)

    def at_end(self) -> float:
        return float(self.values[-1])


def convolve_pdf(a: DensityGrid, b: DensityGrid) -> DensityGrid:
    """(a * b)(y) = int_0^y a(y - x) b(x) dx at every grid point, trapezoid rule.

    A singular head on one operand is integrated with a local power-law model
    on its first cell. The result is a PDF if both inputs are, else CDF-like.
    """
    if a.values.size != b.values.size or not math.isclose(a.step, b.step, rel_tol=1e-12):
        raise ValueError("convolution needs grids of equal length and step")
    if a.head_mass is not None:
        if b.head_mass is not None:
            raise ValueError("at most one operand may carry a singular head")
        a, b = b, a
    av, bv, h = a.values, b.values, a.step
    n = av.size
    if b.head_mass is None:
        full = np.convolve(av, bv)[:n]
        out = h * (full - 0.5 * (av * bv[0] + av[0] * bv))
    else:
        bt = bv.copy()
        bt[0] = 0.0
        full = np.convolve(av, bt)[:n]
        a_prev = np.concatenate(([0.0], av[:-1]))
        out = h * (full - 0.5 * a_prev * bt[1] - 0.5 * av[0] * bt)
        # density ~ x^(k-1) on [0, h]: first moment is m*h*k/(k+1)
        k, m = b.head_order, b.head_mass
        out += m / (k + 1.0) * av + m * k / (k + 1.0) * a_prev
    out[0] = 0.0
    kind = GridKind.PDF if a.kind is GridKind.PDF and b.kind is GridKind.PDF else GridKind.CDF
    return DensityGrid(np.maximum(out, 0.0), h, kind)


def _needs_head(shape: float) -> bool:
    return shape != round(shape)


def _pdf_grid(values: np.ndarray, step: float, shape: float, head_mass: float) -> DensityGrid:
    if _needs_head(shape):
        v = values.copy()
        v[0] = 0.0
        return DensityGrid(v, step, GridKind.PDF, head_mass=float(head_mass), head_order=shape)
    return DensityGrid(values, step, GridKind.PDF)


def _chain(first: DensityGrid, kernels: Sequence[DensityGrid]) -> np.ndarray:
    """Values at the grid end of first, first*k2, first*k2*k3, ..."""
    out = [first.at_end()]
    acc = first
    for k in kernels:
        acc = convolve_pdf(acc, k)
        out.append(acc.at_end())
    return np.array(out)


def _grid(cfg: ScenarioConfig) -> tuple[np.ndarray, float]:
    G = int(cfg.grid_points)
    x = np.linspace(0.0, cfg.message_bits, G + 1)
    return x, cfg.message_bits / G


def _dist(cfg: ScenarioConfig, link: Receiver, n: int, p: float) -> RateDistribution:
    return RateDistribution(link.fading, cfg.block_lengths[n], link.snr, p, cfg.max_power)


# ---------------------------------------------------------------- exact outage


def _ir_exact_link(cfg: ScenarioConfig, link: Receiver, powers: Sequence[float]) -> np.ndarray:
    x, h = _grid(cfg)
    a = link.fading.shape
    d1 = _dist(cfg, link, 0, powers[0])
    first = DensityGrid(rate_cdf(d1, x), h, GridKind.CDF)
    kernels = []
    for n in range(1, len(powers)):
        d = _dist(cfg, link, n, powers[n])
        with np.errstate(over="ignore"):
            vals = rate_pdf(d, x)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        kernels.append(_pdf_grid(vals, h, a, cell_mass(d, 0.0, h) if _needs_head(a) else 0.0))
    return _chain(first, kernels)


def hypoexponential_cdf(scales: Sequence[float], w: float) -> float:
    """Pr[sum_i scale_i * E_i < w] for i.i.d. Exp(1) E_i and pairwise distinct scales."""
    s = np.asarray(scales, dtype=float)
    total = 0.0
    for i, si in enumerate(s):
        others = np.delete(s, i)
        total += np.prod(si / (si - others)) * math.exp(-w / si)
    return 1.0 - total


def _cc_exact_link(cfg: ScenarioConfig, link: Receiver, powers: Sequence[float]) -> np.ndarray:
    # Chase combining: C_n = L log2(1 + S sum p_i lam_i) < t  <=>  sum p_i lam_i < w
    a, b = link.fading.shape, link.fading.rate
    L = cfg.block_lengths[0]
    w = math.expm1(cfg.message_bits * LN2 / L) / link.snr
    p = np.asarray(powers, dtype=float)
    tol = 1e-9 * cfg.max_power
    out = np.empty(p.size)
    conv_needed = False
    for n in range(1, p.size + 1):
        if np.ptp(p[:n]) < tol:
            out[n - 1] = regularized_lower_gamma(n * a, b * w / p[0])
        else:
            conv_needed = True
    if conv_needed:
        # law of sum_i p_i lam_i on [0, w]; each p_i lam_i ~ Gamma(a, rate b/p_i)
        G = int(cfg.grid_points)
        y = np.linspace(0.0, w, G + 1)
        h = w / G
        first = DensityGrid(regularized_lower_gamma(a, b * y / p[0]), h, GridKind.CDF)
        kernels = []
        for pi in p[1:]:
            r = b / pi
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                logv = a * math.log(r) + (a - 1.0) * np.log(y) - r * y - log_gamma(a)
                vals = np.exp(logv) if a != 1.0 else r * np.exp(-r * y)
            vals = np.where(np.isfinite(vals), vals, 0.0)
            mass = regularized_lower_gamma(a, r * h) if _needs_head(a) else 0.0
            kernels.append(_pdf_grid(vals, h, a, mass))
        chained = _chain(first, kernels)
        for n in range(1, p.size + 1):
            if not np.ptp(p[:n]) < tol:
                out[n - 1] = chained[n - 1]
    return out


def _link_outages(cfg: ScenarioConfig, link: Receiver, powers: Sequence[float]) -> np.ndarray:
    if cfg.harq_type is HarqType.CHASE_COMBINING:
        return np.clip(_cc_exact_link(cfg, link, powers), 0.0, 1.0)
    return np.clip(_ir_exact_link(cfg, link, powers), 0.0, 1.0)


def exact_outages(cfg: ScenarioConfig, schedule: PowerSchedule | Sequence[float]) -> np.ndarray:
    """Q_1..Q_N. For broadcast, the probability that at least one receiver
    (independent fading) has not decoded: 1 - prod_k (1 - Q_kn)."""
    powers = list(schedule)
    if len(powers) != cfg.n_blocks:
        raise ValueError(f"schedule has {len(powers)} powers for {cfg.n_blocks} blocks")
    per_link = np.array([_link_outages(cfg, link, powers) for link in cfg.links])
    if per_link.shape[0] == 1:
        return per_link[0]
    return 1.0 - np.prod(1.0 - per_link, axis=0)


def exact_outage(cfg: ScenarioConfig, schedule: PowerSchedule | Sequence[float], n: int) -> float:
    """Q_n for 1 <= n <= N."""
    if not 1 <= n <= cfg.n_blocks:
        raise IndexError(f"block index {n} outside 1..{cfg.n_blocks}")
    sub = cfg.with_(n_blocks=n, block_lengths=cfg.block_lengths[:n])
    return float(exact_outages(sub, list(schedule)[:n])[-1])


# ---------------------------------------------------------------------- bounds


class Flavor(str, enum.Enum):
    NEW = "new"
    CLASSIC = "classic"


@dataclass(frozen=True)
class BoundSet:
    """Q_hat_n = coefficients[n-1] / prod_{i<=n} p_i^exponent.

    With ``shared_power`` (Chase combining at uniform power) there is a single
    power variable and Q_hat_n = coefficients[n-1] / p^(n*exponent).
    """

    coefficients: np.ndarray
    exponent: float
    flavor: Flavor
    shared_power: bool = False

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", c)
        if np.any(~(c > 0.0)):
            raise ValueError("bound coefficients must be positive")

    def __len__(self):
        return self.coefficients.size

    def log_values(self, schedule: Sequence[float]) -> np.ndarray:
        p = np.asarray(list(schedule), dtype=float)
        n = self.coefficients.size
        if self.shared_power:
            if p.size > 1 and np.ptp(p) > 1e-12 * p.max():
                raise ValueError("the Chase-combining bound needs a uniform power schedule")
            logp = np.full(n, math.log(p[0]))
        else:
            logp = np.log(p[:n])
        return np.log(self.coefficients) - self.exponent * np.cumsum(logp)

    def values(self, schedule: Sequence[float]) -> np.ndarray:
        return np.exp(self.log_values(schedule))


Bounds = Union[BoundSet, Sequence[BoundSet]]


def _as_list(bounds: Bounds) -> list[BoundSet]:
    return [bounds] if isinstance(bounds, BoundSet) else list(bounds)


def bound_outage(bounds: Bounds, schedule: Sequence[float], n: int) -> float:
    """Q_hat_n at the schedule; a list of BoundSets is summed (union bound)."""
    total = 0.0
    for bs in _as_list(bounds):
        if not 1 <= n <= len(bs):
            raise IndexError(f"block index {n} outside 1..{len(bs)}")
        total += float(bs.values(schedule)[n - 1])
    return total


def bound_outages(bounds: Bounds, schedule: Sequence[float]) -> np.ndarray:
    return sum(bs.values(schedule) for bs in _as_list(bounds))


def _new_link(cfg: ScenarioConfig, link: Receiver) -> BoundSet:
    a, P = link.fading.shape, cfg.max_power
    if cfg.harq_type is HarqType.CHASE_COMBINING:
        return cc_bound_set(cfg, link, Flavor.NEW)
    x, h = _grid(cfg)
    scale = P ** a
    d1 = _dist(cfg, link, 0, P)
    first = DensityGrid(scale * np.asarray(rate_cdf(d1, x)), h, GridKind.CDF)
    kernels = []
    for n in range(1, cfg.n_blocks):
        d = _dist(cfg, link, n, P)
        with np.errstate(over="ignore"):
            vals = scale * np.asarray(relaxed_rate_pdf(d, x))
        vals = np.where(np.isfinite(vals), vals, 0.0)
        mass = scale * cell_mass(d, 0.0, h, relaxed=True) if _needs_head(a) else 0.0
        kernels.append(_pdf_grid(vals, h, a, mass))
    coef = _chain(first, kernels)
    coef[0] = scale * rate_cdf(d1, cfg.message_bits)
    return BoundSet(coef, a, Flavor.NEW)


def _classic_kernels(link: Receiver, L: float, x: np.ndarray):
    """p-free kernels of the P -> infinity bound: (first CDF-like, density)."""
    a, b, S = link.fading.shape, link.fading.rate, link.snr
    g = np.expm1(x * LN2 / L)
    lg = log_gamma(a)
    with np.errstate(divide="ignore"):
        logg = np.log(g)
    first = np.exp(a * math.log(b / S) + a * logg - math.log(a) - lg)
    head = 0.0 if a == 1.0 else (a - 1.0) * logg
    with np.errstate(over="ignore"):
        dens = np.exp(a * math.log(b / S) + head - lg + x * LN2 / L + math.log(LN2 / L))
    return first, np.where(np.isfinite(dens), dens, 0.0)


def _classic_link(cfg: ScenarioConfig, link: Receiver) -> BoundSet:
    if not cfg.equal_blocks:
        raise ValueError("the classic bound assumes equal block lengths")
    a = link.fading.shape
    if cfg.harq_type is HarqType.CHASE_COMBINING:
        return cc_bound_set(cfg, link, Flavor.CLASSIC)
    L = cfg.block_lengths[0]
    x, h = _grid(cfg)
    first_vals, dens = _classic_kernels(link, L, x)
    first = DensityGrid(first_vals, h, GridKind.CDF)
    # integral of the density over [0, h] equals the first kernel at h
    kernels = [_pdf_grid(dens, h, a, first_vals[1]) for _ in range(1, cfg.n_blocks)]
    coef = _chain(first, kernels)
    return BoundSet(coef, a, Flavor.CLASSIC)


def new_bound_coefficients(cfg: ScenarioConfig, link: Receiver | None = None) -> BoundSet:
    """A_1..A_N of the power-cap-aware bound for one link (default: the cfg's own channel)."""
    return _new_link(cfg, link or cfg.links[0])


def classic_bound_coefficients(cfg: ScenarioConfig, link: Receiver | None = None) -> BoundSet:
    """A'_1..A'_N of the unbounded-power bound; requires equal block lengths."""
    return _classic_link(cfg, link or cfg.links[0])


def cc_bound_set(cfg: ScenarioConfig, link: Receiver, flavor: Flavor = Flavor.NEW) -> BoundSet:
    """Chase combining at uniform power p: Q_hat_n = B_n / p^(n a) with
    B_n = P^(n a) P(n a, b w / P)  (new)  or  (b w)^(n a) / Gamma(n a + 1)  (classic),
    w = (2^(t/L) - 1) / S."""
    a, b, P = link.fading.shape, link.fading.rate, cfg.max_power
    L = cfg.block_lengths[0]
    w = math.expm1(cfg.message_bits * LN2 / L) / link.snr
    n = np.arange(1, cfg.n_blocks + 1)
    if flavor is Flavor.NEW:
        logc = np.array([k * a * math.log(P) + math.log(regularized_lower_gamma(k * a, b * w / P)) for k in n])
    else:
        logc = np.array([k * a * math.log(b * w) - log_gamma(k * a + 1.0) for k in n])
    return BoundSet(np.exp(logc), a, flavor, shared_power=True)


def cc_bound_outage(cfg: ScenarioConfig, p: float | Sequence[float], n: int) -> float:
    """Closed-form Chase-combining bound at uniform power p."""
    if cfg.harq_type is not HarqType.CHASE_COMBINING:
        raise ValueError("cc_bound_outage applies to Chase combining scenarios")
    if not isinstance(p, (int, float)):
        ps = np.asarray(list(p), dtype=float)
        if np.ptp(ps) > 1e-12 * ps.max():
            raise ValueError("the Chase-combining bound needs a uniform power schedule")
        p = float(ps[0])
    return bound_outage([cc_bound_set(cfg, link) for link in cfg.links], [p], n)


def broadcast_bound_terms(cfg: ScenarioConfig, flavor: Flavor = Flavor.NEW) -> list[BoundSet]:
    """One BoundSet per receiver; the aggregate bound at block n is their sum."""
    if not cfg.receivers:
        raise ValueError("broadcast bounds need a non-empty receiver list")
    build = _new_link if flavor is Flavor.NEW else _classic_link
    return [build(cfg, r) for r in cfg.receivers]


def bounds_for(cfg: ScenarioConfig, flavor: Flavor = Flavor.NEW) -> list[BoundSet]:
    """Per-link bound sets for any scenario (one entry for point-to-point)."""
    build = _new_link if flavor is Flavor.NEW else _classic_link
    return [build(cfg, link) for link in cfg.links]


def relaxed_outage_direct(cfg: ScenarioConfig, schedule: Sequence[float], link: Receiver | None = None) -> np.ndarray:
    """(F_hat_1 * f_hat_2 * ... * f_hat_n)(t) with the power-dependent relaxed kernels.

    Independent of the coefficient factoring; used to cross-check A_n / prod p^a.
    """
    link = link or cfg.links[0]
    powers = list(schedule)
    x, h = _grid(cfg)
    a = link.fading.shape
    d1 = _dist(cfg, link, 0, powers[0])
    first = DensityGrid(np.asarray(relaxed_rate_cdf(d1, x)), h, GridKind.CDF)
    kernels = []
    for n in range(1, len(powers)):
        d = _dist(cfg, link, n, powers[n])
        with np.errstate(over="ignore"):
            vals = np.asarray(relaxed_rate_pdf(d, x))
        vals = np.where(np.isfinite(vals), vals, 0.0)
        kernels.append(_pdf_grid(vals, h, a, cell_mass(d, 0.0, h, relaxed=True) if _needs_head(a) else 0.0))
    out = _chain(first, kernels)
    out[0] = relaxed_rate_cdf(d1, cfg.message_bits)
    return out
