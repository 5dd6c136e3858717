"""Monte Carlo HARQ simulator, independent of the convolution engine.

Each trial draws the fading of every block for every receiver, accumulates the
decodable bits, and stops at the first block after which all receivers hold at
least t bits (or after block N). Trials run in fixed-size batches; batch b
draws from a Philox stream keyed by (seed, b), and batch results are reduced in
batch order, so the report does not depend on how many workers ran.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fading import LN2, sample_fading_power
from .gpsolve import Metrics, metrics_from_q
from .outage import Flavor, bound_outages, bounds_for, exact_outages
from .scenario import HarqType, ScenarioConfig

Z95 = 1.959963984540054


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    """Counter-based stream for one batch, derived only from (seed, batch)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(batch),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class _Tally:
    outages: int = 0
    energy: float = 0.0
    energy_sq: float = 0.0
    latency: float = 0.0
    latency_sq: float = 0.0
    usage: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def add(self, other: "_Tally"):
        self.outages += other.outages
        self.energy += other.energy
        self.energy_sq += other.energy_sq
        self.latency += other.latency
        self.latency_sq += other.latency_sq
        self.usage = other.usage.copy() if self.usage.size == 0 else self.usage + other.usage


def _run_batch(cfg: ScenarioConfig, powers: np.ndarray, n: int, rng: np.random.Generator,
               exponential_feedback: bool) -> _Tally:
    N = cfg.n_blocks
    L = np.asarray(cfg.block_lengths)
    t = cfg.message_bits
    # index of the first block after which every receiver has decoded; N = never
    first_all = np.zeros(n, dtype=np.int64)
    for link in cfg.links:
        lam = sample_fading_power(link.fading, rng, (n, N))
        if cfg.harq_type is HarqType.CHASE_COMBINING:
            C = L[0] * np.log1p(link.snr * np.cumsum(lam * powers, axis=1)) / LN2
        else:
            C = np.cumsum(L * np.log1p(link.snr * lam * powers) / LN2, axis=1)
        ok = C >= t
        first = np.where(ok.any(axis=1), ok.argmax(axis=1), N)
        np.maximum(first_all, first, out=first_all)
    outage = first_all >= N
    used = np.minimum(first_all + 1, N)            # blocks transmitted
    energy = np.cumsum(powers * L)[used - 1]
    latency = np.cumsum(L)[used - 1]
    if N > 1 and cfg.feedback_delay_mean > 0.0:
        if exponential_feedback:
            delays = rng.exponential(cfg.feedback_delay_mean, (n, N - 1))
            cum = np.concatenate([np.zeros((n, 1)), np.cumsum(delays, axis=1)], axis=1)
            latency = latency + cum[np.arange(n), used - 1]
        else:
            latency = latency + cfg.feedback_delay_mean * (used - 1)
    usage = np.array([(used >= k).sum() for k in range(1, N + 1)], dtype=np.int64)
    return _Tally(int(outage.sum()), float(energy.sum()), float((energy ** 2).sum()),
                  float(latency.sum()), float((latency ** 2).sum()), usage)


@dataclass(frozen=True)
class SimulationReport:
    """Empirical (Q_N, E, D). Energy in units of E0 = P L_1, latency in units of L_1.

    ``*_se`` are standard errors; ``*_ci`` are 95% normal-approximation half
    widths. With no observed outage, ``outage_upper`` is the one-sided 95%
    Clopper-Pearson upper bound 1 - 0.05^(1/n).
    """

    trials: int
    seed: int
    outage: float
    outage_se: float
    outage_ci: float
    outage_upper: float
    energy: float
    energy_se: float
    energy_ci: float
    latency: float
    latency_se: float
    latency_ci: float
    block_usage: tuple
    degenerate: bool

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["block_usage"] = list(self.block_usage)
        return d


def run_trials(cfg: ScenarioConfig, schedule: Sequence[float], trials: int, seed: int = 0, *,
               batch_size: int = 1 << 16, workers: int = 1,
               feedback: str = "deterministic") -> SimulationReport:
    """Simulate ``trials`` HARQ rounds of the schedule.

    ``feedback`` is ``"deterministic"`` (every feedback takes exactly the mean
    delay) or ``"exponential"``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if feedback not in ("deterministic", "exponential"):
        raise ValueError(f"unknown feedback delay model {feedback!r}")
    powers = np.asarray(list(schedule), dtype=float)
    if powers.size != cfg.n_blocks:
        raise ValueError(f"schedule has {powers.size} powers for {cfg.n_blocks} blocks")
    sizes = [batch_size] * (trials // batch_size)
    if trials % batch_size:
        sizes.append(trials % batch_size)

    def job(b):
        return _run_batch(cfg, powers, sizes[b], batch_rng(seed, b), feedback == "exponential")

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    tally = _Tally()
    for part in parts:
        tally.add(part)

    n = trials
    e0 = cfg.max_power * cfg.block_lengths[0]
    l0 = cfg.block_lengths[0]
    q = tally.outages / n
    q_se = math.sqrt(q * (1.0 - q) / n)

    def mean_se(s, s2, unit):
        mean = s / n
        if n < 2:
            return mean / unit, math.nan
        var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
        return mean / unit, math.sqrt(var / n) / unit

    e_mean, e_se = mean_se(tally.energy, tally.energy_sq, e0)
    d_mean, d_se = mean_se(tally.latency, tally.latency_sq, l0)
    upper = 1.0 - 0.05 ** (1.0 / n) if tally.outages == 0 else min(1.0, q + Z95 * q_se)
    return SimulationReport(
        trials=n, seed=int(seed),
        outage=q, outage_se=q_se, outage_ci=Z95 * q_se, outage_upper=upper,
        energy=e_mean, energy_se=e_se, energy_ci=Z95 * e_se,
        latency=d_mean, latency_se=d_se, latency_ci=Z95 * d_se,
        block_usage=tuple(float(u) / n for u in tally.usage),
        degenerate=n < 2,
    )


@dataclass(frozen=True)
class Validation:
    """Empirical vs. model predictions for one schedule. Energies in E0, latencies in L_1."""

    report: SimulationReport
    outage_exact: float
    outage_new_bound: float | None
    outage_classic_bound: float | None
    exact: Metrics
    surrogate: Metrics | None
    outage_consistent: bool
    outage_below_bound: bool
    energy_consistent: bool
    latency_consistent: bool

    @property
    def ok(self) -> bool:
        return self.outage_consistent and self.outage_below_bound and self.energy_consistent and self.latency_consistent


def _within(emp: float, pred: float, se: float, k: float = 3.0) -> bool:
    if not math.isfinite(se):
        return emp == pred
    return abs(emp - pred) <= k * se + 1e-12 * max(1.0, abs(pred))


def validate_schedule(cfg: ScenarioConfig, schedule: Sequence[float], trials: int, seed: int = 0,
                      **kw) -> Validation:
    """Compare a simulated schedule against the convolution-exact and bound predictions (3 sigma)."""
    rep = run_trials(cfg, schedule, trials, seed, **kw)
    q = exact_outages(cfg, schedule)
    exact = metrics_from_q(cfg, schedule, q)
    # bounds that do not apply to this schedule (e.g. non-uniform Chase combining) are None
    try:
        new_q = bound_outages(bounds_for(cfg, Flavor.NEW), schedule)
        surrogate = metrics_from_q(cfg, schedule, new_q)
        new_bound = float(new_q[-1])
    except ValueError:
        surrogate, new_bound = None, None
    try:
        classic = float(bound_outages(bounds_for(cfg, Flavor.CLASSIC), schedule)[-1])
    except ValueError:
        classic = None
    e0 = cfg.max_power * cfg.block_lengths[0]
    l0 = cfg.block_lengths[0]
    n = rep.trials
    q_se = math.sqrt(max(exact.outage * (1.0 - exact.outage), 1e-300) / n)
    return Validation(
        report=rep,
        outage_exact=exact.outage,
        outage_new_bound=new_bound,
        outage_classic_bound=classic,
        exact=exact,
        surrogate=surrogate,
        outage_consistent=_within(rep.outage, exact.outage, q_se),
        outage_below_bound=new_bound is None or rep.outage <= new_bound + 3.0 * q_se,
        energy_consistent=_within(rep.energy, exact.energy / e0, rep.energy_se),
        latency_consistent=_within(rep.latency, exact.latency / l0, rep.latency_se),
    )
