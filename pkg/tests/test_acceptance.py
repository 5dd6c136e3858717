"""Acceptance checks, one test (or group) per criterion, run at the stated tolerances.

A summary with one PASS/FAIL line per criterion is printed at the end of the
pytest run (see conftest.py).
"""
import time

import numpy as np
import pytest

from harqgp import (
    FadingModel,
    Flavor,
    PowerSchedule,
    Receiver,
    ScenarioConfig,
    bound_outages,
    bounds_for,
    cc_bound_outage,
    classic_bound_coefficients,
    exact_outages,
    new_bound_coefficients,
    optimize,
    reference_scenario,
    predicted_metrics,
)
from harqgp.gpsolve import Status, kkt_check_unconstrained
from harqgp.scenario import HarqType
from harqgp.sim import run_trials, validate_schedule

criterion = pytest.mark.criterion


def _energy(cfg, method):
    rep = optimize(cfg, method)
    if rep.status is not Status.OPTIMAL:
        return rep, np.inf
    return rep, predicted_metrics(cfg, rep.schedule, "exact").energy


# ------------------------------------------------------------------ 1


@criterion("1")
def test_bound_ordering_over_message_sizes():
    t0 = time.perf_counter()
    base = ScenarioConfig(5, [1.0] * 5, 2.0, 1.0, 1.0, 1e-5, 3.0)
    sched = [0.8] * 5
    for t in np.arange(0.5, 8.01, 0.5):
        cfg = base.with_(message_bits=float(t))
        ex = exact_outages(cfg, sched)
        new = bound_outages(bounds_for(cfg, Flavor.NEW), sched)
        cl = bound_outages(bounds_for(cfg, Flavor.CLASSIC), sched)
        assert np.all(ex <= new), (t, ex, new)
        assert np.all(new <= cl), (t, new, cl)
        assert np.all(new / cl < 1.0), (t, new / cl)
    assert time.perf_counter() - t0 < 10.0


# ------------------------------------------------------------------ 2


@criterion("2")
def test_bounds_coincide_at_large_power_cap():
    P = 1e6
    cfg = ScenarioConfig(5, [1.0] * 5, 2.0, P, 1.0, 1e-5, 3.0)
    sched = [0.8 * P] * 5
    new = bound_outages(bounds_for(cfg, Flavor.NEW), sched)
    cl = bound_outages(bounds_for(cfg, Flavor.CLASSIC), sched)
    ratio = new / cl
    assert np.all((ratio >= 0.999) & (ratio <= 1.0)), ratio
    ex1 = exact_outages(cfg, sched)[0]
    assert abs(new[0] / ex1 - 1.0) < 0.01


# ------------------------------------------------------------------ 3


@criterion("3")
def test_nakagami_one_reduces_to_rayleigh():
    ray = ScenarioConfig(5, [1.0] * 5, 3.0, 1.0, 2.0, 1e-3, 3.0)
    nak = ray.with_(fading=FadingModel.nakagami(1.0))
    for fn in (new_bound_coefficients, classic_bound_coefficients):
        a, b = fn(ray).coefficients, fn(nak).coefficients
        np.testing.assert_allclose(b, a, rtol=1e-10, atol=0)


@criterion("3")
def test_single_antenna_diversity_reduces_to_siso():
    siso = ScenarioConfig(5, [1.0] * 5, 3.0, 1.0, 2.0, 1e-3, 3.0)
    div = siso.with_(fading=FadingModel.diversity(1))
    for fn in (new_bound_coefficients, classic_bound_coefficients):
        np.testing.assert_allclose(fn(div).coefficients, fn(siso).coefficients, rtol=1e-10, atol=0)
    np.testing.assert_allclose(exact_outages(div, [0.7] * 5), exact_outages(siso, [0.7] * 5), rtol=1e-10)


# ------------------------------------------------------------------ 4


@criterion("4")
def test_one_block_analytic_optimum():
    cfg = ScenarioConfig(1, [1.0], 2.0, 1.0, 1.0, 0.5, 3.0)
    rep = optimize(cfg, "gp_new")
    assert rep.status is Status.OPTIMAL
    assert abs(rep.schedule[0] - 0.7869387) <= 1e-6
    assert "outage" in rep.active


# ------------------------------------------------------------------ 5


@criterion("5")
def test_unconstrained_kkt_structure():
    cfg = reference_scenario(8.0, n_blocks=3)
    rep = optimize(cfg, "gp_new", unconstrained=True)
    assert rep.status is Status.OPTIMAL
    chk = kkt_check_unconstrained(cfg, new_bound_coefficients(cfg), rep.schedule, eta=0.0)
    assert np.max(np.abs(chk.residuals)) <= 1e-6, chk.residuals
    assert chk.ratio_error <= 1e-3


# ------------------------------------------------------------------ 6


def _grid_optimum(cfg, bounds, points=200):
    """Exhaustive minimum of the surrogate energy over a points^N grid in (0, P]."""
    P, N = cfg.max_power, cfg.n_blocks
    L = np.asarray(cfg.block_lengths)
    A = np.array([b.coefficients for b in bounds])
    e = bounds[0].exponent
    g = np.linspace(P / points, P, points)
    best = np.inf
    for p1 in g:
        mesh = np.meshgrid(*([np.array([p1])] + [g] * (N - 1)), indexing="ij")
        p = np.stack([m.ravel() for m in mesh], axis=1)
        q = (A[:, None, :] * np.cumprod(p ** (-e), axis=1)[None]).sum(axis=0)
        reach = np.concatenate([np.ones((p.shape[0], 1)), q[:, :-1]], axis=1)
        energy = (p * L * reach).sum(axis=1)
        latency = L[0] + ((L[1:] + cfg.feedback_delay_mean) * reach[:, 1:]).sum(axis=1)
        ok = (q[:, -1] <= cfg.outage_target) & (latency <= cfg.latency_target)
        if ok.any():
            best = min(best, energy[ok].min())
    return best


GRID_SCENARIOS = {
    "one_block": ScenarioConfig(1, [1.0], 2.0, 1.0, 1.0, 0.5, 3.0),
    "two_blocks": ScenarioConfig(2, [1.0] * 2, 10.0, 1.0, 1.0, 1e-2, 3.0),
    "three_blocks": ScenarioConfig(3, [1.0] * 3, 10.0, 1.0, 1.0, 1e-3, 3.0),
    "three_blocks_latency_tight": ScenarioConfig(3, [1.0] * 3, 4.0, 1.0, 1.0, 1e-2, 1.5),
    "three_blocks_diversity": ScenarioConfig(3, [1.0] * 3, 6.0, 1.0, 2.0, 1e-3, 1.6,
                                             fading=FadingModel.diversity(2)),
    "two_receivers": reference_scenario(20.0, n_blocks=2, receivers=2).with_(
        message_bits=2.0, outage_target=5e-2),
}


@criterion("6")
@pytest.mark.parametrize("name", sorted(GRID_SCENARIOS))
def test_solver_matches_grid_search(name):
    cfg = GRID_SCENARIOS[name]
    t0 = time.perf_counter()
    bounds = bounds_for(cfg, Flavor.NEW)
    rep = optimize(cfg, "gp_new")
    grid = _grid_optimum(cfg, bounds)
    assert time.perf_counter() - t0 < 60.0
    assert rep.status is Status.OPTIMAL and np.isfinite(grid)
    assert rep.objective_value <= grid * (1.0 + 1e-9)
    assert (grid - rep.objective_value) / grid <= 0.005


# ------------------------------------------------------------------ 7


MC_SCENARIOS = {
    "ir_rayleigh": (ScenarioConfig(3, [1.0] * 3, 4.0, 1.0, 2.0, 0.1, 3.0), [0.9, 0.6, 1.0]),
    "ir_nakagami_unequal_blocks": (
        ScenarioConfig(3, [1.0, 0.5, 0.5], 3.0, 1.0, 1.5, 0.1, 3.0, fading=FadingModel.nakagami(2.5),
                       feedback_delay_mean=0.2),
        [1.0, 0.7, 0.8]),
    "cc_rician": (
        ScenarioConfig(4, [1.0] * 4, 2.0, 1.0, 2.0, 0.1, 4.0, harq_type=HarqType.CHASE_COMBINING,
                       fading=FadingModel.rician(3.0)),
        [0.5, 0.8, 1.0, 1.0]),
    "ir_diversity": (ScenarioConfig(2, [1.0] * 2, 2.0, 1.0, 2.3, 0.1, 3.0, fading=FadingModel.diversity(2)),
                     [0.7, 1.0]),
    "broadcast_mixed": (
        ScenarioConfig(3, [1.0] * 3, 6.0, 1.0, 2.0, 0.1, 3.0, receivers=(
            Receiver(6.0, FadingModel.rayleigh()),
            Receiver(4.0, FadingModel.nakagami(2.0)),
            Receiver(10.0, FadingModel.diversity(2)))),
        [1.0, 0.8, 1.0]),
}


@criterion("7")
@pytest.mark.parametrize("name", sorted(MC_SCENARIOS))
def test_monte_carlo_matches_exact(name):
    cfg, sched = MC_SCENARIOS[name]
    t0 = time.perf_counter()
    v = validate_schedule(cfg, sched, 10**6, seed=2024)
    assert time.perf_counter() - t0 < 60.0
    assert 1e-3 <= v.outage_exact <= 1e-1, v.outage_exact
    assert v.outage_consistent, (v.report.outage, v.outage_exact)
    assert v.energy_consistent, (v.report.energy, v.exact.energy)
    assert v.latency_consistent, (v.report.latency, v.exact.latency)


# ------------------------------------------------------------------ 8


@criterion("8a")
def test_snr_sweep_energy_ordering():
    feasible_all = 0
    for S in range(10, 51, 5):
        cfg = reference_scenario(float(S))
        e_new = _energy(cfg, "gp_new")[1]
        e_cl = _energy(cfg, "gp_classic")[1]
        e_max = _energy(cfg, "max_power")[1]
        # an infeasible method has infinite energy, so the chain also demands
        # that feasibility of a costlier method implies feasibility of a cheaper one
        if np.isfinite(e_max) or np.isfinite(e_cl):
            assert e_new <= e_cl * (1 + 1e-9) and e_cl <= e_max * (1 + 1e-9), (S, e_new, e_cl, e_max)
        feasible_all += np.isfinite(e_new) and np.isfinite(e_cl) and np.isfinite(e_max)
        if S == 50:
            assert e_new / e_max <= 0.5
    assert feasible_all >= 5


@criterion("8b")
def test_broadcast_classic_infeasible_where_new_feasible():
    gaps = []
    for S in range(18, 31):
        cfg = reference_scenario(float(S), receivers=3)
        new = optimize(cfg, "gp_new").status is Status.OPTIMAL
        classic = optimize(cfg, "gp_classic").status is Status.OPTIMAL
        assert new or not classic, S
        if new and not classic:
            gaps.append(S)
    assert gaps


@criterion("8c")
def test_power_profile_at_low_snr():
    cfg = reference_scenario(8.0)
    rep = optimize(cfg, "gp_new")
    assert rep.status is Status.OPTIMAL, "no schedule meets the outage target at this SNR"
    p = rep.schedule.powers
    assert abs(p[-1] - cfg.max_power) <= 1e-6
    assert p[0] > p[1]


def test_power_profile_shape_where_feasible():
    # same structural claim at the lowest SNR where the target is reachable
    cfg = reference_scenario(20.0)
    rep = optimize(cfg, "gp_new")
    assert rep.status is Status.OPTIMAL
    p = rep.schedule.powers
    assert abs(p[-1] - cfg.max_power) <= 1e-6
    assert p[0] > p[1]


@criterion("8d")
def test_latency_sweep_flattens():
    deltas = [1.3, 1.5, 2.0, 3.0, 4.0, 5.0]
    energies = []
    for d in deltas:
        cfg = reference_scenario(6.0, antennas=4).with_(latency_target=d)
        rep, e = _energy(cfg, "gp_new")
        assert rep.status is Status.OPTIMAL, d
        energies.append(e)
    energies = np.array(energies)
    assert np.all(np.diff(energies) <= 1e-9 * energies[:-1]), energies
    assert abs(energies[-1] - energies[-2]) / energies[-2] < 0.01


# ------------------------------------------------------------------ 9


@criterion("9")
@pytest.mark.parametrize("fading", [FadingModel.rayleigh(), FadingModel.nakagami(2.0), FadingModel.diversity(3)],
                         ids=["rayleigh", "nakagami", "diversity"])
def test_cc_bound_exact_at_full_power(fading):
    cfg = ScenarioConfig(5, [1.0] * 5, 2.0, 1.0, 3.0, 1e-3, 5.0, harq_type=HarqType.CHASE_COMBINING,
                         fading=fading)
    ex = exact_outages(cfg, PowerSchedule.uniform(1.0, 5))
    for n in range(1, 6):
        assert abs(cc_bound_outage(cfg, 1.0, n) - ex[n - 1]) <= 1e-9


@criterion("9")
def test_cc_one_block_analytic_optimum():
    cfg = ScenarioConfig(1, [1.0], 2.0, 1.0, 1.0, 0.5, 3.0, harq_type=HarqType.CHASE_COMBINING)
    rep = optimize(cfg, "gp_new")
    assert rep.status is Status.OPTIMAL
    assert "outage" in rep.active
    assert abs(rep.schedule[0] - 0.7869387) <= 1e-6
    assert exact_outages(cfg, rep.schedule)[-1] <= cfg.outage_target * (1 + 1e-6)


# ------------------------------------------------------------------ 10


@criterion("10")
def test_broadcast_bound_covers_union_outage():
    cfg, sched = MC_SCENARIOS["broadcast_mixed"]
    rep = run_trials(cfg, sched, 10**6, seed=99)
    bound = bound_outages(bounds_for(cfg, Flavor.NEW), sched)[-1]
    assert bound + 3.0 * rep.outage_se >= rep.outage, (bound, rep.outage)
    exact = exact_outages(cfg, sched)[-1]
    assert bound >= exact
