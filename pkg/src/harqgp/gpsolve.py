"""Energy-minimizing power control as a geometric program.

With every outage probability replaced by its monomial bound, the expected
energy p_1 L_1 + sum_n L_n p_n Q_{n-1} and the latency excess
sum_n (L_{n+1} + pi) Q_n are posynomials in the powers. Under y = log p every
posynomial becomes a log-sum-exp of affine functions, and the program is
solved by a log-barrier interior-point method with damped Newton steps.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .outage import BoundSet, Bounds, Flavor, bound_outages, bounds_for, exact_outages
from .scenario import PowerSchedule, ScenarioConfig


class InfeasibleLatency(ValueError):
    """delta <= L_1: the first block alone already breaks the latency target."""


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    exponents: np.ndarray

    def __post_init__(self):
        if not self.coefficient > 0.0:
            raise ValueError(f"monomial coefficient must be positive, got {self.coefficient}")
        object.__setattr__(self, "exponents", np.asarray(self.exponents, dtype=float))

    @classmethod
    def const(cls, c: float, n_vars: int) -> "Monomial":
        return cls(c, np.zeros(n_vars))

    @classmethod
    def var(cls, j: int, n_vars: int) -> "Monomial":
        e = np.zeros(n_vars)
        e[j] = 1.0
        return cls(1.0, e)

    def __mul__(self, other):
        if isinstance(other, Monomial):
            return Monomial(self.coefficient * other.coefficient, self.exponents + other.exponents)
        return Monomial(self.coefficient * float(other), self.exponents)

    __rmul__ = __mul__

    def __pow__(self, k: float) -> "Monomial":
        return Monomial(self.coefficient ** k, self.exponents * k)

    def __call__(self, x) -> float:
        return float(self.coefficient * np.prod(np.asarray(x, dtype=float) ** self.exponents))


Posynomial = list  # list[Monomial]


def posy_value(terms: Sequence[Monomial], x) -> float:
    return sum(m(x) for m in terms)


@dataclass
class Constraint:
    name: str
    terms: list
    bound: float


@dataclass
class GpModel:
    """minimize objective(x) s.t. constraint.terms(x) <= constraint.bound, box[0] <= x <= box[1].

    ``block_powers[n]`` maps the solver variables to the power of HARQ block n+1;
    usually a single variable, but Chase combining shares one variable and the
    unconstrained mode eliminates the last block.
    """

    n_vars: int
    objective: list
    constraints: list
    box: tuple[np.ndarray, np.ndarray] | None
    block_powers: list
    latency_terms: list = field(default_factory=list)
    latency_offset: float = 0.0
    ref_power: float = 1.0

    def __post_init__(self):
        for c in self.constraints:
            if not c.bound > 0.0:
                raise ValueError(f"constraint {c.name!r} needs a positive bound, got {c.bound}")

    def schedule(self, x) -> PowerSchedule:
        return PowerSchedule(tuple(m(x) for m in self.block_powers))


@dataclass
class SolveReport:
    schedule: PowerSchedule | None
    objective_value: float
    status: Status
    constraint_slacks: dict = field(default_factory=dict)
    kkt_residual: float = math.nan
    iterations: int = 0
    predicted_latency: float = math.nan
    active: tuple = ()

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "powers": None if self.schedule is None else list(self.schedule.powers),
            "objective_value": self.objective_value,
            "predicted_latency": self.predicted_latency,
            "constraint_slacks": self.constraint_slacks,
            "active_constraints": list(self.active),
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


# ------------------------------------------------------------------ building


def _bound_monomials(bs: BoundSet, block_powers: Sequence[Monomial]) -> list[Monomial]:
    """Q_hat_1..Q_hat_N as monomials in the solver variables."""
    out = []
    acc = Monomial.const(1.0, block_powers[0].exponents.size)
    for n, A in enumerate(bs.coefficients):
        acc = acc * block_powers[n] ** (-bs.exponent)
        out.append(Monomial(float(A), acc.exponents.copy()))
    return out


def build_gp(cfg: ScenarioConfig, bounds: Bounds, *, unconstrained: bool = False) -> GpModel:
    """Energy objective with outage, latency, and box constraints.

    ``bounds`` is one BoundSet or a per-receiver list whose terms are summed.
    ``unconstrained`` drops the box and latency constraints and eliminates p_N
    through the tight outage constraint (single link, incremental redundancy).
    """
    sets = [bounds] if isinstance(bounds, BoundSet) else list(bounds)
    N, L, P = cfg.n_blocks, cfg.block_lengths, cfg.max_power
    shared = sets[0].shared_power
    if any(bs.shared_power != shared for bs in sets):
        raise ValueError("cannot mix shared-power and per-block bound sets")
    if not unconstrained and N >= 2 and not cfg.latency_target - L[0] > 0.0:
        raise InfeasibleLatency(f"latency target {cfg.latency_target} leaves no room after L_1 = {L[0]}")

    if unconstrained:
        if shared or len(sets) != 1 or N < 2:
            raise ValueError("unconstrained mode needs a single link, per-block powers and N >= 2")
        nv = N - 1
        blocks = [Monomial.var(j, nv) for j in range(nv)]
        bs = sets[0]
        # tight outage: A_N / (prod_{i<N} p_i^e * p_N^e) = eps
        rest = Monomial(1.0, -np.ones(nv))
        blocks.append(Monomial((bs.coefficients[N - 1] / cfg.outage_target) ** (1.0 / bs.exponent), rest.exponents))
    elif shared:
        nv = 1
        blocks = [Monomial.var(0, 1)] * N
    else:
        nv = N
        blocks = [Monomial.var(j, nv) for j in range(nv)]

    q = [_bound_monomials(bs, blocks) for bs in sets]   # q[k][n-1] = Q_hat_kn

    objective = [blocks[0] * L[0]]
    for n in range(2, N + 1):
        for qk in q:
            objective.append(blocks[n - 1] * qk[n - 2] * L[n - 1])

    latency = []
    for n in range(1, N):
        for qk in q:
            latency.append(qk[n - 1] * (L[n] + cfg.feedback_delay_mean))

    constraints = []
    box = None
    if not unconstrained:
        constraints.append(Constraint("outage", [qk[N - 1] for qk in q], cfg.outage_target))
        if latency:
            constraints.append(Constraint("latency", latency, cfg.latency_target - L[0]))
        box = (np.full(nv, 1e-8 * P), np.full(nv, P))
    return GpModel(nv, objective, constraints, box, blocks, latency, L[0], P)


# ------------------------------------------------------------------- solving


class _Lse:
    """g(y) = log sum_k exp(F_k . y + c_k) with gradient and Hessian."""

    def __init__(self, terms: Sequence[Monomial], scale: float = 1.0):
        self.F = np.array([m.exponents for m in terms], dtype=float)
        self.c = np.array([math.log(m.coefficient) for m in terms]) - math.log(scale)

    def value(self, y):
        z = self.F @ y + self.c
        zmax = z.max()
        return zmax + math.log(np.exp(z - zmax).sum())

    def derivs(self, y):
        z = self.F @ y + self.c
        zmax = z.max()
        w = np.exp(z - zmax)
        s = w.sum()
        w /= s
        g = self.F.T @ w
        H = (self.F.T * w) @ self.F - np.outer(g, g)
        return zmax + math.log(s), g, H


def _affine_box(model: GpModel):
    """Box as rows of a y <= b."""
    if model.box is None:
        return np.zeros((0, model.n_vars)), np.zeros(0)
    lo, hi = model.box
    I = np.eye(model.n_vars)
    return np.vstack([I, -I]), np.concatenate([np.log(hi), -np.log(lo)])


def _constraint_values(cons, Abox, bbox, y):
    g = [c.value(y) for c in cons]
    return np.concatenate([np.array(g), Abox @ y - bbox])


def _barrier(f0, cons, Abox, bbox, t, y):
    gv = _constraint_values(cons, Abox, bbox, y)
    if np.any(gv >= 0.0):
        return math.inf
    return t * f0.value(y) - np.log(-gv).sum()


def _barrier_derivs(f0, cons, Abox, bbox, t, y):
    v, g, H = f0.derivs(y)
    grad = t * g
    hess = t * H
    for c in cons:
        cv, cg, cH = c.derivs(y)
        grad += cg / -cv
        hess += cH / -cv + np.outer(cg, cg) / cv ** 2
    if Abox.size:
        r = bbox - Abox @ y
        grad += Abox.T @ (1.0 / r)
        hess += (Abox.T / r ** 2) @ Abox
    return grad, hess


def _newton(phi, derivs, y, max_iter, tol=1e-12):
    """Damped Newton with backtracking; returns (y, iterations, converged)."""
    alpha, beta = 0.25, 0.5
    fy = phi(y)
    for it in range(1, max_iter + 1):
        grad, hess = derivs(y)
        try:
            dy = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(hess + 1e-12 * np.eye(y.size), -grad, rcond=None)[0]
        dec2 = -grad @ dy
        if dec2 / 2.0 <= tol:
            return y, it, True
        s = 1.0
        while True:
            yn = y + s * dy
            fn = phi(yn)
            if fn <= fy - alpha * s * dec2:
                break
            s *= beta
            if s < 1e-14:
                # no representable decrease left: at the limit of float precision
                return y, it, True
        y, fy = yn, fn
    return y, max_iter, False


def solve_gp(model: GpModel, tol: float = 1e-9, max_outer: int = 60, max_inner: int = 200) -> SolveReport:
    """Log-barrier interior-point solve of the GP in y = log x."""
    f0 = _Lse(model.objective)
    cons = [_Lse(c.terms, c.bound) for c in model.constraints]
    Abox, bbox = _affine_box(model)
    m = len(cons) + bbox.size
    iterations = 0

    if m == 0:
        y0 = np.full(model.n_vars, math.log(0.9 * model.ref_power))
        y, iterations, ok = _newton(f0.value, lambda y: f0.derivs(y)[1:], y0, max_inner * max_outer)
        status = Status.OPTIMAL if ok else Status.MAX_ITERATIONS
        return _report(model, y, status, iterations, f0, cons, Abox, bbox, t=math.inf)

    # every constraint posynomial is nonincreasing in each variable, so the box
    # corner x = upper is where constraints are easiest to meet
    hi = np.log(model.box[1]) if model.box is not None else np.full(model.n_vars, math.log(model.ref_power))
    gv_hi = np.array([c.value(hi) for c in cons])
    if np.any(gv_hi > 1e-12):
        return SolveReport(None, math.inf, Status.INFEASIBLE,
                           {c.name: float(1.0 - math.exp(g)) for c, g in zip(model.constraints, gv_hi)})

    y = np.full(model.n_vars, math.log(0.9) ) + hi
    shrink = math.log(1.0 / 0.9)
    while np.any(_constraint_values(cons, Abox, bbox, y) >= 0.0):
        shrink /= 2.0
        y = hi - shrink
        if shrink < 1e-15:
            # feasible set has no interior; the corner is the only feasible point
            return _report(model, hi, Status.OPTIMAL, 0, f0, cons, Abox, bbox, t=math.inf)

    t = m / (1.0 + abs(f0.value(y)))
    status = Status.MAX_ITERATIONS
    for _ in range(max_outer):
        phi = lambda z, t=t: _barrier(f0, cons, Abox, bbox, t, z)
        der = lambda z, t=t: _barrier_derivs(f0, cons, Abox, bbox, t, z)
        y, k, _ = _newton(phi, der, y, max_inner)
        iterations += k
        if m / t < tol * (1.0 + abs(f0.value(y))):
            status = Status.OPTIMAL
            break
        t *= 10.0
    return _report(model, y, status, iterations, f0, cons, Abox, bbox, t)


def _report(model, y, status, iterations, f0, cons, Abox, bbox, t) -> SolveReport:
    x = np.exp(y)
    _, g0, _ = f0.derivs(y)
    stat = g0.copy()
    if math.isfinite(t) and t > 0:
        for c in cons:
            cv, cg, _ = c.derivs(y)
            stat += cg / (-t * cv)
        if Abox.size:
            stat += Abox.T @ (1.0 / (t * (bbox - Abox @ y)))
        gap = (len(cons) + bbox.size) / t
    else:
        gap = 0.0
    kkt = max(float(np.abs(stat).max()) / (1.0 + float(np.abs(g0).max())), gap)
    slacks = {}
    active = []
    for c in model.constraints:
        val = posy_value(c.terms, x)
        rel = (c.bound - val) / c.bound
        slacks[c.name] = float(rel)
        if rel <= 1e-6:
            active.append(c.name)
    return SolveReport(
        schedule=model.schedule(x),
        objective_value=posy_value(model.objective, x),
        status=status,
        constraint_slacks=slacks,
        kkt_residual=kkt,
        iterations=iterations,
        predicted_latency=model.latency_offset + posy_value(model.latency_terms, x),
        active=tuple(active),
    )


# ------------------------------------------------------------- entry points


class Method(str, enum.Enum):
    MAX_POWER = "max_power"
    GP_CLASSIC = "gp_classic"
    GP_NEW = "gp_new"


def optimize(cfg: ScenarioConfig, method: Method | str = Method.GP_NEW, *, tol: float = 1e-9,
             unconstrained: bool = False, max_outer: int = 60) -> SolveReport:
    """Schedule for one of the three strategies.

    ``max_power`` is not a solve: it reports p_n = P with feasibility judged on
    the exact outage and latency.
    """
    method = Method(method)
    if method is Method.MAX_POWER:
        sched = PowerSchedule.uniform(cfg.max_power, cfg.n_blocks)
        met = predicted_metrics(cfg, sched, "exact")
        ok = met.outage <= cfg.outage_target and met.latency <= cfg.latency_target
        return SolveReport(
            schedule=sched, objective_value=met.energy,
            status=Status.OPTIMAL if ok else Status.INFEASIBLE,
            constraint_slacks={"outage": (cfg.outage_target - met.outage) / cfg.outage_target,
                               "latency": (cfg.latency_target - met.latency) / cfg.latency_target},
            kkt_residual=0.0, iterations=0, predicted_latency=met.latency,
        )
    flavor = Flavor.NEW if method is Method.GP_NEW else Flavor.CLASSIC
    model = build_gp(cfg, bounds_for(cfg, flavor), unconstrained=unconstrained)
    return solve_gp(model, tol=tol, max_outer=max_outer)


@dataclass(frozen=True)
class Metrics:
    outage: float
    energy: float
    latency: float
    q: np.ndarray


def metrics_from_q(cfg: ScenarioConfig, schedule: Sequence[float], q: Sequence[float]) -> Metrics:
    """Q_N, E = p_1 L_1 + sum p_n L_n Q_{n-1}, D = L_1 + sum (L_n + pi) Q_{n-1}."""
    p = np.asarray(list(schedule), dtype=float)
    L = np.asarray(cfg.block_lengths, dtype=float)
    q = np.asarray(q, dtype=float)
    reach = np.concatenate(([1.0], q[:-1]))
    energy = float(np.sum(p * L * reach))
    latency = float(L[0] + np.sum((L[1:] + cfg.feedback_delay_mean) * reach[1:]))
    return Metrics(float(q[-1]), energy, latency, q)


def predicted_metrics(cfg: ScenarioConfig, schedule: Sequence[float], source: Bounds | str = "exact") -> Metrics:
    """(Q_N, E, D) from the exact outage (``"exact"``) or from bound sets (surrogate)."""
    if isinstance(source, str):
        if source != "exact":
            raise ValueError(f"unknown metric source {source!r}")
        q = exact_outages(cfg, schedule)
    else:
        q = bound_outages(source, schedule)
    return metrics_from_q(cfg, schedule, q)


@dataclass(frozen=True)
class KktCheck:
    residuals: np.ndarray
    ratio_error: float | None


def kkt_check_unconstrained(cfg: ScenarioConfig, bounds: BoundSet, schedule: Sequence[float],
                            eta: float = 0.0) -> KktCheck:
    """Residuals of L_n Q_{n-1} p_n = (1+e) L_{n+1} Q_n p_{n+1} + eta (L_{n+1}+pi) Q_n, n < N.

    e is the bound's power exponent (1 for Rayleigh, giving the factor 2).
    Each residual is normalized by its left side. With eta = 0 the chained
    ratio p_N / p_1 = L_1 / ((1+e)^(N-1) Q_{N-1} L_N) is checked as well.
    """
    p = np.asarray(list(schedule), dtype=float)
    L = np.asarray(cfg.block_lengths, dtype=float)
    N = p.size
    q = np.concatenate(([1.0], bounds.values(p)))
    k = 1.0 + bounds.exponent
    res = np.empty(N - 1)
    for n in range(1, N):
        lhs = L[n - 1] * q[n - 1] * p[n - 1]
        rhs = k * L[n] * q[n] * p[n] + eta * (L[n] + cfg.feedback_delay_mean) * q[n]
        res[n - 1] = (lhs - rhs) / lhs
    ratio_err = None
    if eta == 0.0:
        predicted = L[0] / (k ** (N - 1) * q[N - 1] * L[N - 1])
        ratio_err = abs(p[-1] / p[0] - predicted) / predicted
    return KktCheck(res, ratio_err)
