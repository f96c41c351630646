"""Metropolis simulated annealing, cooling schedules and residual-energy fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ._rng import make_rng
from .records import RunRecord
from .spins import IsingProblem, energy, magnetization

SCHEDULE_KINDS = ("logarithmic", "exponential", "linear", "power-law-mn", "constant")


@dataclass(frozen=True)
class Schedule:
    """Time-to-control map ``t -> X(t)`` for a temperature or a transverse field.

    Use the class-method constructors; ``params`` is kept as a sorted tuple of
    pairs so schedules hash and compare by value.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def logarithmic(cls, N: float) -> "Schedule":
        return cls("logarithmic", (("N", float(N)),))

    @classmethod
    def exponential(cls, x0: float, tau: float) -> "Schedule":
        return cls("exponential", (("tau", float(tau)), ("x0", float(x0))))

    @classmethod
    def exponential_between(cls, x0: float, x_end: float, sweeps: int) -> "Schedule":
        """Exponential decay that reaches ``x_end`` after ``sweeps`` steps."""
        return cls.exponential(x0, sweeps / math.log(x0 / x_end))

    @classmethod
    def linear(cls, x0: float, tau: float) -> "Schedule":
        return cls("linear", (("tau", float(tau)), ("x0", float(x0))))

    @classmethod
    def power_law_mn(cls, M: int, T: float, R: float, L: float) -> "Schedule":
        return cls("power-law-mn", (("L", float(L)), ("M", int(M)), ("R", float(R)), ("T", float(T))))

    @classmethod
    def constant(cls, x: float) -> "Schedule":
        return cls("constant", (("x", float(x)),))

    @property
    def p(self) -> dict:
        return dict(self.params)

    @property
    def decreasing(self) -> bool:
        return self.kind != "constant"

    def descriptor(self) -> dict:
        return {"kind": self.kind, **self.p}

    @classmethod
    def from_descriptor(cls, d: dict) -> "Schedule":
        d = dict(d)
        kind = d.pop("kind")
        return cls(kind, tuple(sorted(d.items())))

    def value(self, t):
        return schedule_value(self, t)


def schedule_value(s: Schedule, t):
    """Control value at step ``t`` (scalar or array).

    The logarithmic kind returns ``N / log(max(t, 2))``. For ``t >= 2`` that
    is exactly the marginal convergent cooling law ``N / log t``; the clamp
    keeps the first two steps finite.
    """
    tt = np.asarray(t, dtype=np.float64)
    if np.any(tt < 0):
        raise ValueError("schedule time must be non-negative")
    p = s.p
    if s.kind == "logarithmic":
        out = p["N"] / np.log(np.maximum(tt, 2.0))
    elif s.kind == "exponential":
        out = p["x0"] * np.exp(-tt / p["tau"])
    elif s.kind == "linear":
        out = p["x0"] * np.maximum(0.0, 1.0 - tt / p["tau"])
    elif s.kind == "power-law-mn":
        from .pimc import mn_schedule

        out = mn_schedule(tt, p["M"], p["T"], p["R"], p["L"])
    else:
        out = np.full_like(tt, p["x"])
    return float(out) if np.ndim(out) == 0 else out


def sa_bound(t, N: float):
    """Lower envelope ``N / log t`` that a convergent cooling schedule must stay above."""
    return N / np.log(np.asarray(t, dtype=np.float64))


def metropolis_accept(dE: float, T: float, u: float) -> bool:
    if T <= 0.0:
        return dE <= 0.0
    return u < min(1.0, math.exp(min(-dE / T, 0.0)))


@numba.njit(cache=True)
def _sweep_chunk(spins, lf, indptr, indices, weights, temps, rng, random_order):
    n = spins.size
    order = np.arange(n)
    accepted = 0
    for T in temps:
        if random_order:
            for a in range(n - 1, 0, -1):
                b = int(rng.random() * (a + 1))
                order[a], order[b] = order[b], order[a]
        for k in range(n):
            i = order[k]
            dE = 2.0 * spins[i] * lf[i]
            if dE > 0.0:
                if T <= 0.0:
                    continue
                if rng.random() >= math.exp(-dE / T):
                    continue
            s_old = spins[i]
            spins[i] = -s_old
            for p in range(indptr[i], indptr[i + 1]):
                lf[indices[p]] -= 2.0 * weights[p] * s_old
            accepted += 1
    return accepted


def anneal(problem: IsingProblem, schedule: Schedule, sweeps: int, seed: int,
           stride: int = 100, random_order: bool = False, init=None) -> RunRecord:
    """Single-spin Metropolis annealing for ``sweeps`` full lattice sweeps.

    Sweep ``t`` (0-based) runs at temperature ``schedule_value(schedule, t)``.
    The trace holds the state after every ``stride`` sweeps, the initial
    state and the final state.
    """
    if sweeps < 1:
        raise ValueError("need at least one sweep")
    rng = make_rng(seed)
    n = problem.n
    spins = (np.where(rng.random(n) < 0.5, 1.0, -1.0) if init is None
             else np.asarray(init, dtype=np.float64).copy())
    indptr, indices, weights = problem.adjacency
    lf = problem.coupling_matrix @ spins + problem.fields
    temps = np.asarray(schedule_value(schedule, np.arange(sweeps)), dtype=np.float64).reshape(-1)

    ts, ctl, es, ms = [0], [float(temps[0])], [float(energy(spins, problem))], [magnetization(spins)]
    accepted = 0
    done = 0
    while done < sweeps:
        step = min(stride, sweeps - done)
        accepted += _sweep_chunk(spins, lf, indptr, indices, weights,
                                 temps[done:done + step], rng, random_order)
        done += step
        ts.append(done)
        ctl.append(float(temps[done - 1]))
        es.append(float(energy(spins, problem)))
        ms.append(magnetization(spins))
    final = spins.astype(np.int8)
    trace = {"t": np.array(ts), "control": np.array(ctl),
             "energy": np.array(es), "magnetization": np.array(ms)}
    return RunRecord(int(seed) if not isinstance(seed, np.random.Generator) else -1,
                     schedule.descriptor(), sweeps, trace, final,
                     float(energy(final, problem)),
                     {"acceptance_rate": accepted / (sweeps * n)})


def anneal_restarts(problem: IsingProblem, schedule: Schedule, sweeps: int, seed: int,
                    restarts: int, **kw) -> RunRecord:
    """Best of ``restarts`` independent runs (seeds spawned from ``seed``)."""
    from ._rng import derive_seed

    best = None
    for r in range(restarts):
        rec = anneal(problem, schedule, sweeps, derive_seed(seed, r), **kw)
        if best is None or rec.final_energy < best.final_energy:
            best = rec
    return best


def default_schedule(problem: IsingProblem, sweeps: int, t_start: float = 3.0,
                     t_end: float = 0.02) -> Schedule:
    """Exponential cooling from ``t_start`` to ``t_end`` in units of the rms local field."""
    scale = problem.energy_scale()
    return Schedule.exponential_between(t_start * scale, t_end * scale, sweeps)


def residual_energy(record: RunRecord, e0: float, tol: float = 1e-9) -> float:
    res = record.final_energy - e0
    if res < -tol * max(1.0, abs(e0)):
        raise ValueError(f"final energy {record.final_energy} lies below the oracle value {e0}")
    return max(res, 0.0)


@dataclass(frozen=True)
class FitResult:
    exponent: float
    amplitude: float
    residual: float
    window: tuple


def fit_log_power(points) -> FitResult:
    """Least-squares fit of ``log eps = log a - zeta * log(log tau)``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise ValueError("need at least four (tau, eps) points")
    tau, eps = pts[:, 0], pts[:, 1]
    if np.any(eps <= 0) or np.any(tau < 2):
        raise ValueError("need eps > 0 and tau >= 2")
    x = np.log(np.log(tau))
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate abscissae")
    A = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(A, np.log(eps), rcond=None)
    resid = np.log(eps) - A @ coef
    return FitResult(float(coef[1]), float(math.exp(coef[0])),
                     float(math.sqrt(np.mean(resid ** 2))), (float(tau.min()), float(tau.max())))
