"""Suzuki-Trotter replica lattices and path-integral Monte Carlo annealing.

A transverse-field Ising problem at temperature ``T`` maps onto ``M``
coupled classical replicas (slices). Slice ``k`` carries the couplings
``J_ij / (M T)`` and neighbouring slices are tied site by site with
``K = 1/2 ln coth(Gamma / (M T))``. Configurations are sampled with weight
``exp(-H_eff)`` where

    H_eff = sum_k E_C(slice k) / (M T) - K sum_{i,k} S_{i,k} S_{i,k+1}

and slice ``M`` wraps back to slice ``0``. Every ``(i, k)`` link is counted
once, so for ``M = 2`` the two slices are joined by two links per site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ._rng import make_rng
from .classical import Schedule, _sweep_chunk, schedule_value
from .records import RunRecord
from .spins import IsingProblem, energy, magnetization

GAMMA_FLOOR = 1e-8


def inter_slice_coupling(gamma, T, M):
    """``K = 1/2 ln coth(Gamma/(M T))``, evaluated without overflow for large arguments."""
    x = np.asarray(gamma, dtype=np.float64) / (M * T)
    if np.any(x <= 0):
        raise ValueError("inter-slice coupling needs Gamma > 0; clamp to a floor first")
    q = np.exp(-2.0 * x)
    K = 0.5 * (np.log1p(q) - np.log1p(-q))
    return float(K) if K.ndim == 0 else K


def trotter_couplings(J, gamma: float, T: float, M: int):
    """Intra-slice couplings ``J/(M T)`` and inter-slice coupling ``K``."""
    if T <= 0 or M < 2:
        raise ValueError("need T > 0 and M >= 2")
    Kij = np.asarray(J, dtype=np.float64) / (M * T)
    return (float(Kij) if Kij.ndim == 0 else Kij), inter_slice_coupling(gamma, T, M)


def mn_schedule(t, M: int, T: float, R: float, L: float):
    """Slowest-allowed transverse-field decay ``M T artanh((t+2)^(-2/(R L)))``."""
    if R * L <= 0:
        raise ValueError("need R*L > 0")
    tt = np.asarray(t, dtype=np.float64)
    out = M * T * np.arctanh((tt + 2.0) ** (-2.0 / (R * L)))
    return float(out) if out.ndim == 0 else out


def check_schedule_against_mn(gammas, M: int, T: float, R: float, L: float,
                              rtol: float = 1e-12) -> np.ndarray:
    """Indices ``t`` where a user field schedule drops below the convergence bound."""
    g = np.asarray(gammas, dtype=np.float64)
    bound = mn_schedule(np.arange(g.size), M, T, R, L)
    return np.flatnonzero(g < bound * (1.0 - rtol))


@dataclass
class TrotterLattice:
    """``M`` replicas of ``problem`` at temperature ``T`` and transverse field ``gamma``."""

    problem: IsingProblem
    M: int
    T: float
    gamma: float
    spins: np.ndarray

    def __post_init__(self):
        if self.M < 2 or self.T <= 0:
            raise ValueError("need M >= 2 and T > 0")
        self.spins = np.asarray(self.spins, dtype=np.float64).reshape(self.M, self.problem.n)
        if not np.all(np.abs(self.spins) == 1.0):
            raise ValueError("slice spins must be +-1")

    @classmethod
    def random(cls, problem, M, T, gamma, seed) -> "TrotterLattice":
        rng = make_rng(seed)
        s = np.where(rng.random((M, problem.n)) < 0.5, 1.0, -1.0)
        return cls(problem, M, T, gamma, s)

    @property
    def K(self) -> float:
        return inter_slice_coupling(self.gamma, self.T, self.M)

    @property
    def slice_scale(self) -> float:
        """Factor ``1/(M T)`` multiplying every intra-slice coupling and field."""
        return 1.0 / (self.M * self.T)

    def slice_energies(self) -> np.ndarray:
        return energy(self.spins, self.problem)


def effective_energy(lattice: TrotterLattice) -> float:
    s = lattice.spins
    intra = lattice.slice_scale * float(np.sum(lattice.slice_energies()))
    links = float(np.sum(s * np.roll(s, -1, axis=0)))
    return intra - lattice.K * links


@numba.njit(cache=True)
def _pimc_chunk(spins, lf, indptr, indices, weights, scale, Ks, rng):
    M, n = spins.shape
    accepted = 0
    for K in Ks:
        for k in range(M):
            up = k - 1 if k > 0 else M - 1
            dn = k + 1 if k < M - 1 else 0
            for i in range(n):
                s = spins[k, i]
                dH = 2.0 * s * (scale * lf[k, i] + K * (spins[up, i] + spins[dn, i]))
                if dH > 0.0 and rng.random() >= math.exp(-dH):
                    continue
                spins[k, i] = -s
                for p in range(indptr[i], indptr[i + 1]):
                    lf[k, indices[p]] -= 2.0 * weights[p] * s
                accepted += 1
    return accepted


def _local_fields(lattice: TrotterLattice) -> np.ndarray:
    return lattice.spins @ lattice.problem.coupling_matrix + lattice.problem.fields


def pimc_sweeps(lattice: TrotterLattice, gammas, rng) -> int:
    """Run one sweep per entry of ``gammas`` in place; returns the accepted flip count.

    ``K`` is recomputed from each entry, so a schedule is just a list of
    fields. ``lattice.gamma`` ends at the last value.
    """
    g = np.maximum(np.asarray(gammas, dtype=np.float64).reshape(-1), GAMMA_FLOOR)
    if g.size == 0:
        return 0
    Ks = inter_slice_coupling(g, lattice.T, lattice.M)
    Ks = np.atleast_1d(np.asarray(Ks, dtype=np.float64))
    indptr, indices, weights = lattice.problem.adjacency
    lf = _local_fields(lattice)
    acc = _pimc_chunk(lattice.spins, lf, indptr, indices, weights, lattice.slice_scale, Ks, rng)
    lattice.gamma = float(g[-1])
    return acc


@dataclass(frozen=True)
class QaParams:
    """PIMC annealing settings. ``M * T`` around 1 is the intended operating point."""

    M: int
    T: float
    gamma_schedule: Schedule
    sweeps: int
    gamma_floor: float = GAMMA_FLOOR

    def __post_init__(self):
        if self.T <= 0 or self.M < 2 or self.sweeps < 1:
            raise ValueError("need T > 0, M >= 2 and at least one sweep")

    @classmethod
    def default(cls, sweeps: int, J: float = 1.0, gamma0: float = 2.5) -> "QaParams":
        """``T = 0.05 J`` with ``M = 20`` slices and a linear field ramp from ``gamma0 J``."""
        T = 0.05 * J
        return cls(20, T, Schedule.linear(gamma0 * J, sweeps), sweeps)

    def gammas(self) -> np.ndarray:
        g = np.asarray(schedule_value(self.gamma_schedule, np.arange(self.sweeps)), dtype=np.float64)
        return np.maximum(g.reshape(-1), self.gamma_floor)


def pimc_anneal(problem: IsingProblem, params: QaParams, seed, stride: int = 100) -> RunRecord:
    """Quantum annealing by PIMC; the reported state is the best slice after a polish sweep.

    The polish is one Metropolis sweep of each slice on its own classical
    energy at temperature ``T``; the inter-slice term is frozen out at that
    point anyway.
    """
    rng = make_rng(seed)
    lat = TrotterLattice.random(problem, params.M, params.T, params.gamma_floor, rng)
    gammas = params.gammas()
    lat.gamma = float(gammas[0])

    def snapshot(t, g):
        e = lat.slice_energies()
        b = int(np.argmin(e))
        return (t, g, inter_slice_coupling(g, lat.T, lat.M), float(e[b]),
                magnetization(lat.spins[b]), float(np.mean(e)))

    rows = [snapshot(0, float(gammas[0]))]
    done = 0
    while done < params.sweeps:
        step = min(stride, params.sweeps - done)
        pimc_sweeps(lat, gammas[done:done + step], rng)
        done += step
        rows.append(snapshot(done, float(gammas[done - 1])))

    indptr, indices, weights = problem.adjacency
    for k in range(lat.M):
        row = lat.spins[k].copy()
        lf = problem.coupling_matrix @ row + problem.fields
        _sweep_chunk(row, lf, indptr, indices, weights, np.array([params.T]), rng, False)
        lat.spins[k] = row
    e = lat.slice_energies()
    b = int(np.argmin(e))
    cols = list(zip(*rows))
    trace = {"t": np.array(cols[0]), "control": np.array(cols[1]), "K": np.array(cols[2]),
             "energy": np.array(cols[3]), "magnetization": np.array(cols[4]),
             "mean_slice_energy": np.array(cols[5])}
    desc = {"M": params.M, "T": params.T, "gamma": params.gamma_schedule.descriptor(),
            "gamma_floor": params.gamma_floor}
    return RunRecord(int(seed) if not isinstance(seed, np.random.Generator) else -1,
                     desc, params.sweeps, trace, lat.spins[b].astype(np.int8), float(e[b]),
                     {"slices": lat.spins.astype(np.int8), "slice_energies": e})


# ---------------------------------------------------------------------------
# fixed-parameter sampling for validation
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _pimc_measure(spins, lf, h, indptr, indices, weights, scale, K, eg, n_sweeps, burn, n_bins, rng):
    M, n = spins.shape
    t_same = math.tanh(eg)
    t_diff = 1.0 / t_same
    per_bin = n_sweeps // n_bins
    e_bins = np.zeros(n_bins)
    slice_bins = np.zeros((n_bins, M))
    x_bins = np.zeros(n_bins)
    corr = np.zeros((n, n))
    mags = np.zeros(n)
    for sweep in range(burn + per_bin * n_bins):
        # one sweep
        for k in range(M):
            up = k - 1 if k > 0 else M - 1
            dn = k + 1 if k < M - 1 else 0
            for i in range(n):
                s = spins[k, i]
                dH = 2.0 * s * (scale * lf[k, i] + K * (spins[up, i] + spins[dn, i]))
                if dH > 0.0 and rng.random() >= math.exp(-dH):
                    continue
                spins[k, i] = -s
                for p in range(indptr[i], indptr[i + 1]):
                    lf[k, indices[p]] -= 2.0 * weights[p] * s
        if sweep < burn:
            continue
        b = (sweep - burn) // per_bin
        etot = 0.0
        xs = 0.0
        for k in range(M):
            ek = 0.0
            nk = k + 1 if k < M - 1 else 0
            for i in range(n):
                ek -= 0.5 * spins[k, i] * (lf[k, i] + h[i])
                xs += t_same if spins[k, i] == spins[nk, i] else t_diff
                mags[i] += spins[k, i]
                for j in range(n):
                    corr[i, j] += spins[k, i] * spins[k, j]
            slice_bins[b, k] += ek
            etot += ek
        e_bins[b] += etot / M
        x_bins[b] += xs / (M * n)
    total = per_bin * n_bins
    return e_bins / per_bin, slice_bins / per_bin, x_bins / per_bin, corr / (total * M), mags / (total * M)


@dataclass
class EquilibriumEstimate:
    energy: float
    energy_stderr: float
    slice_energy: np.ndarray
    slice_stderr: np.ndarray
    transverse: float
    transverse_stderr: float
    correlations: np.ndarray
    magnetizations: np.ndarray
    sweeps: int
    extra: dict = field(default_factory=dict)


def _stderr(bins, axis=0):
    return np.std(bins, axis=axis, ddof=1) / math.sqrt(bins.shape[axis])


def pimc_equilibrium_estimate(problem: IsingProblem, gamma: float, T: float, M: int,
                              sweeps: int, seed, burn_in: int | None = None,
                              n_bins: int = 50) -> EquilibriumEstimate:
    """Fixed-field PIMC averages with binned standard errors.

    Returns the classical energy per slice, the transverse magnetisation per
    spin (link estimator ``tanh`` or ``coth`` of ``Gamma/(M T)``), the
    equal-time correlation matrix and the site magnetisations.
    """
    rng = make_rng(seed)
    lat = TrotterLattice.random(problem, M, T, gamma, rng)
    burn = sweeps // 10 if burn_in is None else burn_in
    indptr, indices, weights = problem.adjacency
    lf = _local_fields(lat)
    e, sl, x, corr, mags = _pimc_measure(lat.spins, lf, problem.fields, indptr, indices, weights,
                                         lat.slice_scale, lat.K, gamma / (M * T),
                                         sweeps, burn, n_bins, rng)
    return EquilibriumEstimate(float(e.mean()), float(_stderr(e)), sl.mean(axis=0), _stderr(sl),
                               float(x.mean()), float(_stderr(x)), corr, mags, sweeps)


def trotter_exact_average(problem: IsingProblem, gamma: float, T: float, M: int) -> float:
    """``<H_C>`` of the ``M``-slice discretised partition function, by exact transfer matrices.

    This is the value PIMC converges to at fixed ``M``; the ``M -> infinity``
    limit is the quantum thermal average.
    """
    n = problem.n
    if n > 12:
        raise ValueError("transfer-matrix evaluation limited to N <= 12")
    from .schrodinger import basis_configs

    diag = energy(basis_configs(n), problem)
    eps = 1.0 / (M * T)
    one = np.array([[math.cosh(eps * gamma), math.sinh(eps * gamma)],
                    [math.sinh(eps * gamma), math.cosh(eps * gamma)]])
    kin = np.ones((1, 1))
    for _ in range(n):
        kin = np.kron(one, kin)
    shift = diag.min()
    step = np.exp(-eps * (diag - shift))[:, None] * kin
    step /= np.abs(step).max()
    P = np.eye(step.shape[0])
    for _ in range(M):
        P = P @ step
        P /= np.abs(P).max()
    return float(np.sum(diag * np.diag(P)) / np.trace(P))
