"""Ising problems, disorder, order parameters and the exhaustive ground-state oracle.

Conventions used throughout the package:

* spins take the values ``+1`` and ``-1`` (Pauli convention),
* the classical cost is ``H_C = -sum_{bonds} J_ij S_i S_j - sum_i h_i S_i``,
* Gaussian couplings have variance ``J**2`` on lattices and ``J**2 / N`` on
  the complete graph when SK normalisation is on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numba
import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from ._rng import make_rng

COMPLETE = "complete-graph"
SQUARE = "square-lattice-periodic"
TOPOLOGIES = (COMPLETE, SQUARE)


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Couplings, fields and topology defining ``H_C``.

    Bonds are kept as a list rather than a pair map. On a periodic ``L = 2``
    lattice the right and left neighbours coincide, so the same site pair
    legitimately carries two independent bonds.
    """

    n: int
    topology: str
    bond_i: np.ndarray
    bond_j: np.ndarray
    bond_J: np.ndarray
    fields: np.ndarray
    sk_normalized: bool = False
    L: int = 0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.n < 1:
            raise ValueError("problem needs at least one spin")
        bi = np.asarray(self.bond_i, dtype=np.int64)
        bj = np.asarray(self.bond_j, dtype=np.int64)
        lo, hi = np.minimum(bi, bj), np.maximum(bi, bj)
        if lo.size and (lo.min() < 0 or hi.max() >= self.n or np.any(lo == hi)):
            raise ValueError("bond indices must be distinct sites in [0, N)")
        object.__setattr__(self, "bond_i", _frozen(lo, np.int64))
        object.__setattr__(self, "bond_j", _frozen(hi, np.int64))
        object.__setattr__(self, "bond_J", _frozen(self.bond_J, np.float64))
        h = np.zeros(self.n) if self.fields is None else self.fields
        object.__setattr__(self, "fields", _frozen(h, np.float64))
        if self.fields.shape != (self.n,):
            raise ValueError("fields must have one entry per site")
        if not (self.bond_i.shape == self.bond_j.shape == self.bond_J.shape):
            raise ValueError("bond arrays differ in length")

    @property
    def n_bonds(self) -> int:
        return int(self.bond_J.size)

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric matrix with zero diagonal (parallel bonds summed)."""
        Jm = np.zeros((self.n, self.n))
        np.add.at(Jm, (self.bond_i, self.bond_j), self.bond_J)
        Jm = Jm + Jm.T
        Jm.setflags(write=False)
        return Jm

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR neighbour lists ``(indptr, indices, weights)`` used by the kernels."""
        src = np.concatenate([self.bond_i, self.bond_j])
        dst = np.concatenate([self.bond_j, self.bond_i])
        w = np.concatenate([self.bond_J, self.bond_J])
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return indptr, dst.astype(np.int64), w.astype(np.float64)

    @property
    def has_fields(self) -> bool:
        return bool(np.any(self.fields != 0.0))

    def with_fields(self, h) -> "IsingProblem":
        return IsingProblem(self.n, self.topology, self.bond_i, self.bond_j,
                            self.bond_J, np.asarray(h, float), self.sk_normalized, self.L)

    def energy_scale(self) -> float:
        """Root-mean-square local field, used to set default temperatures."""
        Jm = self.coupling_matrix
        return float(math.sqrt(np.mean(np.sum(Jm * Jm, axis=1) + self.fields ** 2)))


@dataclass(frozen=True)
class DisorderModel:
    """Coupling distribution: ``gaussian`` (std J) or ``binary`` (+J with prob. p, else -J)."""

    kind: str
    seed: int
    J: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("gaussian", "binary"):
            raise ValueError(f"unknown disorder kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("binary disorder needs p in [0, 1]")


def lattice_bonds(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Right and down bonds of an ``L x L`` periodic square lattice, 2L^2 in total."""
    r, c = np.divmod(np.arange(L * L), L)
    site = r * L + c
    right = r * L + (c + 1) % L
    down = ((r + 1) % L) * L + c
    return np.concatenate([site, site]), np.concatenate([right, down])


def complete_bonds(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, k=1)
    return i.astype(np.int64), j.astype(np.int64)


def _side(n: int) -> int:
    L = math.isqrt(n)
    if L * L != n:
        raise ValueError(f"N={n} is not a perfect square")
    return L


def sample_disorder(model: DisorderModel, topology: str, n: int,
                    sk_normalize: bool = True) -> IsingProblem:
    """Draw couplings for ``topology`` on ``n`` sites.

    For Gaussian disorder on the complete graph the standard deviation is
    ``J / sqrt(n)`` when ``sk_normalize`` is true. Binary couplings are
    always ``+-J``.
    """
    if n < 2:
        raise ValueError("need N >= 2")
    if topology == SQUARE:
        L = _side(n)
        bi, bj = lattice_bonds(L)
    elif topology == COMPLETE:
        L = 0
        bi, bj = complete_bonds(n)
    else:
        raise ValueError(f"unknown topology {topology!r}")
    rng = make_rng(model.seed)
    scaled = False
    if model.kind == "gaussian":
        std = model.J
        if topology == COMPLETE and sk_normalize:
            std = model.J / math.sqrt(n)
            scaled = True
        Jb = rng.normal(0.0, std, size=bi.size)
    else:
        Jb = np.where(rng.random(bi.size) < model.p, model.J, -model.J)
    return IsingProblem(n, topology, bi, bj, Jb, np.zeros(n), scaled, L)


def ferromagnet(n: int, J: float = 1.0, h=None) -> IsingProblem:
    """Uniform complete-graph ferromagnet with unnormalised couplings ``J``."""
    bi, bj = complete_bonds(n)
    return IsingProblem(n, COMPLETE, bi, bj, np.full(bi.size, J), h, False, 0)


def from_matrix(Jm, h=None) -> IsingProblem:
    """Complete-graph problem from a symmetric coupling matrix."""
    Jm = np.asarray(Jm, float)
    n = Jm.shape[0]
    if Jm.shape != (n, n) or not np.allclose(Jm, Jm.T, atol=0.0):
        raise ValueError("coupling matrix must be square and symmetric")
    bi, bj = complete_bonds(n)
    return IsingProblem(n, COMPLETE, bi, bj, Jm[bi, bj], h, False, 0)


def random_field_lattice(L: int, J: float, h: float, seed: int) -> IsingProblem:
    """Ferromagnetic lattice with on-site fields drawn from ``{+h, -h}`` with equal odds."""
    bi, bj = lattice_bonds(L)
    rng = make_rng(seed)
    fields = np.where(rng.random(L * L) < 0.5, h, -h)
    return IsingProblem(L * L, SQUARE, bi, bj, np.full(bi.size, J), fields, False, L)


# ---------------------------------------------------------------------------
# energies and order parameters
# ---------------------------------------------------------------------------

def _as_config(config, n: int) -> np.ndarray:
    s = np.asarray(config)
    if s.shape[-1] != n:
        raise ValueError(f"config length {s.shape[-1]} does not match N={n}")
    return s


def energy(config, problem: IsingProblem):
    """Classical energy of one configuration, or of a stack along the last axis."""
    s = _as_config(config, problem.n).astype(np.float64)
    bond = s[..., problem.bond_i] * s[..., problem.bond_j]
    return -(bond @ problem.bond_J) - s @ problem.fields


def local_field(config, problem: IsingProblem) -> np.ndarray:
    """``sum_j J_ij S_j + h_i`` for every site."""
    s = _as_config(config, problem.n).astype(np.float64)
    return problem.coupling_matrix @ s + problem.fields


def flip_delta(config, problem: IsingProblem, i: int) -> float:
    """Energy change from flipping spin ``i``: ``2 S_i (sum_j J_ij S_j + h_i)``."""
    s = _as_config(config, problem.n).astype(np.float64)
    return float(2.0 * s[i] * (problem.coupling_matrix[i] @ s + problem.fields[i]))


def overlap(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("replicas differ in length")
    return float(np.mean(a.astype(np.float64) * b))


def magnetization(config) -> float:
    return float(np.mean(np.asarray(config, dtype=np.float64)))


def ea_order_parameter(site_magnetizations) -> float:
    """Edwards-Anderson ``q = (1/N) sum_i <S_i>^2``."""
    m = np.asarray(site_magnetizations, dtype=np.float64)
    if m.size == 0:
        raise ValueError("empty magnetisation list")
    if np.any(np.abs(m) > 1.0):
        raise ValueError("site magnetisations must lie in [-1, 1]")
    return float(np.mean(m * m))


@dataclass(frozen=True)
class OverlapHistogram:
    edges: np.ndarray
    counts: np.ndarray
    n_pairs: int
    values: np.ndarray = field(repr=False)


def overlap_histogram(replicas, bins: int = 21) -> OverlapHistogram:
    """Histogram of ``q`` over all unordered replica pairs, each pair weighted equally."""
    R = np.asarray(replicas, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] < 2:
        raise ValueError("need at least two replicas of equal length")
    a, b = np.triu_indices(R.shape[0], k=1)
    q = np.einsum("pi,pi->p", R[a], R[b]) / R.shape[1]
    edges = np.linspace(-1.0, 1.0, bins + 1)
    counts, _ = np.histogram(np.clip(q, -1.0, 1.0), bins=edges)
    return OverlapHistogram(edges, counts, int(q.size), q)


# ---------------------------------------------------------------------------
# mean-field theory of the transverse-field SK model
# ---------------------------------------------------------------------------

_GH_X, _GH_W = hermegauss(200)
_GH_W = _GH_W / math.sqrt(2.0 * math.pi)


def _mf_map(q: float, T: float, gamma: float, J: float, h: float) -> float:
    hz = J * math.sqrt(q) * _GH_X + h
    hh = np.sqrt(hz * hz + gamma * gamma)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(hh > 0.0, (hz * hz) / np.where(hh > 0, hh * hh, 1.0), 0.0)
    return float(_GH_W @ (ratio * np.tanh(hh / T) ** 2))


def mf_order_parameter(T: float, gamma: float, J: float = 1.0, h: float = 0.0,
                       tol: float = 1e-10, max_iter: int = 100_000,
                       damping: float = 0.5) -> float:
    """Self-consistent spin-glass order parameter of the transverse-field SK model.

    Solves ``q = E_r[(h_z/|h|)^2 tanh^2(|h|/T)]`` with ``h_z = J sqrt(q) r + h``
    and ``|h| = sqrt(h_z^2 + Gamma^2)`` by damped fixed-point iteration,
    starting from the frozen state ``q = 1``.

    At zero longitudinal field the linearisation around ``q = 0`` has slope
    ``(J tanh(Gamma/T)/Gamma)^2`` (``(J/T)^2`` at ``Gamma = 0``); when that
    slope is at most one the paramagnet is the only solution and 0 is returned
    without iterating.
    """
    if T <= 0 or gamma < 0 or J <= 0:
        raise ValueError("need T > 0, Gamma >= 0, J > 0")
    if h == 0.0:
        slope = (J / T) ** 2 if gamma == 0 else (J * math.tanh(gamma / T) / gamma) ** 2
        if slope <= 1.0:
            return 0.0
    q = 1.0
    for _ in range(max_iter):
        q_new = (1.0 - damping) * q + damping * _mf_map(q, T, gamma, J, h)
        if abs(q_new - q) < tol:
            return q_new
        q = q_new
    raise RuntimeError(f"mean-field iteration did not converge at T={T}, Gamma={gamma}")


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            break
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phase_boundary(T: float, J: float = 1.0, tol: float = 1e-9) -> float | None:
    """Critical transverse field ``Gamma_c(T)`` solving ``Gamma/J = tanh(Gamma/T)``.

    Returns ``None`` when ``T >= J`` (no glass phase at any field). ``T = 0``
    is the limit ``Gamma_c = J``.
    """
    if T < 0 or J <= 0:
        raise ValueError("need T >= 0 and J > 0")
    if T == 0:
        return float(J)
    if T >= J:
        return None

    def g(gam):
        return gam / J - math.tanh(gam / T)

    lo = T * 1e-9
    while g(lo) >= 0 and lo > 1e-300:
        lo *= 1e-3
    return _bisect(g, lo, J, tol)


def phase_boundary_inverse(gamma: float, J: float = 1.0, tol: float = 1e-9) -> float | None:
    """Critical temperature ``T_c(Gamma)`` on the same boundary; ``None`` when ``Gamma >= J``."""
    if gamma < 0 or J <= 0:
        raise ValueError("need Gamma >= 0 and J > 0")
    if gamma == 0:
        return float(J)
    if gamma >= J:
        return None

    def g(T):
        # increases with T: negative (glass side) below T_c
        return gamma / J - math.tanh(gamma / T)

    return _bisect(g, 1e-12 * J, J, tol)


# ---------------------------------------------------------------------------
# exhaustive ground state
# ---------------------------------------------------------------------------

MAX_BRUTE_FORCE = 24


@numba.njit(cache=True)
def _gray_scan(Jm, h, threshold, collect):
    n = h.size
    s = np.ones(n)
    lf = np.empty(n)
    for i in range(n):
        acc = h[i]
        for j in range(n):
            acc += Jm[i, j]
        lf[i] = acc
    e = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            e -= Jm[i, j]
        e -= h[i]
    best = e
    found = np.empty(64, dtype=np.int64)
    nfound = 0
    if collect and e <= threshold:
        found[0] = 0
        nfound = 1
    code = 0
    total = 1 << n
    for step in range(1, total):
        k = 0
        while ((step >> k) & 1) == 0:
            k += 1
        e += 2.0 * s[k] * lf[k]
        sk_old = s[k]
        s[k] = -sk_old
        for j in range(n):
            lf[j] -= 2.0 * Jm[j, k] * sk_old
        code ^= 1 << k
        if e < best:
            best = e
        if collect and e <= threshold:
            if nfound == found.size:
                grown = np.empty(2 * found.size, dtype=np.int64)
                grown[:nfound] = found[:nfound]
                found = grown
            found[nfound] = code
            nfound += 1
    return best, found[:nfound]


def codes_to_configs(codes, n: int) -> np.ndarray:
    """Bit ``i`` of a code set means spin ``i`` is -1."""
    codes = np.asarray(codes, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def brute_force_ground_state(problem: IsingProblem, rel_tol: float = 1e-9):
    """Exact ``E0`` and every configuration attaining it, by Gray-code enumeration of 2^N states.

    Candidates found by the incremental scan are re-evaluated with
    :func:`energy`, so the returned value does not carry accumulated
    rounding from the 2^N updates.
    """
    n = problem.n
    if n > MAX_BRUTE_FORCE:
        raise ValueError(f"N={n} exceeds the exhaustive limit {MAX_BRUTE_FORCE}")
    Jm = np.ascontiguousarray(problem.coupling_matrix)
    h = np.ascontiguousarray(problem.fields)
    approx, _ = _gray_scan(Jm, h, 0.0, False)
    slack = 1e-7 * max(1.0, abs(approx))
    _, codes = _gray_scan(Jm, h, approx + slack, True)
    configs = codes_to_configs(np.sort(codes), n)
    exact = energy(configs, problem)
    e0 = float(exact.min())
    keep = exact <= e0 + rel_tol * max(1.0, abs(e0))
    return e0, [c for c in configs[keep]]


# ---------------------------------------------------------------------------
# plain-text serialisation
# ---------------------------------------------------------------------------

def _g(x: float) -> str:
    return format(float(x), ".17g")


def dumps_problem(problem: IsingProblem) -> str:
    lines = [
        f"topology {problem.topology}",
        f"N {problem.n}",
        f"L {problem.L}",
        f"convention {'sk' if problem.sk_normalized else 'plain'}",
        f"bonds {problem.n_bonds}",
    ]
    for i, j, Jv in zip(problem.bond_i, problem.bond_j, problem.bond_J):
        lines.append(f"{i} {j} {_g(Jv)}")
    nz = np.flatnonzero(problem.fields)
    lines.append(f"fields {nz.size}")
    for i in nz:
        lines.append(f"{i} {_g(problem.fields[i])}")
    return "\n".join(lines) + "\n"


def loads_problem(text: str) -> IsingProblem:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    head = {}
    k = 0
    while rows[k][0] != "bonds":
        head[rows[k][0]] = rows[k][1]
        k += 1
    nb = int(rows[k][1])
    bonds = rows[k + 1:k + 1 + nb]
    k += 1 + nb
    if rows[k][0] != "fields":
        raise ValueError("missing fields section")
    nf = int(rows[k][1])
    n = int(head["N"])
    h = np.zeros(n)
    for r in rows[k + 1:k + 1 + nf]:
        h[int(r[0])] = float(r[1])
    bi = np.array([int(r[0]) for r in bonds], dtype=np.int64)
    bj = np.array([int(r[1]) for r in bonds], dtype=np.int64)
    Jb = np.array([float(r[2]) for r in bonds])
    return IsingProblem(n, head["topology"], bi, bj, Jb, h,
                        head.get("convention") == "sk", int(head.get("L", 0)))


def save_problem(problem: IsingProblem, path) -> None:
    Path(path).write_text(dumps_problem(problem))


def load_problem(path) -> IsingProblem:
    return loads_problem(Path(path).read_text())
