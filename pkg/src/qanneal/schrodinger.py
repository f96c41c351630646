"""State-vector evolution, spectra and adiabatic diagnostics.

Basis conventions: for ``N`` spins the computational basis index ``b`` has
bit ``i`` set when spin ``i`` points down (``S_i = -1``). Pauli matrices are
used throughout, so a single free spin in a field ``Gamma`` has gap
``2 Gamma``. ``hbar = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numba
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import LinearOperator, eigsh

from .records import write_columns
from .spins import IsingProblem, energy

MAX_SPARSE = 20
MAX_MATRIX_FREE = 24


def basis_configs(n: int) -> np.ndarray:
    b = np.arange(1 << n, dtype=np.int64)
    bits = (b[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _flip_operator(n: int, fmt: str = "csr") -> sp.spmatrix:
    """``sum_i sigma^x_i`` on ``n`` spins."""
    dim = 1 << n
    rows = np.repeat(np.arange(dim, dtype=np.int64), n)
    cols = rows ^ np.tile(1 << np.arange(n, dtype=np.int64), dim)
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(dim, dim)).asformat(fmt)


def transverse_operator(n: int) -> sp.csr_matrix:
    """Kinetic term ``-sum_i sigma^x_i`` with unit strength."""
    return -_flip_operator(n)


def _pair_flip_operator(problem: IsingProblem) -> sp.csr_matrix:
    n = problem.n
    dim = 1 << n
    masks = (1 << problem.bond_i) | (1 << problem.bond_j)
    rows = np.repeat(np.arange(dim, dtype=np.int64), masks.size)
    cols = rows ^ np.tile(masks, dim)
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(dim, dim))


class _MatrixFreeTim(LinearOperator):
    def __init__(self, diag, n, gamma):
        super().__init__(np.complex128, (diag.size, diag.size))
        self.diag, self.n, self.gamma = diag, n, gamma

    def _matvec(self, x):
        x = np.asarray(x).reshape(-1)
        out = self.diag * x
        idx = np.arange(x.size)
        for i in range(self.n):
            out = out - self.gamma * x[idx ^ (1 << i)]
        return out

    _rmatvec = _matvec


def build_tim_matrix(problem: IsingProblem, gamma: float, pair_gamma: float = 0.0,
                     matrix_free: bool = False):
    """Transverse-field Ising Hamiltonian ``H_C - Gamma sum_i sigma^x_i``.

    ``pair_gamma`` adds the ferromagnetic transverse coupling
    ``-pair_gamma sum_bonds sigma^x_i sigma^x_j`` on the bonds of the problem.
    Returns a CSR matrix for ``N <= 20`` or a matrix-free operator for
    ``N <= 24`` when ``matrix_free`` is requested.
    """
    n = problem.n
    limit = MAX_MATRIX_FREE if matrix_free else MAX_SPARSE
    if n > limit:
        raise ValueError(f"N={n} exceeds the state-vector limit {limit}")
    diag = classical_diagonal(problem)
    if matrix_free:
        if pair_gamma:
            raise ValueError("pair kinetic term needs the sparse builder")
        return _MatrixFreeTim(diag, n, gamma)
    H = sp.diags(diag) - gamma * _flip_operator(n)
    if pair_gamma:
        H = H - pair_gamma * _pair_flip_operator(problem)
    return H.tocsr()


def classical_diagonal(problem: IsingProblem) -> np.ndarray:
    n = problem.n
    dim = 1 << n
    out = np.empty(dim)
    chunk = 1 << 16
    for start in range(0, dim, chunk):
        b = np.arange(start, min(dim, start + chunk), dtype=np.int64)
        s = (1 - 2 * ((b[:, None] >> np.arange(n)) & 1)).astype(np.int8)
        out[start:start + b.size] = energy(s, problem)
    return out


def thermal_average(problem: IsingProblem, gamma: float, T: float) -> dict:
    """Exact thermal expectations of ``H_C`` and of ``sigma^x`` per spin."""
    H = build_tim_matrix(problem, gamma).toarray()
    w, v = np.linalg.eigh(H)
    p = np.exp(-(w - w[0]) / T)
    p /= p.sum()
    diag = classical_diagonal(problem)
    hc = float(p @ ((v * v).T @ diag))
    X = _flip_operator(problem.n).toarray()
    sx = float(p @ np.einsum("bn,bc,cn->n", v, X, v)) / problem.n
    return {"H_C": hc, "sigma_x": sx, "energy": float(p @ w)}


# ---------------------------------------------------------------------------
# time-dependent Hamiltonians and the integrator
# ---------------------------------------------------------------------------

class TimeDependentHamiltonian:
    """``H(s) = sum_k c_k(s) A_k`` for ``s = t / tau`` in ``[0, 1]``.

    The terms are stored separately so applying ``H(s)`` costs one product
    per term and no matrix is rebuilt inside the integrator.
    """

    def __init__(self, terms: list[tuple[Callable[[float], float], object]], tau: float = 1.0,
                 kind: str = "custom"):
        self.terms = terms
        self.tau = float(tau)
        self.kind = kind
        self.dim = terms[0][1].shape[0]

    @classmethod
    def linear(cls, A, B, tau: float = 1.0) -> "TimeDependentHamiltonian":
        """``(1 - s) A + s B``."""
        return cls([(lambda s: 1.0 - s, A), (lambda s: s, B)], tau, "linear")

    @classmethod
    def constant(cls, A, tau: float = 1.0) -> "TimeDependentHamiltonian":
        return cls([(lambda s: 1.0, A)], tau, "constant")

    def with_tau(self, tau: float) -> "TimeDependentHamiltonian":
        return TimeDependentHamiltonian(self.terms, tau, self.kind)

    def apply(self, s: float, psi: np.ndarray) -> np.ndarray:
        out = None
        for c, A in self.terms:
            cs = c(s)
            if cs == 0.0:
                continue
            y = cs * (A @ psi)
            out = y if out is None else out + y
        return np.zeros_like(psi) if out is None else out

    def matrix(self, s: float) -> np.ndarray:
        """Dense ``H(s)``; only for dimensions that fit in memory."""
        M = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for c, A in self.terms:
            if isinstance(A, LinearOperator):
                A = A @ np.eye(self.dim)
            elif sp.issparse(A):
                A = A.toarray()
            M += c(s) * np.asarray(A)
        if np.allclose(M.imag, 0.0, atol=0.0):
            return M.real
        return M

    def __call__(self, s: float):
        return self.matrix(s)


@dataclass
class StateVector:
    amplitudes: np.ndarray
    basis: str = "computational"
    t: float = 0.0
    trace: dict | None = None
    max_norm_drift: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def uniform_state(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)


def evolve(H: TimeDependentHamiltonian, psi0, steps: int, target: int | None = None,
           record_every: int = 1, blowup: float = 1e-3) -> StateVector:
    """Integrate ``i dpsi/dt = H(t/tau) psi`` over ``[0, tau]`` with classical RK4.

    The state is renormalised after every step. A norm deviation larger than
    ``blowup`` in a single step means the step is too large for the spectrum
    and raises. When ``target`` is given the trace records ``t``,
    ``P_target`` and the pre-renormalisation ``norm``.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    psi = np.array(psi0, dtype=np.complex128)
    nrm0 = np.linalg.norm(psi)
    if abs(nrm0 - 1.0) > 1e-10:
        raise ValueError("initial state must be normalised")
    tau = H.tau
    dt = tau / steps
    rows = [] if target is not None else None
    if rows is not None:
        rows.append((0.0, float(abs(psi[target]) ** 2), 1.0))
    drift = 0.0
    for k in range(steps):
        t = k * dt
        s0, sh, s1 = t / tau, (t + 0.5 * dt) / tau, (t + dt) / tau
        k1 = -1j * H.apply(s0, psi)
        k2 = -1j * H.apply(sh, psi + 0.5 * dt * k1)
        k3 = -1j * H.apply(sh, psi + 0.5 * dt * k2)
        k4 = -1j * H.apply(s1, psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = np.linalg.norm(psi)
        dev = abs(nrm - 1.0)
        if not np.isfinite(nrm) or dev > blowup:
            raise RuntimeError(f"norm blow-up at step {k}: |psi| = {nrm}; reduce the step size")
        drift = max(drift, dev / dt)
        psi /= nrm
        if rows is not None and ((k + 1) % record_every == 0 or k + 1 == steps):
            rows.append(((k + 1) * dt, float(abs(psi[target]) ** 2), float(nrm)))
    trace = None
    if rows is not None:
        c = list(zip(*rows))
        trace = {"t": np.array(c[0]), "P_target": np.array(c[1]), "norm": np.array(c[2])}
    return StateVector(psi, t=tau, trace=trace, max_norm_drift=drift)


def default_steps(H: TimeDependentHamiltonian, ratio: float = 0.05) -> int:
    """Step count keeping ``dt * ||H||`` at ``ratio`` (norm bound from the term norms)."""
    bound = 0.0
    for c, A in H.terms:
        if isinstance(A, LinearOperator):
            nA = abs(eigsh(A, k=1, which="LM", return_eigenvectors=False)[0])
        elif sp.issparse(A):
            nA = sp.linalg.norm(A, 1)
        else:
            nA = np.linalg.norm(np.asarray(A), 1)
        bound += max(abs(c(0.0)), abs(c(1.0))) * nA
    return max(1, int(math.ceil(H.tau * bound / ratio)))


# ---------------------------------------------------------------------------
# spectra and the adiabatic criterion
# ---------------------------------------------------------------------------

def _lowest_two(H):
    if isinstance(H, LinearOperator) or (sp.issparse(H) and H.shape[0] > 4096):
        w, v = eigsh(H, k=2, which="SA", tol=1e-12)
        order = np.argsort(w)
        return w[order], v[:, order]
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    if A.shape[0] > 1 << 14:
        raise ValueError("dense spectrum limited to dimension 2^14")
    if A.shape[0] == 1:
        return np.array([A[0, 0].real, np.inf]), np.ones((1, 2))
    w, v = sla.eigh(A, subset_by_index=[0, 1])
    return w, v


def spectrum_and_gap(H):
    """``(E0, E1, E1 - E0, ground vector)`` for a fixed Hermitian operator."""
    w, v = _lowest_two(H)
    return float(w[0]), float(w[1]), float(max(w[1] - w[0], 0.0)), v[:, 0]


def adiabatic_factor(H: TimeDependentHamiltonian, s_grid, ds: float = 1e-5,
                     diagonal: bool = False) -> float:
    """``max_s |<phi0| dH/ds |phi1>| / min_s Delta^2`` on ``s_grid``.

    ``dH/ds`` is a central difference with step ``ds``. With ``diagonal``
    the numerator uses the ground-state expectation ``<phi0|dH/ds|phi0>``
    instead of the transition element. A gap below 1e-12 anywhere on the
    grid gives ``inf``.
    """
    num, gap2 = 0.0, np.inf
    for s in np.asarray(s_grid, dtype=np.float64):
        Hs = H.matrix(s)
        w, v = np.linalg.eigh(Hs)
        d = w[1] - w[0]
        if d < 1e-12:
            return math.inf
        dH = (H.matrix(s + ds) - H.matrix(s - ds)) / (2.0 * ds)
        other = v[:, 0] if diagonal else v[:, 1]
        num = max(num, abs(np.vdot(v[:, 0], dH @ other)))
        gap2 = min(gap2, d * d)
    return float(num / gap2)


def min_gap(H: TimeDependentHamiltonian, grid: int = 41, xatol: float = 1e-7) -> tuple[float, float]:
    """Minimum of the lowest gap over ``s`` in ``[0, 1]``: coarse grid then bounded refinement."""

    def gap(s):
        Hs = H.matrix(float(s))
        w = sla.eigh(Hs, eigvals_only=True, subset_by_index=[0, 1])
        return float(w[1] - w[0])

    ss = np.linspace(0.0, 1.0, grid)
    g = np.array([gap(s) for s in ss])
    k = int(np.argmin(g))
    lo, hi = ss[max(k - 1, 0)], ss[min(k + 1, grid - 1)]
    res = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    if res.fun < g[k]:
        return float(res.fun), float(res.x)
    return float(g[k]), float(ss[k])


# ---------------------------------------------------------------------------
# Grover-type search
# ---------------------------------------------------------------------------

class _RankTwo(LinearOperator):
    def __init__(self, D, w, E):
        super().__init__(np.complex128, (D, D))
        self.w, self.E = w, E
        self.s = 1.0 / math.sqrt(D)

    def _matvec(self, x):
        x = np.asarray(x).reshape(-1)
        out = np.full(x.shape, self.E * self.s * self.s * x.sum(), dtype=np.complex128)
        out[self.w] += self.E * x[self.w]
        return out

    _rmatvec = _matvec


def grover_hamiltonian(D: int, w: int, E: float = 1.0) -> LinearOperator:
    """``E |w><w| + E |s><s|`` with ``|s>`` the uniform superposition, as a matrix-free operator."""
    if not 0 <= w < D or E <= 0:
        raise ValueError("need 0 <= w < D and E > 0")
    return _RankTwo(D, w, E)


def grover_two_level(D: int, E: float, t):
    """Closed-form ``P(|w>)(t)`` from the uniform start, ``sin^2 + cos^2 / D`` form."""
    x = E * np.asarray(t, dtype=np.float64) / math.sqrt(D)
    return np.sin(x) ** 2 + np.cos(x) ** 2 / D


def marked_state_cost(l: int, w: int) -> np.ndarray:
    """Diagonal of ``1 - |w><w|`` over ``l`` bits: zero on the marked string only."""
    d = np.ones(1 << l)
    d[w] = 0.0
    return d


def interpolated_annealer(cost_diagonal, tau: float = 1.0) -> TimeDependentHamiltonian:
    """``(1 - s)(-sum_i sigma^x_i) + s diag(cost)`` over ``l`` bits."""
    cost = np.asarray(cost_diagonal, dtype=np.float64)
    l = int(round(math.log2(cost.size)))
    if 1 << l != cost.size:
        raise ValueError("cost diagonal length must be a power of two")
    return TimeDependentHamiltonian.linear(transverse_operator(l), sp.diags(cost).tocsr(), tau)


# ---------------------------------------------------------------------------
# clause Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClauseSet:
    """Three-bit clauses over ``l`` bits.

    ``masks[c]`` is an 8-bit truth table: bit ``(z_i << 2) | (z_j << 1) | z_k``
    is set when that assignment of the clause's bits satisfies it.
    """

    l: int
    triples: tuple
    masks: tuple

    def __post_init__(self):
        if len(self.triples) != len(self.masks):
            raise ValueError("one truth table per clause")
        for t, m in zip(self.triples, self.masks):
            if len(set(t)) != 3 or min(t) < 0 or max(t) >= self.l:
                raise ValueError(f"clause bits {t} must be distinct and below l={self.l}")
            if not 0 <= m < 256:
                raise ValueError("truth table must fit in 8 bits")

    @classmethod
    def build(cls, l: int, clauses) -> "ClauseSet":
        tr, ms = [], []
        for (i, j, k), m in clauses:
            tr.append((int(i), int(j), int(k)))
            ms.append(int(m))
        return cls(l, tuple(tr), tuple(ms))


EXACT_COVER_MASK = (1 << 0b001) | (1 << 0b010) | (1 << 0b100)


def exact_cover_clause(i: int, j: int, k: int):
    """Clause satisfied when exactly one of the three bits is 1."""
    return (i, j, k), EXACT_COVER_MASK


def random_exact_cover(l: int, n_clauses: int, seed: int) -> ClauseSet:
    rng = np.random.default_rng(seed)
    cl = [exact_cover_clause(*rng.choice(l, size=3, replace=False)) for _ in range(n_clauses)]
    return ClauseSet.build(l, cl)


def clause_cost(cs: ClauseSet) -> np.ndarray:
    """Number of violated clauses for every ``l``-bit string (bit ``i`` of the index is ``z_i``)."""
    if cs.l > MAX_SPARSE:
        raise ValueError("clause Hamiltonians limited to l <= 20")
    b = np.arange(1 << cs.l, dtype=np.int64)
    cost = np.zeros(b.size)
    for (i, j, k), m in zip(cs.triples, cs.masks):
        a = (((b >> i) & 1) << 2) | (((b >> j) & 1) << 1) | ((b >> k) & 1)
        cost += ((m >> a) & 1) == 0
    return cost


def clause_hamiltonian(cs: ClauseSet, tau: float = 1.0):
    """Diagonal clause cost and its interpolated annealer from the transverse-field ground state."""
    cost = clause_cost(cs)
    return cost, interpolated_annealer(cost, tau)


def dumps_clauses(cs: ClauseSet) -> str:
    lines = [str(cs.l)]
    lines += [f"{i} {j} {k} : {m}" for (i, j, k), m in zip(cs.triples, cs.masks)]
    return "\n".join(lines) + "\n"


def loads_clauses(text: str) -> ClauseSet:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    l = int(rows[0])
    cl = []
    for r in rows[1:]:
        lhs, _, rhs = r.partition(":")
        i, j, k = (int(x) for x in lhs.split())
        m = int(rhs.strip(), 0)
        cl.append(((i, j, k), m))
    return ClauseSet.build(l, cl)


def read_clauses(path) -> ClauseSet:
    return loads_clauses(Path(path).read_text())


def write_clauses(cs: ClauseSet, path) -> None:
    Path(path).write_text(dumps_clauses(cs))


# ---------------------------------------------------------------------------
# spatial search on the complete graph
# ---------------------------------------------------------------------------

def spatial_search_hamiltonian(N: int, chi0: float, gamma: float, tau: float = 1.0,
                               w: int = 0) -> TimeDependentHamiltonian:
    """Full ``N``-site well-ramp Hamiltonian ``-chi0 (t/tau) |w><w| - Gamma sum_{i != j} |i><j|``."""
    well = np.zeros((N, N))
    well[w, w] = -chi0
    hop = -gamma * (np.ones((N, N)) - np.eye(N))
    return TimeDependentHamiltonian([(lambda s: s, well), (lambda s: 1.0, hop)], tau, "well-ramp")


def spatial_search_reduced(N: int, chi0: float, gamma: float, tau: float = 1.0) -> TimeDependentHamiltonian:
    """The same ramp on the invariant pair ``{|w>, uniform over the other N-1 sites}``."""
    g = gamma * math.sqrt(N - 1)
    well = np.array([[-chi0, 0.0], [0.0, 0.0]])
    rest = np.array([[0.0, -g], [-g, -gamma * (N - 2)]])
    return TimeDependentHamiltonian([(lambda s: s, well), (lambda s: 1.0, rest)], tau, "well-ramp")


@numba.njit(cache=True)
def _magnus_pair(chi0, c, g, tau, steps, aw, ar):
    # traceless part: z = (-chi(t) - c)/2, x = -g
    h = tau / steps
    r3 = math.sqrt(3.0)
    o1 = 0.5 - r3 / 6.0
    o2 = 0.5 + r3 / 6.0
    x = -g
    for k in range(steps):
        t1 = (k + o1) * h
        t2 = (k + o2) * h
        z1 = 0.5 * (-chi0 * t1 / tau - c)
        z2 = 0.5 * (-chi0 * t2 / tau - c)
        # (h/2)(v1 + v2) + (sqrt3 h^2 / 6) (v2 x v1), v = (x, 0, z)
        cx = 0.5 * h * 2.0 * x
        cz = 0.5 * h * (z1 + z2)
        cy = (r3 * h * h / 6.0) * (z2 * x - x * z1)
        nrm = math.sqrt(cx * cx + cy * cy + cz * cz)
        if nrm == 0.0:
            continue
        cs = math.cos(nrm)
        sn = math.sin(nrm) / nrm
        # U = cos|c| - i sin|c| (c.sigma)/|c|
        u00 = complex(cs, -sn * cz)
        u11 = complex(cs, sn * cz)
        u01 = complex(-sn * cy, -sn * cx)
        u10 = complex(sn * cy, -sn * cx)
        nw = u00 * aw + u01 * ar
        nr = u10 * aw + u11 * ar
        aw, ar = nw, nr
    return aw, ar


def spatial_search_amplitudes(N: int, chi0: float, gamma: float, tau: float,
                              steps: int) -> tuple[complex, complex]:
    """Amplitudes on ``|w>`` and on the normalised rest state after the ramp.

    Fourth-order Magnus steps with exact 2x2 exponentials; the global phase
    removed by the traceless shift is restored analytically.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    c = -gamma * (N - 2)
    g = gamma * math.sqrt(N - 1)
    aw = complex(1.0 / math.sqrt(N))
    ar = complex(math.sqrt((N - 1) / N))
    if tau == 0.0:
        return aw, ar
    aw, ar = _magnus_pair(float(chi0), c, g, float(tau), int(steps), aw, ar)
    phase = 0.5 * (-0.5 * chi0 * tau + c * tau)
    rot = complex(math.cos(phase), -math.sin(phase))
    return aw * rot, ar * rot


def spatial_search_run(N: int, chi0: float, gamma: float, tau: float, steps: int | None = None,
                       tol: float = 1e-9, chi_per_site: float | None = None) -> float:
    """Final ``P(|w>)`` after ramping the well from 0 to ``chi0`` in time ``tau``.

    Pass ``chi_per_site`` (the factor alpha in ``chi0 = alpha N``) instead
    of ``chi0`` if preferred. Without an explicit ``steps`` the step count is
    doubled until two successive probabilities differ by less than ``tol``.
    """
    if chi_per_site is not None:
        chi0 = chi_per_site * N
    if tau <= 0.0:
        return 1.0 / N
    if steps is not None:
        aw, _ = spatial_search_amplitudes(N, chi0, gamma, tau, steps)
        return abs(aw) ** 2
    g = gamma * math.sqrt(N - 1)
    hnorm = abs(chi0) + gamma * N
    rate = abs(chi0) / tau
    n = max(64, int(tau * (hnorm * g * rate + 1.0) ** 0.25 * 4.0))
    prev = abs(spatial_search_amplitudes(N, chi0, gamma, tau, n)[0]) ** 2
    for _ in range(30):
        n *= 2
        cur = abs(spatial_search_amplitudes(N, chi0, gamma, tau, n)[0]) ** 2
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise RuntimeError("spatial search integration did not converge")


def tau_min_bisection(runner: Callable[[float], float], target: float, bracket=(0.0, 1.0),
                      tol: float = 1e-4, expand: int = 40) -> float:
    """Smallest ``tau`` in the bracket with ``runner(tau) >= target``, to relative ``tol``.

    The upper end is doubled (at most ``expand`` times) until it reaches the
    target; if it never does there is no crossing and ``ValueError`` is
    raised.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if runner(lo) >= target:
        return lo
    for _ in range(expand + 1):
        if runner(hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ValueError("target probability not reached inside the bracket")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if runner(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Landau-Zener estimates and convergence bounds
# ---------------------------------------------------------------------------

def landau_zener_time(alpha: float, gamma: float, gap_min: float) -> float:
    """``tau_Gamma = alpha Gamma / (2 pi Delta_min^2)``."""
    return alpha * gamma / (2.0 * math.pi * gap_min ** 2)


def landau_zener_p(alpha: float, gamma: float, gap_min: float, tau: float) -> float:
    """Probability of a non-adiabatic excitation, ``exp(-tau / tau_Gamma)``."""
    if min(alpha, gamma, gap_min) <= 0 or tau < 0:
        raise ValueError("parameters must be positive")
    return math.exp(-tau / landau_zener_time(alpha, gamma, gap_min))


def tdse_field_bound(t, xi: float, N: int):
    """Zero-temperature field decay bound ``(xi t)^(-1/(2N-1))``."""
    return (xi * np.asarray(t, dtype=np.float64)) ** (-1.0 / (2 * N - 1))


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def write_spectrum(path, s, e0, e1) -> None:
    e0, e1 = np.asarray(e0), np.asarray(e1)
    write_columns(path, {"s": np.asarray(s), "E0": e0, "E1": e1, "gap": e1 - e0})


def write_evolution(path, state: StateVector) -> None:
    if state.trace is None:
        raise ValueError("state carries no trace; evolve with a target index")
    write_columns(path, state.trace)
