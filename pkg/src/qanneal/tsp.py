"""Travelling-salesman instances, tours, 2-opt moves and annealing drivers.

Euclidean instances live in a box of side ``sqrt(N)`` so that the optimal
length per city, ``Omega = L / N``, tends to a constant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from ._rng import make_rng
from .classical import Schedule, schedule_value
from .records import RunRecord, fmt

EUCLIDEAN = "euclidean-2d"
RANDOM = "random"
MAX_BRUTE_TOUR = 10


@dataclass(frozen=True, eq=False)
class TspInstance:
    n: int
    metric: str
    dist: np.ndarray
    coords: np.ndarray | None = None

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        if d.shape != (self.n, self.n):
            raise ValueError("distance matrix must be N x N")
        if np.any(d < 0) or np.any(np.diag(d) != 0) or not np.array_equal(d, d.T):
            raise ValueError("distances must be non-negative, symmetric, zero on the diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @classmethod
    def from_coords(cls, xy, metric: str = EUCLIDEAN) -> "TspInstance":
        xy = np.asarray(xy, dtype=np.float64)
        diff = xy[:, None, :] - xy[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        return cls(len(xy), metric, d, xy)


def euclidean_instance(n: int, seed: int) -> TspInstance:
    """Cities uniform in a square of side ``sqrt(n)``."""
    rng = make_rng(seed)
    return TspInstance.from_coords(rng.random((n, 2)) * math.sqrt(n))


def random_instance(n: int, seed: int) -> TspInstance:
    """Symmetric distances drawn i.i.d. uniform(0, 1)."""
    rng = make_rng(seed)
    d = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    d[iu] = rng.random(iu[0].size)
    return TspInstance(n, RANDOM, d + d.T)


@dataclass(frozen=True, eq=False)
class Tour:
    order: np.ndarray
    length: float

    @classmethod
    def from_order(cls, order, inst: TspInstance) -> "Tour":
        o = np.asarray(order, dtype=np.int64)
        if o.size != inst.n or not np.array_equal(np.sort(o), np.arange(inst.n)):
            raise ValueError("tour must visit every city exactly once")
        return cls(o, edge_sum(o, inst))


def edge_sum(order, inst: TspInstance) -> float:
    o = np.asarray(order)
    return float(inst.dist[o, np.roll(o, -1)].sum())


def tour_matrix(order) -> np.ndarray:
    """Symmetric 0/1 matrix ``U`` with ``U_ij = 1`` when ``i`` and ``j`` are consecutive."""
    o = np.asarray(order)
    n = o.size
    U = np.zeros((n, n), dtype=np.int8)
    nxt = np.roll(o, -1)
    U[o, nxt] = 1
    U[nxt, o] = 1
    return U


def tour_length(tour: Tour | np.ndarray, inst: TspInstance) -> float:
    """``1/2 sum_ij d_ij U_ij`` evaluated on the tour matrix."""
    order = tour.order if isinstance(tour, Tour) else tour
    Tour.from_order(order, inst)
    return 0.5 * float(np.sum(inst.dist * tour_matrix(order)))


def ising_form_check(tour: Tour | np.ndarray, inst: TspInstance, atol: float = 1e-9) -> dict:
    """Evaluate the length in edge spins ``S_ij = 2 U_ij - 1``.

    Over ordered pairs ``i != j``, ``L = 1/4 sum d_ij S_ij + C`` with the
    constant ``C = 1/4 sum_{i != j} d_ij``, i.e. half the total pair distance.
    """
    order = tour.order if isinstance(tour, Tour) else tour
    U = tour_matrix(order).astype(np.float64)
    off = ~np.eye(inst.n, dtype=bool)
    S = 2.0 * U[off] - 1.0
    d = inst.dist[off]
    spin_part = 0.25 * float(d @ S)
    constant = 0.25 * float(d.sum())
    direct = edge_sum(order, inst)
    return {"spin_part": spin_part, "constant": constant, "ising_length": spin_part + constant,
            "direct_length": direct, "ok": abs(spin_part + constant - direct) <= atol * max(1.0, direct)}


def validate_tour_matrix(U) -> bool:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    n = U.shape[0]
    if not np.all((U == 0) | (U == 1)) or not np.array_equal(U, U.T) or np.any(np.diag(U) != 0):
        return False
    if np.any(U.sum(axis=0) != 2):
        return False
    prev, cur, seen = -1, 0, 1
    while True:
        nb = np.flatnonzero(U[cur])
        nxt = nb[0] if nb[0] != prev else nb[1]
        if nxt == 0:
            break
        prev, cur = cur, nxt
        seen += 1
        if seen > n:
            return False
    return seen == n


def two_opt_delta(order, inst: TspInstance, p: int, q: int) -> float:
    """Length change from replacing edges ``(a,b)`` at position ``p`` and ``(c,d)`` at ``q`` by ``(a,c), (b,d)``."""
    o = np.asarray(order)
    n = o.size
    a, b, c, d = o[p], o[(p + 1) % n], o[q], o[(q + 1) % n]
    D = inst.dist
    return float(D[a, c] + D[b, d] - D[a, b] - D[c, d])


def two_opt(tour: Tour, inst: TspInstance, p: int, q: int) -> Tour:
    """Reconnect the tour across the edges leaving positions ``p`` and ``q``.

    Edges are identified by the position of their first city in
    ``tour.order``; picks sharing a city are rejected.
    """
    n = tour.order.size
    p, q = sorted((int(p) % n, int(q) % n))
    if q - p < 2 or (p == 0 and q == n - 1):
        raise ValueError("2-opt needs two non-adjacent edges")
    delta = two_opt_delta(tour.order, inst, p, q)
    o = tour.order.copy()
    o[p + 1:q + 1] = o[p + 1:q + 1][::-1]
    return Tour(o, tour.length + delta)


def greedy_tour(inst: TspInstance, start: int = 0) -> Tour:
    """Nearest-unvisited-city construction; ``argmin`` breaks ties toward the lowest index."""
    n = inst.n
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    cur = start
    for k in range(n):
        order[k] = cur
        visited[cur] = True
        if k == n - 1:
            break
        row = np.where(visited, np.inf, inst.dist[cur])
        cur = int(np.argmin(row))
    return Tour.from_order(order, inst)


def omega(length: float, n: int, metric: str = EUCLIDEAN) -> float:
    """Tour length per city for Euclidean instances on a ``sqrt(N)`` box."""
    if metric != EUCLIDEAN:
        raise ValueError("Omega is defined for Euclidean instances only")
    return length / n


def brute_force_tour(inst: TspInstance) -> Tour:
    """Optimal tour by enumerating the ``(N-1)!/2`` distinct cycles through city 0."""
    n = inst.n
    if n > MAX_BRUTE_TOUR:
        raise ValueError(f"tour enumeration limited to N <= {MAX_BRUTE_TOUR}")
    if n <= 3:
        return Tour.from_order(np.arange(n), inst)
    best, best_len = None, math.inf
    D = inst.dist
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue
        o = (0, *perm)
        L = sum(D[o[k], o[k + 1]] for k in range(n - 1)) + D[o[-1], 0]
        if L < best_len:
            best, best_len = o, L
    return Tour.from_order(best, inst)


def count_tours(n: int) -> int:
    return math.factorial(n - 1) // 2


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _reverse(order, pos, i, j):
    # reverse order[i..j] (inclusive, i <= j) and keep pos in sync
    while i < j:
        a, b = order[i], order[j]
        order[i], order[j] = b, a
        pos[b], pos[a] = i, j
        i += 1
        j -= 1


@numba.njit(cache=True)
def _apply_2opt(order, pos, p, q):
    # reverse whichever side is shorter; both give the same cycle
    n = order.size
    inner = q - p
    if inner <= n - inner:
        _reverse(order, pos, p + 1, q)
    else:
        # reverse the complement q+1 .. p (wrapping)
        m = n - inner
        i, j = q + 1, p + n
        for _ in range(m // 2):
            ii, jj = i % n, j % n
            a, b = order[ii], order[jj]
            order[ii], order[jj] = b, a
            pos[b], pos[a] = ii, jj
            i += 1
            j -= 1


@numba.njit(cache=True)
def _pick(n, rng):
    while True:
        p = int(rng.random() * n)
        q = int(rng.random() * n)
        if p > q:
            p, q = q, p
        if q - p >= 2 and not (p == 0 and q == n - 1):
            return p, q


@numba.njit(cache=True)
def _ca_chunk(order, pos, D, temps, rng, length, best_len, best_order):
    n = order.size
    for T in temps:
        for _ in range(n):
            p, q = _pick(n, rng)
            a, b, c, d = order[p], order[p + 1], order[q], order[(q + 1) % n]
            delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
            if delta > 0.0:
                if T <= 0.0 or rng.random() >= math.exp(-delta / T):
                    continue
            _apply_2opt(order, pos, p, q)
            length += delta
            if length < best_len - 1e-12:
                best_len = length
                best_order[:] = order
    return length, best_len


def _new_tour_arrays(inst, rng, init):
    order = rng.permutation(inst.n).astype(np.int64) if init is None else np.array(init, dtype=np.int64)
    pos = np.empty(inst.n, dtype=np.int64)
    pos[order] = np.arange(inst.n)
    return order, pos


def ca_tsp(inst: TspInstance, schedule: Schedule, sweeps: int, seed, stride: int = 100,
           init=None) -> RunRecord:
    """Metropolis annealing over random 2-opt moves; a sweep is ``N`` proposals.

    Returns the best tour seen. Its length is recomputed from scratch so it
    carries no accumulated rounding.
    """
    if inst.n < 4:
        raise ValueError("2-opt annealing needs at least four cities")
    rng = make_rng(seed)
    order, pos = _new_tour_arrays(inst, rng, init)
    temps = np.asarray(schedule_value(schedule, np.arange(sweeps)), dtype=np.float64).reshape(-1)
    D = np.ascontiguousarray(inst.dist)
    length = edge_sum(order, inst)
    best_len, best_order = length, order.copy()
    rows = [(0, float(temps[0]), length, best_len)]
    done = 0
    while done < sweeps:
        step = min(stride, sweeps - done)
        length, best_len = _ca_chunk(order, pos, D, temps[done:done + step], rng, length,
                                     best_len, best_order)
        done += step
        length = edge_sum(order, inst)
        rows.append((done, float(temps[done - 1]), length, best_len))
    c = list(zip(*rows))
    trace = {"t": np.array(c[0]), "control": np.array(c[1]), "energy": np.array(c[2]),
             "best": np.array(c[3])}
    best = Tour.from_order(best_order, inst)
    return RunRecord(int(seed) if not isinstance(seed, np.random.Generator) else -1,
                     schedule.descriptor(), sweeps, trace, best.order, best.length,
                     {"final_order": order.copy()})


@numba.njit(cache=True)
def _has_edge(order, pos, x, y):
    n = order.size
    px = pos[x]
    return order[(px + 1) % n] == y or order[(px - 1 + n) % n] == y


@numba.njit(cache=True)
def _pimc_tsp_chunk(orders, poss, D, scale, Ks, rng, lengths, best_len, best_order):
    M, n = orders.shape
    for K in Ks:
        for k in range(M):
            up = k - 1 if k > 0 else M - 1
            dn = k + 1 if k < M - 1 else 0
            order = orders[k]
            pos = poss[k]
            for _ in range(n):
                p, q = _pick(n, rng)
                a, b, c, d = order[p], order[p + 1], order[q], order[(q + 1) % n]
                delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
                # change in edges shared with the two neighbouring slices
                shared = 0
                for nb in (up, dn):
                    shared += int(_has_edge(orders[nb], poss[nb], a, c)) + int(_has_edge(orders[nb], poss[nb], b, d))
                    shared -= int(_has_edge(orders[nb], poss[nb], a, b)) + int(_has_edge(orders[nb], poss[nb], c, d))
                dH = scale * delta - 4.0 * K * shared
                if dH > 0.0 and rng.random() >= math.exp(-dH):
                    continue
                _apply_2opt(order, pos, p, q)
                lengths[k] += delta
                if lengths[k] < best_len - 1e-12:
                    best_len = lengths[k]
                    best_order[:] = order
    return best_len


def pimc_tsp(inst: TspInstance, params, seed, stride: int = 100) -> RunRecord:
    """Path-integral quantum annealing of ``M`` coupled tour replicas.

    Each replica is a tour; the transverse field acts on the edge spins
    ``S_ij = 2 U_ij - 1``. Between neighbouring slices the coupling energy is
    ``-K sum_{i<j} S_ij S'_ij = -4 K (shared edges) + const``, so a 2-opt move
    in one slice is accepted on ``Delta L / (M T) - 4 K Delta(shared edges)``.
    ``params`` is a :class:`~qanneal.pimc.QaParams`.
    """
    from .pimc import inter_slice_coupling

    if inst.n < 4:
        raise ValueError("2-opt annealing needs at least four cities")
    rng = make_rng(seed)
    M = params.M
    orders = np.empty((M, inst.n), dtype=np.int64)
    poss = np.empty((M, inst.n), dtype=np.int64)
    for k in range(M):
        orders[k], poss[k] = _new_tour_arrays(inst, rng, None)
    D = np.ascontiguousarray(inst.dist)
    lengths = np.array([edge_sum(o, inst) for o in orders])
    b = int(np.argmin(lengths))
    best_len, best_order = float(lengths[b]), orders[b].copy()
    gammas = params.gammas()
    Ks = np.atleast_1d(inter_slice_coupling(gammas, params.T, M))
    scale = 1.0 / (M * params.T)
    rows = [(0, float(gammas[0]), float(Ks[0]), float(lengths.min()), best_len)]
    done = 0
    while done < params.sweeps:
        step = min(stride, params.sweeps - done)
        best_len = _pimc_tsp_chunk(orders, poss, D, scale, Ks[done:done + step], rng, lengths,
                                   best_len, best_order)
        done += step
        lengths = np.array([edge_sum(o, inst) for o in orders])
        rows.append((done, float(gammas[done - 1]), float(Ks[done - 1]), float(lengths.min()), best_len))
    c = list(zip(*rows))
    trace = {"t": np.array(c[0]), "control": np.array(c[1]), "K": np.array(c[2]),
             "energy": np.array(c[3]), "best": np.array(c[4])}
    best = Tour.from_order(best_order, inst)
    desc = {"M": M, "T": params.T, "gamma": params.gamma_schedule.descriptor()}
    return RunRecord(int(seed) if not isinstance(seed, np.random.Generator) else -1,
                     desc, params.sweeps, trace, best.order, best.length, {"slices": orders.copy()})


def shared_edges(a, b) -> int:
    """Number of undirected edges two tours have in common."""
    Ua, Ub = tour_matrix(a), tour_matrix(b)
    return int(np.sum(Ua & Ub) // 2)


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

def dumps_instance(inst: TspInstance) -> str:
    lines = [f"{inst.n} {inst.metric}"]
    if inst.coords is not None:
        lines.append("coords")
        lines += [f"{fmt(x)} {fmt(y)}" for x, y in inst.coords]
    else:
        lines.append("upper")
        for i in range(inst.n - 1):
            lines.append(" ".join(fmt(v) for v in inst.dist[i, i + 1:]))
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> TspInstance:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    n, metric = int(rows[0][0].rstrip(",")), rows[0][1]
    body = rows[2:]
    if rows[1][0] == "coords":
        xy = np.array([[float(a), float(b)] for a, b in body[:n]])
        return TspInstance.from_coords(xy, metric)
    d = np.zeros((n, n))
    for i, r in enumerate(body[:n - 1]):
        d[i, i + 1:] = [float(v) for v in r]
    return TspInstance(n, metric, d + d.T)


def save_instance(inst: TspInstance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path) -> TspInstance:
    return loads_instance(Path(path).read_text())


def read_tsplib(path_or_text) -> TspInstance:
    """Read the node coordinates of a TSPLIB ``EUC_2D`` file.

    Distances are plain Euclidean floats (no TSPLIB integer rounding).
    """
    p = Path(str(path_or_text))
    text = p.read_text() if "\n" not in str(path_or_text) and p.exists() else str(path_or_text)
    header, xy, in_nodes = {}, [], False
    for ln in text.splitlines():
        s = ln.strip()
        if not s:
            continue
        if s == "EOF":
            break
        if s.startswith("NODE_COORD_SECTION"):
            in_nodes = True
            continue
        if in_nodes:
            parts = s.split()
            if len(parts) < 3 or not parts[0].lstrip("-").isdigit():
                in_nodes = False
                continue
            xy.append((float(parts[1]), float(parts[2])))
        elif ":" in s:
            k, _, v = s.partition(":")
            header[k.strip().upper()] = v.strip()
    if header.get("EDGE_WEIGHT_TYPE", "EUC_2D") != "EUC_2D":
        raise ValueError("only EUC_2D coordinate files are supported")
    if "DIMENSION" in header and int(header["DIMENSION"]) != len(xy):
        raise ValueError("DIMENSION does not match the number of coordinates")
    return TspInstance.from_coords(np.array(xy), EUCLIDEAN)
