"""Sudden quench of the infinite-range transverse Ising model.

The model is ``H = -(J / 4S) (S^z)^2 - Gamma S^x`` on the symmetric spin-S
sector. Per unit spin its classical energy is
``E(theta, phi) = -(J/4) cos^2 theta - Gamma sin theta cos phi``, which puts
the ordering transition at ``Gamma_c = J/2``.

Quenching from the paramagnet (``Gamma_i > J/2``) to ``Gamma_f < J/2`` starts
the classical spin on the separatrix through the unstable x-polarised point.
Along that orbit ``theta`` swings between ``theta_1`` and ``pi/2`` and the
time spent near ``pi/2`` diverges logarithmically, so the strict classical
long-time average of ``cos^2 theta`` is zero. Finite spins leave the
separatrix through their zero-point spread; :func:`long_time_average_semiclassical`
offers a truncated-Wigner average and a fluctuation-cutoff estimate for that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.special import ellipe, ellipk

from .records import write_columns


class QuenchWindowError(ValueError):
    """Averaging window shorter than one oscillation period."""


@dataclass(frozen=True)
class QuenchParams:
    J: float
    gamma_i: float
    gamma_f: float
    S: float

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError("J must be positive")
        if self.gamma_i < 0 or self.gamma_f < 0:
            raise ValueError("fields must be non-negative")
        if self.S <= 0 or abs(2 * self.S - round(2 * self.S)) > 1e-12:
            raise ValueError("S must be a positive integer or half-integer")
        if self.S > 2000:
            raise ValueError("S above 2000 is outside the supported sector size")

    @property
    def N(self) -> int:
        return int(round(2 * self.S))

    @property
    def standard(self) -> bool:
        """True for the paramagnet-to-ordered protocol ``Gamma_i > J/2 > Gamma_f > 0``."""
        return self.gamma_i > self.J / 2 > self.gamma_f > 0


def _check_gf(gamma_f, J):
    if not 0 < gamma_f < J / 2:
        raise ValueError("need 0 < Gamma_f < J/2")


# ---------------------------------------------------------------- classical shell

def f_theta(theta, gamma_f: float, J: float):
    """Angular speed on the quench shell ``E = -Gamma_f``.

    The square-root argument is clamped at zero, so the value is exactly 0 at
    the turning points and outside the allowed band.
    """
    th = np.asarray(theta, dtype=np.float64)
    s = np.sin(th)
    c2 = np.cos(th) ** 2
    # (G s)^2 - (G - J c^2/4)^2 factored; 1 - s = c^2 / (1 + s) avoids the
    # cancellation near theta = pi/2
    arg = c2 * (0.25 * J - gamma_f / (1.0 + s)) * (gamma_f * (1.0 + s) - 0.25 * J * c2)
    out = np.sqrt(np.maximum(arg, 0.0)) / s
    return float(out) if out.ndim == 0 else out


def turning_points(gamma_f: float, J: float) -> tuple[float, float]:
    return math.asin(abs(1.0 - 4.0 * gamma_f / J)), math.pi / 2


def shell_start(gamma_f: float, J: float) -> tuple[float, float]:
    """``(theta_1, phi)`` of the quench-shell turning point in the upper hemisphere."""
    th1, _ = turning_points(gamma_f, J)
    return th1, (0.0 if gamma_f >= J / 4 else math.pi)


def separatrix_width(gamma_f: float, J: float) -> float:
    """``cos^2 theta_1 = 8 Gamma_f (J - 2 Gamma_f) / J^2``."""
    return 8.0 * gamma_f * (J - 2.0 * gamma_f) / J ** 2


def numerator_closed_form(gamma_f: float, J: float) -> float:
    """``integral cos^2(theta) / f(theta)`` between the turning points, in closed form."""
    _check_gf(gamma_f, J)
    return 4.0 * math.sqrt(8.0 * gamma_f * (J - 2.0 * gamma_f)) / J ** 2


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def numerator_quadrature(gamma_f: float, J: float, nodes: int = 200) -> float:
    """Direct Gauss-Legendre quadrature with ``theta = theta_1 + u^2`` at the lower end."""
    _check_gf(gamma_f, J)
    th1, th2 = turning_points(gamma_f, J)
    x, w = _gl(nodes)
    umax = math.sqrt(th2 - th1)
    u = umax * x
    th = th1 + u * u
    val = 2.0 * u * np.cos(th) ** 2 / f_theta(th, gamma_f, J)
    return float(umax * np.sum(w * val))


def denominator_quadrature(gamma_f: float, J: float, cutoff: float, nodes: int = 200) -> float:
    """``integral d theta / f(theta)`` from ``theta_1`` to ``pi/2 - cutoff``.

    The integral diverges logarithmically as the cutoff goes to zero. The
    lower half uses ``theta = theta_1 + u^2``; the upper half uses
    ``theta = pi/2 - exp(v)``, which flattens the ``1 / (pi/2 - theta)`` pole.
    """
    _check_gf(gamma_f, J)
    th1, th2 = turning_points(gamma_f, J)
    if not 0 < cutoff < th2 - th1:
        raise ValueError("cutoff must lie inside (0, pi/2 - theta_1)")
    x, w = _gl(nodes)
    mid = 0.5 * (th1 + th2 - cutoff)
    umax = math.sqrt(mid - th1)
    u = umax * x
    th = th1 + u * u
    lower = umax * np.sum(w * 2.0 * u / f_theta(th, gamma_f, J))
    va, vb = math.log(cutoff), math.log(th2 - mid)
    v = va + (vb - va) * x
    d = np.exp(v)
    upper = (vb - va) * np.sum(w * d / f_theta(th2 - d, gamma_f, J))
    return float(lower + upper)


def denominator_closed_form(gamma_f: float, J: float, cutoff: float) -> float:
    """Closed form of :func:`denominator_quadrature`: ``(4/J) arcsech(sin(cutoff)/b) / b``.

    ``b = cos theta_1`` is the largest ``|cos theta|`` reached on the shell.
    """
    _check_gf(gamma_f, J)
    b = math.sqrt(separatrix_width(gamma_f, J))
    r = math.sin(cutoff) / b
    if not 0 < r < 1:
        raise ValueError("cutoff must lie inside (0, pi/2 - theta_1)")
    return 4.0 / (J * b) * math.log((1.0 + math.sqrt(1.0 - r * r)) / r)


def orbit_average_z2(E, gamma: float, J: float):
    """Time average of ``cos^2 theta`` on the classical orbit of energy ``E`` (per unit spin).

    With ``u = z^2`` the orbit obeys ``y^2 = a (u - w_-)(w_+ - u)``; the motion
    is a Jacobi ``dn`` oscillation when ``w_- > 0`` (symmetry-broken orbit)
    and a ``cn`` oscillation when ``w_- < 0``. Both give complete elliptic
    integrals. The separatrix itself returns 0.
    """
    E = np.asarray(E, dtype=np.float64)
    if gamma <= 0:
        raise ValueError("orbit average needs Gamma > 0")
    a = J * J / (16.0 * gamma * gamma)
    b = 1.0 + E * J / (2.0 * gamma * gamma)
    c = 1.0 - (E / gamma) ** 2
    disc = np.sqrt(np.maximum(b * b + 4.0 * a * c, 0.0))
    wp = (-b + disc) / (2.0 * a)
    wm = (-b - disc) / (2.0 * a)
    out = np.zeros_like(wp)
    dn = wm > 0
    cn = wm < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(dn, 1.0 - wm / np.where(wp > 0, wp, 1.0), 0.0)
        K, Ee = ellipk(m), ellipe(m)
        out = np.where(dn, wp * Ee / K, out)
        m = np.where(cn, wp / (wp - wm), 0.5)
        K, Ee = ellipk(m), ellipe(m)
        out = np.where(cn, wp * (Ee - (1.0 - m) * K) / (m * K), out)
    out = np.where(np.isfinite(out), out, 0.0)
    return float(out) if out.ndim == 0 else np.clip(out, 0.0, 1.0)


def long_time_average_semiclassical(gamma_f: float, J: float, S: float | None = None,
                                    method: str = "wigner", nodes: int = 96) -> float:
    """Long-time average of ``cos^2 theta`` after a quench from the paramagnet.

    ``S=None`` is the strict classical limit: the start sits on the separatrix,
    the denominator integral diverges and the result is 0.

    For finite ``S`` two estimates are available:

    ``"wigner"``
        average of :func:`orbit_average_z2` over the Gaussian zero-point
        spread of the x-polarised coherent state (variance ``1/(2S)`` in each
        transverse component), on a ``nodes x nodes`` Gauss-Hermite grid.
    ``"cutoff"``
        closed-form numerator over the denominator cut off where the
        separatrix meets the zero-point width, ``sin(cutoff) = 1/sqrt(2S)``.
    """
    _check_gf(gamma_f, J)
    if S is None:
        return 0.0
    if S <= 0:
        raise ValueError("S must be positive")
    if method == "cutoff":
        b = math.sqrt(separatrix_width(gamma_f, J))
        zc = 1.0 / math.sqrt(2.0 * S)
        if zc >= b:
            return b * b / 2.0
        cut = math.asin(zc)
        return numerator_closed_form(gamma_f, J) / denominator_closed_form(gamma_f, J, cut)
    if method != "wigner":
        raise ValueError("method must be 'wigner' or 'cutoff'")
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    sig = 1.0 / math.sqrt(2.0 * S)
    y = sig * x[:, None]
    z = sig * x[None, :]
    r2 = y * y + z * z
    ok = r2 < 1.0
    xx = np.sqrt(np.where(ok, 1.0 - r2, 0.0))
    E = -0.25 * J * z * z - gamma_f * xx
    avg = orbit_average_z2(E, gamma_f, J)
    W = w[:, None] * w[None, :] * ok
    return float(np.sum(W * avg) / np.sum(W))


# ---------------------------------------------------------------- classical dynamics

@dataclass
class BlochTrajectory:
    t: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    energy: np.ndarray
    variant: str

    @property
    def energy_drift(self) -> float:
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), 1e-300))


def bloch_energy(theta, phi, gamma: float, J: float):
    return -0.25 * J * np.cos(theta) ** 2 - gamma * np.sin(theta) * np.cos(phi)


def bloch_dynamics(theta0: float, phi0: float, gamma: float, J: float, tau: float,
                   variant: str = "conservative", points: int = 2001,
                   rtol: float = 1e-11, atol: float = 1e-12, pole_tol: float = 1e-6) -> BlochTrajectory:
    """Integrate the angular equations of motion with adaptive RK45.

    ``variant="conservative"`` uses ``d theta/dt = Gamma sin phi``, which
    conserves :func:`bloch_energy`. ``variant="printed"`` uses
    ``d theta/dt = Gamma sin theta`` instead; it is kept so the energy drift
    of that form can be measured. In both ``d phi/dt = -(J/2) cos theta +
    Gamma cot theta cos phi``.
    """
    if variant not in ("conservative", "printed"):
        raise ValueError("variant must be 'conservative' or 'printed'")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if min(theta0 % math.pi, math.pi - theta0 % math.pi) < pole_tol:
        raise ValueError(f"theta0={theta0!r} is within {pole_tol} of a pole")

    def rhs(_t, y):
        th, ph = y
        s = math.sin(th)
        dth = gamma * (math.sin(ph) if variant == "conservative" else s)
        return [dth, -0.5 * J * math.cos(th) + gamma * math.cos(th) / s * math.cos(ph)]

    def near_pole(_t, y):
        return abs(math.sin(y[0])) - pole_tol

    near_pole.terminal = True
    t_eval = np.linspace(0.0, tau, points)
    sol = solve_ivp(rhs, (0.0, tau), [theta0, phi0], method="RK45", t_eval=t_eval,
                    rtol=rtol, atol=atol, events=near_pole)
    if sol.status == 1:
        raise RuntimeError(f"trajectory reached a pole at t={sol.t_events[0][0]:.17g}; "
                           "the angular coordinates are singular there")
    if sol.status != 0:
        raise RuntimeError(sol.message)
    th, ph = sol.y
    return BlochTrajectory(sol.t, th, ph, bloch_energy(th, ph, gamma, J), variant)


# ---------------------------------------------------------------- quantum quench

def _even_sector(S: float, J: float, gamma: float):
    """Tridiagonal ``H`` on states symmetric under ``m -> -m``.

    Returns the diagonal, off-diagonal and the ``m >= 0`` labels. The basis is
    ``|0>`` (integer S) and ``(|m> + |-m>)/sqrt 2`` for ``m > 0``.
    """
    twoS = int(round(2 * S))
    m = np.arange(twoS % 2, twoS + 1, 2) / 2.0
    sp = 0.5 * np.sqrt(S * (S + 1) - m[:-1] * (m[:-1] + 1))  # <m+1|S^x|m>
    d = -(J / (4.0 * S)) * m * m
    e = -gamma * sp
    if twoS % 2 == 0:
        e[0] *= math.sqrt(2.0)
    else:
        d[0] -= gamma * 0.5 * (S + 0.5)  # <1/2|S^x|-1/2> folds onto the diagonal
    return d, e, m


@dataclass
class QuenchSpectrum:
    energies: np.ndarray
    vectors: np.ndarray
    coeffs: np.ndarray
    m: np.ndarray

    def state(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        ph = np.exp(-1j * np.outer(self.energies, t))
        return self.vectors @ (self.coeffs[:, None] * ph)


def quench_spectrum(params: QuenchParams) -> QuenchSpectrum:
    S, J = params.S, params.J
    d0, e0, m = _even_sector(S, J, params.gamma_i)
    _, v0 = eigh_tridiagonal(d0, e0, select="i", select_range=(0, 0))
    psi0 = v0[:, 0] * np.sign(v0[np.argmax(np.abs(v0[:, 0])), 0])
    d1, e1, _ = _even_sector(S, J, params.gamma_f)
    E, V = eigh_tridiagonal(d1, e1)
    return QuenchSpectrum(E, V, V.T @ psi0, m)


@dataclass
class QuenchTrajectory:
    t: np.ndarray
    sz2: np.ndarray
    energy: np.ndarray
    norm: np.ndarray


def quench_trajectory(params: QuenchParams, times) -> QuenchTrajectory:
    """``<(S^z)^2>/S^2``, ``<H(Gamma_f)>`` and the norm at the given times."""
    sp = quench_spectrum(params)
    psi = sp.state(times)
    p = np.abs(psi) ** 2
    d, e, _ = _even_sector(params.S, params.J, params.gamma_f)
    hpsi = d[:, None] * psi
    hpsi[:-1] += e[:, None] * psi[1:]
    hpsi[1:] += e[:, None] * psi[:-1]
    en = np.real(np.sum(np.conj(psi) * hpsi, axis=0))
    return QuenchTrajectory(np.atleast_1d(np.asarray(times, dtype=np.float64)),
                            (sp.m ** 2) @ p / params.S ** 2, en, p.sum(axis=0))


def recurrence_period(params: QuenchParams, dt: float | None = None, t_max: float | None = None) -> float:
    """Time of the first return of ``<(S^z)^2>`` to a local minimum after its first maximum."""
    scale = max(params.J, params.gamma_f, 1e-12)
    dt = dt or 0.05 / scale
    t_max = t_max or 4000.0 / scale
    sp = quench_spectrum(params)
    w = sp.m ** 2
    t0 = 0.0
    block = 2048
    seen_max = False
    prev2 = prev1 = None
    while t0 < t_max:
        ts = t0 + dt * np.arange(block)
        v = w @ (np.abs(sp.state(ts)) ** 2)
        for k, val in enumerate(v):
            if prev2 is not None:
                if not seen_max and prev1 > prev2 and prev1 >= val:
                    seen_max = True
                elif seen_max and prev1 < prev2 and prev1 <= val:
                    return float(ts[k] - dt)
            prev2, prev1 = prev1, val
        t0 = ts[-1] + dt
    return math.inf


@dataclass
class QuenchResult:
    O: float
    period: float
    window: tuple
    params: QuenchParams


def window_average(spec: QuenchSpectrum, t_lo: float, t_hi: float) -> float:
    """Exact average of ``<(S^z)^2>`` over ``[t_lo, t_hi]`` from the spectral sum."""
    A = spec.vectors.T @ (spec.m[:, None] ** 2 * spec.vectors)
    om = spec.energies[:, None] - spec.energies[None, :]
    L = t_hi - t_lo
    with np.errstate(invalid="ignore", divide="ignore"):
        W = (np.sin(om * t_hi) - np.sin(om * t_lo)) / (om * L)
    W[om == 0.0] = 1.0
    c = spec.coeffs
    return float(c @ (A * W) @ c)


def quench_quantum(params: QuenchParams, window: float | None = None, periods: int = 50) -> QuenchResult:
    """Time-averaged ``<(S^z)^2>/S^2`` after the quench ``Gamma_i -> Gamma_f``.

    The average runs over ``[T/2, T]``. By default ``T`` is ``periods`` times
    the first-recurrence period; an explicit ``window`` sets ``T`` directly and
    must leave at least one period inside the averaging interval.
    """
    spec = quench_spectrum(params)
    if params.gamma_f == params.gamma_i:
        period = math.inf
        T = window if window is not None else 1.0
    else:
        period = recurrence_period(params)
        if window is None:
            if not math.isfinite(period):
                raise QuenchWindowError("no recurrence found inside the search horizon")
            T = periods * period
        else:
            T = float(window)
            if not T / 2 >= period:
                raise QuenchWindowError(f"window half-length {T / 2:.17g} is shorter than the "
                                        f"oscillation period {period:.17g}")
    O = window_average(spec, T / 2, T) / params.S ** 2
    return QuenchResult(min(max(O, 0.0), 1.0), period, (T / 2, T), params)


def ground_state_sz2(S: float, J: float, gamma: float) -> float:
    d, e, m = _even_sector(S, J, gamma)
    _, v = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
    return float((m ** 2) @ v[:, 0] ** 2 / S ** 2)


def quench_sweep(S: float, gamma_f_over_J, J: float = 1.0, gamma_i: float = 2.0, periods: int = 50):
    g = np.asarray(gamma_f_over_J, dtype=np.float64)
    return np.array([quench_quantum(QuenchParams(J, gamma_i * J, x * J, S), periods=periods).O
                     for x in g])


def write_quench_curve(path, gamma_f_over_J, O, S, extra: dict | None = None) -> None:
    write_columns(path, {"Gamma_f/J": np.asarray(gamma_f_over_J), "O": np.asarray(O)},
                  {"S": S, **(extra or {})})


def curve_peak(x, y, half_width: int = 6) -> float:
    """Vertex of a least-squares parabola through the ``2*half_width + 1`` points around the maximum.

    Falls back to the grid argmax when the local fit is not concave or its
    vertex leaves the window.
    """
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    k = int(np.argmax(y))
    sl = slice(max(k - half_width, 0), min(k + half_width + 1, x.size))
    if sl.stop - sl.start < 3:
        return float(x[k])
    c = np.polyfit(x[sl], y[sl], 2)
    if c[0] >= 0:
        return float(x[k])
    v = -c[1] / (2 * c[0])
    # a vertex outside the fitted points is an extrapolation, not a peak
    if not x[sl].min() <= v <= x[sl].max():
        return float(x[k])
    return float(v)
