"""Scalar and time-integrated diagnostics along a trajectory.

Energy splitting used throughout:

    E  = 1/2 ||grad u||^2 - 1/2 ||x u||^2 + 1/3 ||u||_6^6 = E1 - E2
    E1 = 1/2 ||grad u||^2 + 1/3 ||u||_6^6,      E2 = 1/2 ||x u||^2
    calE1 = 1/2 ||J(t)u||^2 + 1/3 cosh^2 t ||u||_6^6
    calE2 = 1/2 ||H(t)u||^2 + 1/3 sinh^2 t ||u||_6^6

Time integrals are trapezoid sums over snapshot times.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import RadialNLSError, RangeError
from .grid import FOUR_PI, lp_norm, moment_norm_sq
from .linear import galilean_norms_sq
from .spectral import cutoff, gradient_norm_sq


@dataclass(frozen=True)
class EnergyLedger:
    t: float
    M: float
    E: float
    E1: float
    E2: float
    calE1: float
    calE2: float
    pot6: float

    def as_row(self):
        return [self.t, self.M, self.E, self.E1, self.E2, self.calE1, self.calE2, self.pot6]


def pot6(f):
    g = f.grid
    return float(FOUR_PI * np.dot(g.weights, np.abs(f.w) ** 6 / g.r ** 4))


def ledger(f):
    t = f.time
    grad2 = gradient_norm_sq(f)
    x2 = moment_norm_sq(f)
    p6 = pot6(f)
    j2, h2 = galilean_norms_sq(f, t)
    ch2, sh2 = math.cosh(t) ** 2, math.sinh(t) ** 2
    e1 = 0.5 * grad2 + p6 / 3.0
    e2 = 0.5 * x2
    return EnergyLedger(
        t=t,
        M=lp_norm(f, 2),
        E=0.5 * grad2 - 0.5 * x2 + p6 / 3.0,
        E1=e1,
        E2=e2,
        calE1=0.5 * max(j2, 0.0) + ch2 * p6 / 3.0,
        calE2=0.5 * max(h2, 0.0) + sh2 * p6 / 3.0,
        pot6=p6,
    )


def _ledgers(stream):
    if len(stream) == 0:
        raise RadialNLSError("empty stream")
    return stream.ledgers


def _origin_ledger(stream):
    led = _ledgers(stream)
    i = int(np.argmin(np.abs(stream.times)))
    return led[i]


# ---------------------------------------------------------------- decay laws

def decay_margin(stream):
    """Rows (t, 3 E1(0) cosh^-6 t - pot6(t)) for a stream starting at t = 0."""
    led = _ledgers(stream)
    if stream.times[0] != 0.0:
        raise RangeError("decay margin needs a stream that starts at t = 0")
    e10 = led[0].E1
    t = np.asarray(stream.times)
    p = np.array([l.pot6 for l in led])
    return np.column_stack([t, 3.0 * e10 / np.cosh(t) ** 6 - p])


@dataclass(frozen=True)
class IdentityReport:
    times: np.ndarray
    residual: np.ndarray
    max_residual: float
    calE1_rise: float
    calE2_rise: float
    h_ratio_max: float


def energy_identity_residual(stream):
    """Finite-difference check of d calE1/dt = -2/3 sinh(2t) ||u||_6^6.

    Also reports the largest rise of calE1, calE2 away from t = 0 (normalized
    by E1(0); zero or negative means monotone decay in |t|) and the largest
    ratio ||H(t)u(t)|| / ||x u0||.
    """
    led = _ledgers(stream)
    if len(led) < 3:
        raise RadialNLSError("need at least three snapshots")
    l0 = _origin_ledger(stream)
    scale = l0.E1 if l0.E1 > 0 else 1.0
    t = np.asarray(stream.times, dtype=float)
    c1 = np.array([l.calE1 for l in led])
    c2 = np.array([l.calE2 for l in led])
    p6 = np.array([l.pot6 for l in led])
    dcdt = (c1[2:] - c1[:-2]) / (t[2:] - t[:-2])
    res = (dcdt + (2.0 / 3.0) * np.sinh(2 * t[1:-1]) * p6[1:-1]) / scale

    def rise(c):
        # change in the direction of increasing |t|
        dc = np.diff(c)
        away = np.where(t[1:] > 0, dc, -dc)
        return float(max(away.max(), 0.0) / scale) if away.size else 0.0

    sh2 = np.sinh(t) ** 2
    h2 = np.maximum(2.0 * (c2 - sh2 * p6 / 3.0), 0.0)
    x0 = math.sqrt(2.0 * l0.E2)
    h_ratio = float(np.sqrt(h2).max() / x0) if x0 > 0 else 0.0
    return IdentityReport(t[1:-1], res, float(np.abs(res).max()), rise(c1), rise(c2), h_ratio)


def decay_horizon(E1_0, eps):
    """T0 with 3 E1(0) cosh^-6 T0 = eps^6, clipped at 0."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if E1_0 <= 0:
        return 0.0
    return math.acosh(max(1.0, (3.0 * E1_0 / eps ** 6) ** (1.0 / 6.0)))


# ---------------------------------------------------------------- local mass

def mass_cutoff(s):
    """chi(s): 1 for s <= 1/2, 0 for s >= 1, exp-bridge in between."""
    return cutoff(2.0 * np.asarray(s, dtype=float))


def mass_cutoff_slope():
    """sup |chi'| of the local mass cutoff, on a fine grid."""
    s = np.linspace(0.5, 1.0, 20001)
    return float(np.abs(np.gradient(mass_cutoff(s), s)).max())


def local_mass(f, R):
    g = f.grid
    if not (0 < R <= 0.5 * g.r_max):
        raise RangeError(f"R must lie in (0, r_max/2], got {R}")
    chi = mass_cutoff(g.r / R)
    return float(math.sqrt(FOUR_PI * np.dot(g.weights, chi ** 2 * np.abs(f.w) ** 2)))


def local_mass_audit(stream, R):
    """Rows (t, Mass, R ||grad u||, |dMass/dt| R / ||grad u||) with a centered difference."""
    t = np.asarray(stream.times, dtype=float)
    m = np.array([local_mass(f, R) for f in stream.fields])
    gn = np.sqrt([gradient_norm_sq(f) for f in stream.fields])
    rate = np.full_like(t, np.nan)
    if len(t) >= 3:
        d = np.abs((m[2:] - m[:-2]) / (t[2:] - t[:-2]))
        with np.errstate(invalid="ignore", divide="ignore"):
            rate[1:-1] = np.where(gn[1:-1] > 0, d * R / gn[1:-1], 0.0)
    return np.column_stack([t, m, R * gn, rate])


# ---------------------------------------------------------------- space-time quantities

def _window_index(stream, window):
    a, b = window
    t = np.asarray(stream.times)
    if len(t) == 0:
        raise RadialNLSError("empty stream")
    tol = 1e-9 * max(1.0, abs(a), abs(b))
    if a < t[0] - tol or b > t[-1] + tol or b < a:
        raise RangeError(f"window {window} outside stream range [{t[0]}, {t[-1]}]")
    idx = np.nonzero((t >= a - tol) & (t <= b + tol))[0]
    if idx.size == 0:
        raise RadialNLSError(f"no snapshots in window {window}")
    return idx


def _trapz(y, t):
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def spacetime_norm(stream, window, q, r):
    """(\\int_I ||u(t)||_r^q dt)^(1/q), trapezoid over snapshots."""
    idx = _window_index(stream, window)
    t = np.asarray(stream.times)[idx]
    vals = np.array([lp_norm(stream.fields[i], r) for i in idx]) ** q
    return _trapz(vals, t) ** (1.0 / q)


def morawetz(stream, window, A, radius=None):
    """(lhs, envelope, lhs/envelope) of the weighted estimate on a parabolic ball.

    lhs = \\int_I \\int_{|x| <= rho} |u|^6/|x| dx dt with rho = A |I|^(1/2)
    unless ``radius`` is given.
    """
    if A < 1:
        raise RangeError("A must be >= 1")
    a, b = window
    idx = _window_index(stream, window)
    g = stream.fields[idx[0]].grid
    rho = A * math.sqrt(b - a) if radius is None else radius
    if rho > g.r_max:
        raise RangeError(f"radius {rho} exceeds r_max {g.r_max}")
    mask = g.r <= rho
    t = np.asarray(stream.times)[idx]
    dens = []
    env = 0.0
    for i in idx:
        f = stream.fields[i]
        dens.append(FOUR_PI * np.dot(g.weights[mask], np.abs(f.w[mask]) ** 6 / g.r[mask] ** 5))
        led = stream.ledgers[i]
        grad2 = 2.0 * led.E1 - 2.0 * led.pot6 / 3.0
        env = max(env, grad2 + 2.0 * led.E2 + led.pot6)
    lhs = _trapz(np.array(dens), t)
    envelope = rho * env
    return lhs, envelope, (lhs / envelope if envelope > 0 else 0.0)


# ---------------------------------------------------------------- interval partition

@dataclass(frozen=True)
class IntervalPartition:
    eta1: float
    intervals: list
    norms: list
    flags: list = field(default_factory=list)

    def __len__(self):
        return len(self.intervals)


def partition_intervals(stream, window, eta1):
    """Greedy split of the window into intervals with L^10_{t,x} norm reaching eta1.

    Each interval grows snapshot by snapshot until its norm first reaches
    eta1. An interval closing above 2 eta1 is flagged "overshoot"; a short
    final remainder is kept as the last interval.
    """
    if not (0 < eta1 < 1):
        raise RangeError("eta1 must lie in (0, 1)")
    idx = _window_index(stream, window)
    t = np.asarray(stream.times)[idx]
    dens = np.array([lp_norm(stream.fields[i], 10) ** 10 for i in idx])
    total = _trapz(dens, t) ** 0.1
    if total < eta1:
        return IntervalPartition(eta1, [(float(t[0]), float(t[-1]))], [total], ["sub-threshold"])
    target = eta1 ** 10
    intervals, norms, flags = [], [], []
    start, acc = 0, 0.0
    for k in range(1, len(t)):
        acc += 0.5 * (dens[k] + dens[k - 1]) * (t[k] - t[k - 1])
        if acc >= target:
            nrm = acc ** 0.1
            intervals.append((float(t[start]), float(t[k])))
            norms.append(nrm)
            flags.append("overshoot" if nrm > 2 * eta1 else "")
            start, acc = k, 0.0
    if start < len(t) - 1:
        intervals.append((float(t[start]), float(t[-1])))
        norms.append(acc ** 0.1)
        flags.append("remainder")
    return IntervalPartition(eta1, intervals, norms, flags)


def morawetz_interval_sum(partition, window=None, stream=None):
    """(sum_j |I_j|^(1/2), sum / |I|^(1/2)) over the intervals inside the window."""
    ivs = partition.intervals if isinstance(partition, IntervalPartition) else list(partition)
    if window is None:
        window = (ivs[0][0], ivs[-1][1])
    a, b = window
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    inside = [(s, e) for s, e in ivs if s >= a - tol and e <= b + tol]
    total = sum(math.sqrt(e - s) for s, e in inside)
    return total, total / math.sqrt(b - a)
