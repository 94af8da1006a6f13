"""Concentration analysis: bubble detection, classification, mass persistence
and bubble removal.

The analysis constants are free parameters here. Defaults:
c_det = 0.1, C_eta1 = 4, C_eta12 = 8, c_pers = 0.05 eta1^(3/2) eta2 and
the frequency floor N_j0 = |I_j|^(-1/2) eta1^5.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
import json
import math

import numpy as np

from .errors import AnnulusSearchError, RangeError
from .grid import FOUR_PI, ball_norm, origin_value
from .spectral import bank_for, cutoff, gradient_norm_sq, lp_project, radial_derivative

SOLITONLIKE = "Solitonlike"
CONCENTRATING = "Concentrating"

DEFAULTS = {"c_det": 0.1, "c_eta1": 4.0, "c_eta12": 8.0, "n0_const": 1.0}


def default_c_pers(eta1, eta2):
    return 0.05 * eta1 ** 1.5 * eta2


@dataclass(frozen=True)
class BubbleReport:
    interval: tuple
    found: bool
    t_j: float = float("nan")
    N_j: float = float("nan")
    x_j: float = float("nan")
    sigma_max: float = 0.0
    N_j0: float = float("nan")
    conc6: float = float("nan")
    concGrad: float = float("nan")
    conc2: float = float("nan")
    classification: str = ""
    constants: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        d["interval"] = list(self.interval)
        return json.dumps(d, sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, s):
        d = json.loads(s)
        d["interval"] = tuple(d["interval"])
        return cls(**d)


def _interval_snapshots(stream, interval):
    a, b = interval
    tol = 1e-9 * max(1.0, abs(a), abs(b))
    t = np.asarray(stream.times)
    idx = np.nonzero((t >= a - tol) & (t <= b + tol))[0]
    if idx.size == 0:
        raise RangeError(f"no snapshots inside interval {interval}")
    return idx


def sigma_table(field_, levels, bank=None):
    """For each level N: (N^(1/2) max|P_N u|, radius of the max). The origin counts as r = 0."""
    bank = bank or bank_for(field_.grid)
    r = np.concatenate([[0.0], field_.grid.r])
    out = []
    for N in levels:
        p = lp_project(field_, N, bank)
        mod = np.concatenate([[abs(origin_value(p))], np.abs(p.u)])
        i = int(np.argmax(mod))  # first maximum, i.e. smallest radius
        out.append((math.sqrt(N) * mod[i], r[i]))
    return out


def detect_bubble(stream, interval, eta1, c_eta1=4.0, c_det=0.1, n0_const=1.0):
    """Maximize sigma_N = N^(1/2) ||P_N u||_inf over snapshots in the interval and levels N >= N_j0."""
    a, b = interval
    length = b - a
    if length <= 0:
        raise RangeError("interval must have positive length")
    idx = _interval_snapshots(stream, interval)
    bank = bank_for(stream.fields[idx[0]].grid)
    n0 = n0_const * length ** -0.5 * eta1 ** 5
    levels = [N for N in bank.levels if N >= n0]
    if not levels:
        raise RangeError(f"no resolvable dyadic level above N_j0 = {n0:.3g}")
    consts = {"eta1": eta1, "c_eta1": c_eta1, "c_det": c_det, "n0_const": n0_const}
    best = None
    for i in idx:
        for N, (s, x) in zip(levels, sigma_table(stream.fields[i], levels, bank)):
            # strict improvement keeps the earliest time on ties
            if best is None or s > best[0]:
                best = (s, float(stream.times[i]), N, x)
    s, tj, Nj, xj = best
    if s < c_det * eta1 ** 1.5:
        return BubbleReport(tuple(interval), False, sigma_max=s, N_j0=n0, constants=consts)
    rep = BubbleReport(tuple(interval), True, t_j=tj, N_j=Nj, x_j=xj, sigma_max=s, N_j0=n0,
                       constants=consts)
    f = stream.fields[int(np.argmin(np.abs(np.asarray(stream.times) - tj)))]
    c6, cg, c2 = concentration_norms(f, c_eta1 / Nj)
    return replace(rep, conc6=c6, concGrad=cg, conc2=c2)


def ball_gradient_norm(f, radius, inner=0.0):
    """||grad u||_{L^2(inner <= |x| < radius)} from r u_r = w_r - w/r."""
    g = f.grid
    if radius > g.r_max:
        raise RangeError(f"radius {radius} exceeds r_max {g.r_max}")
    mask = (g.r >= inner) & (g.r < radius)
    ru_r = radial_derivative(f) - f.w / g.r
    return float(math.sqrt(FOUR_PI * np.dot(g.weights[mask], np.abs(ru_r[mask]) ** 2)))


def concentration_norms(f, radius):
    """(||u||_{L^6(B)}, ||grad u||_{L^2(B)}, ||u||_{L^2(B)}) on the centered ball B of the given radius."""
    if radius > f.grid.r_max:
        raise RangeError(f"ball radius {radius} exceeds r_max {f.grid.r_max}")
    return ball_norm(f, 6, radius), ball_gradient_norm(f, radius), ball_norm(f, 2, radius)


def verify_concentration(f, report, c_eta1=4.0, c_det=None, eta1=None):
    """The three ball lower bounds at radius C_eta1/N_j, ball centered at the origin."""
    eta1 = report.constants.get("eta1") if eta1 is None else eta1
    c = report.constants.get("c_det", 0.1) if c_det is None else c_det
    Nj = report.N_j
    c6, cg, c2 = concentration_norms(f, c_eta1 / Nj)
    lb = c * eta1 ** 1.5
    return c6 >= lb, cg >= lb, c2 >= lb / Nj


def relocation_ok(report, c_eta1=4.0):
    """|x_j| < C(eta1)/N_j for the detected bubble."""
    return report.found and report.x_j < c_eta1 / report.N_j


def soliton_threshold(interval, eta2, c_eta1=4.0):
    a, b = interval
    return (c_eta1 / eta2) * (b - a) ** -0.5


def classify(report, interval, eta2, c_eta1=4.0):
    """Solitonlike iff N_j <= (C_eta1/eta2) |I_j|^(-1/2); equality counts as Solitonlike."""
    if not report.found:
        raise RangeError("classification needs a detected bubble")
    return SOLITONLIKE if report.N_j <= soliton_threshold(interval, eta2, c_eta1) else CONCENTRATING


def concentrating_gradient_mass(f, interval, eta2):
    """||grad u||_{L^2(|x| < eta2 |I|^(1/2) / sqrt 2)} recorded for Concentrating bubbles."""
    a, b = interval
    return ball_gradient_norm(f, eta2 * math.sqrt(b - a) / math.sqrt(2.0))


def mass_persistence(stream, interval, report=None, eta1=0.5, eta2=0.0625, c_eta12=8.0,
                     c_pers=None):
    """True iff ||u(t)||_{L^2(|x| <= C_eta12 |I|^(1/2))} >= c_pers |I|^(1/2) at every snapshot in I."""
    a, b = interval
    length = b - a
    c_pers = default_c_pers(eta1, eta2) if c_pers is None else c_pers
    idx = _interval_snapshots(stream, interval)
    g = stream.fields[idx[0]].grid
    radius = min(c_eta12 * math.sqrt(length), g.r_max)
    floor = c_pers * math.sqrt(length)
    vals = [ball_norm(stream.fields[i], 2, radius) for i in idx]
    return bool(min(vals) >= floor and min(vals) > 0)


@dataclass(frozen=True)
class Removal:
    cut: object  # w = (1 - phi) u
    kept: object  # v = phi u
    E1_drop: float
    E2_shift: float
    radius: float
    annulus_norm: float
    crossterm_bound: float
    significant: bool


def _e1(f):
    g = f.grid
    p6 = float(FOUR_PI * np.dot(g.weights, np.abs(f.w) ** 6 / g.r ** 4))
    return 0.5 * gradient_norm_sq(f) + p6 / 3.0


def _e2(f):
    g = f.grid
    return 0.5 * float(FOUR_PI * np.dot(g.weights, np.abs(f.w) ** 2 * g.r ** 2))


def find_annulus(f, rho0, eta1, n_max=None):
    """First N' = 1, 2, ... with ||u||_{L^6(N' rho0 <= |x| < 2 N' rho0)} <= eta1^4."""
    g = f.grid
    top = int(g.r_max // (2 * rho0)) if n_max is None else n_max
    for k in range(1, top + 1):
        if 2 * k * rho0 > g.r_max:
            break
        nrm = ball_norm(f, 6, 2 * k * rho0, inner=k * rho0)
        if nrm <= eta1 ** 4:
            return k, nrm
    raise AnnulusSearchError(f"no annulus with L^6 norm <= eta1^4 below r_max (rho0 = {rho0:.3g})")


def remove_bubble(f, interval_length, eta1=0.5, eta2=0.0625, c_det=0.1, radius=None, n_max=None):
    """Split u = phi u + (1 - phi) u with phi = chi(x / (N' eta2 |I|^(1/2))).

    chi is 1 on |x| <= 1 and 0 on |x| >= 2; N' comes from the annulus
    search unless ``radius`` fixes the inner cut radius (0 gives phi = 0).
    """
    g = f.grid
    rho0 = eta2 * math.sqrt(interval_length)
    if radius is None:
        k, ann = find_annulus(f, rho0, eta1, n_max)
        radius = k * rho0
    elif radius > 0:
        if 2 * radius > g.r_max:
            raise RangeError("cut radius exceeds grid")
        ann = ball_norm(f, 6, 2 * radius, inner=radius)
    else:
        ann = 0.0
    if radius > 0:
        phi = cutoff(g.r / radius)
        dphi = np.gradient(phi, g.r)
        grad_phi3 = float((FOUR_PI * np.dot(g.weights, np.abs(dphi) ** 3 * g.r ** 2)) ** (1 / 3))
    else:
        phi = np.zeros(g.n)
        grad_phi3 = 0.0
    kept = f.with_w(phi * f.w)
    cut = f.with_w((1.0 - phi) * f.w)
    drop = _e1(f) - _e1(cut)
    shift = _e2(cut) - _e2(f)
    gn = math.sqrt(gradient_norm_sq(f))
    cross = grad_phi3 ** 2 * ann ** 2 + grad_phi3 * ann * gn
    return Removal(cut, kept, drop, shift, radius, ann, cross, bool(drop >= c_det * eta1 ** 3))
