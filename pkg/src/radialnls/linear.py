"""Linear flow of the repulsive oscillator i u_t = -1/2 Lap u - 1/2 |x|^2 u.

Two independent routes: the Mehler integral kernel, evaluated by direct
O(n^2) quadrature, and a Strang split-step composition of exact phase
substeps. The Galilean operators

    J(t) = x sinh t + i cosh t grad,   H(t) = x cosh t + i sinh t grad

act on radial data by producing a radial vector field; it is stored as the
radial component in the w-representation (times r), so its lp_norm is the
norm of the vector field.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.fft as sfft
from scipy.special import spherical_jn

from .errors import KernelResolutionError, RangeError, TruncationError, UndefinedRatioError
from .grid import DEFAULT_TAIL_THRESHOLD, RadialField, lp_norm, tail_mass
from .spectral import gradient_norm_sq, radial_derivative

T_MIN_KERNEL = 0.05
_CHUNK = 512


@dataclass(frozen=True, eq=False)
class PropagatorPlan:
    grid: object
    dt: float
    kinetic: np.ndarray = field(init=False, repr=False)
    potential_half: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g, dt = self.grid, self.dt
        kin = np.exp(-0.5j * dt * g.wavenumbers ** 2)
        pot = np.exp(0.25j * dt * g.r ** 2)
        kin.setflags(write=False)
        pot.setflags(write=False)
        object.__setattr__(self, "kinetic", kin)
        object.__setattr__(self, "potential_half", pot)


_PLANS = {}


def plan_for(grid, dt):
    key = (grid.r_max, grid.n, float(dt))
    p = _PLANS.get(key)
    if p is None:
        if len(_PLANS) > 64:
            _PLANS.clear()
        p = _PLANS[key] = PropagatorPlan(grid, float(dt))
    return p


def kinetic_step(w, plan):
    """Full kinetic substep on raw w samples; the Dirichlet node stays 0."""
    out = np.zeros_like(w, dtype=complex)
    out[:-1] = sfft.idst(sfft.dst(w[:-1], type=1) * plan.kinetic[:-1], type=1)
    return out


def _linear_step(w, plan):
    w = plan.potential_half * w
    w = kinetic_step(w, plan)
    return plan.potential_half * w


def _time_steps(t, dt):
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t == 0:
        return []
    nfull = int(math.floor(abs(t) / dt + 1e-9))
    rest = abs(t) - nfull * dt
    steps = [dt] * nfull
    if rest > 1e-12 * dt:
        steps.append(rest)
    sign = 1.0 if t > 0 else -1.0
    return [sign * h for h in steps]


def linear_flow(f, t, dt, tail_threshold=DEFAULT_TAIL_THRESHOLD):
    """Strang split-step approximation of U(t) f (half potential, kinetic, half potential)."""
    w = np.array(f.w)
    for h in _time_steps(t, dt):
        w = _linear_step(w, plan_for(f.grid, h))
    out = RadialField(f.grid, w, f.time + t)
    if tail_threshold is not None:
        tm = tail_mass(out)
        if tm > tail_threshold:
            raise TruncationError(f"tail mass {tm:.3e} after linear flow to t={out.time}",
                                  time=out.time, tail_mass=tm)
    return out


def _z_jl(z, l):
    if l == 0:
        return np.sin(z)
    return z * spherical_jn(l, z)


def mehler_apply(f, t, l=0):
    """U(t) by quadrature of the Mehler kernel.

    For l = 0 this is the radial function stored in ``f``. For l >= 1 the
    field is read as the radial profile (times r) of a function f(r) Y_lm,
    e.g. the radial component of a radial vector field when l = 1.
    """
    if abs(t) < T_MIN_KERNEL:
        raise KernelResolutionError(f"|t| = {abs(t)} below kernel resolution limit {T_MIN_KERNEL}")
    g = f.grid
    sh, ch = math.sinh(t), math.cosh(t)
    coth = ch / sh
    pref = (np.exp(-0.75j * math.pi * math.copysign(1.0, t)) * abs(2 * math.pi * sh) ** -1.5
            * 4 * math.pi * (-1j) ** l * sh)
    r = g.r
    chirp = np.exp(0.5j * coth * r ** 2)
    src = g.weights * chirp * f.w
    out = np.empty(g.n, dtype=complex)
    for i0 in range(0, g.n, _CHUNK):
        z = np.outer(r[i0:i0 + _CHUNK], r) / sh
        out[i0:i0 + _CHUNK] = _z_jl(z, l) @ src
    return RadialField(g, pref * chirp * out, f.time + t)


def dispersive_ratio(u0, t):
    """(||U(t)u0||_inf |t|^{3/2} / ||u0||_1,  ||U(t)u0||_inf |2 pi sinh t|^{3/2} / ||u0||_1)."""
    l1 = lp_norm(u0, 1)
    if l1 == 0.0:
        raise UndefinedRatioError("zero initial data")
    sup = lp_norm(mehler_apply(u0, t), math.inf)
    return sup * abs(t) ** 1.5 / l1, sup * abs(2 * math.pi * math.sinh(t)) ** 1.5 / l1


def galilean_apply(f, t, which="J", method="direct"):
    g = f.grid
    r = g.r
    sh, ch = math.sinh(t), math.cosh(t)
    if which not in ("J", "H"):
        raise ValueError(f"unknown operator {which!r}")
    if method == "direct":
        grad = radial_derivative(f) - f.w / r
        if which == "J":
            out = sh * r * f.w + 1j * ch * grad
        else:
            out = ch * r * f.w + 1j * sh * grad
        return f.with_w(out)
    if method != "factorized":
        raise ValueError(f"unknown method {method!r}")
    if which == "J":
        rate, front = math.tanh(t), 1j * ch
    else:
        if t == 0:
            raise RangeError("factorized H(t) is singular at t = 0")
        rate, front = ch / sh, 1j * sh
    phase = np.exp(0.5j * rate * r ** 2)
    v = f.with_w(np.conj(phase) * f.w)
    dv = radial_derivative(v) - v.w / r
    return f.with_w(front * phase * dv)


def heisenberg_residual(u0, t, dt, which="J"):
    """||A(t) U(t) u0 - U(t) B u0||_2 / ||B u0||_2 with (A, B) = (J, i grad) or (H, x).

    The left side uses the split-step flow; U(t) on the vector field B u0 is
    the l = 1 Mehler quadrature.
    """
    r = u0.grid.r
    if which == "J":
        b = u0.with_w(1j * (radial_derivative(u0) - u0.w / r))
    else:
        b = u0.with_w(r * u0.w)
    scale = lp_norm(b, 2)
    if scale == 0.0:
        raise UndefinedRatioError("zero initial data")
    if t == 0:
        return 0.0
    lhs = galilean_apply(linear_flow(u0, t, dt, tail_threshold=None), t, which)
    rhs = mehler_apply(b, t, l=1)
    return lp_norm(lhs - rhs, 2) / scale


EMBEDDING_PAIRS = ((10.0, 30.0 / 13.0), (18.0, 18.0 / 7.0))


def embedding_ratio(f, t, p_out, p_in):
    """||f||_{p_out} / ||J(t) f||_{p_in} for the two embedding pairs."""
    if not any(abs(p_out - a) < 1e-12 and abs(p_in - b) < 1e-12 for a, b in EMBEDDING_PAIRS):
        raise RangeError(f"unsupported embedding pair ({p_out}, {p_in})")
    den = lp_norm(galilean_apply(f, t, "J"), p_in)
    if den == 0.0:
        raise UndefinedRatioError("J(t) f vanishes")
    return lp_norm(f, p_out) / den


def galilean_norms_sq(f, t):
    """(||J(t)u||^2, ||H(t)u||^2) from the quadratic forms in grad u and x u.

    The expansion keeps ||J u||^2 - ||H u||^2 = ||grad u||^2 - ||x u||^2 exact
    to rounding.
    """
    g = f.grid
    grad2 = gradient_norm_sq(f)
    x2 = float(4 * math.pi * np.dot(g.weights, np.abs(f.w) ** 2 * g.r ** 2))
    wr = radial_derivative(f)
    cross = float(-4 * math.pi * np.dot(g.weights, g.r * np.imag(np.conj(f.w) * wr)))
    sh, ch = math.sinh(f.time if t is None else t), math.cosh(f.time if t is None else t)
    j2 = sh * sh * x2 + ch * ch * grad2 + 2 * sh * ch * cross
    h2 = ch * ch * x2 + sh * sh * grad2 + 2 * sh * ch * cross
    return j2, h2
