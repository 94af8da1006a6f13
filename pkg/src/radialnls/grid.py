"""Radial grid, radial fields and the norm layer.

A radial function u(|x|) on R^3 is stored through w(r) = r u(r) sampled at
r_i = i*dr, i = 1..n, with dr = r_max/n. The node r_n = r_max is the outer
Dirichlet node and r = 0 (where w vanishes) is not stored.

All spatial integrals are trapezoid sums on the uniform grid:

    ||u||_p^p = 4 pi \\int |w|^p r^(2-p) dr.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigurationError, RangeError, TruncationError

FOUR_PI = 4.0 * math.pi
TAIL_FRACTION = 0.9
DEFAULT_TAIL_THRESHOLD = 1e-6


@dataclass(frozen=True, eq=False)
class RadialGrid:
    r_max: float
    n: int
    dr: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dr = self.r_max / self.n
        r = dr * np.arange(1, self.n + 1, dtype=float)
        r[-1] = self.r_max
        k = math.pi * np.arange(1, self.n + 1, dtype=float) / self.r_max
        wts = np.full(self.n, dr)
        wts[-1] = 0.5 * dr
        for a in (r, k, wts):
            a.setflags(write=False)
        object.__setattr__(self, "dr", dr)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "weights", wts)

    @property
    def k_max(self):
        return float(self.wavenumbers[-1])

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.r_max == other.r_max and self.n == other.n

    def __hash__(self):
        return hash((self.r_max, self.n))


def make_grid(r_max, n):
    n_int = int(n)
    if n_int != n or n_int < 8 or n_int & (n_int - 1):
        raise ConfigurationError(f"grid size must be a power of two >= 8, got {n}")
    if not (r_max > 0 and math.isfinite(r_max)):
        raise ConfigurationError(f"r_max must be positive, got {r_max}")
    return RadialGrid(float(r_max), n_int)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of w = r*u at the grid nodes, tagged with a solution time."""

    grid: RadialGrid
    w: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        w = np.array(self.w, dtype=complex)
        if w.shape != (self.grid.n,):
            raise ValueError(f"field length {w.shape} does not match grid size {self.grid.n}")
        if not np.all(np.isfinite(w)):
            raise ValueError("field contains non-finite samples")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "time", float(self.time))

    @property
    def u(self):
        """u at the stored nodes (r > 0)."""
        return self.w / self.grid.r

    def with_w(self, w, time=None):
        return RadialField(self.grid, w, self.time if time is None else time)

    def at_time(self, time):
        return RadialField(self.grid, self.w, time)

    def __add__(self, other):
        return self.with_w(self.w + other.w)

    def __sub__(self, other):
        return self.with_w(self.w - other.w)

    def __mul__(self, c):
        return self.with_w(c * self.w)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_w(-self.w)


def zero_field(grid, time=0.0):
    return RadialField(grid, np.zeros(grid.n, dtype=complex), time)


# ---------------------------------------------------------------- profiles

PROFILE_KINDS = ("gaussian", "bump", "concentrate", "zero")


def gaussian(amplitude=1.0, width=1.0):
    return {"kind": "gaussian", "amplitude": amplitude, "width": width}


def bump(amplitude=1.0, width=1.0, center=0.0):
    return {"kind": "bump", "amplitude": amplitude, "width": width, "center": center}


def concentrate(scale, amplitude=1.0):
    return {"kind": "concentrate", "scale": scale, "amplitude": amplitude}


def zero():
    return {"kind": "zero"}


def concentrate_shape(s):
    """The fixed bump g behind concentrate(N): u(r) = N^(1/2) g(N r)."""
    return np.exp(-0.5 * s * s)


def profile_u(spec, r):
    """Evaluate the profile u(r) of a spec at radii r (pure, no grid)."""
    kind = spec.get("kind")
    r = np.asarray(r, dtype=float)
    if kind == "gaussian":
        a, s = spec.get("amplitude", 1.0), spec.get("width", 1.0)
        if s <= 0:
            raise ConfigurationError("gaussian width must be positive")
        return a * np.exp(-0.5 * (r / s) ** 2)
    if kind == "bump":
        a, s, c = spec.get("amplitude", 1.0), spec.get("width", 1.0), spec.get("center", 0.0)
        if s <= 0:
            raise ConfigurationError("bump width must be positive")
        # shell symmetrized in r so that u is smooth at the origin; bump(a, s, 0) = gaussian(a, s)
        norm = 1.0 + math.exp(-2.0 * (c / s) ** 2)
        return a * (np.exp(-0.5 * ((r - c) / s) ** 2) + np.exp(-0.5 * ((r + c) / s) ** 2)) / norm
    if kind == "concentrate":
        scale, a = spec["scale"], spec.get("amplitude", 1.0)
        if scale <= 0:
            raise ConfigurationError("concentrate scale must be positive")
        return a * math.sqrt(scale) * concentrate_shape(scale * r)
    if kind == "zero":
        return np.zeros_like(r)
    raise ConfigurationError(f"unknown profile kind {kind!r}; expected one of {PROFILE_KINDS}")


def tail_mass(field):
    """Fraction of the L^2 mass carried by r > 0.9 r_max (0 for the zero field)."""
    g = field.grid
    dens = g.weights * np.abs(field.w) ** 2
    total = dens.sum()
    if total == 0.0:
        return 0.0
    return float(dens[g.r > TAIL_FRACTION * g.r_max].sum() / total)


def sample_profile(spec, grid, tail_threshold=DEFAULT_TAIL_THRESHOLD):
    """Render a profile spec on the grid as a field at time 0.

    A ``grad_norm`` entry in the profile rescales the amplitude so that
    ||grad u||_2 takes that value.
    """
    w = grid.r * profile_u(spec, grid.r)
    w = w.astype(complex)
    w[-1] = 0.0
    f = RadialField(grid, w, 0.0)
    target = spec.get("grad_norm")
    if target is not None:
        from .spectral import gradient_norm_sq

        g2 = gradient_norm_sq(f)
        if g2 == 0.0:
            if target != 0:
                raise ConfigurationError("cannot rescale a zero profile to a nonzero gradient norm")
        else:
            f = f * (target / math.sqrt(g2))
    tm = tail_mass(f)
    if tm > tail_threshold:
        raise TruncationError(
            f"profile tail mass {tm:.3e} exceeds threshold {tail_threshold:.1e}; enlarge r_max",
            time=0.0, tail_mass=tm)
    return f


# ---------------------------------------------------------------- norms

def origin_value(field):
    """u(0), i.e. w'(0), evaluated from the sine series."""
    from .spectral import dst_forward

    g = field.grid
    c = dst_forward(field)
    return complex(np.dot(c, g.wavenumbers) / g.n)


def lp_norm(field, p):
    """||u||_p over R^3. p = inf is the max of |u| including the origin."""
    if p == math.inf or p == "inf":
        vals = np.abs(field.u)
        return float(max(vals.max(), abs(origin_value(field))))
    if not p >= 1:
        raise RangeError(f"exponent must satisfy p >= 1, got {p}")
    g = field.grid
    a = np.abs(field.w)
    if not a.any():
        return 0.0
    integrand = a ** p * g.r ** (2.0 - p)
    return float((FOUR_PI * np.dot(g.weights, integrand)) ** (1.0 / p))


def mass(field):
    return lp_norm(field, 2)


def moment_norm_sq(field):
    """||x u||_2^2 = 4 pi \\int |w|^2 r^2 dr."""
    g = field.grid
    return float(FOUR_PI * np.dot(g.weights, np.abs(field.w) ** 2 * g.r ** 2))


def sigma_norm(field):
    """||u||_{H^1} + ||x u||_2."""
    from .spectral import gradient_norm_sq

    l2 = lp_norm(field, 2)
    h1 = math.sqrt(l2 * l2 + gradient_norm_sq(field))
    return h1 + math.sqrt(moment_norm_sq(field))


def ball_norm(field, p, radius, inner=0.0):
    """||u||_{L^p(inner <= |x| < radius)} by masked trapezoid (sharp cut)."""
    g = field.grid
    if radius > g.r_max:
        raise RangeError(f"radius {radius} exceeds r_max {g.r_max}")
    mask = (g.r >= inner) & (g.r < radius)
    a = np.abs(field.w[mask])
    if not a.any():
        return 0.0
    integrand = a ** p * g.r[mask] ** (2.0 - p)
    return float((FOUR_PI * np.dot(g.weights[mask], integrand)) ** (1.0 / p))
