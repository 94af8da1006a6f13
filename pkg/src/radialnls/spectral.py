"""Sine transforms, spectral derivatives and Littlewood-Paley projections.

Coefficients follow the unnormalized DST-I of the interior samples
w_1..w_{n-1}; the coefficient of the dead mode m = n is kept as 0 so that
coefficient arrays have the grid length. With this convention

    w(r) = (1/n) sum_m c_m sin(k_m r),
    dr * sum_i |w_i|^2 = dr/(2n) * sum_m |c_m|^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.fft as sfft

from .errors import RangeError, UndefinedRatioError
from .grid import FOUR_PI, RadialField, lp_norm


def dst_forward(f):
    w = f.w
    c = np.zeros(f.grid.n, dtype=complex)
    c[:-1] = sfft.dst(w[:-1], type=1)
    return c


def dst_backward(coeffs, grid, time=0.0):
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (grid.n,):
        raise ValueError(f"coefficient length {coeffs.shape} does not match grid size {grid.n}")
    w = np.zeros(grid.n, dtype=complex)
    w[:-1] = sfft.idst(coeffs[:-1], type=1)
    return RadialField(grid, w, time)


def apply_multiplier(f, mult):
    """Inverse transform of mult * (transform of f)."""
    return dst_backward(dst_forward(f) * mult, f.grid, f.time)


def radial_derivative(f, with_origin=False):
    """dw/dr at r_1..r_n from the cosine series of the derivative.

    With ``with_origin`` the value at r = 0 is prepended (length n + 1).
    """
    g = f.grid
    c = dst_forward(f)
    x = np.zeros(g.n + 1, dtype=complex)
    x[1:g.n] = c[:-1] * g.wavenumbers[:-1]
    d = sfft.dct(x, type=1) / (2 * g.n)
    return d if with_origin else d[1:]


def gradient_norm_sq(f):
    """||grad u||_2^2 = 4 pi \\int |dw/dr|^2 dr, evaluated on the coefficients."""
    g = f.grid
    c = dst_forward(f)
    return float(FOUR_PI * g.dr / (2 * g.n) * np.dot(g.wavenumbers ** 2, np.abs(c) ** 2))


def radial_gradient(f):
    """Radial component of grad u in the w-representation: r u_r = w_r - w/r."""
    return f.with_w(radial_derivative(f) - f.w / f.grid.r)


# ---------------------------------------------------------------- Littlewood-Paley

def _bridge(x):
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def cutoff(s):
    """C^infinity cutoff: 1 on [0, 1], 0 on [2, inf)."""
    s = np.asarray(s, dtype=float)
    a = _bridge(2.0 - s)
    b = _bridge(s - 1.0)
    return a / (a + b)


def annulus_multiplier(k, N):
    """phi_N(k) = psi(k/N) - psi(2k/N); supported in N/2 < k < 2N."""
    return cutoff(k / N) - cutoff(2.0 * k / N)


@dataclass(frozen=True, eq=False)
class MultiplierBank:
    grid: object
    levels: tuple = field(init=False)
    tables: dict = field(init=False, repr=False)

    def __post_init__(self):
        g = self.grid
        lo = 4.0 * math.pi / g.r_max
        hi = g.k_max / 4.0
        j = math.ceil(math.log2(lo))
        levels = []
        while 2.0 ** j <= hi:
            levels.append(2.0 ** j)
            j += 1
        if not levels:
            raise RangeError("grid resolves no dyadic level")
        k = g.wavenumbers
        tables = {N: annulus_multiplier(k, N) for N in levels}
        for t in tables.values():
            t.setflags(write=False)
        object.__setattr__(self, "levels", tuple(levels))
        object.__setattr__(self, "tables", tables)

    def check_level(self, N):
        N = float(N)
        if N not in self.tables:
            raise RangeError(f"level {N} outside resolvable dyadic range {self.levels}")
        return N

    def low_remainder(self):
        """Multiplier of P_{<= N_min/2}."""
        return cutoff(2.0 * self.grid.wavenumbers / self.levels[0])

    def high_remainder(self):
        """Multiplier of P_{> N_max}."""
        return 1.0 - cutoff(self.grid.wavenumbers / self.levels[-1])

    def partition_sum(self):
        return self.low_remainder() + sum(self.tables.values()) + self.high_remainder()


_BANKS = {}


def bank_for(grid):
    b = _BANKS.get(grid)
    if b is None:
        b = _BANKS[grid] = MultiplierBank(grid)
    return b


def lp_project(f, N, bank=None):
    bank = bank or bank_for(f.grid)
    N = bank.check_level(N)
    return apply_multiplier(f, bank.tables[N])


def lp_project_low(f, N, bank=None):
    bank = bank or bank_for(f.grid)
    N = bank.check_level(N)
    return apply_multiplier(f, cutoff(f.grid.wavenumbers / N))


def bernstein_ratio(f, N, p, q, bank=None):
    """||P_N f||_p / (N^{3(1/q - 1/p)} ||P_N f||_q)."""
    if not (1 <= q <= p):
        raise RangeError(f"need 1 <= q <= p, got p={p}, q={q}")
    proj = lp_project(f, N, bank)
    den = lp_norm(proj, q)
    if den == 0.0:
        raise UndefinedRatioError(f"P_{N} f vanishes")
    inv_p = 0.0 if p == math.inf else 1.0 / p
    return lp_norm(proj, p) / (N ** (3.0 * (1.0 / q - inv_p)) * den)
