"""Radial spectral simulator for the 3D energy-critical NLS with a repulsive harmonic potential."""
from .errors import *  # noqa: F401,F403
from .grid import (RadialField, RadialGrid, bump, concentrate, gaussian, lp_norm, make_grid,
                   mass, sample_profile, sigma_norm, tail_mass, zero, zero_field)
from .config import RunConfig, load_config
from .evolve import SnapshotStream, evolve, step
from .diagnostics import EnergyLedger, ledger

__version__ = "0.1.0"
