"""Strang split-step evolution of i u_t = -1/2 Lap u - 1/2 |x|^2 u + |u|^4 u.

One step is a half physical phase exp(i dt/2 (r^2/2 - |u|^4)), a full
kinetic phase exp(-i dt k^2/2) in sine space and a second half physical
phase. Every substep is a pointwise phase, so the discrete mass is conserved
to rounding and each substep is undone exactly by -dt.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import csv
import hashlib
import io
import json
import math
import os

import numpy as np

from .config import RunConfig, config_from_dict
from .diagnostics import ledger
from .errors import (ArtifactIOError, ConfigurationError, IntegrityError, RadialNLSError,
                     TruncationError, UndefinedRatioError)
from .grid import DEFAULT_TAIL_THRESHOLD, RadialField, lp_norm, make_grid, sample_profile, tail_mass
from .linear import kinetic_step, plan_for

DT_SAFETY = 100.0


def dt_max(grid):
    return DT_SAFETY * grid.dr ** 2


def _tail(w, grid):
    dens = grid.weights * np.abs(w) ** 2
    tot = dens.sum()
    if tot == 0.0:
        return 0.0
    return float(dens[grid.r > 0.9 * grid.r_max].sum() / tot)


def _physical_half(w, r2half, dt, r):
    a = np.abs(w) / r
    return w * np.exp(0.5j * dt * (r2half - a ** 4))


def _raw_step(w, grid, dt, plan, nonlinear=True):
    if not nonlinear:
        w = plan.potential_half * w
        return plan.potential_half * kinetic_step(w, plan)
    r = grid.r
    r2half = 0.5 * r * r
    w = _physical_half(w, r2half, dt, r)
    w = kinetic_step(w, plan)
    return _physical_half(w, r2half, dt, r)


def step(f, dt, tail_threshold=DEFAULT_TAIL_THRESHOLD):
    g = f.grid
    if abs(dt) > dt_max(g):
        raise ConfigurationError(f"|dt| = {abs(dt)} exceeds dt_max = {dt_max(g):.3e} for this grid")
    w = _raw_step(np.array(f.w), g, dt, plan_for(g, dt))
    out = RadialField(g, w, f.time + dt)
    tm = _tail(out.w, g)
    if tail_threshold is not None and tm > tail_threshold:
        raise TruncationError(f"tail mass {tm:.3e} at t={out.time}", time=out.time, tail_mass=tm)
    return out


@dataclass
class SnapshotStream:
    """Snapshots in increasing time order with their ledgers."""

    times: np.ndarray
    fields: list
    dt: float | None = None
    tail_trace: np.ndarray = None
    steps: int = 0
    ledgers: list = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if self.tail_trace is None:
            self.tail_trace = np.array([tail_mass(f) for f in self.fields])
        if self.ledgers is None:
            self.ledgers = [ledger(f) for f in self.fields]

    def __len__(self):
        return len(self.fields)

    @property
    def grid(self):
        return self.fields[0].grid

    def at(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        return self.fields[i]

    @classmethod
    def from_fields(cls, fields, dt=None):
        return cls([f.time for f in fields], list(fields), dt=dt)


def evolve(cfg: RunConfig, initial=None, nonlinear=True):
    """Run the configuration; snapshots every ``snapshot_stride`` steps.

    With ``direction = -1`` the run goes to -t_end; the stream is stored in
    increasing time order either way. ``initial`` overrides the profile
    (its time tag is the start time). ``nonlinear=False`` drops |u|^4 u.
    """
    g = cfg.grid
    u0 = initial if initial is not None else sample_profile(cfg.profile, g, cfg.tail_threshold)
    ratio = cfg.t_end / cfg.dt
    nsteps = int(round(ratio))
    if abs(ratio - nsteps) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError("t_end must be an integer multiple of dt")
    if nsteps % cfg.snapshot_stride:
        raise ConfigurationError("number of steps must be a multiple of snapshot_stride")
    h = cfg.direction * cfg.dt
    if cfg.dt > dt_max(g):
        raise ConfigurationError(f"dt = {cfg.dt} exceeds dt_max = {dt_max(g):.3e} for this grid")
    plan = plan_for(g, h)
    t0 = u0.time
    w = np.array(u0.w)
    snaps = [u0]
    tails = [_tail(w, g)]
    for k in range(1, nsteps + 1):
        w = _raw_step(w, g, h, plan, nonlinear)
        tm = _tail(w, g)
        if tm > cfg.tail_threshold:
            t = t0 + k * h
            raise TruncationError(f"tail mass {tm:.3e} at t={t}", time=t, tail_mass=tm)
        if k % cfg.snapshot_stride == 0:
            snaps.append(RadialField(g, w, t0 + k * h))
            tails.append(tm)
    if cfg.direction < 0:
        snaps.reverse()
        tails.reverse()
    return SnapshotStream([f.time for f in snaps], snaps, dt=h, tail_trace=np.array(tails),
                          steps=nsteps)


def final_state(cfg, initial=None, nonlinear=True):
    """State at the end of the run without storing intermediate snapshots."""
    cfg = cfg.replace(snapshot_stride=max(1, int(round(cfg.t_end / cfg.dt))))
    s = evolve(cfg, initial, nonlinear)
    return s.fields[-1] if cfg.direction > 0 else s.fields[0]


def convergence_order(cfg, levels=None):
    """Richardson order log2(|u_h - u_h/2| / |u_h/2 - u_h/4|) at t_end."""
    levels = levels or (cfg.dt, cfg.dt / 2, cfg.dt / 4)
    u = [final_state(cfg.replace(dt=h, snapshot_stride=1)) for h in levels]
    for f in u:
        if not np.all(np.isfinite(f.w)):
            raise RadialNLSError("non-finite field in convergence run")
    a = lp_norm(u[0] - u[1], 2)
    b = lp_norm(u[1] - u[2], 2)
    if b == 0.0 or a == 0.0:
        raise UndefinedRatioError("degenerate Richardson ratio (identical runs)")
    return math.log2(a / b)


# ---------------------------------------------------------------- persistence

LEDGER_COLUMNS = ("t", "M", "E", "E1", "E2", "calE1", "calE2", "pot6", "L10", "tail_mass")


def _fmt(x):
    return "%.17g" % x


def ledger_csv(stream):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(LEDGER_COLUMNS)
    for f, led, tm in zip(stream.fields, stream.ledgers, stream.tail_trace):
        wr.writerow([_fmt(x) for x in led.as_row() + [lp_norm(f, 10), tm]])
    return buf.getvalue()


def _snapshot_bytes(f, fmt):
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["r", "re_w", "im_w"])
        for r, w in zip(f.grid.r, f.w):
            wr.writerow([_fmt(r), _fmt(w.real), _fmt(w.imag)])
        return buf.getvalue().encode()
    buf = io.BytesIO()
    np.save(buf, np.asarray(f.w), allow_pickle=False)
    return buf.getvalue()


def _sha(data):
    return hashlib.sha256(data).hexdigest()


def write_run(stream, cfg, out_dir):
    """Write snapshots, ledger.csv and manifest.json; returns the directory."""
    try:
        os.makedirs(os.path.join(out_dir, "snapshots"), exist_ok=True)
        files = {}
        names = []
        for i, f in enumerate(stream.fields):
            name = f"snapshots/snap_{i:05d}.{cfg.snapshot_format}"
            data = _snapshot_bytes(f, cfg.snapshot_format)
            with open(os.path.join(out_dir, name), "wb") as fh:
                fh.write(data)
            files[name] = _sha(data)
            names.append(name)
        led = ledger_csv(stream).encode()
        with open(os.path.join(out_dir, "ledger.csv"), "wb") as fh:
            fh.write(led)
        files["ledger.csv"] = _sha(led)
        manifest = {
            "config": cfg.to_dict(),
            "times": [_fmt(t) for t in stream.times],
            "snapshots": names,
            "steps": stream.steps,
            "dt": stream.dt,
            "checksums": files,
        }
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write run directory {out_dir}: {exc}") from exc
    return out_dir


def _read_snapshot(data, name, grid):
    if name.endswith(".csv"):
        rows = list(csv.reader(io.StringIO(data.decode())))[1:]
        arr = np.array([[float(x) for x in row] for row in rows])
        return arr[:, 1] + 1j * arr[:, 2]
    return np.load(io.BytesIO(data), allow_pickle=False)


def read_ledger_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != LEDGER_COLUMNS:
        raise IntegrityError(f"unexpected ledger header {rows[0]}")
    return np.array([[float(x) for x in row] for row in rows[1:]])


def read_run(run_dir, verify=True):
    """Load (config, stream) from a run directory, checking checksums."""
    mpath = os.path.join(run_dir, "manifest.json")
    try:
        with open(mpath) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise ArtifactIOError(f"missing manifest in {run_dir}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"corrupt manifest: {exc}") from exc
    cfg = config_from_dict(manifest["config"])
    grid = make_grid(cfg.r_max, cfg.n)
    blobs = {}
    for name, digest in manifest["checksums"].items():
        try:
            with open(os.path.join(run_dir, name), "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise ArtifactIOError(f"missing artifact {name}: {exc}") from exc
        if verify and _sha(data) != digest:
            raise IntegrityError(f"checksum mismatch for {name}")
        blobs[name] = data
    times = [float(t) for t in manifest["times"]]
    fields = [RadialField(grid, _read_snapshot(blobs[n], n, grid), t)
              for n, t in zip(manifest["snapshots"], times)]
    stream = SnapshotStream(times, fields, dt=manifest["dt"], steps=manifest["steps"])
    return cfg, stream
