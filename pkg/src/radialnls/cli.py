"""Command line entry point: simulate, verify, bubbles, scatter, sweep.

The default output root is taken from $RADIALNLS_OUT (falls back to ./runs).
Exit codes: 0 success, 10 a verification check failed, otherwise the
exit_code of the raised error class (see errors.py).
"""
from __future__ import annotations

import argparse
import csv
import glob
import json
import math
import os
import sys

import numpy as np

from .analysis import (CONCENTRATING, classify, concentrating_gradient_mass, detect_bubble,
                       verify_concentration)
from .config import load_config, save_config
from .diagnostics import (decay_margin, energy_identity_residual, local_mass_audit, morawetz,
                          partition_intervals, spacetime_norm, decay_horizon)
from .errors import RadialNLSError
from .evolve import SnapshotStream, evolve, read_run, write_run
from .grid import concentrate, lp_norm, moment_norm_sq, sample_profile
from .linear import galilean_apply
from .scattering import extract_uplus

ENV_OUT = "RADIALNLS_OUT"
VERIFY_FAILED = 10
SUITES = ("conservation", "decay", "morawetz", "galilean")


def _out_root():
    return os.environ.get(ENV_OUT, "runs")


def _emit(fh, name, ok, value, limit):
    fh.write(f"{'PASS' if ok else 'FAIL'} {name} measured={value:.6g} limit={limit:.6g}\n")
    return ok


# ---------------------------------------------------------------- simulate

def simulate(config_path, out=None):
    cfg = load_config(config_path)
    stem = os.path.splitext(os.path.basename(config_path))[0]
    out = out or os.path.join(_out_root(), stem)
    stream = evolve(cfg)
    write_run(stream, cfg, out)
    return out


# ---------------------------------------------------------------- verify

def _check_conservation(cfg, stream, fh):
    led = stream.ledgers
    l0 = led[int(np.argmin(np.abs(stream.times)))]
    m = max(abs(l.M - l0.M) for l in led) / l0.M if l0.M else 0.0
    e = max(abs(l.E - l0.E) for l in led) / abs(l0.E) if l0.E else 0.0
    ok = _emit(fh, "conservation.mass_drift", m <= 1e-12, m, 1e-12)
    ok &= _emit(fh, "conservation.energy_drift", e <= 1e-5, e, 1e-5)
    split = max(abs(l.E - (l.E1 - l.E2)) / max(abs(l.E1), 1e-300) for l in led)
    ok &= _emit(fh, "conservation.E_equals_E1_minus_E2", split <= 1e-10, split, 1e-10)
    rel = max(abs((l.calE1 - l.calE2) - l.E) / max(abs(l.E1), 1e-300) for l in led)
    ok &= _emit(fh, "conservation.calE_difference", rel <= 1e-8, rel, 1e-8)
    return ok


def _check_decay(cfg, stream, fh):
    l0 = stream.ledgers[int(np.argmin(np.abs(stream.times)))]
    scale = l0.E1 if l0.E1 > 0 else 1.0
    ok = True
    if stream.times[0] == 0.0:
        marg = decay_margin(stream)[:, 1].min() / scale
        ok &= _emit(fh, "decay.potential_margin", marg >= -1e-6, marg, -1e-6)
    if len(stream) >= 3:
        rep = energy_identity_residual(stream)
        ok &= _emit(fh, "decay.calE1_monotone", rep.calE1_rise <= 1e-8, rep.calE1_rise, 1e-8)
        ok &= _emit(fh, "decay.calE2_monotone", rep.calE2_rise <= 1e-8, rep.calE2_rise, 1e-8)
        ok &= _emit(fh, "decay.identity_residual", rep.max_residual <= 1e-3, rep.max_residual, 1e-3)
        ok &= _emit(fh, "decay.H_bound", rep.h_ratio_max <= 1 + 1e-6, rep.h_ratio_max, 1 + 1e-6)
    return ok


def _check_morawetz(cfg, stream, fh, refine=True):
    ok = True
    R = min(2.0, cfg.r_max / 2)
    audit = local_mass_audit(stream, R)
    hardy = float(np.max(audit[:, 1] - 1.05 * audit[:, 2]))
    ok &= _emit(fh, "morawetz.hardy", hardy <= 0, hardy, 0.0)
    if len(stream) >= 3:
        lip = float(np.nanmax(audit[:, 3]))
        ok &= _emit(fh, "morawetz.lipschitz", lip <= 1.05, lip, 1.05)
    a = stream.times[0]
    b = min(stream.times[-1], a + 1.0)
    if b > a and len(stream) >= 2:
        _, _, ratio = morawetz(stream, (a, b), 2.0)
        if refine:
            fine = evolve(cfg.replace(n=2 * cfg.n))
            _, _, r2 = morawetz(fine, (a, b), 2.0)
            rel = abs(r2 - ratio) / ratio if ratio > 0 else 0.0
            ok &= _emit(fh, "morawetz.refinement", rel <= 0.1, rel, 0.1)
        else:
            ok &= _emit(fh, "morawetz.ratio_finite", math.isfinite(ratio), ratio, math.inf)
    return ok


def _check_galilean(cfg, stream, fh):
    ok = True
    i0 = int(np.argmin(np.abs(stream.times)))
    u0 = stream.fields[i0]
    worst = 0.0
    for t in (0.3, 0.7, 1.5):
        for which in ("J", "H"):
            d = lp_norm(galilean_apply(u0, t, which) - galilean_apply(u0, t, which, "factorized"), 2)
            worst = max(worst, d)
        rec = u0.with_w(math.cosh(t) * galilean_apply(u0, t, "H").w
                        - math.sinh(t) * galilean_apply(u0, t, "J").w)
        worst_rec = lp_norm(rec - u0.with_w(u0.grid.r * u0.w), 2)
        ok &= _emit(fh, f"galilean.reconstruction_t{t}", worst_rec <= 1e-8, worst_rec, 1e-8)
    ok &= _emit(fh, "galilean.direct_vs_factorized", worst <= 1e-8, worst, 1e-8)
    x0 = math.sqrt(moment_norm_sq(u0))
    h = max(lp_norm(galilean_apply(f, f.time, "H"), 2) for f in stream.fields)
    ratio = h / x0 if x0 > 0 else 0.0
    ok &= _emit(fh, "galilean.H_bound", ratio <= 1 + 1e-6, ratio, 1 + 1e-6)
    return ok


def verify(run_dir, suite="all", fh=None, refine=True):
    fh = fh or sys.stdout
    cfg, stream = read_run(run_dir)
    suites = SUITES if suite == "all" else (suite,)
    ok = True
    for s in suites:
        if s == "conservation":
            ok &= _check_conservation(cfg, stream, fh)
        elif s == "decay":
            ok &= _check_decay(cfg, stream, fh)
        elif s == "morawetz":
            ok &= _check_morawetz(cfg, stream, fh, refine)
        elif s == "galilean":
            ok &= _check_galilean(cfg, stream, fh)
        else:
            raise RadialNLSError(f"unknown suite {s!r}")
    return bool(ok)


# ---------------------------------------------------------------- bubbles / scatter / sweep

def inject(stream, N, intervals):
    """Add concentrate(N) to the snapshot nearest the middle of each interval."""
    g = stream.grid
    bubble = sample_profile(concentrate(N), g, tail_threshold=1.0)
    fields = list(stream.fields)
    for a, b in intervals:
        i = int(np.argmin(np.abs(stream.times - 0.5 * (a + b))))
        fields[i] = (fields[i] + bubble).at_time(fields[i].time)
    return SnapshotStream(stream.times, fields, dt=stream.dt, steps=stream.steps)


def bubbles(run_dir, eta1=None, eta2=None, inject_n=None, out=None):
    cfg, stream = read_run(run_dir)
    eta1 = cfg.eta1 if eta1 is None else eta1
    eta2 = cfg.eta2 if eta2 is None else eta2
    window = (float(stream.times[0]), float(stream.times[-1]))
    part = partition_intervals(stream, window, eta1)
    if inject_n:
        stream = inject(stream, inject_n, part.intervals)
    reports = []
    for iv in part.intervals:
        rep = detect_bubble(stream, iv, eta1, cfg.c_eta1)
        doc = json.loads(rep.to_json())
        if rep.found:
            f = stream.at(rep.t_j)
            label = classify(rep, iv, eta2, cfg.c_eta1)
            doc["classification"] = label
            doc["checks"] = list(verify_concentration(f, rep, cfg.c_eta1))
            if label == CONCENTRATING:
                doc["gradient_mass"] = concentrating_gradient_mass(f, iv, eta2)
        doc["constants"].update(eta2=eta2)
        reports.append(doc)
    path = os.path.join(out or run_dir, "bubbles.json")
    with open(path, "w") as fh:
        json.dump(reports, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return reports


def scatter(run_dir, eps=None, out=None):
    cfg, stream = read_run(run_dir)
    eps = cfg.eps_small if eps is None else eps
    l0 = stream.ledgers[int(np.argmin(np.abs(stream.times)))]
    t0 = decay_horizon(l0.E1, eps)
    res = extract_uplus(stream, horizon=t0)
    doc = {
        "eps": eps,
        "T0": t0,
        "d": [float(x) for x in res.trace.d],
        "converged": res.detected,
        "residual": res.residual,
        "uplus_sha256": res.checksum(),
    }
    out = out or run_dir
    with open(os.path.join(out, "scatter.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if res.state is not None:
        np.save(os.path.join(out, "uplus.npy"), np.asarray(res.state.w), allow_pickle=False)
    return doc


SWEEP_COLUMNS = ("config", "grad_norm", "E1_0", "L10", "mass_drift", "energy_drift",
                 "tail_max", "exponent")


def sweep(pattern, out=None):
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise RadialNLSError(f"no configs match {pattern!r}")
    out = out or os.path.join(_out_root(), "sweep")
    rows = []
    for p in paths:
        run = simulate(p, os.path.join(out, os.path.splitext(os.path.basename(p))[0]))
        cfg, stream = read_run(run)
        l0, led = stream.ledgers[0], stream.ledgers
        grad = math.sqrt(max(2 * l0.E1 - 2 * l0.pot6 / 3, 0.0))
        l10 = spacetime_norm(stream, (stream.times[0], stream.times[-1]), 10, 10)
        md = max(abs(l.M - l0.M) for l in led) / l0.M if l0.M else 0.0
        ed = max(abs(l.E - l0.E) for l in led) / abs(l0.E) if l0.E else 0.0
        rows.append([os.path.basename(p), grad, l0.E1, l10, md, ed, float(stream.tail_trace.max())])
    g = np.array([r[1] for r in rows])
    v = np.array([r[3] for r in rows])
    pos = (g > 0) & (v > 0)
    expo = float(np.polyfit(np.log(g[pos]), np.log(v[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "aggregate.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SWEEP_COLUMNS)
        for r in rows:
            wr.writerow([r[0]] + ["%.17g" % x for x in r[1:]] + ["%.17g" % expo])
    return path


# ---------------------------------------------------------------- argparse

def build_parser():
    p = argparse.ArgumentParser(prog="radialnls", description=__doc__.splitlines()[0])
    p.add_argument("--seedless", action="store_true",
                   help="deterministic mode (always on; no random numbers are used)")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="evolve a config and write a run directory")
    s.add_argument("--config", required=True)
    s.add_argument("--out")

    v = sub.add_parser("verify", help="run invariant checks on a run directory")
    v.add_argument("run_dir")
    v.add_argument("--suite", default="all", choices=SUITES + ("all",))
    v.add_argument("--no-refine", action="store_true", help="skip the n -> 2n Morawetz rerun")

    b = sub.add_parser("bubbles", help="bubble reports per interval")
    b.add_argument("run_dir")
    b.add_argument("--eta1", type=float)
    b.add_argument("--eta2", type=float)
    b.add_argument("--inject", type=float, metavar="N",
                   help="add concentrate(N) at the middle of each interval before analysis")
    b.add_argument("--out")

    c = sub.add_parser("scatter", help="Cauchy trace and u_+ extraction")
    c.add_argument("run_dir")
    c.add_argument("--eps", type=float)
    c.add_argument("--out")

    w = sub.add_parser("sweep", help="simulate every matching config and aggregate")
    w.add_argument("--config", required=True, help="glob pattern")
    w.add_argument("--out")

    t = sub.add_parser("template", help="write a default config file")
    t.add_argument("path")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "simulate":
            print(simulate(args.config, args.out))
        elif args.cmd == "verify":
            if not verify(args.run_dir, args.suite, refine=not args.no_refine):
                return VERIFY_FAILED
        elif args.cmd == "bubbles":
            reps = bubbles(args.run_dir, args.eta1, args.eta2, args.inject, args.out)
            for r in reps:
                print(json.dumps({k: r[k] for k in ("interval", "found", "N_j", "classification")}))
        elif args.cmd == "scatter":
            doc = scatter(args.run_dir, args.eps, args.out)
            print(json.dumps({k: doc[k] for k in ("eps", "T0", "converged", "residual")}))
        elif args.cmd == "sweep":
            print(sweep(args.config, args.out))
        elif args.cmd == "template":
            from .config import RunConfig

            save_config(RunConfig(), args.path)
    except RadialNLSError as exc:
        sys.stderr.write(f"error[{type(exc).__name__}]: {exc}\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
