import numpy as np
import pytest

from radialnls import (ConfigurationError, IntegrityError, RunConfig, TruncationError,
                       UndefinedRatioError, evolve, gaussian, load_config, lp_norm, sample_profile,
                       step, zero)
from radialnls.config import config_from_dict, save_config
from radialnls.evolve import convergence_order, final_state, read_ledger_csv, read_run, write_run
from radialnls.grid import zero_field
from radialnls.linear import linear_flow


def test_config_roundtrip(tmp_path):
    cfg = RunConfig(r_max=32.0, n=2048, profile=gaussian(0.3, 1.2))
    p = tmp_path / "c.json"
    save_config(cfg, p)
    assert load_config(p) == cfg


@pytest.mark.parametrize("bad", [
    {"eta3": 0.1, "eta2": 0.05},
    {"eta1": 1.0},
    {"dt": 0.0},
    {"t_end": -1.0},
    {"tail_threshold": 1.0},
    {"n": 1000},
    {"snapshot_stride": 0},
    {"unknown_key": 1},
])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        config_from_dict(bad)


def test_config_parse_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(p)


def test_step_zero(grid):
    f = step(zero_field(grid), 1e-3)
    assert np.all(f.w == 0)


def test_step_linear_regime(grid):
    f = sample_profile(gaussian(1e-6, 1.0), grid)
    a = step(f, 1e-3)
    b = linear_flow(f, 1e-3, 1e-3)
    assert np.max(np.abs(a.w - b.w)) < 1e-18


def test_step_mass_1000(u0):
    f = u0
    for _ in range(1000):
        f = step(f, 1e-3)
    assert lp_norm(f, 2) == pytest.approx(lp_norm(u0, 2), rel=1e-12)


def test_step_dt_guard(u0):
    with pytest.raises(ConfigurationError):
        step(u0, 1.0)


def test_evolve_t_end_zero():
    s = evolve(RunConfig(t_end=0.0))
    assert len(s) == 1 and s.times[0] == 0.0


def test_evolve_truncation():
    with pytest.raises(TruncationError) as exc:
        evolve(RunConfig(t_end=2.0, snapshot_stride=100))
    assert 0 < exc.value.time <= 2.0


def test_evolve_stream_invariants(run_big_box):
    cfg, s = run_big_box
    assert len(s) == 201
    assert np.allclose(np.diff(s.times), 0.01, atol=1e-12)
    assert s.steps == 2000
    assert s.tail_trace.max() < 1e-6


def test_tail_default_box(run_small_box):
    # at r_max = 16 the spread gaussian leaves well over 1e-6 of its mass near the wall by t = 2
    cfg, s = run_small_box
    assert s.tail_trace[-1] > 1e-6
    assert s.tail_trace[-1] < 1e-2


def test_determinism():
    cfg = RunConfig(t_end=0.2, snapshot_stride=20)
    a, b = evolve(cfg), evolve(cfg)
    for fa, fb in zip(a.fields, b.fields):
        assert fa.w.tobytes() == fb.w.tobytes()


def test_backward_forward():
    cfg = RunConfig(r_max=32.0, n=2048, t_end=1.0, snapshot_stride=100)
    u0 = sample_profile(cfg.profile, cfg.grid)
    end = final_state(cfg, u0)
    back = final_state(cfg.replace(direction=-1), end)
    assert abs(back.time) < 1e-12
    assert lp_norm(back - u0, 2) < 1e-8


def test_backward_stream_ordering():
    s = evolve(RunConfig(t_end=0.1, snapshot_stride=10, direction=-1))
    assert s.times[0] == pytest.approx(-0.1) and s.times[-1] == 0.0


def test_convergence_order():
    cfg = RunConfig(r_max=32.0, n=2048, t_end=1.0, dt=4e-3)
    assert 1.8 <= convergence_order(cfg) <= 2.2


def test_convergence_order_linear_regime():
    cfg = RunConfig(r_max=32.0, n=2048, t_end=1.0, dt=4e-3, profile=gaussian(1e-6, 1.0))
    assert 1.8 <= convergence_order(cfg) <= 2.2


def test_convergence_order_zero():
    with pytest.raises(UndefinedRatioError):
        convergence_order(RunConfig(t_end=0.1, dt=4e-3, profile=zero()))


def test_energy_drift_scales_dt2():
    drifts = []
    for dt in (4e-3, 2e-3):
        cfg = RunConfig(r_max=32.0, n=2048, dt=dt, t_end=1.0, snapshot_stride=int(round(1.0 / dt)))
        s = evolve(cfg)
        drifts.append(abs(s.ledgers[-1].E - s.ledgers[0].E))
    assert 3.5 <= drifts[0] / drifts[1] <= 4.5


def test_persistence_roundtrip(tmp_path):
    cfg = RunConfig(t_end=0.1, snapshot_stride=50)
    s = evolve(cfg)
    write_run(s, cfg, tmp_path / "run")
    cfg2, s2 = read_run(tmp_path / "run")
    assert cfg2 == cfg
    for a, b in zip(s.fields, s2.fields):
        assert a.w.tobytes() == b.w.tobytes()
    rows = read_ledger_csv(tmp_path / "run" / "ledger.csv")
    assert rows.shape == (3, 10)
    assert rows[0, 3] == pytest.approx(s.ledgers[0].E1, rel=1e-16)


def test_persistence_csv_snapshots(tmp_path):
    cfg = RunConfig(t_end=0.1, snapshot_stride=50, snapshot_format="csv")
    s = evolve(cfg)
    write_run(s, cfg, tmp_path / "run")
    _, s2 = read_run(tmp_path / "run")
    assert np.max(np.abs(s2.fields[-1].w - s.fields[-1].w)) == 0.0


def test_persistence_integrity(tmp_path):
    cfg = RunConfig(t_end=0.1, snapshot_stride=50)
    write_run(evolve(cfg), cfg, tmp_path / "run")
    p = tmp_path / "run" / "ledger.csv"
    lines = p.read_text().splitlines()
    lines[1] = lines[1].replace("0", "1", 1)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(IntegrityError):
        read_run(tmp_path / "run")
