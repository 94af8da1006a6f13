import math

import numpy as np
import pytest

from radialnls import RangeError, RunConfig, evolve, gaussian, lp_norm, sample_profile
from radialnls.diagnostics import (IntervalPartition, decay_horizon, decay_margin,
                                   energy_identity_residual, ledger, local_mass, local_mass_audit,
                                   mass_cutoff, morawetz, morawetz_interval_sum,
                                   partition_intervals, spacetime_norm)
from radialnls.evolve import SnapshotStream
from radialnls.grid import zero_field

E1_GAUSS = 4.533454405168993   # 3/4 pi^{3/2} + 1/3 (pi/3)^{3/2}
E2_GAUSS = 4.176245997623781   # 3/4 pi^{3/2}


def frozen_stream(f, times):
    return SnapshotStream.from_fields([f.at_time(t) for t in times])


def test_ledger_gaussian(u0):
    led = ledger(u0)
    assert led.E1 == pytest.approx(E1_GAUSS, rel=1e-6)
    assert led.E2 == pytest.approx(E2_GAUSS, rel=1e-6)
    assert led.calE1 == pytest.approx(led.E1, rel=1e-10)
    assert led.calE2 == pytest.approx(led.E2, rel=1e-10)
    assert led.E == pytest.approx(led.E1 - led.E2, rel=1e-10)


def test_ledger_zero(grid):
    led = ledger(zero_field(grid))
    assert led.as_row()[1:] == [0.0] * 7


def test_ledger_invariants_along_run(run_big_box):
    _, s = run_big_box
    for led in s.ledgers:
        assert min(led.E1, led.E2, led.calE1, led.calE2, led.pot6) >= 0
        assert abs(led.E - (led.E1 - led.E2)) <= 1e-10 * led.E1
        assert abs(led.calE1 - led.calE2 - led.E) <= 1e-8 * led.E1


def test_decay_bound_value():
    assert 3 / math.cosh(1.0) ** 6 == pytest.approx(0.22222326723495064, rel=1e-14)


def test_decay_margin_t0(u0):
    s = SnapshotStream.from_fields([u0])
    m = decay_margin(s)
    from radialnls.spectral import gradient_norm_sq

    assert m[0, 1] == pytest.approx(1.5 * gradient_norm_sq(u0), rel=1e-12)


def test_decay_margin_zero(grid):
    m = decay_margin(frozen_stream(zero_field(grid), [0.0, 0.1]))
    assert np.all(m[:, 1] == 0)


def test_decay_margin_run(run_big_box):
    _, s = run_big_box
    m = decay_margin(s)
    assert m[:, 1].min() >= -1e-6 * s.ledgers[0].E1


def test_identity_residual_nonlinear():
    cfg = RunConfig(r_max=32.0, n=2048, t_end=1.0, snapshot_stride=10)
    rep = energy_identity_residual(evolve(cfg))
    assert rep.max_residual < 1e-3
    assert rep.calE1_rise <= 1e-8


def test_identity_residual_linear_regime():
    cfg = RunConfig(r_max=32.0, n=2048, t_end=1.0, snapshot_stride=10, profile=gaussian(1e-3, 1.0))
    s = evolve(cfg)
    c1 = np.array([l.calE1 for l in s.ledgers])
    # nonlinear part is a^4 ~ 1e-12 smaller; what is left is splitting error
    assert np.ptp(c1) <= 1e-6 * c1[0]


def test_identity_backward_branch():
    cfg = RunConfig(r_max=32.0, n=2048, t_end=1.0, snapshot_stride=10, direction=-1)
    s = evolve(cfg)
    c1 = np.array([l.calE1 for l in s.ledgers])
    assert np.all(np.diff(c1) >= -1e-8 * c1[-1])
    rep = energy_identity_residual(s)
    assert rep.calE1_rise <= 1e-8
    assert rep.max_residual < 1e-3


def test_decay_horizon_values():
    assert decay_horizon(1.0, 1.0) == pytest.approx(0.6237732161992294, rel=1e-14)
    assert decay_horizon(1.0, 3 ** (1 / 6)) == 0.0
    assert decay_horizon(1.0, 2.0) == 0.0
    assert decay_horizon(0.0, 0.5) == 0.0


def test_decay_horizon_defining_equation():
    t0 = decay_horizon(4.5, 0.5)
    assert 3 * 4.5 / math.cosh(t0) ** 6 == pytest.approx(0.5 ** 6, rel=1e-12)


def test_mass_cutoff():
    s = np.linspace(0, 1.5, 151)
    c = mass_cutoff(s)
    assert np.all(c[s <= 0.5] == 1) and np.all(c[s >= 1] == 0)


def test_local_mass_large_radius(u0):
    assert local_mass(u0, 8.0) == pytest.approx(2.359730492414697, rel=1e-6)


def test_local_mass_zero(grid):
    assert local_mass(zero_field(grid), 1.0) == 0.0


def test_local_mass_range(u0):
    with pytest.raises(RangeError):
        local_mass(u0, 9.0)
    with pytest.raises(RangeError):
        local_mass(u0, 0.0)


@pytest.mark.parametrize("R", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_local_mass_bounds(run_big_box, R):
    _, s = run_big_box
    a = local_mass_audit(s, R)
    assert np.all(a[:, 1] <= 1.05 * a[:, 2])
    assert np.nanmax(a[:, 3]) <= 1.05


def test_spacetime_constant_stream(u0):
    s = frozen_stream(u0, np.linspace(0, 1, 11))
    assert spacetime_norm(s, (0, 1), 10, 10) == pytest.approx(lp_norm(u0, 10), rel=1e-12)


def test_spacetime_zero(grid):
    assert spacetime_norm(frozen_stream(zero_field(grid), [0, 1]), (0, 1), 10, 10) == 0.0


def test_spacetime_nesting(run_big_box):
    _, s = run_big_box
    assert spacetime_norm(s, (0, 0.5), 10, 10) <= spacetime_norm(s, (0, 1), 10, 10)


def test_spacetime_window_error(run_big_box):
    _, s = run_big_box
    with pytest.raises(RangeError):
        spacetime_norm(s, (0, 3), 10, 10)


def test_morawetz_zero(grid):
    lhs, env, ratio = morawetz(frozen_stream(zero_field(grid), [0, 0.5, 1]), (0, 1), 2.0)
    assert lhs == 0 and ratio == 0


def test_morawetz_additivity(run_big_box):
    _, s = run_big_box
    whole = morawetz(s, (0, 1), 2.0, radius=2.0)[0]
    parts = morawetz(s, (0, 0.5), 2.0, radius=2.0)[0] + morawetz(s, (0.5, 1), 2.0, radius=2.0)[0]
    assert abs(whole - parts) <= 1e-10 * whole


def test_morawetz_refinement(run_big_box, run_big_box_fine):
    r1 = morawetz(run_big_box[1], (0, 1), 2.0)[2]
    r2 = morawetz(run_big_box_fine[1], (0, 1), 2.0)[2]
    assert 0 < r1 < math.inf
    assert abs(r2 - r1) <= 0.1 * r1


def test_morawetz_errors(run_big_box):
    _, s = run_big_box
    with pytest.raises(RangeError):
        morawetz(s, (0, 1), 0.5)
    with pytest.raises(RangeError):
        morawetz(s, (0, 1), 100.0)


def test_partition_subthreshold(grid):
    f = sample_profile(gaussian(0.01, 1.0), grid)
    p = partition_intervals(frozen_stream(f, np.linspace(0, 1, 11)), (0, 1), 0.5)
    assert len(p) == 1 and p.flags == ["sub-threshold"]


def _constant_norm_partition(grid, eta1):
    f = sample_profile(gaussian(1.0, 1.0), grid)
    c = lp_norm(f, 10)
    s = frozen_stream(f, np.linspace(0, 1, 4001))
    return partition_intervals(s, (0, 1), eta1), c


def test_partition_constant_stream(grid):
    eta1 = 0.7
    p, c = _constant_norm_partition(grid, eta1)
    want = c ** 10 / eta1 ** 10
    full = [iv for iv, fl in zip(p.intervals, p.flags) if fl != "remainder"]
    assert abs(len(full) - want) <= 1 + 0.02 * want
    lengths = np.array([b - a for a, b in full])
    assert np.ptp(lengths) <= 2.5e-4
    assert all(eta1 <= n <= 2 * eta1 for n, fl in zip(p.norms, p.flags) if fl != "remainder")
    # tiling
    assert p.intervals[0][0] == 0 and p.intervals[-1][1] == 1
    assert all(p.intervals[i][1] == p.intervals[i + 1][0] for i in range(len(p) - 1))


def test_partition_halving(grid):
    p1, _ = _constant_norm_partition(grid, 0.8)
    p2, _ = _constant_norm_partition(grid, 0.8 * 0.5)
    # J scales like eta1^-10; with 4000 snapshot steps the finer partition saturates
    n1 = len(p1)
    n2 = len(p2)
    assert n2 >= min(4000, 0.5 * 1024 * n1)


def test_interval_sums():
    assert morawetz_interval_sum([(0.0, 2.0)]) == (math.sqrt(2.0), 1.0)
    K = 9
    ivs = [(k / K, (k + 1) / K) for k in range(K)]
    assert morawetz_interval_sum(ivs)[1] == pytest.approx(3.0, rel=1e-12)
    edges = [0.0] + [1 - 2.0 ** -j for j in range(1, 40)] + [1.0]
    ivs = list(zip(edges[:-1], edges[1:]))
    ratio = morawetz_interval_sum(ivs)[1]
    # halving tiling of [0, 1]: sum_{j>=1} 2^{-j/2} = 1/(sqrt 2 - 1), inside the j >= 0 bound
    assert ratio <= 3.414213562373096
    assert ratio == pytest.approx(2.414213562373095, rel=1e-5)
    p = IntervalPartition(0.5, ivs, [0.0] * len(ivs))
    assert morawetz_interval_sum(p, (0.0, 1.0))[1] == ratio
