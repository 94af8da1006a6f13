import pytest

from radialnls import RunConfig, evolve, gaussian, make_grid, sample_profile

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def grid():
    return make_grid(16.0, 1024)


@pytest.fixture(scope="session")
def u0(grid):
    return sample_profile(gaussian(1.0, 1.0), grid)


@pytest.fixture(scope="session")
def run_small_box():
    """gaussian(1,1) at the default grid; the box is too small for 1e-6 tails at t = 2."""
    cfg = RunConfig(r_max=16.0, n=1024, dt=1e-3, t_end=2.0, snapshot_stride=10, tail_threshold=1e-2)
    return cfg, evolve(cfg)


@pytest.fixture(scope="session")
def run_big_box():
    cfg = RunConfig(r_max=64.0, n=4096, dt=1e-3, t_end=2.0, snapshot_stride=10)
    return cfg, evolve(cfg)


@pytest.fixture(scope="session")
def run_big_box_fine():
    cfg = RunConfig(r_max=64.0, n=8192, dt=1e-3, t_end=1.0, snapshot_stride=10)
    return cfg, evolve(cfg)


def record(n, ok, detail):
    prev = ACCEPTANCE.get(n)
    ok = ok and (prev is None or prev[0])
    details = (prev[1] + "; " if prev else "") + detail
    ACCEPTANCE[n] = (ok, details)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
