import numpy as np
import pytest

from gevrey_tori import Frequency, MapSpec, TrigPoly, direct_expansion

# golden mean, tau = 1: min_k |e^{2 pi i k omega} - 1| k, attained at k = 1
GOLDEN_NU = 1.8640648476264552


@pytest.fixture(scope="session")
def golden():
    return Frequency("golden", tau=1.0, K_max=10_000)


@pytest.fixture(scope="session")
def golden_small():
    return Frequency("golden", tau=1.0, K_max=400)


@pytest.fixture(scope="session")
def sin_map(golden):
    return MapSpec(TrigPoly.from_cos_sin([0, 0], [0, 1]), 3, golden)


@pytest.fixture(scope="session")
def mixed_map(golden_small):
    g = TrigPoly.from_cos_sin([0.3, 0.7, 0.2], [0, 1.0, 0.4])
    return MapSpec(g, 2, golden_small)


@pytest.fixture(scope="session")
def direct64(sin_map):
    return direct_expansion(sin_map, 64)


@pytest.fixture(scope="session")
def direct32(direct64):
    from gevrey_tori.lindstedt import HullExpansion
    return HullExpansion(direct64.u.truncate(32), direct64.mu.truncate(32), direct64.map)


def random_trig(rng, degree, prec="double", zero_mean=True):
    cos = list(rng.normal(size=degree + 1))
    sin = list(rng.normal(size=degree + 1))
    if zero_mean:
        cos[0] = 0.0
    return TrigPoly.from_cos_sin(cos, sin, prec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def direct256(sin_map):
    return direct_expansion(sin_map, 256)


# acceptance lines are echoed in the terminal summary so they survive output capture
def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for ln in lines:
            terminalreporter.write_line(ln)


@pytest.fixture
def verdict(request):
    """verdict(label, ok, detail): record one PASS/FAIL line and assert ok."""
    def _verdict(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        print(line)
        request.config._acceptance_lines.append(line)
        assert ok, line
    return _verdict
