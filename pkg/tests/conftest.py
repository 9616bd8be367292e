import numpy as np
import pytest

from dfdmag.textures import FractalTexture, make_texture


@pytest.fixture(scope="session")
def fractal128():
    return make_texture("fractal", 128, seed=0).rasterize()


@pytest.fixture(scope="session")
def fractal_scene256():
    return FractalTexture(256, seed=0)


@pytest.fixture(scope="session")
def fractal_scene128():
    return FractalTexture(128, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    log = request.config.stash[_ACCEPTANCE]

    def record(number, ok, detail):
        log[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
