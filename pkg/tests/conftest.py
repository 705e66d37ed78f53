import numpy as np
import pytest

from spinbath import EnvQubit, ModelConfig, ParticleObservable, SystemObservable, SystemQubit


def random_pair(rng, complex_=True):
    v = rng.normal(size=2) + (1j * rng.normal(size=2) if complex_ else 0)
    return v / np.linalg.norm(v)


def random_config(rng, n, complex_=True, g_max=2.0):
    a, b = random_pair(rng, complex_)
    env = []
    for _ in range(n):
        al, be = random_pair(rng, complex_)
        env.append(EnvQubit(al, be, rng.uniform(0.0, g_max)))
    return ModelConfig(SystemQubit(a, b), tuple(env))


def random_particle_block(rng):
    return ParticleObservable(rng.normal(), rng.normal(), rng.normal() + 1j * rng.normal())


def random_system_block(rng):
    return SystemObservable(rng.normal(), rng.normal(), rng.normal() + 1j * rng.normal())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
