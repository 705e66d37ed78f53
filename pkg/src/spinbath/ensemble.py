"""Seeded random model instances and Monte Carlo averages over them.

Random numbers come from numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence``.  A single model uses ``SeedSequence(seed)``;
ensemble member ``k`` uses ``SeedSequence(seed, spawn_key=(k,))``, which is
what ``SeedSequence(seed).spawn(...)`` would hand out as its ``k``-th child.
Members can therefore be generated in any order, or in parallel.

Each bath particle consumes exactly four uniform doubles, in this order:
``|alpha|^2``, the coupling, the phase of ``alpha``, the phase of ``beta``.
The phases are drawn even when unused, so a model of ``N`` particles is a
prefix of the model of ``M > N`` particles with the same seed, and both phase
modes see identical magnitudes and couplings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .model import EnvQubit, ModelConfig, SystemQubit, TimeGrid

PhaseMode = Literal["real_amplitudes", "random_phases"]
PHASE_MODES = ("real_amplitudes", "random_phases")


@dataclass(frozen=True)
class SamplingPolicy:
    seed: int = 0
    g_min: float = 0.0
    g_max: float = 1.0
    phase_mode: PhaseMode = "real_amplitudes"

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.g_min < 0:
            raise ValueError(f"g_min must be >= 0, got {self.g_min}")
        if not self.g_min < self.g_max:
            raise ValueError(f"g_min ({self.g_min}) must be below g_max ({self.g_max})")
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")


@dataclass(frozen=True)
class EnsembleStats:
    grid: TimeGrid
    mean: np.ndarray
    variance: np.ndarray
    sample_count: int

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.variance / self.sample_count)


def member_rng(seed: int, member: int | None = None) -> np.random.Generator:
    key = () if member is None else (int(member),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def sample_model(
    policy: SamplingPolicy,
    n: int,
    system: SystemQubit,
    member: int | None = None,
) -> ModelConfig:
    """Draw a bath of ``n`` particles.

    ``|alpha|^2`` is uniform on [0, 1) and ``|beta|^2 = 1 - |alpha|^2``;
    couplings are uniform on ``(g_min, g_max]``.
    """
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    u = member_rng(policy.seed, member).random((n, 4))
    p_up = u[:, 0]
    g = policy.g_max - (policy.g_max - policy.g_min) * u[:, 1]
    alpha = np.sqrt(p_up).astype(complex)
    beta = np.sqrt(1.0 - p_up).astype(complex)
    if policy.phase_mode == "random_phases":
        alpha = alpha * np.exp(2j * np.pi * u[:, 2])
        beta = beta * np.exp(2j * np.pi * u[:, 3])
    env = tuple(EnvQubit(al, be, gi) for al, be, gi in zip(alpha, beta, g))
    return ModelConfig(system, env)


def ensemble_average(
    policy: SamplingPolicy,
    n: int,
    samples: int,
    metric: Callable[[ModelConfig, np.ndarray], np.ndarray],
    grid: TimeGrid,
    system: SystemQubit | None = None,
) -> EnsembleStats:
    """Mean and unbiased variance of ``metric(config, times)`` over members ``0..samples-1``."""
    if samples < 2:
        raise ValueError(f"need at least 2 samples for a variance, got {samples}")
    if system is None:
        system = SystemQubit(2 ** -0.5, 2 ** -0.5)
    times = grid.times()
    rows = np.empty((samples, grid.steps), dtype=float)
    for k in range(samples):
        config = sample_model(policy, n, system, member=k)
        rows[k] = np.real(np.broadcast_to(metric(config, times), times.shape))
    return EnsembleStats(
        grid=grid,
        mean=rows.mean(axis=0),
        variance=rows.var(axis=0, ddof=1),
        sample_count=samples,
    )
