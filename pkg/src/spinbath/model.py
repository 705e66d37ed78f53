"""Model instances and observable families for the central-spin bath.

A model is one central qubit ``P`` with amplitudes ``(a, b)`` coupled to ``N``
environment qubits ``P_1 .. P_N``, each prepared in ``alpha|up> + beta|down>``
and coupled with strength ``g``.  Observables are tensor products of one 2x2
Hermitian block per qubit, stored as their three independent entries so that
Hermiticity holds by construction.

Particle indices are 1-based wherever a user names a particle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12


def _check_norm(x: complex, y: complex, what: str) -> None:
    norm = abs(x) ** 2 + abs(y) ** 2
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{what}: |.|^2 + |.|^2 = {norm!r}, expected 1")


@dataclass(frozen=True)
class SystemQubit:
    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        _check_norm(self.a, self.b, "system qubit")


@dataclass(frozen=True)
class EnvQubit:
    alpha: complex
    beta: complex
    g: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "g", float(self.g))
        _check_norm(self.alpha, self.beta, "environment qubit")
        if not np.isfinite(self.g):
            raise ValueError("coupling g must be finite")


@dataclass(frozen=True)
class ModelConfig:
    """Central qubit plus an ordered, non-empty environment."""

    system: SystemQubit
    env: tuple[EnvQubit, ...]

    def __post_init__(self):
        object.__setattr__(self, "env", tuple(self.env))
        if len(self.env) < 1:
            raise ValueError("environment needs at least one particle (N >= 1)")

    @property
    def n(self) -> int:
        return len(self.env)

    @cached_property
    def alpha(self) -> np.ndarray:
        return np.array([q.alpha for q in self.env], dtype=complex)

    @cached_property
    def beta(self) -> np.ndarray:
        return np.array([q.beta for q in self.env], dtype=complex)

    @cached_property
    def g(self) -> np.ndarray:
        return np.array([q.g for q in self.env], dtype=float)

    @classmethod
    def from_arrays(cls, a, b, alpha, beta, g) -> "ModelConfig":
        env = tuple(EnvQubit(al, be, gi) for al, be, gi in zip(alpha, beta, g, strict=True))
        return cls(SystemQubit(a, b), env)

    def head(self, p: int) -> "ModelConfig":
        """The same model restricted to particles ``1..p``."""
        if not 1 <= p <= self.n:
            raise ValueError(f"p={p} outside 1..{self.n}")
        return ModelConfig(self.system, self.env[:p])


@dataclass(frozen=True)
class SystemObservable:
    s_uu: float
    s_dd: float
    s_ud: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "s_uu", float(self.s_uu))
        object.__setattr__(self, "s_dd", float(self.s_dd))
        object.__setattr__(self, "s_ud", complex(self.s_ud))

    @property
    def s_du(self) -> complex:
        return self.s_ud.conjugate()

    def matrix(self) -> np.ndarray:
        return np.array([[self.s_uu, self.s_ud], [self.s_du, self.s_dd]], dtype=complex)


@dataclass(frozen=True)
class ParticleObservable:
    e_uu: float
    e_dd: float
    e_ud: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "e_uu", float(self.e_uu))
        object.__setattr__(self, "e_dd", float(self.e_dd))
        object.__setattr__(self, "e_ud", complex(self.e_ud))

    @property
    def e_du(self) -> complex:
        return self.e_ud.conjugate()

    def matrix(self) -> np.ndarray:
        return np.array([[self.e_uu, self.e_ud], [self.e_du, self.e_dd]], dtype=complex)


@dataclass(frozen=True)
class ObservableSpec:
    """System block followed by one block per environment particle."""

    system_block: SystemObservable
    particle_blocks: tuple[ParticleObservable, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "particle_blocks", tuple(self.particle_blocks))

    @property
    def n(self) -> int:
        return len(self.particle_blocks)

    def check_pairing(self, config: ModelConfig) -> None:
        if self.n != config.n:
            raise ValueError(
                f"observable has {self.n} particle blocks but the model has N={config.n}"
            )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``steps`` points from ``t_start`` to ``t_end`` inclusive."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError(f"steps must be an integer >= 2, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def spacing(self) -> float:
        return (self.t_end - self.t_start) / (self.steps - 1)

    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.steps)


# ---------------------------------------------------------------------------
# canonical blocks and the three observable families

def identity_particle_block() -> ParticleObservable:
    return ParticleObservable(1.0, 1.0, 0j)


def identity_system_block() -> SystemObservable:
    return SystemObservable(1.0, 1.0, 0j)


def spin_x_block() -> ParticleObservable:
    """``S_x = sigma_x / 2`` on one environment particle."""
    return ParticleObservable(0.0, 0.0, 0.5)


def spin_z_block() -> ParticleObservable:
    return ParticleObservable(0.5, -0.5, 0j)


def _check_index(j: int, n: int) -> None:
    if not 1 <= j <= n:
        raise IndexError(f"particle index j={j} outside 1..{n}")


def case1_spec(config: ModelConfig, sys_block: SystemObservable) -> ObservableSpec:
    """Observe only the central qubit: ``O_S`` tensored with identities."""
    return ObservableSpec(sys_block, (identity_particle_block(),) * config.n)


def case2_spec(config: ModelConfig, j: int, block: ParticleObservable) -> ObservableSpec:
    """Observe only environment particle ``j`` (1-based)."""
    _check_index(j, config.n)
    blocks = [identity_particle_block()] * config.n
    blocks[j - 1] = block
    return ObservableSpec(identity_system_block(), tuple(blocks))


def case3_spec(config: ModelConfig, blocks: Sequence[ParticleObservable]) -> ObservableSpec:
    """Observe particles ``1..p`` with the given blocks; identity elsewhere."""
    p = len(blocks)
    if not 1 <= p <= config.n:
        raise ValueError(f"p={p} observed particles, need 1 <= p <= N={config.n}")
    tail = (identity_particle_block(),) * (config.n - p)
    return ObservableSpec(identity_system_block(), tuple(blocks) + tail)
