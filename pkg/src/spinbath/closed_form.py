"""Exact expectation values of the central-spin bath as per-particle products.

Every evaluator takes a scalar time or an array of times and returns a value of
the same shape.  Products run over particles ``i = 1..N`` left to right so that
curves are reproducible bit for bit.

Branch convention: the environment state attached to the central ``up`` state
carries ``exp(+i g t / 2)`` on ``|up_i>`` and ``exp(-i g t / 2)`` on ``|down_i>``;
the ``down`` branch is the same state at ``-t``.  Diagonal factors evaluated on
the ``down`` branch are therefore the ``up`` branch factors at ``-t``.

Several evaluators accept ``single_branch``.  With it set they reproduce the
single-branch formulas term for term, which assign the ``up`` branch factor to both
branches (and, for a single observed bath particle, drop a factor of two).
The default is the form that agrees with a full state-vector computation; the
two coincide whenever all amplitudes and off-diagonal coefficients are real.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import ModelConfig, ObservableSpec, ParticleObservable, TimeGrid

IMAG_TOL = 1e-9


class ConsistencyError(RuntimeError):
    """A quantity that must be real came out with a sizeable imaginary part."""


@dataclass(frozen=True)
class Curve:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.steps,):
            raise ValueError(
                f"curve has {values.shape} values for a grid of {self.grid.steps} steps"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def abs2(self) -> np.ndarray:
        return self.values.real ** 2 + self.values.imag ** 2


def _times(t):
    return np.asarray(t, dtype=float)


def _ret(acc: np.ndarray, t):
    if np.ndim(t) == 0:
        return acc[()] if isinstance(acc, np.ndarray) else acc
    return acc


def _real(value, what: str):
    value = np.asarray(value)
    resid = np.abs(value.imag)
    if np.any(resid > IMAG_TOL * (1.0 + np.abs(value.real))):
        worst = float(np.max(resid))
        raise ConsistencyError(f"{what}: imaginary residue {worst:.3e} exceeds tolerance")
    return value.real


def _diag_factor(alpha, beta, g, blk: ParticleObservable, t):
    """One particle's factor of the ``up``-branch diagonal product."""
    z = alpha.conjugate() * beta * blk.e_ud
    return (
        abs(alpha) ** 2 * blk.e_uu
        + z * np.exp(-1j * g * t)
        + abs(beta) ** 2 * blk.e_dd
        + z.conjugate() * np.exp(1j * g * t)
    )


def gamma0(config: ModelConfig, spec: ObservableSpec, t):
    """Diagonal-branch product factor (``up`` branch)."""
    spec.check_pairing(config)
    tt = _times(t)
    acc = np.ones(tt.shape, dtype=complex)
    for q, blk in zip(config.env, spec.particle_blocks):
        acc = acc * _diag_factor(q.alpha, q.beta, q.g, blk, tt)
    return _ret(acc, t)


def gamma1(config: ModelConfig, spec: ObservableSpec, t):
    """Cross-branch product factor ``<E_down(t)| O_E |E_up(t)>``."""
    spec.check_pairing(config)
    tt = _times(t)
    acc = np.ones(tt.shape, dtype=complex)
    for q, blk in zip(config.env, spec.particle_blocks):
        z = q.alpha.conjugate() * q.beta * blk.e_ud
        acc = acc * (
            abs(q.alpha) ** 2 * blk.e_uu * np.exp(1j * q.g * tt)
            + abs(q.beta) ** 2 * blk.e_dd * np.exp(-1j * q.g * tt)
            + z
            + z.conjugate()
        )
    return _ret(acc, t)


def expectation(config: ModelConfig, spec: ObservableSpec, t, *, single_branch: bool = False):
    """``<psi(t)| O |psi(t)>`` for a product observable.

    The cross term is ``2 Re[a b* s_du Gamma1(t)]``.  The diagonal part weights
    ``|a|^2 s_uu`` with ``Gamma0(t)`` and ``|b|^2 s_dd`` with ``Gamma0(-t)``;
    ``single_branch=True`` uses ``Gamma0(t)`` for both.
    """
    sys = spec.system_block
    a, b = config.system.a, config.system.b
    tt = _times(t)
    g0_up = gamma0(config, spec, tt)
    g0_dn = g0_up if single_branch else gamma0(config, spec, -tt)
    cross = a * b.conjugate() * sys.s_du * gamma1(config, spec, tt)
    total = abs(a) ** 2 * sys.s_uu * g0_up + abs(b) ** 2 * sys.s_dd * g0_dn + 2.0 * cross.real
    return _ret(_real(total, "expectation"), t)


# ---------------------------------------------------------------------------
# case 1: central qubit observed, whole bath traced

def r1(config: ModelConfig, t):
    """Decoherence factor ``prod_i (|alpha_i|^2 e^{+i g_i t} + |beta_i|^2 e^{-i g_i t})``."""
    tt = _times(t)
    acc = np.ones(tt.shape, dtype=complex)
    for q in config.env:
        acc = acc * (
            abs(q.alpha) ** 2 * np.exp(1j * q.g * tt) + abs(q.beta) ** 2 * np.exp(-1j * q.g * tt)
        )
    return _ret(acc, t)


def r1_abs2(config: ModelConfig, t):
    """``|r1(t)|^2`` from the real product of ``|a|^4 + |b|^4 + 2|a|^2|b|^2 cos 2gt``."""
    tt = _times(t)
    acc = np.ones(tt.shape, dtype=float)
    for q in config.env:
        pa, pb = abs(q.alpha) ** 2, abs(q.beta) ** 2
        acc = acc * (pa * pa + pb * pb + 2.0 * pa * pb * np.cos(2.0 * q.g * tt))
    return _ret(acc, t)


def log_r1_abs2(config: ModelConfig, t):
    """Natural log of ``|r1(t)|^2``, summed factor by factor.

    Stays finite for environments large enough that the plain product
    underflows (roughly N > 2000 for uniformly drawn amplitudes).
    """
    tt = _times(t)
    acc = np.zeros(tt.shape, dtype=float)
    with np.errstate(divide="ignore"):
        for q in config.env:
            pa, pb = abs(q.alpha) ** 2, abs(q.beta) ** 2
            acc = acc + np.log(pa * pa + pb * pb + 2.0 * pa * pb * np.cos(2.0 * q.g * tt))
    return _ret(acc, t)


def r1_log_polar(config: ModelConfig, t):
    """``(log|r1(t)|, arg r1(t))`` accumulated per factor; phase wrapped to (-pi, pi]."""
    tt = _times(t)
    log_mag = np.zeros(tt.shape, dtype=float)
    phase = np.zeros(tt.shape, dtype=float)
    with np.errstate(divide="ignore"):
        for q in config.env:
            f = abs(q.alpha) ** 2 * np.exp(1j * q.g * tt) + abs(q.beta) ** 2 * np.exp(-1j * q.g * tt)
            log_mag = log_mag + np.log(np.abs(f))
            phase = np.angle(np.exp(1j * (phase + np.angle(f))))
    return _ret(log_mag, t), _ret(phase, t)


# ---------------------------------------------------------------------------
# case 2: a single bath particle observed

def _particle(config: ModelConfig, j: int):
    if not 1 <= j <= config.n:
        raise IndexError(f"particle index j={j} outside 1..{config.n}")
    return config.env[j - 1]


def r2(config: ModelConfig, j: int, block: ParticleObservable, t):
    """Oscillating term ``Re(alpha_j beta_j* e_ud exp(+i g_j t))`` with no branch weighting."""
    q = _particle(config, j)
    tt = _times(t)
    return _ret(np.real(q.alpha * q.beta.conjugate() * block.e_ud * np.exp(1j * q.g * tt)), t)


def case2_phasor(config: ModelConfig, j: int, block: ParticleObservable, t, *, single_branch: bool = False):
    """Complex phasor whose real part is the time-dependent term of case 2.

    Its modulus is constant in time, which is the whole story of case 2.
    """
    q = _particle(config, j)
    tt = _times(t)
    if single_branch:
        amp = q.alpha * q.beta.conjugate() * block.e_ud
        return _ret(amp * np.exp(1j * q.g * tt), t)
    z = q.alpha.conjugate() * q.beta * block.e_ud
    pa, pb = abs(config.system.a) ** 2, abs(config.system.b) ** 2
    amp = 2.0 * (pa * z + pb * z.conjugate())
    return _ret(amp * np.exp(-1j * q.g * tt), t)


def case2_expectation(config: ModelConfig, j: int, block: ParticleObservable, t, *, single_branch: bool = False):
    q = _particle(config, j)
    tt = _times(t)
    const = abs(q.alpha) ** 2 * block.e_uu + abs(q.beta) ** 2 * block.e_dd
    if single_branch:
        return _ret(const + r2(config, j, block, tt), t)
    # each system branch sees the particle rotate in the opposite sense
    up = _diag_factor(q.alpha, q.beta, q.g, block, tt)
    dn = _diag_factor(q.alpha, q.beta, q.g, block, -tt)
    pa, pb = abs(config.system.a) ** 2, abs(config.system.b) ** 2
    return _ret(_real(pa * up + pb * dn, "case 2 expectation"), t)


# ---------------------------------------------------------------------------
# case 3: the first p bath particles observed

def _check_p(config: ModelConfig, p: int) -> None:
    if not 1 <= p <= config.n:
        raise ValueError(f"p={p} observed particles, need 1 <= p <= N={config.n}")


def _branch_mix(config: ModelConfig, prod, t, single_branch: bool, what: str):
    tt = _times(t)
    if single_branch:
        return _ret(_real(prod(tt), what), t)
    pa, pb = abs(config.system.a) ** 2, abs(config.system.b) ** 2
    return _ret(_real(pa * prod(tt) + pb * prod(-tt), what), t)


def case3_expectation(config: ModelConfig, blocks: Sequence[ParticleObservable], t, *, single_branch: bool = False):
    """Expectation of ``I_S (x) O_1 (x) .. (x) O_p (x) I ..``; never touches particles > p."""
    p = len(blocks)
    _check_p(config, p)
    env = config.env[:p]

    def prod(tt):
        acc = np.ones(tt.shape, dtype=complex)
        for q, blk in zip(env, blocks):
            acc = acc * _diag_factor(q.alpha, q.beta, q.g, blk, tt)
        return acc

    return _branch_mix(config, prod, t, single_branch, "case 3 expectation")


def r3(config: ModelConfig, p: int, eps_ud: Sequence[complex], t, *, single_branch: bool = False):
    """``prod_{i<=p} 2 Re(alpha_i* beta_i eps_i exp(-i g_i t))`` (zero-diagonal blocks)."""
    _check_p(config, p)
    if len(eps_ud) != p:
        raise ValueError(f"need {p} off-diagonal coefficients, got {len(eps_ud)}")
    env = config.env[:p]

    def prod(tt):
        acc = np.ones(tt.shape, dtype=complex)
        for q, e in zip(env, eps_ud):
            z = q.alpha.conjugate() * q.beta * complex(e)
            acc = acc * (2.0 * np.real(z * np.exp(-1j * q.g * tt)))
        return acc

    return _branch_mix(config, prod, t, single_branch, "r3")


# ---------------------------------------------------------------------------

def sample_curve(f: Callable[[np.ndarray], np.ndarray], grid: TimeGrid) -> Curve:
    """Evaluate ``f`` on every grid point (in grid order) and wrap as a curve."""
    times = grid.times()
    values = np.broadcast_to(np.asarray(f(times), dtype=complex), times.shape)
    return Curve(grid, values)
