"""Brute-force state-vector reference for the central-spin bath.

The full ``2**(N+1)`` amplitude vector is built, evolved and measured
directly.  Nothing here calls into :mod:`spinbath.closed_form`.

Basis layout: bit ``k`` of a basis index is qubit ``k``; qubit 0 is the
central particle and qubits ``1..N`` are the bath.  A cleared bit means
``up``, a set bit means ``down``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, ObservableSpec

MAX_ORACLE_QUBITS = 14  # bath size; the state holds 2**15 amplitudes at the limit
NORM_TOL = 1e-10
IMAG_TOL = 1e-10


class OracleCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (2 ** self.n_qubits,):
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm^2 {norm!r} differs from 1")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)


def _check_capacity(config: ModelConfig, max_qubits: int) -> None:
    if config.n > max_qubits:
        raise OracleCapacityError(
            f"oracle handles at most N={max_qubits} bath particles, got N={config.n}; "
            f"use N <= {max_qubits}"
        )


def _check_dim(state: StateVector, n_env: int) -> None:
    if state.n_qubits != n_env + 1:
        raise ValueError(f"state has {state.n_qubits} qubits, model needs {n_env + 1}")


def initial_state(config: ModelConfig, max_qubits: int = MAX_ORACLE_QUBITS) -> StateVector:
    _check_capacity(config, max_qubits)
    amps = np.array([config.system.a, config.system.b], dtype=complex)
    for q in config.env:
        # later qubits take the more significant bits
        amps = np.kron(np.array([q.alpha, q.beta]), amps)
    return StateVector(config.n + 1, amps)


def _spin(idx: np.ndarray, k: int) -> np.ndarray:
    """Eigenvalue of ``S_z`` (+1/2 or -1/2) of qubit ``k`` for each basis index."""
    return 0.5 - ((idx >> k) & 1)


def hamiltonian_diagonal(config: ModelConfig) -> np.ndarray:
    """Diagonal of ``H = S_z^P (x) sum_i 2 g_i S_z^i`` in the computational basis."""
    idx = np.arange(2 ** (config.n + 1))
    bath = np.zeros(idx.shape, dtype=float)
    for k, q in enumerate(config.env, start=1):
        bath += 2.0 * q.g * _spin(idx, k)
    return _spin(idx, 0) * bath


def evolve(state: StateVector, config: ModelConfig, t: float) -> StateVector:
    """Apply ``exp(+i H t)``.

    The ``+`` sign puts ``exp(+i g t / 2)`` on ``|up, up_i>``, matching the
    branch convention used throughout the package.  Expectation values do not
    depend on it.
    """
    _check_dim(state, config.n)
    phases = np.exp(1j * hamiltonian_diagonal(config) * float(t))
    return StateVector(state.n_qubits, state.amps * phases)


def apply_observable(state: StateVector, spec: ObservableSpec) -> np.ndarray:
    """``O |state>`` by contracting one 2x2 block per qubit axis.

    Returns the raw (unnormalised) amplitude vector.
    """
    n = state.n_qubits
    if spec.n + 1 != n:
        raise ValueError(f"observable acts on {spec.n + 1} qubits, state has {n}")
    psi = state.amps.reshape((2,) * n)
    blocks = [spec.system_block.matrix()] + [b.matrix() for b in spec.particle_blocks]
    for k, m in enumerate(blocks):
        axis = n - 1 - k  # C-order: the last axis is bit 0
        psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def expectation_oracle(
    config: ModelConfig,
    spec: ObservableSpec,
    t: float,
    max_qubits: int = MAX_ORACLE_QUBITS,
) -> float:
    spec.check_pairing(config)
    psi = evolve(initial_state(config, max_qubits), config, t)
    val = np.vdot(psi.amps, apply_observable(psi, spec))
    if abs(val.imag) > IMAG_TOL * (1.0 + abs(val.real)):
        raise RuntimeError(f"oracle expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def expectation_oracle_curve(config: ModelConfig, spec: ObservableSpec, times) -> np.ndarray:
    """:func:`expectation_oracle` over an array of times, reusing the initial state."""
    spec.check_pairing(config)
    psi0 = initial_state(config)
    diag = hamiltonian_diagonal(config)
    out = np.empty(len(times), dtype=float)
    for i, t in enumerate(times):
        psi = StateVector(psi0.n_qubits, psi0.amps * np.exp(1j * diag * float(t)))
        val = np.vdot(psi.amps, apply_observable(psi, spec))
        if abs(val.imag) > IMAG_TOL * (1.0 + abs(val.real)):
            raise RuntimeError(f"oracle expectation has imaginary part {val.imag:.3e}")
        out[i] = val.real
    return out
