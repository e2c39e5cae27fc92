"""Small dense statevector engine for the non-Clifford corners of the project.

Amplitude ordering: qubit 0 is the most significant index bit, so the
amplitude at flat index v belongs to the outcome string ``format(v, f"0{n}b")``
read left to right as qubits 0..n-1.  Everything is float64/complex128.

The engine is deliberately plain: product-state init, single-qubit gates,
CZ, Pauli application via bit masks, projective Pauli measurement, and
chain-rule sampling.  A hard qubit cap keeps accidental exponential blowups
from taking the process down.
"""

from __future__ import annotations

import numpy as np

from .paulis import PauliString

__all__ = [
    "STATEVECTOR_QUBIT_CAP",
    "product_state",
    "plus_state",
    "apply_1q",
    "apply_cz",
    "apply_pauli_state",
    "zrot",
    "H_MATRIX",
    "T_STATE",
    "Y_STATE",
    "PLUS",
    "ZERO",
    "born_probs",
    "project_pauli",
    "sample_bits_sequential",
    "sample_indices",
]

STATEVECTOR_QUBIT_CAP = 24

ZERO = np.array([1.0, 0.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def zrot(theta: float) -> np.ndarray:
    """diag(1, e^{i theta}), the XY-plane measurement tilt."""
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * theta)]], dtype=complex)


T_STATE = zrot(np.pi / 4) @ PLUS
Y_STATE = zrot(np.pi / 2) @ PLUS


def _check_width(n: int, cap: int = STATEVECTOR_QUBIT_CAP):
    if n > cap:
        raise ValueError(f"statevector width {n} exceeds cap {cap}")


def product_state(factors) -> np.ndarray:
    """Tensor product of single-qubit 2-vectors, qubit 0 first (most significant)."""
    _check_width(len(factors))
    state = np.array([1.0], dtype=complex)
    for f in factors:
        state = np.kron(state, np.asarray(f, dtype=complex))
    return state


def plus_state(n: int) -> np.ndarray:
    _check_width(n)
    return np.full(2**n, 2.0 ** (-n / 2.0), dtype=complex)


def apply_1q(state: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to one qubit of a flat 2^n state."""
    t = state.reshape((2,) * n)
    t = np.moveaxis(t, qubit, 0).reshape(2, -1)
    t = matrix @ t
    t = np.moveaxis(t.reshape((2,) + (2,) * (n - 1)), 0, qubit)
    return np.ascontiguousarray(t).reshape(-1)


def apply_cz(state: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """CZ via a sign flip on indices with both bits set (in place, returned)."""
    idx = np.arange(state.size, dtype=np.int64)
    both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
    state[both == 1] *= -1.0
    return state


def apply_pauli_state(state: np.ndarray, pauli: PauliString) -> np.ndarray:
    """Apply an n-qubit Pauli with its exact phase: out[v ^ xmask] = ph(v) in[v]."""
    n = pauli.num_qubits
    if state.size != 2**n:
        raise ValueError("state width mismatch")
    x_mask = 0
    z_mask = 0
    n_y = 0
    for q in range(n):
        if pauli.x_bits[q]:
            x_mask |= 1 << (n - 1 - q)
        if pauli.z_bits[q]:
            z_mask |= 1 << (n - 1 - q)
        if pauli.x_bits[q] and pauli.z_bits[q]:
            n_y += 1
    idx = np.arange(state.size, dtype=np.int64)
    parity = (np.bitwise_count(idx & z_mask) & 1).astype(np.int64)
    phase = (1j ** ((pauli.phase_exp + n_y) % 4)) * np.where(parity, -1.0, 1.0)
    out = np.empty_like(state)
    out[idx ^ x_mask] = phase * state
    return out


def born_probs(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def project_pauli(state: np.ndarray, pauli: PauliString, outcome: int):
    """Project onto the (-1)^outcome eigenspace of a Hermitian Pauli.

    Returns (unnormalized projected state, branch probability).
    """
    if not pauli.is_hermitian():
        raise ValueError("projective measurement needs a Hermitian Pauli")
    sign = 1.0 if outcome == 0 else -1.0
    projected = 0.5 * (state + sign * apply_pauli_state(state, pauli))
    prob = float(np.real(np.vdot(projected, projected)))
    return projected, prob


def sample_bits_sequential(state: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one outcome string by chain-rule conditionals, qubit 0 first.

    Never materializes an outcome table: each step halves the live block of
    amplitudes.  O(2^n) per shot; use :func:`sample_indices` for batches.
    """
    bits = np.zeros(n, dtype=np.uint8)
    block = state.reshape((2,) * n) if n > 0 else state
    total = float(np.real(np.vdot(state, state)))
    for q in range(n):
        w0 = float(np.sum(np.abs(block[0]) ** 2)) if n - q > 1 else float(abs(block[0]) ** 2)
        p0 = w0 / total if total > 0 else 0.5
        bit = 0 if rng.random() < p0 else 1
        bits[q] = bit
        block = block[bit]
        total = w0 if bit == 0 else total - w0
    return bits


def sample_indices(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw flat outcome indices from a probability vector via inverse CDF."""
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(shots), side="right").astype(np.int64)
