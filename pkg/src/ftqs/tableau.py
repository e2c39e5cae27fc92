"""Stabilizer tableau simulation (destabilizer + stabilizer rows).

The tableau keeps 2n generator rows over n qubits: rows 0..n-1 are
destabilizers, rows n..2n-1 stabilizers, each row a Pauli with an i^k phase
exponent.  Gate application is vectorized: the per-gate update tables are
generated once from :func:`ftqs.paulis.conjugate_pauli`, so the tableau can
never disagree with the conjugation rules it is built from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paulis import (
    _LETTER_INDEX,
    _PHASE_TABLE,
    _X_BIT,
    _Z_BIT,
    CliffordCircuit,
    CliffordLayer,
    Gate,
    PauliString,
    conjugate_pauli,
)

__all__ = ["StabilizerState", "apply_clifford", "measure_pauli"]


def _gate_table_1q(name: str):
    """(new_x, new_z, dphase) arrays indexed by code = x + 2z."""
    nx = np.zeros(4, np.uint8)
    nz = np.zeros(4, np.uint8)
    dp = np.zeros(4, np.int64)
    for x in (0, 1):
        for z in (0, 1):
            p = PauliString(1, np.array([x], np.uint8), np.array([z], np.uint8), 0)
            out = conjugate_pauli(Gate(name, (0,)), p)
            code = x + 2 * z
            nx[code] = out.x_bits[0]
            nz[code] = out.z_bits[0]
            dp[code] = out.phase_exp
    return nx, nz, dp


def _gate_table_2q(name: str):
    """(new_xa, new_za, new_xb, new_zb, dphase) indexed by xa + 2za + 4xb + 8zb."""
    nxa = np.zeros(16, np.uint8)
    nza = np.zeros(16, np.uint8)
    nxb = np.zeros(16, np.uint8)
    nzb = np.zeros(16, np.uint8)
    dp = np.zeros(16, np.int64)
    for code in range(16):
        xa, za, xb, zb = code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1
        p = PauliString(2, np.array([xa, xb], np.uint8), np.array([za, zb], np.uint8), 0)
        out = conjugate_pauli(Gate(name, (0, 1)), p)
        nxa[code], nza[code] = out.x_bits[0], out.z_bits[0]
        nxb[code], nzb[code] = out.x_bits[1], out.z_bits[1]
        dp[code] = out.phase_exp
    return nxa, nza, nxb, nzb, dp


_TABLES_1Q = {name: _gate_table_1q(name) for name in ("H", "S", "X", "Y", "Z")}
_TABLES_2Q = {name: _gate_table_2q(name) for name in ("CZ", "CNOT", "SWAP")}


@dataclass
class StabilizerState:
    """2n-row tableau; X/Z are (2n, n) uint8 matrices, r the i^k phase exps."""

    num_qubits: int
    X: np.ndarray
    Z: np.ndarray
    r: np.ndarray

    # -- constructors --------------------------------------------------------

    @classmethod
    def zeros(cls, n: int) -> "StabilizerState":
        """|0...0>: stabilizers Z_i, destabilizers X_i."""
        X = np.zeros((2 * n, n), np.uint8)
        Z = np.zeros((2 * n, n), np.uint8)
        X[:n] = np.eye(n, dtype=np.uint8)
        Z[n:] = np.eye(n, dtype=np.uint8)
        return cls(n, X, Z, np.zeros(2 * n, np.int64))

    @classmethod
    def plus(cls, n: int) -> "StabilizerState":
        """|+...+>: stabilizers X_i, destabilizers Z_i."""
        X = np.zeros((2 * n, n), np.uint8)
        Z = np.zeros((2 * n, n), np.uint8)
        Z[:n] = np.eye(n, dtype=np.uint8)
        X[n:] = np.eye(n, dtype=np.uint8)
        return cls(n, X, Z, np.zeros(2 * n, np.int64))

    def copy(self) -> "StabilizerState":
        return StabilizerState(self.num_qubits, self.X.copy(), self.Z.copy(), self.r.copy())

    # -- row helpers ---------------------------------------------------------

    def row_pauli(self, i: int) -> PauliString:
        return PauliString(self.num_qubits, self.X[i].copy(), self.Z[i].copy(), int(self.r[i]))

    def stabilizers(self) -> list:
        return [self.row_pauli(i) for i in range(self.num_qubits, 2 * self.num_qubits)]

    def _row_mul(self, target: int, source: int):
        """row[target] <- row[target] * row[source], exact phase."""
        a = _LETTER_INDEX[self.X[target].astype(np.int64) + 2 * self.Z[target].astype(np.int64)]
        b = _LETTER_INDEX[self.X[source].astype(np.int64) + 2 * self.Z[source].astype(np.int64)]
        self.r[target] = (self.r[target] + self.r[source] + _PHASE_TABLE[a, b].sum()) % 4
        np.bitwise_xor(self.X[target], self.X[source], out=self.X[target])
        np.bitwise_xor(self.Z[target], self.Z[source], out=self.Z[target])

    # -- gates ----------------------------------------------------------------

    def apply_gate(self, gate: Gate):
        qs = gate.qubits
        if any(q >= self.num_qubits for q in qs):
            raise ValueError("gate site out of range")
        if len(qs) == 1:
            (a,) = qs
            nx, nz, dp = _TABLES_1Q[gate.name]
            code = self.X[:, a].astype(np.int64) + 2 * self.Z[:, a].astype(np.int64)
            self.X[:, a] = nx[code]
            self.Z[:, a] = nz[code]
            self.r = (self.r + dp[code]) % 4
        else:
            a, b = qs
            nxa, nza, nxb, nzb, dp = _TABLES_2Q[gate.name]
            code = (
                self.X[:, a].astype(np.int64)
                + 2 * self.Z[:, a].astype(np.int64)
                + 4 * self.X[:, b].astype(np.int64)
                + 8 * self.Z[:, b].astype(np.int64)
            )
            self.X[:, a] = nxa[code]
            self.Z[:, a] = nza[code]
            self.X[:, b] = nxb[code]
            self.Z[:, b] = nzb[code]
            self.r = (self.r + dp[code]) % 4

    def apply_pauli(self, pauli: PauliString):
        """Multiply the state by a Pauli (phase-exact on the stabilizer group)."""
        # Conjugating each generator g -> P g P^dagger flips r by 2 where they
        # anticommute; P's own phase cancels against P^dagger.
        anti = (
            (self.X & pauli.z_bits[None, :]).sum(axis=1)
            + (self.Z & pauli.x_bits[None, :]).sum(axis=1)
        ) % 2
        self.r = (self.r + 2 * anti) % 4

    # -- measurement -----------------------------------------------------------

    def _deterministic_phase(self, observable: PauliString):
        """Phase exponent of the stabilizer-group element with observable's bits.

        Returns None when the observable is not in +/- the stabilizer group
        (i.e. some stabilizer anticommutes with it).
        """
        n = self.num_qubits
        obs_x, obs_z = observable.x_bits, observable.z_bits
        anti_stab = (
            (self.X[n:] & obs_z[None, :]).sum(axis=1) + (self.Z[n:] & obs_x[None, :]).sum(axis=1)
        ) % 2
        if anti_stab.any():
            return None
        scratch_x = np.zeros(n, np.uint8)
        scratch_z = np.zeros(n, np.uint8)
        phase = 0
        for i in range(n):
            anti = (int((self.X[i] & obs_z).sum()) + int((self.Z[i] & obs_x).sum())) % 2
            if anti:
                a = _LETTER_INDEX[scratch_x.astype(np.int64) + 2 * scratch_z.astype(np.int64)]
                b = _LETTER_INDEX[self.X[n + i].astype(np.int64) + 2 * self.Z[n + i].astype(np.int64)]
                phase = (phase + int(self.r[n + i]) + int(_PHASE_TABLE[a, b].sum())) % 4
                scratch_x ^= self.X[n + i]
                scratch_z ^= self.Z[n + i]
        if not (np.array_equal(scratch_x, obs_x) and np.array_equal(scratch_z, obs_z)):
            raise AssertionError("tableau inconsistency: commuting observable not in group")
        return phase

    def measure(self, observable: PauliString, rng=None, force=None):
        """Measure a Hermitian Pauli; collapses in place.

        Returns ``(outcome, deterministic)``.  Outcome 0 means the +1
        eigenvalue of ``observable``.  ``force`` pins the outcome of a
        non-deterministic measurement (used to enumerate branches); forcing a
        deterministic measurement to the wrong value raises.
        """
        if observable.num_qubits != self.num_qubits:
            raise ValueError("width mismatch")
        if not observable.is_hermitian():
            raise ValueError("observable must have phase +/-1")
        n = self.num_qubits
        obs_x, obs_z = observable.x_bits, observable.z_bits
        anti = (
            (self.X & obs_z[None, :]).sum(axis=1) + (self.Z & obs_x[None, :]).sum(axis=1)
        ) % 2
        anti_stab_rows = np.flatnonzero(anti[n:]) + n
        if anti_stab_rows.size == 0:
            group_phase = self._deterministic_phase(observable)
            diff = (group_phase - observable.phase_exp) % 4
            if diff not in (0, 2):
                raise AssertionError("non-Hermitian group element")
            outcome = 0 if diff == 0 else 1
            if force is not None and force != outcome:
                raise ValueError("cannot force a deterministic measurement to the other branch")
            return outcome, True
        p = int(anti_stab_rows[0])
        if force is not None:
            outcome = int(force)
        else:
            if rng is None:
                raise ValueError("rng required for a non-deterministic measurement")
            outcome = int(rng.integers(0, 2))
        for q in np.flatnonzero(anti):
            if int(q) != p:
                self._row_mul(int(q), p)
        # Old stabilizer p becomes the destabilizer; observable replaces it.
        self.X[p - n] = self.X[p]
        self.Z[p - n] = self.Z[p]
        self.r[p - n] = self.r[p]
        self.X[p] = obs_x
        self.Z[p] = obs_z
        self.r[p] = (observable.phase_exp + 2 * outcome) % 4
        return outcome, False

    # -- inspection --------------------------------------------------------------

    def single_qubit_axis(self, qubit: int):
        """Return (letter, sign) if the qubit is in a pure single-qubit
        stabilizer state (some +/-P_qubit is in the stabilizer group), else None.
        """
        for letter in "XYZ":
            obs = PauliString.single(self.num_qubits, qubit, letter)
            phase = self._deterministic_phase_if_commuting(obs)
            if phase is not None:
                return letter, +1 if phase == 0 else -1
        return None

    def _deterministic_phase_if_commuting(self, observable: PauliString):
        n = self.num_qubits
        anti = (
            (self.X[n:] & observable.z_bits[None, :]).sum(axis=1)
            + (self.Z[n:] & observable.x_bits[None, :]).sum(axis=1)
        ) % 2
        if anti.any():
            return None
        return self._deterministic_phase(observable)


def apply_clifford(state: StabilizerState, clifford) -> StabilizerState:
    """Apply a Gate, CliffordLayer, or CliffordCircuit in place and return it."""
    if isinstance(clifford, Gate):
        state.apply_gate(clifford)
        return state
    if isinstance(clifford, CliffordLayer):
        if clifford.num_qubits != state.num_qubits:
            raise ValueError("width mismatch")
        for g in clifford.gates:
            state.apply_gate(g)
        return state
    if isinstance(clifford, CliffordCircuit):
        for layer in clifford.layers:
            apply_clifford(state, layer)
        return state
    raise TypeError(f"cannot apply {type(clifford).__name__}")


def measure_pauli(state: StabilizerState, observable: PauliString, rng=None, force=None):
    """Measure and return ``(outcome, collapsed state)``; collapse is in place."""
    outcome, _ = state.measure(observable, rng=rng, force=force)
    return outcome, state
