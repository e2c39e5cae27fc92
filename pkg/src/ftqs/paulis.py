"""Pauli strings, depth-one Clifford layers, and exact error pushing.

A :class:`PauliString` is ``i^phase_exp * W_0 (x) ... (x) W_{n-1}`` with each
letter ``W_j`` in {I, X, Y, Z} encoded by two bits ``(x_j, z_j)``:
(0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z.  Phases live in the full {+1,+i,-1,-i}
group so that conjugation and products stay exact operator identities, not
just identities up to sign.

Circuits are lists of depth-one layers over the gate alphabet
{H, S, X, Y, Z, CZ, CNOT, SWAP}; anything else must be compiled to this set
by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliString",
    "Gate",
    "CliffordLayer",
    "CliffordCircuit",
    "NoiseSpec",
    "conjugate_pauli",
    "sample_local_stochastic",
    "sample_stage_errors",
    "push_noise_to_end",
    "lightcone_support_bound",
    "ONE_QUBIT_GATES",
    "TWO_QUBIT_GATES",
]

ONE_QUBIT_GATES = ("H", "S", "X", "Y", "Z")
TWO_QUBIT_GATES = ("CZ", "CNOT", "SWAP")

# Letter index (0=I, 1=X, 2=Y, 3=Z) from the (x, z) bit pair.
_LETTER_INDEX = np.array([0, 1, 3, 2], dtype=np.int64)  # index by x + 2*z
_LETTER_NAMES = "IXYZ"
_X_BIT = np.array([0, 1, 1, 0], dtype=np.uint8)  # by letter index
_Z_BIT = np.array([0, 0, 1, 1], dtype=np.uint8)

# Phase table for single-letter products: A*B = i^_PHASE_TABLE[A][B] * C.
_PHASE_TABLE = np.array(
    [
        [0, 0, 0, 0],
        [0, 0, 1, 3],
        [0, 3, 0, 1],
        [0, 1, 3, 0],
    ],
    dtype=np.int64,
)

_PHASE_TOKENS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TOKEN_PHASES = {"+": 0, "+i": 1, "-": 2, "-i": 3, "i": 1, "-1": 2, "1": 0}


@dataclass
class PauliString:
    """An n-qubit Pauli operator with an exact {+1, +i, -1, -i} phase."""

    num_qubits: int
    x_bits: np.ndarray
    z_bits: np.ndarray
    phase_exp: int = 0  # exponent of i

    def __post_init__(self):
        self.x_bits = np.asarray(self.x_bits, dtype=np.uint8)
        self.z_bits = np.asarray(self.z_bits, dtype=np.uint8)
        if len(self.x_bits) != self.num_qubits or len(self.z_bits) != self.num_qubits:
            raise ValueError("bit vectors must have length num_qubits")
        self.phase_exp = int(self.phase_exp) % 4

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, num_qubits: int) -> "PauliString":
        return cls(num_qubits, np.zeros(num_qubits, np.uint8), np.zeros(num_qubits, np.uint8))

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse text like ``"XIZ"``, ``"-XIZ"`` or ``"+iYY"``."""
        s = label.strip()
        phase = 0
        for token in ("+i", "-i", "+", "-"):
            if s.startswith(token):
                phase = _TOKEN_PHASES[token]
                s = s[len(token):]
                break
        letters = s.upper()
        if not letters or any(ch not in _LETTER_NAMES for ch in letters):
            raise ValueError(f"bad Pauli label: {label!r}")
        idx = np.array([_LETTER_NAMES.index(ch) for ch in letters], dtype=np.int64)
        return cls(len(letters), _X_BIT[idx].copy(), _Z_BIT[idx].copy(), phase)

    @classmethod
    def single(cls, num_qubits: int, qubit: int, letter: str, phase_exp: int = 0) -> "PauliString":
        p = cls.identity(num_qubits)
        li = _LETTER_NAMES.index(letter.upper())
        p.x_bits[qubit] = _X_BIT[li]
        p.z_bits[qubit] = _Z_BIT[li]
        p.phase_exp = phase_exp % 4
        return p

    # -- basic queries ------------------------------------------------------

    @property
    def phase(self) -> complex:
        return 1j ** self.phase_exp

    def support(self) -> frozenset:
        return frozenset(np.flatnonzero(self.x_bits | self.z_bits).tolist())

    def weight(self) -> int:
        return int(np.count_nonzero(self.x_bits | self.z_bits))

    def is_identity(self) -> bool:
        return self.weight() == 0 and self.phase_exp == 0

    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    def letter_indices(self) -> np.ndarray:
        return _LETTER_INDEX[self.x_bits.astype(np.int64) + 2 * self.z_bits.astype(np.int64)]

    def commutes_with(self, other: "PauliString") -> bool:
        if self.num_qubits != other.num_qubits:
            raise ValueError("width mismatch")
        s = np.bitwise_xor(self.x_bits & other.z_bits, self.z_bits & other.x_bits)
        return int(s.sum()) % 2 == 0

    # -- algebra -------------------------------------------------------------

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.num_qubits != other.num_qubits:
            raise ValueError("width mismatch")
        a = self.letter_indices()
        b = other.letter_indices()
        phase = (self.phase_exp + other.phase_exp + int(_PHASE_TABLE[a, b].sum())) % 4
        return PauliString(
            self.num_qubits,
            np.bitwise_xor(self.x_bits, other.x_bits),
            np.bitwise_xor(self.z_bits, other.z_bits),
            phase,
        )

    def inverse(self) -> "PauliString":
        # The letter product W is Hermitian with W^2 = I, so (i^k W)^-1 = i^-k W.
        return PauliString(self.num_qubits, self.x_bits.copy(), self.z_bits.copy(), -self.phase_exp)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.num_qubits == other.num_qubits
            and self.phase_exp == other.phase_exp
            and np.array_equal(self.x_bits, other.x_bits)
            and np.array_equal(self.z_bits, other.z_bits)
        )

    def __hash__(self):
        return hash((self.num_qubits, self.phase_exp, self.x_bits.tobytes(), self.z_bits.tobytes()))

    def to_label(self) -> str:
        letters = "".join(_LETTER_NAMES[i] for i in self.letter_indices())
        return _PHASE_TOKENS[self.phase_exp] + letters

    def __repr__(self):
        return f"PauliString({self.to_label()!r})"


# ---------------------------------------------------------------------------
# Gates, layers, circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """A placed gate: name from the fixed alphabet plus its site(s)."""

    name: str
    qubits: tuple

    def __post_init__(self):
        if self.name in ONE_QUBIT_GATES:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.name} takes one qubit")
        elif self.name in TWO_QUBIT_GATES:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.name} takes two distinct qubits")
        else:
            raise ValueError(f"unknown gate {self.name!r}")

    def to_text(self) -> str:
        return " ".join([self.name] + [str(q) for q in self.qubits])

    @classmethod
    def from_text(cls, text: str) -> "Gate":
        parts = text.split()
        return cls(parts[0].upper(), tuple(int(q) for q in parts[1:]))


@dataclass
class CliffordLayer:
    """A depth-one set of gates; no qubit may appear in two gates."""

    num_qubits: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"gate site {q} out of range")
                if q in seen:
                    raise ValueError(f"qubit {q} used twice in one layer")
                seen.add(q)

    def to_text(self) -> str:
        return "; ".join(g.to_text() for g in self.gates)


@dataclass
class CliffordCircuit:
    """Ordered layers, first layer applied first. Empty circuit = identity."""

    num_qubits: int
    layers: list = field(default_factory=list)

    def __post_init__(self):
        for layer in self.layers:
            if layer.num_qubits != self.num_qubits:
                raise ValueError("layer width mismatch")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def to_text(self) -> str:
        """One layer per line, gates separated by semicolons, e.g. ``H 0; CZ 1 2``."""
        return "\n".join(layer.to_text() for layer in self.layers)

    @classmethod
    def from_text(cls, num_qubits: int, text: str) -> "CliffordCircuit":
        layers = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            gates = [Gate.from_text(part) for part in line.split(";") if part.strip()]
            layers.append(CliffordLayer(num_qubits, gates))
        return cls(num_qubits, layers)


@dataclass
class NoiseSpec:
    """Per-stage local stochastic rates: preparation, each layer, readout."""

    p_prep: float
    p_layers: list
    p_out: float

    def __post_init__(self):
        for rate in [self.p_prep, self.p_out] + list(self.p_layers):
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"noise rate {rate} outside [0, 1)")

    def check_depth(self, circuit: CliffordCircuit):
        if len(self.p_layers) != circuit.depth:
            raise ValueError("p_layers length must match circuit depth")


# ---------------------------------------------------------------------------
# Conjugation
# ---------------------------------------------------------------------------

# Images of the X/Z generators under g P g^dagger.  Single-qubit entries map
# generator letter -> (letter, phase_exp); two-qubit entries map generator
# (position, letter) -> ((letter0, letter1), phase_exp).
_GEN_IMAGES_1Q = {
    "H": {"X": ("Z", 0), "Z": ("X", 0)},
    "S": {"X": ("Y", 0), "Z": ("Z", 0)},
    "X": {"X": ("X", 0), "Z": ("Z", 2)},
    "Y": {"X": ("X", 2), "Z": ("Z", 2)},
    "Z": {"X": ("X", 2), "Z": ("Z", 0)},
}
_GEN_IMAGES_2Q = {
    "CNOT": {(0, "X"): ("XX", 0), (0, "Z"): ("ZI", 0), (1, "X"): ("IX", 0), (1, "Z"): ("ZZ", 0)},
    "CZ": {(0, "X"): ("XZ", 0), (0, "Z"): ("ZI", 0), (1, "X"): ("ZX", 0), (1, "Z"): ("IZ", 0)},
    "SWAP": {(0, "X"): ("IX", 0), (0, "Z"): ("IZ", 0), (1, "X"): ("XI", 0), (1, "Z"): ("ZI", 0)},
}


def _embed(n: int, qubits: Sequence[int], letters: str, phase_exp: int) -> PauliString:
    p = PauliString.identity(n)
    for q, ch in zip(qubits, letters):
        li = _LETTER_NAMES.index(ch)
        p.x_bits[q] = _X_BIT[li]
        p.z_bits[q] = _Z_BIT[li]
    p.phase_exp = phase_exp % 4
    return p


def conjugate_pauli(gate, pauli: PauliString) -> PauliString:
    """Return U P U^dagger with exact phase, for a gate, layer, or circuit.

    Layers conjugate gate by gate (supports are disjoint so order is
    irrelevant); circuits fold their layers in temporal order.
    """
    if isinstance(gate, CliffordCircuit):
        out = pauli
        for layer in gate.layers:
            out = conjugate_pauli(layer, out)
        return out
    if isinstance(gate, CliffordLayer):
        out = pauli
        for g in gate.gates:
            out = conjugate_pauli(g, out)
        return out

    n = pauli.num_qubits
    for q in gate.qubits:
        if q >= n:
            raise ValueError(f"gate site {q} out of range for width {n}")

    qs = gate.qubits
    # Split P into (part on gate sites) * (rest); conjugate only the former.
    rest = PauliString(n, pauli.x_bits.copy(), pauli.z_bits.copy(), pauli.phase_exp)
    acc = PauliString.identity(n)
    for pos, q in enumerate(qs):
        x, z = int(pauli.x_bits[q]), int(pauli.z_bits[q])
        rest.x_bits[q] = 0
        rest.z_bits[q] = 0
        if x and z:
            acc.phase_exp = (acc.phase_exp + 1) % 4  # Y = i X Z
        if x:
            if len(qs) == 1:
                letters, ph = _GEN_IMAGES_1Q[gate.name]["X"]
            else:
                letters, ph = _GEN_IMAGES_2Q[gate.name][(pos, "X")]
            acc = acc * _embed(n, qs, letters, ph)
        if z:
            if len(qs) == 1:
                letters, ph = _GEN_IMAGES_1Q[gate.name]["Z"]
            else:
                letters, ph = _GEN_IMAGES_2Q[gate.name][(pos, "Z")]
            acc = acc * _embed(n, qs, letters, ph)
    return acc * rest


# ---------------------------------------------------------------------------
# Noise sampling and pushing
# ---------------------------------------------------------------------------


def sample_local_stochastic(num_qubits: int, p: float, rng: np.random.Generator) -> PauliString:
    """Draw E ~ N(p): each qubit gets a uniform non-identity Pauli w.p. p.

    This i.i.d. instance saturates Pr(F subseteq Supp(E)) <= p^|F| with
    equality, so it is the canonical admissible local stochastic noise.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"rate {p} outside [0, 1)")
    hit = rng.random(num_qubits) < p
    letters = rng.integers(1, 4, size=num_qubits)  # 1=X, 2=Y, 3=Z
    idx = np.where(hit, letters, 0)
    return PauliString(num_qubits, _X_BIT[idx].copy(), _Z_BIT[idx].copy(), 0)


def sample_stage_errors(circuit: CliffordCircuit, noise: NoiseSpec, rng: np.random.Generator) -> list:
    """Sample [E_prep, E_1, ..., E_d, E_out] for the given circuit."""
    noise.check_depth(circuit)
    n = circuit.num_qubits
    errors = [sample_local_stochastic(n, noise.p_prep, rng)]
    for p in noise.p_layers:
        errors.append(sample_local_stochastic(n, p, rng))
    errors.append(sample_local_stochastic(n, noise.p_out, rng))
    return errors


def push_noise_to_end(circuit: CliffordCircuit, errors: Sequence[PauliString]) -> PauliString:
    """Collapse interleaved stage errors into one final E with E.U = noisy circuit.

    ``errors`` is [E_prep, E_1, ..., E_d, E_out].  The noisy composition
    E_out.E_d.U_d...E_1.U_1.E_prep equals E.U_d...U_1 exactly (phase included):
    each earlier error is conjugated through the layers that follow it.
    """
    if len(errors) != circuit.depth + 2:
        raise ValueError(f"need {circuit.depth + 2} stage errors, got {len(errors)}")
    n = circuit.num_qubits
    for e in errors:
        if e.num_qubits != n:
            raise ValueError("error width mismatch")
    running = errors[0]
    for layer, stage_error in zip(circuit.layers, errors[1:-1]):
        running = conjugate_pauli(layer, running)
        running = stage_error * running
    return errors[-1] * running


def lightcone_support_bound(circuit: CliffordCircuit, input_support: Iterable[int]) -> frozenset:
    """Forward lightcone of a qubit set through the circuit.

    Guarantee used by the noise-pushing tests: the support of the pushed
    error is contained in the lightcone of the union of all stage supports.
    """
    reach = set(input_support)
    for q in reach:
        if not 0 <= q < circuit.num_qubits:
            raise ValueError(f"support index {q} out of range")
    for layer in circuit.layers:
        grown = set(reach)
        for g in layer.gates:
            if reach.intersection(g.qubits):
                grown.update(g.qubits)
        reach = grown
    return frozenset(reach)
