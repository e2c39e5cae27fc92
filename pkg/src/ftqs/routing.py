"""Vertex-disjoint routing on a grid graph state.

Out of p candidate slots, m carry states that must reach designated exits.
The planner etches L-shaped paths into a p x 2m grid: every off-path vertex
is measured in Z (removing it, up to Pauli corrections on its neighbors) and
each path teleports its source along a wire of X measurements.  A wire with
k grid vertices applies H^k up to Paulis, so the planner picks the exit
inside each path's dedicated column pair to make k even, and every planned
route is a logical identity.

The simulator prepares the fabric with CZ on every grid edge except those
joining two distinct wires; which CZs to apply is part of the classically
selected routing pattern, so withholding an edge costs no depth, and a grid
edge between two wires would otherwise act as an unwanted entangling gate
between the routed states.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .paulis import Gate, PauliString
from .statevec import apply_1q, apply_cz, project_pauli
from .tableau import StabilizerState

__all__ = [
    "Z_REMOVE",
    "X_TELEPORT",
    "OUTPUT",
    "STABILIZER_QUBIT_BUDGET",
    "STATEVECTOR_ROUTING_CAP",
    "RoutingGrid",
    "PathFrame",
    "RoutingPlan",
    "RoutingOutcome",
    "plan_routes",
    "verify_disjoint",
    "measurement_pattern",
    "simulate_routing",
    "render_plan",
]

Z_REMOVE = "Z_remove"
X_TELEPORT = "X_teleport"
OUTPUT = "output"

STABILIZER_QUBIT_BUDGET = 4096
STATEVECTOR_ROUTING_CAP = 20

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_X_MATRIX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=np.complex128)

_SOURCE_KETS = {
    "0": np.array([1.0, 0.0], dtype=np.complex128),
    "1": np.array([0.0, 1.0], dtype=np.complex128),
    "+": np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2),
    "-": np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2),
    "i": np.array([1.0, 1.0j], dtype=np.complex128) / math.sqrt(2),
    "-i": np.array([1.0, -1.0j], dtype=np.complex128) / math.sqrt(2),
    "T": np.array([1.0, np.exp(1j * math.pi / 4)], dtype=np.complex128) / math.sqrt(2),
}

# Gate sequences preparing each stabilizer source from |0>.
_SOURCE_PREP = {
    "0": (),
    "1": ("X",),
    "+": ("H",),
    "-": ("H", "Z"),
    "i": ("H", "S"),
    "-i": ("H", "Z", "S"),
}

# (letter, sign) of the stabilizing single-qubit Pauli per source label.
_SOURCE_AXIS = {
    "0": ("Z", 1),
    "1": ("Z", -1),
    "+": ("X", 1),
    "-": ("X", -1),
    "i": ("Y", 1),
    "-i": ("Y", -1),
}
_AXIS_LABEL = {axis: label for label, axis in _SOURCE_AXIS.items()}


@dataclass(frozen=True)
class RoutingGrid:
    """p candidate rows by 2m columns; sources attach at column 0."""

    p: int
    m: int

    def __post_init__(self):
        if self.p < 0 or self.m < 0 or self.p < self.m:
            raise ValueError("need p >= m >= 0")

    @property
    def rows(self) -> int:
        return self.p

    @property
    def cols(self) -> int:
        return 2 * self.m

    @property
    def num_vertices(self) -> int:
        return self.rows * self.cols

    def vertices(self) -> List[Tuple[int, int]]:
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]

    def edges(self) -> List[Tuple[Tuple[int, int], Tuple[int, int]]]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                if c + 1 < self.cols:
                    out.append(((r, c), (r, c + 1)))
                if r + 1 < self.rows:
                    out.append(((r, c), (r + 1, c)))
        return out

    @property
    def source_slots(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((r, 0) for r in range(self.p))

    @property
    def exit_column_pairs(self) -> Tuple[Tuple[int, int], ...]:
        """Dedicated column pair per routed path; the pair offers both exit
        parities on the bipartite grid."""
        return tuple((2 * s, 2 * s + 1) for s in range(self.m))

    def contains(self, vertex: Tuple[int, int]) -> bool:
        r, c = vertex
        return 0 <= r < self.rows and 0 <= c < self.cols


@dataclass(frozen=True)
class PathFrame:
    """Classical correction metadata for one routed path."""

    index: int
    source_row: int
    target: Tuple[int, int]
    interior_length: int
    hadamard: bool

    def __post_init__(self):
        if self.interior_length < 0:
            raise ValueError("interior length must be >= 0")
        if self.hadamard != (self.interior_length % 2 == 0):
            raise ValueError("hadamard flag inconsistent with interior parity")


@dataclass
class RoutingPlan:
    """Paths plus the derived per-vertex basis map and correction frames."""

    grid: RoutingGrid
    paths: Tuple[Tuple[Tuple[int, int], ...], ...]
    measurement_pattern: Dict[Tuple[int, int], str] = field(default_factory=dict)
    byproduct_frames: Tuple[PathFrame, ...] = ()

    def __post_init__(self):
        if len(self.paths) > self.grid.m:
            raise ValueError("more paths than routed slots")
        for path in self.paths:
            if not path:
                raise ValueError("empty path")
            for vertex in path:
                if not self.grid.contains(vertex):
                    raise ValueError(f"vertex {vertex} outside the grid")
        if not self.measurement_pattern:
            self.measurement_pattern = _pattern_for(self.grid, self.paths)
        if not self.byproduct_frames:
            self.byproduct_frames = _frames_for(self.paths)


def _pattern_for(grid: RoutingGrid, paths) -> Dict[Tuple[int, int], str]:
    pattern = {v: Z_REMOVE for v in grid.vertices()}
    for path in paths:
        for vertex in path[:-1]:
            pattern[vertex] = X_TELEPORT
        pattern[path[-1]] = OUTPUT
    return pattern


def _frames_for(paths) -> Tuple[PathFrame, ...]:
    frames = []
    for j, path in enumerate(paths):
        interior = len(path) - 1
        frames.append(
            PathFrame(
                index=j,
                source_row=path[0][0],
                target=path[-1],
                interior_length=interior,
                hadamard=interior % 2 == 0,
            )
        )
    return tuple(frames)


def plan_routes(p: int, m: int, success_flags: Sequence[int]) -> RoutingPlan:
    """Route the first m flagged sources to exits at the top row.

    Selected rows are taken in ascending order and path s claims the column
    pair (2s, 2s+1): it runs along its row to the parity-correct member of
    the pair, then up to row 0.  Distinct rows plus strictly increasing
    dedicated columns make the L-shapes vertex-disjoint for every flag
    pattern: a column run at c_j only crosses a lower row r_i < r_j where
    c_j > c_i keeps it past that row's horizontal run.
    """
    if p < 0 or m < 0 or p < m:
        raise ValueError("need p >= m >= 0")
    flags = [1 if f else 0 for f in success_flags]
    if len(flags) != p:
        raise ValueError("success_flags must have length p")
    flagged = [r for r, f in enumerate(flags) if f]
    if len(flagged) < m:
        raise ValueError(f"need at least {m} flagged sources, got {len(flagged)}")
    grid = RoutingGrid(p, m)
    paths = []
    for s, r in enumerate(flagged[:m]):
        # Exit column: r + c must be odd so the wire length r + c + 1 is
        # even (identity teleportation, pendant hop included).
        c = 2 * s + 1 if r % 2 == 0 else 2 * s
        path = [(r, col) for col in range(c + 1)]
        path.extend((row, c) for row in range(r - 1, -1, -1))
        paths.append(tuple(path))
    return RoutingPlan(grid=grid, paths=tuple(paths))


def verify_disjoint(plan: RoutingPlan) -> bool:
    """True iff paths are pairwise vertex-disjoint, self-avoiding, and each
    is a connected grid path."""
    seen = set()
    for path in plan.paths:
        for vertex in path:
            if not plan.grid.contains(vertex):
                return False
            if vertex in seen:
                return False
            seen.add(vertex)
        for (r1, c1), (r2, c2) in zip(path, path[1:]):
            if abs(r1 - r2) + abs(c1 - c2) != 1:
                return False
    return True


def measurement_pattern(plan: RoutingPlan) -> Dict[Tuple[int, int], str]:
    """Total per-vertex basis map: X on the interiors, O at the exits, Z
    everywhere else."""
    return dict(_pattern_for(plan.grid, plan.paths))


@dataclass
class RoutingOutcome:
    """Measurement record, per-path byproducts, and target states.

    ``byproducts`` holds one (x, z) bit pair per path; ``corrected_targets``
    are the target states after applying Z^z X^x and the frame's Hadamard,
    as source labels in tableau mode and normalized kets in statevector
    mode (``raw_targets`` are the same before correction; raw labels may be
    None when a raw tableau target is not a stabilizer axis state, which
    only happens for non-stabilizer sources).
    """

    mode: str
    outcomes: Dict[object, int]
    byproducts: Tuple[Tuple[int, int], ...]
    raw_targets: Tuple[object, ...]
    corrected_targets: Tuple[object, ...]
    frames: Tuple[PathFrame, ...]


def _measure_order(plan: RoutingPlan):
    """Canonical measurement order: per path the pendant then the interior
    vertices in wire order, then every etched vertex row-major."""
    order = []
    for j, path in enumerate(plan.paths):
        order.append(("source", j))
        order.extend(path[:-1])
    pattern = plan.measurement_pattern
    order.extend(v for v in sorted(pattern) if pattern[v] == Z_REMOVE)
    return order


def _fabric_edges(plan: RoutingPlan):
    """Grid edges kept in the prepared state: everything except edges that
    would join two distinct wires.  A non-consecutive edge inside one path
    (a chord) breaks the wire reading and is rejected."""
    pattern = plan.measurement_pattern
    owner = {}
    position = {}
    for j, path in enumerate(plan.paths):
        for i, vertex in enumerate(path):
            owner[vertex] = j
            position[vertex] = i
    kept = []
    for u, v in plan.grid.edges():
        if pattern[u] == Z_REMOVE or pattern[v] == Z_REMOVE:
            kept.append((u, v))
            continue
        if owner[u] != owner[v]:
            continue
        if abs(position[u] - position[v]) != 1:
            raise ValueError(f"path {owner[u]} has a chord at {u}-{v}")
        kept.append((u, v))
    return kept


def _byproduct_bits(plan: RoutingPlan, outcomes: Dict[object, int]):
    """(x, z) per path from the outcome record and the path geometry.

    Etched neighbors contribute Z byproducts: a Z before an X measurement
    flips that outcome, and a Z landing on the unmeasured exit joins the
    final frame directly.
    """
    etched_neighbor_parity = {}
    pattern = plan.measurement_pattern
    for path in plan.paths:
        for r, c in path:
            parity = 0
            for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if plan.grid.contains(nb) and pattern[nb] == Z_REMOVE:
                    parity ^= outcomes[nb]
            etched_neighbor_parity[(r, c)] = parity
    byproducts = []
    for j, path in enumerate(plan.paths):
        k = len(path)
        effective = [outcomes[("source", j)]]
        effective.extend(
            outcomes[vertex] ^ etched_neighbor_parity[vertex] for vertex in path[:-1]
        )
        x = 0
        z = 0
        for idx, bit in enumerate(effective):
            if (k - 1 - idx) % 2 == 0:
                x ^= bit
            else:
                z ^= bit
        z ^= etched_neighbor_parity[path[-1]]
        byproducts.append((x, z))
    return tuple(byproducts)


def _validated_sources(plan: RoutingPlan, input_states, mode: str):
    labels = list(input_states)
    if len(labels) != len(plan.paths):
        raise ValueError("need one input state per path")
    for label in labels:
        if label not in _SOURCE_KETS:
            raise ValueError(f"unknown source state {label!r}")
        if mode == "tableau" and label not in _SOURCE_PREP:
            raise ValueError("non-stabilizer sources need statevector mode")
    return labels


def _qubit_index(plan: RoutingPlan, key) -> int:
    num_paths = len(plan.paths)
    if isinstance(key, tuple) and key and key[0] == "source":
        return key[1]
    r, c = key
    return num_paths + r * plan.grid.cols + c


def _force_iter(forced):
    if forced is None:
        return None
    bits = [int(b) for b in forced]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("forced outcomes must be bits")
    return bits


def _simulate_tableau(plan, labels, rng, forced):
    n = len(plan.paths) + plan.grid.num_vertices
    if n > STABILIZER_QUBIT_BUDGET:
        raise ValueError("plan exceeds the stabilizer budget")
    state = StabilizerState.zeros(n)
    for j, label in enumerate(labels):
        for gate in _SOURCE_PREP[label]:
            state.apply_gate(Gate(gate, (j,)))
    for vertex in plan.grid.vertices():
        state.apply_gate(Gate("H", (_qubit_index(plan, vertex),)))
    for j, path in enumerate(plan.paths):
        state.apply_gate(
            Gate("CZ", (_qubit_index(plan, ("source", j)), _qubit_index(plan, path[0])))
        )
    for u, v in _fabric_edges(plan):
        state.apply_gate(Gate("CZ", (_qubit_index(plan, u), _qubit_index(plan, v))))

    order = _measure_order(plan)
    if forced is not None and len(forced) != len(order):
        raise ValueError(f"forced outcomes must cover all {len(order)} measurements")
    outcomes = {}
    pattern = plan.measurement_pattern
    for i, key in enumerate(order):
        letter = "Z" if (not _is_source_key(key) and pattern[key] == Z_REMOVE) else "X"
        obs = PauliString.single(n, _qubit_index(plan, key), letter)
        force = forced[i] if forced is not None else None
        outcome, _ = state.measure(obs, rng=rng, force=force)
        outcomes[key] = outcome
    return state, outcomes


def _is_source_key(key) -> bool:
    return isinstance(key, tuple) and len(key) == 2 and key[0] == "source"


def _tableau_targets(plan, state, byproducts):
    raw = []
    corrected = []
    for frame, (x, z) in zip(plan.byproduct_frames, byproducts):
        qubit = _qubit_index(plan, frame.target)
        axis = state.single_qubit_axis(qubit)
        raw.append(_AXIS_LABEL.get(axis))
        if x:
            state.apply_gate(Gate("X", (qubit,)))
        if z:
            state.apply_gate(Gate("Z", (qubit,)))
        if frame.hadamard:
            state.apply_gate(Gate("H", (qubit,)))
        axis = state.single_qubit_axis(qubit)
        corrected.append(_AXIS_LABEL.get(axis))
    return tuple(raw), tuple(corrected)


def _simulate_statevector(plan, labels, rng, forced):
    n = len(plan.paths) + plan.grid.num_vertices
    if n > STATEVECTOR_ROUTING_CAP:
        raise ValueError("plan exceeds the statevector routing cap")
    psi = np.array([1.0], dtype=np.complex128)
    for label in labels:
        psi = np.kron(psi, _SOURCE_KETS[label])
    plus = np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2)
    for _ in range(plan.grid.num_vertices):
        psi = np.kron(psi, plus)
    for j, path in enumerate(plan.paths):
        psi = apply_cz(psi, _qubit_index(plan, ("source", j)), _qubit_index(plan, path[0]), n)
    for u, v in _fabric_edges(plan):
        psi = apply_cz(psi, _qubit_index(plan, u), _qubit_index(plan, v), n)

    order = _measure_order(plan)
    if forced is not None and len(forced) != len(order):
        raise ValueError(f"forced outcomes must cover all {len(order)} measurements")
    outcomes = {}
    pattern = plan.measurement_pattern
    for i, key in enumerate(order):
        letter = "Z" if (not _is_source_key(key) and pattern[key] == Z_REMOVE) else "X"
        obs = PauliString.single(n, _qubit_index(plan, key), letter)
        if forced is not None:
            outcome = forced[i]
            projected, prob = project_pauli(psi, obs, outcome)
            if prob <= 1e-12:
                raise ValueError("forced outcome has zero probability")
        else:
            projected, prob = project_pauli(psi, obs, 0)
            if rng.random() < prob:
                outcome = 0
            else:
                outcome = 1
                projected, prob = project_pauli(psi, obs, 1)
        psi = projected / math.sqrt(prob)
        outcomes[key] = outcome
    return psi, outcomes


def _extract_qubit(psi: np.ndarray, qubit: int, n: int) -> np.ndarray:
    cube = psi.reshape(2**qubit, 2, 2 ** (n - qubit - 1))
    rho = np.einsum("iaj,ibj->ab", cube, cube.conj())
    values, vectors = np.linalg.eigh(rho)
    if values[0] > 1e-9:
        raise ValueError("target qubit is not in a pure state")
    return vectors[:, -1]


def _statevector_targets(plan, psi, byproducts):
    n = len(plan.paths) + plan.grid.num_vertices
    raw = []
    corrected = []
    for frame, (x, z) in zip(plan.byproduct_frames, byproducts):
        vec = _extract_qubit(psi, _qubit_index(plan, frame.target), n)
        raw.append(vec)
        out = vec
        if x:
            out = _X_MATRIX @ out
        if z:
            out = _Z_MATRIX @ out
        if frame.hadamard:
            out = _H_MATRIX @ out
        corrected.append(out)
    return tuple(raw), tuple(corrected)


def simulate_routing(
    plan: RoutingPlan,
    input_states: Sequence[str],
    rng: Optional[np.random.Generator] = None,
    mode: str = "tableau",
    forced: Optional[Sequence[int]] = None,
) -> RoutingOutcome:
    """Measure the routing fabric and return byproducts and target states.

    Measurements follow the canonical order (per path: pendant source then
    interior vertices, then etched vertices row-major); ``forced`` pins every
    outcome in that order, for branch enumeration.  In tableau mode sources
    and outputs are stabilizer states reported as labels; statevector mode
    (small plans) also accepts the "T" source and reports kets.
    """
    if mode not in ("tableau", "statevector"):
        raise ValueError("mode must be tableau or statevector")
    if not verify_disjoint(plan):
        raise ValueError("invalid plan: paths are not disjoint grid paths")
    labels = _validated_sources(plan, input_states, mode)
    forced_bits = _force_iter(forced)
    if forced_bits is None and rng is None:
        raise ValueError("need an rng unless every outcome is forced")
    if mode == "tableau":
        state, outcomes = _simulate_tableau(plan, labels, rng, forced_bits)
        byproducts = _byproduct_bits(plan, outcomes)
        raw, corrected = _tableau_targets(plan, state, byproducts)
    else:
        psi, outcomes = _simulate_statevector(plan, labels, rng, forced_bits)
        byproducts = _byproduct_bits(plan, outcomes)
        raw, corrected = _statevector_targets(plan, psi, byproducts)
    return RoutingOutcome(
        mode=mode,
        outcomes=outcomes,
        byproducts=byproducts,
        raw_targets=raw,
        corrected_targets=corrected,
        frames=plan.byproduct_frames,
    )


def render_plan(plan: RoutingPlan) -> str:
    """Paths as coordinate sequences plus the basis map as an X/Z/O grid."""
    lines = [f"grid {plan.grid.rows}x{plan.grid.cols} paths {len(plan.paths)}"]
    for j, path in enumerate(plan.paths):
        route = " -> ".join(f"({r},{c})" for r, c in path)
        frame = plan.byproduct_frames[j]
        suffix = " [H]" if frame.hadamard else ""
        lines.append(f"path {j}: {route}{suffix}")
    symbol = {Z_REMOVE: "Z", X_TELEPORT: "X", OUTPUT: "O"}
    pattern = plan.measurement_pattern
    for r in range(plan.grid.rows):
        lines.append("".join(symbol[pattern[(r, c)]] for c in range(plan.grid.cols)))
    return "\n".join(lines)
