"""Brickwork graph-state construction and ideal output-distribution sampling.

A sampling instance is an n-row, k-column grid of qubits prepared in |+>,
entangled by CZ along row wires and selected vertical rungs, rotated by
Z(pi/4) / Z(pi/2) according to per-vertex roles, and Hadamard-rotated on the
non-output vertices so every measurement is computational-basis.  The last
column is read out directly in Z and forms the output register x; all other
vertices form the side register s.
"""

import csv
import importlib.resources
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .statevec import (
    H_MATRIX,
    STATEVECTOR_QUBIT_CAP,
    apply_1q,
    apply_cz,
    plus_state,
    sample_bits_sequential,
    sample_indices,
    zrot,
)

BOUNDARY_LINK_VERTICES = 12

# ---------------------------------------------------------------------------
# Roles
# ---------------------------------------------------------------------------


class MeasurementRole:
    """One of the four allowed vertex roles.

    Instances are interned; compare with ``is`` or ``==``.  Angles outside
    {0, pi/4, pi/2} are not constructible.
    """

    _registry = {}

    def __init__(self, key: str, angle):
        if key in MeasurementRole._registry:
            raise ValueError("roles are fixed; use MeasurementRole.from_text")
        self.key = key
        self.angle = angle
        MeasurementRole._registry[key] = self

    def __repr__(self):
        return f"MeasurementRole({self.key})"

    def __reduce__(self):
        return (MeasurementRole.from_text, (self.key,))

    @property
    def is_output(self) -> bool:
        return self.angle is None

    @classmethod
    def from_text(cls, text: str) -> "MeasurementRole":
        key = _ROLE_ALIASES.get(str(text).strip().lower())
        if key is None:
            raise ValueError(f"unknown measurement role {text!r}")
        return cls._registry[key]


XY_0 = MeasurementRole("xy0", 0.0)
XY_PI_4 = MeasurementRole("xy_pi4", math.pi / 4)
XY_PI_2 = MeasurementRole("xy_pi2", math.pi / 2)
OUTPUT_Z = MeasurementRole("output_z", None)

_ROLE_ALIASES = {
    "xy0": "xy0",
    "xy(0)": "xy0",
    "0": "xy0",
    "zero": "xy0",
    "xy_pi4": "xy_pi4",
    "pi4": "xy_pi4",
    "pi/4": "xy_pi4",
    "xy_pi2": "xy_pi2",
    "pi2": "xy_pi2",
    "pi/2": "xy_pi2",
    "output_z": "output_z",
    "output": "output_z",
    "z": "output_z",
}


# ---------------------------------------------------------------------------
# Gadget specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GadgetSpec:
    """A small tile of roles and internal edges, repeated over the grid.

    The tile covers ``cell_rows`` x ``cell_cols`` grid cells with one vertex
    per cell.  Horizontal wires are implied (every row runs left to right
    through the tile and out both ports); only vertical internal edges add
    structure.  Column blocks alternate a vertical brick offset of
    ``cell_rows // 2`` rows.
    """

    name: str
    cell_rows: int
    cell_cols: int
    roles: tuple  # ((row, col, MeasurementRole), ...)
    vertical_edges: tuple  # ((row, col), ...) meaning (row,col)-(row+1,col)

    def __post_init__(self):
        if self.cell_rows < 1 or self.cell_cols < 1:
            raise ValueError("gadget cell block must be at least 1x1")
        seen = {}
        for r, c, role in self.roles:
            if not (0 <= r < self.cell_rows and 0 <= c < self.cell_cols):
                raise ValueError(f"gadget vertex ({r},{c}) outside cell block")
            if (r, c) in seen:
                raise ValueError(f"duplicate gadget vertex ({r},{c})")
            if role.is_output:
                raise ValueError("gadget roles must be measurable (no outputs)")
            seen[(r, c)] = role
        if len(seen) != self.cell_rows * self.cell_cols:
            raise ValueError("gadget must give a role to every cell")
        for r, c in self.vertical_edges:
            if (r, c) not in seen or (r + 1, c) not in seen:
                raise ValueError(f"vertical gadget edge ({r},{c}) out of range")

    def role_at(self, r: int, c: int) -> MeasurementRole:
        for rr, cc, role in self.roles:
            if (rr, cc) == (r, c):
                return role
        raise KeyError((r, c))


def load_gadget(source) -> GadgetSpec:
    """Parse a GadgetSpec from a JSON file path, file object, or dict."""
    if isinstance(source, dict):
        raw = source
    elif hasattr(source, "read"):
        raw = json.load(source)
    else:
        with open(source) as handle:
            raw = json.load(handle)
    try:
        cell_rows = int(raw["cell_rows"])
        cell_cols = int(raw["cell_cols"])
        roles = tuple(
            (int(v["row"]), int(v["col"]), MeasurementRole.from_text(v["role"]))
            for v in raw["vertices"]
        )
        edges = raw.get("edges", [])
        ports = raw.get("ports", {"left": [], "right": []})
        name = str(raw.get("name", "gadget"))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed gadget description: {exc}") from exc
    vertical = []
    for (r1, c1), (r2, c2) in ((tuple(a), tuple(b)) for a, b in edges):
        if c1 == c2 and abs(r1 - r2) == 1:
            vertical.append((min(r1, r2), c1))
        elif r1 == r2 and abs(c1 - c2) == 1:
            pass  # horizontal internal edges are realized by the row wires
        else:
            raise ValueError(f"gadget edge {((r1, c1), (r2, c2))} is not nearest-neighbor")
    left = {tuple(p) for p in ports.get("left", [])}
    right = {tuple(p) for p in ports.get("right", [])}
    want_left = {(r, 0) for r in range(cell_rows)}
    want_right = {(r, cell_cols - 1) for r in range(cell_rows)}
    if left != want_left or right != want_right:
        raise ValueError("gadget ports must run every row through both sides")
    return GadgetSpec(name, cell_rows, cell_cols, roles, tuple(sorted(set(vertical))))


def default_gadget() -> GadgetSpec:
    """The shipped two-qubit brickwork gadget (pi/4, pi/2, and 0 roles)."""
    ref = importlib.resources.files("ftqs").joinpath("data/gadget_gb.json")
    with ref.open() as handle:
        return load_gadget(handle)


def wire_gadget() -> GadgetSpec:
    """Single-vertex pass-through tile: every measured vertex at XY angle 0."""
    return GadgetSpec("wire", 1, 1, ((0, 0, XY_0),), ())


# ---------------------------------------------------------------------------
# Graph specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    """An n x k measurement-pattern graph plus any boundary-link chains.

    Vertices are (row, col, sub) triples; sub 0 is the base grid and sub >= 1
    indexes boundary-link chain qubits hanging off (row, col).  Edges are
    stored as sorted vertex pairs.
    """

    n: int
    k: int
    vertices: tuple
    edges: frozenset
    roles: dict = field(compare=False)

    def __post_init__(self):
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise ValueError("duplicate vertices")
        outputs = [v for v in self.vertices if self.roles[v].is_output]
        if len(outputs) != self.n or any(v[1] != self.k - 1 for v in outputs):
            raise ValueError("exactly the last column must carry outputs, one per row")
        for u, v in self.edges:
            if u == v:
                raise ValueError("self loop")
            if u not in vset or v not in vset:
                raise ValueError("edge endpoint missing")
            if (u, v) != tuple(sorted((u, v))):
                raise ValueError("edges must be stored sorted")
        if set(self.roles) != vset:
            raise ValueError("every vertex needs a role")
        if not self._connected():
            raise ValueError("graph is disconnected; n and k too small to tile")

    def _connected(self) -> bool:
        if not self.vertices:
            return False
        adj = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    # -- derived orderings ---------------------------------------------------

    def vertex_order(self) -> list:
        """Column-major qubit ordering used for all bit strings."""
        return sorted(self.vertices, key=lambda v: (v[1], v[0], v[2]))

    def measured_vertices(self) -> list:
        return [v for v in self.vertex_order() if not self.roles[v].is_output]

    def output_vertices(self) -> list:
        return [v for v in self.vertex_order() if self.roles[v].is_output]

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)


def build_brickwork_graph(n: int, k: int, gadget: GadgetSpec,
                          link_length: int = BOUNDARY_LINK_VERTICES) -> GraphSpec:
    """Tile the gadget over n rows and k-1 measured columns plus an output column.

    Row wires always run the full width.  Vertical gadget rungs repeat down
    every matching column cyclically, with the brick offset alternating
    column by column (a brick-wall pattern, output column included); when the
    cyclic step would pair the bottom row with the top one at distance > 1,
    the pair is joined through a linear chain of ``link_length`` XY(0) qubits
    instead of a long-range edge.
    """
    if n < 1 or k < 2:
        raise ValueError("need n >= 1 rows and k >= 2 columns")
    R, C = gadget.cell_rows, gadget.cell_cols
    vertices = [(r, c, 0) for c in range(k) for r in range(n)]
    roles = {}
    edges = set()

    def add_edge(u, v):
        edges.add(tuple(sorted((u, v))))

    for c in range(k):
        shift = (c % 2) * (R // 2)
        for r in range(n):
            if c == k - 1:
                roles[(r, c, 0)] = OUTPUT_Z
            else:
                roles[(r, c, 0)] = gadget.role_at((r - shift) % R, c % C)
            if c + 1 < k:
                add_edge((r, c, 0), (r, c + 1, 0))

    for c in range(k):
        shift = (c % 2) * (R // 2)
        for a, cc in gadget.vertical_edges:
            if cc != c % C:
                continue
            for i in range(n // R):
                top = (shift + R * i + a) % n
                bot = (top + 1) % n
                if bot == top + 1 or n <= R:
                    add_edge((top, c, 0), (bot % n, c, 0))
                else:
                    prev = (top, c, 0)
                    for j in range(1, link_length + 1):
                        link_vertex = (top, c, j)
                        vertices.append(link_vertex)
                        roles[link_vertex] = XY_0
                        add_edge(prev, link_vertex)
                        prev = link_vertex
                    add_edge(prev, (bot, c, 0))

    return GraphSpec(n, k, tuple(vertices), frozenset(edges), roles)


def substitute_gbprime(spec: GraphSpec) -> GraphSpec:
    """Expand every column containing an XY(pi/2) role into a 3-column run.

    Each pi/2 vertex becomes a wire of three qubits at angles
    (pi/4, 0, pi/4); the other vertices in the same column become
    (original role, 0, 0) so columns stay aligned.  Vertical edges and
    boundary-link attachments stay on the first of the three new columns.
    """
    expanded = sorted(
        {v[1] for v in spec.vertices if spec.roles[v] is XY_PI_2}
    )
    if any(c == spec.k - 1 for c in expanded):
        raise ValueError("output column cannot hold a pi/2 role")
    offset = {}
    shift = 0
    for c in range(spec.k):
        offset[c] = c + shift
        if c in expanded:
            shift += 2
    new_k = spec.k + 2 * len(expanded)

    vertices = []
    roles = {}
    relabel = {}
    for v in spec.vertices:
        r, c, sub = v
        base = offset[c]
        relabel[v] = (r, base, sub)
        if c in expanded and sub == 0:
            old = spec.roles[v]
            run = (XY_PI_4, XY_0, XY_PI_4) if old is XY_PI_2 else (old, XY_0, XY_0)
            for j, role in enumerate(run):
                vertices.append((r, base + j, 0))
                roles[(r, base + j, 0)] = role
        else:
            vertices.append((r, base, sub))
            roles[(r, base, sub)] = spec.roles[v]

    edges = set()
    for u, v in spec.edges:
        (ru, cu, su), (rv, cv, sv) = u, v
        if su == 0 and sv == 0 and ru == rv and abs(cu - cv) == 1:
            # Row wire: reconnect through any expansion columns in between.
            left = min(cu, cv)
            a = (ru, offset[left], 0)
            b = (rv, offset[left + 1], 0)
            cols = range(a[1], b[1])
            for cc in cols:
                edges.add(tuple(sorted(((ru, cc, 0), (ru, cc + 1, 0)))))
        else:
            edges.add(tuple(sorted((relabel[u], relabel[v]))))

    return GraphSpec(spec.n, new_k, tuple(vertices), frozenset(edges), roles)


# ---------------------------------------------------------------------------
# Dense state and distribution
# ---------------------------------------------------------------------------


def graph_statevector(spec: GraphSpec, cap: int = STATEVECTOR_QUBIT_CAP) -> np.ndarray:
    """Dense vector of the rotated graph state, computational-readout form.

    Prepares |+> everywhere, applies CZ on every edge, applies Z(angle) on
    the angled vertices, then H on every non-output vertex so that measuring
    all qubits in Z samples the target distribution directly.
    """
    order = spec.vertex_order()
    V = len(order)
    if V > cap:
        raise ValueError(f"{V} qubits exceeds the statevector cap ({cap})")
    index = {v: i for i, v in enumerate(order)}
    psi = plus_state(V)
    for u, v in spec.edges:
        apply_cz(psi, index[u], index[v], V)
    for v in order:
        role = spec.roles[v]
        if role.is_output:
            continue
        if role.angle:
            psi = apply_1q(psi, zrot(role.angle), index[v], V)
        psi = apply_1q(psi, H_MATRIX, index[v], V)
    return psi


@dataclass
class OutcomeDistribution:
    """Exact joint distribution over (s, x) as a 2^s_length x 2^x_length table."""

    s_length: int
    x_length: int
    table: np.ndarray

    def __post_init__(self):
        want = (2**self.s_length, 2**self.x_length)
        if self.table.shape != want:
            raise ValueError(f"table shape {self.table.shape} != {want}")
        if np.any(self.table < -1e-12):
            raise ValueError("negative probability")
        total = float(self.table.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def prob(self, s: str, x: str) -> float:
        if len(s) != self.s_length or len(x) != self.x_length:
            raise ValueError("bit-string length mismatch")
        return float(self.table[int(s, 2) if s else 0, int(x, 2) if x else 0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["s", "x", "probability"])
            for si in range(2**self.s_length):
                s = format(si, f"0{self.s_length}b") if self.s_length else ""
                for xi in range(2**self.x_length):
                    x = format(xi, f"0{self.x_length}b") if self.x_length else ""
                    writer.writerow([s, x, repr(float(self.table[si, xi]))])


def _register_indices(spec: GraphSpec):
    order = spec.vertex_order()
    V = len(order)
    s_pos = [i for i, v in enumerate(order) if not spec.roles[v].is_output]
    x_pos = [i for i, v in enumerate(order) if spec.roles[v].is_output]
    return order, V, s_pos, x_pos


def exact_distribution(spec: GraphSpec, cap: int = STATEVECTOR_QUBIT_CAP) -> OutcomeDistribution:
    """Born-rule table D(s, x) over every outcome of the rotated graph state."""
    _, V, s_pos, x_pos = _register_indices(spec)
    psi = graph_statevector(spec, cap=cap)
    probs = np.abs(psi) ** 2
    idx = np.arange(probs.size, dtype=np.int64)
    s_int = np.zeros_like(idx)
    for j, p in enumerate(s_pos):
        s_int |= ((idx >> (V - 1 - p)) & 1) << (len(s_pos) - 1 - j)
    x_int = np.zeros_like(idx)
    for j, p in enumerate(x_pos):
        x_int |= ((idx >> (V - 1 - p)) & 1) << (len(x_pos) - 1 - j)
    table = np.zeros((2 ** len(s_pos), 2 ** len(x_pos)))
    np.add.at(table, (s_int, x_int), probs)
    return OutcomeDistribution(len(s_pos), len(x_pos), table)


def sample_outcome(spec: GraphSpec, rng: np.random.Generator,
                   cap: int = STATEVECTOR_QUBIT_CAP):
    """One (s, x) draw by sequential conditional sampling, no joint table."""
    _, V, s_pos, x_pos = _register_indices(spec)
    psi = graph_statevector(spec, cap=cap)
    bits = sample_bits_sequential(psi, V, rng)
    s = "".join(str(int(bits[p])) for p in s_pos)
    x = "".join(str(int(bits[p])) for p in x_pos)
    return s, x


def sample_outcomes(spec: GraphSpec, shots: int, rng: np.random.Generator,
                    cap: int = STATEVECTOR_QUBIT_CAP):
    """Batch sampling; returns (S, X) uint8 arrays of shape (shots, len)."""
    _, V, s_pos, x_pos = _register_indices(spec)
    psi = graph_statevector(spec, cap=cap)
    draws = sample_indices(np.abs(psi) ** 2, shots, rng)
    S = np.empty((shots, len(s_pos)), np.uint8)
    X = np.empty((shots, len(x_pos)), np.uint8)
    for j, p in enumerate(s_pos):
        S[:, j] = (draws >> (V - 1 - p)) & 1
    for j, p in enumerate(x_pos):
        X[:, j] = (draws >> (V - 1 - p)) & 1
    return S, X


# ---------------------------------------------------------------------------
# Distribution diagnostics
# ---------------------------------------------------------------------------


def uniform_s_marginal_check(spec: GraphSpec, cap: int = STATEVECTOR_QUBIT_CAP) -> float:
    """Max over s of |sum_x D(s,x) - 2^-#s|; 0 for valid wire-flow tilings."""
    dist = exact_distribution(spec, cap=cap)
    marginal = dist.table.sum(axis=1)
    return float(np.abs(marginal - 2.0**-dist.s_length).max())


def anticoncentration_stats(dist: OutcomeDistribution, alpha: float) -> float:
    """Fraction of outcomes with D(s,x) >= alpha / #outcomes."""
    cut = alpha / dist.table.size
    return float(np.mean(dist.table >= cut))


def l1_distance(d1: OutcomeDistribution, d2: OutcomeDistribution) -> float:
    if (d1.s_length, d1.x_length) != (d2.s_length, d2.x_length):
        raise ValueError("outcome spaces differ")
    return float(np.abs(d1.table - d2.table).sum())


def uniform_distribution(s_length: int, x_length: int) -> OutcomeDistribution:
    size = (2**s_length, 2**x_length)
    return OutcomeDistribution(s_length, x_length, np.full(size, 1.0 / (size[0] * size[1])))


def empirical_distribution(S: np.ndarray, X: np.ndarray, s_length: int,
                           x_length: int) -> OutcomeDistribution:
    """Histogram sampled bit arrays into an OutcomeDistribution."""
    shots = S.shape[0]
    s_int = np.zeros(shots, np.int64)
    for j in range(s_length):
        s_int |= S[:, j].astype(np.int64) << (s_length - 1 - j)
    x_int = np.zeros(shots, np.int64)
    for j in range(x_length):
        x_int |= X[:, j].astype(np.int64) << (x_length - 1 - j)
    table = np.zeros((2**s_length, 2**x_length))
    np.add.at(table, (s_int, x_int), 1.0 / shots)
    return OutcomeDistribution(s_length, x_length, table)


def default_column_count(n: int, variant: str, c1: int = 1, c3: int = 1) -> int:
    """Column budget heuristics: k = c1*n for the base tiling, c3*n^3 after
    pi/2 elimination."""
    if variant == "gb":
        return max(2, c1 * n)
    if variant == "gbprime":
        return max(2, c3 * n**3)
    raise ValueError(f"unknown variant {variant!r}")
