"""Rotated surface-code patch with single-shot Z-readout MWPM decoding.

The patch is the standard rotated planar layout: d^2 data qubits on a d x d
grid, d^2 - 1 stabilizer faces alternating in type, logical X down the left
column.  Logical Z uses the total-parity representative (Z on every data
qubit), which equals the top-row chain times Z stabilizers.  It is the one
Pauli support orthogonal to every stabilizer support, so flipping exactly the
logical-Z support is itself an undetectable logical flip, and at distance 1
it reduces to Z on the single qubit.  Decoding consumes one round of physical
Z outcomes: Z-face parities become defects, defects are matched to each
other or to the boundary by minimum-weight perfect matching, and the
corrected logical bit is the parity over the logical-Z support.
"""

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .paulis import PauliString


@dataclass
class SurfaceCodePatch:
    """Geometry plus precomputed matching tables for one code distance."""

    distance: int
    data_coords: tuple  # ((row, col), ...) index -> coordinate
    z_faces: tuple  # tuple of frozensets of data-qubit indices
    x_faces: tuple
    logical_z: frozenset
    logical_x: frozenset
    # BFS products over the defect graph (None/off-diagonal = boundary):
    face_dist: np.ndarray = field(repr=False)  # (F, F) int
    boundary_dist: np.ndarray = field(repr=False)  # (F,) int
    pair_path: dict = field(repr=False)  # (i, j) -> tuple of qubit indices
    boundary_path: dict = field(repr=False)  # i -> tuple of qubit indices

    @property
    def num_data_qubits(self) -> int:
        return len(self.data_coords)

    def stabilizer_paulis(self):
        """All stabilizer generators as PauliStrings (Z faces then X faces)."""
        n = self.num_data_qubits
        out = []
        for support in self.z_faces:
            p = PauliString.identity(n)
            for q in support:
                p = p * PauliString.single(n, q, "Z")
            out.append(p)
        for support in self.x_faces:
            p = PauliString.identity(n)
            for q in support:
                p = p * PauliString.single(n, q, "X")
            out.append(p)
        return out

    def logical_paulis(self):
        n = self.num_data_qubits
        z = PauliString.identity(n)
        for q in self.logical_z:
            z = z * PauliString.single(n, q, "Z")
        x = PauliString.identity(n)
        for q in self.logical_x:
            x = x * PauliString.single(n, q, "X")
        return z, x


def _face_type(r: int, c: int) -> str:
    return "Z" if (r + c) % 2 == 0 else "X"


def build_patch(distance: int) -> SurfaceCodePatch:
    """Rotated-layout patch: l = distance^2 data qubits, l - 1 stabilizers."""
    d = distance
    if d < 1 or d % 2 == 0:
        raise ValueError("distance must be odd and >= 1")
    coords = tuple((r, c) for r in range(d) for c in range(d))
    index = {rc: i for i, rc in enumerate(coords)}

    z_faces, x_faces = [], []
    for r in range(d + 1):
        for c in range(d + 1):
            interior_r = 1 <= r <= d - 1
            interior_c = 1 <= c <= d - 1
            kind = _face_type(r, c)
            if interior_r and interior_c:
                keep = True
            elif (r in (0, d)) and interior_c:
                keep = kind == "X"
            elif (c in (0, d)) and interior_r:
                keep = kind == "Z"
            else:
                keep = False
            if not keep:
                continue
            support = frozenset(
                index[(rr, cc)]
                for rr in (r - 1, r)
                for cc in (c - 1, c)
                if 0 <= rr < d and 0 <= cc < d
            )
            (z_faces if kind == "Z" else x_faces).append(support)

    logical_z = frozenset(range(len(coords)))
    logical_x = frozenset(index[(r, 0)] for r in range(d))

    face_dist, boundary_dist, pair_path, boundary_path = _matching_tables(
        len(coords), tuple(z_faces)
    )
    return SurfaceCodePatch(
        distance=d,
        data_coords=coords,
        z_faces=tuple(z_faces),
        x_faces=tuple(x_faces),
        logical_z=logical_z,
        logical_x=logical_x,
        face_dist=face_dist,
        boundary_dist=boundary_dist,
        pair_path=pair_path,
        boundary_path=boundary_path,
    )


def _matching_tables(num_qubits: int, z_faces: tuple):
    """Shortest flip paths between Z faces and to the boundary.

    Each data qubit toggles one or two Z faces; qubits toggling two faces are
    edges of the defect graph and qubits toggling one face connect it to a
    shared boundary node.  BFS in fixed index order keeps paths canonical.
    """
    F = len(z_faces)
    touching = [[] for _ in range(num_qubits)]
    for f, support in enumerate(z_faces):
        for q in support:
            touching[q].append(f)
    adjacency = [[] for _ in range(F)]  # face -> [(face or -1, qubit)]
    for q, faces in enumerate(touching):
        if len(faces) == 2:
            a, b = faces
            adjacency[a].append((b, q))
            adjacency[b].append((a, q))
        elif len(faces) == 1:
            adjacency[faces[0]].append((-1, q))
    for rows in adjacency:
        rows.sort()

    face_dist = np.full((F, F), -1, dtype=np.int64)
    boundary_dist = np.full(F, -1, dtype=np.int64)
    pair_path = {}
    boundary_path = {}
    for start in range(F):
        dist = {start: 0}
        path = {start: ()}
        frontier = [start]
        while frontier:
            nxt = []
            for f in frontier:
                for g, q in adjacency[f]:
                    if g == -1 or g in dist:
                        continue
                    dist[g] = dist[f] + 1
                    path[g] = path[f] + (q,)
                    nxt.append(g)
            frontier = sorted(nxt)
        for g, dd in dist.items():
            face_dist[start, g] = dd
            if start <= g:
                pair_path[(start, g)] = path[g]
        # Boundary: cheapest single-face qubit reachable from start.
        best = None
        for f, dd in sorted(dist.items()):
            for g, q in adjacency[f]:
                if g == -1 and (best is None or dd + 1 < best[0]):
                    best = (dd + 1, path[f] + (q,))
        if best is not None:
            boundary_dist[start] = best[0]
            boundary_path[start] = best[1]
    return face_dist, boundary_dist, pair_path, boundary_path


# ---------------------------------------------------------------------------
# Syndrome and matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Syndrome:
    """Indices of Z faces with violated parity."""

    defects: tuple

    def __post_init__(self):
        if list(self.defects) != sorted(set(self.defects)):
            raise ValueError("defects must be sorted and unique")


@dataclass(frozen=True)
class Matching:
    """Defect pairing; partner -1 stands for the boundary."""

    pairs: tuple  # ((i, j) ...) with j == -1 for boundary, i < j otherwise
    weight: float


def z_syndrome(patch: SurfaceCodePatch, outcomes: np.ndarray) -> Syndrome:
    outcomes = np.asarray(outcomes, dtype=np.uint8)
    if outcomes.shape != (patch.num_data_qubits,):
        raise ValueError("outcome vector length mismatch")
    defects = [
        f for f, support in enumerate(patch.z_faces)
        if int(sum(outcomes[q] for q in support)) % 2 == 1
    ]
    return Syndrome(tuple(defects))


def mwpm(defects: Syndrome, geometry: SurfaceCodePatch) -> Matching:
    """Minimum-weight perfect matching with per-defect boundary copies.

    Boundary copies are pairwise connected at weight 0, so any subset of
    defects may retire to the boundary; the rest pair up.
    """
    ds = list(defects.defects)
    k = len(ds)
    if k == 0:
        return Matching((), 0.0)
    graph = nx.Graph()
    for a in range(k):
        graph.add_edge(("d", a), ("b", a), weight=float(geometry.boundary_dist[ds[a]]))
        for b in range(a + 1, k):
            graph.add_edge(("d", a), ("d", b), weight=float(geometry.face_dist[ds[a], ds[b]]))
            graph.add_edge(("b", a), ("b", b), weight=0.0)
    match = nx.min_weight_matching(graph)
    pairs = []
    weight = 0.0
    for u, v in match:
        names = {u[0], v[0]}
        if names == {"d"}:
            i, j = sorted((ds[u[1]], ds[v[1]]))
            pairs.append((i, j))
            weight += float(geometry.face_dist[i, j])
        elif names == {"d", "b"}:
            a = u[1] if u[0] == "d" else v[1]
            pairs.append((ds[a], -1))
            weight += float(geometry.boundary_dist[ds[a]])
    return Matching(tuple(sorted(pairs)), weight)


def correction_for(matching: Matching, patch: SurfaceCodePatch) -> np.ndarray:
    """Data-qubit flip vector realizing the matching's paths."""
    flips = np.zeros(patch.num_data_qubits, dtype=np.uint8)
    for i, j in matching.pairs:
        path = patch.boundary_path[i] if j == -1 else patch.pair_path[(i, j)]
        for q in path:
            flips[q] ^= 1
    return flips


def z_readout_decode(patch: SurfaceCodePatch, outcomes) -> int:
    """Decode one round of physical Z outcomes to the logical-Z bit."""
    outcomes = np.asarray(outcomes, dtype=np.uint8)
    syndrome = z_syndrome(patch, outcomes)
    corrected = outcomes ^ correction_for(mwpm(syndrome, patch), patch)
    return int(sum(corrected[q] for q in patch.logical_z) % 2)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    phat = successes / trials
    denom = 1 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def logical_error_rate(distance: int, p: float, trials: int, rng: np.random.Generator):
    """Monte Carlo decoding-failure estimate under i.i.d. readout flips.

    Sends the all-zeros codeword readout through flips at rate p and decodes;
    returns (estimate, (ci_low, ci_high)) with a Wilson 95% interval.
    """
    if not 0 <= p < 1:
        raise ValueError("flip rate must be in [0, 1)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    patch = build_patch(distance)
    l = patch.num_data_qubits
    check = np.zeros((len(patch.z_faces), l), dtype=np.uint8)
    for f, support in enumerate(patch.z_faces):
        for q in support:
            check[f, q] = 1
    lz_mask = np.zeros(l, dtype=np.uint8)
    for q in patch.logical_z:
        lz_mask[q] = 1
    # Parity of each canonical path over the logical-Z support, so a trial
    # needs only table lookups instead of a full correction vector.
    pair_parity = {
        key: int(sum(lz_mask[q] for q in path)) % 2
        for key, path in patch.pair_path.items()
    }
    boundary_parity = {
        f: int(sum(lz_mask[q] for q in path)) % 2
        for f, path in patch.boundary_path.items()
    }

    flips = (rng.random((trials, l)) < p).astype(np.uint8)
    syndromes = (flips @ check.T) % 2
    raw_parity = (flips @ lz_mask) % 2
    failures = 0
    for t in range(trials):
        defects = np.flatnonzero(syndromes[t])
        bit = int(raw_parity[t])
        if defects.size == 1:
            bit ^= boundary_parity[int(defects[0])]
        elif defects.size > 1:
            matching = mwpm(Syndrome(tuple(int(f) for f in defects)), patch)
            for i, j in matching.pairs:
                bit ^= boundary_parity[i] if j == -1 else pair_parity[(i, j)]
        if bit:
            failures += 1
    return failures / trials, wilson_interval(failures, trials)


def fit_pf_exponent(rates) -> float:
    """Least-squares slope c of -log p_L against sqrt(l), l = distance^2."""
    pts = [(int(d), float(pl)) for d, pl in rates]
    if len(pts) < 2:
        raise ValueError("need at least two (distance, p_L) points")
    if any(pl <= 0 for _, pl in pts):
        raise ValueError("rates must be positive to take logs")
    xs = np.array([math.sqrt(d * d) for d, _ in pts])
    if np.allclose(xs, xs[0]):
        raise ValueError("degenerate fit: all distances equal")
    ys = np.array([-math.log(pl) for _, pl in pts])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def rate_sweep(distances, p: float, trials: int, rng: np.random.Generator):
    """Rows of (distance, l, p, trials, p_L, ci_low, ci_high) for reporting."""
    rows = []
    for d in distances:
        est, (lo, hi) = logical_error_rate(d, p, trials, rng)
        rows.append((d, d * d, p, trials, est, lo, hi))
    return rows
