"""End-to-end composition: distillation, routing, sampling, readout decode.

Two fidelity tiers share one configuration type. ``run_exact_small`` executes
the whole mechanism concretely at small n: per-copy distillation circuits,
classical success flags feeding the routing planner, routed magic states
assembled into the sampling graph, and a one-round readout decode per logical
bit. ``run_error_model`` keeps the sampling exact but injects decode failures
and distilled-state dephasing statistically, which scales to enough shots to
compare measured total-variation distance against the closed-form bounds.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .distill import (
    distill_once,
    fifteen_to_one_protocol,
    seven_to_one_protocol,
)
from .paulis import NoiseSpec
from .routing import (
    STATEVECTOR_ROUTING_CAP,
    plan_routes,
    simulate_routing,
)
from .sampler import (
    GraphSpec,
    OutcomeDistribution,
    XY_PI_2,
    XY_PI_4,
    build_brickwork_graph,
    default_gadget,
    exact_distribution,
    l1_distance,
    substitute_gbprime,
)
from .statevec import (
    STATEVECTOR_QUBIT_CAP,
    apply_1q,
    apply_cz,
    born_probs,
    product_state,
    sample_indices,
)

_SQRT2 = math.sqrt(2.0)
_KET_PLUS = np.array([1.0, 1.0], dtype=np.complex128) / _SQRT2
_KET_T = np.array([1.0, np.exp(1j * math.pi / 4)], dtype=np.complex128) / _SQRT2
_KET_Y = np.array([1.0, 1.0j], dtype=np.complex128) / _SQRT2
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / _SQRT2

# Fixed entangling schedules. Every CZ of a routing fabric falls into one of
# five direction/parity classes, and every brickwork-graph CZ into one of
# six; the schedule always allocates the full set of slots, so circuit depth
# cannot drift with instance size.
ROUTING_CZ_LAYERS = 5
SAMPLING_CZ_LAYERS = 6

EXTRA_COPY_HEADROOM = 3


class InsufficientSuccesses(RuntimeError):
    """Distillation produced fewer accepted copies than routing needs."""

    def __init__(self, successes: int, needed: int, copies: int, stage: str):
        self.successes = successes
        self.needed = needed
        self.copies = copies
        self.stage = stage
        super().__init__(
            f"insufficient {stage} distillation successes: "
            f"{successes} of {needed} needed from {copies} copies"
        )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; validated on construction.

    ``mode`` picks the tier. exact_small simulates the mechanism and honors
    distance, noise.p_out, eps_T, and eps_Y; error_model needs the calibrated
    per-logical decode-failure rate p_f and the distilled infidelity eps_out.
    """

    n: int = 1
    k: int = 2
    gadget: str = "auto"
    architecture: str = "4d"
    mode: str = "exact_small"
    distance: int = 1
    noise: NoiseSpec | None = None
    eps_T: float = 0.0
    eps_Y: float = 0.0
    msd_copies: int = 0
    y_copies: int = 0
    skip_distillation: bool = False
    p_f: float | None = None
    eps_out: float | None = None
    flip_model: str = "independent"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.k < 2:
            raise ValueError("need n >= 1 and k >= 2")
        if self.gadget not in ("auto", "brickwork", "pi2_free"):
            raise ValueError("gadget must be auto, brickwork, or pi2_free")
        if self.architecture not in ("4d", "3d"):
            raise ValueError("architecture must be 4d or 3d")
        if self.mode not in ("exact_small", "error_model"):
            raise ValueError("mode must be exact_small or error_model")
        if self.distance not in (1, 3):
            raise ValueError("distance must be 1 or 3")
        if not 0.0 <= self.eps_T < 0.5 or not 0.0 <= self.eps_Y < 0.5:
            raise ValueError("magic infidelities must lie in [0, 0.5)")
        if self.msd_copies < 0 or self.y_copies < 0:
            raise ValueError("copy counts must be non-negative")
        if self.flip_model not in ("independent", "union"):
            raise ValueError("flip_model must be independent or union")
        if self.architecture == "3d" and self.resolved_gadget() == "brickwork":
            raise ValueError("the 3d architecture requires the pi2_free gadget")
        if self.mode == "error_model":
            if self.p_f is None or self.eps_out is None:
                raise ValueError(
                    "error_model needs calibrated p_f and eps_out (0.0 is valid)"
                )
            if not 0.0 <= self.p_f <= 1.0 or not 0.0 <= self.eps_out < 1.0:
                raise ValueError("p_f must lie in [0, 1] and eps_out in [0, 1)")
            if self.noise is not None:
                raise ValueError("error_model replaces NoiseSpec with p_f/eps_out")
        else:
            if self.p_f is not None or self.eps_out is not None:
                raise ValueError("p_f and eps_out are error_model fields")
            if self.noise is not None and (
                self.noise.p_prep != 0.0 or any(self.noise.p_layers)
            ):
                raise ValueError(
                    "exact_small models readout flips only; stage rates must be 0"
                )

    def resolved_gadget(self) -> str:
        if self.gadget != "auto":
            return self.gadget
        return "pi2_free" if self.architecture == "3d" else "brickwork"

    @property
    def readout_p(self) -> float:
        return 0.0 if self.noise is None else self.noise.p_out


@dataclass(frozen=True)
class RunRecord:
    """Outcome and bookkeeping of a single end-to-end run."""

    mode: str
    architecture: str
    s_bits: str
    x_bits: str
    msd_copies: int = 0
    msd_successes: int = 0
    msd_needed: int = 0
    msd_flips: int = 0
    y_msd_copies: int = 0
    y_msd_successes: int = 0
    y_msd_needed: int = 0
    y_msd_flips: int = 0
    routing_plan_id: str | None = None
    y_routing_plan_id: str | None = None
    decoded_bits: int = 0
    decode_failures: int = 0
    feedback_layers: int = 0
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.routing_plan_id is not None and self.msd_successes < self.msd_needed:
            raise ValueError("routing proceeded with too few distilled states")
        if (
            self.y_routing_plan_id is not None
            and self.y_msd_successes < self.y_msd_needed
        ):
            raise ValueError("routing proceeded with too few distilled states")


@dataclass(frozen=True)
class ErrorModelResult:
    distribution: OutcomeDistribution
    ideal: OutcomeDistribution
    shots: int
    l1_to_ideal: float
    records: tuple


def graph_spec_for(config: PipelineConfig) -> GraphSpec:
    spec = build_brickwork_graph(config.n, config.k, default_gadget())
    if config.resolved_gadget() == "pi2_free":
        spec = substitute_gbprime(spec)
    return spec


def _site_split(spec: GraphSpec):
    order = spec.vertex_order()
    t_sites = [v for v in order if spec.roles[v] is XY_PI_4]
    y_sites = [v for v in order if spec.roles[v] is XY_PI_2]
    return order, t_sites, y_sites


def _auto_copies(requested: int, needed: int, cap_qubits: int | None) -> int:
    """Copy count for a distillation bank; must fit the routing cap."""
    if needed == 0:
        return 0
    copies = requested
    if copies == 0:
        copies = needed + EXTRA_COPY_HEADROOM
        if cap_qubits is not None:
            copies = min(copies, (cap_qubits - needed) // (2 * needed))
    if copies < needed:
        raise ValueError(
            f"{needed} routed states need at least {needed} copies within the "
            f"simulation cap; got {copies}"
        )
    if cap_qubits is not None and copies * 2 * needed + needed > cap_qubits:
        raise ValueError(
            f"routing fabric for {copies} copies x {needed} paths exceeds the "
            f"{cap_qubits}-qubit cap"
        )
    return copies


def _plan_id(p: int, m: int, flags) -> str:
    return f"p{p}m{m}f" + "".join(str(int(f)) for f in flags)


def _distill_bank(protocol, eps: float, copies: int, rng) -> tuple:
    """Run independent copies; returns (success flags, phase-flip flags)."""
    flags = []
    flips = []
    for _ in range(copies):
        accepted, infidelity = distill_once(protocol, eps, rng, noise="dephasing")
        flags.append(1 if accepted else 0)
        flips.append(bool(accepted and infidelity > 0.5))
    return flags, flips


def _route_bank(flags, flips, needed: int, labels_or_mode, rng, stage: str):
    """Feed success flags to the planner and route the selected copies.

    This is the classical-feedback point: measurement results (flags) choose
    the measurement pattern of the routing fabric. Raises
    InsufficientSuccesses when the bank came up short.
    """
    copies = len(flags)
    successes = sum(flags)
    if successes < needed:
        raise InsufficientSuccesses(successes, needed, copies, stage)
    plan = plan_routes(copies, needed, flags)
    selected = [i for i, f in enumerate(flags) if f][:needed]
    if labels_or_mode == "tableau_y":
        labels = ["-i" if flips[i] else "i" for i in selected]
        outcome = simulate_routing(plan, labels, rng=rng, mode="tableau")
        routed_flips = [label == "-i" for label in outcome.corrected_targets]
        routed = list(outcome.corrected_targets)
    else:
        outcome = simulate_routing(plan, ["T"] * needed, rng=rng, mode="statevector")
        routed = []
        routed_flips = []
        for path_index, ket in zip(selected, outcome.corrected_targets):
            ket = np.asarray(ket, dtype=np.complex128)
            if flips[path_index]:
                ket = ket * np.array([1.0, -1.0])
            routed.append(ket)
            routed_flips.append(flips[path_index])
    plan_id = _plan_id(copies, needed, flags)
    return routed, routed_flips, plan_id, successes


def _readout_bits(true_bits, distance: int, p: float, rng) -> tuple:
    """Per-logical one-round readout: returns (recorded bits, failure count)."""
    if distance == 1:
        failures = (rng.random(len(true_bits)) < p).astype(np.uint8)
        return [b ^ int(f) for b, f in zip(true_bits, failures)], int(failures.sum())
    from .surface import build_patch, z_readout_decode

    patch = build_patch(distance)
    recorded = []
    failures = 0
    for bit in true_bits:
        physical_flips = (rng.random(patch.num_data_qubits) < p).astype(np.uint8)
        fail = z_readout_decode(patch, physical_flips)
        failures += fail
        recorded.append(bit ^ fail)
    return recorded, failures


def run_exact_small(config: PipelineConfig, rng=None) -> RunRecord:
    """One concrete end-to-end run at small n.

    Distills per-copy, feeds success flags to the routing planner (the only
    classical-feedback point per architecture stage), assembles the rotated
    graph state from the routed magic kets, samples every vertex, and pushes
    each logical bit through a one-round readout decode.
    """
    if config.mode != "exact_small":
        raise ValueError("config mode must be exact_small")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    start = time.perf_counter()
    spec = graph_spec_for(config)
    order, t_sites, y_sites = _site_split(spec)
    if spec.num_vertices > STATEVECTOR_QUBIT_CAP:
        raise ValueError("graph exceeds the statevector cap")

    feedback = 0
    tally = {}
    t_kets = {}
    if config.skip_distillation:
        for v in t_sites:
            ket = _KET_T
            if config.eps_T and rng.random() < config.eps_T:
                ket = ket * np.array([1.0, -1.0])
            t_kets[v] = ket
    else:
        needed = len(t_sites)
        copies = _auto_copies(config.msd_copies, needed, STATEVECTOR_ROUTING_CAP)
        if config.architecture == "3d":
            # Stage 1: distill and route the phase states the T-bank consumes.
            y_needed = copies
            y_copies = config.y_copies or (y_needed + EXTRA_COPY_HEADROOM)
            y_flags, y_flips = _distill_bank(
                seven_to_one_protocol(), config.eps_Y, y_copies, rng
            )
            _, routed_y_flips, y_plan_id, y_successes = _route_bank(
                y_flags, y_flips, y_needed, "tableau_y", rng, "phase-state"
            )
            feedback += 1
            tally.update(
                y_msd_copies=y_copies,
                y_msd_successes=y_successes,
                y_msd_needed=y_needed,
                y_msd_flips=sum(routed_y_flips),
                y_routing_plan_id=y_plan_id,
            )
        if needed:
            flags, flips = _distill_bank(
                fifteen_to_one_protocol(), config.eps_T, copies, rng
            )
            routed, routed_flips, plan_id, successes = _route_bank(
                flags, flips, needed, "statevector_t", rng, "magic-state"
            )
            feedback += 1
            tally.update(
                msd_copies=copies,
                msd_successes=successes,
                msd_needed=needed,
                msd_flips=sum(routed_flips),
                routing_plan_id=plan_id,
            )
            for v, ket in zip(t_sites, routed):
                t_kets[v] = ket

    factors = []
    for v in order:
        if v in t_kets:
            factors.append(t_kets[v])
        elif spec.roles[v] is XY_PI_2:
            ket = _KET_Y
            if config.eps_Y and rng.random() < config.eps_Y:
                ket = ket * np.array([1.0, -1.0])
            factors.append(ket)
        else:
            factors.append(_KET_PLUS)
    psi = product_state(factors)
    V = len(order)
    index = {v: i for i, v in enumerate(order)}
    for u, v in spec.edges:
        psi = apply_cz(psi, index[u], index[v], V)
    for v in order:
        if not spec.roles[v].is_output:
            psi = apply_1q(psi, _H, index[v], V)
    draw = int(sample_indices(born_probs(psi), 1, rng)[0])
    true_bits = [(draw >> (V - 1 - i)) & 1 for i in range(V)]

    recorded, failures = _readout_bits(true_bits, config.distance, config.readout_p, rng)
    s_bits = "".join(
        str(recorded[index[v]]) for v in order if not spec.roles[v].is_output
    )
    x_bits = "".join(str(recorded[index[v]]) for v in order if spec.roles[v].is_output)
    return RunRecord(
        mode="exact_small",
        architecture=config.architecture,
        s_bits=s_bits,
        x_bits=x_bits,
        decoded_bits=V,
        decode_failures=failures,
        feedback_layers=feedback,
        elapsed_s=time.perf_counter() - start,
        **tally,
    )


def run_exact_many(config: PipelineConfig, runs: int, rng=None):
    """Repeated exact runs; returns (empirical distribution, records, shortfalls).

    Runs aborted by InsufficientSuccesses are counted separately, so the
    empirical distribution is conditional on the distillation banks meeting
    their targets, and the shortfall rate is reported instead of hidden.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    spec = graph_spec_for(config)
    s_len = len(spec.measured_vertices())
    x_len = len(spec.output_vertices())
    table = np.zeros((2**s_len, 2**x_len))
    records = []
    shortfalls = 0
    for _ in range(runs):
        try:
            record = run_exact_small(config, rng)
        except InsufficientSuccesses:
            shortfalls += 1
            continue
        records.append(record)
        si = int(record.s_bits, 2) if record.s_bits else 0
        xi = int(record.x_bits, 2) if record.x_bits else 0
        table[si, xi] += 1.0
    if not records:
        raise InsufficientSuccesses(0, 1, runs, "every-run")
    table /= len(records)
    return OutcomeDistribution(s_len, x_len, table), records, shortfalls


def run_error_model(config: PipelineConfig, shots: int, rng=None) -> ErrorModelResult:
    """Exact sampling with injected decode failures and magic dephasing.

    Each shot draws an ideal outcome, then (a) dephases each pi/4 input with
    probability eps_out, which commutes through the entangling layer and
    lands as a flip of that vertex's recorded bit, and (b) applies the decode
    failure model to every logical bit: independent flips at p_f, or, under
    flip_model="union", a whole-readout scramble at rate min(1, #bits * p_f).
    """
    if config.mode != "error_model":
        raise ValueError("config mode must be error_model")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    spec = graph_spec_for(config)
    ideal = exact_distribution(spec)
    order, t_sites, _ = _site_split(spec)
    s_len, x_len = ideal.s_length, ideal.x_length
    V = s_len + x_len

    measured = [v for v in order if not spec.roles[v].is_output]
    t_s_positions = [measured.index(v) for v in t_sites]

    flat = ideal.table.reshape(-1)
    draws = sample_indices(flat, shots, rng)
    s_int = (draws >> x_len).astype(np.int64)
    x_int = (draws & ((1 << x_len) - 1)).astype(np.int64)

    if config.eps_out and t_s_positions:
        dephase = rng.random((shots, len(t_s_positions))) < config.eps_out
        for j, pos in enumerate(t_s_positions):
            s_int ^= dephase[:, j].astype(np.int64) << (s_len - 1 - pos)

    if config.p_f:
        if config.flip_model == "independent":
            flips = rng.random((shots, V)) < config.p_f
            for pos in range(s_len):
                s_int ^= flips[:, pos].astype(np.int64) << (s_len - 1 - pos)
            for pos in range(x_len):
                x_int ^= flips[:, s_len + pos].astype(np.int64) << (x_len - 1 - pos)
        else:
            scramble = rng.random(shots) < min(1.0, V * config.p_f)
            if scramble.any():
                count = int(scramble.sum())
                s_int[scramble] = rng.integers(0, 2**s_len, size=count)
                x_int[scramble] = rng.integers(0, 2**x_len, size=count)

    table = np.zeros_like(ideal.table)
    np.add.at(table, (s_int, x_int), 1.0 / shots)
    empirical = OutcomeDistribution(s_len, x_len, table)

    feedback = 0 if config.skip_distillation else (1 if config.architecture == "4d" else 2)
    records = tuple(
        RunRecord(
            mode="error_model",
            architecture=config.architecture,
            s_bits=format(int(s_int[i]), f"0{s_len}b") if s_len else "",
            x_bits=format(int(x_int[i]), f"0{x_len}b") if x_len else "",
            feedback_layers=feedback,
        )
        for i in range(min(shots, 8))
    )
    return ErrorModelResult(
        distribution=empirical,
        ideal=ideal,
        shots=shots,
        l1_to_ideal=l1_distance(empirical, ideal),
        records=records,
    )


def sampling_envelope(num_outcome_bits: int, shots: int) -> float:
    """Loose l1 sampling-noise allowance: 4 sqrt(2^bits / shots)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return 4.0 * math.sqrt(2.0**num_outcome_bits / shots)


def interaction_audit(records) -> int:
    """Number of quantum-classical feedback layers across a record stream."""
    records = list(records)
    if not records:
        raise ValueError("no records to audit")
    layers = {r.feedback_layers for r in records}
    if len(layers) != 1:
        raise ValueError(f"inconsistent feedback layering: {sorted(layers)}")
    return layers.pop()


def quantum_depth_audit(config: PipelineConfig) -> int:
    """Circuit layers of the assembled schedule (prep + gates + measurement).

    Every stage runs on a fixed entangling schedule (unused slots still take
    their time step), so the count depends on the architecture, gadget, and
    distance but never on n or k. Distillation contributes its encoder depth
    plus an injection layer and a syndrome measurement; each routing fabric
    contributes prep + ROUTING_CZ_LAYERS + measurement; sampling contributes
    prep + SAMPLING_CZ_LAYERS + a basis-change layer + measurement; readout
    adds one measurement layer at distance 1 or the stabilizer-coupling
    rounds plus measurement at distance 3.
    """
    layers = 0
    if not config.skip_distillation:
        t_bank = fifteen_to_one_protocol().concrete_circuit
        layers += t_bank.encoder.depth + 2
        layers += 1 + ROUTING_CZ_LAYERS + 1
        if config.architecture == "3d":
            y_bank = seven_to_one_protocol().concrete_circuit
            layers += y_bank.encoder.depth + 2
            layers += 1 + ROUTING_CZ_LAYERS + 1
    layers += 1 + SAMPLING_CZ_LAYERS + 1 + 1
    if config.distance == 1:
        layers += 1
    else:
        from .surface import build_patch

        patch = build_patch(config.distance)
        layers += max(len(face) for face in patch.z_faces) + 1
    return layers
