"""Magic-state distillation planning and small concrete simulations.

Planning covers the layered non-adaptive distillation scheme: the per-layer
infidelity recursion eps <- C * eps^d, layer/copy counts, per-copy qubit
sizes, success-probability lower bounds, and the binomial copy count needed
to guarantee enough successful instances.  The production-scale protocol is
far too large to simulate, so suppression is validated on two small concrete
stand-ins (the 15-to-1 T protocol on the punctured Reed-Muller code and the
7-to-1 Y protocol on the Steane code) run as statevector simulations with
post-selection on trivial syndromes.
"""

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .paulis import CliffordCircuit, CliffordLayer, Gate, PauliString
from .statevec import STATEVECTOR_QUBIT_CAP, apply_1q, project_pauli

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


# ---------------------------------------------------------------------------
# Binary linear algebra for CSS code construction
# ---------------------------------------------------------------------------


def _nullspace_gf2(rows: np.ndarray) -> np.ndarray:
    """Basis of the GF(2) nullspace of a (m, n) binary matrix."""
    m, n = rows.shape
    a = rows.copy() % 2
    pivots = []
    r = 0
    for c in range(n):
        hit = None
        for rr in range(r, m):
            if a[rr, c]:
                hit = rr
                break
        if hit is None:
            continue
        a[[r, hit]] = a[[hit, r]]
        for rr in range(m):
            if rr != r and a[rr, c]:
                a[rr] ^= a[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.uint8)
        v[f] = 1
        for i, c in enumerate(pivots):
            if a[i, f]:
                v[c] = 1
        basis.append(v)
    return np.array(basis, dtype=np.uint8).reshape(len(basis), n)


def _z_type(support: np.ndarray) -> PauliString:
    n = len(support)
    p = PauliString.identity(n)
    for q in np.flatnonzero(support):
        p = p * PauliString.single(n, int(q), "Z")
    return p


def _x_type(support: np.ndarray) -> PauliString:
    n = len(support)
    p = PauliString.identity(n)
    for q in np.flatnonzero(support):
        p = p * PauliString.single(n, int(q), "X")
    return p


def _hamming_checks(bits: int) -> np.ndarray:
    """(bits, 2^bits - 1) matrix whose columns are 1 .. 2^bits - 1."""
    n = 2**bits - 1
    h = np.zeros((bits, n), dtype=np.uint8)
    for col in range(n):
        value = col + 1
        for b in range(bits):
            h[b, col] = (value >> b) & 1
    return h


# ---------------------------------------------------------------------------
# Concrete protocols
# ---------------------------------------------------------------------------


class ConcreteProtocol:
    """Simulable distillation circuit with post-selection.

    The circuit prepares the logical plus state of a CSS code via the
    encoder, consumes one magic input per data qubit through a measurement
    gadget (transversal T or S), and post-selects on every stabilizer
    generator reading +1 (the all-zeros syndrome string).
    """

    def __init__(self, name, num_qubits, x_generators, z_generators, magic_kind, encoder):
        self.name = name
        self.num_qubits = num_qubits
        self.x_generators = tuple(x_generators)
        self.z_generators = tuple(z_generators)
        self.magic_slots = tuple(range(num_qubits))
        self.magic_kind = magic_kind
        self.encoder = encoder
        self._prep = None
        self._target = None

    def prep_state(self) -> np.ndarray:
        if self._prep is None:
            self._prep = _run_encoder(self.encoder, self.num_qubits)
        return self._prep

    def ideal_target(self) -> np.ndarray:
        """Output of a corruption-free run: transversal phases on the prep."""
        if self._target is None:
            psi = self.prep_state().copy()
            angle = math.pi / 4 if self.magic_kind == "T" else math.pi / 2
            counts = np.bitwise_count(np.arange(len(psi), dtype=np.uint64))
            psi = psi * np.exp(1j * angle * counts.astype(np.float64))
            self._target = psi
        return self._target


def _encoder_circuit(basis: np.ndarray) -> CliffordCircuit:
    """Coset-state encoder: H on pivot qubits, then CNOT fans per basis row.

    basis rows must be in reduced echelon form; the prepared state is the
    uniform superposition over their span.
    """
    n = basis.shape[1]
    layers = [CliffordLayer(n, [Gate("H", (int(np.flatnonzero(row)[0]),)) for row in basis])]
    for row in basis:
        support = np.flatnonzero(row)
        pivot = int(support[0])
        for q in support[1:]:
            layers.append(CliffordLayer(n, [Gate("CNOT", (pivot, int(q)))]))
    return CliffordCircuit(n, layers)


def _reduced_basis(rows: np.ndarray) -> np.ndarray:
    m, n = rows.shape
    a = rows.copy() % 2
    r = 0
    for c in range(n):
        hit = None
        for rr in range(r, m):
            if a[rr, c]:
                hit = rr
                break
        if hit is None:
            continue
        a[[r, hit]] = a[[hit, r]]
        for rr in range(m):
            if rr != r and a[rr, c]:
                a[rr] ^= a[r]
        r += 1
    return a[:r]


def _run_encoder(circuit: CliffordCircuit, n: int) -> np.ndarray:
    from .statevec import apply_cz

    psi = np.zeros(2**n, dtype=np.complex128)
    psi[0] = 1.0
    for layer in circuit.layers:
        for gate in layer.gates:
            if gate.name == "H":
                psi = apply_1q(psi, H_MATRIX, gate.qubits[0], n)
            elif gate.name == "CNOT":
                ctrl, tgt = gate.qubits
                psi = apply_1q(psi, H_MATRIX, tgt, n)
                psi = apply_cz(psi, ctrl, tgt, n)
                psi = apply_1q(psi, H_MATRIX, tgt, n)
            else:
                raise ValueError(f"encoder uses unsupported gate {gate.name}")
    return psi


def _css_protocol(name, checks, magic_kind) -> ConcreteProtocol:
    bits, n = checks.shape
    x_gens = tuple(_x_type(checks[b]) for b in range(bits))
    stacked = np.vstack([checks, np.ones((1, n), dtype=np.uint8)])
    z_gens = tuple(_z_type(row) for row in _nullspace_gf2(stacked))
    encoder = _encoder_circuit(_reduced_basis(stacked))
    return ConcreteProtocol(name, n, x_gens, z_gens, magic_kind, encoder)


@functools.cache
def fifteen_to_one_circuit() -> ConcreteProtocol:
    """15-to-1 T distillation on the [[15, 1, 3]] punctured Reed-Muller code."""
    return _css_protocol("rm15_t", _hamming_checks(4), "T")


@functools.cache
def seven_to_one_circuit() -> ConcreteProtocol:
    """7-to-1 Y distillation on the [[7, 1, 3]] Steane code."""
    return _css_protocol("steane7_y", _hamming_checks(3), "Y")


# ---------------------------------------------------------------------------
# Protocol specs and plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MsdProtocolSpec:
    """Distillation family parameters; concrete circuit optional.

    For the parametric T-state family the input/output ratio per round is
    about d; concrete stand-ins trade that ratio for simulability and are
    exempt from the check.
    """

    name: str
    d: int
    inputs_per_round: int
    outputs_per_round: int
    gamma: float
    C: float
    concrete_circuit: Optional[ConcreteProtocol] = field(default=None, compare=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("block parameter d must be >= 2")
        if self.C <= 0 or self.gamma <= 0:
            raise ValueError("C and gamma must be positive")
        if self.inputs_per_round < 1 or self.outputs_per_round < 1:
            raise ValueError("round sizes must be >= 1")
        if self.concrete_circuit is None:
            ratio = self.inputs_per_round / self.outputs_per_round
            if not self.d / 2 <= ratio <= 2 * self.d:
                raise ValueError("parametric T protocol needs inputs/outputs ~ d")


def parametric_t_protocol(d: int, C: float = 1.0, gamma: float = 1.0) -> MsdProtocolSpec:
    return MsdProtocolSpec("parametric_t", d, d * d, d, gamma, C)


@functools.cache
def fifteen_to_one_protocol() -> MsdProtocolSpec:
    return MsdProtocolSpec(
        "rm15_t", 3, 15, 1, math.log(15) / math.log(3), 35.0, fifteen_to_one_circuit()
    )


@functools.cache
def seven_to_one_protocol() -> MsdProtocolSpec:
    return MsdProtocolSpec(
        "steane7_y", 3, 7, 1, math.log(7) / math.log(3), 7.0, seven_to_one_circuit()
    )


@dataclass
class ZMsdPlan:
    """Layered distillation plan: layer 1 holds N copies, layer z holds one."""

    d: int
    C: float
    z: int
    N: int
    copies_per_layer: tuple
    n_c: int
    n_T: int
    n_NMSD: int
    total_graph_qubits: int
    eps_in: float
    eps_out: float
    M: Optional[int] = None
    target_successes: Optional[int] = None

    def __post_init__(self):
        if self.z < 1:
            raise ValueError("plan needs at least one layer")
        if self.N != self.d ** (self.z - 1):
            raise ValueError("N must equal d^(z-1)")
        expected = tuple(self.N // self.d**i for i in range(self.z))
        if self.copies_per_layer != expected or expected[-1] != 1:
            raise ValueError("copies_per_layer must be (N, N/d, ..., 1)")
        closed = closed_form_epsilon(self.eps_in, self.d, self.z, self.C)
        if not math.isclose(self.eps_out, closed, rel_tol=1e-9):
            raise ValueError("eps_out inconsistent with the recursion")


def epsilon_recursion(eps: float, d: int, z: int, C: float) -> float:
    """Iterate eps <- C * eps^d for z layers inside the suppression regime."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if d < 2 or C <= 0 or z < 0:
        raise ValueError("need d >= 2, C > 0, z >= 0")
    value = eps
    for _ in range(z):
        step = C * value**d
        if step >= 1:
            raise ValueError("C * eps^d >= 1: outside the suppression regime")
        value = step
    return value


def closed_form_epsilon(eps: float, d: int, z: int, C: float) -> float:
    """C^((d^z - 1)/(d - 1)) * eps^(d^z), the closed form of the recursion."""
    if z == 0:
        return eps
    exponent = (d**z - 1) // (d - 1)
    return C**exponent * eps ** (d**z)


def _log_closed_form(eps, d, z, C):
    return ((d**z - 1) // (d - 1)) * math.log(C) + d**z * math.log(eps)


def calibrated_input_infidelity(gamma: float, beta: float, C: float, d: int) -> float:
    """Input infidelity 2^(-gamma*beta) / C^(1/d).

    Feeding this into the recursion yields eps_out = 2^(-beta * d^(z-1)), so
    a target of n^(-beta) forces d^(z-1) = log2(n) logical qubits per
    instance and a success bound of exactly 1/n.
    """
    return 2.0 ** (-gamma * beta) / C ** (1.0 / d)


def plan_zmsd(
    eps: float,
    target_eps_out: float,
    d: int,
    n: Optional[int] = None,
    *,
    C: float = 1.0,
    z_cap: int = 64,
    fail_budget: float = 1e-9,
) -> ZMsdPlan:
    """Smallest-z layered plan reaching the target output infidelity.

    Minimality is decided in log space so exactly-on-target calibrated
    inputs round correctly.  With n given, the plan also sizes the parallel
    batch: target_successes = n^2 instances at the 2^(-n_NMSD) success
    bound within the failure budget.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < target_eps_out < eps:
        raise ValueError("target must be below the input infidelity")
    if C * eps**d >= 1:
        raise ValueError("outside the suppression regime")
    log_target = math.log(target_eps_out)
    z = None
    for cand in range(1, z_cap + 1):
        # Guard layer validity (epsilon_recursion raises when a layer
        # escapes the regime, which also means deeper z cannot help).
        epsilon_recursion(eps, d, cand, C)
        if _log_closed_form(eps, d, cand, C) <= log_target + 1e-9:
            z = cand
            break
    if z is None:
        raise ValueError(f"target unreachable within {z_cap} layers")
    N = d ** (z - 1)
    copies = tuple(N // d**i for i in range(z))
    n_c = math.ceil((d * d * math.log(d)) * (d * d) * d)
    n_T = math.ceil((d * d * math.log(d)) * (d * d) * d * d)
    n_NMSD = N
    total = sum(copies) * n_T
    M = None
    target_successes = None
    if n is not None:
        target_successes = n * n
        M = copies_for_target(2.0**-n_NMSD, target_successes, fail_budget)
    return ZMsdPlan(
        d=d,
        C=C,
        z=z,
        N=N,
        copies_per_layer=copies,
        n_c=n_c,
        n_T=n_T,
        n_NMSD=n_NMSD,
        total_graph_qubits=total,
        eps_in=eps,
        eps_out=epsilon_recursion(eps, d, z, C),
        M=M,
        target_successes=target_successes,
    )


def success_probability_bound(plan, n: Optional[int] = None) -> float:
    """Pessimistic per-instance success bound 2^(-n_NMSD).

    Only the all-zeros decoded string counts as success; with the calibrated
    n_NMSD = log2(n) this is exactly 1/n.  Accepts a plan or a bare count.
    """
    n_nmsd = getattr(plan, "n_NMSD", plan)
    if n_nmsd < 0:
        raise ValueError("n_NMSD must be >= 0")
    return 2.0 ** (-n_nmsd)


def copies_for_target(p_single: float, target: int, fail_budget: float) -> int:
    """Smallest M with Pr[Binomial(M, p_single) < target] <= fail_budget."""
    if not 0 < p_single <= 1:
        raise ValueError("p_single must lie in (0, 1]")
    if target < 1:
        raise ValueError("target must be >= 1")
    if not 0 < fail_budget < 1:
        raise ValueError("fail budget must lie in (0, 1)")
    log_budget = math.log(fail_budget)

    def ok(m):
        return stats.binom.logcdf(target - 1, m, p_single) <= log_budget

    lo = target
    if ok(lo):
        return lo
    hi = max(2 * target, math.ceil(target / p_single))
    while not ok(hi):
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def analytic_fail_bound(p_single: float, target: int, M: int) -> float:
    """Counting bound (target+1) * C(M, target) * (1-p)^M on the failure tail.

    Valid for p_single <= 1/2 and M > 2*target; always dominates the exact
    binomial tail there.
    """
    if p_single > 0.5:
        raise ValueError("bound requires p_single <= 1/2")
    if M <= 2 * target:
        raise ValueError("bound requires M > 2 * target")
    log_value = (
        math.log(target + 1)
        + math.lgamma(M + 1)
        - math.lgamma(target + 1)
        - math.lgamma(M - target + 1)
        + M * math.log1p(-p_single)
    )
    return min(1.0, math.exp(min(log_value, 0.0)))


def n_noisy_inputs(target_eps_out: float, gamma: float) -> int:
    """ceil(log(1/target)^gamma): noisy inputs to reach a target infidelity."""
    if not 0 < target_eps_out < 1:
        raise ValueError("target must lie in (0, 1)")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return math.ceil(math.log(1.0 / target_eps_out) ** gamma)


@dataclass(frozen=True)
class YStateRequirements:
    n_y: int
    p_s_bound: float
    corrected_p_bound: float
    n_y_below_log2n: bool


def y_state_requirements(
    n: int, target_eps_prime: float, gamma: float = 1.77
) -> YStateRequirements:
    """Ancilla count and corrected success bounds for Y-state distillation.

    N_Y = ceil(log^gamma(1/target)) logical ancillas, success bound 2^(-N_Y),
    and the corrected per-instance bound (1/n) * (1 - target)^ceil(log2 n).
    The flag records whether N_Y < log2(n) holds at this n.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    n_y = n_noisy_inputs(target_eps_prime, gamma)
    p_s = 2.0**-n_y
    corrected = (1.0 / n) * (1.0 - target_eps_prime) ** math.ceil(math.log2(n))
    return YStateRequirements(n_y, p_s, corrected, n_y < math.log2(n))


# ---------------------------------------------------------------------------
# Concrete simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistillOutcome:
    """Aggregate of a post-selected distillation run."""

    shots: int
    accepted: float
    accept_rate: float
    output_infidelity: float
    infidelity_ci: float

    def __post_init__(self):
        if not math.isnan(self.output_infidelity):
            if not -1e-12 <= self.output_infidelity <= 1 + 1e-12:
                raise ValueError("infidelity must lie in [0, 1]")


_MAGIC_AMPLITUDES = {
    "T": np.array([1.0, np.exp(1j * math.pi / 4)]) / math.sqrt(2),
    "Y": np.array([1.0, 1.0j]) / math.sqrt(2),
}
_PAULI_MATRICES = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_CORRECTIONS = {
    "T": np.diag([1.0, 1.0j]),  # S fixes the m=1 branch of the T gadget
    "Y": np.diag([1.0, -1.0]),  # Z fixes the m=1 branch of the S gadget
}


def _ancilla_amplitudes(kind: str, corruption: Optional[str]) -> np.ndarray:
    c = _MAGIC_AMPLITUDES[kind]
    if corruption is None:
        return c
    return _PAULI_MATRICES[corruption] @ c


def _qubit_zero_weight(psi: np.ndarray, qubit: int, n: int) -> float:
    cube = psi.reshape(2**qubit, 2, 2 ** (n - qubit - 1))
    return float(np.sum(np.abs(cube[:, 0, :]) ** 2))


def _apply_diag(psi: np.ndarray, qubit: int, n: int, d0: complex, d1: complex):
    cube = psi.reshape(2**qubit, 2, 2 ** (n - qubit - 1))
    cube[:, 0, :] *= d0
    cube[:, 1, :] *= d1


def _run_once(cp: ConcreteProtocol, corruption: dict, rng) -> tuple:
    """One trajectory; returns (accepted, infidelity-if-accepted-else-0)."""
    n = cp.num_qubits
    psi = cp.prep_state().copy()
    for slot in cp.magic_slots:
        c = _ancilla_amplitudes(cp.magic_kind, corruption.get(slot))
        w0 = _qubit_zero_weight(psi, slot, n)
        p0 = abs(c[0]) ** 2 * w0 + abs(c[1]) ** 2 * (1.0 - w0)
        if rng.random() < p0:
            _apply_diag(psi, slot, n, c[0], c[1])
            psi /= math.sqrt(p0)
        else:
            _apply_diag(psi, slot, n, c[1], c[0])
            psi /= math.sqrt(max(1.0 - p0, 1e-300))
            corr = _CORRECTIONS[cp.magic_kind]
            _apply_diag(psi, slot, n, corr[0, 0], corr[1, 1])
    for generator in cp.x_generators + cp.z_generators:
        projected, prob = project_pauli(psi, generator, 0)
        if rng.random() >= prob:
            return False, 0.0
        psi = projected / math.sqrt(prob)
    overlap = np.vdot(cp.ideal_target(), psi)
    return True, max(0.0, 1.0 - abs(overlap) ** 2)


def _sample_corruption(cp, weight, rng, noise):
    slots = rng.choice(len(cp.magic_slots), size=weight, replace=False)
    if noise == "dephasing":
        letters = ["Z"] * weight
    else:
        letters = [("X", "Y", "Z")[i] for i in rng.integers(0, 3, size=weight)]
    return {int(s): letter for s, letter in zip(slots, letters)}


def simulate_distillation(
    protocol: MsdProtocolSpec,
    eps: float,
    shots: int,
    rng: np.random.Generator,
    noise: str = "uniform_pauli",
) -> DistillOutcome:
    """Post-selected distillation estimate, stratified by corruption weight.

    Each magic input is independently corrupted with probability eps (the
    corruption drawn per the noise model: uniform over X, Y, Z, or pure
    dephasing).  Shots are stratified over the number of corrupted inputs,
    with the exact binomial weight per stratum, so the rare heavy patterns
    that dominate the output infidelity are sampled at full resolution.
    Acceptance and infidelity estimates remain unbiased for the i.i.d. model.
    """
    cp = protocol.concrete_circuit
    if cp is None:
        raise ValueError("protocol has no concrete circuit")
    if cp.num_qubits > STATEVECTOR_QUBIT_CAP:
        raise ValueError("circuit exceeds the statevector cap")
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if noise not in ("uniform_pauli", "dephasing"):
        raise ValueError("unknown noise model")

    n_inputs = len(cp.magic_slots)
    pmf = stats.binom.pmf(np.arange(n_inputs + 1), n_inputs, eps)

    # Stratum 0 is deterministic: run it once.
    accept0, infid0 = _run_once(cp, {}, rng)
    strata = [(0, pmf[0], [(accept0, infid0)])]

    heavy = [w for w in range(1, min(3, n_inputs) + 1) if pmf[w] > 0.0]
    tail_prob = float(pmf[min(3, n_inputs) + 1:].sum())
    buckets = list(heavy) + (["tail"] if tail_prob > 1e-300 else [])
    if buckets:
        per = max(1, shots // len(buckets))
        tail_weights = pmf[min(3, n_inputs) + 1:]
        for bucket in buckets:
            rows = []
            for _ in range(per):
                if bucket == "tail":
                    w = int(rng.choice(np.arange(min(3, n_inputs) + 1, n_inputs + 1),
                                       p=tail_weights / tail_prob))
                else:
                    w = bucket
                rows.append(_run_once(cp, _sample_corruption(cp, w, rng, noise), rng))
            prob = pmf[bucket] if bucket != "tail" else tail_prob
            strata.append((bucket, prob, rows))

    accept_mean = 0.0
    accept_var = 0.0
    num_mean = 0.0
    num_var = 0.0
    total_runs = 0
    for _, prob, rows in strata:
        a = np.array([1.0 if acc else 0.0 for acc, _ in rows])
        f = np.array([inf if acc else 0.0 for acc, inf in rows])
        total_runs += len(rows)
        accept_mean += prob * a.mean()
        num_mean += prob * (a * f).mean()
        if len(rows) > 1:
            accept_var += prob**2 * a.var(ddof=1) / len(rows)
            num_var += prob**2 * (a * f).var(ddof=1) / len(rows)

    if accept_mean <= 0.0:
        return DistillOutcome(total_runs, 0.0, 0.0, math.nan, math.inf)
    infidelity = num_mean / accept_mean
    rel = 0.0
    if num_mean > 0:
        rel += num_var / num_mean**2
    rel += accept_var / accept_mean**2
    ci = 1.959964 * infidelity * math.sqrt(rel) if num_mean > 0 else 1.959964 * math.sqrt(
        num_var
    ) / accept_mean
    return DistillOutcome(
        shots=total_runs,
        accepted=accept_mean * total_runs,
        accept_rate=accept_mean,
        output_infidelity=infidelity,
        infidelity_ci=ci,
    )


def distill_once(
    protocol: MsdProtocolSpec,
    eps: float,
    rng: np.random.Generator,
    noise: str = "dephasing",
) -> tuple:
    """One unstratified trajectory of a concrete distillation copy.

    Corrupts each magic input independently with probability eps, runs the
    circuit, and post-selects. Returns (accepted, output_infidelity); under
    dephasing the accepted output is pure, so the infidelity is exactly 0.0
    (clean) or 1.0 (a residual phase flip on the distilled state).
    """
    cp = protocol.concrete_circuit
    if cp is None:
        raise ValueError("protocol has no concrete circuit")
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")
    if noise not in ("uniform_pauli", "dephasing"):
        raise ValueError("unknown noise model")
    weight = int(rng.binomial(len(cp.magic_slots), eps))
    corruption = _sample_corruption(cp, weight, rng, noise) if weight else {}
    return _run_once(cp, corruption, rng)


def infidelity_sweep(protocol, eps_values, shots, rng, noise="uniform_pauli"):
    """Rows of (eps, shots, accept_rate, infidelity, ci) over an eps grid."""
    rows = []
    for eps in eps_values:
        out = simulate_distillation(protocol, eps, shots, rng, noise=noise)
        rows.append((eps, out.shots, out.accept_rate, out.output_infidelity, out.infidelity_ci))
    return rows


def fitted_suppression_slope(rows) -> float:
    """Log-log slope of infidelity vs eps from sweep rows."""
    pts = [(e, inf) for e, _, _, inf, _ in rows if inf > 0 and not math.isnan(inf)]
    if len(pts) < 2:
        raise ValueError("need at least two positive infidelity points")
    xs = np.log([e for e, _ in pts])
    ys = np.log([i for _, i in pts])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)
