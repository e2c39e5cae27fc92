"""Closed-form failure bounds and physical-resource ledgers.

Everything here is exact scalar arithmetic with explicit constants. Resource
reports carry an evaluable formula string next to every number, so a report
can be audited by re-evaluating each string against the echoed parameters and
checking that the stored value comes back bit for bit.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

_EVAL_FUNCS = {
    "log": math.log,
    "log2": math.log2,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "ceil": math.ceil,
}


def evaluate_formula(formula: str, namespace: dict) -> float:
    """Evaluate a report formula string against parameter values.

    Only arithmetic and the functions log, log2, exp, sqrt, ceil are
    available; formulas never see builtins.
    """
    scope = dict(_EVAL_FUNCS)
    scope.update(namespace)
    return eval(formula, {"__builtins__": {}}, scope)


@dataclass(frozen=True)
class ScalingParams:
    """Constant bundle for the resource and failure formulas.

    All asymptotic constants default to 1 so reports state exactly what was
    assumed; nothing hides inside an O(1).
    """

    n: int
    k: float | None = None
    r: float = 4.0
    alpha: float | None = None
    d_total: int = 6
    C: float = 35.0
    d: int = 3
    z: int = 2
    gamma: float = math.log(15.0) / math.log(3.0)
    lam: float = 1.0
    constants_map: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.k is not None and self.k <= 0:
            raise ValueError("k must be positive")
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.d_total < 0:
            raise ValueError("d_total must be non-negative")
        if self.C <= 0 or self.gamma <= 0 or self.lam <= 0:
            raise ValueError("C, gamma, and lam must be positive")
        if self.d < 2:
            raise ValueError("need distillation order d >= 2")
        if self.z < 0:
            raise ValueError("z must be non-negative")
        for name, value in self.constants_map.items():
            if value < 0:
                raise ValueError(f"constant {name!r} must be non-negative")

    @property
    def columns(self) -> float:
        return float(self.n) if self.k is None else float(self.k)

    def constant(self, name: str) -> float:
        return float(self.constants_map.get(name, 1.0))


class L1Bound(NamedTuple):
    exact: float
    linearized: float


class SamplingErrorChain(NamedTuple):
    decode_term: float
    fidelity_term: float
    total: float


class SawBound(NamedTuple):
    exact: float
    coarse: float
    ratio: float


class Backsolve(NamedTuple):
    p: float
    log_p: float


@dataclass(frozen=True)
class ReportEntry:
    name: str
    value: float
    formula: str
    kind: str


@dataclass(frozen=True)
class ResourceReport:
    """Named values plus the formula strings they were computed from."""

    entries: tuple
    params: dict

    def value(self, name: str) -> float:
        for entry in self.entries:
            if entry.name == name:
                return entry.value
        raise KeyError(f"no report entry named {name!r}")

    def echo_consistent(self) -> bool:
        """Re-evaluate every formula string; True iff all values match exactly."""
        namespace = dict(self.params)
        for entry in self.entries:
            if evaluate_formula(entry.formula, namespace) != entry.value:
                return False
            namespace[entry.name] = entry.value
        return True

    def as_dict(self) -> dict:
        return {
            "constants": dict(self.params),
            "entries": [
                {
                    "name": e.name,
                    "value": e.value,
                    "formula": e.formula,
                    "kind": e.kind,
                }
                for e in self.entries
            ],
        }


class _ReportBuilder:
    def __init__(self, params: dict):
        self.params = dict(params)
        self.namespace = dict(params)
        self.entries = []

    def add(self, name: str, formula: str, kind: str) -> float:
        value = evaluate_formula(formula, self.namespace)
        self.entries.append(ReportEntry(name, float(value), formula, kind))
        self.namespace[name] = float(value)
        return float(value)

    def build(self) -> ResourceReport:
        return ResourceReport(entries=tuple(self.entries), params=dict(self.params))


def choose_l(n: float, k: float, r: float, delta: float = 0.0) -> int:
    """Physical block size l = ceil(r ln^2 n) per logical qubit.

    The exponential decay e^{-sqrt(l)} must beat the k*n union bound, so the
    choice is only accepted when sqrt(l) >= (1 + delta) ln(k n); a too-small
    r fails loudly instead of returning a block size that cannot work.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if k <= 0 or r <= 0:
        raise ValueError("k and r must be positive")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    l = math.ceil(r * math.log(n) ** 2)
    needed = (1.0 + delta) * math.log(k * n)
    if math.sqrt(l) < needed:
        raise ValueError(
            f"block size check failed at n={n}: sqrt({l}) = {math.sqrt(l):.6g} "
            f"< {needed:.6g}; increase r"
        )
    return l


def decode_l1_bound(n: float, k: float, l: int, c: float) -> L1Bound:
    """Distribution error from per-logical-qubit decode failures.

    Exact form 2(1 - (1 - e^{-c sqrt(l)})^{k n}) and its union-bound
    linearization 2 k n e^{-c sqrt(l)}; the exact value never exceeds the
    linearized one.
    """
    if c <= 0:
        raise ValueError("decay constant c must be positive")
    if l < 1:
        raise ValueError("need l >= 1")
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    q = math.exp(-c * math.sqrt(l))
    exact = 2.0 * -math.expm1(k * n * math.log1p(-q))
    linearized = 2.0 * k * n * q
    return L1Bound(exact, linearized)


def sampling_l1_chain(
    l: int, c: float, eps_out: float, num_T: float, num_logical: float
) -> SamplingErrorChain:
    """Total-variation chain: decode failures plus distilled-state infidelity.

    The decode term is 2(1 - (1 - e^{-c sqrt(l)})^{num_logical}). The
    infidelity term bounds the trace distance between the ideal state and a
    state built from num_T imperfect magic states, each with infidelity
    eps_out: overlap F = (1 - eps_out)^{num_T} gives 2 sqrt(1 - F^2).
    """
    if c <= 0:
        raise ValueError("decay constant c must be positive")
    if l < 1:
        raise ValueError("need l >= 1")
    if not 0.0 <= eps_out < 1.0:
        raise ValueError("need 0 <= eps_out < 1")
    if num_T < 0 or num_logical < 0:
        raise ValueError("counts must be non-negative")
    q = math.exp(-c * math.sqrt(l))
    if num_logical == 0:
        decode = 0.0
    else:
        decode = 2.0 * -math.expm1(num_logical * math.log1p(-q))
    if num_T == 0 or eps_out == 0.0:
        fidelity = 0.0
    else:
        fidelity = 2.0 * math.sqrt(-math.expm1(2.0 * num_T * math.log1p(-eps_out)))
    return SamplingErrorChain(decode, fidelity, decode + fidelity)


def saw_failure_bound(q: float, lm: int, num_sites: float, lmax: int) -> SawBound:
    """Decoding-failure bound from counting self-avoiding walks.

    Sums num_sites * 6 * 5^(L-1) * (4q)^(L/2) over walk lengths L from lm to
    lmax. Each term is (6/5) * rho^L with rho = sqrt(100 q), so the exact
    value is a finite geometric sum; the coarse companion extends the sum to
    infinity and always dominates.
    """
    if q < 0:
        raise ValueError("q must be non-negative")
    if lm < 1:
        raise ValueError("need lm >= 1")
    if lmax < lm:
        raise ValueError("need lmax >= lm")
    if num_sites < 0:
        raise ValueError("num_sites must be non-negative")
    if 100.0 * q >= 1.0:
        raise ValueError(
            f"walk sum diverges: ratio sqrt(100 q) = {math.sqrt(100.0 * q):.6g} >= 1"
        )
    if q == 0.0:
        return SawBound(0.0, 0.0, 0.0)
    rho = math.sqrt(100.0 * q)
    prefactor = num_sites * (6.0 / 5.0) * rho**lm
    exact = prefactor * (1.0 - rho ** (lmax - lm + 1)) / (1.0 - rho)
    coarse = prefactor / (1.0 - rho)
    return SawBound(exact, coarse, rho)


def lm_for_target(n: float, poly_degree: float) -> int:
    """Minimum walk length that drives the walk bound below 1/n.

    Uses alpha = (poly_degree + 1) / 0.06 and L_m = ceil(alpha ln n), which
    suppresses a num_sites ~ n^poly_degree prefactor with one power of n to
    spare at the 0.0075 operating point.
    """
    if n <= 1:
        raise ValueError("need n > 1")
    if poly_degree < 0:
        raise ValueError("poly_degree must be non-negative")
    alpha = (poly_degree + 1.0) / 0.06
    return math.ceil(alpha * math.log(n))


_BACKSOLVE_MODES = ("power_law", "four_times_power_law")


def threshold_backsolve(
    q_target: float, d_total: int, mode: str = "power_law"
) -> Backsolve:
    """Physical error rate whose pushed-through rate meets q_target.

    Noise pushed through d_total Clifford layers grows as p^(4^-(d+1)), so
    the exact solve is p = q_target^(4^(d+1)) (power_law) or
    p = (q_target / 4)^(4^(d+1)) (four_times_power_law). The magnitudes are
    astronomically small, so log_p is the usable field; p itself usually
    underflows to 0.0.
    """
    if not 0.0 < q_target < 1.0:
        raise ValueError("need 0 < q_target < 1")
    if d_total < 0:
        raise ValueError("d_total must be non-negative")
    if mode not in _BACKSOLVE_MODES:
        raise ValueError(f"mode must be one of {_BACKSOLVE_MODES}")
    exponent = 4.0 ** (d_total + 1)
    base = q_target if mode == "power_law" else q_target / 4.0
    log_p = exponent * math.log(base)
    return Backsolve(math.exp(log_p), log_p)


def crude_rate_estimate(d_total: int) -> float:
    """Crude closed form e^(-4.6 * 4^-(d+1)) for the 0.01 operating point.

    Kept for comparison only: it disagrees wildly with threshold_backsolve
    (the sign of the power of 4 in the exponent is inverted relative to the
    exact solve), and the report shows both so the gap is visible.
    """
    if d_total < 0:
        raise ValueError("d_total must be non-negative")
    return math.exp(-4.6 * 4.0 ** (-(d_total + 1)))


def threshold_report(q_target: float, d_total: int) -> ResourceReport:
    """Side-by-side report of the exact back-solves and the crude estimate."""
    if not 0.0 < q_target < 1.0:
        raise ValueError("need 0 < q_target < 1")
    if d_total < 0:
        raise ValueError("d_total must be non-negative")
    builder = _ReportBuilder({"q_target": q_target, "d_total": float(d_total)})
    builder.add("log_p_power_law", "4**(d_total + 1) * log(q_target)", "bound")
    builder.add("log_p_four_times", "4**(d_total + 1) * log(q_target / 4)", "bound")
    builder.add("crude_estimate", "exp(-4.6 * 4**(-(d_total + 1)))", "bound")
    return builder.build()


def overhead_4d(params: ScalingParams) -> ResourceReport:
    """Physical-qubit ledger for the 4D nearest-neighbor layout.

    Logical blocks: input preparation 2 c1 n^3 ln^2 n, routing ancillas
    cR n^5 ln n, outputs 2 c2 n^2. Each logical qubit costs l physical
    qubits plus prep * l^1.5 for ancilla-assisted preparation, so the grand
    total scales as n^5 ln^4 n.
    """
    builder = _ReportBuilder(
        {
            "n": float(params.n),
            "k": params.columns,
            "r": params.r,
            "c1": params.constant("c1"),
            "cR": params.constant("cR"),
            "c2": params.constant("c2"),
            "prep": params.constant("prep"),
            "c_decay": params.constant("c_decay"),
        }
    )
    builder.add("l", "ceil(r * log(n)**2)", "parameter")
    builder.add("c1_inputs", "2 * c1 * n**3 * log(n)**2", "logical")
    builder.add("cR_ancillas", "cR * n**5 * log(n)", "logical")
    builder.add("c2_outputs", "2 * c2 * n**2", "logical")
    builder.add("logical_total", "c1_inputs + cR_ancillas + c2_outputs", "logical")
    builder.add("per_logical", "l + prep * l**1.5", "physical")
    builder.add("physical_total", "logical_total * per_logical", "physical")
    builder.add("scaling_ratio", "physical_total / (n**5 * log(n)**4)", "ratio")
    builder.add(
        "decode_bound_exact",
        "2 * (1 - (1 - exp(-c_decay * sqrt(l)))**(k * n))",
        "bound",
    )
    builder.add("decode_bound_linear", "2 * k * n * exp(-c_decay * sqrt(l))", "bound")
    return builder.build()


def overhead_3d(params: ScalingParams) -> ResourceReport:
    """Physical-qubit ledger for the 3D nearest-neighbor layout.

    Logical qubits live in defect pairs of lattice cells of side lam, 18
    physical qubits per cell and four cells per logical qubit. The extra
    distillation stage forces k = n^3 columns, adds the c1_prime block and
    the cR_prime routing block; cR_prime (n^11 ln^5 n) dominates the total.
    """
    builder = _ReportBuilder(
        {
            "n": float(params.n),
            "c_lam": params.lam,
            "c1p": params.constant("c1p"),
            "c1": params.constant("c1"),
            "cR": params.constant("cR"),
            "c2": params.constant("c2"),
            "cRp": params.constant("cRp"),
            "cprep": params.constant("cprep"),
        }
    )
    builder.add("lam", "c_lam * ceil(log2(n))", "parameter")
    builder.add("per_logical", "4 * 18 * lam**3", "physical")
    builder.add("k_columns", "n**3", "parameter")
    builder.add("c1_prime", "c1p * n**6 * log(n)**3", "logical")
    builder.add("c1_inner", "2 * c1 * n**5 * log(n)**2", "logical")
    builder.add("cR_inner", "cR * n**9 * log(n)**2", "logical")
    builder.add("c2_outputs", "2 * c2 * n**2", "logical")
    builder.add("cR_prime", "cRp * n**11 * log(n)**5", "logical")
    builder.add(
        "logical_total",
        "c1_prime + c1_inner + cR_inner + c2_outputs + cR_prime",
        "logical",
    )
    builder.add("prepared_total", "cprep * logical_total", "logical")
    builder.add("physical_total", "prepared_total * per_logical", "physical")
    builder.add("cR_prime_share", "cR_prime / logical_total", "ratio")
    return builder.build()
