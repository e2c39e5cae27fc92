"""End-to-end pipeline: exact small-n runs, error-model runs, and audits."""

import dataclasses
import itertools

import numpy as np
import pytest

from ftqs.paulis import NoiseSpec
from ftqs.pipeline import (
    InsufficientSuccesses,
    PipelineConfig,
    RunRecord,
    graph_spec_for,
    interaction_audit,
    quantum_depth_audit,
    run_error_model,
    run_exact_many,
    run_exact_small,
    sampling_envelope,
)
from ftqs.sampler import XY_PI_4, OutcomeDistribution, exact_distribution, l1_distance

SQRT2 = np.sqrt(2.0)


def readout_noise(p_out):
    return NoiseSpec(p_prep=0.0, p_layers=[], p_out=p_out)


def ideal_for(config):
    return exact_distribution(graph_spec_for(config))


def t_flip_table(config):
    """Exact table with the first pi/4 vertex's s-bit flipped."""
    spec = graph_spec_for(config)
    ideal = exact_distribution(spec)
    order = spec.vertex_order()
    measured = [v for v in order if not spec.roles[v].is_output]
    t_sites = [v for v in order if spec.roles[v] is XY_PI_4]
    pos = measured.index(t_sites[0])
    mask = 1 << (ideal.s_length - 1 - pos)
    perm = np.arange(2**ideal.s_length) ^ mask
    return ideal, OutcomeDistribution(ideal.s_length, ideal.x_length, ideal.table[perm, :])


def convolved_flip_table(ideal, p):
    """Exact distribution after independent bit flips at rate p on every bit."""
    s_len, x_len = ideal.s_length, ideal.x_length
    out = np.zeros_like(ideal.table)
    for bits in itertools.product((0, 1), repeat=s_len + x_len):
        weight = np.prod([p if b else 1.0 - p for b in bits])
        es = sum(b << (s_len - 1 - i) for i, b in enumerate(bits[:s_len]))
        ex = sum(b << (x_len - 1 - i) for i, b in enumerate(bits[s_len:]))
        rows = np.arange(2**s_len) ^ es
        cols = np.arange(2**x_len) ^ ex
        out += weight * ideal.table[np.ix_(rows, cols)]
    return OutcomeDistribution(s_len, x_len, out)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def test_config_rejects_bad_values():
    cases = [
        (dict(n=0), "n >= 1"),
        (dict(k=1), "k >= 2"),
        (dict(gadget="ring"), "gadget"),
        (dict(architecture="5d"), "architecture"),
        (dict(mode="approx"), "mode"),
        (dict(distance=2), "distance"),
        (dict(eps_T=0.6), "infidelities"),
        (dict(eps_Y=-0.1), "infidelities"),
        (dict(msd_copies=-1), "non-negative"),
        (dict(flip_model="burst"), "flip_model"),
        (dict(architecture="3d", gadget="brickwork"), "pi2_free"),
        (dict(mode="error_model"), "calibrated"),
        (dict(mode="error_model", p_f=1.5, eps_out=0.0), "p_f"),
        (dict(mode="error_model", p_f=0.0, eps_out=0.0, noise=readout_noise(0.1)), "replaces"),
        (dict(p_f=0.1), "error_model"),
        (dict(eps_out=0.1), "error_model"),
        (dict(noise=NoiseSpec(p_prep=0.1, p_layers=[], p_out=0.0)), "readout flips only"),
        (dict(noise=NoiseSpec(p_prep=0.0, p_layers=[0.2], p_out=0.0)), "readout flips only"),
    ]
    for kwargs, fragment in cases:
        with pytest.raises(ValueError, match=fragment):
            PipelineConfig(**{"n": 1, "k": 2, **kwargs})


def test_config_gadget_resolution():
    assert PipelineConfig(n=1, k=2).resolved_gadget() == "brickwork"
    assert PipelineConfig(n=1, k=2, architecture="3d").resolved_gadget() == "pi2_free"
    assert PipelineConfig(n=1, k=2, gadget="pi2_free").resolved_gadget() == "pi2_free"
    assert PipelineConfig(n=1, k=2).readout_p == 0.0
    assert PipelineConfig(n=1, k=2, noise=readout_noise(0.03)).readout_p == 0.03


def test_graph_spec_sites_match_plan_targets():
    spec = graph_spec_for(PipelineConfig(n=1, k=2))
    assert spec.num_vertices == 2
    record = run_exact_small(PipelineConfig(n=1, k=3), np.random.default_rng(77))
    assert record.msd_needed == 2
    assert record.msd_copies == 4
    assert record.routing_plan_id.startswith("p4m2f")
    assert len(record.s_bits) == 2 and len(record.x_bits) == 1


# ---------------------------------------------------------------------------
# Exact small-n runs
# ---------------------------------------------------------------------------


def test_noiseless_runs_match_exact_distribution():
    config = PipelineConfig(n=1, k=2)
    empirical, records, shortfalls = run_exact_many(config, 400, np.random.default_rng(505))
    assert shortfalls == 0
    assert len(records) == 400
    ideal = ideal_for(config)
    assert l1_distance(empirical, ideal) <= sampling_envelope(2, 400)
    for record in records[:20]:
        assert record.mode == "exact_small"
        assert record.architecture == "4d"
        assert record.feedback_layers == 1
        assert record.msd_successes >= record.msd_needed == 1
        assert record.msd_copies == 4
        assert record.routing_plan_id.startswith("p4m1f")
        assert record.decoded_bits == 2
        assert record.decode_failures == 0
        assert record.elapsed_s > 0.0


def test_distillation_improves_distribution():
    raw_cfg = PipelineConfig(n=1, k=2, eps_T=0.05, skip_distillation=True)
    raw_dist, raw_recs, raw_short = run_exact_many(raw_cfg, 4000, np.random.default_rng(101))
    assert raw_short == 0
    assert raw_recs[0].feedback_layers == 0
    assert raw_recs[0].routing_plan_id is None

    distilled_cfg = PipelineConfig(n=1, k=2, eps_T=0.05)
    dist, recs, shortfalls = run_exact_many(distilled_cfg, 1600, np.random.default_rng(202))
    assert len(recs) + shortfalls == 1600
    assert shortfalls > 0

    ideal = ideal_for(raw_cfg)
    l1_raw = l1_distance(raw_dist, ideal)
    l1_distilled = l1_distance(dist, ideal)
    assert l1_distilled < 0.7 * l1_raw
    # With the arms above the raw run sits near eps_T * sqrt(2) while the
    # distilled run is dominated by sampling noise.
    assert l1_raw > 0.04
    assert l1_distilled < 0.04


def test_distance3_readout_beats_physical():
    noise = readout_noise(0.005)
    ideal = ideal_for(PipelineConfig(n=1, k=2))
    results = {}
    for distance, seed in ((1, 303), (3, 404)):
        cfg = PipelineConfig(n=1, k=2, distance=distance, noise=noise, skip_distillation=True)
        dist, recs, _ = run_exact_many(cfg, 40000, np.random.default_rng(seed))
        results[distance] = (l1_distance(dist, ideal), sum(r.decode_failures for r in recs))
    l1_phys, fails_phys = results[1]
    l1_dec, fails_dec = results[3]
    assert l1_dec < 0.5 * l1_phys
    assert fails_dec < 0.25 * fails_phys
    assert fails_phys > 0


def test_3d_pipeline_runs_both_banks():
    config = PipelineConfig(n=1, k=2, architecture="3d", eps_T=0.01, eps_Y=0.01)
    rng = np.random.default_rng(31)
    records = [run_exact_small(config, rng) for _ in range(6)]
    for record in records:
        assert record.feedback_layers == 2
        assert record.y_msd_copies == 7
        assert record.y_msd_needed == record.msd_copies == 4
        assert record.y_msd_successes >= record.y_msd_needed
        assert record.y_routing_plan_id.startswith("p7m4f")
        assert record.routing_plan_id.startswith("p4m1f")
    assert interaction_audit(records) == 2


def test_simulation_caps_enforced():
    with pytest.raises(ValueError, match="statevector cap"):
        run_exact_small(PipelineConfig(n=5, k=5, skip_distillation=True))
    with pytest.raises(ValueError, match="cap"):
        run_exact_small(PipelineConfig(n=1, k=2, msd_copies=12))


def test_insufficient_successes_accounting():
    config = PipelineConfig(n=1, k=2, eps_T=0.49, msd_copies=1)
    rng = np.random.default_rng(1)
    caught = None
    for _ in range(100):
        try:
            run_exact_small(config, rng)
        except InsufficientSuccesses as err:
            caught = err
            break
    assert caught is not None
    assert caught.successes < caught.needed == 1
    assert caught.copies == 1
    assert caught.stage == "magic-state"
    assert "insufficient magic-state distillation successes" in str(caught)

    dist, records, shortfalls = run_exact_many(config, 30, np.random.default_rng(2))
    assert shortfalls > 0
    assert len(records) + shortfalls == 30
    assert abs(dist.table.sum() - 1.0) < 1e-12

    with pytest.raises(InsufficientSuccesses, match="every-run"):
        run_exact_many(config, 3, np.random.default_rng(0))
    with pytest.raises(ValueError, match="runs"):
        run_exact_many(config, 0)


def test_run_record_validates_tallies():
    with pytest.raises(ValueError, match="too few"):
        RunRecord(
            mode="exact_small",
            architecture="4d",
            s_bits="0",
            x_bits="1",
            msd_needed=1,
            msd_successes=0,
            routing_plan_id="p1m1f1",
        )
    with pytest.raises(ValueError, match="too few"):
        RunRecord(
            mode="exact_small",
            architecture="3d",
            s_bits="0",
            x_bits="1",
            y_msd_needed=2,
            y_msd_successes=1,
            y_routing_plan_id="p2m2f11",
        )
    record = RunRecord(mode="exact_small", architecture="4d", s_bits="0", x_bits="1")
    with pytest.raises(dataclasses.FrozenInstanceError):
        record.s_bits = "1"


def test_exact_runs_reproducible_from_config_seed():
    config = PipelineConfig(n=1, k=2, eps_T=0.02, seed=13)
    first = run_exact_small(config)
    second = run_exact_small(config)
    assert first.s_bits == second.s_bits
    assert first.x_bits == second.x_bits
    assert first.routing_plan_id == second.routing_plan_id
    assert first.msd_successes == second.msd_successes


# ---------------------------------------------------------------------------
# Error-model runs
# ---------------------------------------------------------------------------


def test_error_model_noiseless_within_envelope():
    config = PipelineConfig(n=2, k=2, mode="error_model", p_f=0.0, eps_out=0.0)
    result = run_error_model(config, 100000, np.random.default_rng(808))
    assert result.shots == 100000
    assert result.l1_to_ideal <= sampling_envelope(4, 100000)
    assert np.allclose(result.ideal.table, 1.0 / 16.0)
    assert len(result.records) == 8
    for record in result.records:
        assert record.mode == "error_model"
        assert record.feedback_layers == 1
        assert len(record.s_bits) == 2 and len(record.x_bits) == 2


def test_error_model_reproducible_from_config_seed():
    config = PipelineConfig(n=1, k=2, mode="error_model", p_f=0.02, eps_out=0.01, seed=5)
    first = run_error_model(config, 2000)
    second = run_error_model(config, 2000)
    assert np.array_equal(first.distribution.table, second.distribution.table)
    assert first.l1_to_ideal == second.l1_to_ideal


def test_error_model_decode_flips_within_bound():
    # Four logical bits, each flipped independently at p_f.
    config = PipelineConfig(n=2, k=2, mode="error_model", p_f=0.01, eps_out=0.0)
    result = run_error_model(config, 150000, np.random.default_rng(222))
    bound = 2.0 * (1.0 - (1.0 - 0.01) ** 4)
    assert result.l1_to_ideal <= bound + sampling_envelope(4, 150000)

    # At n=1,k=2 the ideal distribution is not uniform, so the flip channel
    # is visible; the measured distribution must match the exact convolution.
    config = PipelineConfig(n=1, k=2, mode="error_model", p_f=0.03, eps_out=0.0)
    result = run_error_model(config, 150000, np.random.default_rng(555))
    ideal = result.ideal
    convolved = convolved_flip_table(ideal, 0.03)
    exact_l1 = l1_distance(convolved, ideal)
    envelope = sampling_envelope(2, 150000)
    assert exact_l1 == pytest.approx(0.08231, abs=1e-4)
    assert l1_distance(result.distribution, convolved) <= envelope
    assert abs(result.l1_to_ideal - exact_l1) <= envelope
    assert result.l1_to_ideal <= 2.0 * (1.0 - 0.97**2) + envelope
    assert result.l1_to_ideal >= 0.5 * exact_l1


def test_error_model_dephasing_within_bound():
    # Spec-level bound at one distilled input.
    config = PipelineConfig(n=2, k=2, mode="error_model", p_f=0.0, eps_out=1e-3)
    result = run_error_model(config, 150000, np.random.default_rng(606))
    bound = 2.0 * np.sqrt(1.0 - (1.0 - 1e-3) ** 2)
    assert result.l1_to_ideal <= bound + sampling_envelope(4, 150000)

    # Mechanism check: dephasing a pi/4 input flips exactly that vertex's
    # recorded bit, so the exact perturbed table is a one-bit mixture.
    eps = 0.02
    config = PipelineConfig(n=1, k=2, mode="error_model", p_f=0.0, eps_out=eps)
    result = run_error_model(config, 150000, np.random.default_rng(909))
    ideal, flipped = t_flip_table(config)
    assert l1_distance(ideal, flipped) == pytest.approx(SQRT2, abs=1e-12)
    mixture = OutcomeDistribution(
        ideal.s_length,
        ideal.x_length,
        (1.0 - eps) * ideal.table + eps * flipped.table,
    )
    envelope = sampling_envelope(2, 150000)
    assert l1_distance(result.distribution, mixture) <= envelope
    assert abs(result.l1_to_ideal - eps * SQRT2) <= envelope
    assert result.l1_to_ideal >= 0.5 * eps * SQRT2


def test_error_model_union_flip_cap():
    # The union model scrambles the whole readout at rate min(1, bits * p_f).
    p_f = 0.05
    config = PipelineConfig(
        n=1, k=2, mode="error_model", p_f=p_f, eps_out=0.0, flip_model="union"
    )
    result = run_error_model(config, 150000, np.random.default_rng(666))
    ideal = result.ideal
    uniform = OutcomeDistribution(
        ideal.s_length, ideal.x_length, np.full_like(ideal.table, 0.25)
    )
    rate = min(1.0, 2 * p_f)
    mixture = OutcomeDistribution(
        ideal.s_length,
        ideal.x_length,
        (1.0 - rate) * ideal.table + rate * uniform.table,
    )
    envelope = sampling_envelope(2, 150000)
    assert l1_distance(ideal, uniform) == pytest.approx(SQRT2 / 2.0, abs=1e-12)
    assert l1_distance(result.distribution, mixture) <= envelope
    assert result.l1_to_ideal <= 2.0 * rate + envelope
    assert result.l1_to_ideal >= 0.5 * rate * SQRT2 / 2.0


def test_error_model_validates_inputs():
    config = PipelineConfig(n=1, k=2, mode="error_model", p_f=0.0, eps_out=0.0)
    with pytest.raises(ValueError, match="shots"):
        run_error_model(config, 0)
    with pytest.raises(ValueError, match="mode"):
        run_error_model(PipelineConfig(n=1, k=2), 10)
    with pytest.raises(ValueError, match="mode"):
        run_exact_small(config)


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------


def test_interaction_audit_counts_feedback_layers():
    rng = np.random.default_rng(3)
    four_d = [run_exact_small(PipelineConfig(n=1, k=2), rng) for _ in range(3)]
    assert interaction_audit(four_d) == 1
    direct = [
        run_exact_small(PipelineConfig(n=1, k=2, skip_distillation=True), rng)
        for _ in range(3)
    ]
    assert interaction_audit(direct) == 0
    with pytest.raises(ValueError, match="inconsistent"):
        interaction_audit(four_d + direct)
    with pytest.raises(ValueError, match="no records"):
        interaction_audit([])


def test_depth_audit_constant_across_width():
    depths_4d = {
        quantum_depth_audit(PipelineConfig(n=n, k=k))
        for n in (1, 2, 3)
        for k in (2, 3, 4)
    }
    assert len(depths_4d) == 1
    depths_3d = {
        quantum_depth_audit(PipelineConfig(n=n, k=k, architecture="3d"))
        for n in (1, 2, 3)
        for k in (2, 3, 4)
    }
    assert len(depths_3d) == 1
    # Depth constants depend on architecture and code distance, not width.
    assert depths_3d.pop() > depths_4d.pop()
    d1 = quantum_depth_audit(PipelineConfig(n=1, k=2, distance=1))
    d3 = quantum_depth_audit(PipelineConfig(n=1, k=2, distance=3))
    assert d3 > d1 > 10
    direct = quantum_depth_audit(PipelineConfig(n=1, k=2, skip_distillation=True))
    assert direct < d1


def test_sampling_envelope_values():
    assert sampling_envelope(2, 400) == pytest.approx(0.4, abs=1e-15)
    assert sampling_envelope(4, 100) == 2.0 * sampling_envelope(4, 400)
    with pytest.raises(ValueError, match="shots"):
        sampling_envelope(2, 0)
