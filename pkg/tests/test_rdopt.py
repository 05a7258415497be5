import numpy as np
import pytest
from hypothesis import given, strategies as st

from qratedist.channels import (
    KrausChannel,
    choi_distance,
    constant_channel,
    discard_channel,
    identity_channel,
    tensor_channels,
    validate,
)
from qratedist.entropics import coherent_information, entanglement_distortion
from qratedist.exceptions import CoverageError, DimensionError
from qratedist.qmath import as_density, maximally_mixed
from qratedist.rdopt import (
    ConvexityReport,
    OptimizerConfig,
    RDCode,
    check_monotone_convex,
    default_grid,
    evaluate_code,
    lower_convex_envelope,
    min_coherent_info_at_D,
    rd_curve,
    search_codes,
    verify_theorem_chain,
)

from conftest import ginibre_state, random_kraus

HALF = maximally_mixed(2)
FAST = OptimizerConfig(restarts=2, max_iterations=150)


def _constant_code(omega=np.eye(2) / 2):
    return RDCode(1, 1, discard_channel(2), constant_channel(omega, 1))


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(step_size=0)
    with pytest.raises(ValueError):
        OptimizerConfig(env_dim=0)


def test_default_grid():
    g = default_grid(2)
    assert g.size == 9 and g[0] == 0.0 and g[-1] == pytest.approx(0.75)


def _near_identity_search(samples, seed):
    """Min I_c over random near-identity qubit channels with distortion <= 1e-6 (rho = I/2)."""
    rng = np.random.default_rng(seed)
    eps = 10 ** rng.uniform(-5, -2.5, size=samples)
    base = np.zeros((4, 2), dtype=complex)
    base[0, 0] = base[2, 1] = 1.0  # |i> -> |i>|0>, out (x) env
    g = rng.normal(size=(samples, 4, 2)) + 1j * rng.normal(size=(samples, 4, 2))
    u, _, vh = np.linalg.svd(base + eps[:, None, None] * g, full_matrices=False)
    v = u @ vh
    kraus = v.reshape(samples, 2, 2, 2).transpose(0, 2, 1, 3)  # [s, k, out, in]
    rho = np.eye(2) / 2
    fid = np.sum(np.abs(np.einsum("skii->sk", kraus) / 2) ** 2, axis=1)
    out = np.einsum("skai,ij,skbj->sab", kraus, rho, kraus.conj())
    w = np.einsum("skai,ij,slaj->skl", kraus, rho, kraus.conj())

    def ent(m):
        lam = np.clip(np.linalg.eigvalsh(m), 1e-300, None)
        return -np.sum(np.where(lam > 1e-12, lam * np.log2(lam), 0.0), axis=1)

    ic = ent(out) - ent(w)
    feasible = (1 - fid) <= 1e-6
    return feasible.sum(), ic[feasible].min()


def test_rate_at_zero_distortion():
    pt = min_coherent_info_at_D(HALF, 0.0, FAST)
    assert pt.rate_estimate == pytest.approx(1.0, abs=2e-3)
    assert pt.witness_distortion <= 1e-9
    assert choi_distance(pt.witness_channel, identity_channel(2)) <= 1e-3 or entanglement_distortion(
        HALF, pt.witness_channel
    ) <= 1e-9
    count, best = _near_identity_search(100_000, 7)
    assert count > 1000
    assert best >= 1 - 1e-3


def test_rate_at_full_depolarizing_distortion():
    pt = min_coherent_info_at_D(HALF, 0.75, FAST)
    assert pt.rate_estimate <= -1.0 + 2e-3
    assert pt.witness_distortion <= 0.75 + 1e-6
    assert validate(pt.witness_channel).passed


def test_rate_is_achieved_by_witness():
    rho = as_density(ginibre_state(2, np.random.default_rng(3)))
    pt = min_coherent_info_at_D(rho, 0.3, FAST)
    assert coherent_information(rho, pt.witness_channel) == pytest.approx(pt.rate_estimate, abs=1e-9)
    assert entanglement_distortion(rho, pt.witness_channel) <= 0.3 + 1e-6
    # no worse than either explicit candidate
    assert pt.rate_estimate <= coherent_information(rho, identity_channel(2)) + 1e-12


def test_monotone_beyond_last_grid_value():
    cfg = FAST
    r75 = min_coherent_info_at_D(HALF, 0.75, cfg)
    r1 = min_coherent_info_at_D(HALF, 1.0, cfg, warm_start=r75.witness_channel)
    assert r1.rate_estimate <= r75.rate_estimate + 1e-12


def test_point_is_deterministic():
    a = min_coherent_info_at_D(HALF, 0.4, FAST, point_index=2)
    b = min_coherent_info_at_D(HALF, 0.4, FAST, point_index=2)
    assert a.rate_estimate == b.rate_estimate
    assert np.array_equal(a.witness_channel.kraus, b.witness_channel.kraus)


def test_rejects_out_of_range_distortion():
    with pytest.raises(ValueError):
        min_coherent_info_at_D(HALF, -0.1, FAST)


def test_check_monotone_convex_examples():
    x = np.linspace(0, 1, 9)
    y = (1 - x) ** 2
    assert check_monotone_convex((x, y), 1e-9).passed
    bumped = 1 - x  # linear, so the chord through the neighbours is the line itself
    bumped[4] += 0.1
    rep = check_monotone_convex((x, bumped), 1e-9)
    assert not rep.passed
    assert rep.convexity_violation == pytest.approx(0.1, abs=1e-12)
    up = y.copy()
    up[-1] = 0.5
    assert check_monotone_convex((x, up), 1e-3).monotone_violation == pytest.approx(0.5 - y[-2])
    with pytest.raises(ValueError):
        check_monotone_convex((x[:2], y[:2]), 1e-3)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=12))
def test_lower_convex_envelope_properties(ys):
    x = np.linspace(0, 1, len(ys))
    y = np.asarray(ys)
    env = lower_convex_envelope(x, y)
    assert np.all(env <= y + 1e-12)
    assert env[0] == y[0] and env[-1] == y[-1]
    if len(ys) >= 3:
        assert check_monotone_convex((x, env), 1e-9).convexity_violation <= 1e-9
    assert np.allclose(lower_convex_envelope(x, env), env)


def test_curve_shape_and_upper_bound(caplog):
    grid = np.linspace(0, 0.75, 4)
    with caplog.at_level("INFO", logger="qratedist"):
        curve = rd_curve(HALF, grid, FAST)
    assert any("raw curve violations" in r.message for r in caplog.records)
    assert check_monotone_convex(curve, 5e-3).passed
    assert isinstance(check_monotone_convex(curve, 5e-3, use="raw"), ConvexityReport)
    assert np.all(np.diff(curve.raw) <= 1e-12)
    assert curve.upper_bound(0.75) == pytest.approx(curve.envelope[-1])
    assert curve.upper_bound(1.0) == pytest.approx(curve.envelope[-1])
    mid = curve.upper_bound(0.125)
    assert mid == pytest.approx(0.5 * (curve.envelope[0] + curve.envelope[1]))
    assert curve.looseness >= 0
    with pytest.raises(CoverageError):
        rd_curve(HALF, [0.3, 0.5, 0.75], FAST).upper_bound(0.1)


def test_code_examples():
    ident = RDCode(2, 4, identity_channel(4), identity_channel(4))
    ev = evaluate_code(ident, HALF)
    assert ev.rate == 1.0 and ev.distortion == pytest.approx(0.0, abs=1e-12)
    ev = evaluate_code(_constant_code(), HALF)
    assert ev.rate == 0.0 and ev.distortion == pytest.approx(0.75, abs=1e-12)


def test_product_code_matches_single_slot():
    rng = np.random.default_rng(11)
    rho = ginibre_state(2, rng)
    enc = KrausChannel(random_kraus(2, 2, 2, rng))
    dec = KrausChannel(random_kraus(2, 2, 2, rng))
    single = evaluate_code(RDCode(1, 2, enc, dec), rho).distortion
    pair = RDCode(2, 4, tensor_channels(enc, enc), tensor_channels(dec, dec))
    assert evaluate_code(pair, rho).distortion == pytest.approx(single, abs=1e-9)


def test_code_dimension_checks():
    with pytest.raises(DimensionError):
        RDCode(2, 2, identity_channel(3), identity_channel(3))
    with pytest.raises(DimensionError):
        RDCode(1, 3, identity_channel(2), identity_channel(2))
    with pytest.raises(DimensionError):
        evaluate_code(_constant_code(), maximally_mixed(3))


def test_chain_for_constant_code():
    curve = rd_curve(HALF, np.linspace(0, 0.75, 4), FAST)
    rep = verify_theorem_chain(_constant_code(), HALF, curve)
    assert rep.exact_steps_hold
    assert rep.step("13").lhs == 0.0 and rep.step("13").slack == pytest.approx(0.0, abs=1e-12)
    assert rep.distortion == pytest.approx(0.75)
    concl = rep.step("conclusion")
    assert concl.rhs <= -1.0 + 2e-3 and concl.slack > 0.9
    assert concl.status == "consistent"


@pytest.mark.parametrize("n,K", [(1, 2), (2, 2), (2, 3)])
def test_chain_exact_steps_random_codes(n, K):
    rng = np.random.default_rng(n * 10 + K)
    rho = ginibre_state(2, rng)
    code = RDCode(n, K, KrausChannel(random_kraus(2**n, K, 3, rng)), KrausChannel(random_kraus(K, 2**n, 3, rng)))
    curve = rd_curve(rho, np.linspace(0, 0.75, 3), OptimizerConfig(restarts=1, max_iterations=60))
    rep = verify_theorem_chain(code, rho, curve)
    for label in ("13", "14", "15", "16"):
        assert rep.step(label).slack >= -1e-7


def test_search_recovers_identity_when_k_is_full():
    rho = ginibre_state(2, np.random.default_rng(0))
    res = search_codes(rho, 1, 2, FAST)
    assert res.evaluation.distortion <= 1e-6


def test_search_pure_source_single_dimension():
    res = search_codes(np.diag([1.0, 0.0]), 1, 1, FAST)
    assert res.evaluation.distortion <= 1e-6
    assert res.code.rate == 0.0


def test_search_is_deterministic_and_bounded():
    a = search_codes(HALF, 2, 2, FAST)
    b = search_codes(HALF, 2, 2, FAST)
    assert a.restart_distortions == b.restart_distortions
    assert np.array_equal(a.code.encoder.kraus, b.code.encoder.kraus)
    assert a.evaluation.distortion == pytest.approx(min(a.restart_distortions), abs=1e-9)
    # splitting one ideal slot from one constant slot is available
    assert a.evaluation.distortion <= 0.375 + 1e-6


def test_search_validation():
    with pytest.raises(ValueError):
        search_codes(HALF, 0, 1, FAST)


def test_pure_source_curve_is_zero():
    curve = rd_curve(np.diag([1.0, 0.0]), [0.0, 0.25, 0.5, 0.75], FAST)
    assert np.all(curve.raw <= 0 + 2e-3)
    assert curve.raw[0] == pytest.approx(0.0, abs=1e-9)


def test_more_restarts_never_hurt():
    rho = ginibre_state(2, np.random.default_rng(21))
    vals = [
        min_coherent_info_at_D(rho, 0.3, OptimizerConfig(restarts=r, max_iterations=60)).rate_estimate
        for r in (1, 2, 4)
    ]
    assert vals[1] <= vals[0] + 1e-12 and vals[2] <= vals[1] + 1e-12


def test_witness_invariants_across_grid():
    rho = as_density(ginibre_state(2, np.random.default_rng(5)))
    curve = rd_curve(rho, [0.0, 0.2, 0.5], FAST)
    for p in curve.points:
        assert p.witness_distortion <= p.distortion_target + 1e-6
        assert coherent_information(rho, p.witness_channel) == pytest.approx(p.rate_estimate, abs=1e-9)


def test_clamped_for_plot_only_affects_display():
    curve = rd_curve(HALF, [0.0, 0.375, 0.75], FAST)
    assert np.all(curve.clamped_for_plot() >= 0)
    assert curve.envelope[-1] < 0


def test_chain_for_identity_code():
    rho = ginibre_state(2, np.random.default_rng(2))
    curve = rd_curve(rho, [0.0, 0.5], FAST)
    code = RDCode(2, 4, identity_channel(4), identity_channel(4))
    rep = verify_theorem_chain(code, rho, curve)
    s = coherent_information(rho, identity_channel(2))
    assert rep.step("13").slack == pytest.approx(2 * (1 - s), abs=1e-9)
    assert all(st.status in ("holds", "consistent") for st in rep.steps)


def test_search_constant_code_lower_bound():
    res = search_codes(HALF, 1, 1, FAST)
    assert res.evaluation.distortion >= 0.5 - 1e-3
