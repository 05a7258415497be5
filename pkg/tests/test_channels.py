import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qratedist.channels import (
    ChoiMatrix,
    KrausChannel,
    StinespringIsometry,
    apply,
    check_channel,
    choi_distance,
    choi_of_tensor,
    choi_to_kraus,
    compose,
    constant_channel,
    dephasing_channel,
    depolarizing_channel,
    identity_channel,
    kraus_to_choi,
    kraus_to_stinespring,
    marginal_channel,
    mix,
    reduced_channel,
    stinespring_to_kraus,
    swap_channel,
    tensor_channels,
    unitary_channel,
    validate,
)
from qratedist.exceptions import DimensionError, ValidationError
from qratedist.qmath import maximally_mixed

from conftest import PAULI_Z, ginibre_state, oracle_apply, oracle_choi, random_kraus

seeds = st.integers(0, 2**32 - 1)


def _random_channel(d_in, d_out, r, seed):
    return KrausChannel(random_kraus(d_in, d_out, r, np.random.default_rng(seed)))


def _same_map(e1, e2, rng, trials=3, atol=1e-9):
    for _ in range(trials):
        m = ginibre_state(e1.dim_in, rng)
        if not np.allclose(e1(m), e2(m), atol=atol):
            return False
    return True


def test_validate_examples():
    rep = validate(identity_channel(2))
    assert rep.passed and rep.deviation == 0.0
    assert validate(dephasing_channel(0.5)).passed
    bad = validate(KrausChannel(0.9 * np.eye(2)))
    assert not bad.passed
    assert bad.deviation == pytest.approx(0.19, abs=1e-12)
    with pytest.raises(ValidationError):
        check_channel(KrausChannel(0.9 * np.eye(2)))


def test_kraus_rejects_bad_input():
    with pytest.raises(DimensionError):
        KrausChannel(np.zeros((0, 2, 2)))
    with pytest.raises(ValidationError):
        KrausChannel(np.array([[np.nan, 0], [0, 1]]))


def test_apply_examples():
    rng = np.random.default_rng(1)
    rho = ginibre_state(2, rng)
    assert np.allclose(apply(identity_channel(2), rho).matrix, rho)
    assert np.allclose(apply(depolarizing_channel(2), rho).matrix, np.eye(2) / 2)
    plus = np.full((2, 2), 0.5)
    # direct 2x2 arithmetic: 0.5 * plus + 0.5 * Z plus Z
    expected = 0.5 * plus + 0.5 * (PAULI_Z @ plus @ PAULI_Z)
    out = apply(dephasing_channel(0.5), plus).matrix
    assert np.allclose(out, expected) and np.allclose(out, np.eye(2) / 2)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply(identity_channel(3), maximally_mixed(2))


@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
def test_apply_matches_oracle_and_is_state(seed, d_in, d_out, r):
    rng = np.random.default_rng(seed)
    k = random_kraus(d_in, d_out, r, rng)
    rho = ginibre_state(d_in, rng)
    out = apply(KrausChannel(k), rho).matrix
    assert np.allclose(out, oracle_apply(k, rho))
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.eigvalsh(out)[0] > -1e-10


def test_compose_examples():
    e = _random_channel(2, 3, 2, 0)
    assert choi_distance(compose(identity_channel(3), e), e) <= 1e-10
    const = compose(depolarizing_channel(3), e)
    assert choi_distance(const, constant_channel(np.eye(3) / 3, 2)) <= 1e-10


def test_compose_dimension_check():
    with pytest.raises(DimensionError):
        compose(identity_channel(2), identity_channel(3))


@given(seeds)
def test_compose_matches_sequential_application(seed):
    rng = np.random.default_rng(seed)
    e1, e2 = _random_channel(2, 3, 3, seed), _random_channel(3, 2, 4, seed + 1)
    c = compose(e2, e1)
    assert c.rank <= 6
    assert validate(c).passed
    m = ginibre_state(2, rng)
    assert np.allclose(c(m), e2(e1(m)))


def test_tensor_identity():
    assert choi_distance(tensor_channels(identity_channel(2), identity_channel(2)), identity_channel(4)) == 0.0


@given(seeds)
def test_tensor_acts_on_products(seed):
    rng = np.random.default_rng(seed)
    e1, e2 = _random_channel(2, 2, 2, seed), _random_channel(3, 2, 2, seed + 7)
    t = tensor_channels(e1, e2)
    assert t.dims_in == (2, 3) and t.dims_out == (2, 2)
    a, b = ginibre_state(2, rng), ginibre_state(3, rng)
    assert np.allclose(t(np.kron(a, b)), np.kron(e1(a), e2(b)))


def test_mix_examples():
    e = _random_channel(2, 2, 3, 4)
    assert choi_distance(mix([e], [1.0]), e) <= 1e-12
    assert choi_distance(mix([identity_channel(2)] * 2, [0.3, 0.7]), identity_channel(2)) <= 1e-10


@pytest.mark.parametrize("weights", [[0.5, 0.6], [1.2, -0.2], [1.0]])
def test_mix_rejects_bad_weights(weights):
    with pytest.raises(ValueError):
        mix([identity_channel(2)] * 2, weights)


@given(seeds, st.floats(0, 1))
def test_mix_is_convex_combination(seed, lam):
    rng = np.random.default_rng(seed)
    e1, e2 = _random_channel(2, 2, 2, seed), _random_channel(2, 2, 3, seed + 3)
    m = ginibre_state(2, rng)
    assert np.allclose(mix([e1, e2], [lam, 1 - lam])(m), lam * e1(m) + (1 - lam) * e2(m))


def test_choi_examples():
    omega = np.zeros(4)
    omega[[0, 3]] = 1.0
    j = kraus_to_choi(identity_channel(2)).matrix
    assert np.allclose(j, np.outer(omega, omega))
    assert np.linalg.matrix_rank(j) == 1 and np.trace(j).real == pytest.approx(2.0)
    assert np.allclose(kraus_to_choi(depolarizing_channel(2)).matrix, np.eye(4) / 2)
    assert np.allclose(oracle_choi(depolarizing_channel(2).kraus), np.eye(4) / 2)


@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
def test_choi_matches_basis_propagation(seed, d_in, d_out, r):
    k = random_kraus(d_in, d_out, r, np.random.default_rng(seed))
    assert np.allclose(kraus_to_choi(KrausChannel(k)).matrix, oracle_choi(k))


def test_choi_to_kraus_identity_up_to_phase():
    ch = choi_to_kraus(kraus_to_choi(identity_channel(2)))
    assert ch.rank == 1
    a = ch.kraus[0]
    assert np.allclose(a / a[0, 0], np.eye(2)) and abs(abs(a[0, 0]) - 1) < 1e-12


def test_choi_to_kraus_depolarizing_on_basis():
    ch = choi_to_kraus(ChoiMatrix(2, 2, np.eye(4) / 2))
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2))
            e[i, j] = 1.0
            assert np.allclose(ch(e), np.trace(e) * np.eye(2) / 2)


def test_choi_to_kraus_rejects_invalid():
    with pytest.raises(ValidationError):
        choi_to_kraus(ChoiMatrix(2, 2, np.eye(4)))
    with pytest.raises(ValidationError):
        choi_to_kraus(ChoiMatrix(2, 2, np.diag([1.0, 0, 0, -0.5])))
    with pytest.raises(DimensionError):
        ChoiMatrix(2, 2, np.eye(3))


@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 5))
def test_choi_round_trip(seed, d_in, d_out, r):
    e = _random_channel(d_in, d_out, r, seed)
    back = choi_to_kraus(kraus_to_choi(e))
    assert back.rank <= d_in * d_out
    assert choi_distance(back, e) <= 1e-10


def test_choi_of_tensor_matches_tensor_channel():
    e1, e2 = _random_channel(2, 3, 2, 1), _random_channel(3, 2, 2, 2)
    j = choi_of_tensor(kraus_to_choi(e1), kraus_to_choi(e2))
    assert np.allclose(j.matrix, kraus_to_choi(tensor_channels(e1, e2)).matrix)


def test_stinespring_examples():
    assert choi_distance(stinespring_to_kraus(StinespringIsometry(np.eye(2), 2, 1)), identity_channel(2)) == 0.0
    # |i> -> |i>|i>, out (x) env
    v = np.zeros((4, 2))
    v[0, 0] = v[3, 1] = 1.0
    ch = stinespring_to_kraus(StinespringIsometry(v, 2, 2))
    assert np.allclose(ch.kraus[0], np.diag([1, 0])) and np.allclose(ch.kraus[1], np.diag([0, 1]))
    assert choi_distance(ch, dephasing_channel(0.5)) <= 1e-12


def test_stinespring_rejects_non_isometry():
    with pytest.raises(ValidationError):
        stinespring_to_kraus(StinespringIsometry(np.ones((4, 2)), 2, 2))
    with pytest.raises(DimensionError):
        StinespringIsometry(np.eye(3), 2, 2)


@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
def test_stinespring_round_trip(seed, d_in, d_out, r):
    e = _random_channel(d_in, d_out, r, seed)
    iso = kraus_to_stinespring(e)
    assert np.allclose(iso.v.conj().T @ iso.v, np.eye(d_in))
    assert choi_distance(stinespring_to_kraus(iso), e) <= 1e-12


@given(seeds)
def test_reduced_channel_of_product(seed):
    rng = np.random.default_rng(seed)
    t1, t2 = _random_channel(2, 2, 2, seed), _random_channel(2, 2, 3, seed + 1)
    rho = ginibre_state(2, rng)
    block = tensor_channels(t1, t2)
    assert choi_distance(reduced_channel(block, rho, 1, 2), t1) <= 1e-8
    assert choi_distance(reduced_channel(block, rho, 2, 2), t2) <= 1e-8


@given(seeds)
def test_reduced_channel_of_swap_is_constant(seed):
    rho = ginibre_state(2, np.random.default_rng(seed))
    red = reduced_channel(swap_channel(2), rho, 1, 2)
    assert choi_distance(red, constant_channel(rho, 2)) <= 1e-8


def test_reduced_channel_matches_direct_trace():
    rng = np.random.default_rng(5)
    block = _random_channel(4, 4, 3, 9)
    rho, sigma = ginibre_state(2, rng), ginibre_state(2, rng)
    red = reduced_channel(block, rho, 2, 2)
    full = block(np.kron(rho, sigma)).reshape(2, 2, 2, 2)
    assert np.allclose(red(sigma), np.einsum("iaib->ab", full))


def test_reduced_channel_errors():
    with pytest.raises(DimensionError):
        reduced_channel(identity_channel(4), maximally_mixed(2), 3, 2)
    with pytest.raises(DimensionError):
        reduced_channel(identity_channel(4), maximally_mixed(3), 1, 2)
    with pytest.raises(DimensionError):
        marginal_channel(identity_channel(4), [None, maximally_mixed(2)], [0])


def test_marginal_channel_per_slot_states():
    rng = np.random.default_rng(2)
    block = swap_channel(2)
    sigma = ginibre_state(2, rng)
    red = marginal_channel(block, [None, sigma], [1])
    assert choi_distance(red, constant_channel(sigma, 2)) <= 1e-8


def test_unitary_channel_is_valid():
    u, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    assert validate(unitary_channel(u)).passed
    assert validate(depolarizing_channel(3, 0.3)).passed
    assert math.isclose(kraus_to_choi(depolarizing_channel(3)).matrix.trace().real, 3.0)
