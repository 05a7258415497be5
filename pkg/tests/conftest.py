"""Shared fixtures and independent oracles.

The oracles are written with explicit loops or plain ``numpy`` calls and do
not route through the package, so agreement is a genuine cross-check.
"""
import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("ci")


def ginibre_state(d, rng, rank=None):
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_kraus(d_in, d_out, r, rng):
    r = max(r, -(-d_in // d_out))
    g = rng.normal(size=(r * d_out, d_in)) + 1j * rng.normal(size=(r * d_out, d_in))
    q, _ = np.linalg.qr(g)
    return q.reshape(r, d_out, d_in)


def oracle_apply(kraus, rho):
    out = np.zeros((kraus.shape[1], kraus.shape[1]), dtype=complex)
    for a in kraus:
        out += a @ rho @ a.conj().T
    return out


def oracle_partial_trace_2(m, d1, d2, keep_first):
    """Trace out one factor of a bipartite operator by explicit summation."""
    if keep_first:
        out = np.zeros((d1, d1), dtype=complex)
        for i in range(d1):
            for j in range(d1):
                out[i, j] = sum(m[i * d2 + k, j * d2 + k] for k in range(d2))
    else:
        out = np.zeros((d2, d2), dtype=complex)
        for i in range(d2):
            for j in range(d2):
                out[i, j] = sum(m[k * d2 + i, k * d2 + j] for k in range(d1))
    return out


def oracle_entropy(m):
    s = 0.0
    for lam in np.linalg.eigvalsh(m):
        if lam > 1e-12:
            s -= lam * math.log2(lam)
    return s


def oracle_purification(rho):
    """|psi> = sum_i sqrt(l_i) |i>_R |e_i>_Q."""
    w, v = np.linalg.eigh(rho)
    d = rho.shape[0]
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        psi += math.sqrt(max(w[i], 0.0)) * np.kron(np.eye(d)[i], v[:, i])
    return psi


def oracle_joint_output(rho, kraus):
    psi = oracle_purification(rho)
    d = rho.shape[0]
    out = np.zeros((d * kraus.shape[1],) * 2, dtype=complex)
    for a in kraus:
        phi = np.kron(np.eye(d), a) @ psi
        out += np.outer(phi, phi.conj())
    return psi, out


def oracle_fidelity(rho, kraus):
    psi, out = oracle_joint_output(rho, kraus)
    return float(np.real(psi.conj() @ out @ psi))


def oracle_entropy_exchange(rho, kraus):
    return oracle_entropy(oracle_joint_output(rho, kraus)[1])


def oracle_choi(kraus):
    """sum_ij E(|i><j|) (x) |i><j| in out (x) in ordering."""
    d_in = kraus.shape[2]
    j = 0
    for i in range(d_in):
        for k in range(d_in):
            e = np.zeros((d_in, d_in))
            e[i, k] = 1.0
            j = j + np.kron(oracle_apply(kraus, e), e)
    return j


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"[acceptance {criterion}] {'PASS' if passed else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
