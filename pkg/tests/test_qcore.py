import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_density, random_hermitian
from spherepack.errors import ValidationError
from spherepack.qcore import (
    CyclicUnitary,
    DensityOperator,
    eigh,
    frac_power,
    trace_product,
    validate,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
KET0 = np.diag([1.0, 0.0])
PLUS = np.full((2, 2), 0.5)


def test_eigh_identity():
    w, _ = eigh(np.eye(2))
    assert np.allclose(w, [1, 1])


def test_eigh_pauli_x():
    w, u = eigh(PAULI_X)
    assert np.allclose(w, [-1, 1])
    assert abs(abs(u[0, 0]) - 1 / np.sqrt(2)) < 1e-12
    assert np.allclose(u[:, 0] * np.sqrt(2), [1, -1]) or np.allclose(u[:, 0] * np.sqrt(2), [-1, 1])


@pytest.mark.parametrize("seed", range(5))
def test_eigh_reconstruction(seed):
    h = random_hermitian(np.random.default_rng(seed), 4)
    w, u = eigh(h)
    assert np.linalg.norm((u * w) @ u.conj().T - h) <= 1e-11
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) <= 1e-11
    assert np.all(np.diff(w) >= 0)


def test_eigh_deterministic():
    h = random_hermitian(np.random.default_rng(3), 5)
    a, b = eigh(h), eigh(h.copy())
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))


def test_frac_power_diag():
    out = frac_power(np.diag([0.25, 0.75]), 0.5)
    assert np.allclose(np.diag(out).real, [0.5, np.sqrt(0.75)], atol=1e-12)


def test_frac_power_support_projector():
    assert np.allclose(frac_power(KET0, 0.0), KET0)


def test_frac_power_identity_exponent():
    rho = random_density(np.random.default_rng(0), 3)
    assert np.allclose(frac_power(rho, 1.0), rho, atol=1e-12)


def test_frac_power_negative_eigenvalue():
    with pytest.raises(ValidationError):
        frac_power(np.diag([1.1, -0.1]), 0.5)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(0.0, 3.0), b=st.floats(0.0, 3.0),
       rank=st.integers(1, 3))
def test_frac_power_composition(seed, a, b, rank):
    rho = random_density(np.random.default_rng(seed), 3, rank)
    lhs = frac_power(frac_power(rho, a), b)
    rhs = frac_power(rho, a * b)
    if a == 0 or b == 0:
        # 0^0 conventions: the support projector is idempotent under any power
        return
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), rank=st.integers(1, 4))
def test_support_projector_idempotent_and_commutes(seed, rank):
    rho = random_density(np.random.default_rng(seed), 4, rank)
    p = frac_power(rho, 0.0)
    assert np.max(np.abs(p @ p - p)) <= 1e-10
    assert np.max(np.abs(p @ rho - rho @ p)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_density_eigenvalues_sum_to_one(seed):
    rho = random_density(np.random.default_rng(seed), 4)
    assert abs(eigh(rho)[0].sum() - 1) <= 1e-10


def test_trace_product_examples():
    assert trace_product(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.5)
    assert trace_product(KET0, PLUS) == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(5))
def test_trace_product_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, 3), random_hermitian(rng, 3)
    assert trace_product(a, b) == pytest.approx(trace_product(b, a), abs=1e-12)


def test_trace_product_dim_mismatch():
    with pytest.raises(ValidationError):
        trace_product(np.eye(2), np.eye(3))


def test_validate_accepts_examples():
    validate(np.diag([0.9, 0.1]), PAULI_X, 2)
    validate(KET0, HADAMARD, 2)


@pytest.mark.parametrize(
    "w1, v, k, code",
    [
        (np.diag([0.9, 0.1]), np.diag([1, np.exp(1j * np.pi / 3)]), 2, "V_ORDER"),
        (np.diag([0.9, 0.2]), PAULI_X, 2, "TRACE_NOT_ONE"),
        (np.diag([1.1, -0.1]), PAULI_X, 2, "NEGATIVE_EIGENVALUE"),
        (np.diag([0.9, 0.1]), np.array([[1, 1], [0, 1]]), 2, "V_NOT_UNITARY"),
        (np.array([[0.5, 0.3], [0.0, 0.5]]), PAULI_X, 2, "NOT_HERMITIAN"),
        (np.eye(3) / 3, PAULI_X, 2, "DIM_MISMATCH"),
    ],
)
def test_validate_rejections(w1, v, k, code):
    with pytest.raises(ValidationError) as err:
        validate(w1, v, k)
    assert code in [c for c, _ in err.value.violations]


def test_validate_collects_every_violation():
    with pytest.raises(ValidationError) as err:
        validate(np.diag([0.9, 0.2]), np.array([[1, 1], [0, 1]]), 2)
    codes = {c for c, _ in err.value.violations}
    assert {"TRACE_NOT_ONE", "V_NOT_UNITARY"} <= codes


def test_density_operator_clamps_tiny_negative():
    rho = DensityOperator(np.diag([1.0 + 5e-13, -5e-13]))
    assert np.linalg.eigvalsh(rho.matrix).min() >= 0
    assert not rho.matrix.flags.writeable


def test_cyclic_unitary_order():
    assert CyclicUnitary(HADAMARD, 2).order == 2
