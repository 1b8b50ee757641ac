import numpy as np
import pytest

from trimode.errors import DimensionError, TruncationError
from trimode.fock import (
    DensityMatrix,
    FockOperator,
    annihilation,
    coherent_state,
    coherent_tail,
    creation,
    expectation,
    hamiltonian_fock,
    number_operator,
    required_dimension,
    total_number_operator,
    vacuum,
)
from trimode.models import FockDims, SystemParams


def basis(dims, n1, n2, n3):
    psi = np.zeros(dims.size, dtype=complex)
    psi[dims.index(n1, n2, n3)] = 1.0
    return psi


def test_annihilation_single_mode_block():
    a = annihilation(FockDims.of(2, 1, 1), 1)
    np.testing.assert_array_equal(a.matrix, [[0, 1], [0, 0]])


def test_annihilation_lowers_one_photon():
    dims = FockDims.of(3)
    a1 = annihilation(dims, 1)
    np.testing.assert_allclose(a1.matrix @ basis(dims, 1, 0, 0), basis(dims, 0, 0, 0))
    np.testing.assert_allclose(annihilation(dims, 2).matrix @ basis(dims, 0, 2, 1), np.sqrt(2) * basis(dims, 0, 1, 1))


def test_ladder_commutator_is_identity_below_cutoff():
    dims = FockDims.of(5, 1, 1)
    commutator = annihilation(dims, 1).commutator(creation(dims, 1))
    np.testing.assert_allclose(np.diag(commutator.matrix).real, [1, 1, 1, 1, -4])


def test_number_operator_matches_ladder_product():
    dims = FockDims.of(3, 4, 2)
    for mode in (1, 2, 3):
        a = annihilation(dims, mode)
        np.testing.assert_allclose((a.dag() @ a).matrix, number_operator(dims, mode).matrix)
    total = sum(number_operator(dims, mode).matrix for mode in (1, 2, 3))
    np.testing.assert_allclose(total_number_operator(dims).matrix, total)


def test_operators_on_different_dims_do_not_compose():
    with pytest.raises(DimensionError):
        annihilation(FockDims.of(3), 1) @ annihilation(FockDims.of(4), 1)
    with pytest.raises(DimensionError):
        number_operator(FockDims.of(3), 0)


def test_coherent_state_of_zero_is_vacuum():
    dims = FockDims.of(4)
    state = coherent_state(dims, 1, 0.0)
    np.testing.assert_allclose(state.amplitudes, vacuum(dims).amplitudes)
    assert state.leakage == 0.0


@pytest.mark.parametrize("alpha, n_mode, tol", [(1.0, 20, 1e-10), (4.0, 60, 1e-6), (1.5j, 30, 1e-10)])
def test_coherent_state_mean(alpha, n_mode, tol):
    dims = FockDims.of(n_mode, 1, 1)
    state = coherent_state(dims, 1, alpha)
    assert expectation(state, number_operator(dims, 1)) == pytest.approx(abs(alpha) ** 2, abs=tol)


def test_coherent_state_is_not_renormalized():
    dims = FockDims.of(4, 1, 1)
    state = coherent_state(dims, 1, 1.0, leakage_budget=0.1)
    assert state.leakage == pytest.approx(coherent_tail(1.0, 4))
    assert state.norm() ** 2 == pytest.approx(1.0 - state.leakage, abs=1e-14)


def test_coherent_state_on_other_mode():
    dims = FockDims.of(2, 2, 20)
    state = coherent_state(dims, 3, 1.0)
    assert expectation(state, number_operator(dims, 3)) == pytest.approx(1.0, abs=1e-10)
    assert expectation(state, number_operator(dims, 1)) == pytest.approx(0.0, abs=1e-15)


def test_coherent_state_over_budget_reports_required_dimension():
    with pytest.raises(TruncationError) as info:
        coherent_state(FockDims.of(40, 1, 1), 1, 4.0)
    needed = info.value.required_dim
    assert needed > 40
    assert needed == required_dimension(4.0, 1e-8)
    assert coherent_tail(4.0, needed) <= 1e-8
    assert coherent_tail(4.0, needed - 1) > 1e-8


def test_hamiltonian_without_coupling_counts_photons():
    dims = FockDims.of(3)
    p = SystemParams(omega=4.0, gamma=10.0)
    h = hamiltonian_fock(p, dims)
    np.testing.assert_allclose(h.matrix, 4.0 * total_number_operator(dims).matrix)


def test_hamiltonian_commutes_with_total_number():
    dims = FockDims.of(3)
    p = SystemParams(omega=4.0, lam=0.5, g=0.5, gamma=10.0)
    h = hamiltonian_fock(p, dims)
    assert h.is_hermitian()
    np.testing.assert_allclose(h.commutator(total_number_operator(dims)).matrix, 0.0, atol=1e-12)


def test_hamiltonian_one_excitation_sector():
    dims = FockDims.of(4)
    h = hamiltonian_fock(SystemParams(omega=4.0, lam=0.5, g=0.5, gamma=10.0), dims).matrix
    sector = [dims.index(1, 0, 0), dims.index(0, 1, 0), dims.index(0, 0, 1)]
    block = h[np.ix_(sector, sector)]
    np.testing.assert_allclose(np.linalg.eigvalsh(block), [3.5, 3.5, 5.0], atol=1e-12)


def test_expectation_examples():
    dims = FockDims.of(3)
    assert expectation(vacuum(dims), number_operator(dims, 1)) == 0.0
    rho = DensityMatrix.from_state(vacuum(dims))
    identity = FockOperator(dims=dims, matrix=np.eye(dims.size, dtype=complex))
    assert expectation(rho, identity) == pytest.approx(1.0)
    assert rho.trace() == pytest.approx(1.0)
    assert rho.purity() == pytest.approx(1.0)
    assert rho.min_eigenvalue() == pytest.approx(0.0, abs=1e-12)


def test_expectation_rejects_mismatched_dims():
    with pytest.raises(DimensionError):
        expectation(vacuum(FockDims.of(3)), number_operator(FockDims.of(4), 1))


def test_density_matrix_must_be_hermitian():
    dims = FockDims.of(1, 1, 2)
    with pytest.raises(ValueError):
        DensityMatrix(dims=dims, matrix=np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex))


@pytest.mark.parametrize(
    "diagonal",
    [
        [3.0, -2.0],
        [1.0, 1.0],
    ],
    ids=["negative-eigenvalue", "trace-two"],
)
def test_density_matrix_must_be_physical(diagonal):
    with pytest.raises(ValueError):
        DensityMatrix(dims=FockDims.of(1, 1, 2), matrix=np.diag(diagonal).astype(complex))


def test_density_matrix_trace_within_leakage():
    dims = FockDims.of(1, 1, 2)
    rho = DensityMatrix(dims=dims, matrix=np.diag([0.7, 0.2]).astype(complex))
    with pytest.raises(ValueError):
        rho.check_physical(leakage=1e-8)
    assert rho.check_physical(leakage=0.2) is rho
