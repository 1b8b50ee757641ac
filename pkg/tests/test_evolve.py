import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import poisson

from trimode.analytic import mean_photon_numbers
from trimode.errors import ConvergenceError, DimensionError, SeriesOverflowError
from trimode.evolve import (
    coherent_oracle,
    coherent_series,
    fock_series,
    integrate_lindblad,
    lindblad_rhs,
    milburn_fock_expectations,
    milburn_fock_series,
    poisson_average,
    poisson_kmax,
    poisson_window,
    purity_profile,
    schrodinger_occupations,
)
from trimode.fock import (
    DensityMatrix,
    FockOperator,
    FockState,
    annihilation,
    coherent_state,
    creation,
    expectation,
    hamiltonian_fock,
    number_operator,
    vacuum,
)
from trimode.models import FockDims, SystemParams

PARAMS = SystemParams(omega=4.0, lam=0.5, g=0.5, gamma=10.0, alpha=4.0)
UNIT = PARAMS.model_copy(update={"alpha": 1.0})
SMALL = FockDims.of(4)
LOOSE = 0.05


def test_poisson_kmax_at_zero():
    window = poisson_kmax(0.0, 1e-10)
    assert window.k_max == 0
    assert window.tail_bound == 0.0


@pytest.mark.parametrize("gamma_t, tol", [(10.0, 1e-12), (100.0, 1e-10), (0.3, 1e-12), (2500.0, 1e-12)])
def test_poisson_kmax_tail(gamma_t, tol):
    window = poisson_kmax(gamma_t, tol)
    assert window.k_max >= np.ceil(gamma_t)
    assert poisson.sf(window.k_max, gamma_t) <= tol
    assert poisson.sf(window.k_max - 1, gamma_t) > tol
    assert window.tail_bound <= tol


def test_poisson_kmax_against_direct_sum():
    window = poisson_kmax(10.0, 1e-12)
    ks = np.arange(window.k_max + 1, 200)
    assert poisson.pmf(ks, 10.0).sum() <= 1e-12
    assert window.k_max <= 10 + 10 * np.sqrt(10)


def test_poisson_kmax_validates_arguments():
    with pytest.raises(ValueError):
        poisson_kmax(-1.0)
    with pytest.raises(ValueError):
        poisson_kmax(1.0, tol=1.5)


@pytest.mark.parametrize("gamma_t", [5.0, 300.0, 1e6])
def test_poisson_window_drops_little_mass(gamma_t):
    tol = 1e-12
    window = poisson_window(gamma_t, tol)
    dropped = poisson.cdf(window.k_min - 1, gamma_t) + poisson.sf(window.k_max, gamma_t)
    assert dropped <= tol
    assert window.dropped_mass <= tol
    assert window.k_min <= gamma_t <= window.k_max


def test_large_gamma_window_is_narrow():
    window = poisson_window(1e6 * 10, 1e-12)
    assert window.k_min > 0
    assert window.terms < 100_000


def test_poisson_average_of_constant_is_retained_mass():
    times = np.array([0.0, 0.1, 3.0])
    values = poisson_average(lambda ks: np.ones((len(ks), 1)), 10.0, times)
    np.testing.assert_allclose(values[:, 0], 1.0, atol=1e-12)


def test_poisson_average_of_k_is_mean():
    values = poisson_average(lambda ks: ks[:, None].astype(float), 10.0, [2.0, 4.0])
    np.testing.assert_allclose(values[:, 0], [20.0, 40.0], atol=1e-9)


def test_poisson_average_overflow():
    with pytest.raises(SeriesOverflowError):
        poisson_average(lambda ks: np.ones((len(ks), 1)), 1e4, [10.0], max_terms=100)
    with pytest.raises(ValueError):
        poisson_average(lambda ks: np.ones((len(ks), 1)), 1.0, [-1.0])


def test_coherent_oracle_examples():
    assert coherent_oracle(PARAMS, 0.0) == pytest.approx((16.0, 0.0, 0.0), abs=1e-12)
    uncoupled = SystemParams(omega=4.0, gamma=10.0, alpha=4.0)
    assert coherent_oracle(uncoupled, 3.0) == pytest.approx((16.0, 0.0, 0.0), abs=1e-10)


def test_coherent_oracle_matches_closed_form():
    closed = mean_photon_numbers(PARAMS, [2.0]).columns()[0]
    np.testing.assert_allclose(coherent_oracle(PARAMS, 2.0), closed, atol=1e-8)


@pytest.mark.parametrize("g, gamma", [(0.1, 10.0), (1.0, 10.0), (0.5, 100.0), (-0.3, 2.0)])
def test_coherent_series_matches_closed_form(g, gamma):
    params = PARAMS.model_copy(update={"g": g, "gamma": gamma})
    t = np.linspace(0, 30, 301)
    oracle = coherent_series(params, t)
    assert oracle.engine == "coherent-oracle"
    np.testing.assert_allclose(oracle.columns(), mean_photon_numbers(params, t).columns(), atol=1e-8)
    np.testing.assert_allclose(oracle.total(), 16.0, atol=1e-8)


def test_fock_series_matches_closed_form():
    dims = FockDims.of(12)
    t = np.array([0.5, 1.0, 2.0, 5.0])
    series = fock_series(UNIT, dims, t)
    leakage = coherent_state(dims, 1, UNIT.alpha).leakage
    assert series.engine == "fock-series"
    np.testing.assert_allclose(series.columns(), mean_photon_numbers(UNIT, t).columns(), atol=1e-6 + leakage)


def test_fock_density_at_zero_is_initial_state():
    dims = FockDims.of(12)
    rho = milburn_fock_series(UNIT, dims, 0.0)
    psi0 = coherent_state(dims, 1, UNIT.alpha)
    np.testing.assert_allclose(rho.matrix, DensityMatrix.from_state(psi0).matrix, atol=1e-12)
    assert rho.purity() == pytest.approx(1.0, abs=1e-8)


def test_fock_density_expectations_match_closed_form():
    dims = FockDims.of(12)
    rho = milburn_fock_series(UNIT, dims, 1.0)
    closed = mean_photon_numbers(UNIT, [1.0]).columns()[0]
    ours = [expectation(rho, number_operator(dims, mode)) for mode in (1, 2, 3)]
    np.testing.assert_allclose(ours, closed, atol=1e-6)
    assert rho.trace() <= 1.0 + 1e-12
    assert rho.min_eigenvalue() >= -1e-10


def test_fock_expectations_of_non_diagonal_observable():
    dims = SMALL
    exchange = creation(dims, 1) @ annihilation(dims, 2)
    hopping = FockOperator(dims=dims, matrix=exchange.matrix + exchange.dag().matrix)
    values = milburn_fock_expectations(UNIT, dims, [0.0, 1.0], [hopping], leakage_budget=LOOSE)
    assert values.shape == (2, 1)
    assert values[0, 0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DimensionError):
        milburn_fock_expectations(UNIT, dims, [0.0], [number_operator(FockDims.of(3), 1)], leakage_budget=LOOSE)


def test_purity_decreases():
    times = np.linspace(0, 2, 11)
    purities, violations = purity_profile(UNIT, SMALL, times, leakage_budget=LOOSE)
    norm = coherent_state(SMALL, 1, UNIT.alpha, LOOSE).norm()
    assert purities[0] == pytest.approx(norm**4, abs=1e-12)
    assert purities[-1] < purities[0]
    assert violations == []


def test_lindblad_rhs_vanishes_on_stationary_state():
    dims = FockDims.of(3)
    h = hamiltonian_fock(SystemParams(omega=4.0, gamma=10.0), dims)
    rho = DensityMatrix.from_state(vacuum(dims))
    np.testing.assert_allclose(lindblad_rhs(rho, h, 10.0).matrix, 0.0, atol=1e-15)


def test_lindblad_rhs_schrodinger_limit():
    dims = FockDims.of(3)
    h = hamiltonian_fock(PARAMS, dims)
    rho = DensityMatrix.from_state(coherent_state(dims, 1, 0.8, leakage_budget=LOOSE))
    unitary = -1j * (h.matrix @ rho.matrix - rho.matrix @ h.matrix)
    for dissipator in ("printed", "taylor"):
        rhs = lindblad_rhs(rho, h, 1e12, dissipator).matrix
        assert np.max(np.abs(rhs - unitary)) <= 1e-10 * np.max(np.abs(unitary))


def test_lindblad_rhs_is_traceless_and_hermitian():
    dims = FockDims.of(3)
    h = hamiltonian_fock(PARAMS, dims)
    rho = DensityMatrix.from_state(coherent_state(dims, 1, 0.8, leakage_budget=LOOSE))
    rhs = lindblad_rhs(rho, h, 10.0).matrix
    assert abs(np.trace(rhs)) < 1e-12
    np.testing.assert_allclose(rhs, rhs.conj().T, atol=1e-12)


def test_lindblad_rhs_rejects_mismatched_dims():
    h = hamiltonian_fock(PARAMS, FockDims.of(3))
    with pytest.raises(DimensionError):
        lindblad_rhs(DensityMatrix.from_state(vacuum(FockDims.of(2))), h, 10.0)


def test_lindblad_flat_without_coupling():
    params = SystemParams(omega=4.0, gamma=10.0, alpha=1.0)
    series = integrate_lindblad(params, SMALL, np.linspace(0, 2, 5), leakage_budget=LOOSE)
    assert series.engine == "lindblad-rk4"
    np.testing.assert_allclose(series.n1, series.n1[0], atol=1e-12)
    np.testing.assert_allclose(series.n2, 0.0, atol=1e-12)


def lindblad_gap(gamma, dissipator):
    params = UNIT.model_copy(update={"gamma": gamma})
    t = np.linspace(0, 2, 41)
    milburn = fock_series(params, SMALL, t, leakage_budget=LOOSE)
    lindblad = integrate_lindblad(params, SMALL, t, dissipator=dissipator, leakage_budget=LOOSE)
    return float(np.max(np.abs(milburn.columns() - lindblad.columns())))


def test_taylor_dissipator_tracks_milburn_to_second_order():
    gap = lindblad_gap(100.0, "taylor")
    assert gap <= 5e-3
    ratio = gap / lindblad_gap(200.0, "taylor")
    assert 3.0 < ratio < 5.0


def test_printed_dissipator_deviates_at_first_order():
    gap = lindblad_gap(100.0, "printed")
    assert gap > 10 * lindblad_gap(100.0, "taylor")
    ratio = gap / lindblad_gap(200.0, "printed")
    assert 1.6 < ratio < 2.4


def test_rk4_richardson_ratio():
    dims = FockDims.of(3)
    t = [0.0, 2.0]

    def final(step):
        series = integrate_lindblad(UNIT, dims, t, step=step, verify=False, leakage_budget=0.2)
        return series.columns()[-1]

    coarse, mid, fine = final(0.05), final(0.025), final(0.0125)
    ratio = np.linalg.norm(coarse - mid) / np.linalg.norm(mid - fine)
    assert 13.0 < ratio < 19.0


def test_step_halving_detects_coarse_steps():
    with pytest.raises(ConvergenceError):
        integrate_lindblad(UNIT, FockDims.of(3), [0.0, 5.0], step=1.0, convergence_tol=1e-9, leakage_budget=0.2)


def test_integrate_lindblad_validates_grid():
    with pytest.raises(ValueError):
        integrate_lindblad(UNIT, SMALL, [1.0, 0.5], leakage_budget=LOOSE)
    with pytest.raises(ValueError):
        integrate_lindblad(UNIT, SMALL, [0.0, 1.0], step=0.0, leakage_budget=LOOSE)


def test_coherent_oracle_unitary_limit():
    params = UNIT.model_copy(update={"gamma": 1e6})
    t = np.array([0.0, 1.0, 2.5, 5.0, 10.0])
    oracle = coherent_series(params, t)
    np.testing.assert_allclose(oracle.columns(), schrodinger_occupations(params, t), atol=1e-4)


def test_fock_series_unitary_limit():
    params = UNIT.model_copy(update={"gamma": 1e6})
    dims = FockDims.of(6)
    t = np.array([0.0, 2.5, 10.0])
    series = fock_series(params, dims, t, leakage_budget=1e-3)

    psi0 = coherent_state(dims, 1, params.alpha, 1e-3).amplitudes
    h = hamiltonian_fock(params, dims).matrix
    expected = []
    for tau in t:
        state = FockState(dims=dims, amplitudes=expm(-1j * tau * h) @ psi0)
        expected.append([expectation(state, number_operator(dims, mode)) for mode in (1, 2, 3)])
    np.testing.assert_allclose(series.columns(), expected, atol=1e-4)


def test_purity_profile_densities_are_physical():
    purities, _ = purity_profile(UNIT, FockDims.of(5), np.linspace(0, 3, 7), leakage_budget=LOOSE)
    assert np.all(purities <= 1.0 + 1e-12)
