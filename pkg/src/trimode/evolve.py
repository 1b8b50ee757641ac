"""Evolution engines that do not use the closed-form photon numbers.

Milburn's equation ρ̇ = γ(e^{-iH/γ} ρ e^{iH/γ} − ρ) is solved exactly by

    ρ(t) = e^{-γt} Σ_k (γt)^k / k! |ψ_k⟩⟨ψ_k|,   |ψ_k⟩ = e^{-ikH/γ} |ψ(0)⟩,

so every engine here is a Poisson-weighted average over unitary kicks, except
the Lindblad integrator, which time-steps the second-order truncation.
"""
import math
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson
from tqdm import tqdm

from trimode.errors import ConvergenceError, DimensionError, SeriesOverflowError
from trimode.fock import (
    DensityMatrix,
    FockOperator,
    coherent_state,
    hamiltonian_fock,
    number_operator,
)
from trimode.models import Dissipator, FockDims, SeriesTruncation, SystemParams, TimeSeries
from trimode.spectral import single_particle_matrix
from trimode.util import LEAKAGE_BUDGET, LINDBLAD_STEP, MAX_SERIES_TERMS, SERIES_TOL, logger

# the unsummed remainder beyond the exact refinement range is kept below tol * REMAINDER_FRACTION
REMAINDER_FRACTION = 1e-6
CHUNK = 256
PURITY_SLACK = 1e-12


def _check_tol(tol: float):
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")


def _chernoff_log_bound(m, mean: float) -> np.ndarray:
    """log of the Chernoff bound on P(X ≥ m) (m > mean) or P(X ≤ m) (m < mean)."""
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(m > 0, m - mean - m * np.log(m / mean), -mean)


def _search_span(mean: float, log_tol: float) -> int:
    # Bernstein: the Chernoff bound at mean ± x is below tol once x ≥ sqrt(2 mean L) + L
    level = -log_tol
    return int(math.ceil(2.0 * math.sqrt(2.0 * mean * level) + 2.0 * level)) + 2


def _first_upper_below(mean: float, log_tol: float) -> int:
    start = math.ceil(mean) + 1
    ms = np.arange(start, start + _search_span(mean, log_tol))
    below = _chernoff_log_bound(ms, mean) <= log_tol
    return int(ms[np.argmax(below)]) if below.any() else int(ms[-1])


def _last_lower_below(mean: float, log_tol: float) -> int:
    """Largest m < mean whose lower Chernoff bound is ≤ tol, or -1 if none."""
    stop = math.floor(mean)
    ms = np.arange(max(0, stop - _search_span(mean, log_tol)), stop)
    if ms.size == 0:
        return -1
    below = np.nonzero(_chernoff_log_bound(ms, mean) <= log_tol)[0]
    return int(ms[below[-1]]) if below.size else -1


def poisson_kmax(gamma_t: float, tol: float = SERIES_TOL) -> SeriesTruncation:
    """Smallest k_max ≥ ceil(γt) with P(X > k_max) ≤ tol for X ~ Poisson(γt).

    A Chernoff bound brackets the cut; the exact tail is then summed backwards
    in log space over the bracket, plus a bounded remainder beyond it.
    """
    _check_tol(tol)
    if gamma_t < 0:
        raise ValueError(f"gamma_t must be non-negative, got {gamma_t}")
    if gamma_t == 0:
        return SeriesTruncation(mean=0.0, k_max=0, tail_bound=0.0)

    k0 = math.ceil(gamma_t)
    far = _first_upper_below(gamma_t, math.log(tol * REMAINDER_FRACTION))
    remainder = float(np.exp(_chernoff_log_bound(far + 1, gamma_t)))

    js = np.arange(k0 + 1, far + 1)
    log_tails = np.logaddexp.accumulate(poisson.logpmf(js, gamma_t)[::-1])[::-1]
    # tails[i] = P(X > k0 + i) for k = k0 .. far
    tails = np.concatenate([np.exp(log_tails), [0.0]]) + remainder
    index = int(np.argmax(tails <= tol)) if np.any(tails <= tol) else len(tails) - 1
    return SeriesTruncation(mean=gamma_t, k_max=k0 + index, tail_bound=float(tails[index]))


def poisson_window(gamma_t: float, tol: float = SERIES_TOL) -> SeriesTruncation:
    """Window [k_min, k_max] dropping at most tol/2 of Poisson mass on each side."""
    upper = poisson_kmax(gamma_t, 0.5 * tol)
    if gamma_t < 1.0:
        return upper

    near = _last_lower_below(gamma_t, math.log(0.5 * tol * REMAINDER_FRACTION))
    remainder = float(np.exp(_chernoff_log_bound(near, gamma_t))) if near >= 0 else 0.0
    js = np.arange(near + 1, math.floor(gamma_t) + 1)
    # heads[i] = P(X < near + 1 + i)
    heads = np.concatenate([[0.0], np.exp(np.logaddexp.accumulate(poisson.logpmf(js, gamma_t)))[:-1]]) + remainder
    admissible = np.nonzero(heads <= 0.5 * tol)[0]
    index = int(admissible[-1]) if admissible.size else 0
    return upper.model_copy(update={"k_min": near + 1 + index, "lower_tail": float(heads[index])})


def poisson_average(
    per_k: Callable[[np.ndarray], np.ndarray],
    gamma: float,
    times,
    tol: float = SERIES_TOL,
    max_terms: int = MAX_SERIES_TERMS,
    progress: bool = False,
    desc: str = "series",
) -> np.ndarray:
    """e^{-γt} Σ_k (γt)^k/k! per_k(k) for each t; per_k maps k-arrays to (K, m) rows."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be non-negative")

    windows = [poisson_window(gamma * t, tol) for t in times]
    widest = max(w.terms for w in windows)
    if widest > max_terms:
        raise SeriesOverflowError(f"Poisson window of {widest} terms exceeds the limit of {max_terms}")

    lo = min(w.k_min for w in windows)
    hi = max(w.k_max for w in windows)
    cached = per_k(np.arange(lo, hi + 1)) if hi - lo + 1 <= max_terms else None
    logger.debug(f"Poisson windows span k in [{lo}, {hi}] over {len(times)} times (cached={cached is not None})")

    rows = []
    for t, window in tqdm(zip(times, windows), total=len(times), desc=desc, disable=not progress):
        ks = np.arange(window.k_min, window.k_max + 1)
        values = cached[window.k_min - lo : window.k_max - lo + 1] if cached is not None else per_k(ks)
        mean = gamma * t
        weights = np.ones(1) if mean == 0 else np.exp(poisson.logpmf(ks, mean))
        rows.append(weights @ values)
    return np.array(rows)


def coherent_amplitudes(params: SystemParams, tau: float) -> np.ndarray:
    """Mode amplitudes e^{-iMτ}(α, 0, 0)ᵀ of the coherent state after unitary time τ."""
    initial = np.array([params.alpha, 0.0, 0.0], dtype=complex)
    return expm(-1j * tau * single_particle_matrix(params)) @ initial


def schrodinger_occupations(params: SystemParams, times) -> np.ndarray:
    """Occupations of the undamped (γ → ∞) evolution, shape (n_times, 3)."""
    return np.array([np.abs(coherent_amplitudes(params, t)) ** 2 for t in np.atleast_1d(times)])


def _coherent_per_k(params: SystemParams) -> Callable[[np.ndarray], np.ndarray]:
    energies, vectors = np.linalg.eigh(single_particle_matrix(params))
    initial = vectors.T @ np.array([params.alpha, 0.0, 0.0], dtype=complex)

    def per_k(ks: np.ndarray) -> np.ndarray:
        phases = np.exp(-1j * np.outer(ks, energies) / params.gamma)
        return np.abs((phases * initial) @ vectors.T) ** 2

    return per_k


def coherent_oracle(params: SystemParams, t: float, tol: float = SERIES_TOL) -> tuple[float, float, float]:
    """Milburn occupations at time t using only 3x3 amplitude algebra."""
    n1, n2, n3 = poisson_average(_coherent_per_k(params), params.gamma, [t], tol)[0]
    return float(n1), float(n2), float(n3)


def coherent_series(params: SystemParams, times, tol: float = SERIES_TOL, progress: bool = False) -> TimeSeries:
    times = np.asarray(times, dtype=float)
    values = poisson_average(_coherent_per_k(params), params.gamma, times, tol, progress=progress, desc="coherent oracle")
    return TimeSeries(times=times, n1=values[:, 0], n2=values[:, 1], n3=values[:, 2], params=params, engine="coherent-oracle")


class _KickedFockState:
    """|ψ_k⟩ = U^k |ψ₀⟩ with U = e^{-iH/γ}, applied in the eigenbasis of H."""

    def __init__(self, params: SystemParams, dims: FockDims, leakage_budget: float):
        self.dims = dims
        self.gamma = params.gamma
        self.initial = coherent_state(dims, 1, params.alpha, leakage_budget)
        hamiltonian = hamiltonian_fock(params, dims)
        logger.debug(f"Diagonalizing Hamiltonian of dimension {dims.size}")
        self.energies, self.vectors = np.linalg.eigh(hamiltonian.matrix)
        self.coefficients = self.vectors.conj().T @ self.initial.amplitudes

    def states(self, ks: np.ndarray) -> np.ndarray:
        """Rows ψ_k for each k."""
        phases = np.exp(-1j * np.outer(ks, self.energies) / self.gamma)
        return (phases * self.coefficients) @ self.vectors.T


def _diagonal(operator: FockOperator) -> np.ndarray | None:
    diagonal = np.diag(operator.matrix)
    if np.count_nonzero(operator.matrix - np.diag(diagonal)) == 0:
        return diagonal.real
    return None


def milburn_fock_expectations(
    params: SystemParams,
    dims: FockDims,
    times,
    observables: list[FockOperator] | None = None,
    tol: float = SERIES_TOL,
    leakage_budget: float = LEAKAGE_BUDGET,
    progress: bool = False,
) -> np.ndarray:
    """tr(ρ(t) A) for each observable without forming ρ; shape (n_times, n_observables)."""
    kicked = _KickedFockState(params, dims, leakage_budget)
    if observables is None:
        observables = [number_operator(dims, mode) for mode in (1, 2, 3)]
    for observable in observables:
        if observable.dims != dims:
            raise DimensionError(f"observable dims {observable.dims.shape} differ from {dims.shape}")
    diagonals = [_diagonal(o) for o in observables]

    def per_k(ks: np.ndarray) -> np.ndarray:
        out = np.empty((len(ks), len(observables)))
        for start in range(0, len(ks), CHUNK):
            psi = kicked.states(ks[start : start + CHUNK])
            populations = np.abs(psi) ** 2
            for column, (observable, diagonal) in enumerate(zip(observables, diagonals)):
                if diagonal is not None:
                    out[start : start + CHUNK, column] = populations @ diagonal
                else:
                    out[start : start + CHUNK, column] = np.einsum("ki,ij,kj->k", psi.conj(), observable.matrix, psi).real
        return out

    return poisson_average(per_k, params.gamma, times, tol, progress=progress, desc="fock series")


def fock_series(
    params: SystemParams,
    dims: FockDims,
    times,
    tol: float = SERIES_TOL,
    leakage_budget: float = LEAKAGE_BUDGET,
    progress: bool = False,
) -> TimeSeries:
    times = np.asarray(times, dtype=float)
    values = milburn_fock_expectations(params, dims, times, None, tol, leakage_budget, progress)
    return TimeSeries(times=times, n1=values[:, 0], n2=values[:, 1], n3=values[:, 2], params=params, engine="fock-series")


def _density_at(kicked: _KickedFockState, gamma: float, t: float, tol: float) -> DensityMatrix:
    window = poisson_window(gamma * t, tol)
    if window.terms > MAX_SERIES_TERMS:
        raise SeriesOverflowError(f"Poisson window of {window.terms} terms exceeds the limit of {MAX_SERIES_TERMS}")
    ks = np.arange(window.k_min, window.k_max + 1)
    weights = np.ones(1) if t == 0 else np.exp(poisson.logpmf(ks, gamma * t))
    rho = np.zeros((kicked.dims.size, kicked.dims.size), dtype=complex)
    for start in range(0, len(ks), CHUNK):
        psi = kicked.states(ks[start : start + CHUNK])
        rho += (psi.T * weights[start : start + CHUNK]) @ psi.conj()
    rho = 0.5 * (rho + rho.conj().T)

    trace = float(np.trace(rho).real)
    if trace > 1.0 + 1e-12:
        logger.warning(f"Fock-series trace {trace:.15f} exceeds one at t={t}")
    logger.debug(f"rho(t={t}): {window.terms} kicks, trace deficit {1.0 - trace:.2e}")
    return DensityMatrix(dims=kicked.dims, matrix=rho).check_physical(kicked.initial.leakage + tol)


def milburn_fock_series(
    params: SystemParams,
    dims: FockDims,
    t: float,
    tol: float = SERIES_TOL,
    leakage_budget: float = LEAKAGE_BUDGET,
) -> DensityMatrix:
    """ρ(t) = e^{-γt} Σ_k (γt)^k/k! |ψ_k⟩⟨ψ_k| on the truncated space."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return _density_at(_KickedFockState(params, dims, leakage_budget), params.gamma, t, tol)


def purity_profile(
    params: SystemParams,
    dims: FockDims,
    times,
    tol: float = SERIES_TOL,
    leakage_budget: float = LEAKAGE_BUDGET,
) -> tuple[np.ndarray, list[int]]:
    """tr(ρ²) on a grid and the indices where it rises above the previous sample."""
    kicked = _KickedFockState(params, dims, leakage_budget)
    purities = np.array([_density_at(kicked, params.gamma, t, tol).purity() for t in times])
    violations = [i for i in range(1, len(purities)) if purities[i] > purities[i - 1] + PURITY_SLACK]
    if violations:
        logger.warning(f"Purity increased at {len(violations)} of {len(purities)} sampled times")
    return purities, violations


def _dissipation_coefficient(gamma: float, dissipator: Dissipator) -> float:
    if dissipator == "printed":
        return 1.0 / gamma
    if dissipator == "taylor":
        return 0.5 / gamma
    raise ValueError(f"unknown dissipator {dissipator!r}")


def _lindblad_generator(hamiltonian: np.ndarray, gamma: float, dissipator: Dissipator) -> Callable[[np.ndarray], np.ndarray]:
    coefficient = _dissipation_coefficient(gamma, dissipator)

    def rhs(rho: np.ndarray) -> np.ndarray:
        commutator = hamiltonian @ rho - rho @ hamiltonian
        double = hamiltonian @ commutator - commutator @ hamiltonian
        return -1j * commutator - coefficient * double

    return rhs


def lindblad_rhs(rho: DensityMatrix, H: FockOperator, gamma: float, dissipator: Dissipator = "printed") -> FockOperator:
    """ρ̇ = −i[H, ρ] − c [H, [H, ρ]] with c = 1/γ (printed) or 1/(2γ) (taylor)."""
    if rho.dims != H.dims:
        raise DimensionError(f"dimension mismatch: {rho.dims.shape} vs {H.dims.shape}")
    return FockOperator(dims=H.dims, matrix=_lindblad_generator(H.matrix, gamma, dissipator)(rho.matrix))


def _rk4_observables(
    rhs: Callable[[np.ndarray], np.ndarray],
    rho0: np.ndarray,
    times: np.ndarray,
    step: float,
    diagonals: list[np.ndarray],
    progress: bool,
) -> np.ndarray:
    rho = rho0.copy()
    t_now = 0.0
    trace0 = np.trace(rho0).real
    drift = 0.0
    out = np.empty((len(times), len(diagonals)))
    for row, t in enumerate(tqdm(times, desc="lindblad rk4", disable=not progress)):
        span = t - t_now
        if span > 0:
            n_steps = max(1, math.ceil(span / step - 1e-9))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = rhs(rho)
                k2 = rhs(rho + 0.5 * h * k1)
                k3 = rhs(rho + 0.5 * h * k2)
                k4 = rhs(rho + h * k3)
                rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                rho = 0.5 * (rho + rho.conj().T)
            t_now = t
        populations = np.diag(rho).real
        out[row] = [populations @ d for d in diagonals]
        drift = max(drift, abs(np.trace(rho).real - trace0))
    if drift > 1e-10:
        logger.warning(f"Lindblad trace drifted by {drift:.2e} (no renormalization applied)")
    return out


def integrate_lindblad(
    params: SystemParams,
    dims: FockDims,
    t_grid,
    step: float = LINDBLAD_STEP,
    dissipator: Dissipator = "printed",
    verify: bool = True,
    convergence_tol: float = 1e-6,
    leakage_budget: float = LEAKAGE_BUDGET,
    progress: bool = False,
) -> TimeSeries:
    """Fixed-step RK4 for the second-order equation, verified by halving the step."""
    times = np.asarray(t_grid, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("t_grid must be non-negative and non-decreasing")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")

    psi0 = coherent_state(dims, 1, params.alpha, leakage_budget).amplitudes
    rho0 = np.outer(psi0, psi0.conj())
    rhs = _lindblad_generator(hamiltonian_fock(params, dims).matrix, params.gamma, dissipator)
    diagonals = [np.diag(number_operator(dims, mode).matrix).real for mode in (1, 2, 3)]

    values = _rk4_observables(rhs, rho0, times, step, diagonals, progress)
    if verify:
        refined = _rk4_observables(rhs, rho0, times, 0.5 * step, diagonals, progress)
        change = float(np.max(np.abs(refined - values), initial=0.0))
        logger.debug(f"Step halving {step} -> {step / 2} changed outputs by {change:.2e}")
        if change > convergence_tol:
            raise ConvergenceError(f"halving step {step} changed outputs by {change:.2e} (> {convergence_tol:.1e})")
        values = refined
    return TimeSeries(times=times, n1=values[:, 0], n2=values[:, 1], n3=values[:, 2], params=params, engine="lindblad-rk4")
