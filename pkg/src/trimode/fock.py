"""Dense operators and states on a truncated three-mode Fock space.

Flat index layout is row-major over (n1, n2, n3): mode 1 slowest, mode 3
fastest, i.e. every operator is a Kronecker product in mode order 1 ⊗ 2 ⊗ 3.
"""
from functools import reduce

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import gammaln
from scipy.stats import poisson

from trimode.errors import DimensionError, TruncationError
from trimode.models import FockDims, SystemParams
from trimode.spectral import single_particle_matrix
from trimode.util import LEAKAGE_BUDGET, logger

HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-10
TRACE_SLACK = 1e-10


class FockState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: FockDims
    amplitudes: np.ndarray
    leakage: float = 0.0

    @model_validator(mode="after")
    def _check(self):
        if self.amplitudes.shape != (self.dims.size,):
            raise DimensionError(f"state of shape {self.amplitudes.shape} does not fit dims {self.dims.shape}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("state amplitudes must be finite")
        return self

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


class FockOperator(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: FockDims
    matrix: np.ndarray

    @model_validator(mode="after")
    def _check(self):
        side = self.dims.size
        if self.matrix.shape != (side, side):
            raise DimensionError(f"operator of shape {self.matrix.shape} does not fit dims {self.dims.shape}")
        return self

    def dag(self) -> "FockOperator":
        return FockOperator(dims=self.dims, matrix=self.matrix.conj().T)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        _same_dims(self.dims, other.dims)
        return FockOperator(dims=self.dims, matrix=self.matrix @ other.matrix)

    def commutator(self, other: "FockOperator") -> "FockOperator":
        _same_dims(self.dims, other.dims)
        return FockOperator(dims=self.dims, matrix=self.matrix @ other.matrix - other.matrix @ self.matrix)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)


class DensityMatrix(BaseModel):
    """Hermitian operator with unit trace up to truncation leakage."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: FockDims
    matrix: np.ndarray

    @model_validator(mode="after")
    def _check(self):
        side = self.dims.size
        if self.matrix.shape != (side, side):
            raise DimensionError(f"density matrix of shape {self.matrix.shape} does not fit dims {self.dims.shape}")
        asymmetry = np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0)
        if asymmetry > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (max deviation {asymmetry:.2e})")
        trace = float(np.trace(self.matrix).real)
        if trace > 1.0 + TRACE_SLACK:
            raise ValueError(f"density matrix trace {trace:.12f} exceeds one")
        lowest = self.min_eigenvalue()
        if lowest < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lowest:.2e}")
        return self

    @classmethod
    def from_state(cls, state: FockState) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(dims=state.dims, matrix=np.outer(psi, psi.conj()))

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        # tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ
        return float(np.sum(np.abs(self.matrix) ** 2))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def check_physical(self, leakage: float) -> "DensityMatrix":
        """Raise unless the trace lies within `leakage` of one."""
        trace = self.trace()
        if trace < 1.0 - leakage - TRACE_SLACK:
            raise ValueError(f"density matrix trace {trace:.12f} lost more than {leakage:.1e}")
        return self


def _same_dims(a: FockDims, b: FockDims):
    if a != b:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _check_mode(mode: int):
    if mode not in (1, 2, 3):
        raise DimensionError(f"mode must be 1, 2 or 3, got {mode}")


def _lowering(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1)


def _embed(dims: FockDims, factors: dict[int, np.ndarray]) -> np.ndarray:
    """Kronecker product with `factors[mode]` on the given modes and identities elsewhere."""
    blocks = [factors.get(mode, np.eye(n)) for mode, n in zip((1, 2, 3), dims.shape)]
    return reduce(np.kron, blocks)


def annihilation(dims: FockDims, mode: int) -> FockOperator:
    _check_mode(mode)
    n = dims.shape[mode - 1]
    return FockOperator(dims=dims, matrix=_embed(dims, {mode: _lowering(n)}).astype(complex))


def creation(dims: FockDims, mode: int) -> FockOperator:
    return annihilation(dims, mode).dag()


def number_operator(dims: FockDims, mode: int) -> FockOperator:
    _check_mode(mode)
    n = dims.shape[mode - 1]
    return FockOperator(dims=dims, matrix=_embed(dims, {mode: np.diag(np.arange(n, dtype=float))}).astype(complex))


def total_number_operator(dims: FockDims) -> FockOperator:
    levels = np.add.outer(np.add.outer(np.arange(dims.n1), np.arange(dims.n2)), np.arange(dims.n3))
    return FockOperator(dims=dims, matrix=np.diag(levels.ravel().astype(complex)))


def vacuum(dims: FockDims) -> FockState:
    psi = np.zeros(dims.size, dtype=complex)
    psi[0] = 1.0
    return FockState(dims=dims, amplitudes=psi)


def coherent_tail(alpha: complex, n: int) -> float:
    """Probability mass of |α⟩ on levels ≥ n."""
    mean = abs(alpha) ** 2
    if mean == 0.0:
        return 0.0
    return float(poisson.sf(n - 1, mean))


def required_dimension(alpha: complex, budget: float = LEAKAGE_BUDGET) -> int:
    """Smallest single-mode cutoff whose coherent tail mass is within budget."""
    mean = abs(alpha) ** 2
    if mean == 0.0:
        return 1
    n = max(int(poisson.isf(budget, mean)), 1)
    while n > 1 and coherent_tail(alpha, n - 1) <= budget:
        n -= 1
    while coherent_tail(alpha, n) > budget:
        n += 1
    return n


def coherent_state(dims: FockDims, mode: int, alpha: complex, leakage_budget: float = LEAKAGE_BUDGET) -> FockState:
    """|α⟩ on `mode`, vacuum elsewhere, truncated without renormalization."""
    _check_mode(mode)
    n = dims.shape[mode - 1]
    leakage = coherent_tail(alpha, n)
    if leakage > leakage_budget:
        raise TruncationError(
            f"coherent state alpha={alpha} on mode {mode} leaks {leakage:.2e} above cutoff {n} "
            f"(budget {leakage_budget:.1e})",
            required_dim=required_dimension(alpha, leakage_budget),
        )
    if leakage > 0.1 * leakage_budget:
        logger.warning(f"Coherent state leakage {leakage:.2e} is within 10x of the budget {leakage_budget:.1e}")

    levels = np.arange(n)
    if alpha == 0:
        single = (levels == 0).astype(complex)
    else:
        log_modulus = -0.5 * abs(alpha) ** 2 + levels * np.log(abs(alpha)) - 0.5 * gammaln(levels + 1)
        single = np.exp(log_modulus + 1j * levels * np.angle(alpha))

    factors = [np.eye(1, m, dtype=complex).ravel() for m in dims.shape]
    factors[mode - 1] = single
    amplitudes = reduce(np.kron, factors)
    return FockState(dims=dims, amplitudes=amplitudes, leakage=leakage)


def hamiltonian_fock(params: SystemParams, dims: FockDims) -> FockOperator:
    """H = Σ_ij M_ij a_i† a_j assembled from Kronecker factors."""
    coupling = single_particle_matrix(params)
    lowers = [_lowering(n) for n in dims.shape]
    matrix = np.zeros((dims.size, dims.size))
    for i in range(3):
        for j in range(3):
            if coupling[i, j] == 0.0:
                continue
            if i == j:
                factors = {i + 1: lowers[i].T @ lowers[i]}
            else:
                factors = {i + 1: lowers[i].T, j + 1: lowers[j]}
            matrix += coupling[i, j] * _embed(dims, factors)
    logger.debug(f"Assembled Hamiltonian on {dims.shape} (dimension {dims.size})")
    return FockOperator(dims=dims, matrix=matrix.astype(complex))


def expectation(state_or_density: FockState | DensityMatrix, observable: FockOperator) -> float:
    """⟨ψ|A|ψ⟩ or tr(ρA), real part; the state is not renormalized."""
    _same_dims(state_or_density.dims, observable.dims)
    if isinstance(state_or_density, FockState):
        psi = state_or_density.amplitudes
        value = np.vdot(psi, observable.matrix @ psi)
    else:
        value = np.einsum("ij,ji->", state_or_density.matrix, observable.matrix)
    if abs(value.imag) > HERMITIAN_TOL * max(1.0, abs(value.real)):
        logger.debug(f"Expectation value has imaginary residue {value.imag:.2e}")
    return float(value.real)
