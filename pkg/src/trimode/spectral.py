"""Normal-mode diagonalization of the three-mode Hamiltonian.

H = ω Σ a_j†a_j + λ(a₁†a₂ + a₂†a₁) + g[a₃(a₁† + a₂†) + a₃†(a₁ + a₂)]

A π/4 beam splitter on modes 1, 2 isolates the antisymmetric mode (ω₋ = ω − λ);
a second rotation by φ decouples the symmetric mode from mode 3, leaving the
pair Ω ≤ Ω₂.
"""
import numpy as np

from trimode.errors import DimensionError
from trimode.models import SpectralData, SystemParams

THETA = np.pi / 4


def mixing_angle(params: SystemParams) -> float:
    """Second rotation angle φ, with 2φ = atan2(2√2 g, ω₊ − ω).

    The two-argument arctangent keeps λ = 0 well defined (φ = ±π/4) and puts
    the larger root on rotated mode 2 for every sign of λ and g.
    """
    return 0.5 * float(np.arctan2(2.0 * np.sqrt(2.0) * params.g, params.omega_plus - params.omega))


def effective_frequencies(params: SystemParams) -> SpectralData:
    centre = 0.5 * (params.omega_plus + params.omega)
    half_split = 0.5 * np.hypot(2.0 * np.sqrt(2.0) * params.g, params.omega_plus - params.omega)
    return SpectralData(
        theta=THETA,
        phi=mixing_angle(params),
        omega_minus=params.omega_minus,
        omega_plus=params.omega_plus,
        Omega=float(centre - half_split),
        Omega2=float(centre + half_split),
    )


def single_particle_matrix(params: SystemParams) -> np.ndarray:
    """Coupling matrix M with H = Σ M_ij a_i† a_j."""
    w, lam, g = params.omega, params.lam, params.g
    return np.array(
        [
            [w, lam, g],
            [lam, w, g],
            [g, g, w],
        ],
        dtype=float,
    )


def rotation_images(phi: float, theta: float = THETA) -> np.ndarray:
    """Orthogonal O whose rows are the rotated modes in the original basis.

    Row order is (ω₋, Ω₂, Ω), so Oᵀ diag(ω₋, Ω₂, Ω) O = M and the rotated
    amplitudes of a state with original amplitudes β are O β.
    """
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    return np.array(
        [
            [ct, -st, 0.0],
            [cp * st, cp * ct, sp],
            [-sp * st, -sp * ct, cp],
        ]
    )


def transformed_number_operator(phi: float, mode: int) -> np.ndarray:
    """Coefficients C of a_j†a_j = Σ_mn C[m, n] b_m† b_n in the rotated frame.

    Mode 3 gives sin²φ b₂†b₂ + cos²φ b₃†b₃ + sinφ cosφ (b₂†b₃ + b₃†b₂); modes 1
    and 2 carry the ½-weighted Hermitian cross terms with b₁.
    """
    if mode not in (1, 2, 3):
        raise DimensionError(f"mode must be 1, 2 or 3, got {mode}")
    column = rotation_images(phi)[:, mode - 1]
    return np.outer(column, column)


def symmetric_block(params: SystemParams) -> np.ndarray:
    """The symmetric-mode/mode-3 block left after the first rotation."""
    b = np.sqrt(2.0) * params.g
    return np.array([[params.omega_plus, b], [b, params.omega]])


def decoupling_residual(params: SystemParams) -> float:
    """Off-diagonal entry of the symmetric block after rotating by φ."""
    phi = mixing_angle(params)
    c, s = np.cos(phi), np.sin(phi)
    rotation = np.array([[c, s], [-s, c]])
    rotated = rotation @ symmetric_block(params) @ rotation.T
    return float(rotated[0, 1])
