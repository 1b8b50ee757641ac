"""Closed-form mean photon numbers under intrinsic decoherence.

Mode 1 starts in |α⟩, modes 2 and 3 in vacuum. In the rotated frame the state
factorizes into coherent states of frequencies (ω₋, Ω₂, Ω); each Milburn kick
is a unitary step of length 1/γ, so per-kick occupations are cosines of
k·Δ/γ and the Poisson sum over kicks turns every cosine into a damping factor

    f(Δ, t) = e^{-γt} [exp(γt e^{iΔ/γ}) + exp(γt e^{-iΔ/γ})]
            = 2 exp(γt (cos(Δ/γ) - 1)) cos(γt sin(Δ/γ)).
"""
import numpy as np

from trimode.models import CoherentTriple, SpectralData, SystemParams, TimeSeries
from trimode.spectral import effective_frequencies, rotation_images

STEADY_STATE_EXPONENT = 50.0
# |sin(Δ/2γ)| below this counts as a non-decaying beat
STATIONARY_SINE = 1e-9


def rotated_initial_amplitudes(params: SystemParams, spec: SpectralData) -> CoherentTriple:
    alpha = params.alpha
    return CoherentTriple(
        beta1=alpha * np.cos(spec.theta),
        beta2=alpha * np.cos(spec.phi) * np.sin(spec.theta),
        beta3=-alpha * np.sin(spec.phi) * np.sin(spec.theta),
    )


def damping_factor(delta: float, gamma: float, t):
    """Real form of the Poisson-resummed cosine; equals 2 at t = 0 and |f| ≤ 2."""
    x = delta / gamma
    # cos(x) - 1 written as -2 sin²(x/2) to keep small-x precision
    exponent = -2.0 * gamma * np.asarray(t, dtype=float) * np.sin(0.5 * x) ** 2
    return 2.0 * np.exp(exponent) * np.cos(gamma * np.asarray(t, dtype=float) * np.sin(x))


def beat_differences(spec: SpectralData) -> tuple[float, float, float]:
    """(Ω − Ω₂, ω₋ − Ω₂, ω₋ − Ω)."""
    return (spec.Omega - spec.Omega2, spec.omega_minus - spec.Omega2, spec.omega_minus - spec.Omega)


def _trig(spec: SpectralData) -> tuple[float, float, float]:
    c2 = np.cos(spec.phi) ** 2
    s2 = np.sin(spec.phi) ** 2
    return c2, s2, c2 * s2


def mean_n3(params: SystemParams, spec: SpectralData, t):
    _, _, c2s2 = _trig(spec)
    d_sym, _, _ = beat_differences(spec)
    return params.n_total * c2s2 * (1.0 - 0.5 * damping_factor(d_sym, params.gamma, t))


def _modes_12(params: SystemParams, spec: SpectralData, t, sign: float):
    c2, s2, c2s2 = _trig(spec)
    d_sym, d_minus_2, d_minus_3 = beat_differences(spec)
    gamma = params.gamma
    bracket = (
        1.0
        + 0.25 * (3.0 + np.cos(4.0 * spec.phi))
        + damping_factor(d_sym, gamma, t) * c2s2
        + sign * damping_factor(d_minus_2, gamma, t) * c2
        + sign * damping_factor(d_minus_3, gamma, t) * s2
    )
    return 0.25 * params.n_total * bracket


def mean_n1(params: SystemParams, spec: SpectralData, t):
    return _modes_12(params, spec, t, +1.0)


def mean_n2(params: SystemParams, spec: SpectralData, t):
    return _modes_12(params, spec, t, -1.0)


def per_k_expectations(params: SystemParams, spec: SpectralData, k: int) -> tuple[float, float, float]:
    """⟨ψ_k|a_j†a_j|ψ_k⟩ after k unitary kicks of length 1/γ."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    c2, s2, c2s2 = _trig(spec)
    d_sym, d_minus_2, d_minus_3 = (k * d / params.gamma for d in beat_differences(spec))
    n = params.n_total
    common = 1.0 + (c2 * c2 + s2 * s2) + 2.0 * c2s2 * np.cos(d_sym)
    exchange = 2.0 * c2 * np.cos(d_minus_2) + 2.0 * s2 * np.cos(d_minus_3)
    n1 = 0.25 * n * (common + exchange)
    n2 = 0.25 * n * (common - exchange)
    n3 = n * c2s2 * (1.0 - np.cos(d_sym))
    return float(n1), float(n2), float(n3)


def per_k_amplitudes(params: SystemParams, spec: SpectralData, k: int) -> np.ndarray:
    """Original-frame coherent amplitudes of |ψ_k⟩.

    Rotated modes carry (ω₋, Ω₂, Ω) in the order of the diagonal Hamiltonian;
    the kick phases are applied there and rotated back with Oᵀ.
    """
    rotated = rotated_initial_amplitudes(params, spec).as_array()
    phases = np.exp(-1j * k * np.array(spec.rotated_frequencies) / params.gamma)
    return rotation_images(spec.phi, spec.theta).T @ (phases * rotated)


def mean_photon_numbers(params: SystemParams, times) -> TimeSeries:
    spec = effective_frequencies(params)
    times = np.asarray(times, dtype=float)
    return TimeSeries(
        times=times,
        n1=np.asarray(mean_n1(params, spec, times), dtype=float),
        n2=np.asarray(mean_n2(params, spec, times), dtype=float),
        n3=np.asarray(mean_n3(params, spec, times), dtype=float),
        params=params,
        engine="analytic",
    )


def _is_stationary(delta: float, gamma: float) -> bool:
    return abs(np.sin(0.5 * delta / gamma)) < STATIONARY_SINE


def damping_rates(params: SystemParams, spec: SpectralData | None = None) -> tuple[float, float, float]:
    """Envelope decay rates γ(1 − cos(Δ/γ)) of the three beats."""
    spec = spec or effective_frequencies(params)
    gamma = params.gamma
    return tuple(float(2.0 * gamma * np.sin(0.5 * d / gamma) ** 2) for d in beat_differences(spec))


def mode1_damping_rate(params: SystemParams) -> float:
    """Mean decay rate of the mode-1 beats weighted by their amplitudes."""
    spec = effective_frequencies(params)
    c2, s2, c2s2 = _trig(spec)
    weights = np.array([c2s2, c2, s2])
    return float(weights @ np.array(damping_rates(params, spec)) / weights.sum())


def asymptotes(params: SystemParams) -> tuple[float, float, float]:
    """Long-time limits: decaying beats drop out, stationary ones keep f = 2."""
    spec = effective_frequencies(params)
    c2, s2, c2s2 = _trig(spec)
    f_sym, f_2, f_3 = (2.0 if _is_stationary(d, params.gamma) else 0.0 for d in beat_differences(spec))
    n = params.n_total
    common = 1.0 + 0.25 * (3.0 + np.cos(4.0 * spec.phi)) + f_sym * c2s2
    exchange = f_2 * c2 + f_3 * s2
    return (
        float(0.25 * n * (common + exchange)),
        float(0.25 * n * (common - exchange)),
        float(n * c2s2 * (1.0 - 0.5 * f_sym)),
    )


def steady_state_time(params: SystemParams) -> float:
    """Time at which every decaying envelope is below e^-50; 0 when nothing decays."""
    spec = effective_frequencies(params)
    rates = [
        rate
        for rate, delta in zip(damping_rates(params, spec), beat_differences(spec))
        if not _is_stationary(delta, params.gamma)
    ]
    if not rates:
        return 0.0
    return STEADY_STATE_EXPONENT / min(rates)


def smallest_beat(params: SystemParams) -> float | None:
    """Smallest non-stationary |Δ|, or None when all beats are stationary."""
    spec = effective_frequencies(params)
    deltas = [abs(d) for d in beat_differences(spec) if not _is_stationary(d, params.gamma)]
    return min(deltas) if deltas else None
