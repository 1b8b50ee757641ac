import itertools

import numpy as np
from tqdm import tqdm

from trimode import analytic, evolve
from trimode.errors import ConfigError, TruncationError
from trimode.fock import coherent_tail, required_dimension
from trimode.models import (
    CheckResult,
    FockDims,
    ScenarioConfig,
    ScenarioResult,
    SpectralData,
    SystemParams,
    TimeSeries,
    ValidationReport,
)
from trimode.spectral import decoupling_residual, effective_frequencies, single_particle_matrix
from trimode.tools.csv_io import write_csv
from trimode.util import MAX_FOCK_DIM, OUTPUT_DIR, logger

PRESET_COUPLINGS = {"a": 0.1, "b": 0.5, "c": 1.0}
PRESET_RATES = {"fig1": 10.0, "fig2": 100.0}

ANALYTIC_TOL = 1e-12
COHERENT_TOL = 1e-8
FOCK_TOL = 1e-6
LINDBLAD_TOL = 5e-3
SPECTRAL_TOL = 1e-10
BOUNDS_SLACK = 1e-10
FAULT_OFFSET = 0.05

CONSERVATION_TOLS = {
    "analytic": ANALYTIC_TOL,
    "coherent-oracle": COHERENT_TOL,
    "fock-series": FOCK_TOL,
    "lindblad-rk4": FOCK_TOL,
}


def presets() -> list[ScenarioConfig]:
    """The six reference scenarios: ω = 4, λ = 0.5, α = 4, g ∈ {0.1, 0.5, 1}, γ ∈ {10, 100}."""
    configs = []
    for (figure, gamma), (panel, g) in itertools.product(PRESET_RATES.items(), PRESET_COUPLINGS.items()):
        params = SystemParams(omega=4.0, lam=0.5, g=g, gamma=gamma, alpha=4.0)
        configs.append(ScenarioConfig(name=f"{figure}{panel}", params=params, t_max=30.0, steps=1500))
    return configs


def preset(name: str) -> ScenarioConfig:
    for config in presets():
        if config.name == name:
            return config
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(c.name for c in presets())}")


def resolve_dims(config: ScenarioConfig) -> FockDims:
    """Fock cutoff for the dense engines, bounded by MAX_FOCK_DIM states."""
    if config.dims is not None:
        if config.dims.size > MAX_FOCK_DIM:
            raise ConfigError(f"dims {config.dims.shape} give {config.dims.size} states, above the limit of {MAX_FOCK_DIM}")
        return config.dims
    n = required_dimension(config.params.alpha, config.leakage_budget)
    dims = FockDims.of(n)
    if dims.size > MAX_FOCK_DIM:
        raise TruncationError(
            f"alpha={config.params.alpha} needs dims {dims.shape} ({dims.size} states) for leakage "
            f"{config.leakage_budget:.1e}, above the limit of {MAX_FOCK_DIM}; pass dims with a looser leakage budget",
            required_dim=n,
        )
    logger.info(f"No dims given; using {dims.shape} to keep coherent leakage within {config.leakage_budget:.1e}")
    return dims


def _run_engine(
    engine: str,
    config: ScenarioConfig,
    times: np.ndarray,
    spec: SpectralData | None = None,
    progress: bool = False,
) -> TimeSeries:
    params = config.params
    if engine == "analytic":
        if spec is None:
            return analytic.mean_photon_numbers(params, times)
        return TimeSeries(
            times=times,
            n1=np.asarray(analytic.mean_n1(params, spec, times)),
            n2=np.asarray(analytic.mean_n2(params, spec, times)),
            n3=np.asarray(analytic.mean_n3(params, spec, times)),
            params=params,
            engine="analytic",
        )
    if engine == "coherent":
        return evolve.coherent_series(params, times, config.series_tol, progress)
    if engine == "fock":
        return evolve.fock_series(params, resolve_dims(config), times, config.series_tol, config.leakage_budget, progress)
    if engine == "lindblad":
        return evolve.integrate_lindblad(
            params,
            resolve_dims(config),
            times,
            step=config.lindblad_step,
            dissipator=config.dissipator,
            leakage_budget=config.leakage_budget,
            progress=progress,
        )
    raise ConfigError(f"unknown engine {engine!r}")


def _truncated_total(config: ScenarioConfig) -> float:
    """⟨N⟩ of the truncated initial coherent state: |α|² P(X ≤ n1 − 2)."""
    n1 = resolve_dims(config).n1
    return config.params.n_total * (1.0 - coherent_tail(config.params.alpha, n1 - 1))


def _pair_threshold(config: ScenarioConfig, a: str, b: str) -> tuple[float, bool]:
    """Agreement threshold for an engine pair and whether it is informational only."""
    pair = {a, b}
    if "lindblad-rk4" in pair:
        return LINDBLAD_TOL, True
    if "fock-series" in pair:
        return FOCK_TOL + (config.params.n_total - _truncated_total(config)), False
    return COHERENT_TOL, False


def pairwise_deviations(config: ScenarioConfig, series: list[TimeSeries]) -> list[CheckResult]:
    checks = []
    for a, b in itertools.combinations(series, 2):
        gap = np.abs(a.columns() - b.columns())
        row = int(np.unravel_index(np.argmax(gap), gap.shape)[0])
        measured = float(gap.max())
        threshold, informational = _pair_threshold(config, a.engine, b.engine)
        checks.append(
            CheckResult(
                name=f"engine_equivalence[{a.engine}~{b.engine}]",
                passed=measured <= threshold,
                measured=measured,
                threshold=threshold,
                at_time=float(a.times[row]),
                informational=informational,
            )
        )
    return checks


def run_scenario(config: ScenarioConfig, progress: bool = True) -> ScenarioResult:
    times = config.times()
    series = []
    for engine in tqdm(config.engines, desc="engines", disable=not progress):
        logger.info(f"Running {engine} engine for {config.name} on {len(times)} points")
        series.append(_run_engine(engine, config, times, progress=progress))
    series.sort(key=lambda s: s.engine)

    deviations = pairwise_deviations(config, series)
    for check in deviations:
        if not check.passed and not check.informational:
            logger.warning(f"{check.name}: deviation {check.measured:.3e} above {check.threshold:.1e} at t={check.at_time}")

    csv_path = None
    if config.out is not None:
        csv_path = config.out if config.out.is_absolute() else OUTPUT_DIR / config.out
        write_csv(series, csv_path)
        logger.info(f"Wrote {csv_path}")
    return ScenarioResult(config=config, series=series, deviations=deviations, csv_path=csv_path)


def _spectral_checks(params: SystemParams, spec: SpectralData) -> list[CheckResult]:
    eigenvalues = np.linalg.eigvalsh(single_particle_matrix(params))
    ours = np.sort([spec.omega_minus, spec.Omega, spec.Omega2])
    sum_rule = abs(spec.Omega + spec.Omega2 - (params.omega_plus + params.omega))
    product_rule = abs(spec.Omega * spec.Omega2 - (params.omega * params.omega_plus - 2.0 * params.g**2))
    eigen_gap = float(np.max(np.abs(ours - eigenvalues)))
    residual = abs(decoupling_residual(params))
    return [
        CheckResult(name="spectral_eigenvalues", passed=eigen_gap <= SPECTRAL_TOL, measured=eigen_gap, threshold=SPECTRAL_TOL),
        CheckResult(name="spectral_sum_rule", passed=sum_rule <= SPECTRAL_TOL, measured=sum_rule, threshold=SPECTRAL_TOL),
        CheckResult(name="spectral_product_rule", passed=product_rule <= SPECTRAL_TOL, measured=product_rule, threshold=SPECTRAL_TOL),
        CheckResult(name="decoupling_residual", passed=residual <= SPECTRAL_TOL, measured=residual, threshold=SPECTRAL_TOL),
    ]


def _series_checks(config: ScenarioConfig, series: TimeSeries) -> list[CheckResult]:
    n_total = config.params.n_total
    exact = series.engine in ("analytic", "coherent-oracle")
    reference = n_total if exact else _truncated_total(config)
    drift = np.abs(series.total() - reference)
    row = int(np.argmax(drift))
    tol = CONSERVATION_TOLS[series.engine]

    values = series.columns()
    below = max(0.0, -float(values.min()))
    above = max(0.0, float(values.max()) - n_total)
    excess = max(below, above)
    return [
        CheckResult(
            name=f"conservation[{series.engine}]",
            passed=float(drift[row]) <= tol,
            measured=float(drift[row]),
            threshold=tol,
            at_time=float(series.times[row]),
        ),
        CheckResult(name=f"bounds[{series.engine}]", passed=excess <= BOUNDS_SLACK, measured=excess, threshold=BOUNDS_SLACK),
    ]


def validate(config: ScenarioConfig, fault_injection: bool = False, progress: bool = False) -> ValidationReport:
    """Engine-equivalence and invariant checks; failures are report content."""
    params = config.params
    spec = effective_frequencies(params)
    if fault_injection:
        spec = spec.model_copy(update={"Omega": spec.Omega + FAULT_OFFSET})
        logger.warning(f"Fault injection: analytic engine uses Omega={spec.Omega}")

    report = ValidationReport(scenario=config.name)
    report.checks.extend(_spectral_checks(params, spec))

    times = config.times()
    series = [_run_engine(engine, config, times, spec=spec, progress=progress) for engine in config.engines]
    series.sort(key=lambda s: s.engine)

    for s in series:
        if s.engine == "analytic":
            initial = np.abs(s.columns()[0] - np.array([params.n_total, 0.0, 0.0])).max()
            report.checks.append(
                CheckResult(name="initial_condition", passed=initial <= ANALYTIC_TOL, measured=float(initial), threshold=ANALYTIC_TOL, at_time=0.0)
            )
        report.checks.extend(_series_checks(config, s))
    report.checks.extend(pairwise_deviations(config, series))

    logger.info(f"Validation of {config.name}: {'passed' if report.passed else 'failed'} ({len(report.failures())} failures)")
    return report


def oscillation_amplitude(series: TimeSeries, t: float, mode: int = 1) -> float:
    """√2 × RMS of ⟨n_mode⟩ about its asymptote over one slowest beat period centred on t."""
    asymptote = analytic.asymptotes(series.params)[mode - 1]
    values = series.columns()[:, mode - 1] - asymptote
    beat = analytic.smallest_beat(series.params)
    if beat is None:
        return float(np.abs(values).max(initial=0.0))
    half_width = np.pi / beat
    mask = np.abs(series.times - t) <= half_width
    if not mask.any():
        raise ValueError(f"no samples within {half_width:.3g} of t={t}")
    return float(np.sqrt(2.0 * np.mean(values[mask] ** 2)))
