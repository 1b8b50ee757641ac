from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from trimode.util import LEAKAGE_BUDGET, LINDBLAD_STEP, SERIES_TOL

EngineName = Literal["analytic", "coherent", "fock", "lindblad"]
EngineTag = Literal["analytic", "coherent-oracle", "fock-series", "lindblad-rk4"]
Dissipator = Literal["printed", "taylor"]

ENGINE_TAGS: dict[str, str] = {
    "analytic": "analytic",
    "coherent": "coherent-oracle",
    "fock": "fock-series",
    "lindblad": "lindblad-rk4",
}


class SystemParams(BaseModel):
    """The five physical inputs of a scenario: ω, λ, g, γ and α."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    omega: float = Field(gt=0)
    lam: float = Field(default=0.0, alias="lambda")
    g: float = 0.0
    gamma: float = Field(gt=0)
    alpha: complex = 0j

    @field_validator("alpha", mode="before")
    @classmethod
    def _coerce_alpha(cls, value):
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        return complex(value)

    @property
    def omega_plus(self) -> float:
        return self.omega + self.lam

    @property
    def omega_minus(self) -> float:
        return self.omega - self.lam

    @property
    def n_total(self) -> float:
        """Mean excitation of the initial coherent state, |α|²."""
        return abs(self.alpha) ** 2


class SpectralData(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: float
    phi: float
    omega_minus: float
    omega_plus: float
    Omega: float
    Omega2: float

    @property
    def rotated_frequencies(self) -> tuple[float, float, float]:
        """Frequencies of rotated modes 1, 2, 3: (ω₋, Ω₂, Ω)."""
        return (self.omega_minus, self.Omega2, self.Omega)


class FockDims(BaseModel):
    """Per-mode truncation; mode 1 varies slowest in the flat index."""

    model_config = ConfigDict(frozen=True)

    n1: int = Field(ge=1)
    n2: int = Field(ge=1)
    n3: int = Field(ge=1)

    @classmethod
    def of(cls, n1: int, n2: int | None = None, n3: int | None = None) -> "FockDims":
        n2 = n1 if n2 is None else n2
        n3 = n1 if n3 is None else n3
        return cls(n1=n1, n2=n2, n3=n3)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3

    def index(self, n1: int, n2: int, n3: int) -> int:
        return int(np.ravel_multi_index((n1, n2, n3), self.shape))


class CoherentTriple(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta1: complex
    beta2: complex
    beta3: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.beta1, self.beta2, self.beta3], dtype=complex)

    @property
    def n_total(self) -> float:
        return float(np.sum(np.abs(self.as_array()) ** 2))


class SeriesTruncation(BaseModel):
    """Window [k_min, k_max] of the Poisson(γt) series and the mass it drops."""

    model_config = ConfigDict(frozen=True)

    mean: float = Field(ge=0)
    k_max: int = Field(ge=0)
    tail_bound: float = Field(ge=0)
    k_min: int = Field(default=0, ge=0)
    lower_tail: float = Field(default=0.0, ge=0)

    @property
    def terms(self) -> int:
        return self.k_max - self.k_min + 1

    @property
    def dropped_mass(self) -> float:
        return self.tail_bound + self.lower_tail


class TimeSeries(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray
    params: SystemParams
    engine: EngineTag

    @model_validator(mode="after")
    def _equal_lengths(self):
        lengths = {len(self.times), len(self.n1), len(self.n2), len(self.n3)}
        if len(lengths) != 1:
            raise ValueError(f"time series columns have different lengths: {sorted(lengths)}")
        return self

    def columns(self) -> np.ndarray:
        """Occupations stacked as an (n_times, 3) array."""
        return np.column_stack([self.n1, self.n2, self.n3])

    def total(self) -> np.ndarray:
        return self.n1 + self.n2 + self.n3


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    params: SystemParams
    t_max: float = Field(default=30.0, gt=0)
    steps: int = Field(default=1500, ge=2)
    engines: list[EngineName] = Field(default_factory=lambda: ["analytic", "coherent"], min_length=1)
    dims: FockDims | None = None
    series_tol: float = Field(default=SERIES_TOL, gt=0, lt=1)
    leakage_budget: float = Field(default=LEAKAGE_BUDGET, gt=0, lt=1)
    lindblad_step: float = Field(default=LINDBLAD_STEP, gt=0)
    dissipator: Dissipator = "printed"
    out: Path | None = None

    @field_validator("engines")
    @classmethod
    def _unique_engines(cls, value: list[str]) -> list[str]:
        return list(dict.fromkeys(value))

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.steps)


class CheckResult(BaseModel):
    name: str
    passed: bool
    measured: float
    threshold: float
    at_time: float | None = None
    informational: bool = False
    detail: str = ""


class ValidationReport(BaseModel):
    scenario: str
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed and not c.informational]

    def render(self) -> str:
        lines = [f"validation report: {self.scenario}"]
        for c in self.checks:
            status = "info" if c.informational else ("PASS" if c.passed else "FAIL")
            where = f" at t={c.at_time:.6g}" if c.at_time is not None else ""
            lines.append(f"  [{status}] {c.name}: {c.measured:.3e} (threshold {c.threshold:.1e}){where} {c.detail}".rstrip())
        lines.append("PASSED" if self.passed else "FAILED")
        return "\n".join(lines)


class ScenarioResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ScenarioConfig
    series: list[TimeSeries]
    deviations: list[CheckResult] = Field(default_factory=list)
    csv_path: Path | None = None
