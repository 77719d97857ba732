"""Unit conventions, physical constants, and run configuration.

Every length in this package is micrometers and every wavenumber is inverse
micrometers. Photon energies enter in eV and are converted exactly once, here.
"""

from __future__ import annotations

import dataclasses
import enum
import io
from dataclasses import dataclass
from typing import Optional, Union

# hbar * c in eV um; single source of truth for energy <-> wavenumber
HBAR_C_EV_UM = 0.19732698
# speed of light in um / s, used by the photon flux prefactor
C_UM_PER_S = 2.99792458e14


class ConfigError(ValueError):
    """A configuration value or key is invalid. Message names the field."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


def energy_to_wavenumber(energy_ev: float) -> float:
    """Convert a photon energy in eV to a vacuum wavenumber in um^-1.

    k0 = E / (hbar c). Strictly positive energies only.
    """
    if not energy_ev > 0.0:
        raise DomainError(f"energy_ev must be > 0, got {energy_ev!r}")
    return energy_ev / HBAR_C_EV_UM


class Regime(enum.Enum):
    """Dispersion treatment for the longitudinal mismatch and obliquity."""

    EXACT = "exact"
    PARAXIAL = "paraxial"


class Reduction(enum.Enum):
    """Dimensionality of the evaluation path."""

    REDUCED_2D = "reduced2d"
    FULL_6D = "full6d"


class QuadratureMethod(enum.Enum):
    ADAPTIVE_SUBDIVISION = "adaptive_subdivision"
    TENSOR_GAUSS = "tensor_gauss"


@dataclass(frozen=True)
class QuadratureSpec:
    """Deterministic integration controls shared by all quadrature calls.

    converged results satisfy
    error_estimate <= max(rel_tol * |value|, abs_tol).
    seed only matters for stochastic cross-checks; the quadrature itself is
    deterministic.
    """

    method: QuadratureMethod = QuadratureMethod.TENSOR_GAUSS
    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    max_evals: int = 10_000_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.rel_tol > 0.0:
            raise ConfigError(f"quadrature.rel_tol must be > 0, got {self.rel_tol!r}")
        if not self.abs_tol >= 0.0:
            raise ConfigError(f"quadrature.abs_tol must be >= 0, got {self.abs_tol!r}")
        if int(self.max_evals) < 1:
            raise ConfigError(f"quadrature.max_evals must be >= 1, got {self.max_evals!r}")


# builtin channel energy used when a config does not specify one (eV)
DEFAULT_CHANNEL_ENERGY_EV = 3.753293


@dataclass(frozen=True)
class ExperimentConfig:
    """Pump, crystal, filter, and evaluation settings for one configuration.

    Widths and lengths are um. pump_waist_y_um defaults to pump_waist_um
    (round pump). filter_omega_um is the longitudinal (frequency) filter
    width, filter_omega_y_um the transverse one; both enter as Gaussian
    1/e half-widths in wavenumber 1/Omega.
    """

    pump_waist_um: float = 50.0
    pump_waist_y_um: Optional[float] = None
    crystal_length_um: float = 1.0
    filter_omega_um: float = 4.0e8
    filter_omega_y_um: float = 1.0e7
    channel_energy_ev: float = DEFAULT_CHANNEL_ENERGY_EV
    regime: Regime = Regime.EXACT
    reduction: Reduction = Reduction.REDUCED_2D
    quadrature: QuadratureSpec = QuadratureSpec()

    def __post_init__(self) -> None:
        for field in (
            "pump_waist_um",
            "crystal_length_um",
            "filter_omega_um",
            "filter_omega_y_um",
            "channel_energy_ev",
        ):
            value = getattr(self, field)
            if not (isinstance(value, (int, float)) and value > 0.0):
                raise ConfigError(f"{field} must be a positive number, got {value!r}")
        if self.pump_waist_y_um is not None and not self.pump_waist_y_um > 0.0:
            raise ConfigError(
                f"pump_waist_y_um must be a positive number, got {self.pump_waist_y_um!r}"
            )
        if not isinstance(self.regime, Regime):
            raise ConfigError(f"regime must be a Regime, got {self.regime!r}")
        if not isinstance(self.reduction, Reduction):
            raise ConfigError(f"reduction must be a Reduction, got {self.reduction!r}")
        if not isinstance(self.quadrature, QuadratureSpec):
            raise ConfigError(f"quadrature must be a QuadratureSpec, got {self.quadrature!r}")

    @property
    def pump_waist_y(self) -> float:
        return self.pump_waist_um if self.pump_waist_y_um is None else self.pump_waist_y_um

    @property
    def k0(self) -> float:
        """Central wavenumber of the two-photon resonance, um^-1."""
        return energy_to_wavenumber(self.channel_energy_ev)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# keys accepted by the flat config format, in canonical dump order
_SCALAR_KEYS = (
    "pump_waist_um",
    "pump_waist_y_um",
    "crystal_length_um",
    "filter_omega_um",
    "filter_omega_y_um",
    "channel_energy_ev",
    "regime",
    "reduction",
)
_QUAD_KEYS = ("method", "rel_tol", "abs_tol", "max_evals", "seed")


def _parse_pairs(text: str, source: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _coerce_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def _coerce_int(key: str, value: str) -> int:
    try:
        return int(float(value))
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _coerce_enum(key: str, value: str, enum_cls):
    try:
        return enum_cls(value.strip().lower())
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise ConfigError(f"{key} must be one of {{{allowed}}}, got {value!r}") from None


def load_config(path_or_file: Union[str, "io.TextIOBase"]) -> ExperimentConfig:
    """Read an ExperimentConfig from a flat ``key = value`` file.

    Unknown keys are rejected with the offending name; missing keys fall
    back to the dataclass defaults. Quadrature settings use dotted keys
    (``quadrature.rel_tol`` etc). ``#`` starts a comment.
    """
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
        source = getattr(path_or_file, "name", "<config>")
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
        source = str(path_or_file)

    pairs = _parse_pairs(text, source)

    kwargs = {}
    quad_kwargs = {}
    for key, value in pairs.items():
        if key in ("pump_waist_um", "pump_waist_y_um", "crystal_length_um",
                   "filter_omega_um", "filter_omega_y_um", "channel_energy_ev"):
            kwargs[key] = _coerce_float(key, value)
        elif key == "regime":
            kwargs[key] = _coerce_enum(key, value, Regime)
        elif key == "reduction":
            kwargs[key] = _coerce_enum(key, value, Reduction)
        elif key == "quadrature.method":
            quad_kwargs["method"] = _coerce_enum(key, value, QuadratureMethod)
        elif key == "quadrature.rel_tol":
            quad_kwargs["rel_tol"] = _coerce_float(key, value)
        elif key == "quadrature.abs_tol":
            quad_kwargs["abs_tol"] = _coerce_float(key, value)
        elif key == "quadrature.max_evals":
            quad_kwargs["max_evals"] = _coerce_int(key, value)
        elif key == "quadrature.seed":
            quad_kwargs["seed"] = _coerce_int(key, value)
        else:
            raise ConfigError(f"{source}: unknown config key {key!r}")

    if quad_kwargs:
        kwargs["quadrature"] = QuadratureSpec(**quad_kwargs)
    return ExperimentConfig(**kwargs)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize a config to the flat format accepted by load_config.

    Round-trips: load_config(io.StringIO(dump_config(cfg))) == cfg.
    """
    lines = []
    for key in _SCALAR_KEYS:
        value = getattr(cfg, key)
        if value is None:
            continue
        if isinstance(value, enum.Enum):
            lines.append(f"{key} = {value.value}")
        else:
            lines.append(f"{key} = {value!r}")
    quad = cfg.quadrature
    lines.append(f"quadrature.method = {quad.method.value}")
    lines.append(f"quadrature.rel_tol = {quad.rel_tol!r}")
    lines.append(f"quadrature.abs_tol = {quad.abs_tol!r}")
    lines.append(f"quadrature.max_evals = {quad.max_evals!r}")
    lines.append(f"quadrature.seed = {quad.seed!r}")
    return "\n".join(lines) + "\n"
