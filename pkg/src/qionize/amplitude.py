"""Two-photon momentum-space amplitudes.

The pair amplitude factorizes into a pump envelope over the summed transverse
momenta, per-photon spectral filters, and (for the entangled kind) the
longitudinal phase-matching sinc of the source crystal. The separable
reference amplitude is the identical product with the sinc replaced by 1, so
entangled and separable values coincide pointwise as the crystal length goes
to zero.

All wavenumbers are um^-1, lengths um. Functions broadcast over numpy arrays
and return scalars for scalar input.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .units import DomainError, ExperimentConfig, Reduction, Regime

__all__ = [
    "AmplitudeKind",
    "PhotonMomentum",
    "ReducedPoint",
    "NarrowbandGuardError",
    "sinc",
    "delta_kz_exact",
    "delta_kz_paraxial",
    "pump_envelope",
    "eval_amplitude",
    "eval_reduced",
]

# reduced 2D path requires the filters to be this many times narrower than
# the kinematic scale: Omega * k0 and Omega_y * k0 must both exceed it
NARROWBAND_GUARD = 1.0e3

ArrayLike = Union[float, np.ndarray]


class AmplitudeKind(enum.Enum):
    ENTANGLED = "entangled"
    SEPARABLE = "separable"


class NarrowbandGuardError(DomainError):
    """Filters are too wide for the reduced 2D model to be valid."""


@dataclass(frozen=True)
class PhotonMomentum:
    """One photon's wavevector components (um^-1). Forward propagation only."""

    kx: ArrayLike
    ky: ArrayLike
    kz: ArrayLike

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.kz) < 0.0):
            raise DomainError("PhotonMomentum requires kz >= 0")

    @property
    def magnitude(self) -> ArrayLike:
        return np.sqrt(
            np.asarray(self.kx) ** 2 + np.asarray(self.ky) ** 2 + np.asarray(self.kz) ** 2
        )


@dataclass(frozen=True)
class ReducedPoint:
    """A point (kix, ksx) of the reduced transverse plane."""

    kix: ArrayLike
    ksx: ArrayLike


def _maybe_scalar(value, *inputs):
    if all(np.ndim(arg) == 0 for arg in inputs):
        return float(value)
    return value


def sinc(x: ArrayLike) -> ArrayLike:
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1.

    |x| < 1e-4 uses the Taylor series 1 - x^2/6 + x^4/120, exact to double
    precision in that range; elsewhere the direct quotient.
    """
    arr = np.asarray(x, dtype=float)
    small = np.abs(arr) < 1e-4
    safe = np.where(small, 1.0, arr)
    direct = np.sin(safe) / safe
    series = 1.0 - arr**2 / 6.0 + arr**4 / 120.0
    return _maybe_scalar(np.where(small, series, direct), x)


def delta_kz_exact(kix: ArrayLike, ksx: ArrayLike, k0: float) -> ArrayLike:
    """Longitudinal wavevector mismatch, full square-root dispersion.

    sqrt(4 k0^2 - (kix+ksx)^2) - sqrt(k0^2 - kix^2) - sqrt(k0^2 - ksx^2).
    Requires |kix| <= k0, |ksx| <= k0 and |kix + ksx| < 2 k0. Identically
    zero along kix = ksx for any k0. Symmetric under photon exchange.
    """
    if not k0 > 0.0:
        raise DomainError(f"k0 must be > 0, got {k0!r}")
    kix_arr = np.asarray(kix, dtype=float)
    ksx_arr = np.asarray(ksx, dtype=float)
    if np.any(np.abs(kix_arr) > k0) or np.any(np.abs(ksx_arr) > k0):
        raise DomainError("delta_kz_exact requires |kx| <= k0 for each photon")
    pump = kix_arr + ksx_arr
    if np.any(np.abs(pump) >= 2.0 * k0):
        raise DomainError("delta_kz_exact requires |kix + ksx| < 2 k0")
    # group the per-photon roots so exchange symmetry holds bit for bit
    value = np.sqrt(4.0 * k0**2 - pump**2) - (
        np.sqrt(k0**2 - kix_arr**2) + np.sqrt(k0**2 - ksx_arr**2)
    )
    return _maybe_scalar(value, kix, ksx)


def delta_kz_paraxial(kix: ArrayLike, ksx: ArrayLike, k0: float) -> ArrayLike:
    """Quadratic transverse expansion of the longitudinal mismatch.

    Per-photon terms kx^2/(2 k0) minus the pump term (kix+ksx)^2/(4 k0);
    algebraically (kix - ksx)^2 / (4 k0).
    """
    if not k0 > 0.0:
        raise DomainError(f"k0 must be > 0, got {k0!r}")
    kix_arr = np.asarray(kix, dtype=float)
    ksx_arr = np.asarray(ksx, dtype=float)
    value = (
        kix_arr**2 / (2.0 * k0)
        + ksx_arr**2 / (2.0 * k0)
        - (kix_arr + ksx_arr) ** 2 / (4.0 * k0)
    )
    return _maybe_scalar(value, kix, ksx)


def pump_envelope(
    kpx: ArrayLike, kpy: ArrayLike, omega_p: float, omega_py: float
) -> ArrayLike:
    """Gaussian pump spectrum over summed transverse momenta.

    exp(-omega_p^2 kpx^2 / 2 - omega_py^2 kpy^2 / 2); peak value 1 at the
    origin, 1/e at kpx = sqrt(2)/omega_p.
    """
    if not (omega_p > 0.0 and omega_py > 0.0):
        raise DomainError("pump waists must be > 0")
    value = np.exp(
        -0.5 * (omega_p * np.asarray(kpx, dtype=float)) ** 2
        - 0.5 * (omega_py * np.asarray(kpy, dtype=float)) ** 2
    )
    return _maybe_scalar(value, kpx, kpy)


def _components(photon) -> tuple:
    if isinstance(photon, PhotonMomentum):
        return (
            np.asarray(photon.kx, dtype=float),
            np.asarray(photon.ky, dtype=float),
            np.asarray(photon.kz, dtype=float),
        )
    kx, ky, kz = photon
    return (
        np.asarray(kx, dtype=float),
        np.asarray(ky, dtype=float),
        np.asarray(kz, dtype=float),
    )


def _delta_kz_6d(kix, kiy, kiz, ksx, ksy, ksz, regime: Regime):
    mag_i = np.sqrt(kix**2 + kiy**2 + kiz**2)
    mag_s = np.sqrt(ksx**2 + ksy**2 + ksz**2)
    if regime is Regime.PARAXIAL:
        perp_i = kix**2 + kiy**2
        perp_s = ksx**2 + ksy**2
        perp_pump = (kix + ksx) ** 2 + (kiy + ksy) ** 2
        return (
            perp_i / (2.0 * mag_i)
            + perp_s / (2.0 * mag_s)
            - perp_pump / (2.0 * (mag_i + mag_s))
        )
    arg = (mag_i + mag_s) ** 2 - (kix + ksx) ** 2 - (kiy + ksy) ** 2
    # nonnegative whenever both kz >= 0, by the transverse triangle inequality
    return np.sqrt(np.maximum(arg, 0.0)) - kiz - ksz


def eval_amplitude(ki, ks, cfg: ExperimentConfig, kind: AmplitudeKind) -> ArrayLike:
    """Full six-dimensional pair amplitude at photon momenta ki, ks.

    Product of the pump envelope over (kix+ksx, kiy+ksy), a per-photon
    spectral filter exp(-Omega^2 (|k| - k0)^2 / 2), a per-photon transverse
    filter exp(-Omega_y^2 ky^2 / 2), and, for the entangled kind, the
    phase-matching factor sinc(L * delta_kz / 2) in the configured regime.
    Zero wherever either kz < 0. Accepts PhotonMomentum or (kx, ky, kz)
    triplets of broadcastable arrays.
    """
    if not isinstance(kind, AmplitudeKind):
        raise DomainError(f"kind must be an AmplitudeKind, got {kind!r}")
    kix, kiy, kiz = _components(ki)
    ksx, ksy, ksz = _components(ks)
    k0 = cfg.k0

    forward = (kiz >= 0.0) & (ksz >= 0.0)
    kiz_safe = np.where(forward, kiz, 0.0)
    ksz_safe = np.where(forward, ksz, 0.0)

    mag_i = np.sqrt(kix**2 + kiy**2 + kiz_safe**2)
    mag_s = np.sqrt(ksx**2 + ksy**2 + ksz_safe**2)
    value = pump_envelope(kix + ksx, kiy + ksy, cfg.pump_waist_um, cfg.pump_waist_y)
    value = value * np.exp(-0.5 * (cfg.filter_omega_um * (mag_i - k0)) ** 2)
    value = value * np.exp(-0.5 * (cfg.filter_omega_um * (mag_s - k0)) ** 2)
    value = value * np.exp(-0.5 * (cfg.filter_omega_y_um * kiy) ** 2)
    value = value * np.exp(-0.5 * (cfg.filter_omega_y_um * ksy) ** 2)
    if kind is AmplitudeKind.ENTANGLED:
        mismatch = _delta_kz_6d(kix, kiy, kiz_safe, ksx, ksy, ksz_safe, cfg.regime)
        value = value * sinc(0.5 * cfg.crystal_length_um * mismatch)
    value = np.where(forward, value, 0.0)
    return _maybe_scalar(value, kix, kiy, kiz, ksx, ksy, ksz)


def check_narrowband_guard(cfg: ExperimentConfig) -> None:
    """Raise unless both filters are narrow enough for the reduced model."""
    k0 = cfg.k0
    if cfg.filter_omega_um * k0 <= NARROWBAND_GUARD or cfg.filter_omega_y_um * k0 <= NARROWBAND_GUARD:
        raise NarrowbandGuardError(
            "reduced 2D amplitude requires narrowband filters "
            f"(need filter_omega_um * k0 > {NARROWBAND_GUARD:g} and "
            f"filter_omega_y_um * k0 > {NARROWBAND_GUARD:g}; got "
            f"{cfg.filter_omega_um * k0:.3g} and {cfg.filter_omega_y_um * k0:.3g}); "
            "use the full6d reduction instead"
        )


def eval_reduced(point, cfg: ExperimentConfig, kind: AmplitudeKind) -> ArrayLike:
    """Reduced transverse-plane amplitude at (kix, ksx).

    With both filters narrow, the ky and |k| integrals factor out and the
    amplitude collapses to
    exp(-omega_p^2 (kix+ksx)^2 / 2) * sinc(L * delta_kz / 2)
    on the open square (-k0, k0)^2, the sinc present only for the entangled
    kind, delta_kz chosen by cfg.regime. Accepts a ReducedPoint or a
    (kix, ksx) pair of broadcastable arrays.
    """
    if not isinstance(kind, AmplitudeKind):
        raise DomainError(f"kind must be an AmplitudeKind, got {kind!r}")
    check_narrowband_guard(cfg)
    if isinstance(point, ReducedPoint):
        kix, ksx = point.kix, point.ksx
    else:
        kix, ksx = point
    kix_arr = np.asarray(kix, dtype=float)
    ksx_arr = np.asarray(ksx, dtype=float)
    k0 = cfg.k0
    if np.any(np.abs(kix_arr) >= k0) or np.any(np.abs(ksx_arr) >= k0):
        raise DomainError("eval_reduced requires |kx| < k0 for each photon (open square)")

    value = pump_envelope(kix_arr + ksx_arr, 0.0, cfg.pump_waist_um, cfg.pump_waist_y)
    if kind is AmplitudeKind.ENTANGLED:
        if cfg.regime is Regime.PARAXIAL:
            mismatch = delta_kz_paraxial(kix_arr, ksx_arr, k0)
        else:
            mismatch = delta_kz_exact(kix_arr, ksx_arr, k0)
        value = value * sinc(0.5 * cfg.crystal_length_um * mismatch)
    return _maybe_scalar(value, kix, ksx)


def reduction_for(cfg: ExperimentConfig):
    """The evaluation path the config selects; convenience for dispatchers."""
    return cfg.reduction if isinstance(cfg.reduction, Reduction) else Reduction(cfg.reduction)
