"""Photon-number statistics of a pulsed sub-Poissonian source.

The source is summarized by its mean photon number per pulse and the pulsed
second-order correlation at zero delay.  From those two numbers the module
derives a worst-case multi-photon probability and a truncated {0, 1, 2}
photon-number distribution that conserves the mean, which is what the
Monte Carlo engine samples from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "SourceParams",
    "PhotonNumberDist",
    "multi_photon_bound",
    "photon_number_distribution",
    "coherence_length",
]

# Largest mean photon number for which the truncated two-photon expansion is
# accepted; beyond this the O(mu^3) tail is no longer negligible.
MU_LINEAR_LIMIT = 0.1


@dataclass(frozen=True)
class SourceParams:
    """Operating parameters of the pulsed single-photon source.

    mu            -- mean photon number per pulse (dimensionless)
    g2_pulsed     -- pulsed second-order correlation at zero delay
    rep_rate_hz   -- pulse repetition rate in Hz
    wavelength_nm -- emission center wavelength in nm
    fwhm_nm       -- spectral full width at half maximum in nm
    """

    mu: float
    g2_pulsed: float
    rep_rate_hz: float = 80e6
    wavelength_nm: float = 1305.4
    fwhm_nm: float = 8.96

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise DomainError(f"mean photon number must be >= 0, got {self.mu}")
        if self.g2_pulsed < 0:
            raise DomainError(f"g2_pulsed must be >= 0, got {self.g2_pulsed}")
        if self.rep_rate_hz <= 0:
            raise DomainError(f"repetition rate must be > 0, got {self.rep_rate_hz}")
        if self.wavelength_nm <= 0 or self.fwhm_nm <= 0:
            raise DomainError("wavelength and FWHM must be > 0")


@dataclass(frozen=True)
class PhotonNumberDist:
    """Per-pulse probabilities of emitting 0, 1 and >=2 photons."""

    p0: float
    p1: float
    p2: float

    def __post_init__(self) -> None:
        for name, p in (("p0", self.p0), ("p1", self.p1), ("p2", self.p2)):
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"{name} = {p} is not a probability")
        if abs(self.p0 + self.p1 + self.p2 - 1.0) > 1e-12:
            raise DomainError("photon-number probabilities do not sum to 1")


def multi_photon_bound(mu: float, g2_pulsed: float) -> float:
    """Worst-case probability of a multi-photon pulse, mu^2 * g2 / 2."""
    if mu < 0 or g2_pulsed < 0:
        raise DomainError("mu and g2_pulsed must be non-negative")
    return 0.5 * mu * mu * g2_pulsed


def photon_number_distribution(params: SourceParams) -> PhotonNumberDist:
    """Truncated photon-number distribution saturating the multi-photon bound.

    The two-photon probability is set to the full bound (the conservative
    choice for security), the single-photon probability is chosen so that
    p1 + 2*p2 equals the configured mean exactly, and the remainder is vacuum.
    Only valid in the linear regime mu < MU_LINEAR_LIMIT.
    """
    if params.mu >= MU_LINEAR_LIMIT:
        raise DomainError(
            f"mu = {params.mu} is outside the linear regime (requires mu < {MU_LINEAR_LIMIT})"
        )
    p2 = multi_photon_bound(params.mu, params.g2_pulsed)
    p1 = params.mu - 2.0 * p2
    if p1 < 0:
        raise DomainError(
            "mu - 2 * multi_photon_bound < 0: the multi-photon bound "
            f"mu^2*g2/2 = {p2} exceeds half the mean photon number"
        )
    p0 = 1.0 - p1 - p2
    return PhotonNumberDist(p0=p0, p1=p1, p2=p2)


def coherence_length(wavelength_nm: float, fwhm_nm: float) -> float:
    """Coherence length in micrometers for a Lorentzian line shape.

    Returns wavelength^2 / (pi * fwhm).  Real spectra of room-temperature
    emitters deviate from a pure Lorentzian, so treat this as an estimate;
    interference envelopes should be calibrated against measured visibility
    points instead (see the optics module).
    """
    if wavelength_nm <= 0 or fwhm_nm <= 0:
        raise DomainError("wavelength and FWHM must be > 0")
    return wavelength_nm * wavelength_nm / (math.pi * fwhm_nm) / 1000.0
