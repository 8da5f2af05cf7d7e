"""Fiber link and detector model, plus the closed-form gain/QBER oracle.

Gains are linearized (Q = mu * t * eta + noise) which is accurate to well
below sampling noise for the per-pulse means used here; a guard refuses
parameter sets where the linearization would not hold.  The same composition
is used by the Monte Carlo engine's statistical acceptance checks, so the
two must stay in sync.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .optics import OpticsParams, effective_phase_error
from .source import SourceParams

__all__ = [
    "ChannelParams",
    "DetectorParams",
    "BasisRates",
    "transmittance",
    "noise_prob_per_gate",
    "expected_gain",
    "expected_qber",
    "expected_basis_rates",
    "PHASE_CONCLUSIVE_FRACTION",
    "NOISE_CHANNELS_PER_BASIS",
]

# Middle-slot weight of the phase readout (see optics module).
PHASE_CONCLUSIVE_FRACTION = 0.5
# Both time bins (Z) or both conclusive-slot detectors (X/Y) accumulate noise;
# noise falling in discarded satellite slots is filtered out by arrival time.
NOISE_CHANNELS_PER_BASIS = 2

# Gain guard: above this per-pulse click probability the linearized form is
# refused and the exact Poissonian expression would be needed.
_LINEAR_GAIN_LIMIT = 0.01


@dataclass(frozen=True)
class ChannelParams:
    """Fiber link description.

    loss_db        -- total link attenuation in dB
    background_cps -- stray photons per second reaching the receiver
    length_km      -- fiber length (used only for PMD bookkeeping)
    pmd_coeff      -- polarization mode dispersion coefficient, ps/sqrt(km)
    excess_loss_db -- extra attenuation (connectors, splices) added to loss_db
    """

    loss_db: float
    background_cps: float = 0.0
    length_km: float = 0.0
    pmd_coeff: float = 2.71
    excess_loss_db: float = 0.0

    def __post_init__(self) -> None:
        if self.loss_db < 0 or self.excess_loss_db < 0:
            raise DomainError("loss must be >= 0 dB")
        if self.background_cps < 0:
            raise DomainError(f"background rate must be >= 0, got {self.background_cps}")
        if self.length_km < 0:
            raise DomainError(f"length must be >= 0, got {self.length_km}")

    @property
    def total_loss_db(self) -> float:
        return self.loss_db + self.excess_loss_db


@dataclass(frozen=True)
class DetectorParams:
    """Receiver-side detector description.

    dark_prob -- dark-count probability per gate per detection channel
    gate_ns   -- coincidence/gate window in nanoseconds
    """

    dark_prob: float = 2e-8
    gate_ns: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.dark_prob < 1.0:
            raise DomainError(f"dark_prob must be in [0, 1), got {self.dark_prob}")
        if self.gate_ns <= 0:
            raise DomainError(f"gate width must be > 0, got {self.gate_ns}")


def transmittance(loss_db: float) -> float:
    """Power transmittance of an attenuation given in dB."""
    if loss_db < 0:
        raise DomainError(f"loss must be >= 0 dB, got {loss_db}")
    return 10.0 ** (-loss_db / 10.0)


def noise_prob_per_gate(background_cps: float, detector: DetectorParams) -> float:
    """Probability of a noise click per gate per channel: dark + background."""
    if background_cps < 0:
        raise DomainError(f"background rate must be >= 0, got {background_cps}")
    p = detector.dark_prob + background_cps * detector.gate_ns * 1e-9
    if p >= 1.0:
        raise DomainError(f"noise probability per gate is {p} >= 1; shrink the gate")
    return p


def expected_gain(
    source: SourceParams,
    transmittance_value: float,
    eta_basis: float,
    p_noise_total: float,
) -> float:
    """Linearized per-pulse gain Q = mu * t * eta + p_noise_total.

    ``eta_basis`` is the effective efficiency into *conclusive* outcomes for
    the basis under consideration, and ``p_noise_total`` the noise probability
    summed over the basis's detection channels.
    """
    if not 0.0 <= transmittance_value <= 1.0:
        raise DomainError(f"transmittance must be in [0, 1], got {transmittance_value}")
    if not 0.0 <= eta_basis <= 1.0:
        raise DomainError(f"eta must be in [0, 1], got {eta_basis}")
    if p_noise_total < 0:
        raise DomainError(f"noise probability must be >= 0, got {p_noise_total}")
    signal = source.mu * transmittance_value * eta_basis
    if signal >= _LINEAR_GAIN_LIMIT:
        raise DomainError(
            f"mu*t*eta = {signal} exceeds the linear-gain guard {_LINEAR_GAIN_LIMIT}; "
            "use the exact Poissonian form for bright signals"
        )
    return signal + p_noise_total


def expected_qber(intrinsic_e: float, signal_gain: float, p_noise_total: float) -> float:
    """QBER of a mix of signal (error rate e) and noise (error rate 1/2)."""
    if not 0.0 <= intrinsic_e <= 0.5:
        raise DomainError(f"intrinsic error must be in [0, 0.5], got {intrinsic_e}")
    if signal_gain < 0 or p_noise_total < 0:
        raise DomainError("gains must be >= 0")
    total = signal_gain + p_noise_total
    if total <= 0:
        raise DomainError("total gain is zero; QBER undefined")
    return (intrinsic_e * signal_gain + 0.5 * p_noise_total) / total


@dataclass(frozen=True)
class BasisRates:
    """Closed-form per-pulse gains and QBERs for matched-basis rounds."""

    q_z: float
    e_z: float
    q_x: float
    e_x: float
    p_noise_total: float

    # The Y basis behaves identically to X under this model.
    @property
    def q_y(self) -> float:
        return self.q_x

    @property
    def e_y(self) -> float:
        return self.e_x


def expected_basis_rates(
    source: SourceParams,
    optics: OpticsParams,
    channel: ChannelParams,
    detector: DetectorParams,
) -> BasisRates:
    """Analytic gains/QBERs used as the oracle for the Monte Carlo engine.

    Z uses the full time-bin efficiency; X/Y use the phase efficiency times
    the conclusive middle-slot fraction.  Each basis accumulates noise on two
    channels.  The phase error combines intrinsic misalignment with the
    current fringe visibility.
    """
    t = transmittance(channel.total_loss_db)
    p_noise = NOISE_CHANNELS_PER_BASIS * noise_prob_per_gate(channel.background_cps, detector)
    eta_x_eff = optics.eta_x * PHASE_CONCLUSIVE_FRACTION

    signal_z = source.mu * t * optics.eta_z
    signal_x = source.mu * t * eta_x_eff
    q_z = expected_gain(source, t, optics.eta_z, p_noise)
    q_x = expected_gain(source, t, eta_x_eff, p_noise)
    e_z = expected_qber(optics.e_z_intrinsic, signal_z, p_noise)
    e_x = expected_qber(effective_phase_error(optics), signal_x, p_noise)
    return BasisRates(q_z=q_z, e_z=e_z, q_x=q_x, e_x=e_x, p_noise_total=p_noise)
