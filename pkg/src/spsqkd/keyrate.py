"""Finite-size secure key rate for BB84 and RFI protocols with a true
single-photon source.

The per-pulse rate is

    R = Q_z * [ A_z (1 - I_E) - f_EC h(E_z)
                - 7 sqrt(log2(2/eps_hat) / n_z)
                - (2/n_z) log2(1/eps_pa)
                - (1/n_z) log2(2/eps_cor) ],

floored at zero, where A_z = (Q_z - P_m)/Q_z discounts the worst-case
multi-photon fraction P_m = mu^2 g2 / 2, h is the binary entropy, and the
three trailing penalties vanish exactly as the accounting block length n_z
goes to infinity.  I_E is the eavesdropper information per single-photon
detection: h(E_x) for BB84, or the frame-independent bound driven by the
C statistic for RFI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ChannelParams, DetectorParams, expected_basis_rates
from .errors import DomainError
from .optics import OpticsParams
from .source import SourceParams, multi_photon_bound

__all__ = [
    "SecurityParams",
    "KeyRateInput",
    "KeyRateReport",
    "SweepPoint",
    "binary_entropy",
    "untagged_ratio",
    "ie_bb84",
    "ie_rfi",
    "secure_key_rate",
    "grouped_secure_key_rate",
    "sweep_loss",
    "cutoff_loss_db",
    "sifted_block_length",
]


@dataclass(frozen=True)
class SecurityParams:
    """Failure budgets and error-correction inefficiency.

    eps_hat -- smooth min-entropy parameter
    eps_pa  -- privacy-amplification failure probability
    eps_cor -- correctness failure probability
    f_ec    -- error-correction inefficiency (>= 1)
    """

    eps_hat: float = 1e-10
    eps_pa: float = 1e-10
    eps_cor: float = 1e-10
    f_ec: float = 1.1

    def __post_init__(self) -> None:
        for name, eps in (("eps_hat", self.eps_hat), ("eps_pa", self.eps_pa), ("eps_cor", self.eps_cor)):
            if not 0.0 < eps < 1.0:
                raise DomainError(f"{name} must be in (0, 1), got {eps}")
        if self.f_ec < 1.0:
            raise DomainError(f"f_ec must be >= 1, got {self.f_ec}")


@dataclass(frozen=True)
class KeyRateInput:
    """Observed quantities feeding one key-rate evaluation.

    n_z is the number of sifted key-basis bits in the accounting block;
    math.inf selects the asymptotic rate.  For RFI, c_value may be given
    directly; otherwise it is reconstructed from the phase QBERs assuming
    uniform phase-basis errors: C = (1-2E_x)^2 + (1-2E_y)^2.
    """

    q_z: float
    e_z: float
    mu: float
    g2_pulsed: float
    n_z: float = math.inf
    e_x: float | None = None
    e_y: float | None = None
    c_value: float | None = None
    protocol: str = "bb84"

    def __post_init__(self) -> None:
        if self.q_z <= 0:
            raise DomainError(f"q_z must be > 0, got {self.q_z}")
        if not 0.0 <= self.e_z <= 0.5:
            raise DomainError(f"e_z must be in [0, 0.5], got {self.e_z}")
        for name, e in (("e_x", self.e_x), ("e_y", self.e_y)):
            if e is not None and not 0.0 <= e <= 0.5:
                raise DomainError(f"{name} must be in [0, 0.5], got {e}")
        if self.c_value is not None and not 0.0 <= self.c_value <= 2.0:
            raise DomainError(f"c_value must be in [0, 2], got {self.c_value}")
        if not (self.n_z >= 1):
            raise DomainError(f"n_z must be >= 1 (or inf), got {self.n_z}")
        if self.protocol not in ("bb84", "rfi"):
            raise DomainError(f"unknown protocol {self.protocol!r}")
        if self.protocol == "bb84" and self.e_x is None:
            raise DomainError("BB84 evaluation requires e_x")
        if self.protocol == "rfi" and self.c_value is None and self.e_x is None:
            raise DomainError("RFI evaluation requires c_value or e_x")


@dataclass(frozen=True)
class KeyRateReport:
    """Secure rate with its term-by-term breakdown.

    ``terms`` maps {secrecy, error_correction, smoothing,
    privacy_amplification, correctness} to per-pulse contributions whose sum
    is the pre-clip rate exactly.  ``rate_alt`` / ``i_e_alt`` report the
    alternative leakage choice I_E = h(E_z) for BB84 inputs; the two variants
    bracket the ambiguity left by treating only one basis as leaky, and
    disagreeing variants flag operating points whose published rates cannot
    be pinned to a single leakage model.  ``extrapolated`` marks values
    assembled from per-group finite-size accounting rather than one block.
    """

    rate: float
    rate_unclipped: float
    clipped: bool
    a_z: float
    i_e: float
    terms: dict
    n_z: float
    protocol: str
    i_e_alt: float | None = None
    rate_alt: float | None = None
    extrapolated: bool = False


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy h(x) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def untagged_ratio(q_z: float, mu: float, g2_pulsed: float) -> float:
    """Provable single-photon fraction of the key-basis gain, (Q_z - P_m)/Q_z."""
    p_m = multi_photon_bound(mu, g2_pulsed)
    if q_z <= p_m:
        raise DomainError(
            f"gain {q_z} does not exceed the multi-photon bound {p_m}; "
            "no provable single-photon fraction"
        )
    return (q_z - p_m) / q_z


def ie_bb84(e_x: float) -> float:
    """Eavesdropper information per single-photon detection for BB84: h(E_x)."""
    if not 0.0 <= e_x <= 0.5:
        raise DomainError(f"e_x must be in [0, 0.5], got {e_x}")
    return binary_entropy(e_x)


def ie_rfi(c_value: float, e_z: float) -> float:
    """Frame-independent eavesdropper information bound.

    u = min(sqrt(C/2)/(1-E_z), 1),
    v = sqrt(max(0, C/2 - (1-E_z)^2 u^2)) / E_z   (capped at 1),
    I_E = (1-E_z) h((1+u)/2) + E_z h((1+v)/2).

    The E_z = 0 limit drops the second term.
    """
    if not 0.0 <= c_value <= 2.0:
        raise DomainError(f"c_value must be in [0, 2], got {c_value}")
    if not 0.0 <= e_z <= 0.5:
        raise DomainError(f"e_z must be in [0, 0.5], got {e_z}")
    half_c = 0.5 * c_value
    if e_z == 0.0:
        u = min(math.sqrt(half_c), 1.0)
        return binary_entropy(0.5 * (1.0 + u))
    u = min(math.sqrt(half_c) / (1.0 - e_z), 1.0)
    v = math.sqrt(max(0.0, half_c - (1.0 - e_z) ** 2 * u**2)) / e_z
    v = min(v, 1.0)
    return (1.0 - e_z) * binary_entropy(0.5 * (1.0 + u)) + e_z * binary_entropy(0.5 * (1.0 + v))


def _finite_size_penalties(n_z: float, sec: SecurityParams) -> tuple[float, float, float]:
    """The three block-length penalties; exactly zero for an infinite block."""
    if math.isinf(n_z):
        return 0.0, 0.0, 0.0
    smoothing = 7.0 * math.sqrt(math.log2(2.0 / sec.eps_hat) / n_z)
    pa = (2.0 / n_z) * math.log2(1.0 / sec.eps_pa)
    cor = (1.0 / n_z) * math.log2(2.0 / sec.eps_cor)
    return smoothing, pa, cor


def _reconstruct_c(inp: KeyRateInput) -> float:
    if inp.c_value is not None:
        return inp.c_value
    e_x = inp.e_x
    e_y = inp.e_y if inp.e_y is not None else e_x
    return (1.0 - 2.0 * e_x) ** 2 + (1.0 - 2.0 * e_y) ** 2


def secure_key_rate(inp: KeyRateInput, sec: SecurityParams) -> KeyRateReport:
    """Evaluate the finite-size secure key rate per pulse.

    The report's ``terms`` sum to the pre-clip rate; the published rate is
    floored at zero and flagged when clipping occurred.
    """
    a_z = untagged_ratio(inp.q_z, inp.mu, inp.g2_pulsed)
    if inp.protocol == "bb84":
        i_e = ie_bb84(inp.e_x)
        i_e_alt = binary_entropy(inp.e_z)
    else:
        i_e = ie_rfi(_reconstruct_c(inp), inp.e_z)
        i_e_alt = None

    smoothing, pa, cor = _finite_size_penalties(inp.n_z, sec)
    ec = sec.f_ec * binary_entropy(inp.e_z)
    terms = {
        "secrecy": inp.q_z * a_z * (1.0 - i_e),
        "error_correction": -inp.q_z * ec,
        "smoothing": -inp.q_z * smoothing,
        "privacy_amplification": -inp.q_z * pa,
        "correctness": -inp.q_z * cor,
    }
    rate_unclipped = sum(terms.values())
    rate = max(0.0, rate_unclipped)

    rate_alt = None
    if i_e_alt is not None:
        alt_unclipped = inp.q_z * (a_z * (1.0 - i_e_alt) - ec - smoothing - pa - cor)
        rate_alt = max(0.0, alt_unclipped)

    return KeyRateReport(
        rate=rate,
        rate_unclipped=rate_unclipped,
        clipped=rate_unclipped < 0.0,
        a_z=a_z,
        i_e=i_e,
        terms=terms,
        n_z=inp.n_z,
        protocol=inp.protocol,
        i_e_alt=i_e_alt,
        rate_alt=rate_alt,
    )


def grouped_secure_key_rate(weighted_inputs, sec: SecurityParams) -> KeyRateReport:
    """Weight-averaged rate over misalignment groups of a free-running run.

    Each group is evaluated with its own statistics and block length and the
    rates are combined with the group weights.  Applying the single-block
    penalties group by group extrapolates the finite-size accounting, so the
    result is flagged ``extrapolated``.
    """
    weighted_inputs = list(weighted_inputs)
    if not weighted_inputs:
        raise DomainError("no groups to evaluate")
    total_w = sum(w for w, _ in weighted_inputs)
    if total_w <= 0:
        raise DomainError("group weights must sum to a positive value")

    rate = 0.0
    unclipped = 0.0
    a_z = 0.0
    i_e = 0.0
    n_z = 0.0
    clipped = False
    for w, inp in weighted_inputs:
        rep = secure_key_rate(inp, sec)
        frac = w / total_w
        rate += frac * rep.rate
        unclipped += frac * rep.rate_unclipped
        a_z += frac * rep.a_z
        i_e += frac * rep.i_e
        n_z += inp.n_z if not math.isinf(inp.n_z) else 0.0
        clipped = clipped or rep.clipped
    return KeyRateReport(
        rate=rate,
        rate_unclipped=unclipped,
        clipped=clipped,
        a_z=a_z,
        i_e=i_e,
        terms={},
        n_z=n_z,
        protocol=weighted_inputs[0][1].protocol,
        extrapolated=True,
    )


def sifted_block_length(n_pulses: float, q_z_alice: float, q_z_bob: float, q_z: float) -> float:
    """Expected sifted key-basis block length of a pulse budget.

    n_z = n_pulses * q_z_alice * q_z_bob * Q_z.  Use this to convert an
    acquisition time into the block length consumed by the rate formula.
    """
    if n_pulses < 0:
        raise DomainError("pulse budget must be >= 0")
    return n_pulses * q_z_alice * q_z_bob * q_z


@dataclass(frozen=True)
class SweepPoint:
    loss_db: float
    block_size: float
    rate: float
    clipped: bool


def _rate_at_loss(
    loss_db: float,
    block_size: float,
    source: SourceParams,
    optics: OpticsParams,
    detector: DetectorParams,
    sec: SecurityParams,
    background_cps: float,
) -> KeyRateReport:
    rates = expected_basis_rates(
        source, optics, ChannelParams(loss_db=loss_db, background_cps=background_cps), detector
    )
    inp = KeyRateInput(
        q_z=rates.q_z,
        e_z=rates.e_z,
        e_x=rates.e_x,
        mu=source.mu,
        g2_pulsed=source.g2_pulsed,
        n_z=block_size,
        protocol="bb84",
    )
    return secure_key_rate(inp, sec)


def sweep_loss(
    source: SourceParams,
    optics: OpticsParams,
    detector: DetectorParams,
    sec: SecurityParams,
    losses_db,
    block_sizes,
    *,
    background_cps: float = 0.0,
) -> list[SweepPoint]:
    """BB84 rate versus channel loss for several finite-key block sizes.

    Gains and QBERs at each loss come from the closed-form channel model.
    ``block_sizes`` are the sifted key-basis block lengths n_z entering the
    finite-size penalties (math.inf for the asymptotic curve); to start from
    a pulse budget instead, convert with :func:`sifted_block_length`.
    Output order: for each block size, losses in the given order.
    """
    losses_db = list(losses_db)
    if not losses_db:
        raise DomainError("empty loss grid")
    out: list[SweepPoint] = []
    for n in block_sizes:
        for loss in losses_db:
            rep = _rate_at_loss(loss, n, source, optics, detector, sec, background_cps)
            out.append(SweepPoint(loss_db=loss, block_size=n, rate=rep.rate, clipped=rep.clipped))
    return out


def cutoff_loss_db(
    source: SourceParams,
    optics: OpticsParams,
    detector: DetectorParams,
    sec: SecurityParams,
    block_size: float,
    *,
    lo_db: float = 0.0,
    hi_db: float = 40.0,
    background_cps: float = 0.0,
    tol_db: float = 1e-9,
) -> float:
    """Largest loss with a positive rate, located by bisection.

    Requires a positive rate at ``lo_db`` and a zero rate at ``hi_db``.
    """

    def positive(loss: float) -> bool:
        return (
            _rate_at_loss(loss, block_size, source, optics, detector, sec, background_cps).rate
            > 0.0
        )

    if not positive(lo_db):
        raise DomainError(f"rate is already zero at {lo_db} dB")
    if positive(hi_db):
        raise DomainError(f"rate is still positive at {hi_db} dB; raise hi_db")
    lo, hi = lo_db, hi_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo
