"""Classical post-processing: sifting, background correction, RFI statistics.

Correlators follow the sign convention <ab> = (n_agree - n_disagree) / n for
prepare-a / measure-b conclusive rounds, so a relative rotation theta of the
phase reference frames gives <XX> = <YY> = k cos(theta), <XY> = -<YX> =
k sin(theta) with a common contrast k.  The frame-independent quantity
C = <XX>^2 + <XY>^2 + <YX>^2 + <YY>^2 = 2 k^2 is invariant under theta.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import DomainError, InsufficientStatisticsError
from .optics import BASES
from .simulate import TallySet

__all__ = [
    "SiftedResult",
    "RfiGroup",
    "RFI_GROUP_COUNT",
    "sift",
    "background_correct",
    "background_uncorrect",
    "estimate_theta",
    "c_statistic",
    "rfi_group",
]

logger = logging.getLogger(__name__)

RFI_GROUP_COUNT = 12
_PHASE_PAIRS = [(a, b) for a in ("X", "Y") for b in ("X", "Y")]


@dataclass
class SiftedResult:
    """Per-basis sifted statistics plus the phase-basis cross cells.

    assigned   -- pulses prepared and measured in the same basis
    conclusive -- of those, rounds with a conclusive bit outcome
    errors     -- conclusive rounds where the bits disagree
    cross      -- (prep, meas) -> (n_agree, n_disagree) over all four
                  X/Y prepare/measure combinations (matched and crossed)

    Counts are stored as floats so exact expected tallies can be analyzed
    with the same code as integer Monte Carlo tallies.
    """

    assigned: dict = field(default_factory=lambda: {b: 0.0 for b in BASES})
    conclusive: dict = field(default_factory=lambda: {b: 0.0 for b in BASES})
    errors: dict = field(default_factory=lambda: {b: 0.0 for b in BASES})
    cross: dict = field(default_factory=lambda: {p: (0.0, 0.0) for p in _PHASE_PAIRS})

    def gain(self, basis: str) -> float:
        """Conclusive fraction of matched-basis pulses (0 when none assigned)."""
        n = self.assigned[basis]
        return self.conclusive[basis] / n if n else 0.0

    def qber(self, basis: str) -> float:
        n = self.conclusive[basis]
        if n <= 0:
            raise InsufficientStatisticsError(f"no conclusive {basis}-basis rounds")
        return self.errors[basis] / n

    def correlator(self, prep: str, meas: str) -> float:
        agree, disagree = self.cross[(prep, meas)]
        total = agree + disagree
        if total <= 0:
            raise InsufficientStatisticsError(f"empty {prep}/{meas} cross cell")
        return (agree - disagree) / total

    def total_conclusive(self) -> float:
        return sum(self.conclusive.values())

    def __add__(self, other: "SiftedResult") -> "SiftedResult":
        out = SiftedResult()
        for b in BASES:
            out.assigned[b] = self.assigned[b] + other.assigned[b]
            out.conclusive[b] = self.conclusive[b] + other.conclusive[b]
            out.errors[b] = self.errors[b] + other.errors[b]
        for p in _PHASE_PAIRS:
            a1, d1 = self.cross[p]
            a2, d2 = other.cross[p]
            out.cross[p] = (a1 + a2, d1 + d2)
        return out


@dataclass
class RfiGroup:
    """One misalignment-angle bin of a free-running acquisition."""

    theta: float
    tallies: SiftedResult
    weight: float


def sift(tally: TallySet) -> SiftedResult:
    """Keep matched-basis conclusive rounds; count bit disagreements as errors."""
    counts = tally.counts
    out = SiftedResult()
    for bi, basis in enumerate(BASES):
        block = counts[bi, :, bi, :]
        out.assigned[basis] = float(block.sum())
        out.conclusive[basis] = float(block[:, 0:2].sum())
        out.errors[basis] = float(block[0, 1] + block[1, 0])
    for prep, meas in _PHASE_PAIRS:
        ai = BASES.index(prep)
        bi = BASES.index(meas)
        agree = float(counts[ai, 0, bi, 0] + counts[ai, 1, bi, 1])
        disagree = float(counts[ai, 0, bi, 1] + counts[ai, 1, bi, 0])
        out.cross[(prep, meas)] = (agree, disagree)
    return out


def background_correct(q: float, e: float, p_noise_total: float) -> tuple[float, float]:
    """Remove the noise floor from a measured (gain, QBER) pair.

    Q_c = Q - p_noise; E_c = (E*Q - p_noise/2) / Q_c, clamped to [0, 0.5].
    Raises when the gain does not exceed the noise (signal buried).
    """
    if p_noise_total < 0:
        raise DomainError(f"noise probability must be >= 0, got {p_noise_total}")
    if q <= p_noise_total:
        raise DomainError(
            f"gain {q} does not exceed the noise floor {p_noise_total}; nothing to correct"
        )
    q_c = q - p_noise_total
    e_c = (e * q - 0.5 * p_noise_total) / q_c
    return q_c, min(max(e_c, 0.0), 0.5)


def background_uncorrect(q_c: float, e_c: float, p_noise_total: float) -> tuple[float, float]:
    """Inverse of :func:`background_correct` (exact when no clamping occurred)."""
    if p_noise_total < 0:
        raise DomainError(f"noise probability must be >= 0, got {p_noise_total}")
    q = q_c + p_noise_total
    return q, (e_c * q_c + 0.5 * p_noise_total) / q


def estimate_theta(sifted: SiftedResult) -> float:
    """Reference-frame misalignment angle from the X/X and X/Y correlators.

    theta = atan2(<XY>, <XX>), mapped to [0, 2*pi).  The angle is the phase
    lead of the preparation frame over the measurement frame.
    """
    cxx = sifted.correlator("X", "X")
    cxy = sifted.correlator("X", "Y")
    return math.atan2(cxy, cxx) % (2.0 * math.pi)


def c_statistic(sifted: SiftedResult) -> float:
    """Frame-independent correlation strength, sum of the four squared correlators."""
    total = 0.0
    for prep, meas in _PHASE_PAIRS:
        total += sifted.correlator(prep, meas) ** 2
    return total


def rfi_group(slices, n_groups: int = RFI_GROUP_COUNT) -> list[RfiGroup]:
    """Combine per-slice sifted results into equal-width misalignment bins.

    Each slice's angle is estimated and the slice is assigned to one of
    ``n_groups`` equal bins over [0, 2*pi); tallies are summed per bin.
    Slices without enough phase statistics are skipped with a warning and the
    weights are renormalized over the remaining data.  Empty bins are emitted
    with zero weight and their bin-center angle.
    """
    if n_groups <= 0:
        raise DomainError(f"n_groups must be > 0, got {n_groups}")
    width = 2.0 * math.pi / n_groups
    binned: list[SiftedResult | None] = [None] * n_groups
    for i, sl in enumerate(slices):
        try:
            theta = estimate_theta(sl)
        except InsufficientStatisticsError as exc:
            logger.warning("skipping slice %d: %s", i, exc)
            continue
        k = min(int(theta / width), n_groups - 1)
        binned[k] = sl if binned[k] is None else binned[k] + sl

    total = sum(b.total_conclusive() for b in binned if b is not None)
    groups: list[RfiGroup] = []
    for k in range(n_groups):
        b = binned[k]
        if b is None:
            groups.append(RfiGroup(theta=(k + 0.5) * width, tallies=SiftedResult(), weight=0.0))
            continue
        try:
            theta = estimate_theta(b)
        except InsufficientStatisticsError:
            theta = (k + 0.5) * width
        weight = b.total_conclusive() / total if total > 0 else 0.0
        groups.append(RfiGroup(theta=theta, tallies=b, weight=weight))
    return groups
