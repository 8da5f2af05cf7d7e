"""Time-tag analysis: coincidence histograms, normalization, g2 fitting.

Timestamps are integer picoseconds per channel, sorted.  Histogram bins are
centered on integer multiples of the bin width and a time difference d is
assigned by symmetric rounding, sign(d) * floor((|d| + w//2) / w), so the
histogram of (b, a) is exactly the mirror of the histogram of (a, b).  For
even bin widths the center bin covers one integer lag fewer than the others;
odd widths give perfectly uniform bins.

The correlation model fitted here is a four-level emitter response

    g2(tau) = 1 - a exp(-|tau|/tau1) + b exp(-|tau|/tau2) + c exp(-|tau|/tau3)

with an antibunching dip of depth ``a`` and two bunching shoulders from slow
shelving dynamics; g2(0) = 1 - a + b + c.  Fitted time constants are
broadened by instrument jitter, which is not deconvolved here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .errors import DataError, DomainError

__all__ = [
    "TimestampSeries",
    "CoincidenceHistogram",
    "G2Curve",
    "G2FitResult",
    "load_timestamps",
    "g2_model",
    "cross_correlate",
    "normalize_g2",
    "fit_g2",
    "pulsed_g2",
]

_MIN_FIT_BINS = 50


@dataclass
class TimestampSeries:
    """Channel-tagged detection times in integer picoseconds."""

    channels: dict

    def __post_init__(self) -> None:
        clean = {}
        for ch, times in self.channels.items():
            arr = np.asarray(times, dtype=np.int64)
            if arr.ndim != 1:
                raise DataError(f"channel {ch}: timestamps must be one-dimensional")
            if arr.size > 1 and (np.diff(arr) < 0).any():
                raise DataError(f"channel {ch}: timestamps are not sorted")
            clean[int(ch)] = arr
        self.channels = clean

    def channel(self, ch: int) -> np.ndarray:
        if ch not in self.channels:
            raise DataError(f"no channel {ch} in series (have {sorted(self.channels)})")
        return self.channels[ch]

    def duration_s(self) -> float:
        lo = min((t[0] for t in self.channels.values() if t.size), default=0)
        hi = max((t[-1] for t in self.channels.values() if t.size), default=0)
        return (hi - lo) * 1e-12

    def rate_hz(self, ch: int) -> float:
        d = self.duration_s()
        if d <= 0:
            raise DataError("series duration is zero; rates undefined")
        return self.channel(ch).size / d


def load_timestamps(source) -> TimestampSeries:
    """Read the text event format: header ``#channels=<k> #unit=ps`` then one
    ``channel,time_ps`` pair per line."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#channels="):
        raise DataError("missing '#channels=<k> #unit=ps' header line")
    header = lines[0].split()
    try:
        n_channels = int(header[0].split("=", 1)[1])
    except (IndexError, ValueError) as exc:
        raise DataError(f"malformed header {lines[0]!r}") from exc
    if len(header) < 2 or header[1] != "#unit=ps":
        raise DataError("timestamp unit must be declared as '#unit=ps'")

    per_channel: dict[int, list[int]] = {ch: [] for ch in range(n_channels)}
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split(",")
        if len(parts) != 2:
            raise DataError(f"malformed event line {ln!r}")
        try:
            ch = int(parts[0])
            t = int(parts[1])
        except ValueError as exc:
            raise DataError(f"malformed event line {ln!r}") from exc
        if ch not in per_channel:
            raise DataError(f"event on undeclared channel {ch}")
        per_channel[ch].append(t)
    return TimestampSeries({ch: np.array(ts, dtype=np.int64) for ch, ts in per_channel.items()})


@dataclass
class CoincidenceHistogram:
    """Counts of time differences t_b - t_a on a symmetric grid of bins."""

    taus_ps: np.ndarray  # bin centers, multiples of bin_width_ps
    counts: np.ndarray
    bin_width_ps: int
    window_ps: int


@dataclass
class G2Curve:
    """A normalized correlation curve, keeping raw counts for fit weighting."""

    taus_ps: np.ndarray
    g2: np.ndarray
    counts: np.ndarray
    normalization: float


@dataclass
class G2FitResult:
    """Fitted four-level model parameters with local standard errors."""

    a: float
    b: float
    c: float
    tau1_ps: float
    tau2_ps: float
    tau3_ps: float
    g2_zero: float
    stderr: dict
    g2_zero_stderr: float
    residual_norm: float
    converged: bool
    message: str


def g2_model(tau_ps, a, b, c, tau1_ps, tau2_ps, tau3_ps):
    """Four-level correlation model; accepts scalars or arrays."""
    t = np.abs(np.asarray(tau_ps, dtype=float))
    return (
        1.0
        - a * np.exp(-t / tau1_ps)
        + b * np.exp(-t / tau2_ps)
        + c * np.exp(-t / tau3_ps)
    )


def _check_sorted(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64)
    if arr.ndim != 1:
        raise DataError(f"{name}: timestamps must be one-dimensional")
    if arr.size > 1 and (np.diff(arr) < 0).any():
        raise DataError(f"{name}: timestamps are not sorted")
    return arr


def cross_correlate(series_a, series_b, bin_width_ps: int, window_ps: int) -> CoincidenceHistogram:
    """Histogram of differences t_b - t_a within +/- window.

    Pair finding walks the sorted arrays with vectorized range lookups, so the
    cost scales with the events plus the pairs inside the window, never with
    the all-pairs product.
    """
    bin_width_ps = int(bin_width_ps)
    window_ps = int(window_ps)
    if bin_width_ps <= 0:
        raise DomainError(f"bin width must be > 0, got {bin_width_ps}")
    if window_ps <= bin_width_ps:
        raise DomainError("window must exceed the bin width")
    ta = _check_sorted("series_a", series_a)
    tb = _check_sorted("series_b", series_b)

    k_max = window_ps // bin_width_ps
    half = bin_width_ps // 2
    n_bins = 2 * k_max + 1
    taus = np.arange(-k_max, k_max + 1, dtype=np.int64) * bin_width_ps
    if ta.size == 0 or tb.size == 0:
        return CoincidenceHistogram(taus, np.zeros(n_bins, dtype=np.int64), bin_width_ps, window_ps)

    # Largest |difference| still assigned to a bin index <= k_max.
    d_max = (k_max + 1) * bin_width_ps - half - 1
    lo = np.searchsorted(tb, ta - d_max, side="left")
    hi = np.searchsorted(tb, ta + d_max, side="right")
    lens = hi - lo
    total = int(lens.sum())
    if total == 0:
        return CoincidenceHistogram(taus, np.zeros(n_bins, dtype=np.int64), bin_width_ps, window_ps)

    a_idx = np.repeat(np.arange(ta.size), lens)
    starts = np.repeat(np.cumsum(lens) - lens, lens)
    b_idx = np.arange(total) - starts + np.repeat(lo, lens)
    d = tb[b_idx] - ta[a_idx]
    j = np.sign(d) * ((np.abs(d) + half) // bin_width_ps)
    counts = np.bincount((j + k_max).astype(np.intp), minlength=n_bins)
    return CoincidenceHistogram(taus, counts.astype(np.int64), bin_width_ps, window_ps)


def normalize_g2(
    hist: CoincidenceHistogram, rate_a_hz: float, rate_b_hz: float, duration_s: float
) -> G2Curve:
    """Scale counts to the uncorrelated level r_a * r_b * T * dtau."""
    if rate_a_hz <= 0 or rate_b_hz <= 0 or duration_s <= 0:
        raise DomainError("rates and duration must be > 0")
    norm = rate_a_hz * rate_b_hz * duration_s * hist.bin_width_ps * 1e-12
    return G2Curve(
        taus_ps=hist.taus_ps.copy(),
        g2=hist.counts / norm,
        counts=hist.counts.copy(),
        normalization=norm,
    )


def _initial_guess(taus: np.ndarray, y: np.ndarray) -> np.ndarray:
    order = np.argsort(np.abs(taus))
    center = order[0]
    wing = max(1, y.size // 5)
    baseline = float(np.median(np.concatenate([y[:wing], y[-wing:]])))
    a0 = max(baseline - float(y[center]), 1e-3)

    # Half-recovery point of the central dip fixes the antibunching timescale.
    target = baseline - 0.5 * a0
    pos = np.abs(taus)
    positive = pos[pos > 0]
    recovered = pos[(y >= target) & (pos > 0)]
    tau_half = float(recovered.min()) if recovered.size else float(pos.max()) / 10.0
    tau1 = max(tau_half / math.log(2.0), float(positive.min()) if positive.size else 1.0)
    return np.array([a0, 0.0, 0.0, tau1, 10.0 * tau1, 100.0 * tau1])


def fit_g2(curve: G2Curve, *, max_nfev: int = 200, xtol: float = 1e-8) -> G2FitResult:
    """Weighted least-squares fit of the four-level model.

    Weights are Poisson, 1/max(count, 1) on the raw counts, so the result is
    invariant under a uniform rescaling of all weights.  Non-convergence does
    not raise; the best-so-far parameters are returned flagged unconverged.
    Standard errors come from the local quadratic model of the residual at
    the solution, scaled by the reduced chi-square.
    """
    taus = np.asarray(curve.taus_ps, dtype=float)
    y = np.asarray(curve.g2, dtype=float)
    if taus.size < _MIN_FIT_BINS:
        raise DomainError(f"need at least {_MIN_FIT_BINS} bins to fit, got {taus.size}")
    sigma = np.sqrt(np.maximum(curve.counts, 1.0)) / curve.normalization

    def residuals(p):
        return (g2_model(taus, *p) - y) / sigma

    x0 = _initial_guess(taus, y)
    eps_tau = max(float(np.min(np.abs(np.diff(taus)))) * 1e-3, 1e-9)
    bounds = (
        [0.0, 0.0, 0.0, eps_tau, eps_tau, eps_tau],
        [2.0, 10.0, 10.0, np.inf, np.inf, np.inf],
    )
    x0 = np.clip(x0, bounds[0], bounds[1])
    res = least_squares(
        residuals,
        x0,
        bounds=bounds,
        method="trf",
        xtol=xtol,
        ftol=None,
        gtol=None,
        max_nfev=max_nfev,
        x_scale=[1.0, 1.0, 1.0, x0[3], x0[4], x0[5]],
    )

    dof = max(taus.size - 6, 1)
    s2 = 2.0 * res.cost / dof
    jtj = res.jac.T @ res.jac
    cov = s2 * np.linalg.pinv(jtj)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    grad = np.array([-1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    g2_zero_se = float(math.sqrt(max(grad @ cov @ grad, 0.0)))

    a, b, c, t1, t2, t3 = res.x
    names = ("a", "b", "c", "tau1_ps", "tau2_ps", "tau3_ps")
    return G2FitResult(
        a=float(a),
        b=float(b),
        c=float(c),
        tau1_ps=float(t1),
        tau2_ps=float(t2),
        tau3_ps=float(t3),
        g2_zero=float(1.0 - a + b + c),
        stderr=dict(zip(names, se.tolist())),
        g2_zero_stderr=g2_zero_se,
        residual_norm=float(math.sqrt(2.0 * res.cost)),
        converged=res.status > 0,
        message=str(res.message),
    )


def pulsed_g2(
    hist: CoincidenceHistogram,
    rep_period_ps: int,
    integration_half_width_ps: int,
    *,
    n_side: int = 6,
) -> float:
    """Zero-delay peak area over the mean side-peak area of a pulsed histogram.

    Peak areas integrate counts within +/- half width of each expected peak
    center (integer multiples of the repetition period); the ``n_side``
    nearest side peaks that fit inside the histogram are used.
    """
    rep_period_ps = int(rep_period_ps)
    half = int(integration_half_width_ps)
    if rep_period_ps <= 0 or half <= 0:
        raise DomainError("rep period and half width must be > 0")
    if rep_period_ps <= 2 * half:
        raise DomainError("rep period must exceed twice the integration half width")

    taus = hist.taus_ps
    span = int(taus.max())

    def area(center: int) -> float:
        sel = np.abs(taus - center) <= half
        return float(hist.counts[sel].sum())

    side_orders = []
    m = 1
    while m * rep_period_ps + half <= span:
        side_orders.extend([m, -m])
        m += 1
    if len(side_orders) < 3:
        raise DomainError(
            f"only {len(side_orders)} side peaks fit in the histogram window; need >= 3"
        )
    side_orders = side_orders[:n_side] if n_side >= 3 else side_orders[:3]

    side_areas = [area(k * rep_period_ps) for k in side_orders]
    mean_side = sum(side_areas) / len(side_areas)
    if mean_side <= 0:
        raise DomainError("no counts in any side peak; cannot normalize")
    return area(0) / mean_side
