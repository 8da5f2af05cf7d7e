"""Flat key-value run configuration with defaults < file < flags precedence.

The config file format is one ``key = value`` per line with ``#`` comments.
Unknown keys are rejected with a nearest-known-key suggestion; values are
parsed to the type of the corresponding default.  Builders turn a validated
RunConfig into the parameter objects of the owning modules, which apply
their own invariants.
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass
from pathlib import Path

from .channel import ChannelParams, DetectorParams
from .errors import ConfigError
from .keyrate import SecurityParams
from .optics import OpticsParams
from .simulate import TrialConfig
from .source import SourceParams

__all__ = ["DEFAULTS", "RunConfig"]

# The default operating point is the measured back-to-back (0 dB) setting of
# a GaN-defect telecom single-photon-source QKD testbed running at 80 MHz.
# optics.e_x_intrinsic is chosen so that combined with the 98%-visibility
# interference error the effective phase QBER equals the measured 1.88%.
DEFAULTS: dict = {
    "source.mu": 8.955e-5,
    "source.g2_pulsed": 0.356,
    "source.rep_rate_hz": 80e6,
    "source.wavelength_nm": 1305.4,
    "source.fwhm_nm": 8.96,
    "optics.v_peak": 0.98,
    "optics.envelope_um": 85.3,
    "optics.delay_mismatch_um": 0.0,
    "optics.eta_z": 0.182,
    "optics.eta_x": 0.0784,
    "optics.e_z_intrinsic": 0.0089,
    "optics.e_x_intrinsic": 0.0088 / 0.98,
    "optics.phase_offset_rad": 0.0,
    "pmd.dgd_ps": 1.50,
    "channel.loss_db": 0.0,
    "channel.background_cps": 0.0,
    "channel.length_km": 0.0,
    "channel.excess_loss_db": 0.0,
    "detector.dark_prob": 2e-8,
    "detector.gate_ns": 1.0,
    "sim.n_pulses": 1_000_000,
    "sim.seed": 1,
    "sim.q_z_alice": 0.5,
    "sim.q_z_bob": 0.5,
    "sim.protocol": "bb84",
    "security.eps_hat": 1e-10,
    "security.eps_pa": 1e-10,
    "security.eps_cor": 1e-10,
    "security.f_ec": 1.1,
    "sweep.loss_min_db": 0.0,
    "sweep.loss_max_db": 30.0,
    "sweep.loss_step_db": 0.5,
    "sweep.block_sizes": "1e10,1e12,1e14,inf",
    "g2.bin_ps": 501,
    "g2.window_ps": 500_000,
    "g2.rep_ps": 12_500,
    "g2.half_width_ps": 2_000,
    "g2.n_side": 6,
    "g2.channel_a": 0,
    "g2.channel_b": 1,
}


def _parse_value(key: str, raw):
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(default, bool):
            if str(raw).lower() in ("true", "1", "yes"):
                return True
            if str(raw).lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if isinstance(default, int) and not isinstance(default, bool):
            return int(float(raw)) if isinstance(raw, str) else int(raw)
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}") from exc


def _reject_unknown(key: str) -> None:
    if key in DEFAULTS:
        return
    suggestion = difflib.get_close_matches(key, DEFAULTS.keys(), n=1)
    hint = f"; did you mean {suggestion[0]!r}?" if suggestion else ""
    raise ConfigError(f"unknown config key {key!r}{hint}")


def _read_config_file(path) -> dict:
    out: dict = {}
    for lineno, raw_line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration (defaults merged with file and flags)."""

    values: dict

    @classmethod
    def build(cls, config_file=None, overrides=None) -> "RunConfig":
        merged = dict(DEFAULTS)
        if config_file is not None:
            for key, raw in _read_config_file(config_file).items():
                _reject_unknown(key)
                merged[key] = _parse_value(key, raw)
        if overrides:
            for key, raw in overrides.items():
                _reject_unknown(key)
                merged[key] = _parse_value(key, raw)
        return cls(values=merged)

    def get(self, key: str):
        _reject_unknown(key)
        return self.values[key]

    # -- parameter object builders ------------------------------------------

    def source_params(self) -> SourceParams:
        return SourceParams(
            mu=self.get("source.mu"),
            g2_pulsed=self.get("source.g2_pulsed"),
            rep_rate_hz=self.get("source.rep_rate_hz"),
            wavelength_nm=self.get("source.wavelength_nm"),
            fwhm_nm=self.get("source.fwhm_nm"),
        )

    def optics_params(self) -> OpticsParams:
        return OpticsParams(
            v_peak=self.get("optics.v_peak"),
            envelope_um=self.get("optics.envelope_um"),
            delay_mismatch_um=self.get("optics.delay_mismatch_um"),
            eta_z=self.get("optics.eta_z"),
            eta_x=self.get("optics.eta_x"),
            e_z_intrinsic=self.get("optics.e_z_intrinsic"),
            e_x_intrinsic=self.get("optics.e_x_intrinsic"),
            phase_offset_rad=self.get("optics.phase_offset_rad"),
        )

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            loss_db=self.get("channel.loss_db"),
            background_cps=self.get("channel.background_cps"),
            length_km=self.get("channel.length_km"),
            excess_loss_db=self.get("channel.excess_loss_db"),
        )

    def detector_params(self) -> DetectorParams:
        return DetectorParams(
            dark_prob=self.get("detector.dark_prob"),
            gate_ns=self.get("detector.gate_ns"),
        )

    def trial_config(self) -> TrialConfig:
        return TrialConfig(
            n_pulses=self.get("sim.n_pulses"),
            seed=self.get("sim.seed"),
            q_z_alice=self.get("sim.q_z_alice"),
            q_z_bob=self.get("sim.q_z_bob"),
            protocol=self.get("sim.protocol"),
        )

    def security_params(self) -> SecurityParams:
        return SecurityParams(
            eps_hat=self.get("security.eps_hat"),
            eps_pa=self.get("security.eps_pa"),
            eps_cor=self.get("security.eps_cor"),
            f_ec=self.get("security.f_ec"),
        )

    def block_sizes(self) -> list[float]:
        out = []
        for token in str(self.get("sweep.block_sizes")).split(","):
            token = token.strip().lower()
            if not token:
                continue
            out.append(math.inf if token == "inf" else float(token))
        if not out:
            raise ConfigError("sweep.block_sizes is empty")
        return out
