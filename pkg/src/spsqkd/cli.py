"""Command-line front end.

Subcommands: simulate, keyrate, sweep, g2, rfi, correct.  Each merges
defaults < config file < flags into a RunConfig, runs the owning module and
writes CSV to --out (standard output by default).  Floats are rendered with
their shortest round-trip representation, so identical configurations give
byte-identical output.

Exit codes: 0 success, 1 usage/config error, 2 domain or data error,
3 non-convergence.  Errors print one line ``error: <code>: <message>`` on
stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import protocol
from .config import RunConfig
from .correlate import cross_correlate, fit_g2, load_timestamps, normalize_g2, pulsed_g2
from .errors import ConfigError, DataError, DomainError
from .keyrate import KeyRateInput, secure_key_rate, sweep_loss
from .simulate import TallySet, run as run_simulation

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_NONCONVERGENCE = 3


class _UsageError(Exception):
    pass


class _NonConvergence(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; remap to the usage contract.
    def error(self, message):
        raise _UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_csv(out_path, header, rows) -> None:
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def _overrides(args, mapping) -> dict:
    out = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = value
    return out


def _parse_block_length(text: str) -> float:
    if text.strip().lower() == "inf":
        return math.inf
    return float(text)


# -- subcommand handlers -----------------------------------------------------


def _cmd_simulate(args) -> int:
    cfg = RunConfig.build(args.config, _overrides(args, {
        "pulses": "sim.n_pulses",
        "seed": "sim.seed",
        "protocol": "sim.protocol",
        "q_z_alice": "sim.q_z_alice",
        "q_z_bob": "sim.q_z_bob",
        "loss_db": "channel.loss_db",
        "background_cps": "channel.background_cps",
        "mu": "source.mu",
        "g2": "source.g2_pulsed",
    }))
    tally = run_simulation(
        cfg.trial_config(),
        cfg.source_params(),
        cfg.optics_params(),
        cfg.channel_params(),
        cfg.detector_params(),
        threads=args.threads,
    )
    sifted = protocol.sift(tally)
    summary = {"n_pulses": tally.n_pulses}
    for basis in ("Z", "X", "Y"):
        summary[f"q_{basis.lower()}"] = sifted.gain(basis)
        n = sifted.conclusive[basis]
        summary[f"e_{basis.lower()}"] = sifted.errors[basis] / n if n else None
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)

    if args.out is None:
        tally.to_csv(sys.stdout)
    else:
        tally.to_csv(args.out)
    return EXIT_OK


def _cmd_keyrate(args) -> int:
    cfg = RunConfig.build(args.config, _overrides(args, {
        "mu": "source.mu",
        "g2": "source.g2_pulsed",
        "fec": "security.f_ec",
        "eps_hat": "security.eps_hat",
        "eps_pa": "security.eps_pa",
        "eps_cor": "security.eps_cor",
    }))
    if args.tally is not None:
        tally = TallySet.from_csv(args.tally)
        sifted = protocol.sift(tally)
        q_z = sifted.gain("Z")
        e_z = sifted.qber("Z")
        e_x = sifted.qber("X")
        n_z = sifted.conclusive["Z"]
        c_value = None
        if args.protocol == "rfi":
            c_value = protocol.c_statistic(sifted)
    else:
        if args.qz is None or args.ez is None:
            raise _UsageError("either --tally or both --qz and --ez are required")
        q_z, e_z = args.qz, args.ez
        e_x = args.ex
        n_z = _parse_block_length(args.n)
        c_value = args.c
    inp = KeyRateInput(
        q_z=q_z,
        e_z=e_z,
        e_x=e_x,
        e_y=args.ey,
        c_value=c_value,
        n_z=n_z,
        mu=cfg.get("source.mu"),
        g2_pulsed=cfg.get("source.g2_pulsed"),
        protocol=args.protocol,
    )
    rep = secure_key_rate(inp, cfg.security_params())
    header = ["protocol", "q_z", "e_z", "e_x", "c", "n_z", "a_z", "i_e",
              "rate_per_pulse", "i_e_alt", "rate_alt_ie", "clipped"]
    row = [rep.protocol, q_z, e_z, e_x, c_value, rep.n_z, rep.a_z, rep.i_e,
           rep.rate, rep.i_e_alt, rep.rate_alt, rep.clipped]
    _write_csv(args.out, header, [row])
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = RunConfig.build(args.config, _overrides(args, {
        "loss_min": "sweep.loss_min_db",
        "loss_max": "sweep.loss_max_db",
        "loss_step": "sweep.loss_step_db",
        "block_sizes": "sweep.block_sizes",
        "background_cps": "channel.background_cps",
    }))
    lo = cfg.get("sweep.loss_min_db")
    hi = cfg.get("sweep.loss_max_db")
    step = cfg.get("sweep.loss_step_db")
    if step <= 0 or hi < lo:
        raise DomainError("sweep grid requires loss_max >= loss_min and loss_step > 0")
    n_steps = int(round((hi - lo) / step))
    losses = [lo + i * step for i in range(n_steps + 1)]
    points = sweep_loss(
        cfg.source_params(),
        cfg.optics_params(),
        cfg.detector_params(),
        cfg.security_params(),
        losses,
        cfg.block_sizes(),
        background_cps=cfg.get("channel.background_cps"),
    )
    rows = [[p.loss_db, p.block_size, p.rate, p.clipped] for p in points]
    _write_csv(args.out, ["loss_db", "block_size", "rate_per_pulse", "clipped"], rows)
    return EXIT_OK


def _cmd_g2(args) -> int:
    cfg = RunConfig.build(args.config, _overrides(args, {
        "bin_ps": "g2.bin_ps",
        "window_ps": "g2.window_ps",
        "rep_ps": "g2.rep_ps",
        "half_width_ps": "g2.half_width_ps",
        "n_side": "g2.n_side",
        "ch_a": "g2.channel_a",
        "ch_b": "g2.channel_b",
    }))
    series = load_timestamps(args.timestamps)
    ch_a = cfg.get("g2.channel_a")
    ch_b = cfg.get("g2.channel_b")
    hist = cross_correlate(
        series.channel(ch_a), series.channel(ch_b),
        cfg.get("g2.bin_ps"), cfg.get("g2.window_ps"),
    )
    curve = normalize_g2(hist, series.rate_hz(ch_a), series.rate_hz(ch_b), series.duration_s())

    lines = ["tau_ps,counts,g2"]
    for tau, count, value in zip(hist.taus_ps, hist.counts, curve.g2):
        lines.append(f"{int(tau)},{int(count)},{_fmt(float(value))}")

    unconverged = False
    if args.pulsed or args.rep_ps is not None:
        ratio = pulsed_g2(hist, cfg.get("g2.rep_ps"), cfg.get("g2.half_width_ps"),
                          n_side=cfg.get("g2.n_side"))
        lines.append(f"# pulsed_g2={_fmt(ratio)}")
    if args.fit:
        fit = fit_g2(curve)
        for name in ("a", "b", "c", "tau1_ps", "tau2_ps", "tau3_ps"):
            lines.append(f"# fit_{name}={_fmt(getattr(fit, name))}")
        lines.append(f"# fit_g2_zero={_fmt(fit.g2_zero)}")
        lines.append(f"# fit_g2_zero_stderr={_fmt(fit.g2_zero_stderr)}")
        lines.append(f"# fit_converged={_fmt(fit.converged)}")
        unconverged = not fit.converged

    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    if unconverged:
        raise _NonConvergence("g2 model fit did not converge")
    return EXIT_OK


def _cmd_rfi(args) -> int:
    slices = [protocol.sift(TallySet.from_csv(path)) for path in args.tallies]
    groups = protocol.rfi_group(slices, n_groups=args.groups)
    rows = []
    for i, g in enumerate(groups):
        n_z = g.tallies.conclusive["Z"]
        e_z = g.tallies.errors["Z"] / n_z if n_z else None
        try:
            c_value = protocol.c_statistic(g.tallies)
        except DataError:
            c_value = None
        rows.append([i, g.theta, g.weight, n_z, e_z, c_value])
    _write_csv(args.out, ["group", "theta_rad", "weight", "n_z", "e_z", "c"], rows)
    return EXIT_OK


def _cmd_correct(args) -> int:
    q_c, e_c = protocol.background_correct(args.q, args.e, args.p_noise)
    _write_csv(args.out, ["q_corrected", "e_corrected"], [[q_c, e_c]])
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="spsqkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("simulate", help="Monte Carlo pulse stream -> tally CSV")
    common(p)
    p.add_argument("--pulses", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--protocol", choices=("bb84", "rfi"))
    p.add_argument("--q-z-alice", type=float, dest="q_z_alice")
    p.add_argument("--q-z-bob", type=float, dest="q_z_bob")
    p.add_argument("--loss-db", type=float, dest="loss_db")
    p.add_argument("--background-cps", type=float, dest="background_cps")
    p.add_argument("--mu", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("keyrate", help="secure key rate from Q/E inputs or a tally file")
    common(p)
    p.add_argument("--tally",
                   help="TallySet CSV to evaluate (derives qz/ez/ex/c and the "
                        "block length from the tally, overriding those flags)")
    p.add_argument("--qz", type=float)
    p.add_argument("--ez", type=float)
    p.add_argument("--ex", type=float)
    p.add_argument("--ey", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--n", default="inf", help="sifted key-basis block length (or 'inf')")
    p.add_argument("--mu", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--fec", type=float)
    p.add_argument("--eps-hat", type=float, dest="eps_hat")
    p.add_argument("--eps-pa", type=float, dest="eps_pa")
    p.add_argument("--eps-cor", type=float, dest="eps_cor")
    p.add_argument("--protocol", choices=("bb84", "rfi"), default="bb84")
    p.set_defaults(handler=_cmd_keyrate)

    p = sub.add_parser("sweep", help="rate vs loss for several block sizes")
    common(p)
    p.add_argument("--loss-min", type=float, dest="loss_min")
    p.add_argument("--loss-max", type=float, dest="loss_max")
    p.add_argument("--loss-step", type=float, dest="loss_step")
    p.add_argument("--block-sizes", dest="block_sizes",
                   help="comma-separated block lengths, e.g. 1e10,1e12,inf")
    p.add_argument("--background-cps", type=float, dest="background_cps")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("g2", help="coincidence histogram and model fit from timestamps")
    common(p)
    p.add_argument("timestamps", help="event file: '#channels=<k> #unit=ps' header")
    p.add_argument("--bin-ps", type=int, dest="bin_ps")
    p.add_argument("--window-ps", type=int, dest="window_ps")
    p.add_argument("--rep-ps", type=int, dest="rep_ps")
    p.add_argument("--half-width-ps", type=int, dest="half_width_ps")
    p.add_argument("--n-side", type=int, dest="n_side")
    p.add_argument("--ch-a", type=int, dest="ch_a")
    p.add_argument("--ch-b", type=int, dest="ch_b")
    p.add_argument("--fit", action="store_true")
    p.add_argument("--pulsed", action="store_true",
                   help="report the pulsed zero-delay suppression "
                        "(implied by an explicit --rep-ps)")
    p.set_defaults(handler=_cmd_g2)

    p = sub.add_parser("rfi", help="misalignment grouping of per-slice tallies")
    common(p)
    p.add_argument("tallies", nargs="+", help="per-slice TallySet CSV files")
    p.add_argument("--groups", type=int, default=protocol.RFI_GROUP_COUNT)
    p.set_defaults(handler=_cmd_rfi)

    p = sub.add_parser("correct", help="background-correct a (gain, QBER) pair")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--e", type=float, required=True)
    p.add_argument("--p-noise", type=float, required=True, dest="p_noise")
    p.set_defaults(handler=_cmd_correct)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "handler", None) is None:
            raise _UsageError("a subcommand is required (see --help)")
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: domain: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except _NonConvergence as exc:
        print(f"error: nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
