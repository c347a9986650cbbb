"""Command-line entry point: ``qwalk <verb> [flags]``.

Verbs: evolve, bands, bloch, zitter, lz, sweep, presets.  Each prints a
one-line summary on stdout and writes its files under ``--out``.
Exit status: 0 success, 1 runtime failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, io
from .core import (
    BoundaryError,
    PhaseProfile,
    Spinor,
    evolve,
    make_initial,
    make_packet,
)
from .spectral import band_gap_at, dispersion

PRESETS = {
    "fig2": ("no gradient, lower-loop start", dict(q=0, p=1)),
    "fig4": ("moderate gradient 2pi/32 (Bloch oscillation)", dict(q=1, p=32)),
    "fig5": ("strong gradient 2pi/5 (Landau-Zener tunneling)", dict(q=1, p=5)),
}
PRESET_STEPS = 70


def preset_config(name: str) -> io.RunConfig:
    _, alpha = PRESETS[name]
    return io.RunConfig(
        steps=PRESET_STEPS,
        position=0,
        spinor=Spinor.named("down"),
        phase=PhaseProfile.rational(**alpha),
    )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--config", type=Path)
    common.add_argument("--steps", type=int)
    common.add_argument("--alpha-q", type=int)
    common.add_argument("--alpha-p", type=int)
    common.add_argument("--alpha-float", type=float)
    common.add_argument("--position", type=int)
    common.add_argument("--spinor", choices=["up", "down", "plus"])
    common.add_argument("--packet-width", type=float)
    common.add_argument("--packet-kappa", type=float)
    common.add_argument("--packet-band", choices=["plus", "minus"])
    common.add_argument("--samples", type=int, default=512)
    common.add_argument("--out", type=Path)
    common.add_argument("--record-every", type=int)
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="qwalk", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    sub.add_parser("evolve", parents=[common], allow_abbrev=False, help="run a walk and write grids/heatmaps")
    sub.add_parser("bands", parents=[common], allow_abbrev=False, help="tabulate the two bands")
    bloch = sub.add_parser("bloch", parents=[common], allow_abbrev=False, help="Bloch recovery for alpha = 2pi/p")
    bloch.add_argument("--p", type=int, dest="bloch_p")
    sub.add_parser("zitter", parents=[common], allow_abbrev=False, help="inter-loop energy oscillation period")
    sub.add_parser("lz", parents=[common], allow_abbrev=False, help="band transfer of a wave packet")
    sweep = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="recovery and band transfer versus p")
    sweep.add_argument("--p", type=int, nargs="+", dest="sweep_p", default=[4, 8, 16, 32])
    sub.add_parser("presets", parents=[common], allow_abbrev=False, help="list the built-in presets")
    return parser


def _config_from_args(args, default_steps=None) -> io.RunConfig:
    if args.config is not None:
        cfg = io.parse_config(args.config.read_bytes())
    elif args.preset is not None:
        cfg = preset_config(args.preset)
    else:
        cfg = io.RunConfig(steps=PRESET_STEPS if default_steps is None else default_steps)
    changes = {}
    if args.steps is not None:
        if args.steps < 0:
            raise ValueError("--steps must be non-negative")
        changes["steps"] = args.steps
    elif default_steps is not None and args.config is None and args.preset is None:
        changes["steps"] = default_steps
    if args.alpha_float is not None:
        changes["phase"] = PhaseProfile.linear(args.alpha_float)
    elif args.alpha_q is not None or args.alpha_p is not None:
        q = 1 if args.alpha_q is None else args.alpha_q
        p = 1 if args.alpha_p is None else args.alpha_p
        g = math.gcd(q, p) or 1
        changes["phase"] = PhaseProfile.rational(q // g, p // g)
    if args.position is not None:
        changes["position"] = args.position
    if args.spinor is not None:
        changes["spinor"] = Spinor.named(args.spinor)
    if args.packet_width is not None or args.packet_kappa is not None or args.packet_band is not None:
        base = cfg.packet or io.PacketSpec(10.0, 0.0, "plus")
        changes["packet"] = io.PacketSpec(
            base.width if args.packet_width is None else args.packet_width,
            base.kappa if args.packet_kappa is None else args.packet_kappa,
            base.band if args.packet_band is None else args.packet_band,
        )
    if args.record_every is not None:
        if args.record_every < 1:
            raise ValueError("--record-every must be >= 1")
        changes["record_every"] = args.record_every
    return replace(cfg, **changes)


def run_config(cfg: io.RunConfig, record_every=None):
    """Build the initial state for ``cfg`` and evolve it."""
    every = cfg.record_every if record_every is None else record_every
    if cfg.packet is not None:
        state = make_packet(cfg.position, cfg.packet.width, cfg.packet.kappa, cfg.packet.band)
        return evolve(state, cfg.steps, cfg.coin, cfg.phase, record_every=every, grow=True)
    window = (cfg.position - max(cfg.steps, 1), cfg.position + max(cfg.steps, 1))
    state = make_initial(cfg.position, cfg.spinor, window)
    return evolve(state, cfg.steps, cfg.coin, cfg.phase, record_every=every)


def _out_dir(args) -> Path:
    out = Path(".") if args.out is None else args.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float) -> str:
    return io.format_value(x)


def cmd_evolve(args) -> str:
    cfg = _config_from_args(args)
    out = _out_dir(args)
    traj = run_config(cfg)
    for which in cfg.grids:
        io.write_grid(traj, which, out / f"grid_{which}.csv")
    for which in cfg.heatmaps:
        io.write_heatmap(traj, which, out / f"heatmap_{which}.pgm")
    reports = []
    summary = {}
    for name in cfg.series:
        if name == "loop-energy":
            reports.extend(analysis.loop_energy_series(traj))
        elif name == "variance":
            reports.append(analysis.variance_series(traj))
        elif name == "fidelity":
            reports.append(analysis.fidelity_series(traj))
        elif name == "corner-decay":
            summary["corner_decay_error"] = analysis.corner_decay_check(traj)
    if cfg.series:
        io.write_report(reports, out / "report.json", summary)
    drift = float(np.abs(traj.intensity_total.sum(axis=1) - 1.0).max())
    return f"steps={cfg.steps} positions={traj.positions.size} rows={len(traj)} norm_drift={drift:.3e}"


def cmd_bands(args) -> str:
    if args.samples < 2:
        raise ValueError("--samples must be >= 2")
    out = _out_dir(args)
    kappa = np.linspace(0.0, math.pi, args.samples)
    bp, bm = dispersion(kappa)
    gap = band_gap_at(kappa)
    lines = ["kappa,beta_plus,beta_minus,gap"]
    for row in zip(kappa, bp, bm, gap):
        lines.append(",".join(_fmt(x) for x in row))
    (out / "bands.csv").write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    return (
        f"samples={args.samples} beta_at_0={_fmt(bp[0])} beta_at_pi={_fmt(bp[-1])} "
        f"min_gap={_fmt(gap.min())}"
    )


def _bloch_point(p: int, steps: int):
    state = make_initial(0, Spinor.named("down"), (-steps, steps))
    traj = evolve(state, steps, phase=PhaseProfile.rational(1, p))
    peak_step, peak_fid = analysis.bloch_recovery(traj, p)
    return traj, peak_step, peak_fid


def cmd_bloch(args) -> str:
    p = 32 if args.bloch_p is None else args.bloch_p
    if p < 1:
        raise ValueError("--p must be a positive integer")
    steps = 2 * p if args.steps is None else args.steps
    if steps < 2 * p:
        raise ValueError(f"--steps must be at least 2p = {2 * p}")
    out = _out_dir(args)
    traj, peak_step, peak_fid = _bloch_point(p, steps)
    report = analysis.fidelity_series(traj).with_scalar(peak_step, "peak_step")
    io.write_report([report], out / "bloch.json", {"p": p, "peak_step": peak_step, "peak_fidelity": peak_fid})
    return f"peak_step={peak_step} peak_fidelity={_fmt(peak_fid)}"


def cmd_zitter(args) -> str:
    cfg = _config_from_args(args, default_steps=40)
    out = _out_dir(args)
    traj = run_config(cfg, record_every=1)
    eu, ev = analysis.loop_energy_series(traj)
    period = analysis.zitter_period(eu)
    io.write_report([eu.with_scalar(period, "period"), ev], out / "zitter.json", {"period": period})
    return f"period={period:.6f}"


def _lz_run(alpha_profile: PhaseProfile, width: float, kappa: float, band: str, steps: int):
    # even split keeps the lab frame free of the quadratic gauge chirp
    phase = replace(alpha_profile, u_share=Fraction(1, 2))
    state = make_packet(0, width, kappa, band)
    traj = evolve(state, steps, phase=phase, grow=True)
    return analysis.lz_transfer_series(traj, phase.alpha)


def cmd_lz(args) -> str:
    if args.alpha_float is not None:
        profile = PhaseProfile.linear(args.alpha_float)
        default_steps = None
    else:
        q = 1 if args.alpha_q is None else args.alpha_q
        p = 5 if args.alpha_p is None else args.alpha_p
        g = math.gcd(q, p) or 1
        profile = PhaseProfile.rational(q // g, p // g)
        default_steps = 2 * profile.p if profile.q else None
    steps = default_steps if args.steps is None else args.steps
    if steps is None:
        raise ValueError("--steps is required when the gradient has no finite Bloch period")
    width = 10.0 if args.packet_width is None else args.packet_width
    kappa = 0.0 if args.packet_kappa is None else args.packet_kappa
    band = "plus" if args.packet_band is None else args.packet_band
    out = _out_dir(args)
    report = _lz_run(profile, width, kappa, band, steps)
    io.write_report([report], out / "lz.json", {"alpha": profile.alpha, "steps": steps})
    return f"max_transfer={_fmt(report.extracted_scalar)} final_transfer={_fmt(report.values[-1])}"


def _sweep_point(p: int):
    _, peak_step, peak_fid = _bloch_point(p, 2 * p)
    lz = _lz_run(PhaseProfile.rational(1, p), 10.0, 0.0, "plus", 2 * p)
    return p, peak_step, peak_fid, lz.extracted_scalar


def cmd_sweep(args) -> str:
    ps = list(args.sweep_p)
    if any(p < 1 for p in ps):
        raise ValueError("--p values must be positive integers")
    if args.threads < 1:
        raise ValueError("--threads must be >= 1")
    out = _out_dir(args)
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(_sweep_point, ps))
    lines = ["p,alpha,peak_step,peak_fidelity,lz_max_transfer"]
    for p, step, fid, lz in rows:
        lines.append(",".join([str(p), _fmt(2 * math.pi / p), str(step), _fmt(fid), _fmt(lz)]))
    (out / "sweep.csv").write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    exact = sum(1 for p, step, _, _ in rows if step == 2 * p)
    return f"points={len(rows)} recovered_at_2p={exact}"


def cmd_presets(args) -> str:
    table = {
        name: {"description": desc, "steps": PRESET_STEPS, "q": a["q"], "p": a["p"], "spinor": "down"}
        for name, (desc, a) in sorted(PRESETS.items())
    }
    for name, row in table.items():
        print(f"{name}: alpha=2pi*{row['q']}/{row['p']} steps={row['steps']}  {row['description']}")
    if args.out is not None:
        out = _out_dir(args)
        (out / "presets.json").write_bytes((json.dumps(table, indent=2) + "\n").encode("utf-8"))
    return f"presets={len(table)}"


COMMANDS = {
    "evolve": cmd_evolve,
    "bands": cmd_bands,
    "bloch": cmd_bloch,
    "zitter": cmd_zitter,
    "lz": cmd_lz,
    "sweep": cmd_sweep,
    "presets": cmd_presets,
}


def run_cli(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        summary = COMMANDS[args.verb](args)
    except (ValueError, BoundaryError, OSError) as exc:
        print(f"qwalk {args.verb}: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
