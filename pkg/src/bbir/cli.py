"""Command-line entry point: ``bbir synth|fit|sim|compare``.

Exit codes: 0 success, 1 comparison above threshold, 2 parse/config error,
3 validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import baseband, fourier_fit, oracle, touchstone, transient
from .config import RunConfig, load_config
from .errors import NumericalError, ParseError, ValidationError

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _override(args, attr, cfg_value):
    val = getattr(args, attr, None)
    return cfg_value if val is None else val


def cmd_synth(cfg: RunConfig, args) -> int:
    net = oracle.sample_network(cfg.network, cfg.freqs_hz)
    out = Path(args.output) if args.output else cfg.output_path("touchstone")
    fmt = cfg.outputs.get("touchstone_format", "RI")
    _write(out, touchstone.write_touchstone(net, fmt, "GHZ"))
    print(
        f"synth: {len(net)} points, {net.freqs_hz[0]:.6g} .. {net.freqs_hz[-1]:.6g} Hz, "
        f"max |S11| = {np.abs(net.s).max():.4f} -> {out}"
    )
    return EXIT_OK


def fit_table(bb: baseband.BasebandData, ir: fourier_fit.ImpulseResponse) -> str:
    """Data vs model on the fit grid, one row per frequency point."""
    model = fourier_fit.evaluate(ir, bb.offsets_rad)
    p = bb.port_count
    cols = ["offset_rad", "freq_hz"]
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            cols += [f"re_data_s{i}{j}", f"im_data_s{i}{j}", f"re_model_s{i}{j}", f"im_model_s{i}{j}"]
    out = io.StringIO()
    out.write(",".join(cols) + "\n")
    for w, f, d, m in zip(bb.offsets_rad, bb.freqs_hz, bb.s, model):
        fields = [repr(float(w)), repr(float(f))]
        for dv, mv in zip(d.reshape(-1), m.reshape(-1)):
            fields += [repr(dv.real), repr(dv.imag), repr(mv.real), repr(mv.imag)]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def cmd_fit(cfg: RunConfig, args) -> int:
    src = Path(args.input) if args.input else cfg.output_path("touchstone")
    try:
        net = touchstone.load_network(src, args.ports)
    except OSError as exc:
        raise ParseError(f"cannot read {src}: {exc}") from None
    bb = baseband.to_baseband(
        net,
        _override(args, "carrier_hz", cfg.carrier_hz),
        _override(args, "omega_m_rad", cfg.omega_m_rad),
    )
    order = _override(args, "order", cfg.order)
    tol = _override(args, "tol", cfg.tol)
    if order is None:
        order = fourier_fit.choose_order(bb, tol, _override(args, "n_max", cfg.n_max))
    ir, report = fourier_fit.fit(bb, order)

    taps_path = Path(args.taps) if args.taps else cfg.output_path("taps")
    report_path = Path(args.report) if args.report else cfg.output_path("fit_report")
    table_path = Path(args.table) if args.table else cfg.output_path("fit_table")
    _write(taps_path, fourier_fit.write_taps(ir))
    _write(table_path, fit_table(bb, ir))
    summary = {
        "input": str(src),
        "order_n": report.order_n,
        "max_abs_error": report.max_abs_error,
        "rms_error": report.rms_error,
        "condition_estimate": report.condition_estimate,
        "carrier_hz": bb.carrier_hz,
        "omega_m_rad": bb.half_bandwidth_rad,
        "dt_s": ir.dt_s,
        "points": int(bb.offsets_rad.size),
        "tol": tol,
    }
    _write(report_path, json.dumps(summary, indent=2) + "\n")
    print(
        f"fit: N={report.order_n} max_abs_error={report.max_abs_error:.3e} "
        f"rms_error={report.rms_error:.3e} cond={report.condition_estimate:.3g} "
        f"dt={ir.dt_s:.4g} s -> {taps_path}"
    )
    return EXIT_OK


def _sources(cfg: RunConfig, ir: fourier_fit.ImpulseResponse) -> list[transient.TheveninSource]:
    if cfg.source_kind == "multisine":
        spec = cfg.multisine_for_carrier(ir.carrier_hz)
        env = transient.multisine_envelope(spec, ir.dt_s)
    elif cfg.source_kind == "constant":
        env = transient.constant_envelope(cfg.source_value_v)
    else:
        env = transient.impulse_envelope(cfg.source_value_v)
    return [transient.TheveninSource(cfg.r_s_ohm, env) for _ in range(ir.port_count)]


def cmd_sim(cfg: RunConfig, args) -> int:
    taps_path = Path(args.taps) if args.taps else cfg.output_path("taps")
    try:
        ir = fourier_fit.load_taps(taps_path)
    except OSError as exc:
        raise ParseError(f"cannot read {taps_path}: {exc}") from None
    n_steps = _override(args, "n_steps", cfg.n_steps)
    result = transient.run(ir, _sources(cfg, ir), n_steps)
    out = Path(args.output) if args.output else cfg.output_path("waveform")
    _write(out, transient.write_sim_csv(result))
    print(
        f"sim: {result.n_steps} steps at dt={result.dt_s:.4g} s, "
        f"max |i| = {np.abs(result.i).max():.4e} A -> {out}"
    )
    return EXIT_OK


def envelope_errors(actual: np.ndarray, reference: np.ndarray) -> tuple[float, float]:
    """Peak- and RMS-normalized complex errors of ``actual`` against ``reference``."""
    diff = np.abs(actual - reference)
    peak = np.abs(reference).max()
    rms_ref = math.sqrt(float(np.mean(np.abs(reference) ** 2)))
    if peak == 0:
        return (0.0, 0.0) if diff.max() == 0 else (math.inf, math.inf)
    return float(diff.max() / peak), float(math.sqrt(float(np.mean(diff**2))) / rms_ref)


def cmd_compare(cfg: RunConfig, args) -> int:
    wf_path = Path(args.waveform) if args.waveform else cfg.output_path("waveform")
    try:
        sim = transient.load_sim_csv(wf_path)
    except OSError as exc:
        raise ParseError(f"cannot read {wf_path}: {exc}") from None

    warmup = _override(args, "warmup_steps", cfg.warmup_steps)
    threshold = _override(args, "threshold", cfg.threshold)

    if args.reference:
        ref = transient.load_sim_csv(args.reference)
        if ref.n_steps != sim.n_steps or ref.port_count != sim.port_count:
            raise ValidationError(
                f"waveform shapes differ: {sim.n_steps}x{sim.port_count} vs {ref.n_steps}x{ref.port_count}"
            )
        if not math.isclose(ref.dt_s, sim.dt_s, rel_tol=1e-12):
            raise ValidationError(f"time steps differ: {sim.dt_s} vs {ref.dt_s}")
        reference = ref.i
        source = str(args.reference)
        warmup = 0 if warmup is None else warmup
    else:
        if cfg.source_kind != "multisine":
            raise ValidationError("oracle comparison needs a multisine source in the config")
        if sim.port_count != 1:
            raise ValidationError("the line-cascade oracle is one-port; use --reference for multiport runs")
        taps_path = Path(args.taps) if args.taps else cfg.output_path("taps")
        try:
            ir = fourier_fit.load_taps(taps_path)
        except OSError as exc:
            raise ParseError(f"cannot read {taps_path}: {exc}") from None
        if not math.isclose(ir.dt_s, sim.dt_s, rel_tol=1e-9):
            raise ValidationError(f"waveform step {sim.dt_s} s does not match tap step {ir.dt_s} s")
        if warmup is None:
            warmup = ir.order_n + 1
        spec = cfg.multisine_for_carrier(ir.carrier_hz)
        ss = oracle.steady_state_multisine(cfg.network, spec, ir.carrier_hz, cfg.r_s_ohm)
        reference = ss.current(sim.t_s)[:, None]
        source = "oracle"

    if warmup >= sim.n_steps:
        raise ValidationError(f"warm-up of {warmup} steps leaves nothing of {sim.n_steps} samples")
    max_rel, rms_rel = envelope_errors(sim.i[warmup:], reference[warmup:])
    passed = max_rel <= threshold
    report = {
        "waveform": str(wf_path),
        "reference": source,
        "warmup_steps": int(warmup),
        "samples_compared": int(sim.n_steps - warmup),
        "max_rel_err": max_rel,
        "rms_rel_err": rms_rel,
        "threshold": threshold,
        "pass": bool(passed),
    }
    out = Path(args.output) if args.output else cfg.output_path("compare_report")
    _write(out, json.dumps(report, indent=2) + "\n")
    print(
        f"compare: max_rel_err={max_rel:.3e} rms_rel_err={rms_rel:.3e} "
        f"threshold={threshold:g} -> {'PASS' if passed else 'FAIL'}"
    )
    return EXIT_OK if passed else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbir", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="YAML run config (defaults to the built-in two-line harness)")
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "sample the analytic line network to a Touchstone file")
    p.add_argument("--output")

    p = add("fit", cmd_fit, "fit a baseband impulse response to S-parameter data")
    p.add_argument("--input", help=".sNp or .csv file")
    p.add_argument("--ports", type=int, help="port count for files without a .sNp extension")
    p.add_argument("--carrier-hz", type=float)
    p.add_argument("--omega-m-rad", type=float, help="override the half bandwidth (rad/s)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--order", type=int)
    g.add_argument("--tol", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--taps")
    p.add_argument("--report")
    p.add_argument("--table")

    p = add("sim", cmd_sim, "run the transient solver on a tap file")
    p.add_argument("--taps")
    p.add_argument("--n-steps", type=int)
    p.add_argument("--output")

    p = add("compare", cmd_compare, "compare a waveform against the oracle or another waveform")
    p.add_argument("--waveform")
    p.add_argument("--reference", help="second waveform CSV instead of the analytic oracle")
    p.add_argument("--taps")
    p.add_argument("--warmup-steps", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--output")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
