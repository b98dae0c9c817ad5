"""``raman-tuner`` command-line interface.

Subcommands::

    grid       table of synchronized operation points
    evolve     trajectory data for one engine
    tune       fine-tuning outcome as JSON
    reproduce  compare computed values with published references

Numbers are emitted in ``2g`` units unless ``--physical --g-mhz G`` is given;
then rates and detunings are read and written as ``nu/2pi`` in MHz and times
in microseconds.  ``--config FILE`` reads ``key = value`` lines that act as
flags placed before the command line ones, so explicit flags win.

Exit status: 0 success, 1 usage error, 2 numeric failure, 3 failed
reproduction check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import damped_analytic as da
from . import reproduce
from .exact import classify, evolve_lossless, grid_point, slow_half_period, target_for
from .model import (
    ModeIndex,
    NumericError,
    ParameterError,
    PulseShape,
    SystemParams,
)
from .propagator import evolve_pulsed, pulse_seed_time, trajectory_numeric
from .tuning import (
    SearchConfig,
    fine_tuning_time,
    optimize_detuning,
    optimize_pulse_duration,
    overlap_fidelity,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_REPRO = 0, 1, 2, 3
ENGINES = ("lossless", "perturbative", "adiabatic-linear", "adiabatic-full", "numeric", "pulsed")
SHAPES = ("rectangular", "trapezium", "sine-square")
CSV_COLUMNS = ("t", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c", "pop_a", "pop_b", "pop_c", "norm", "fidelity")

_TIME_KEYS = {"time", "seed_time", "analytic_time", "base_time", "lattice_time", "period_fast",
              "op_time", "period_slow", "t"}
_FREQ_KEYS = {"detuning", "seed_detuning", "grid_detuning", "detuning_abs", "kappa", "gamma", "delta"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Units:
    """Wire-unit conversion; identity unless a physical ``g/2pi`` is set."""

    def __init__(self, g_mhz: float | None):
        if g_mhz is not None and not g_mhz > 0:
            raise UsageError("--g-mhz must be positive")
        self.g_mhz = g_mhz

    @property
    def physical(self) -> bool:
        return self.g_mhz is not None

    def rate_in(self, v: float) -> float:
        return v / (2 * self.g_mhz) if self.physical else v

    def rate_out(self, v: float) -> float:
        return v * 2 * self.g_mhz if self.physical else v

    def time_in(self, v: float) -> float:
        return v * 2 * math.pi * 2 * self.g_mhz if self.physical else v

    def time_out(self, v: float) -> float:
        return v / (2 * math.pi * 2 * self.g_mhz) if self.physical else v

    def record(self, rec: dict) -> dict:
        out = {}
        for k, v in rec.items():
            if isinstance(v, float) and k in _TIME_KEYS:
                v = self.time_out(v)
            elif isinstance(v, float) and k in _FREQ_KEYS:
                v = self.rate_out(v)
            out[k] = v
        return out


def _add_common(p: argparse.ArgumentParser, mode=True):
    if mode:
        p.add_argument("--k", type=int, default=31)
        p.add_argument("--l", type=int, default=2)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=None, help="signed detuning (default: grid value)")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--physical", action="store_true", help="MHz / microsecond units")
    p.add_argument("--g-mhz", type=float, default=None, help="g/2pi in MHz for --physical")


def _add_pulse(p: argparse.ArgumentParser):
    p.add_argument("--shape", choices=SHAPES, default="rectangular")
    p.add_argument("--rise", type=float, default=0.1)
    p.add_argument("--fall", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="raman-tuner", description="Fine tuning of Raman pi and pi/2 operations.")
    parser.add_argument("--config", default=None, help="flat key = value file mirroring flags")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("grid", help="table of synchronized operation points")
    g.add_argument("--k-max", type=int, default=4)
    g.add_argument("--l-max", type=int, default=2)
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out", default=None)
    g.add_argument("--physical", action="store_true")
    g.add_argument("--g-mhz", type=float, default=None)

    e = sub.add_parser("evolve", help="trajectory for one engine")
    _add_common(e)
    _add_pulse(e)
    e.add_argument("--engine", choices=ENGINES, default="numeric")
    e.add_argument("--tp-scale", type=float, default=1.0, help="duration as a multiple of the operation time")
    e.add_argument("--t-end", type=float, default=None, help="explicit final time")
    e.add_argument("--resolution", type=int, default=401)
    e.set_defaults(format="csv")

    t = sub.add_parser("tune", help="fine-tuning outcome")
    t.add_argument("kind", choices=("time", "detuning", "pulse"))
    _add_common(t)
    _add_pulse(t)
    t.add_argument("--engine", choices=("numeric", "analytic"), default="numeric")
    t.add_argument("--method", choices=("align", "maximize"), default="align")

    r = sub.add_parser("reproduce", help="compare with published values")
    r.add_argument("target", choices=tuple(reproduce.TARGETS) + ("all",))
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.add_argument("--out", default=None)
    return parser


def _read_config(path: str) -> list:
    """Turn ``key = value`` lines into flag tokens."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    tokens = []
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() not in ("false", "no", "off"):
            tokens += [flag, value]
    return tokens


def _split_config(argv: list) -> list:
    """Pull ``--config`` out of ``argv`` and splice file tokens after the subcommand."""
    argv = list(argv)
    cfg = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            cfg = argv[i + 1]
            del argv[i : i + 2]
            break
        if tok.startswith("--config="):
            cfg = tok.split("=", 1)[1]
            del argv[i]
            break
    if cfg is None:
        return argv
    extra = _read_config(cfg)
    for i, tok in enumerate(argv):
        if tok in ("grid", "evolve", "tune", "reproduce"):
            # positional of tune/reproduce must stay right after the subcommand
            j = i + 2 if tok in ("tune", "reproduce") and i + 1 < len(argv) else i + 1
            return argv[:j] + extra + argv[j:]
    return argv


def _units(args) -> Units:
    if args.physical and args.g_mhz is None:
        raise UsageError("--physical requires --g-mhz")
    if args.g_mhz is not None and not args.physical:
        raise UsageError("--g-mhz requires --physical")
    return Units(args.g_mhz if args.physical else None)


def _mode(args) -> ModeIndex:
    return ModeIndex(args.k, args.l)


def _params(args, units: Units, mode: ModeIndex) -> SystemParams:
    if args.delta is None:
        delta = grid_point(mode).detuning_abs
    else:
        delta = units.rate_in(args.delta)
    return SystemParams.internal(delta=delta, kappa=units.rate_in(args.kappa), gamma=units.rate_in(args.gamma))


def _shape(args) -> PulseShape:
    if args.shape == "trapezium":
        return PulseShape.trapezium(args.rise, args.fall)
    if args.shape == "sine-square":
        return PulseShape.sine_square()
    return PulseShape.rectangular()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _table_text(columns, rows, fmt: str, meta: dict | None = None) -> str:
    if fmt == "json":
        payload = {"columns": list(columns), "rows": [list(r) for r in rows]}
        if meta:
            payload["meta"] = meta
        return _json(payload)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([("%.17g" % v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def cmd_grid(args) -> int:
    if args.k_max < 1 or args.l_max < 1:
        raise UsageError("--k-max and --l-max must be at least 1")
    units = _units(args)
    cols = ("k", "l", "detuning_abs", "theta", "op_time", "period_slow", "period_fast", "kind")
    rows = []
    for k in range(1, args.k_max + 1):
        for l in range(1, min(args.l_max, 2 * k) + 1):
            gp = grid_point(ModeIndex(k, l))
            kind = classify(gp.mode)
            rows.append((
                k, l,
                units.rate_out(gp.detuning_abs),
                gp.theta,
                units.time_out(gp.op_time),
                units.time_out(gp.period_slow),
                units.time_out(gp.period_fast),
                kind.value if kind else "none",
            ))
    _emit(_table_text(cols, rows, args.format), args.out)
    return EXIT_OK


def _state_fn(engine: str, p: SystemParams):
    if engine == "lossless":
        return lambda ts: [evolve_lossless(p, t).vector for t in ts]
    if engine == "perturbative":
        return lambda ts: [da.evolve_perturbative(p, t).vector for t in ts]
    if engine == "adiabatic-linear":
        return lambda ts: [da.evolve_adiabatic_linear(p, t).vector for t in ts]
    if engine == "adiabatic-full":
        return lambda ts: [da.evolve_adiabatic_full(p, t).vector for t in ts]
    return lambda ts: list(trajectory_numeric(p, ts).states)


def cmd_evolve(args) -> int:
    units = _units(args)
    if args.resolution < 2:
        raise UsageError("--resolution must be at least 2")
    if not args.tp_scale > 0:
        raise UsageError("--tp-scale must be positive")
    mode = _mode(args)
    p = _params(args, units, mode)
    target = target_for(p, mode).vector
    shape = _shape(args)

    if args.engine == "pulsed":
        base = pulse_seed_time(p, mode, shape)
    else:
        if shape.kind.value != "rectangular":
            raise UsageError(f"--shape {args.shape} requires --engine pulsed")
        base = grid_point(mode).op_time if args.delta is None else slow_half_period(p, mode.l)
    t_end = args.tp_scale * base if args.t_end is None else units.time_in(args.t_end)
    if not t_end > 0:
        raise UsageError("final time must be positive")
    ts = np.linspace(0.0, t_end, args.resolution)

    if args.engine == "pulsed":
        states = list(evolve_pulsed(p, shape, t_end, ts).states)
    else:
        states = _state_fn(args.engine, p)(ts)

    rows = []
    for t, psi in zip(ts, states):
        psi = np.asarray(psi, dtype=complex)
        norm = float(np.linalg.norm(psi))
        if not norm > 0:
            raise NumericError("state fully decayed")
        v = psi / norm
        pops = np.abs(v) ** 2
        rows.append((
            units.time_out(float(t)),
            float(v[0].real), float(v[0].imag),
            float(v[1].real), float(v[1].imag),
            float(v[2].real), float(v[2].imag),
            float(pops[0]), float(pops[1]), float(pops[2]),
            norm,
            overlap_fidelity(psi, target),
        ))
    meta = units.record({
        "engine": args.engine,
        "k": mode.k,
        "l": mode.l,
        "delta": p.delta,
        "kappa": p.kappa,
        "gamma": p.gamma,
        "shape": shape.kind.value,
        "t": float(t_end),
    })
    _emit(_table_text(CSV_COLUMNS, rows, args.format, meta), args.out)
    return EXIT_OK


def _clean(rec: dict) -> dict:
    return {k: (v.value if hasattr(v, "value") else v) for k, v in rec.items()}


def cmd_tune(args) -> int:
    units = _units(args)
    mode = _mode(args)
    p = _params(args, units, mode)
    kind = classify(mode)
    if kind is None:
        raise ParameterError(f"mode ({mode.k}, {mode.l}) is not a pi or pi/2 operation")
    cfg = SearchConfig()
    gp = grid_point(mode)
    seeds = {
        "grid_detuning": gp.detuning_abs,
        "op_time": gp.op_time,
        "adjusted_detuning": da.adjusted_detuning(mode, p),
    }
    if args.kind == "time":
        res = fine_tuning_time(p, mode, cfg, engine=args.engine)
        try:
            seeds["op_time_linear"] = da.op_time_linear(mode, kind, p.with_delta(gp.detuning_abs))
            seeds["op_time_full"] = da.op_times_full(mode, kind, p.with_delta(gp.detuning_abs))
        except ParameterError:
            pass
    elif args.kind == "detuning":
        if args.engine != "numeric":
            raise UsageError("detuning tuning requires --engine numeric")
        res = optimize_detuning(p, mode, cfg, method=args.method)
    else:
        res = optimize_pulse_duration(p, mode, _shape(args), cfg)
        seeds["pulse_seed_time"] = res.extra["seed_time"]
    rec = units.record(_clean(res.as_dict()))
    for key in ("op_time", "op_time_linear", "op_time_full", "pulse_seed_time"):
        if key in seeds:
            seeds[key] = units.time_out(seeds[key])
    for key in ("grid_detuning", "adjusted_detuning"):
        seeds[key] = units.rate_out(seeds[key])
    rec["seeds"] = seeds
    rec["k"], rec["l"], rec["tune"] = mode.k, mode.l, args.kind
    rec["units"] = "physical" if units.physical else "2g"
    _emit(_json(rec), args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    checks = reproduce.run(args.target)
    if args.format == "json":
        text = _json([c.as_dict() for c in checks])
    else:
        text = "".join(c.line() + "\n" for c in checks)
        n_fail = sum(not c.passed for c in checks)
        text += f"{len(checks) - n_fail}/{len(checks)} checks passed\n"
    _emit(text, args.out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_REPRO


COMMANDS = {"grid": cmd_grid, "evolve": cmd_evolve, "tune": cmd_tune, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(_split_config(argv))
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"raman-tuner: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"raman-tuner: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError, ArithmeticError) as exc:
        print(f"raman-tuner: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"raman-tuner: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
