"""Experiment runner: every protocol quantity behind one command line.

Subcommands emit tidy CSV (or JSON) tables, one observation per row, and
always write a JSON sidecar recording the resolved run configuration,
tool version and numeric tolerances, so every table is reproducible from
its own metadata. Numbers are printed with 17 significant digits and the
row order is fixed, making output byte-identical across reruns.

Exit codes: 0 on success, 2 on usage errors, 3 on numeric validation
failures (cutoff escalation, dyad-count explosions, vanishing densities).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import fidelity_with_pure, quadrature_wavefunction, scs_state
from .cascade import CascadePolicy, TermBudgetExceeded, cascade_run, window_discretize
from .fock import FockCutoffError
from .protocol import (
    QUAD_ABS_TOL,
    AmpConfig,
    avg_fidelity_window,
    density_profile,
    fidelity_profile,
    max_prob_at_target,
)
from .wigner import wigner_state

SCHEMA_VERSION = 1
PAIRING_CHOICES = ("odd-odd", "even-even", "even-odd")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class Range:
    """Inclusive numeric range parsed from a start:stop:step string."""

    raw: str
    values: tuple

    def __str__(self):
        return self.raw


def parse_range(text: str) -> Range:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"range must look like start:stop:step, got {text!r}"
        )
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric range {text!r}") from None
    if step <= 0.0 or stop < start:
        raise argparse.ArgumentTypeError(
            f"range needs start <= stop and step > 0, got {text!r}"
        )
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return Range(text, tuple(start + i * step for i in range(count)))


def parse_float_list(text: str) -> Range:
    try:
        values = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return Range(text, values)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _json_ready(obj):
    if isinstance(obj, Range):
        return obj.raw
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_table(path: Path, columns, rows, fmt: str, meta: dict) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
        path.write_text("\n".join(lines) + "\n")
    else:
        payload = dict(meta)
        payload["columns"] = list(columns)
        payload["rows"] = [
            [v if not isinstance(v, float) else float(_fmt(v)) for v in row]
            for row in rows
        ]
        path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=1, default=_json_ready) + "\n")


def _meta(command: str, resolved: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "catamp",
        "version": __version__,
        "command": command,
        "config": {k: _json_ready(v) for k, v in sorted(resolved.items())},
        "tolerances": {
            "quad_abs_tol": QUAD_ABS_TOL,
            "window_bisect_tol": 1e-6,
            "prune_tol": 1e-14,
            "fock_norm_deficit_tol": 1e-10,
        },
    }


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _psi_real(a: float, x: float) -> float:
    return quadrature_wavefunction(a, x).real


def cmd_curves(opts: dict) -> int:
    """Vacuum wavefunction against the amplified-state combination."""
    sqrt2 = math.sqrt(2.0)
    sign = -1.0 if opts["pairing"] == "even-odd" else 1.0
    rows = []
    for alpha in opts["alphas"].values:
        for x in opts["x_range"].values:
            vac = _psi_real(0.0, x)
            combo = _psi_real(sqrt2 * alpha, x) + sign * _psi_real(-sqrt2 * alpha, x)
            rows.append((alpha, x, vac, combo))
    write_table(
        opts["out"], ("alpha", "x", "vacuum", "combination"), rows,
        opts["format"], _meta("curves", opts),
    )
    return EXIT_OK


def cmd_sweep(opts: dict) -> int:
    """Fidelity and outcome-density surface over (alpha, x0)."""
    xs = np.asarray(opts["x_range"].values)
    rows = []
    for alpha in opts["alpha_range"].values:
        cfg = AmpConfig(alpha, opts["pairing"], opts["loss"])
        dens = density_profile(cfg, xs)
        fid = fidelity_profile(cfg, xs)
        for x, f, p in zip(xs, fid, dens):
            rows.append((alpha, float(x), float(f), float(p)))
    write_table(
        opts["out"], ("alpha", "x0", "fidelity", "density"), rows,
        opts["format"], _meta("sweep", opts),
    )
    return EXIT_OK


def cmd_density(opts: dict) -> int:
    """Outcome density p(x) for one or more input amplitudes."""
    xs = np.asarray(opts["x_range"].values)
    rows = []
    for alpha in opts["alphas"].values:
        cfg = AmpConfig(alpha, opts["pairing"], opts["loss"])
        dens = density_profile(cfg, xs)
        for x, p in zip(xs, dens):
            rows.append((alpha, float(x), float(p)))
    write_table(
        opts["out"], ("alpha", "x", "density"), rows,
        opts["format"], _meta("density", opts),
    )
    return EXIT_OK


def cmd_success(opts: dict) -> int:
    """Success probability of reaching target fidelities, per amplitude."""
    rows = []
    for alpha in opts["alpha_range"].values:
        cfg = AmpConfig(alpha, opts["pairing"], opts["loss"])
        for target in opts["targets"].values:
            stats = max_prob_at_target(cfg, target)
            rows.append(
                (alpha, target, opts["loss"], stats.probability, stats.half_width)
            )
    write_table(
        opts["out"], ("alpha", "target", "loss", "probability", "window"), rows,
        opts["format"], _meta("success", opts),
    )
    return EXIT_OK


def cmd_wigner(opts: dict) -> int:
    """Phase-space grids of the input states and the amplified output."""
    alpha = opts["alpha"]
    cfg = AmpConfig(alpha, opts["pairing"], opts["loss"])
    grid_range = opts["grid"].values
    lo, hi = grid_range[0], grid_range[-1]
    step = opts["grid"].values[1] - opts["grid"].values[0] if len(grid_range) > 1 else 0.05

    amplified = window_discretize(cfg, opts["window"], opts["nodes"])
    states = [
        ("input-even", scs_state(alpha, "even")),
        ("input-odd", scs_state(alpha, "odd")),
        ("amplified", amplified),
    ]
    rows = []
    for name, state in states:
        grid = wigner_state(state, (lo, hi), (lo, hi), step)
        for i, x in enumerate(grid.x_axis):
            for j, p in enumerate(grid.p_axis):
                rows.append((name, float(x), float(p), float(grid.values[i, j])))

    stats = avg_fidelity_window(cfg, opts["window"])
    meta = _meta("wigner", opts)
    meta["window_stats"] = {
        "half_width": stats.half_width,
        "probability": stats.probability,
        "avg_fidelity": stats.avg_fidelity,
        "mixture_fidelity": fidelity_with_pure(amplified, cfg.target_state()),
    }
    write_table(
        opts["out"], ("state", "x", "p", "wigner"), rows, opts["format"], meta,
    )
    return EXIT_OK


def cmd_cascade(opts: dict) -> int:
    """Stage-by-stage reports of an iterated amplification cascade.

    With --format json the reports go out as JSON lines, one stage per
    line; CSV keeps the tidy table. For exact conditioning "probability"
    is the outcome density at the conditioning point.
    """
    policy = CascadePolicy(
        stages=opts["stages"],
        conditioning=opts["conditioning"],
        x0=opts["x0"],
        window=opts["window"],
        nodes=opts["nodes"],
        input_rule=opts["rule"],
        loss_r2=opts["loss"],
    )
    reports = cascade_run(
        opts["alpha"], opts["pairing"], policy,
        checkpoint_dir=opts["checkpoint_dir"],
    )
    meta = _meta("cascade", opts)
    if opts["format"] == "json":
        path = Path(opts["out"])
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps(r.as_dict(), sort_keys=True) for r in reports]
        path.write_text("\n".join(lines) + "\n")
        sidecar = path.with_name(path.name + ".meta.json")
        sidecar.write_text(json.dumps(meta, sort_keys=True, indent=1, default=_json_ready) + "\n")
        return EXIT_OK
    rows = [
        (
            r.stage, float(r.input_alpha), r.fidelity, r.probability,
            r.cumulative_probability, r.term_count,
        )
        for r in reports
    ]
    write_table(
        opts["out"],
        ("stage", "input_alpha", "fidelity", "probability",
         "cumulative_probability", "term_count"),
        rows, opts["format"], meta,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

COMMANDS = {
    "curves": (
        cmd_curves,
        [
            ("pairing", str, "odd-odd"),
            ("alphas", parse_float_list, parse_float_list("0.5,1.0,1.5,2.0")),
            ("x-range", parse_range, parse_range("-6:6:0.02")),
        ],
    ),
    "sweep": (
        cmd_sweep,
        [
            ("pairing", str, "odd-odd"),
            ("alpha-range", parse_range, parse_range("0.05:2.5:0.05")),
            ("x-range", parse_range, parse_range("-3:3:0.05")),
            ("loss", float, 0.0),
        ],
    ),
    "density": (
        cmd_density,
        [
            ("pairing", str, "odd-odd"),
            ("alphas", parse_float_list, parse_float_list("0.5,1.0,1.5,2.0")),
            ("x-range", parse_range, parse_range("-6:6:0.02")),
            ("loss", float, 0.0),
        ],
    ),
    "success": (
        cmd_success,
        [
            ("pairing", str, "odd-odd"),
            ("alpha-range", parse_range, parse_range("0.1:2.5:0.1")),
            ("targets", parse_float_list, parse_float_list("0.90,0.95,0.99")),
            ("loss", float, 0.0),
        ],
    ),
    "wigner": (
        cmd_wigner,
        [
            ("pairing", str, "even-odd"),
            ("alpha", float, 1.2),
            ("window", float, 1.0),
            ("nodes", int, 21),
            ("grid", parse_range, parse_range("-4:4:0.05")),
            ("loss", float, 0.0),
        ],
    ),
    "cascade": (
        cmd_cascade,
        [
            ("pairing", str, "even-odd"),
            ("alpha", float, 0.8),
            ("stages", int, 2),
            ("rule", str, "clone"),
            ("conditioning", str, "window"),
            ("x0", float, 0.0),
            ("window", float, 1.0),
            ("nodes", int, 21),
            ("loss", float, 0.0),
            ("checkpoint-dir", str, None),
        ],
    ),
}

CHOICES = {
    "pairing": PAIRING_CHOICES,
    "rule": ("clone", "ideal-refresh"),
    "conditioning": ("exact", "window"),
    "format": ("csv", "json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catamp",
        description="Amplification of coherent-state superpositions: "
                    "curves, sweeps, success probabilities, Wigner grids and cascades.",
    )
    parser.add_argument("--version", action="version", version=f"catamp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, options) in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {name} experiment")
        for opt_name, conv, _default in options:
            kwargs = {"type": conv, "default": None}
            if opt_name in CHOICES:
                kwargs["choices"] = CHOICES[opt_name]
            p.add_argument(f"--{opt_name}", dest=opt_name.replace("-", "_"), **kwargs)
        p.add_argument("--out", required=True, help="output table path")
        p.add_argument("--format", choices=CHOICES["format"], default=None)
        p.add_argument("--config", default=None, help="key=value defaults file")
    return parser


def load_config_file(path: str) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_options(parser, args, options) -> dict:
    config_values = {}
    if args.config:
        try:
            config_values = load_config_file(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
    resolved = {}
    for opt_name, conv, default in options:
        key = opt_name.replace("-", "_")
        cli_value = getattr(args, key)
        if cli_value is not None:
            value = cli_value
        elif key in config_values:
            try:
                value = conv(config_values[key])
            except (argparse.ArgumentTypeError, ValueError) as exc:
                parser.error(f"config value for {opt_name}: {exc}")
            if opt_name in CHOICES and value not in CHOICES[opt_name]:
                parser.error(f"config value for {opt_name} must be one of {CHOICES[opt_name]}")
        else:
            value = default
        resolved[key] = value
    resolved["out"] = args.out
    fmt = args.format or config_values.get("format") or "csv"
    if fmt not in CHOICES["format"]:
        parser.error(f"format must be one of {CHOICES['format']}")
    resolved["format"] = fmt
    return resolved


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    runner, options = COMMANDS[args.command]
    opts = resolve_options(parser, args, options)
    try:
        return runner(opts)
    except (FockCutoffError, TermBudgetExceeded) as exc:
        print(f"catamp: numeric validation failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"catamp: numeric validation failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
