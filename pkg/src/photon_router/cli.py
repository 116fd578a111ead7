"""Command-line front end.

Subcommands: ``eval``, ``sweep``, ``evolve``, ``design``, ``validate`` and
``replay``.  Exit codes: 0 success, 1 input error, 2 numerical or
convergence failure.
"""

from __future__ import annotations

import argparse
import io
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import core, design, kernels, timedomain, validation
from .errors import (ConservationViolation, DegenerateDenominator, NotConverged, RouterNumericalError,
                     SchemaError, UnknownParameter)
from .io import RunManifest, config_to_dict, parse_config, parse_space, parse_target
from .model import PulseSpec, RouterConfig

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
_AXIS = re.compile(r"^(?:ch(\d+)\.(omega|gamma_minus|gamma_plus)|pulse\.epsilon|carrier_k)$")
_FIELD_COLUMN = {"omega": 0, "gamma_minus": 1, "gamma_plus": 2}


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "0+unknown"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# grids and parameter addressing
# ---------------------------------------------------------------------------

def parse_grid(spec: str) -> dict:
    parts = spec.split(":")
    if len(parts) != 4:
        raise ValueError(f"grid spec {spec!r} must look like param:min:max:steps")
    name, lo, hi, steps = parts
    if not _AXIS.match(name):
        raise UnknownParameter(f"unknown sweep parameter {name!r}")
    try:
        lo_f, hi_f, n = float(lo), float(hi), int(steps)
    except ValueError:
        raise ValueError(f"grid spec {spec!r}: bounds must be numbers and steps an integer") from None
    if n < 2:
        raise ValueError(f"grid spec {spec!r}: steps must be >= 2")
    return {"param": name, "min": lo_f, "max": hi_f, "steps": n}


def _axis_values(axis: dict) -> np.ndarray:
    return np.linspace(axis["min"], axis["max"], axis["steps"])


class _Device:
    """Mutable array view of a config used while sweeping."""

    def __init__(self, config: RouterConfig, pulse: PulseSpec):
        self.table = np.column_stack(config.arrays())
        self.k = pulse.varpi
        self.epsilon = pulse.epsilon

    def copy(self):
        other = object.__new__(_Device)
        other.table = self.table.copy()
        other.k, other.epsilon = self.k, self.epsilon
        return other

    def set(self, name: str, value: float) -> None:
        match = _AXIS.match(name)
        if match is None:
            raise UnknownParameter(f"unknown sweep parameter {name!r}")
        if name == "carrier_k":
            self.k = value
        elif name == "pulse.epsilon":
            if value <= 0:
                raise ValueError("pulse.epsilon must stay > 0 across the sweep")
            self.epsilon = value
        else:
            i = int(match.group(1))
            if not 1 <= i <= self.table.shape[0]:
                raise UnknownParameter(f"{name}: config has {self.table.shape[0]} channels")
            if match.group(2) != "omega" and value < 0:
                raise ValueError(f"{name} must stay >= 0 across the sweep, got {value}")
            self.table[i - 1, _FIELD_COLUMN[match.group(2)]] = value

    def probabilities(self) -> np.ndarray:
        omega = np.ascontiguousarray(self.table[:, 0])
        gm = np.ascontiguousarray(self.table[:, 1])
        gp = np.ascontiguousarray(self.table[:, 2])
        back, out, ok = kernels.amplitudes(omega, gm, gp, self.k)
        if not ok:
            raise DegenerateDenominator(f"degenerate device at k={self.k}")
        probs = np.concatenate(([abs(back) ** 2], np.abs(out) ** 2))
        if abs(probs.sum() - 1.0) > core.CONSERVATION_TOL:
            raise ConservationViolation(f"probabilities sum to {probs.sum()!r}")
        return probs


# ---------------------------------------------------------------------------
# subcommands (return text to emit)
# ---------------------------------------------------------------------------

def _amp_json(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def cmd_eval(config: RouterConfig, k: float) -> str:
    amps = core.eval_amplitudes(config, k)
    dist = core.routing_distribution(amps)
    report = {
        "k": k,
        "alpha_back": _amp_json(amps.alpha_back),
        "alpha_out": [_amp_json(a) for a in amps.alpha_out],
        "p_back": dist.p_back,
        "p_out": list(dist.p_out),
        "conservation": dist.total,
    }
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def cmd_sweep(config: RouterConfig, pulse: PulseSpec, axes: list[dict], workers: int = 1) -> str:
    if not 1 <= len(axes) <= 2:
        raise ValueError("sweep takes one or two --grid axes")
    device = _Device(config, pulse)
    for axis in axes:  # validate names and ranges before any work
        probe = device.copy()
        for v in (axis["min"], axis["max"]):
            probe.set(axis["param"], v)
    first = _axis_values(axes[0])
    second = _axis_values(axes[1]) if len(axes) == 2 else None

    def row_block(v1):
        dev = device.copy()
        dev.set(axes[0]["param"], v1)
        lines = []
        for v2 in (second if second is not None else [None]):
            coords = [v1]
            if v2 is not None:
                dev.set(axes[1]["param"], v2)
                coords.append(v2)
            probs = dev.probabilities()
            lines.append(",".join(fmt(x) for x in (*coords, *probs)))
        return lines

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(row_block, first))
    else:
        blocks = [row_block(v) for v in first]
    header = [axis["param"] for axis in axes] + ["p_back"] + [f"p_out_{i + 1}" for i in range(config.n)]
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for block in blocks:
        for line in block:
            out.write(line + "\n")
    return out.getvalue()


def cmd_evolve(config: RouterConfig, pulse: PulseSpec, grid: timedomain.TimeGrid) -> tuple[str, int]:
    traj = timedomain.simulate_markov(config, pulse, grid)
    n = config.n
    header = ["t"]
    for i in range(n):
        header += [f"re_beta_{i + 1}", f"im_beta_{i + 1}"]
    header += [f"flux_{i + 1}" for i in range(n)] + ["emitter_norm"]
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    norms = traj.emitter_norm
    for r in range(traj.times.shape[0]):
        cells = [traj.times[r]]
        for b in traj.beta[r]:
            cells += [b.real, b.imag]
        cells += list(traj.flux_out[r]) + [norms[r]]
        out.write(",".join(fmt(x) for x in cells) + "\n")
    try:
        dist = timedomain.longtime_distribution(traj, config)
    except NotConverged as exc:
        out.write(f"# NOT_CONVERGED emitter_norm={fmt(exc.occupation)}\n")
        return out.getvalue(), EXIT_NUMERIC
    summary = ",".join([f"p_back={fmt(dist.p_back)}"] + [f"p_out_{i + 1}={fmt(p)}" for i, p in enumerate(dist.p_out)])
    out.write(f"# summary {summary}\n")
    return out.getvalue(), EXIT_OK


def _design_json(result: design.DesignResult, k: float) -> str:
    report = {
        "config": config_to_dict(result.config, carrier_k=k),
        "residual": result.residual,
        "evaluations": result.evaluations,
        "seed_used": result.seed_used,
        "converged": result.converged,
    }
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def cmd_design(target: design.TargetDistribution, space: design.DesignSpace, budget: int,
               restarts: int, seed: int) -> str:
    result = design.optimize(target, space, budget=budget, restarts=restarts, rng_seed=seed)
    return _design_json(result, space.k)


def cmd_validate(config, pulse, trials: int, seed: int, k: float | None = None,
                 evaluator=core.eval_amplitudes) -> tuple[str, int]:
    report = validation.validate(config, pulse, trials=trials, seed=seed, evaluator=evaluator, k=k)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    return text, EXIT_OK if report["pass"] else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photon-router", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="device JSON document")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--manifest", help="also write a replayable run manifest here")

    p = sub.add_parser("eval", help="closed-form amplitudes and probabilities at one k")
    common(p)
    p.add_argument("--k", type=float, help="probe frequency (default: carrier_k)")

    p = sub.add_parser("sweep", help="probabilities on a 1-D or 2-D parameter grid (CSV)")
    common(p)
    p.add_argument("--grid", action="append", required=True, metavar="SPEC",
                   help="param:min:max:steps; param is ch<i>.omega|gamma_minus|gamma_plus, pulse.epsilon or carrier_k")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("evolve", help="Markovian emitter dynamics under the Lorentzian pulse (CSV)")
    common(p)
    p.add_argument("--t-end", type=float, help="default: drive ramp-down plus 20 emitter lifetimes")
    p.add_argument("--dt", type=float)
    p.add_argument("--stride", type=int, default=1)

    p = sub.add_parser("design", help="search emitter parameters for a target distribution")
    p.add_argument("--target", required=True, help='JSON {"p_back": r, "p_out": [r, ...]}')
    p.add_argument("--space", help="JSON design space (delta_max, gamma_max, k, frozen)")
    p.add_argument("--out")
    p.add_argument("--manifest")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="closed form vs linear-system oracles vs time domain")
    common(p, config_required=False)
    p.add_argument("--k", type=float, help="probe frequency for the --config device (default: carrier_k)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("replay", help="re-run a manifest written with --manifest")
    p.add_argument("manifest_path")
    p.add_argument("--out", help="override the manifest's output path")
    return parser


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _manifest_from_args(args, config_doc) -> RunManifest:
    options = {}
    grid = []
    seed = None
    if args.command == "eval":
        options["k"] = args.k
    elif args.command == "sweep":
        grid = [parse_grid(g) for g in args.grid]
        options["workers"] = args.workers
    elif args.command == "evolve":
        options.update(t_end=args.t_end, dt=args.dt, stride=args.stride)
    elif args.command == "design":
        options.update(target=json.loads(_read(args.target)),
                       space=json.loads(_read(args.space)) if args.space else None,
                       budget=args.budget, restarts=args.restarts)
        seed = args.seed
    elif args.command == "validate":
        options.update(k=args.k, trials=args.trials)
        seed = args.seed
    return RunManifest(args.command, config_doc, args.out, grid, tool_version(), seed, options)


def run_manifest(manifest: RunManifest) -> tuple[str, int]:
    """Execute a manifest; returns (output text, exit code)."""
    opts = manifest.options
    cmd = manifest.subcommand
    if cmd == "design":
        target = parse_target(opts["target"])
        space = parse_space(opts.get("space"), target.n)
        return cmd_design(target, space, opts["budget"], opts["restarts"], manifest.rng_seed), EXIT_OK
    if cmd == "validate":
        if manifest.config is not None:
            config, pulse = parse_config(manifest.config)
        else:
            config = pulse = None
        return cmd_validate(config, pulse, opts["trials"], manifest.rng_seed, opts.get("k"))
    config, pulse = parse_config(manifest.config)
    if cmd == "eval":
        k = opts.get("k")
        return cmd_eval(config, pulse.varpi if k is None else k), EXIT_OK
    if cmd == "sweep":
        return cmd_sweep(config, pulse, manifest.grid, opts.get("workers", 1)), EXIT_OK
    if cmd == "evolve":
        grid = timedomain.default_grid(config, pulse)
        t_end = grid.t_end if opts.get("t_end") is None else opts["t_end"]
        dt = grid.dt if opts.get("dt") is None else opts["dt"]
        return cmd_evolve(config, pulse, timedomain.TimeGrid(t_end, dt, opts.get("stride", 1)))
    raise SchemaError(f"unknown subcommand {cmd!r} in manifest")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            manifest = RunManifest.from_json(_read(args.manifest_path))
            out_path = args.out or manifest.output
        else:
            config_doc = None
            if getattr(args, "config", None):
                config_doc = json.loads(_read(args.config))
                parse_config(config_doc)
            manifest = _manifest_from_args(args, config_doc)
            out_path = args.out
            if args.manifest:
                _emit(manifest.to_json(), args.manifest)
        text, code = run_manifest(manifest)
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RouterNumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if isinstance(exc, NotConverged) and exc.result is not None:
            print(f"partial result: {exc.result}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        _emit(text, out_path)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
