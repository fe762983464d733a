"""Command-line front end: ``pimet rho`` and ``pimet scenario``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from . import harness
from .group import GroupError
from .limitsys import SystemError_, Thread, load_system
from .rho import DEFAULT_BUDGET, Budget, ClassError, rho
from .space import CylinderRxS1, MetricComplex, PuncturedPlane, SpaceError

SCENARIOS = ("sandwich", "cylinder", "punctured-plane", "shape-injectivity", "lemmas", "metric-independence")
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CLASS = 0, 1, 2, 3


class InputError(Exception):
    """Malformed or missing input; exit code 2."""


@dataclass
class RunConfig:
    command: str
    scenario: str | None = None
    space: str | None = None
    system: str | None = None
    a: str | None = None
    b: str | None = None
    seed: int = 0
    depth: int | None = None
    grid: int | None = None
    budget: Budget = DEFAULT_BUDGET
    radii: list = field(default_factory=list)
    samples: int | None = None
    out: str | None = None
    format: str = "json"
    threads: int = 1

    def echo(self) -> dict:
        return {
            "command": self.command, "scenario": self.scenario, "space": self.space, "system": self.system,
            "a": self.a, "b": self.b, "seed": self.seed, "depth": self.depth, "grid": self.grid,
            "budget": self.budget.to_json(), "radii": list(self.radii), "samples": self.samples,
            "format": self.format, "threads": self.threads,
        }


# -- input resolution -----------------------------------------------------------

def data_dirs() -> list[Path]:
    dirs = []
    if os.environ.get("PIMET_DATA_DIR"):
        dirs.append(Path(os.environ["PIMET_DATA_DIR"]))
    dirs.append(Path(str(resources.files("pimet") / "data")))
    return dirs


def resolve(name: str) -> Path:
    """A path as given, else looked up in the data directories."""
    p = Path(name)
    if p.is_file():
        return p
    if not p.is_absolute():
        for d in data_dirs():
            if (d / name).is_file():
                return d / name
    raise InputError(f"file not found: {name}")


def _read_json(name: str):
    path = resolve(name)
    try:
        return json.loads(path.read_text()), path
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def load_space(name: str, depth: int | None = None):
    """A metric complex, an inverse system, or one of the analytic spaces."""
    data, path = _read_json(name)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    try:
        if "shrinking_wedge" in data or "levels" in data:
            return _system_from(data, path, depth)
        model = data.get("model")
        if model == "PuncturedPlane":
            return PuncturedPlane(tuple(data.get("puncture", (0.0, 0.0))), tuple(data.get("basepoint", (1.0, 0.0))))
        if model == "CylinderRxS1":
            return CylinderRxS1(float(data.get("circumference", CylinderRxS1().circumference)),
                                tuple(data.get("basepoint", (0.0, 0.0))))
        return MetricComplex.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _system_from(data: dict, path: Path, depth: int | None):
    if depth is not None:
        if "shrinking_wedge" not in data:
            raise InputError("--depth only applies to shrinking-wedge systems")
        data = dict(data, depth=depth)
    return load_system(data, base_dir=path.parent)


def load_system_arg(name: str, depth: int | None = None):
    data, path = _read_json(name)
    try:
        return _system_from(data, path, depth)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def parse_class(text: str):
    """A word given as JSON text, or a thread file ``{"words": [...]}``."""
    stripped = text.strip()
    if not stripped.startswith("["):
        data, path = _read_json(stripped)
        if not isinstance(data, dict) or "words" not in data:
            raise InputError(f"{path}: a thread file needs a 'words' list")
        try:
            return Thread(tuple(tuple(int(x) for x in w) for w in data["words"]))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from exc
    try:
        word = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed word {text!r}") from exc
    if not isinstance(word, list) or not all(isinstance(x, int) for x in word):
        raise InputError(f"a word is a JSON array of integers, got {text!r}")
    return tuple(word)


def parse_budget(text: str | None, grid: int | None) -> Budget:
    budget = DEFAULT_BUDGET
    if text:
        try:
            fields = json.loads(text) if text.strip().startswith("{") else dict(
                item.split("=", 1) for item in text.split(",") if item.strip())
            budget = replace(budget, **{k.strip(): int(v) for k, v in fields.items()})
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            raise InputError(f"malformed budget {text!r}: {exc}") from exc
    if grid is not None:
        if grid < 1 or grid & (grid - 1):
            raise InputError("--grid must be a power of two")
        budget = replace(budget, samples_per_unit_length=grid)
    return budget


def parse_radii(text: str | None) -> list[str]:
    if not text:
        return []
    from .space import as_fraction

    out = []
    for item in text.split(","):
        try:
            r = as_fraction(item.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"malformed radius {item!r}") from exc
        if r <= 0:
            raise InputError(f"radius must be positive, got {item!r}")
        out.append(item.strip())
    return out


# -- commands -------------------------------------------------------------------

def _emit(text: str, config: RunConfig) -> None:
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_rho(config: RunConfig) -> int:
    source = config.space or config.system
    if not source:
        raise InputError("rho needs --space or --system")
    space = load_space(source, config.depth)
    a = parse_class(config.a if config.a is not None else "[]")
    b = parse_class(config.b if config.b is not None else "[]")
    try:
        interval = rho(space, a, b, config.budget)
    except (ClassError, GroupError, SystemError_) as exc:
        raise ClassError(str(exc)) from exc
    payload = dict(interval.to_json(), config=config.echo())
    if config.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["a", "b", "lower", "upper", "verdict", "seed", "budget"])
        writer.writerow([config.a, config.b, payload["lower"], payload["upper"], payload["verdict"],
                         config.seed, json.dumps(config.budget.to_json(), sort_keys=True)])
        _emit(buf.getvalue(), config)
    else:
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", config)
    return EXIT_OK


def run_scenario(config: RunConfig) -> harness.ScenarioReport:
    name = config.scenario
    seed, budget = config.seed, config.budget
    if name == "sandwich":
        system = load_system_arg(config.system or "hawaiian.json", config.depth)
        radii = config.radii or ["1/2", "1/4", "1/8", "1/16"]
        report = harness.sandwich_check(system, radii, config.samples or 100, seed, budget)
    elif name == "cylinder":
        m_max = config.depth or 8
        truncations = [m for m in (1, 2, 4, 8, 16, 32) if m <= m_max]
        report = harness.cylinder_demo(truncations, config.radii or harness.DEFAULT_CYLINDER_RADII)
    elif name == "punctured-plane":
        report = harness.punctured_plane_demo(config.depth or 64, budget=budget)
    elif name == "shape-injectivity":
        system = load_system_arg(config.system or "hawaiian.json", config.depth)
        report = harness.shape_injectivity_probe(system, config.samples or 100, seed)
    elif name == "lemmas":
        source = config.space or config.system or "wedge2.json"
        space = load_space(source, config.depth)
        report = harness.lemma_scenario(space, config.samples or 50, seed, budget=budget, label=source)
    elif name == "metric-independence":
        report = harness.metric_independence_demo(samples=config.samples or 100, seed=seed,
                                                  radii=config.radii or None, budget=budget)
    else:
        raise InputError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}")
    report.provenance["config"] = config.echo()
    return report


def cmd_scenario(config: RunConfig) -> int:
    report = run_scenario(config)
    _emit(report.to_csv() if config.format == "csv" else report.dumps(), config)
    unknown = sum(c.status == harness.UNKNOWN for c in report.checks)
    if unknown:
        print(f"{unknown} check(s) unknown", file=sys.stderr)
    return EXIT_FAIL if report.status == harness.FAIL else EXIT_OK


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pimet", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space")
    common.add_argument("--system")
    common.add_argument("--radii", help="comma-separated radii, e.g. 1/2,1/4")
    common.add_argument("--depth", type=int)
    common.add_argument("--grid", type=int, help="samples per unit length (power of two)")
    common.add_argument("--budget", help="key=value list or JSON object")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker cap (runs are single-threaded)")
    sub = parser.add_subparsers(dest="command", required=True)
    p_rho = sub.add_parser("rho", parents=[common], help="certified interval for rho(a, b)")
    p_rho.add_argument("--a", default="[]")
    p_rho.add_argument("--b", default="[]")
    p_sc = sub.add_parser("scenario", parents=[common], help="run a verification scenario")
    p_sc.add_argument("name", help=" | ".join(SCENARIOS))
    return parser


def make_config(args) -> RunConfig:
    if args.threads < 1:
        raise InputError("--threads must be at least 1")
    return RunConfig(
        command=args.command,
        scenario=getattr(args, "name", None),
        space=args.space,
        system=args.system,
        a=getattr(args, "a", None),
        b=getattr(args, "b", None),
        seed=args.seed,
        depth=args.depth,
        grid=args.grid,
        budget=parse_budget(args.budget, args.grid),
        radii=parse_radii(args.radii),
        samples=args.samples,
        out=args.out,
        format=args.format,
        threads=args.threads,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        config = make_config(args)
        if config.command == "rho":
            return cmd_rho(config)
        return cmd_scenario(config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SpaceError, SystemError_) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CLASS


if __name__ == "__main__":
    sys.exit(main())
