"""Batch entry point: parse a run config, execute, write reports and CSV.

Config files are ``key = value`` lines ('#' starts a comment).  Keys:

    command     verify-algebra | verify-duality | verify-reversibility |
                verify-all | thermalize | simulate | dual-check
    model       IEM(s1,t1;s2,t2) | RIEM(g1,d1;g2,d2) | RW | PIEM(q1,q2)
                (parameters are exact fraction or decimal literals)
    nmax        largest total mass on the verification path (default 8)
    seed        RNG seed (default 0)
    graph       path to an edge-list file, one '0-indexed u v' pair per line
    tmax        simulated time horizon (simulate)
    time        prediction horizon (dual-check)
    samples, burn_in, thin, replicas, tolerance   sampling controls
    out         output directory (overridden by --out)
    arithmetic  exact | float

Exit status: 0 when every check passes (or the simulation completes),
1 when some check fails, 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from . import models, simulate, verify
from .errors import ConfigError, ExchangeError
from .models import (
    ImmediateExchange,
    ModelSpec,
    PoissonExchange,
    RandomWalkExchange,
    RestrictedExchange,
    spec_label,
)

COMMANDS = (
    "verify-algebra",
    "verify-duality",
    "verify-reversibility",
    "verify-all",
    "thermalize",
    "simulate",
    "dual-check",
)

_DEFAULTS = {
    "nmax": 8,
    "seed": 0,
    "tmax": 10.0,
    "time": 1.0,
    "samples": 10000,
    "burn_in": 1000,
    "thin": 1.0,
    "replicas": 2000,
    "tolerance": 0.05,
    "arithmetic": "exact",
    "jobs": 1,
}


@dataclass
class RunConfig:
    command: str
    model: ModelSpec
    nmax: int = 8
    seed: int = 0
    graph: str | None = None
    tmax: float = 10.0
    time: float = 1.0
    samples: int = 10000
    burn_in: int = 1000
    thin: float = 1.0
    replicas: int = 2000
    tolerance: float = 0.05
    out: str = "exdyn-out"
    arithmetic: str = "exact"
    jobs: int = 1


_MODEL_RE = re.compile(r"^([A-Za-z]+)\s*(?:\((.*)\))?$")


def parse_model(text: str) -> ModelSpec:
    match = _MODEL_RE.match(text.strip())
    if not match:
        raise ConfigError(f"cannot parse model {text!r}")
    family = match.group(1).upper()
    body = match.group(2)
    params: list[Fraction] = []
    if body is not None and body.strip():
        for chunk in body.replace(";", ",").split(","):
            chunk = chunk.strip()
            try:
                params.append(Fraction(chunk))
            except (ValueError, ZeroDivisionError) as err:
                raise ConfigError(f"bad parameter {chunk!r} in model {text!r}") from err
    try:
        if family == "IEM":
            if len(params) != 4:
                raise ConfigError("IEM needs four parameters: IEM(s1,t1;s2,t2)")
            return ImmediateExchange(*params)
        if family == "RIEM":
            if len(params) != 4:
                raise ConfigError("RIEM needs four parameters: RIEM(g1,d1;g2,d2)")
            if any(p.denominator != 1 for p in params):
                raise ConfigError("RIEM capacities must be integers")
            return RestrictedExchange(*(int(p) for p in params))
        if family == "RW":
            if params:
                raise ConfigError("RW takes no parameters")
            return RandomWalkExchange()
        if family == "PIEM":
            if len(params) != 2:
                raise ConfigError("PIEM needs two parameters: PIEM(q1,q2)")
            return PoissonExchange(*params)
    except ExchangeError as err:
        raise ConfigError(f"invalid model {text!r}: {err}") from err
    raise ConfigError(f"unknown model family {family!r}")


_INT_KEYS = {"nmax", "seed", "samples", "burn_in", "replicas", "jobs"}
_FLOAT_KEYS = {"tmax", "time", "thin", "tolerance"}
_STR_KEYS = {"command", "graph", "out", "arithmetic"}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config; rejects unknown keys and bad combinations."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key == "model":
            values["model"] = parse_model(value)
        elif key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError as err:
                raise ConfigError(f"line {lineno}: {key} must be an integer") from err
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError as err:
                raise ConfigError(f"line {lineno}: {key} must be a number") from err
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if "command" not in values:
        raise ConfigError("missing required key 'command'")
    if values["command"] not in COMMANDS:
        raise ConfigError(f"unknown command {values['command']!r}")
    if "model" not in values:
        raise ConfigError("missing required key 'model'")
    config = RunConfig(**values)
    _validate_config(config)
    return config


def _validate_config(config: RunConfig) -> None:
    if config.nmax < 1:
        raise ConfigError("nmax must be at least 1")
    if config.arithmetic not in ("exact", "float"):
        raise ConfigError("arithmetic must be 'exact' or 'float'")
    spec = config.model
    if config.command in ("verify-duality", "verify-all"):
        if isinstance(spec, RestrictedExchange) and spec.g1 != spec.g2:
            raise ConfigError(
                "model: duality verification needs equal top capacities "
                f"(got {spec.g1} and {spec.g2}); the exchange step is not total"
            )
    if config.command in ("simulate", "dual-check"):
        if config.graph is None:
            raise ConfigError(f"command {config.command} needs a graph file")


def _float_spec(spec: ModelSpec) -> ModelSpec:
    if isinstance(spec, ImmediateExchange):
        return ImmediateExchange(*(float(x) for x in (spec.s1, spec.t1, spec.s2, spec.t2)))
    if isinstance(spec, PoissonExchange):
        return PoissonExchange(float(spec.q1), float(spec.q2))
    return spec


def _write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)


def _summary(config: RunConfig, reports) -> str:
    failed = [r.name for r in reports if not r.passed]
    payload = {
        "command": config.command,
        "model": spec_label(config.model),
        "nmax": config.nmax,
        "seed": config.seed,
        "arithmetic": config.arithmetic,
        "checks": len(reports),
        "passed": sum(1 for r in reports if r.passed),
        "failed": failed,
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def _run_verify(config: RunConfig, out: Path) -> int:
    spec = config.model if config.arithmetic == "exact" else _float_spec(config.model)
    if config.command == "verify-algebra":
        parts = [verify.verify_algebra]
    elif config.command == "verify-duality":
        parts = [verify.verify_duality]
    elif config.command == "verify-reversibility":
        parts = [verify.verify_reversibility]
    else:
        # same composition as verify.verify_all, split for optional threading
        parts = [lambda s, n: verify.verify_algebra(s, min(n, 8)), verify.verify_duality]
    if config.jobs > 1 and len(parts) > 1:
        # independent check groups; merged in submission order for determinism
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(lambda fn: fn(spec, config.nmax), parts))
    else:
        chunks = [fn(spec, config.nmax) for fn in parts]
    reports = [r for chunk in chunks for r in chunk]
    _write(out / "reports.json", verify.reports_to_json(reports) + "\n")
    _write(out / "summary.json", _summary(config, reports) + "\n")
    return 0 if all(r.passed for r in reports) else 1


def _thermalize_generator(spec: ModelSpec, agent: int, nmax: int):
    if isinstance(spec, ImmediateExchange):
        s = (spec.s1, spec.s2)[agent]
        t = (spec.t1, spec.t2)[agent]
        return models.sip_generator(s, t, nmax)
    if isinstance(spec, RestrictedExchange):
        g = (spec.g1, spec.g2)[agent]
        d = (spec.d1, spec.d2)[agent]
        return models.sep_generator(g, d, nmax)
    if isinstance(spec, RandomWalkExchange):
        return models.rw_generator(1, nmax)
    q = (spec.q1, spec.q2)[agent]
    return models.rw_generator(q, nmax)


def _run_thermalize(config: RunConfig, out: Path) -> int:
    spec = config.model
    caps = models.pair_caps(spec)
    lines = ["agent,total,k,stationary,splitting_law"]
    mismatches = []
    for agent in range(2):
        top = config.nmax if caps is None else min(config.nmax, caps[agent])
        gen = _thermalize_generator(spec, agent, top)
        for total in range(top + 1):
            try:
                stat = models.thermalize(gen, total)
            except ExchangeError as err:
                mismatches.append({"agent": agent, "total": total, "error": str(err)})
                continue
            law = models.split_pmf(spec, agent, total)
            for k in stat.support:
                a, b = stat.prob(k), law.prob(k)
                lines.append(
                    f"{agent},{total},{k},{verify.format_scalar(a)},{verify.format_scalar(b)}"
                )
                if a != b:
                    mismatches.append(
                        {"agent": agent, "total": total, "k": k,
                         "stationary": verify.format_scalar(a),
                         "splitting_law": verify.format_scalar(b)}
                    )
    _write(out / "thermalize.csv", "\n".join(lines) + "\n")
    payload = {
        "command": "thermalize",
        "model": spec_label(spec),
        "nmax": config.nmax,
        "match": not mismatches,
        "mismatches": mismatches,
    }
    _write(out / "summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0 if not mismatches else 1


def _load_graph(config: RunConfig) -> simulate.Graph:
    path = Path(config.graph)
    if not path.exists():
        raise ConfigError(f"graph file not found: {path}")
    return simulate.Graph.from_edge_list(path.read_text())


def _initial_config(graph: simulate.Graph, spec: ModelSpec) -> tuple[int, ...]:
    caps = simulate.vertex_caps(graph, spec)
    return tuple(10 if cap is None else min(10, cap) for cap in caps)


def _run_simulate(config: RunConfig, out: Path) -> int:
    graph = _load_graph(config)
    spec = config.model
    init = _initial_config(graph, spec)
    traj = simulate.run(graph, spec, init, config.tmax, config.seed)
    _write(out / "trajectory.csv", simulate.trajectory_to_csv(traj))
    hist = simulate.stationary_histogram(
        graph, spec, init, config.burn_in, config.samples, config.thin, config.seed
    )
    _write(out / "histogram.csv", simulate.histogram_to_csv(hist))
    if hist.joint is not None:
        _write(out / "joint_histogram.csv", simulate.joint_histogram_to_csv(hist))
    payload = {
        "command": "simulate",
        "model": spec_label(spec),
        "graph": {"vertices": graph.n_vertices, "edges": [list(e) for e in graph.edges]},
        "initial": list(init),
        "events": len(traj.times),
        "tmax": config.tmax,
        "samples": config.samples,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "seed": config.seed,
        "total_mass": sum(init),
    }
    _write(out / "summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _run_dual_check(config: RunConfig, out: Path) -> int:
    graph = _load_graph(config)
    spec = config.model
    init = _initial_config(graph, spec)
    predicted = simulate.dual_moment_estimate(graph, spec, init, config.time)
    estimated = simulate.mc_mean_wealth(
        graph, spec, init, config.time, config.replicas, config.seed
    )
    lines = ["vertex,predicted,estimated,rel_error"]
    worst = 0.0
    for v in range(graph.n_vertices):
        scale = max(1.0, abs(float(predicted[v])))
        rel = abs(float(predicted[v]) - float(estimated[v])) / scale
        worst = max(worst, rel)
        lines.append(f"{v},{float(predicted[v])!r},{float(estimated[v])!r},{rel!r}")
    _write(out / "dual_check.csv", "\n".join(lines) + "\n")
    payload = {
        "command": "dual-check",
        "model": spec_label(spec),
        "time": config.time,
        "replicas": config.replicas,
        "seed": config.seed,
        "worst_rel_error": worst,
        "tolerance": config.tolerance,
        "within_tolerance": worst <= config.tolerance,
    }
    _write(out / "summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0 if worst <= config.tolerance else 1


def execute(config: RunConfig) -> int:
    """Run one configured command, writing artifacts under ``config.out``."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if config.command.startswith("verify"):
        return _run_verify(config, out)
    if config.command == "thermalize":
        return _run_thermalize(config, out)
    if config.command == "simulate":
        return _run_simulate(config, out)
    return _run_dual_check(config, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="exdyn",
        description="Verify exchange-model identities exactly or simulate them on graphs.",
    )
    parser.add_argument("--config", required=True, help="path to a run config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--jobs", type=int, help="worker threads (EXDYN_JOBS fallback)")
    parser.add_argument("--arithmetic", choices=("exact", "float"),
                        help="verification arithmetic (overrides config)")
    args = parser.parse_args(argv)
    try:
        config = parse_config(Path(args.config).read_text())
        if args.out is not None:
            config = replace(config, out=args.out)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.arithmetic is not None:
            config = replace(config, arithmetic=args.arithmetic)
        jobs = args.jobs
        if jobs is None and os.environ.get("EXDYN_JOBS"):
            jobs = int(os.environ["EXDYN_JOBS"])
        if jobs is not None:
            config = replace(config, jobs=jobs)
        _validate_config(config)
        return execute(config)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ExchangeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
