"""Run configuration: a single JSON document naming the command, the model,
and everything the command needs.  Unknown keys are rejected by name so typos
fail loudly rather than silently changing a study."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import Box, SuretyError
from .termination import (AllOf, AnyOf, ChangeOverGeneration, EvaluationLimit,
                          GenerationLimit)

SCHEMA_VERSION = 1
COMMANDS = ("solve", "multistart", "diameter", "certify", "ouq")
DEFAULT_SEED = 0


class ConfigError(SuretyError):
    """The configuration file is malformed or inconsistent."""


def _require_keys(obj, known, context):
    unknown = sorted(set(obj) - set(known))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {context} "
                          f"(known keys: {', '.join(sorted(known))})")


def _get(obj, key, types, context, required=False, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required key {key!r} in {context}")
        return default
    value = obj[key]
    if types is not None and not isinstance(value, types):
        raise ConfigError(f"key {key!r} in {context} has the wrong type "
                          f"({type(value).__name__})")
    return value


@dataclass
class ModelSpec:
    name: str | None = None
    program: list | None = None
    timeout: float = 30.0


@dataclass
class SolverSpec:
    algorithm: str = "nelder-mead"
    x0: list | None = None
    pop_size: int = 20
    weight: object = 0.8
    crossover: float = 0.9
    variant: str = "best/1/bin"
    evaluation_limit: int | None = None


@dataclass
class MultistartSpec:
    kind: str = "buckshot"
    n_starts: int = 20
    inner: str = "powell"
    evaluation_limit: int | None = None
    cluster_radius: float | None = None


@dataclass
class CertifySpec:
    threshold: float = 0.0
    pof_tolerance: float = 0.01
    mean: float | None = None


@dataclass
class OUQSpec:
    npts: tuple = (2,)
    mean_target: float = 0.0
    mean_error: float = 1.0
    direction: str = "sup"
    failure_threshold: float = 0.0
    failure_direction: str = "below"


@dataclass
class SearchSpec:
    pop_size: int = 40
    tolerance: float = 1e-8
    window: int = 50
    restarts: int = 3
    max_generations: int = 1000


@dataclass
class RunConfig:
    command: str
    model: ModelSpec
    dim: int
    seed: int = DEFAULT_SEED
    box: Box | None = None
    solver: SolverSpec = field(default_factory=SolverSpec)
    termination: object = None
    constraints: str | None = None
    penalty: dict | None = None
    map_strategy: str = "sequential"
    map_workers: int | None = None
    multistart: MultistartSpec = field(default_factory=MultistartSpec)
    certify: CertifySpec = field(default_factory=CertifySpec)
    ouq: OUQSpec = field(default_factory=OUQSpec)
    search: SearchSpec = field(default_factory=SearchSpec)
    plots: bool = True


def _parse_model(raw):
    if isinstance(raw, str):
        return ModelSpec(name=raw)
    if not isinstance(raw, dict):
        raise ConfigError("key 'model' must be a name or an object")
    _require_keys(raw, {"name", "program", "timeout"}, "'model'")
    name = _get(raw, "name", str, "'model'")
    program = _get(raw, "program", (list, str), "'model'")
    timeout = float(_get(raw, "timeout", (int, float), "'model'", default=30.0))
    if (name is None) == (program is None):
        raise ConfigError("key 'model' needs exactly one of 'name' or 'program'")
    if isinstance(program, str):
        program = [program]
    return ModelSpec(name=name, program=program, timeout=timeout)


def _parse_box(raw, dim, context="'box'"):
    if not isinstance(raw, dict):
        raise ConfigError(f"{context} must be an object with 'lower' and 'upper'")
    _require_keys(raw, {"lower", "upper"}, context)
    lower = _get(raw, "lower", list, context, required=True)
    upper = _get(raw, "upper", list, context, required=True)
    if len(lower) != dim or len(upper) != dim:
        raise ConfigError(f"{context} bounds must have length {dim}")
    try:
        return Box(lower, upper)
    except SuretyError as exc:
        raise ConfigError(f"invalid {context}: {exc}") from exc


def _parse_termination(raw, context="'termination'"):
    if not isinstance(raw, dict):
        raise ConfigError(f"{context} must be an object")
    if "any" in raw or "all" in raw:
        _require_keys(raw, {"any", "all"}, context)
        key = "any" if "any" in raw else "all"
        members = raw[key]
        if not isinstance(members, list) or not members:
            raise ConfigError(f"{context}.{key} must be a nonempty array")
        rules = [_parse_termination(m, f"{context}.{key}[{i}]")
                 for i, m in enumerate(members)]
        return AnyOf(*rules) if key == "any" else AllOf(*rules)
    _require_keys(raw, {"kind", "tolerance", "window", "limit"}, context)
    kind = _get(raw, "kind", str, context, required=True)
    if kind == "change-over-generation":
        return ChangeOverGeneration(
            tolerance=float(_get(raw, "tolerance", (int, float), context, default=1e-6)),
            window=int(_get(raw, "window", int, context, default=30)))
    if kind == "evaluation-limit":
        return EvaluationLimit(int(_get(raw, "limit", int, context, required=True)))
    if kind == "generation-limit":
        return GenerationLimit(int(_get(raw, "limit", int, context, required=True)))
    raise ConfigError(f"unknown termination kind {kind!r} in {context}")


def _parse_section(raw, cls, known, context, converters=None):
    if not isinstance(raw, dict):
        raise ConfigError(f"{context} must be an object")
    _require_keys(raw, known, context)
    kwargs = {}
    for key, value in raw.items():
        if converters and key in converters:
            value = converters[key](value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"invalid {context}: {exc}") from exc


def parse_config_data(data, path="<config>"):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: the configuration must be a JSON object")
    top_keys = {"schema", "command", "model", "dim", "seed", "box", "solver",
                "termination", "constraints", "penalty", "map", "multistart",
                "certify", "ouq", "search", "plots"}
    _require_keys(data, top_keys, "the configuration")

    schema = _get(data, "schema", int, "the configuration", required=True)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {schema} (expected {SCHEMA_VERSION})")
    command = _get(data, "command", str, "the configuration", required=True)
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r} (one of: {', '.join(COMMANDS)})")
    dim = _get(data, "dim", int, "the configuration", required=True)
    if dim < 1:
        raise ConfigError("key 'dim' must be a positive integer")

    cfg = RunConfig(
        command=command,
        model=_parse_model(_get(data, "model", None, "the configuration", required=True)),
        dim=dim,
        seed=int(_get(data, "seed", int, "the configuration", default=DEFAULT_SEED)),
        plots=bool(_get(data, "plots", bool, "the configuration", default=True)),
    )

    if "box" in data:
        cfg.box = _parse_box(data["box"], dim)
    if "solver" in data:
        cfg.solver = _parse_section(
            data["solver"], SolverSpec,
            {"algorithm", "x0", "pop_size", "weight", "crossover", "variant",
             "evaluation_limit"},
            "'solver'")
        if cfg.solver.x0 is not None and len(cfg.solver.x0) != dim:
            raise ConfigError(f"'solver'.x0 must have length {dim}")
    if "termination" in data:
        cfg.termination = _parse_termination(data["termination"])
    if "constraints" in data:
        raw = data["constraints"]
        if isinstance(raw, dict):
            _require_keys(raw, {"file"}, "'constraints'")
            try:
                with open(raw["file"]) as fh:
                    cfg.constraints = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read constraints file: {exc}") from exc
        elif isinstance(raw, str):
            cfg.constraints = raw
        else:
            raise ConfigError("key 'constraints' must be text or {'file': path}")
    if "penalty" in data:
        raw = data["penalty"]
        if not isinstance(raw, dict):
            raise ConfigError("'penalty' must be an object")
        _require_keys(raw, {"method", "k", "growth"}, "'penalty'")
        cfg.penalty = {
            "method": _get(raw, "method", str, "'penalty'", default="exterior"),
            "k": float(_get(raw, "k", (int, float), "'penalty'", default=1.0)),
            "growth": float(_get(raw, "growth", (int, float), "'penalty'", default=2.0)),
        }
    if "map" in data:
        raw = data["map"]
        if not isinstance(raw, dict):
            raise ConfigError("'map' must be an object")
        _require_keys(raw, {"strategy", "workers"}, "'map'")
        cfg.map_strategy = _get(raw, "strategy", str, "'map'", default="sequential")
        workers = _get(raw, "workers", int, "'map'")
        cfg.map_workers = None if workers is None else int(workers)
    if "multistart" in data:
        cfg.multistart = _parse_section(
            data["multistart"], MultistartSpec,
            {"kind", "n_starts", "inner", "evaluation_limit", "cluster_radius"},
            "'multistart'")
    if "certify" in data:
        cfg.certify = _parse_section(
            data["certify"], CertifySpec,
            {"threshold", "pof_tolerance", "mean"}, "'certify'",
            converters={"threshold": float, "pof_tolerance": float})
    if "ouq" in data:
        cfg.ouq = _parse_section(
            data["ouq"], OUQSpec,
            {"npts", "mean_target", "mean_error", "direction",
             "failure_threshold", "failure_direction"},
            "'ouq'", converters={"npts": tuple, "mean_target": float,
                                 "mean_error": float})
    if "search" in data:
        cfg.search = _parse_section(
            data["search"], SearchSpec,
            {"pop_size", "tolerance", "window", "restarts", "max_generations"},
            "'search'")

    _validate_command(cfg)
    return cfg


def _validate_command(cfg):
    needs_box = {"multistart", "diameter", "certify", "ouq"}
    if cfg.command in needs_box and cfg.box is None:
        raise ConfigError(f"command {cfg.command!r} requires a 'box'")
    if cfg.command == "solve":
        if cfg.solver.x0 is None and cfg.box is None:
            raise ConfigError("command 'solve' needs 'solver'.x0 or a 'box' "
                              "for random initial points")
    if cfg.command == "ouq":
        if len(cfg.ouq.npts) != cfg.dim:
            raise ConfigError("'ouq'.npts must give one support count per dimension")


def parse_config(path):
    """Load and validate a configuration file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return parse_config_data(data, path)
