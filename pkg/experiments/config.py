"""Experiment config: INI-style text in, validated ExperimentConfig out.

Sections::

    [run]                  seed, window, replicates, epsilon, t_step, z_crit, output
    [model:NAME]           type = poisson | binomial | mixed_poisson | thomas | superposition
    [experiment:ID]        type = weights_exact | palm_vs_oracle | ... ; model = NAME

Option values follow the grammar in ``experiments.specs``. Validation
collects every error it can find before raising.
"""
from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass
from typing import Any

from patterns.exceptions import PalmLabError
from patterns.geometry import Ball, Window

from .builders import build_model
from .exceptions import ConfigParseError, ConfigValidationError
from .serializers import ExperimentSpecSerializer, ModelSpecSerializer, RunSerializer

logger = logging.getLogger(__name__)

MODEL_PREFIX = "model:"
EXPERIMENT_PREFIX = "experiment:"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    options: tuple[tuple[str, str], ...]
    params: dict[str, Any]


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    kind: str
    options: tuple[tuple[str, str], ...]
    params: dict[str, Any]

    def get(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)

    def __getitem__(self, name: str) -> Any:
        return self.params[name]


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    window: Window
    replicates: int
    epsilon: float
    t_step: float
    z_crit: float
    output: str
    models: tuple[ModelSpec, ...] = ()
    experiments: tuple[ExperimentSpec, ...] = ()

    @property
    def model_names(self) -> list[str]:
        return [m.name for m in self.models]


def _flatten_errors(section: str, errors: Any, prefix: str = "") -> list[str]:
    if isinstance(errors, dict):
        out: list[str] = []
        for key, value in errors.items():
            label = "" if key == "non_field_errors" else f"{key}: "
            out.extend(_flatten_errors(section, value, prefix + label))
        return out
    if isinstance(errors, list):
        return [msg for item in errors for msg in _flatten_errors(section, item, prefix)]
    return [f"[{section}] {prefix}{errors}"]


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"Malformed config: {exc}") from exc
    return parser


def _section(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    return {key: value for key, value in parser.items(name)}


def _validate(serializer_cls, data: dict[str, str], section: str, context: dict, errors: list[str]) -> dict | None:
    serializer = serializer_cls(data=data, context=context)
    unknown = sorted(set(data) - set(serializer.fields))
    errors.extend(f"[{section}] unknown option {key!r}" for key in unknown)
    if not serializer.is_valid():
        errors.extend(_flatten_errors(section, serializer.errors))
        return None
    return dict(serializer.validated_data)


def _check_cycles(models: dict[str, ModelSpec], errors: list[str]) -> None:
    state: dict[str, str] = {}

    def visit(name: str, path: list[str]) -> None:
        if state.get(name) == "done" or name not in models:
            return
        if state.get(name) == "active":
            errors.append(f"[model:{name}] superposition cycle: {' -> '.join(path + [name])}")
            return
        state[name] = "active"
        for child in models[name].params.get("components", ()):
            visit(child, path + [name])
        state[name] = "done"

    for name in models:
        visit(name, [])


def _check_models(models: dict[str, ModelSpec], window: Window, errors: list[str]) -> None:
    built: dict = {}
    failed: set[str] = set()

    def ensure(name: str) -> None:
        if name in built or name in failed:
            return
        spec = models[name]
        for child in spec.params.get("components", ()):
            ensure(child)
        if any(child in failed for child in spec.params.get("components", ())):
            failed.add(name)
            return
        try:
            built[name] = build_model(spec, window, built)
        except PalmLabError as exc:
            failed.add(name)
            errors.append(f"[model:{name}] {exc}")

    for name in models:
        ensure(name)


def _check_geometry(spec: ExperimentSpec, window: Window, default_eps: float, errors: list[str]) -> None:
    section = f"experiment:{spec.id}"
    points = [spec.get(k) for k in ("x", "y") if spec.get(k) is not None]
    for point in points:
        if not window.contains_point(point):
            errors.append(f"[{section}] point {point} lies outside the window")
            return
    if spec.kind not in ("palm_vs_oracle", "two_point_vs_oracle"):
        return
    eps = spec.get("epsilon", default_eps)
    for point in points:
        if not window.encloses(Ball(point, eps)):
            errors.append(f"[{section}] epsilon {eps:g} too large: ball around {point} leaves the window")
    if len(points) == 2:
        distance = sum((a - b) ** 2 for a, b in zip(points[0].coords, points[1].coords)) ** 0.5
        if distance <= 2 * eps:
            errors.append(f"[{section}] epsilon {eps:g} too large: balls around x and y overlap")


def parse_config(text: str) -> ExperimentConfig:
    parser = _read(text)
    errors: list[str] = []

    run_data = _section(parser, "run") if parser.has_section("run") else {}
    run = _validate(RunSerializer, run_data, "run", {}, errors)
    window = run["window"] if run else Window.unit(2)
    context = {"window": window}

    models: dict[str, ModelSpec] = {}
    experiments: list[ExperimentSpec] = []
    for section in parser.sections():
        if section == "run":
            continue
        data = _section(parser, section)
        if section.startswith(MODEL_PREFIX) and section[len(MODEL_PREFIX):].strip():
            name = section[len(MODEL_PREFIX):].strip()
            params = _validate(ModelSpecSerializer, data, section, context, errors)
            if params is not None:
                options = tuple(data.items())
                if params["type"] == "thomas" and "dilation" not in data:
                    # default came from PALM_THOMAS_DILATION
                    options += (("dilation", repr(params["dilation"])),)
                models[name] = ModelSpec(name, params["type"], options, params)
        elif section.startswith(EXPERIMENT_PREFIX) and section[len(EXPERIMENT_PREFIX):].strip():
            exp_id = section[len(EXPERIMENT_PREFIX):].strip()
            params = _validate(ExperimentSpecSerializer, data, section, context, errors)
            if params is not None:
                experiments.append(ExperimentSpec(exp_id, params["type"], tuple(data.items()), params))
        else:
            errors.append(f"[{section}] unknown section (expected run, model:NAME or experiment:ID)")

    declared = {s[len(MODEL_PREFIX):].strip() for s in parser.sections() if s.startswith(MODEL_PREFIX)}
    for spec in models.values():
        for child in spec.params.get("components", ()):
            if child not in declared:
                errors.append(f"[model:{spec.name}] unknown model {child!r}")
    for spec in experiments:
        if spec["model"] not in declared:
            errors.append(f"[experiment:{spec.id}] unknown model {spec['model']!r}")
    before_cycles = len(errors)
    _check_cycles(models, errors)
    resolvable = all(child in models for spec in models.values() for child in spec.params.get("components", ()))
    if len(errors) == before_cycles and resolvable:
        _check_models(models, window, errors)
    if run:
        for spec in experiments:
            _check_geometry(spec, window, run["epsilon"], errors)

    if errors:
        logger.warning("Config rejected | errors=%s", len(errors))
        raise ConfigValidationError(errors)

    return ExperimentConfig(
        seed=run["seed"],
        window=window,
        replicates=run["replicates"],
        epsilon=run["epsilon"],
        t_step=run["t_step"],
        z_crit=run["z_crit"],
        output=run["output"],
        models=tuple(models.values()),
        experiments=tuple(experiments),
    )


def _coords(window: Window) -> str:
    return " ".join(repr(c) for c in (*window.lower.coords, *window.upper.coords))


def serialize_config(config: ExperimentConfig) -> str:
    """Config text that parses back to an equal ExperimentConfig."""
    run = {
        "seed": str(config.seed),
        "window": _coords(config.window),
        "replicates": str(config.replicates),
        "epsilon": repr(config.epsilon),
        "t_step": repr(config.t_step),
        "z_crit": repr(config.z_crit),
        "output": config.output,
    }
    sections = [("run", tuple(run.items()))]
    sections += [(f"{MODEL_PREFIX}{spec.name}", spec.options) for spec in config.models]
    sections += [(f"{EXPERIMENT_PREFIX}{spec.id}", spec.options) for spec in config.experiments]
    lines: list[str] = []
    for name, options in sections:
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value}" for key, value in options)
        lines.append("")
    return "\n".join(lines)
