from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from palm.superposition import SuperposedModel
from patterns.geometry import Window
from processes.base import ProcessModel
from processes.binomial import BinomialModel
from processes.mixed import MixedPoissonModel, MixingLaw
from processes.poisson import PoissonModel
from processes.thomas import ThomasClusterModel

if TYPE_CHECKING:
    from .config import ExperimentConfig, ModelSpec

logger = logging.getLogger(__name__)


def build_model(spec: "ModelSpec", window: Window, built: dict[str, ProcessModel]) -> ProcessModel:
    """One model from its validated spec; superposition components must already be in ``built``."""
    p = spec.params
    if spec.kind == "poisson":
        return PoissonModel(window, p["rate"], p.get("rate_max"))
    if spec.kind == "binomial":
        return BinomialModel(window, p["n"], p.get("density"))
    if spec.kind == "mixed_poisson":
        return MixedPoissonModel(PoissonModel(window, p["rate"], p.get("rate_max")), MixingLaw(p["mixing_values"], p["mixing_probs"]))
    if spec.kind == "thomas":
        return ThomasClusterModel(window, p["kappa"], p["mu"], p["sigma"], p.get("dilation"))
    if spec.kind == "superposition":
        return SuperposedModel([built[name] for name in p["components"]])
    raise ValueError(f"Unknown model type {spec.kind!r}")


def build_models(config: "ExperimentConfig") -> dict[str, ProcessModel]:
    """All models of a config, components before the superpositions that use them."""
    specs = {spec.name: spec for spec in config.models}
    built: dict[str, ProcessModel] = {}

    def ensure(name: str) -> ProcessModel:
        if name not in built:
            spec = specs[name]
            for child in spec.params.get("components", ()):
                ensure(child)
            built[name] = build_model(spec, config.window, built)
            logger.debug("Model built | name=%s model=%s", name, built[name].describe())
        return built[name]

    for name in specs:
        ensure(name)
    return built
