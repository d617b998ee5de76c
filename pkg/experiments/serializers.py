from __future__ import annotations

from typing import Any, Callable, Dict

from django.conf import settings
from rest_framework import serializers

from patterns.rng import MAX_SEED

from . import specs

MODEL_TYPES = ("poisson", "binomial", "mixed_poisson", "thomas", "superposition")
EXPERIMENT_TYPES = (
    "weights_exact",
    "palm_vs_oracle",
    "two_point_vs_oracle",
    "campbell",
    "laplace_derivative",
    "moment_consistency",
)

MODEL_REQUIRED = {
    "poisson": ("rate",),
    "binomial": ("n",),
    "mixed_poisson": ("rate", "mixing_values", "mixing_probs"),
    "thomas": ("kappa", "mu", "sigma"),
    "superposition": ("components",),
}

EXPERIMENT_REQUIRED = {
    "weights_exact": ("model", "x"),
    "palm_vs_oracle": ("model", "x", "statistic"),
    "two_point_vs_oracle": ("model", "x", "y", "statistic"),
    "campbell": ("model", "g", "h"),
    "laplace_derivative": ("model", "f", "g"),
    "moment_consistency": ("model", "region"),
}


class GrammarField(serializers.CharField):
    """A text option parsed by one of the ``experiments.specs`` parsers.

    The window from the serializer context fixes the dimension.
    """

    def __init__(self, parser: Callable[[str, Any], Any], **kwargs):
        self.parser = parser
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        text = super().to_internal_value(data)
        try:
            return self.parser(text, self.context.get("window"))
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))

    def to_representation(self, value):  # pragma: no cover
        return getattr(value, "describe", lambda: str(value))()


def _require(attrs: Dict[str, Any], kind: str, required: Dict[str, tuple[str, ...]]) -> None:
    missing = {name: f"This field is required for type {kind}." for name in required[kind] if name not in attrs}
    if missing:
        raise serializers.ValidationError(missing)


class RunSerializer(serializers.Serializer):
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, required=False, default=0)
    window = GrammarField(specs.parse_window, required=False, default=None, allow_null=True)
    replicates = serializers.IntegerField(min_value=1, required=False, default=10000)
    epsilon = serializers.FloatField(required=False, default=None, allow_null=True)
    t_step = serializers.FloatField(required=False, default=None, allow_null=True)
    z_crit = serializers.FloatField(required=False, default=None, allow_null=True)
    output = serializers.CharField(required=False, default=None, allow_null=True)

    def validate_epsilon(self, value):
        if value is None:
            return float(getattr(settings, "PALM_EPSILON", 0.02))
        if value <= 0:
            raise serializers.ValidationError("epsilon must be positive.")
        return value

    def validate_t_step(self, value):
        if value is None:
            return float(getattr(settings, "PALM_T_STEP", 1e-3))
        if value <= 0:
            raise serializers.ValidationError("t_step must be positive.")
        return value

    def validate_z_crit(self, value):
        if value is None:
            return float(getattr(settings, "PALM_Z_CRIT", 4.0))
        if value <= 0:
            raise serializers.ValidationError("z_crit must be positive.")
        return value

    def validate(self, attrs):
        if attrs.get("window") is None:
            attrs["window"] = specs.parse_window("0 0 1 1")
        if not attrs.get("output"):
            attrs["output"] = getattr(settings, "PALM_OUTPUT", "results.csv")
        return attrs


class ModelSpecSerializer(serializers.Serializer):
    type = serializers.ChoiceField(choices=MODEL_TYPES)
    rate = GrammarField(specs.parse_rate, required=False)
    rate_max = serializers.FloatField(min_value=0, required=False)
    n = serializers.IntegerField(min_value=0, required=False)
    density = GrammarField(specs.parse_linear, required=False)
    mixing_values = GrammarField(specs.parse_float_list, required=False)
    mixing_probs = GrammarField(specs.parse_float_list, required=False)
    kappa = serializers.FloatField(required=False)
    mu = serializers.FloatField(required=False)
    sigma = serializers.FloatField(required=False)
    dilation = serializers.FloatField(min_value=0, required=False)
    components = GrammarField(specs.parse_names, required=False)

    def validate_rate(self, value):
        if isinstance(value, float) and value < 0:
            raise serializers.ValidationError(f"rate must be non-negative, got {value:g}.")
        return value

    def validate(self, attrs):
        kind = attrs["type"]
        _require(attrs, kind, MODEL_REQUIRED)
        if kind == "thomas":
            bad = {k: "Must be positive." for k in ("kappa", "mu", "sigma") if attrs[k] <= 0}
            if bad:
                raise serializers.ValidationError(bad)
            if attrs.get("dilation") is None:
                attrs["dilation"] = float(getattr(settings, "PALM_THOMAS_DILATION", 4.0))
        if kind == "mixed_poisson":
            if len(attrs["mixing_values"]) != len(attrs["mixing_probs"]):
                raise serializers.ValidationError({"mixing_probs": "Needs one probability per mixing value."})
            if any(v < 0 for v in attrs["mixing_values"]):
                raise serializers.ValidationError({"mixing_values": "Mixing values must be non-negative."})
            if any(p < 0 for p in attrs["mixing_probs"]) or abs(sum(attrs["mixing_probs"]) - 1.0) > 1e-9:
                raise serializers.ValidationError({"mixing_probs": "Probabilities must be non-negative and sum to 1."})
        if kind == "superposition" and len(attrs["components"]) < 2:
            raise serializers.ValidationError({"components": "A superposition needs at least two components."})
        return attrs


class ExperimentSpecSerializer(serializers.Serializer):
    type = serializers.ChoiceField(choices=EXPERIMENT_TYPES)
    model = serializers.CharField()
    x = GrammarField(specs.parse_point, required=False)
    y = GrammarField(specs.parse_point, required=False)
    statistic = GrammarField(specs.parse_statistic, required=False)
    region = GrammarField(specs.parse_region, required=False)
    f = GrammarField(specs.parse_point_function, required=False)
    g = GrammarField(specs.parse_point_function, required=False)
    h = GrammarField(specs.parse_functional, required=False)
    replicates = serializers.IntegerField(min_value=1, required=False)
    sampler_replicates = serializers.IntegerField(min_value=1, required=False)
    epsilon = serializers.FloatField(required=False)
    t_step = serializers.FloatField(required=False)
    z_crit = serializers.FloatField(required=False)
    tv_threshold = serializers.FloatField(min_value=0, max_value=1, required=False)
    ks_min_pvalue = serializers.FloatField(min_value=0, max_value=1, required=False)
    reduced = serializers.BooleanField(required=False)
    reduced_consistency = serializers.BooleanField(required=False)
    chained = serializers.BooleanField(required=False)
    reference_poisson_mean = serializers.FloatField(min_value=0, required=False)
    palm_reps_per_node = serializers.IntegerField(min_value=2, required=False)
    nodes_per_axis = serializers.IntegerField(min_value=1, required=False)
    closed_form = serializers.FloatField(required=False)
    relative_tolerance = serializers.FloatField(min_value=0, required=False)
    factorization = serializers.BooleanField(required=False)
    split = serializers.BooleanField(required=False)
    expected = GrammarField(specs.parse_float_list, required=False)
    tolerance = serializers.FloatField(min_value=0, required=False)
    associativity_points = serializers.IntegerField(min_value=1, required=False)

    def _positive(self, value, name):
        if value <= 0:
            raise serializers.ValidationError(f"{name} must be positive.")
        return value

    def validate_epsilon(self, value):
        return self._positive(value, "epsilon")

    def validate_t_step(self, value):
        return self._positive(value, "t_step")

    def validate_z_crit(self, value):
        return self._positive(value, "z_crit")

    def validate(self, attrs):
        _require(attrs, attrs["type"], EXPERIMENT_REQUIRED)
        if "x" in attrs and "y" in attrs and attrs["x"] == attrs["y"]:
            raise serializers.ValidationError({"y": "Conditioning points must differ."})
        return attrs
