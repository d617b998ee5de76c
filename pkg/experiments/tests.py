from __future__ import annotations

import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.test import SimpleTestCase, override_settings

from config.celery import always_eager, app as celery_app, broker_url
from palm.superposition import SuperposedModel
from patterns.geometry import Ball, Box, Point, Window
from processes.intensities import LinearIntensity
from processes.poisson import PoissonModel
from verify.functions import CountAtMost, Indicator, RegionCount, TotalCount

from . import specs
from .builders import build_models
from .config import parse_config, serialize_config
from .exceptions import ConfigParseError, ConfigValidationError
from .runner import COLUMNS, run
from .tasks import task_run_suite

RUN = """
[run]
seed = 7
window = 0 0 1 1
replicates = 2000
"""

MODELS = """
[model:p2]
type = poisson
rate = 2

[model:p3]
type = poisson
rate = 3

[model:pair]
type = superposition
components = p2 p3
"""

WEIGHTS = """
[experiment:weights]
type = weights_exact
model = pair
x = 0.5 0.5
expected = 0.4 0.6
"""

STOCHASTIC = """
[experiment:oracle]
type = palm_vs_oracle
model = pair
x = 0.5 0.5
statistic = count
epsilon = 0.1
sampler_replicates = 500
tv_threshold = 0.3

[experiment:campbell]
type = campbell
model = pair
g = indicator box 0.25 0.25 0.75 0.75
h = count_at_most 8
replicates = 500
nodes_per_axis = 8
"""


class TempDirMixin:
    def setUp(self):
        super().setUp()
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def write(self, name: str, text: str) -> Path:
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return path


class GrammarTests(SimpleTestCase):
    def test_points_and_windows(self):
        window = specs.parse_window("0 0 2 1")
        self.assertEqual(window, Window(Point.of(0.0, 0.0), Point.of(2.0, 1.0)))
        self.assertEqual(specs.parse_point("0.5 0.25", window), Point.of(0.5, 0.25))
        with self.assertRaises(ValueError):
            specs.parse_point("0.5", window)
        with self.assertRaises(ValueError):
            specs.parse_window("0 0 1")

    def test_regions(self):
        window = Window.unit(2)
        self.assertEqual(specs.parse_region("window", window), window)
        self.assertEqual(specs.parse_region("box 0 0 0.5 0.5", window), Box.from_bounds((0, 0), (0.5, 0.5)))
        self.assertEqual(specs.parse_region("ball 0.5 0.5 0.2", window), Ball(Point.of(0.5, 0.5), 0.2))
        with self.assertRaises(ValueError):
            specs.parse_region("disk 0.5 0.5 0.2", window)

    def test_rates_and_functions(self):
        window = Window.unit(2)
        self.assertEqual(specs.parse_rate("30", window), 30.0)
        self.assertEqual(specs.parse_rate("linear 10 10 0", window), LinearIntensity(10.0, (10.0, 0.0)))
        g = specs.parse_point_function("indicator box 0 0 0.5 0.5 2", window)
        self.assertEqual(g, Indicator(Box.from_bounds((0, 0), (0.5, 0.5)), 2.0))
        self.assertEqual(specs.parse_statistic("count", window), TotalCount())
        self.assertEqual(specs.parse_statistic("count box 0 0 1 1", window), RegionCount(Box.from_bounds((0, 0), (1, 1))))
        self.assertEqual(specs.parse_functional("count_at_most 20", window), CountAtMost(20))


class ConfigTests(SimpleTestCase):
    def test_minimal_config(self):
        config = parse_config(RUN + MODELS + WEIGHTS)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.replicates, 2000)
        self.assertEqual(config.epsilon, 0.02)
        self.assertEqual(config.model_names, ["p2", "p3", "pair"])
        self.assertEqual(config.experiments[0].kind, "weights_exact")
        self.assertEqual(config.experiments[0]["expected"], (0.4, 0.6))

    def test_defaults_without_run_section(self):
        config = parse_config(MODELS)
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.window, Window.unit(2))
        self.assertEqual(config.experiments, ())

    def test_round_trip(self):
        config = parse_config(RUN + MODELS + WEIGHTS + STOCHASTIC)
        self.assertEqual(parse_config(serialize_config(config)), config)

    def test_unknown_model_is_named(self):
        text = RUN + MODELS + "\n[model:bad]\ntype = superposition\ncomponents = p2 phi3\n"
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(text)
        self.assertTrue(any("phi3" in message for message in ctx.exception.errors))

    def test_errors_are_collected(self):
        text = "[run]\nseed = -1\ncolour = blue\n" + MODELS + "\n[experiment:e]\ntype = campbell\nmodel = pair\n"
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(text)
        messages = "\n".join(ctx.exception.messages)
        self.assertIn("seed", messages)
        self.assertIn("colour", messages)
        self.assertIn("[experiment:e] g", messages)

    def test_epsilon_too_large(self):
        text = RUN + MODELS + "\n[experiment:e]\ntype = palm_vs_oracle\nmodel = pair\nx = 0.5 0.5\nstatistic = count\nepsilon = 0.6\n"
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(text)
        self.assertIn("too large", ctx.exception.messages[0])

    def test_superposition_cycle(self):
        text = RUN + "\n[model:a]\ntype = superposition\ncomponents = b b\n\n[model:b]\ntype = superposition\ncomponents = a a\n"
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(text)
        self.assertTrue(any("cycle" in message for message in ctx.exception.errors))

    def test_malformed_text(self):
        with self.assertRaises(ConfigParseError):
            parse_config("seed = 1\n")

    def test_models_are_built_in_dependency_order(self):
        text = RUN + "\n[model:pair]\ntype = superposition\ncomponents = p2 p3\n" + MODELS.split("[model:pair]")[0]
        models = build_models(parse_config(text))
        self.assertIsInstance(models["pair"], SuperposedModel)
        self.assertIs(models["pair"].components[0], models["p2"])
        self.assertIsInstance(models["p3"], PoissonModel)

    @override_settings(PALM_THOMAS_DILATION=3.0)
    def test_thomas_dilation_default_is_recorded(self):
        text = RUN + "\n[model:t]\ntype = thomas\nkappa = 10\nmu = 5\nsigma = 0.03\n"
        config = parse_config(text)
        self.assertEqual(config.models[0].params["dilation"], 3.0)
        serialized = serialize_config(config)
        self.assertIn("dilation = 3.0", serialized)
        with override_settings(PALM_THOMAS_DILATION=4.0):
            self.assertEqual(parse_config(serialized), config)
        self.assertEqual(build_models(config)["t"].dilation, 3.0)

    def test_acceptance_moments_cover_three_regions_per_model(self):
        text = (Path(settings.BASE_DIR) / "acceptance.cfg").read_text(encoding="utf-8")
        config = parse_config(text)
        moments = [e for e in config.experiments if e.kind == "moment_consistency"]
        self.assertEqual({e["replicates"] for e in moments}, {10000})
        regions: dict[str, set] = {}
        for e in moments:
            regions.setdefault(e["model"], set()).add(dict(e.options)["region"])
        self.assertEqual(len(regions), 6)
        self.assertTrue(all(len(found) == 3 for found in regions.values()))


class RunnerTests(TempDirMixin, SimpleTestCase):
    def test_weights_rows(self):
        rows = run(parse_config(RUN + MODELS + WEIGHTS), out=self.tmp / "out.csv")
        first = rows[0]
        self.assertEqual((first.experiment_id, first.check), ("weights", "weight[0]"))
        self.assertAlmostEqual(first.lhs, 0.4, delta=1e-12)
        self.assertAlmostEqual(first.rhs, 0.4, delta=1e-12)
        self.assertTrue(all(r.passed for r in rows))
        self.assertEqual([r.check for r in rows], ["weight[0]", "weight[1]", "expected[0]", "expected[1]"])

    def test_empty_suite_writes_header_only(self):
        out = self.tmp / "empty.csv"
        self.assertEqual(run(parse_config(RUN + MODELS), out=out), [])
        self.assertEqual(out.read_text(encoding="utf-8"), ",".join(COLUMNS) + "\n")

    def test_failure_becomes_a_row(self):
        text = RUN + MODELS + "\n[experiment:solo]\ntype = weights_exact\nmodel = p2\nx = 0.5 0.5\n" + WEIGHTS
        with self.assertLogs("experiments.runner", level="ERROR"):
            rows = run(parse_config(text), out=self.tmp / "out.csv")
        self.assertEqual(rows[0].experiment_id, "solo")
        self.assertFalse(rows[0].passed)
        self.assertTrue(rows[0].error.startswith("InvalidModel:"))
        self.assertTrue(all(r.passed for r in rows[1:]))

    def test_csv_is_reproducible(self):
        config = parse_config(RUN + MODELS + WEIGHTS + STOCHASTIC)
        first, second = self.tmp / "a.csv", self.tmp / "b.csv"
        run(config, out=first)
        run(config, out=second)
        self.assertEqual(first.read_bytes(), second.read_bytes())

    @override_settings(PALM_REPLICATE_BLOCK=64)
    def test_csv_does_not_depend_on_thread_count(self):
        config = parse_config(RUN + MODELS + STOCHASTIC)
        one, many = self.tmp / "one.csv", self.tmp / "many.csv"
        run(config, out=one, threads=1)
        run(config, out=many, threads=8)
        self.assertEqual(one.read_bytes(), many.read_bytes())

    @override_settings(PALM_RECORD_TIMINGS=True)
    def test_timings_are_opt_in(self):
        out = self.tmp / "timed.csv"
        run(parse_config(RUN + MODELS + WEIGHTS), out=out)
        data = out.read_text(encoding="utf-8").splitlines()[1].split(",")
        self.assertNotEqual(data[COLUMNS.index("seconds")], "")


class PalmRunCommandTests(TempDirMixin, SimpleTestCase):
    def call(self, *args, **options):
        stdout, stderr = StringIO(), StringIO()
        call_command("palm_run", *args, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue(), stderr.getvalue()

    def test_passing_suite(self):
        config = self.write("suite.cfg", RUN + MODELS + WEIGHTS)
        out = self.tmp / "results.csv"
        stdout, _ = self.call(config=str(config), out=str(out))
        self.assertIn("All 4 check(s) passed", stdout)
        self.assertTrue(out.exists())

    def test_failing_check_exits_one(self):
        config = self.write("suite.cfg", RUN + MODELS + WEIGHTS.replace("0.4 0.6", "0.5 0.5"))
        with self.assertRaises(SystemExit) as ctx:
            self.call(config=str(config), out=str(self.tmp / "results.csv"))
        self.assertEqual(ctx.exception.code, 1)

    def test_invalid_config_exits_two(self):
        config = self.write("suite.cfg", RUN + WEIGHTS.replace("model = pair", "model = phi3"))
        with self.assertRaises(SystemExit) as ctx:
            self.call(config=str(config), out=str(self.tmp / "results.csv"))
        self.assertEqual(ctx.exception.code, 2)

    def test_missing_config_exits_two(self):
        with self.assertRaises(SystemExit) as ctx:
            self.call(config=str(self.tmp / "missing.cfg"))
        self.assertEqual(ctx.exception.code, 2)

    def test_seed_override(self):
        config = self.write("suite.cfg", RUN + MODELS + WEIGHTS)
        out = self.tmp / "results.csv"
        self.call(config=str(config), out=str(out), seed=123)
        self.assertTrue(out.read_text(encoding="utf-8").splitlines()[1].endswith(",123,"))


class SuiteTaskTests(TempDirMixin, SimpleTestCase):
    def test_task_reports_failures(self):
        out = self.tmp / "task.csv"
        text = RUN + MODELS + WEIGHTS.replace("0.4 0.6", "0.5 0.5")
        result = task_run_suite.apply(args=(text,), kwargs={"out": str(out)}).get()
        self.assertEqual(result["rows"], 4)
        self.assertEqual(result["failed"], ["weights:expected[0]", "weights:expected[1]"])
        self.assertEqual(result["output"], str(out))


class CeleryConfigTests(SimpleTestCase):
    def test_broker_url_fallbacks(self):
        self.assertEqual(broker_url({}), "memory://")
        self.assertEqual(broker_url({"REDIS_URL": "redis://cache:6379/0"}), "redis://cache:6379/0")
        env = {"CELERY_BROKER_URL": "amqp://mq//", "REDIS_URL": "redis://cache:6379/0"}
        self.assertEqual(broker_url(env), "amqp://mq//")

    def test_eager_only_without_a_real_broker(self):
        self.assertTrue(always_eager("memory://", {}))
        self.assertFalse(always_eager("redis://cache:6379/0", {}))
        self.assertTrue(always_eager("redis://cache:6379/0", {"CELERY_TASK_ALWAYS_EAGER": "true"}))
        self.assertFalse(always_eager("memory://", {"CELERY_TASK_ALWAYS_EAGER": "0"}))

    def test_suite_task_is_routed_to_its_queue(self):
        self.assertEqual(celery_app.conf.task_routes["experiments.run_suite"]["queue"], "palm")
        self.assertEqual(task_run_suite.name, "experiments.run_suite")
