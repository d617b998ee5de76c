from __future__ import annotations

import numpy as np
from django.test import SimpleTestCase, override_settings

from patterns.exceptions import InvalidGeometry, OutOfWindow
from patterns.geometry import Ball, Box, Point, Window
from patterns.rng import RngState
from patterns.services import count_in, has_atom

from .binomial import BinomialModel
from .exceptions import InvalidModel, NoAnalyticPalm, NoProductDensity, ZeroIntensityAtPoint
from .intensities import LinearIntensity
from .mixed import MixedPoissonModel, MixingLaw
from .poisson import PoissonModel
from .thomas import ThomasClusterModel

UNIT = Window.unit(2)
X = Point.of(0.5, 0.5)
Y = Point.of(0.2, 0.7)


def counts(draw, n: int, seed: int = 1) -> np.ndarray:
    rng = RngState(seed).generator()
    return np.array([len(draw(rng)) for _ in range(n)])


class PoissonModelTests(SimpleTestCase):
    def test_rejects_negative_rate(self):
        with self.assertRaises(InvalidModel):
            PoissonModel(UNIT, -1.0)

    def test_zero_rate_gives_empty_patterns(self):
        model = PoissonModel(UNIT, 0.0)
        self.assertEqual(len(model.sample(RngState(3).generator())), 0)

    def test_mean_count_matches_rate(self):
        values = counts(PoissonModel(UNIT, 20.0).sample, 4000)
        self.assertAlmostEqual(values.mean(), 20.0, delta=5 * np.sqrt(20.0 / 4000))

    def test_palm_sample_adds_the_atom(self):
        model = PoissonModel(UNIT, 5.0)
        rng = RngState(4).generator()
        for _ in range(20):
            self.assertTrue(has_atom(model.palm_sample(X, rng), X))

    def test_palm_sample_outside_window(self):
        with self.assertRaises(OutOfWindow):
            PoissonModel(UNIT, 5.0).palm_sample(Point.of(2.0, 0.5), RngState(1).generator())

    def test_thinning_follows_linear_intensity(self):
        model = PoissonModel(UNIT, LinearIntensity(10.0, (20.0, 0.0)))
        self.assertEqual(model.rate_max, 30.0)
        left = Box.from_bounds((0.0, 0.0), (0.5, 1.0))
        self.assertAlmostEqual(model.mean_count(left), 7.5)
        self.assertAlmostEqual(model.mean_count(UNIT), 20.0)
        rng = RngState(5).generator()
        samples = [model.sample(rng) for _ in range(3000)]
        left_mean = np.mean([count_in(p, left) for p in samples])
        self.assertAlmostEqual(left_mean, 7.5, delta=5 * np.sqrt(15.0 / 3000))

    def test_thinning_bound_violation(self):
        model = PoissonModel(UNIT, LinearIntensity(10.0, (20.0, 0.0)), rate_max=15.0)
        with self.assertLogs("processes.poisson", level="ERROR"):
            with self.assertRaises(InvalidModel):
                for _ in range(10):
                    model.sample(RngState(6).generator())

    def test_negative_linear_intensity(self):
        with self.assertRaises(InvalidModel):
            PoissonModel(UNIT, LinearIntensity(-1.0, (0.5, 0.0)))

    def test_second_order_quantities(self):
        model = PoissonModel(UNIT, 4.0)
        self.assertEqual(model.product_density2(X, Y), 16.0)
        self.assertEqual(model.reduced_palm_intensity(X, Y), 4.0)
        self.assertAlmostEqual(model.second_factorial_moment(UNIT), 16.0)
        with self.assertRaises(InvalidGeometry):
            model.product_density2(X, X)

    def test_intensity_in_three_dimensions(self):
        model = PoissonModel(Window.unit(3), 7.0)
        self.assertEqual(model.intensity(Point.of(0.1, 0.2, 0.3)), 7.0)
        self.assertAlmostEqual(model.mean_count(Ball(Point.of(0.5, 0.5, 0.5), 0.2)), 7.0 * 4 / 3 * np.pi * 0.008)


class BinomialModelTests(SimpleTestCase):
    def test_exact_count(self):
        model = BinomialModel(UNIT, 20)
        self.assertTrue(np.all(counts(model.sample, 50) == 20))
        self.assertTrue(np.all(counts(lambda rng: model.palm_sample(X, rng), 50) == 20))
        self.assertTrue(np.all(counts(lambda rng: model.reduced_palm_sample(X, rng), 50) == 19))
        self.assertTrue(np.all(counts(lambda rng: model.two_point_reduced_palm_sample(X, Y, rng), 50) == 18))

    def test_palm_undefined_without_atoms(self):
        with self.assertRaises(ZeroIntensityAtPoint):
            BinomialModel(UNIT, 0).palm_sample(X, RngState(1).generator())
        with self.assertRaises(ZeroIntensityAtPoint):
            BinomialModel(UNIT, 1).two_point_reduced_palm_sample(X, Y, RngState(1).generator())

    def test_moments(self):
        model = BinomialModel(UNIT, 20)
        box = Box.from_bounds((0.0, 0.0), (0.5, 0.5))
        self.assertEqual(model.intensity(X), 20.0)
        self.assertEqual(model.product_density2(X, Y), 380.0)
        self.assertEqual(model.reduced_palm_intensity(X, Y), 19.0)
        self.assertAlmostEqual(model.mean_count(box), 5.0)
        self.assertAlmostEqual(model.second_factorial_moment(box), 380.0 / 16)

    def test_density_must_integrate_to_one(self):
        with self.assertRaises(InvalidModel):
            BinomialModel(UNIT, 5, LinearIntensity(2.0, (0.0, 0.0)))

    def test_non_uniform_density(self):
        model = BinomialModel(UNIT, 10, LinearIntensity(0.5, (1.0, 0.0)))
        rng = RngState(8).generator()
        xs = np.concatenate([model.sample(rng).points[:, 0] for _ in range(2000)])
        # E[X₁] under f(x) = 0.5 + x₁ on the unit square is 7/12.
        self.assertAlmostEqual(xs.mean(), 7 / 12, delta=0.01)


class MixedPoissonTests(SimpleTestCase):
    def setUp(self):
        self.law = MixingLaw((0.5, 1.5), (0.5, 0.5))
        self.model = MixedPoissonModel(PoissonModel(UNIT, 20.0), self.law)

    def test_mixing_law_validation(self):
        with self.assertRaises(InvalidModel):
            MixingLaw((1.0, 2.0), (0.5, 0.6))
        with self.assertRaises(InvalidModel):
            MixingLaw((-1.0,), (1.0,))

    def test_size_biased_law(self):
        tilted = self.law.tilted(1)
        self.assertAlmostEqual(tilted.probs[0], 0.25)
        self.assertAlmostEqual(tilted.probs[1], 0.75)

    def test_intensity_and_product_density(self):
        self.assertAlmostEqual(self.model.intensity(X), 20.0)
        self.assertAlmostEqual(self.model.product_density2(X, Y), 1.25 * 400.0)

    def test_palm_count_follows_size_biased_law(self):
        values = counts(lambda rng: self.model.reduced_palm_sample(X, rng), 8000)
        # E[Λ'] = E[Λ²]/E[Λ] = 1.25
        self.assertAlmostEqual(values.mean(), 25.0, delta=0.6)

    def test_two_point_count_follows_square_tilted_law(self):
        values = counts(lambda rng: self.model.two_point_reduced_palm_sample(X, Y, rng), 8000)
        # E[Λ³]/E[Λ²] = 1.75/1.25 = 1.4
        self.assertAlmostEqual(values.mean(), 28.0, delta=0.7)


class ThomasModelTests(SimpleTestCase):
    @override_settings(PALM_THOMAS_DILATION=4.0)
    def test_mean_count_matches_kappa_mu(self):
        model = ThomasClusterModel(UNIT, kappa=10.0, mu=5.0, sigma=0.03)
        self.assertEqual(model.dilation, 4.0)
        values = counts(model.sample, 2000)
        self.assertAlmostEqual(values.mean(), 50.0, delta=2.0)

    def test_capabilities(self):
        model = ThomasClusterModel(UNIT, kappa=10.0, mu=5.0, sigma=0.03)
        self.assertFalse(model.has_analytic_palm)
        with self.assertRaises(NoAnalyticPalm):
            model.palm_sample(X, RngState(1).generator())
        with self.assertRaises(NoProductDensity):
            model.product_density2(X, Y)

    def test_rejects_non_positive_parameters(self):
        with self.assertRaises(InvalidModel):
            ThomasClusterModel(UNIT, kappa=0.0, mu=5.0, sigma=0.03)
