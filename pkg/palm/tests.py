from __future__ import annotations

from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase

from patterns.geometry import Point, Window
from patterns.rng import RngState, pick_branch
from patterns.services import has_atom
from processes.binomial import BinomialModel
from processes.exceptions import InvalidModel, NoAnalyticPalm, ZeroIntensityAtPoint
from processes.intensities import LinearIntensity
from processes.poisson import PoissonModel
from processes.thomas import ThomasClusterModel

from .exceptions import DegenerateConditioning
from .samplers import chained_reduced_palm_sample
from .superposition import SuperposedModel
from .weights import chain_rule_two_point_weights, chain_rule_weights, leaf_weights, mixture_weights

UNIT = Window.unit(2)
X = Point.of(0.3, 0.3)
Y = Point.of(0.7, 0.7)
CENTER = Point.of(0.5, 0.5)


def poisson(rate: float) -> PoissonModel:
    return PoissonModel(UNIT, rate)


class MixtureWeightTests(SimpleTestCase):
    def test_two_poisson_components(self):
        weights = SuperposedModel([poisson(2), poisson(3)]).mixture_weights(CENTER)
        self.assertAlmostEqual(weights[0], 0.4, delta=1e-12)
        self.assertAlmostEqual(weights[1], 0.6, delta=1e-12)

    def test_three_components(self):
        weights = SuperposedModel([poisson(1), poisson(2), poisson(3)]).mixture_weights(CENTER)
        np.testing.assert_allclose(weights.as_array(), [1 / 6, 2 / 6, 3 / 6], rtol=0, atol=1e-12)

    def test_inhomogeneous_weights_vary_with_x(self):
        ramp = PoissonModel(UNIT, LinearIntensity(0.0, (10.0, 0.0)))
        model = SuperposedModel([ramp, poisson(5)])
        self.assertAlmostEqual(model.mixture_weights(Point.of(0.5, 0.1))[0], 0.5)
        self.assertAlmostEqual(model.mixture_weights(Point.of(0.0, 0.1))[0], 0.0)

    def test_zero_total_intensity(self):
        with self.assertRaises(ZeroIntensityAtPoint):
            mixture_weights([poisson(0), poisson(0)], CENTER)

    def test_nested_superpositions_are_associative(self):
        p1, p2, p3 = poisson(1), poisson(2), PoissonModel(UNIT, LinearIntensity(1.0, (2.0, 3.0)))
        flat = SuperposedModel([p1, p2, p3])
        left = SuperposedModel([SuperposedModel([p1, p2]), p3])
        right = SuperposedModel([p1, SuperposedModel([p2, p3])])
        rng = RngState(11).generator()
        for row in UNIT.uniform(rng, 100):
            x = Point.from_array(row)
            reference = np.array([w for _, w in leaf_weights(flat, x)])
            for grouped in (left, right):
                np.testing.assert_allclose([w for _, w in leaf_weights(grouped, x)], reference, rtol=0, atol=1e-12)
            self.assertEqual([leaf for leaf, _ in leaf_weights(left, x)], [p1, p2, p3])


class TwoPointWeightTests(SimpleTestCase):
    def test_poisson_pair(self):
        model = SuperposedModel([poisson(2), poisson(3)])
        weights = model.two_point_weights(X, Y)
        np.testing.assert_allclose(weights.as_tuple(), np.array([4, 6, 6, 9]) / 25, rtol=0, atol=1e-12)
        self.assertAlmostEqual(weights.normalizer, 25.0, delta=25e-12)
        self.assertAlmostEqual(model.product_density2(X, Y), weights.normalizer, delta=25e-12)

    def test_chain_rule_matches_direct_weights(self):
        for components in ([poisson(2), poisson(3)], [poisson(30), BinomialModel(UNIT, 20)]):
            model = SuperposedModel(components)
            direct = model.two_point_weights(X, Y)
            chained = chain_rule_two_point_weights(model, X, Y)
            np.testing.assert_allclose(chained.as_tuple(), direct.as_tuple(), rtol=0, atol=1e-12)
            self.assertAlmostEqual(chained.normalizer, direct.normalizer, delta=1e-9)

    def test_chain_rule_reweights_first_branch(self):
        model = SuperposedModel([poisson(30), BinomialModel(UNIT, 20)])
        first, second = chain_rule_weights(model, X, Y)
        # D₁ = 30 + 20, D₂ = 30 + 19
        self.assertAlmostEqual(first[0], 30 * 50 / (30 * 50 + 20 * 49))
        np.testing.assert_allclose(second[1], [30 / 49, 19 / 49])

    def test_requires_two_components_and_distinct_points(self):
        with self.assertRaises(InvalidModel):
            SuperposedModel([poisson(1), poisson(2), poisson(3)]).two_point_weights(X, Y)
        with self.assertRaises(DegenerateConditioning):
            SuperposedModel([poisson(1), poisson(2)]).two_point_weights(X, X)


class SuperposedModelTests(SimpleTestCase):
    def test_needs_two_components_on_one_window(self):
        with self.assertRaises(InvalidModel):
            SuperposedModel([poisson(1)])
        other = PoissonModel(Window(Point.of(0.0, 0.0), Point.of(2.0, 2.0)), 1.0)
        with self.assertRaises(InvalidModel):
            SuperposedModel([poisson(1), other])

    def test_first_and_second_order_sums(self):
        a, b = poisson(2), BinomialModel(UNIT, 10)
        model = SuperposedModel([a, b])
        self.assertEqual(model.intensity(X), a.intensity(X) + b.intensity(X))
        expected = a.product_density2(X, Y) + b.product_density2(X, Y) + 2 * 10 + 10 * 2
        self.assertAlmostEqual(model.product_density2(X, Y), expected)
        self.assertAlmostEqual(model.mean_count(UNIT), 12.0)
        self.assertAlmostEqual(model.second_factorial_moment(UNIT), 4 + 90 + 2 * 20)

    def test_palm_requires_every_component(self):
        model = SuperposedModel([poisson(2), ThomasClusterModel(UNIT, 5.0, 4.0, 0.05)])
        self.assertFalse(model.has_analytic_palm)
        with self.assertRaises(NoAnalyticPalm):
            model.palm_sample(CENTER, RngState(1).generator())

    def test_palm_sample_contains_the_atom(self):
        model = SuperposedModel([poisson(2), BinomialModel(UNIT, 5)])
        rng = RngState(2).generator()
        for _ in range(50):
            self.assertTrue(has_atom(model.palm_sample(CENTER, rng), CENTER))

    def test_branch_drawn_with_mixture_weights(self):
        model = SuperposedModel([poisson(2), poisson(3)])
        with patch("palm.samplers.pick_branch", wraps=pick_branch) as picker:
            model.reduced_palm_sample(CENTER, RngState(3).generator())
        picker.assert_called_once()
        np.testing.assert_allclose(picker.call_args.args[0], [0.4, 0.6])

    def test_two_point_branches_remove_the_right_atoms(self):
        model = SuperposedModel([BinomialModel(UNIT, 20), BinomialModel(UNIT, 10)])
        rng = RngState(4).generator()
        sizes = {len(model.two_point_reduced_palm_sample(X, Y, rng)) for _ in range(200)}
        self.assertEqual(sizes, {28})

    def test_chained_sampler_agrees_with_direct(self):
        model = SuperposedModel([BinomialModel(UNIT, 3), poisson(2)])
        n = 20000
        rng = RngState(5).generator()
        direct = np.array([len(model.two_point_reduced_palm_sample(X, Y, rng)) for _ in range(n)])
        chained = np.array([len(chained_reduced_palm_sample(model, X, Y, rng)) for _ in range(n)])
        # Branch weights (6, 6, 6, 4)/22 give E = 42/22 + 2.
        expected = 42 / 22 + 2
        self.assertAlmostEqual(direct.mean(), expected, delta=0.06)
        self.assertAlmostEqual(chained.mean(), expected, delta=0.06)

    def test_nested_superposition_palm(self):
        inner = SuperposedModel([poisson(1), poisson(2)])
        model = SuperposedModel([inner, BinomialModel(UNIT, 4)])
        self.assertTrue(model.has_analytic_palm)
        self.assertEqual(len(model.flatten().components), 3)
        self.assertTrue(has_atom(model.palm_sample(CENTER, RngState(6).generator()), CENTER))

    def test_intensity_is_additive_at_random_points(self):
        parts = [poisson(3), PoissonModel(UNIT, LinearIntensity(10.0, (5.0, 2.0))), BinomialModel(UNIT, 7)]
        model = SuperposedModel(parts)
        points = UNIT.uniform(RngState(7).generator(), 100)
        expected = sum(c.intensity_at(points) for c in parts)
        np.testing.assert_allclose(model.intensity_at(points), expected, rtol=1e-12)


class NullComponentTests(SimpleTestCase):
    """A zero-rate component never carries the conditioning atom."""

    def setUp(self):
        self.model = SuperposedModel([BinomialModel(UNIT, 7), poisson(0)])
        self.rng = RngState(8).generator()

    def test_weights_put_everything_on_the_live_component(self):
        np.testing.assert_array_equal(mixture_weights(self.model.components, CENTER).as_array(), [1.0, 0.0])
        weights = self.model.two_point_weights(X, Y)
        self.assertEqual((weights.w_11, weights.w_12, weights.w_21, weights.w_22), (1.0, 0.0, 0.0, 0.0))

    def test_palm_versions_are_the_binomial_ones(self):
        for _ in range(100):
            palm = self.model.palm_sample(CENTER, self.rng)
            self.assertEqual(len(palm), 7)
            self.assertTrue(has_atom(palm, CENTER))
            self.assertEqual(len(self.model.reduced_palm_sample(CENTER, self.rng)), 6)
            self.assertEqual(len(self.model.two_point_reduced_palm_sample(X, Y, self.rng)), 5)
            self.assertEqual(len(chained_reduced_palm_sample(self.model, X, Y, self.rng)), 5)
