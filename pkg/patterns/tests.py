from __future__ import annotations

import math

import numpy as np
from django.test import SimpleTestCase, override_settings

from .exceptions import AtomNotFound, InvalidGeometry, OutOfWindow, WindowMismatch
from .geometry import Ball, Box, Point, Window
from .pattern import PointPattern
from .quadrature import quadrature_grid
from .rng import RngState, pick_branch
from .services import (
    add_atom,
    count_in,
    factorial_power_count,
    has_atom,
    is_simple,
    power_count,
    remove_atom,
    superpose,
    superpose_all,
)


def pattern(*coords: tuple[float, ...], window: Window | None = None) -> PointPattern:
    return PointPattern([Point(c) for c in coords], window or Window.unit(2))


class GeometryTests(SimpleTestCase):
    def test_point_rejects_bad_dimension_and_non_finite(self):
        with self.assertRaises(InvalidGeometry):
            Point((0.1, 0.2, 0.3, 0.4))
        with self.assertRaises(InvalidGeometry):
            Point((math.nan, 0.5))

    def test_box_requires_lower_below_upper(self):
        with self.assertRaises(InvalidGeometry):
            Box(Point.of(0.5, 0.0), Point.of(0.5, 1.0))

    def test_box_membership_is_closed(self):
        box = Box.from_bounds((0.0, 0.0), (0.5, 0.5))
        mask = box.contains(np.array([[0.5, 0.5], [0.0, 0.0], [0.5000001, 0.2]]))
        self.assertEqual(mask.tolist(), [True, True, False])

    def test_ball_volume_by_dimension(self):
        self.assertAlmostEqual(Ball(Point.of(0.5), 0.1).volume, 0.2)
        self.assertAlmostEqual(Ball(Point.of(0.5, 0.5), 0.1).volume, math.pi * 0.01)
        self.assertAlmostEqual(Ball(Point.of(0.5, 0.5, 0.5), 0.1).volume, 4.0 / 3.0 * math.pi * 0.001)

    def test_ball_nearest_index_ignores_points_outside(self):
        ball = Ball(Point.of(0.5, 0.5), 0.1)
        points = np.array([[0.9, 0.9], [0.55, 0.5], [0.52, 0.5]])
        self.assertEqual(ball.nearest_index(points), 2)
        self.assertIsNone(ball.nearest_index(np.array([[0.9, 0.9]])))

    def test_window_encloses_and_require(self):
        window = Window.unit(2)
        self.assertTrue(window.encloses(Ball(Point.of(0.5, 0.5), 0.2)))
        self.assertFalse(window.encloses(Ball(Point.of(0.05, 0.5), 0.1)))
        with self.assertRaises(OutOfWindow):
            window.require(Point.of(1.5, 0.5))

    def test_box_intersect(self):
        a = Box.from_bounds((0.0, 0.0), (0.6, 0.6))
        b = Box.from_bounds((0.4, 0.4), (1.0, 1.0))
        self.assertEqual(a.intersect(b), Box.from_bounds((0.4, 0.4), (0.6, 0.6)))
        self.assertIsNone(a.intersect(Box.from_bounds((0.7, 0.7), (0.9, 0.9))))


class PointPatternTests(SimpleTestCase):
    def test_rejects_points_outside_window(self):
        with self.assertRaises(InvalidGeometry):
            pattern((0.5, 0.5), (1.2, 0.3))

    def test_rejects_wrong_dimension(self):
        with self.assertRaises(InvalidGeometry):
            PointPattern(np.zeros((2, 3)), Window.unit(2))

    def test_equality_is_multiset_equality(self):
        self.assertEqual(pattern((0.1, 0.2), (0.3, 0.4)), pattern((0.3, 0.4), (0.1, 0.2)))
        self.assertNotEqual(pattern((0.1, 0.2), (0.1, 0.2)), pattern((0.1, 0.2)))

    def test_points_are_read_only(self):
        p = pattern((0.1, 0.2))
        with self.assertRaises(ValueError):
            p.points[0, 0] = 0.9


class CountingTests(SimpleTestCase):
    def setUp(self):
        self.box = Box.from_bounds((0.0, 0.0), (0.5, 0.5))

    def test_count_in_counts_multiplicity(self):
        p = pattern((0.1, 0.1), (0.1, 0.1), (0.9, 0.9))
        self.assertEqual(count_in(p, self.box), 2)
        self.assertEqual(count_in(PointPattern.empty(Window.unit(2)), self.box), 0)

    def test_superpose_is_additive_and_keeps_order(self):
        p1 = pattern((0.1, 0.1), (0.7, 0.7))
        p2 = pattern((0.2, 0.3))
        union = superpose(p1, p2)
        self.assertEqual(len(union), 3)
        self.assertEqual(count_in(union, self.box), count_in(p1, self.box) + count_in(p2, self.box))
        self.assertEqual(union.points[-1].tolist(), [0.2, 0.3])

    def test_superpose_rejects_mismatched_windows(self):
        other = Window(Point.of(0.0, 0.0), Point.of(2.0, 2.0))
        with self.assertRaises(WindowMismatch):
            superpose(pattern((0.1, 0.1)), pattern((0.1, 0.1), window=other))
        with self.assertRaises(WindowMismatch):
            superpose_all([pattern((0.1, 0.1)), pattern((0.1, 0.1), window=other)])

    def test_add_then_remove_atom_round_trips(self):
        p = pattern((0.1, 0.1), (0.4, 0.4))
        x = Point.of(0.25, 0.75)
        added = add_atom(p, x)
        self.assertTrue(has_atom(added, x))
        self.assertEqual(remove_atom(added, x), p)

    def test_remove_atom_drops_one_copy(self):
        x = Point.of(0.3, 0.3)
        p = pattern((0.3, 0.3), (0.3, 0.3))
        self.assertEqual(len(remove_atom(p, x)), 1)
        with self.assertRaises(AtomNotFound):
            remove_atom(pattern((0.1, 0.1)), x)

    def test_add_atom_outside_window(self):
        with self.assertRaises(OutOfWindow):
            add_atom(pattern((0.1, 0.1)), Point.of(1.1, 0.1))

    def test_factorial_power_excludes_diagonal(self):
        p = pattern((0.1, 0.1), (0.2, 0.2), (0.3, 0.3))
        self.assertEqual(power_count(p, (self.box, self.box)), 9)
        self.assertEqual(factorial_power_count(p, (self.box, self.box)), 6)

    def test_factorial_power_on_disjoint_regions_is_product(self):
        right = Box.from_bounds((0.6, 0.6), (1.0, 1.0))
        p = pattern((0.1, 0.1), (0.2, 0.2), (0.7, 0.7))
        self.assertEqual(factorial_power_count(p, (self.box, right)), 2)

    def test_factorial_power_of_order_three(self):
        p = pattern(*[(0.05 * i, 0.05 * i) for i in range(1, 5)])
        self.assertEqual(factorial_power_count(p, (self.box, self.box, self.box)), 4 * 3 * 2)

    def test_square_identity_on_random_patterns(self):
        rng = RngState(7).generator()
        window = Window.unit(2)
        for _ in range(50):
            p = PointPattern(window.uniform(rng, int(rng.integers(0, 30))), window)
            n = count_in(p, self.box)
            self.assertEqual(power_count(p, (self.box, self.box)), factorial_power_count(p, (self.box, self.box)) + n)

    def test_is_simple(self):
        self.assertTrue(is_simple(pattern((0.1, 0.1), (0.2, 0.2))))
        self.assertFalse(is_simple(pattern((0.1, 0.1), (0.1, 0.1))))


class RngTests(SimpleTestCase):
    def test_same_key_same_stream(self):
        a = RngState(42).spawn(3, 1).generator().random(5)
        b = RngState(42).spawn(3).spawn(1).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        a = RngState(42).spawn(0).generator().random(5)
        b = RngState(42).spawn(1).generator().random(5)
        self.assertFalse(np.array_equal(a, b))

    def test_seed_range(self):
        RngState(2**64 - 1)
        with self.assertRaises(InvalidGeometry):
            RngState(-1)

    def test_pick_branch_never_returns_zero_weight(self):
        rng = RngState(1).generator()
        picks = {pick_branch(np.array([0.0, 0.3, 0.0, 0.7]), rng) for _ in range(500)}
        self.assertEqual(picks, {1, 3})


class QuadratureTests(SimpleTestCase):
    def test_box_volume_is_exact(self):
        grid = quadrature_grid(Window.unit(2), nodes_per_axis=16)
        self.assertEqual(len(grid), 256)
        self.assertAlmostEqual(grid.integrate(np.ones(len(grid))), 1.0, places=12)

    @override_settings(PALM_QUADRATURE_NODES_PER_AXIS=64, PALM_QUADRATURE_MAX_NODES=4096)
    def test_node_budget_is_capped(self):
        self.assertEqual(len(quadrature_grid(Window.unit(2))), 4096)
        self.assertEqual(len(quadrature_grid(Window.unit(3))), 16**3)

    def test_linear_integrand_is_exact_on_box(self):
        grid = quadrature_grid(Window.unit(2), nodes_per_axis=8)
        self.assertAlmostEqual(grid.integrate(grid.nodes[:, 0]), 0.5, places=12)
