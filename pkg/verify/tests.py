from __future__ import annotations

import math

import numpy as np
from django.test import SimpleTestCase, override_settings

from palm.samplers import chained_reduced_palm_sample
from palm.superposition import SuperposedModel
from patterns.exceptions import InvalidGeometry
from patterns.geometry import Ball, Box, Point, Window
from patterns.quadrature import quadrature_grid
from patterns.rng import RngState
from patterns.services import remove_atom
from processes.binomial import BinomialModel
from processes.exceptions import NoAnalyticPalm
from processes.mixed import MixedPoissonModel, MixingLaw
from processes.poisson import PoissonModel
from processes.thomas import ThomasClusterModel

from .exceptions import EmptyInput, ZeroTotalWeight
from .functions import ConstantFunctional, Constant, CountAtMost, Indicator, RegionCount, TotalCount, pattern_sum
from .identities import (
    TINY,
    CheckReport,
    campbell_check,
    laplace_derivative_check,
    laplace_estimate,
    laplace_factorization_check,
    laplace_split_check,
)
from .moments import moment_consistency
from .oracles import palm_weighting_oracle, two_point_weighting_oracle
from .replicates import block_sizes, collect_values, mean_and_se
from .stats import CountPmf, closed_form_poisson_pmf, ks_two_sample, tv_distance

UNIT = Window.unit(2)
CENTER = Point.of(0.5, 0.5)
MIDDLE = Box.from_bounds((0.25, 0.25), (0.75, 0.75))


def coarse_grid():
    # 8x8 midpoints; MIDDLE is a union of whole cells.
    return quadrature_grid(UNIT, nodes_per_axis=8)


class CountPmfTests(SimpleTestCase):
    def test_tv_of_identical_laws_is_zero(self):
        p = closed_form_poisson_pmf(3.0)
        self.assertEqual(tv_distance(p, p), 0.0)

    def test_tv_of_disjoint_point_masses_is_one(self):
        self.assertAlmostEqual(tv_distance(CountPmf.point_mass(0), CountPmf.point_mass(3)), 1.0)

    def test_tv_between_poisson_laws(self):
        # 2/e − 3/e² by direct summation
        tv = tv_distance(closed_form_poisson_pmf(1.0), closed_form_poisson_pmf(2.0))
        self.assertAlmostEqual(tv, 2 / math.e - 3 / math.e**2, delta=1e-6)
        self.assertAlmostEqual(tv, 0.3298, delta=1e-4)

    def test_closed_form_poisson(self):
        pmf = closed_form_poisson_pmf(8.0)
        self.assertAlmostEqual(pmf.mean, 8.0, delta=1e-6)
        self.assertAlmostEqual(pmf[0], math.exp(-8.0), delta=1e-12)
        self.assertEqual(closed_form_poisson_pmf(0.0).probabilities.tolist(), [1.0])
        with self.assertRaises(ValueError):
            closed_form_poisson_pmf(-1.0)

    def test_weighted_counts(self):
        pmf = CountPmf.from_counts(np.array([0, 1, 1, 2]), np.array([1.0, 1.0, 2.0, 0.0]))
        np.testing.assert_allclose(pmf.probabilities, [0.25, 0.75, 0.0])
        self.assertEqual(pmf[7], 0.0)

    def test_invalid_inputs(self):
        with self.assertRaises(EmptyInput):
            CountPmf.from_counts(np.array([], dtype=int))
        with self.assertRaises(ValueError):
            CountPmf(np.array([0.5, 0.2]))
        with self.assertRaises(ValueError):
            CountPmf(np.array([1.5, -0.5]))

    def test_truncation_folds_the_tail(self):
        pmf = CountPmf(np.array([0.5, 0.5 - 1e-12, 1e-12]))
        cut = pmf.truncated(1e-9)
        self.assertEqual(cut.support_bound, 1)
        self.assertAlmostEqual(cut.probabilities.sum(), 1.0, delta=1e-15)

    def test_ks_two_sample(self):
        stat, pvalue = ks_two_sample([1, 2, 3, 4], [1, 2, 3, 4])
        self.assertEqual(stat, 0.0)
        self.assertAlmostEqual(pvalue, 1.0)
        with self.assertRaises(EmptyInput):
            ks_two_sample([], [1.0])


class ReplicateTests(SimpleTestCase):
    def test_block_sizes(self):
        self.assertEqual(block_sizes(1100, 512), [512, 512, 76])
        self.assertEqual(block_sizes(3, 512), [3])
        with self.assertRaises(ValueError):
            block_sizes(0)

    @override_settings(PALM_REPLICATE_BLOCK=16)
    def test_values_do_not_depend_on_thread_count(self):
        model = PoissonModel(UNIT, 5.0)
        draw = lambda rng: float(len(model.sample(rng)))  # noqa: E731
        one = collect_values(200, RngState(9), draw, threads=1)
        many = collect_values(200, RngState(9), draw, threads=8)
        np.testing.assert_array_equal(one, many)

    def test_mean_and_se(self):
        self.assertEqual(mean_and_se(np.array([3.0])), (3.0, 0.0))
        mean, se = mean_and_se(np.array([1.0, 3.0]))
        self.assertEqual(mean, 2.0)
        self.assertAlmostEqual(se, 1.0)


class OracleTests(SimpleTestCase):
    def test_single_atom_oracle_is_a_point_mass(self):
        model = BinomialModel(UNIT, 1)
        result = palm_weighting_oracle(model, CENTER, 0.1, 2000, TotalCount(), RngState(1))
        self.assertEqual(result.pmf.probabilities.tolist(), [0.0, 1.0])
        reduced = palm_weighting_oracle(model, CENTER, 0.1, 2000, TotalCount(), RngState(1), reduced=True)
        self.assertEqual(reduced.pmf.probabilities.tolist(), [1.0])

    def test_pair_oracle_without_hits(self):
        model = BinomialModel(UNIT, 1)
        with self.assertLogs("verify.oracles", level="WARNING"):
            with self.assertRaises(ZeroTotalWeight):
                two_point_weighting_oracle(
                    model, Point.of(0.3, 0.3), Point.of(0.7, 0.7), 0.1, 500, TotalCount(), RngState(2)
                )

    def test_geometry_is_validated(self):
        model = PoissonModel(UNIT, 10.0)
        with self.assertRaises(InvalidGeometry):
            palm_weighting_oracle(model, Point.of(0.01, 0.5), 0.02, 10, TotalCount(), RngState(1))
        with self.assertRaises(InvalidGeometry):
            palm_weighting_oracle(model, CENTER, 0.0, 10, TotalCount(), RngState(1))
        with self.assertRaises(InvalidGeometry):
            two_point_weighting_oracle(
                model, Point.of(0.5, 0.5), Point.of(0.53, 0.5), 0.02, 10, TotalCount(), RngState(1)
            )

    def test_reduced_poisson_oracle_matches_the_process(self):
        model = PoissonModel(UNIT, 50.0)
        statistic = RegionCount(Box.from_bounds((0.0, 0.0), (0.4, 0.4)))
        result = palm_weighting_oracle(model, CENTER, 0.05, 20000, statistic, RngState(3), reduced=True)
        self.assertAlmostEqual(result.pmf.mean, 8.0, delta=0.3)
        self.assertLess(tv_distance(result.pmf, closed_form_poisson_pmf(8.0)), 0.06)

    def test_kept_patterns_line_up_with_weights(self):
        model = PoissonModel(UNIT, 30.0)
        result = palm_weighting_oracle(model, CENTER, 0.05, 300, TotalCount(), RngState(4), keep_patterns=True)
        entries = result.ensemble.entries
        self.assertEqual(len(entries), len(result.ensemble.weights))
        for pattern, weight in entries:
            self.assertGreaterEqual(weight, 1.0)
        bare = palm_weighting_oracle(model, CENTER, 0.05, 300, TotalCount(), RngState(4))
        with self.assertRaises(ValueError):
            bare.ensemble.entries

    @override_settings(PALM_REPLICATE_BLOCK=64)
    def test_oracle_does_not_depend_on_thread_count(self):
        model = SuperposedModel([PoissonModel(UNIT, 30.0), BinomialModel(UNIT, 20)])
        args = (model, CENTER, 0.05, 1000, TotalCount(), RngState(5))
        one = palm_weighting_oracle(*args, threads=1)
        many = palm_weighting_oracle(*args, threads=4)
        np.testing.assert_array_equal(one.pmf.probabilities, many.pmf.probabilities)


def sampler_pmf(draw, statistic, n_reps: int, seed: int) -> CountPmf:
    values = collect_values(n_reps, RngState(seed), lambda rng: statistic(draw(rng)))
    return CountPmf.from_counts(values.astype(np.int64))


class SamplerAgreementTests(SimpleTestCase):
    """Palm samplers against the weighting oracles, on independent streams."""

    def setUp(self):
        self.headline = SuperposedModel([PoissonModel(UNIT, 30.0), BinomialModel(UNIT, 20)])
        self.statistic = RegionCount(Ball(CENTER, 0.2))
        self.sampler = sampler_pmf(
            lambda rng: self.headline.palm_sample(CENTER, rng), self.statistic, 10000, 12
        )

    def test_headline_sampler_matches_oracle(self):
        oracle = palm_weighting_oracle(self.headline, CENTER, 0.05, 20000, self.statistic, RngState(11))
        self.assertLess(tv_distance(oracle.pmf, self.sampler), 0.06)

    def test_oracle_at_a_distant_point_is_told_apart(self):
        # Neither the atom nor its neighbourhood falls in the counting ball.
        far = palm_weighting_oracle(
            self.headline, Point.of(0.85, 0.85), 0.05, 20000, self.statistic, RngState(13)
        )
        self.assertGreater(tv_distance(far.pmf, self.sampler), 0.1)

    def test_halving_epsilon_keeps_agreement(self):
        oracle = palm_weighting_oracle(self.headline, CENTER, 0.025, 40000, self.statistic, RngState(14))
        self.assertLess(tv_distance(oracle.pmf, self.sampler), 0.07)

    def test_reduced_sampler_matches_composed_sampler(self):
        statistic = TotalCount()
        direct = collect_values(
            4000, RngState(15), lambda rng: statistic(self.headline.reduced_palm_sample(CENTER, rng))
        )
        composed = collect_values(
            4000, RngState(16), lambda rng: statistic(remove_atom(self.headline.palm_sample(CENTER, rng), CENTER))
        )
        _, p_value = ks_two_sample(direct, composed)
        self.assertGreater(p_value, 1e-3)


class TwoPointSamplerAgreementTests(SimpleTestCase):
    def setUp(self):
        self.model = SuperposedModel([PoissonModel(UNIT, 5.0), BinomialModel(UNIT, 4)])
        self.x, self.y = Point.of(0.3, 0.3), Point.of(0.7, 0.7)

    def test_two_point_sampler_matches_pair_oracle(self):
        statistic = TotalCount()
        oracle = two_point_weighting_oracle(
            self.model, self.x, self.y, 0.1, 60000, statistic, RngState(21), reduced=True
        )
        sampler = sampler_pmf(
            lambda rng: self.model.two_point_reduced_palm_sample(self.x, self.y, rng), statistic, 10000, 22
        )
        # Branch weights (25, 20, 20, 12)/77 leave 4, 3, 3 or 2 binomial points.
        self.assertAlmostEqual(sampler.mean, 5.0 + (4 * 25 + 3 * 40 + 2 * 12) / 77, delta=0.1)
        self.assertLess(tv_distance(oracle.pmf, sampler), 0.08)

    def test_chained_sampler_matches_direct(self):
        statistic = TotalCount()
        direct = collect_values(
            4000, RngState(23), lambda rng: statistic(self.model.two_point_reduced_palm_sample(self.x, self.y, rng))
        )
        chained = collect_values(
            4000, RngState(24), lambda rng: statistic(chained_reduced_palm_sample(self.model, self.x, self.y, rng))
        )
        _, p_value = ks_two_sample(direct, chained)
        self.assertGreater(p_value, 1e-3)


class FunctionTests(SimpleTestCase):
    def test_pattern_sum_and_functionals(self):
        model = BinomialModel(UNIT, 12)
        pattern = model.sample(RngState(1).generator())
        self.assertEqual(pattern_sum(Constant(2.0), pattern), 24.0)
        self.assertEqual(pattern_sum(Indicator(UNIT), pattern), 12.0)
        self.assertEqual(TotalCount()(pattern), 12)
        self.assertEqual(CountAtMost(12)(pattern), 1.0)
        self.assertEqual(CountAtMost(11)(pattern), 0.0)
        self.assertEqual(ConstantFunctional(3.0)(pattern), 3.0)


class CheckReportTests(SimpleTestCase):
    def test_zero_error_comparison(self):
        same = CheckReport.compare(1.0, 1.0, 0.0, 0.0, 4.0)
        self.assertTrue(same.passed)
        self.assertEqual(same.z_score, 0.0)
        off = CheckReport.compare(1.0, 0.0, 0.0, 0.0, 4.0)
        self.assertFalse(off.passed)
        self.assertEqual(off.z_score, math.inf)

    def test_z_score(self):
        report = CheckReport.compare(1.0, 0.0, 0.3, 0.4, 4.0)
        self.assertAlmostEqual(report.z_score, 2.0)
        self.assertTrue(report.passed)


class CampbellTests(SimpleTestCase):
    def test_zero_test_function(self):
        report = campbell_check(PoissonModel(UNIT, 10.0), Constant(0.0), ConstantFunctional(), 100, RngState(1))
        self.assertEqual((report.lhs, report.rhs), (0.0, 0.0))
        self.assertTrue(report.passed)

    def test_first_moment_of_poisson(self):
        report = campbell_check(
            PoissonModel(UNIT, 10.0), Indicator(MIDDLE), ConstantFunctional(), 4000, RngState(2), grid=coarse_grid()
        )
        self.assertAlmostEqual(report.rhs, 2.5, delta=1e-9)
        self.assertAlmostEqual(report.lhs, 2.5, delta=0.15)
        self.assertTrue(report.passed)

    def test_superposition_with_count_cap(self):
        model = SuperposedModel([PoissonModel(UNIT, 3.0), BinomialModel(UNIT, 4)])
        report = campbell_check(model, Constant(1.0), CountAtMost(8), 4000, RngState(3), grid=coarse_grid())
        self.assertTrue(report.passed)

    def test_needs_an_analytic_palm_sampler(self):
        model = ThomasClusterModel(UNIT, kappa=5.0, mu=3.0, sigma=0.05)
        with self.assertRaises(NoAnalyticPalm):
            campbell_check(model, Constant(1.0), ConstantFunctional(), 10, RngState(1))

    @override_settings(PALM_REPLICATE_BLOCK=64)
    def test_report_does_not_depend_on_thread_count(self):
        model = PoissonModel(UNIT, 5.0)
        args = (model, Indicator(MIDDLE), CountAtMost(5), 500, RngState(4))
        one = campbell_check(*args, grid=coarse_grid(), threads=1)
        many = campbell_check(*args, grid=coarse_grid(), threads=4)
        self.assertEqual(one, many)


class LaplaceTests(SimpleTestCase):
    def setUp(self):
        self.poisson = PoissonModel(UNIT, 10.0)
        self.pair = SuperposedModel([PoissonModel(UNIT, 2.0), PoissonModel(UNIT, 3.0)])

    def test_zero_function_gives_one(self):
        estimate = laplace_estimate(self.poisson, Constant(0.0), 50, RngState(1))
        self.assertEqual(estimate, (1.0, 0.0))

    def test_poisson_closed_form(self):
        estimate = laplace_estimate(self.poisson, Constant(1.0), 20000, RngState(2))
        self.assertAlmostEqual(estimate.value, math.exp(-10.0 * (1 - math.exp(-1.0))), delta=5e-4)

    def test_monotone_in_f(self):
        models = [
            self.poisson,
            BinomialModel(UNIT, 10),
            MixedPoissonModel(PoissonModel(UNIT, 10.0), MixingLaw((0.5, 1.5), (0.5, 0.5))),
        ]
        for model in models:
            with self.subTest(model=model.describe()):
                small = laplace_estimate(model, Constant(0.1), 500, RngState(3))
                large = laplace_estimate(model, Constant(0.2), 500, RngState(3))
                self.assertLess(large.value, small.value)
                self.assertGreater(large.value, 0.0)

    def test_underflow_stays_positive(self):
        with self.assertLogs("verify.identities", level="WARNING"):
            estimate = laplace_estimate(PoissonModel(UNIT, 100.0), Constant(50.0), 20, RngState(9))
        self.assertEqual(estimate, (TINY, 0.0))
        self.assertGreater(estimate.value, 0.0)

    def test_derivative_on_poisson(self):
        report = laplace_derivative_check(
            self.poisson, Constant(0.0), Constant(1.0), 2000, RngState(4), grid=coarse_grid()
        )
        self.assertAlmostEqual(report.rhs, -10.0, delta=1e-9)
        self.assertAlmostEqual(report.lhs, -10.0, delta=0.4)
        self.assertTrue(report.passed)

    def test_factorization_over_components(self):
        report = laplace_factorization_check(self.pair, Constant(0.5), 4000, RngState(5))
        self.assertAlmostEqual(report.rhs, math.exp(-5.0 * (1 - math.exp(-0.5))), delta=0.02)
        self.assertTrue(report.passed)

    def test_componentwise_split(self):
        report = laplace_split_check(self.pair, Constant(0.5), Constant(1.0), 4000, RngState(6))
        self.assertTrue(report.passed)


class MomentTests(SimpleTestCase):
    def test_poisson_moments(self):
        reports = moment_consistency(PoissonModel(UNIT, 50.0), MIDDLE, 500, RngState(1))
        self.assertEqual(set(reports), {"first_moment", "second_factorial_moment", "power_identity", "simple"})
        self.assertAlmostEqual(reports["first_moment"].rhs, 12.5)
        self.assertAlmostEqual(reports["second_factorial_moment"].rhs, 156.25)
        self.assertTrue(all(r.passed for r in reports.values()))

    def test_binomial_moments(self):
        reports = moment_consistency(BinomialModel(UNIT, 20), MIDDLE, 500, RngState(2))
        self.assertAlmostEqual(reports["second_factorial_moment"].rhs, 380.0 / 16)
        self.assertTrue(all(r.passed for r in reports.values()))

    def test_cluster_model_skips_second_order(self):
        model = ThomasClusterModel(UNIT, kappa=10.0, mu=5.0, sigma=0.03)
        reports = moment_consistency(model, MIDDLE, 200, RngState(3))
        self.assertNotIn("second_factorial_moment", reports)
        self.assertEqual(reports["power_identity"].lhs, 0.0)
        self.assertEqual(reports["simple"].lhs, 0.0)
