"""
End-to-end checks across the trace, recovery and criteria modules, on
randomized Levy-Khinchine pairs and on laws with closed-form pairs.
"""
import math
import unittest

import numpy as np

from quasiid.charfn import Convolution, Degenerate, DiscretePMF, Gaussian, Poisson
from quasiid.criteria import (Verdict, check_thm3, classify, classify_cf, phi_bound_statistics,
                              residuals_thm1)
from quasiid.dlog import (distinguished_log, lattice_second_differences,
                          reconstruct_from_second_differences)
from quasiid.lk import LevyKhinchineCF
from quasiid.recover import recover_lattice_spectral, verify_factorization
from quasiid.spectral import SpectralFunction, SpectralPair

PAIR_COUNT = 50
LATTICE = [x for x in range(-5, 6) if x != 0]
ROUND_TRIP_STEP = 2.0 * math.pi / 256


def random_pair(rng):
    """Integer atoms in [-5, 5], masses in [-1, 1], total variation at most 3."""
    count = int(rng.integers(1, 7))
    locations = rng.choice(LATTICE, size=count, replace=False).astype(float)
    masses = rng.uniform(-1.0, 1.0, size=count)
    total = np.abs(masses).sum()
    if total > 3.0:
        masses *= 3.0 / total
    gamma = float(rng.uniform(-2.0, 2.0))
    return SpectralPair(gamma, SpectralFunction(locations, masses))


def random_pairs(seed):
    rng = np.random.default_rng(seed)
    return [random_pair(rng) for _ in range(PAIR_COUNT)]


def bernoulli_pair(p, terms=80):
    ratio = p / (1.0 - p)
    atoms = [(float(k), (-1) ** (k - 1) * k * ratio ** k / (1.0 + k * k))
             for k in range(1, terms + 1)]
    return SpectralPair(0.0, SpectralFunction.from_atoms(atoms))


def oracles():
    """(name, cf, exact pair) for laws whose pair is known in closed form."""
    bernoulli = bernoulli_pair(0.3)
    bernoulli_gamma = float(np.angle(0.7 + 0.3 * np.exp(1j)))
    return [
        ("poisson", Poisson(1.0),
         SpectralPair(math.sin(1.0), SpectralFunction.from_atoms([(1.0, 0.5)]))),
        ("gaussian", Gaussian(0.5, 2.0),
         SpectralPair(0.5, SpectralFunction.from_atoms([(0.0, 2.0)]))),
        ("bernoulli", DiscretePMF.bernoulli(0.3),
         SpectralPair(bernoulli_gamma, bernoulli.g)),
        ("degenerate", Degenerate(1.5), SpectralPair(1.5, SpectralFunction.empty())),
    ]


class TestSecondDifferenceIdentity(unittest.TestCase):
    """Numeric second differences against the Levy-Khinchine integral."""

    def test_randomized_pairs(self):
        for i, pair in enumerate(random_pairs(2024)):
            trace = distinguished_log(LevyKhinchineCF(pair), 10.2, 0.05)
            previous = None
            for h in (0.2, 0.1, 0.05):
                with self.subTest(pair=i, h=h):
                    worst = float(np.max(np.abs(residuals_thm1(trace, pair.g, h, 50))))
                    self.assertLess(worst, 1e-9)
                    if previous is not None:
                        self.assertLessEqual(worst, previous + 1e-10)
                    previous = worst

    def test_exponential_bound(self):
        for i, pair in enumerate(random_pairs(7)[:10]):
            trace = distinguished_log(LevyKhinchineCF(pair), 10.2, 0.05)
            for h in (0.2, 0.1, 0.05):
                for sign in (1, -1):
                    with self.subTest(pair=i, h=h, sign=sign):
                        _, violations = phi_bound_statistics(trace, h, np.arange(50), sign)
                        self.assertEqual(violations, 0)


class TestRoundTrip(unittest.TestCase):
    """Pair -> trace -> recovered pair."""

    def test_randomized_pairs(self):
        t_max = 320 * ROUND_TRIP_STEP
        for i, pair in enumerate(random_pairs(99)):
            trace = distinguished_log(LevyKhinchineCF(pair), t_max, ROUND_TRIP_STEP)
            recovered = recover_lattice_spectral(trace, 32)
            with self.subTest(pair=i):
                self.assertAlmostEqual(recovered.gamma, pair.gamma, delta=1e-8)
                for x in LATTICE:
                    self.assertAlmostEqual(recovered.g.mass_at(float(x)), pair.g.mass_at(float(x)),
                                           delta=1e-7)
                self.assertAlmostEqual(recovered.g.mass_at(0.0), 0.0, delta=1e-7)


class TestOracles(unittest.TestCase):
    """Closed-form laws through the whole pipeline."""

    def test_bernoulli(self):
        report, _ = classify_cf(DiscretePMF.bernoulli(0.3))
        exact = bernoulli_pair(0.3)
        for k in range(1, 9):
            self.assertAlmostEqual(report.pair.g.mass_at(float(k)), exact.g.mass_at(float(k)),
                                   delta=1e-7)
        self.assertEqual(report.verdict, Verdict.QUASI_ONLY)
        t = np.random.default_rng(3).uniform(-50.0, 50.0, 1000)
        self.assertLess(verify_factorization(report.pair, t), 1e-10)

    def test_poisson(self):
        report, _ = classify_cf(Poisson(1.0))
        self.assertEqual(report.verdict, Verdict.INFINITELY_DIVISIBLE)
        self.assertAlmostEqual(report.pair.gamma, math.sin(1.0), delta=1e-8)
        self.assertAlmostEqual(report.pair.g.mass_at(1.0), 0.5, delta=1e-8)
        others = report.pair.g.masses[np.abs(report.pair.g.locations - 1.0) > 0.5]
        self.assertTrue(np.all(np.abs(others) < 1e-8))

    def test_gaussian(self):
        report, _ = classify_cf(Gaussian(0.5, 2.0))
        self.assertEqual(report.verdict, Verdict.INFINITELY_DIVISIBLE)
        self.assertAlmostEqual(report.pair.gamma, 0.5, delta=1e-8)
        self.assertAlmostEqual(report.pair.g.mass_at(0.0), 2.0, delta=1e-8)

    def test_derivative_criterion(self):
        for name, cf, pair in oracles():
            with self.subTest(name):
                trace = distinguished_log(cf, 3.0, 0.005)
                self.assertLess(check_thm3(trace, pair.g, [0.5, 1.0, 2.0], 0.01), 1e-7)

    def test_exponential_bound(self):
        for name, cf, _ in oracles():
            trace = distinguished_log(cf, 4.0 * math.pi, math.pi / 512)
            for sign in (1, -1):
                with self.subTest(name, sign=sign):
                    checked, violations = phi_bound_statistics(
                        trace, math.pi / 64, np.arange(100), sign)
                    self.assertGreater(checked, 0)
                    self.assertEqual(violations, 0)

    def test_telescoping(self):
        for name, cf, _ in oracles():
            trace = distinguished_log(cf, 10.0, 0.05)
            for h in (0.1, 0.05):
                d2 = lattice_second_differences(trace, h, np.arange(100))
                arg_h = trace.value_at(h).imag
                for n in (1, 2, 17, 50, 100):
                    with self.subTest(name, h=h, n=n):
                        expected = trace.value_at(n * h) - 1j * n * arg_h
                        self.assertLess(abs(reconstruct_from_second_differences(d2, n) - expected),
                                        1e-8)


class TestFailurePaths(unittest.TestCase):

    def test_vanishing_cf(self):
        report, trace = classify_cf(DiscretePMF.bernoulli(0.5))
        self.assertEqual(report.verdict, Verdict.NOT_APPLICABLE)
        self.assertIsNone(trace)

    def test_wrong_spectral_function(self):
        trace = distinguished_log(Poisson(1.0), 4.0 * math.pi, math.pi / 512)
        wrong = SpectralPair(math.sin(1.0), SpectralFunction.from_atoms([(1.0, 0.4)]))
        report = classify(trace, wrong)
        self.assertEqual(report.verdict, Verdict.INCONCLUSIVE)
        sums = report.trajectories[0].weighted_sums
        # 0.1 * t^2 in the limit
        self.assertTrue(np.all(sums[1:, :] > 0.05))
        self.assertFalse(report.exact_identity)


class TestInvariance(unittest.TestCase):
    """Shifts move gamma only; convolution adds pairs."""

    def test_shift(self):
        base, _ = classify_cf(Poisson(1.0))
        shifted, _ = classify_cf(Convolution((Poisson(1.0), Degenerate(2.0))))
        self.assertEqual(shifted.verdict, base.verdict)
        self.assertAlmostEqual(shifted.pair.gamma - base.pair.gamma, 2.0, delta=1e-9)
        for x in range(-5, 6):
            self.assertAlmostEqual(shifted.pair.g.mass_at(float(x)), base.pair.g.mass_at(float(x)),
                                   delta=1e-9)

    def test_convolution_adds_pairs(self):
        poisson, _ = classify_cf(Poisson(1.0))
        bernoulli, _ = classify_cf(DiscretePMF.bernoulli(0.3))
        both, _ = classify_cf(Convolution((Poisson(1.0), DiscretePMF.bernoulli(0.3))))
        self.assertAlmostEqual(both.pair.gamma, poisson.pair.gamma + bernoulli.pair.gamma,
                               delta=1e-9)
        for x in range(1, 11):
            expected = poisson.pair.g.mass_at(float(x)) + bernoulli.pair.g.mass_at(float(x))
            self.assertAlmostEqual(both.pair.g.mass_at(float(x)), expected, delta=1e-9)
        self.assertEqual(both.verdict, Verdict.QUASI_ONLY)


if __name__ == '__main__':
    unittest.main()
