#
# This file is part of locate.
#
# Developed for the LSST Data Management System.
# This product includes software developed by the LSST Project
# (http://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

import math
import unittest

import numpy as np
from scipy import integrate, stats

import lsst.utils.tests
from lsst.locate.geometry import UnitVec3
from lsst.locate.probability import GaussianMixture, MixtureComponent, VonMisesFisher, logSinh


def _randomMixture(rng):
    n = rng.integers(1, 5)
    weights = rng.dirichlet(np.ones(n))
    weights /= math.fsum(weights)
    return GaussianMixture([MixtureComponent(w, m, s) for w, m, s in
                            zip(weights, rng.uniform(-3.0, 3.0, n), rng.uniform(0.05, 2.0, n))])


class GaussianMixtureTestSuite(lsst.utils.tests.TestCase):

    def testValidation(self):
        with self.assertRaises(ValueError):
            GaussianMixture([])
        with self.assertRaises(ValueError):
            GaussianMixture([(0.5, 0.0, 1.0), (0.4, 1.0, 1.0)])
        with self.assertRaises(ValueError):
            GaussianMixture([(1.0, 0.0, 0.0)])
        with self.assertRaises(ValueError):
            GaussianMixture([(1.5, 0.0, 1.0), (-0.5, 0.0, 1.0)])

    def testSingleMatchesNormal(self):
        mixture = GaussianMixture.single(0.0, 1.0)
        self.assertFloatsAlmostEqual(mixture.logPdf(0.0), -0.5*math.log(2*math.pi), rtol=1e-14)
        self.assertFloatsAlmostEqual(mixture.logPdf(1.0), -0.5*math.log(2*math.pi) - 0.5, rtol=1e-14)

    def testMatchesScipy(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            mixture = _randomMixture(rng)
            values = rng.uniform(-6.0, 6.0, size=25)
            expected = np.log(sum(c.weight*stats.norm.pdf(values, c.mean, c.std)
                                  for c in mixture.components))
            self.assertFloatsAlmostEqual(mixture.logPdf(values), expected, rtol=1e-10)

    def testTailFinite(self):
        mixture = GaussianMixture([(0.3, 0.0, 0.1), (0.7, 1.0, 0.2)])
        self.assertTrue(math.isfinite(mixture.logPdf(1e4)))
        self.assertLess(mixture.logPdf(1e4), -1e6)

    def testNormalization(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            mixture = _randomMixture(rng)
            width = 12.0*max(mixture.stds)
            lower = min(mixture.means) - width
            upper = max(mixture.means) + width
            total, _ = integrate.quad(lambda v: math.exp(mixture.logPdf(v)), lower, upper,
                                      points=sorted(mixture.means), limit=200, epsabs=1e-12, epsrel=1e-12)
            self.assertFloatsAlmostEqual(total, 1.0, atol=1e-6, rtol=0)

    def testMoments(self):
        mixture = GaussianMixture([(0.6, 0.0, 1.0), (0.4, 3.0, 0.5)])
        self.assertFloatsAlmostEqual(mixture.mean, 1.2, rtol=1e-14)
        rng = np.random.default_rng(5)
        draws = mixture.sample(rng, size=100_000)
        self.assertEqual(draws.shape, (100_000,))
        self.assertLess(abs(draws.mean() - mixture.mean), 4.0*math.sqrt(mixture.variance/len(draws)))
        self.assertFloatsAlmostEqual(draws.var(), mixture.variance, rtol=0.03)

    def testScalarSample(self):
        self.assertIsInstance(GaussianMixture.single().sample(np.random.default_rng(0)), float)


class LogSinhTestSuite(lsst.utils.tests.TestCase):

    def testModerate(self):
        for kappa in (1e-3, 0.1, 1.0, 10.0, 100.0):
            self.assertFloatsAlmostEqual(logSinh(kappa), math.log(math.sinh(kappa)), rtol=1e-12)

    def testLarge(self):
        self.assertFloatsAlmostEqual(logSinh(1e4), 1e4 - math.log(2.0), rtol=1e-15)


class VonMisesFisherTestSuite(lsst.utils.tests.TestCase):

    def testInvalid(self):
        with self.assertRaises(ValueError):
            VonMisesFisher(UnitVec3(0, 0, 1), 0.0)
        with self.assertRaises(ValueError):
            VonMisesFisher(UnitVec3(0, 0, 1), math.inf)

    def testLowConcentrationLimit(self):
        self.assertFloatsAlmostEqual(VonMisesFisher.logNormalization(1e-8), VonMisesFisher.uniformLogPdf(),
                                     atol=1e-7, rtol=0)

    def testNormalization(self):
        rng = np.random.default_rng(2)
        for kappa in (0.1, 1.0, 10.0, 100.0):
            mu = UnitVec3.fromArray(rng.normal(size=3))
            # Orthonormal basis around the mean direction
            e1 = np.cross(mu.asArray(), [1.0, 0.0, 0.0] if abs(mu.x) < 0.9 else [0.0, 1.0, 0.0])
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(mu.asArray(), e1)
            distribution = VonMisesFisher(mu, kappa)

            def density(t, phi):
                u = t*mu.asArray() + math.sqrt(max(1.0 - t*t, 0.0))*(math.cos(phi)*e1 + math.sin(phi)*e2)
                return math.exp(distribution.logPdf(UnitVec3.fromArray(u)))

            phi = rng.uniform(0.0, 2*math.pi)
            total, _ = integrate.quad(lambda t: 2*math.pi*density(t, phi), -1.0, 1.0,
                                      points=[1.0 - 1.0/kappa] if kappa > 1 else None,
                                      limit=200, epsabs=1e-10, epsrel=1e-10)
            self.assertFloatsAlmostEqual(total, 1.0, atol=1e-4, rtol=0)
            # The density depends only on the angle to the mean direction
            self.assertFloatsAlmostEqual(density(0.3, 0.0), density(0.3, phi), rtol=1e-12)

    def testNormalizationGrid(self):
        # Gauss-Legendre in cos(theta), uniform in azimuth
        nodes, weights = np.polynomial.legendre.leggauss(200)
        for kappa in (0.1, 1.0, 10.0, 100.0):
            logC = VonMisesFisher.logNormalization(kappa)
            total = 2*math.pi*math.fsum(weights*np.exp(logC + kappa*nodes))
            self.assertFloatsAlmostEqual(total, 1.0, atol=1e-4, rtol=0)

    def testMeanResultant(self):
        rng = np.random.default_rng(17)
        mu = UnitVec3(0.2, -0.5, 0.8)
        distribution = VonMisesFisher(mu, 10.0)
        samples = distribution.sampleArray(rng, 100_000)
        self.assertFloatsAlmostEqual(np.linalg.norm(samples, axis=1), np.ones(len(samples)), atol=1e-9, rtol=0)
        cosines = samples @ mu.asArray()
        self.assertFloatsAlmostEqual(distribution.meanResultantLength, 1/math.tanh(10.0) - 0.1, rtol=1e-14)
        self.assertFloatsAlmostEqual(cosines.mean(), 0.9, atol=0.003, rtol=0)

    def testSymmetricAboutMean(self):
        rng = np.random.default_rng(23)
        mu = UnitVec3(0.0, 0.0, 1.0)
        samples = VonMisesFisher(mu, 5.0).sampleArray(rng, 50_000)
        # Tangential components average to zero
        self.assertFloatsAlmostEqual(samples[:, :2].mean(axis=0), np.zeros(2), atol=0.01, rtol=0)

    def testHighConcentration(self):
        rng = np.random.default_rng(29)
        mu = UnitVec3(1.0, 1.0, -1.0)
        samples = VonMisesFisher(mu, 1e6).sampleArray(rng, 1000)
        angles = np.arccos(np.clip(samples @ mu.asArray(), -1.0, 1.0))
        self.assertLess(angles.max(), 0.01)

    def testSample(self):
        direction = VonMisesFisher(UnitVec3(0, 1, 0), 3.0).sample(np.random.default_rng(0))
        self.assertIsInstance(direction, UnitVec3)

    def testReproducible(self):
        distribution = VonMisesFisher(UnitVec3(0, 1, 0), 3.0)
        first = distribution.sampleArray(np.random.default_rng(99), 10)
        second = distribution.sampleArray(np.random.default_rng(99), 10)
        np.testing.assert_array_equal(first, second)


class MemoryTester(lsst.utils.tests.MemoryTestCase):
    pass


def setup_module(module):
    lsst.utils.tests.init()


if __name__ == "__main__":
    lsst.utils.tests.init()
    unittest.main()
