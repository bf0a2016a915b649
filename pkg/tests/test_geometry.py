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

import lsst.utils.tests
from lsst.locate.geometry import AoaLocator, Box, DegeneratePositionError, Point3, Rotation3, ToaLocator, \
    UnitVec3, horizontalError, indexLocators, rotationFromEuler, trueDirection


class PointTestSuite(lsst.utils.tests.TestCase):

    def testFinite(self):
        with self.assertRaises(ValueError):
            Point3(0.0, math.inf, 0.0)
        with self.assertRaises(ValueError):
            Point3(math.nan, 0.0, 0.0)

    def testArray(self):
        point = Point3.fromArray([1, 2, 3])
        self.assertEqual(point, Point3(1.0, 2.0, 3.0))
        self.assertIsInstance(point.x, float)
        np.testing.assert_array_equal(point.asArray(), [1.0, 2.0, 3.0])


class UnitVecTestSuite(lsst.utils.tests.TestCase):

    def testNormalized(self):
        rng = np.random.default_rng(42)
        for raw in rng.normal(size=(100, 3))*rng.uniform(1e-3, 1e3, size=(100, 1)):
            direction = UnitVec3.fromArray(raw)
            self.assertFloatsAlmostEqual(np.linalg.norm(direction.asArray()), 1.0, atol=1e-9, rtol=0)
            self.assertFloatsAlmostEqual(direction.asArray(), raw/np.linalg.norm(raw), atol=1e-12, rtol=0)

    def testZero(self):
        with self.assertRaises(ValueError):
            UnitVec3(0.0, 0.0, 0.0)
        with self.assertRaises(ValueError):
            UnitVec3(1.0, math.nan, 0.0)

    def testDot(self):
        self.assertFloatsAlmostEqual(UnitVec3(1, 0, 0).dot(UnitVec3(1, 1, 0)), math.sqrt(0.5), rtol=1e-15)

    def testImmutable(self):
        direction = UnitVec3(0, 0, 1)
        array = direction.asArray()
        array[0] = 5.0
        self.assertEqual(direction, UnitVec3(0, 0, 1))


class RotationTestSuite(lsst.utils.tests.TestCase):

    def testInvalid(self):
        with self.assertRaises(ValueError):
            Rotation3(np.diag([1.0, 1.0, -1.0]))
        with self.assertRaises(ValueError):
            Rotation3(2.0*np.eye(3))
        with self.assertRaises(ValueError):
            Rotation3(np.eye(2))

    def testEulerIdentity(self):
        self.assertFloatsAlmostEqual(rotationFromEuler(0.0, 0.0, 0.0).matrix, np.eye(3), atol=1e-15, rtol=0)

    def testEulerQuarterTurn(self):
        rotation = rotationFromEuler(math.pi/2, 0.0, 0.0)
        self.assertFloatsAlmostEqual(rotation.apply([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]),
                                     atol=1e-15, rtol=0)

    def testEulerHalfTurns(self):
        halfTurn = rotationFromEuler(math.pi, 0.0, 0.0)
        self.assertFloatsAlmostEqual(halfTurn.compose(halfTurn).matrix, np.eye(3), atol=1e-12, rtol=0)

    def testPitchTiltsDown(self):
        rotation = rotationFromEuler(0.0, 0.3, 0.0)
        boresight = rotation.apply([1.0, 0.0, 0.0])
        self.assertLess(boresight[2], 0.0)
        self.assertFloatsAlmostEqual(boresight[2], -math.sin(0.3), rtol=1e-14)

    def testEulerRoundTrip(self):
        rng = np.random.default_rng(7)
        for yaw, pitch, roll in rng.uniform([-3.0, -1.5, -3.0], [3.0, 1.5, 3.0], size=(50, 3)):
            rotation = rotationFromEuler(yaw, pitch, roll)
            self.assertFloatsAlmostEqual(np.array(rotation.toEuler()), np.array([yaw, pitch, roll]),
                                         atol=1e-9, rtol=0)

    def testInverse(self):
        rotation = rotationFromEuler(0.4, -0.2, 1.1)
        vector = np.array([0.3, -2.0, 5.0])
        self.assertFloatsAlmostEqual(rotation.applyInverse(rotation.apply(vector)), vector, atol=1e-14, rtol=0)


class BoxTestSuite(lsst.utils.tests.TestCase):

    def setUp(self):
        self.box = Box(Point3(0.0, 0.0, 0.0), Point3(20.0, 10.0, 7.3))

    def testEmpty(self):
        with self.assertRaises(ValueError):
            Box(Point3(1.0, 0.0, 0.0), Point3(0.0, 1.0, 1.0))

    def testCorners(self):
        corners = self.box.corners()
        self.assertEqual(corners.shape, (8, 3))
        np.testing.assert_array_equal(corners[0], [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(corners[1], [0.0, 0.0, 7.3])
        np.testing.assert_array_equal(corners[-1], [20.0, 10.0, 7.3])

    def testCenter(self):
        self.assertEqual(self.box.center, Point3(10.0, 5.0, 3.65))

    def testContains(self):
        self.assertTrue(self.box.contains(Point3(20.0, 10.0, 0.0)))
        self.assertFalse(self.box.contains(Point3(20.5, 5.0, 1.0)))
        self.assertTrue(self.box.padded(1.0).contains(Point3(20.5, 5.0, 1.0)))


class LocatorTestSuite(lsst.utils.tests.TestCase):

    def testConcentration(self):
        with self.assertRaises(ValueError):
            AoaLocator("a", Point3(0, 0, 0), Rotation3.identity(), 0.0)

    def testIndex(self):
        locators = [ToaLocator("a", Point3(0, 0, 0)), ToaLocator("b", Point3(1, 0, 0))]
        self.assertEqual(set(indexLocators(locators)), {"a", "b"})
        with self.assertRaises(ValueError):
            indexLocators(locators + [ToaLocator("a", Point3(2, 0, 0))])


class DirectionTestSuite(lsst.utils.tests.TestCase):

    def testIdentity(self):
        locator = AoaLocator("a", Point3(0, 0, 0), Rotation3.identity(), 10.0)
        direction = trueDirection(locator, Point3(3.0, 4.0, 0.0))
        self.assertFloatsAlmostEqual(direction.asArray(), np.array([0.6, 0.8, 0.0]), atol=1e-15, rtol=0)

    def testRotated(self):
        locator = AoaLocator("a", Point3(0, 0, 0), rotationFromEuler(math.pi/2, 0.0, 0.0), 10.0)
        direction = trueDirection(locator, Point3(0.0, 1.0, 0.0))
        self.assertFloatsAlmostEqual(direction.asArray(), np.array([1.0, 0.0, 0.0]), atol=1e-15, rtol=0)

    def testUnitNorm(self):
        rng = np.random.default_rng(3)
        locator = AoaLocator("a", Point3(1.0, 2.0, 7.3), rotationFromEuler(0.5, 0.6, 0.1), 10.0)
        for x in rng.uniform(-10, 10, size=(50, 3)):
            direction = trueDirection(locator, Point3.fromArray(x))
            self.assertFloatsAlmostEqual(np.linalg.norm(direction.asArray()), 1.0, atol=1e-9, rtol=0)

    def testDegenerate(self):
        locator = AoaLocator("a", Point3(1.0, 2.0, 3.0), Rotation3.identity(), 10.0)
        with self.assertRaises(DegeneratePositionError):
            trueDirection(locator, Point3(1.0, 2.0, 3.0))
        # Degenerate positions are also invalid values
        with self.assertRaises(ValueError):
            trueDirection(locator, Point3(1.0, 2.0, 3.0 + 1e-12))


class HorizontalErrorTestSuite(lsst.utils.tests.TestCase):

    def testPythagorean(self):
        self.assertEqual(horizontalError(Point3(3.0, 4.0, 100.0), Point3(0.0, 0.0, 0.0)), 5.0)

    def testIgnoresHeight(self):
        self.assertEqual(horizontalError(Point3(1.0, 1.0, 1.0), Point3(1.0, 1.0, 5.0)), 0.0)

    def testSymmetric(self):
        a = Point3(1.5, -2.0, 0.3)
        b = Point3(-0.5, 4.0, 2.0)
        self.assertEqual(horizontalError(a, b), horizontalError(b, a))


class MemoryTester(lsst.utils.tests.MemoryTestCase):
    pass


def setup_module(module):
    lsst.utils.tests.init()


if __name__ == "__main__":
    lsst.utils.tests.init()
    unittest.main()
