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

"""Common code for locate unit tests.
"""

__all__ = ["LocateTestCase"]

import numpy as np

import lsst.utils.tests

from .aoa import AoaMeasurement
from .geometry import Point3, trueDirection
from .scene import arenaScene
from .toa import ToaMeasurement


class LocateTestCase(lsst.utils.tests.TestCase):
    """Unit test class for tests that need a realistic deployment.

    Each test gets a fresh copy of the arena preset as ``self.scene``.
    Subclasses must call `LocateTestCase.setUp()` if they override ``setUp``
    themselves.
    """

    def setUp(self):
        super().setUp()
        self.scene = arenaScene()

    @staticmethod
    def noiselessToa(scene, x, tau):
        """Return exact ToA measurements of a device.

        Parameters
        ----------
        scene : `lsst.locate.scene.Scene`
            The deployment.
        x : `lsst.locate.geometry.Point3`
            The device position.
        tau : `float`
            The transmit-time offset (m).

        Returns
        -------
        measurements : `list` [`lsst.locate.toa.ToaMeasurement`]
        """
        return [ToaMeasurement(locator.id, float(np.linalg.norm(locator.position.asArray() - x.asArray())) + tau)
                for locator in scene.toaLocators]

    @staticmethod
    def noiselessAoa(scene, x):
        """Return exact AoA measurements of a device.

        Returns
        -------
        measurements : `list` [`lsst.locate.aoa.AoaMeasurement`]
        """
        return [AoaMeasurement(locator.id, trueDirection(locator, x)) for locator in scene.aoaLocators]

    @staticmethod
    def randomPoints(rng, scene, n, ceiling=6.0):
        """Draw device positions uniformly inside the scene, below a ceiling.

        Parameters
        ----------
        rng : `numpy.random.Generator`
            The source of randomness.
        scene : `lsst.locate.scene.Scene`
            The deployment.
        n : `int`
            The number of points.
        ceiling : `float`
            The maximum height (m), to keep points away from the locators.

        Returns
        -------
        points : `list` [`lsst.locate.geometry.Point3`]
        """
        lower = scene.bounds.minimum.asArray()
        upper = scene.bounds.maximum.asArray()
        upper[2] = min(upper[2], ceiling)
        return [Point3.fromArray(p) for p in rng.uniform(lower, upper, size=(n, 3))]

    @staticmethod
    def finiteDifference(function, x, step=1e-6):
        """Compute the gradient of a scalar function by central differences.

        Parameters
        ----------
        function : callable
            A function from a 1-D `numpy.ndarray` to `float`.
        x : `numpy.ndarray`
            The point at which to differentiate.
        step : `float`
            The difference step.

        Returns
        -------
        gradient : `numpy.ndarray`
        """
        x = np.asarray(x, dtype=float)
        gradient = np.empty_like(x)
        for i in range(len(x)):
            delta = np.zeros_like(x)
            delta[i] = step
            gradient[i] = (function(x + delta) - function(x - delta)) / (2.0*step)
        return gradient

    @staticmethod
    def gridMaximum(evaluate, box, spacing=0.1, chunk=200_000):
        """Find the largest value of a vectorized objective on a regular grid.

        Parameters
        ----------
        evaluate : callable
            A function from an ``(N, 3)`` array of positions to ``(N,)``
            objective values.
        box : `lsst.locate.geometry.Box`
            The region to search; grid lines include the box faces.
        spacing : `float`
            The grid spacing (m).
        chunk : `int`
            The number of positions evaluated at once.

        Returns
        -------
        value : `float`
            The best value found.
        position : `numpy.ndarray`, (3,)
            The grid point attaining it.
        """
        axes = [np.linspace(lo, hi, int(round((hi - lo)/spacing)) + 1)
                for lo, hi in zip(box.minimum.asArray(), box.maximum.asArray())]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        bestValue = -np.inf
        bestPosition = None
        for start in range(0, len(grid), chunk):
            positions = grid[start:start + chunk]
            values = evaluate(positions)
            i = int(np.argmax(values))
            if values[i] > bestValue:
                bestValue = float(values[i])
                bestPosition = positions[i]
        return bestValue, bestPosition
