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

"""Angle-of-arrival measurements, likelihood, and the AoA-only estimator.

Each measured direction is treated as the mean direction of a von
Mises-Fisher distribution, evaluated at the true direction of the device
as seen from the locator. Only directions are observable; a single
bearing constrains the device to a ray.
"""

__all__ = ["AoaMeasurement", "AoaProblem", "aoaLogLikelihood", "aoaEstimate"]

import dataclasses
import logging
import math
import typing

import numpy as np

from .geometry import DEGENERACY_TOLERANCE, DegeneratePositionError, UnitVec3, UnknownLocatorError, \
    indexLocators
from .optimizer import Parameterization, maximize
from .probability import VonMisesFisher

_LOG = logging.getLogger(__name__)

_MIN_DISTANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class AoaMeasurement:
    """A direction of arrival observed by one locator.

    Parameters
    ----------
    locatorId : `str`
        The observing locator.
    direction : `lsst.locate.geometry.UnitVec3`
        The estimated direction of the device, in the locator's local frame.
    concentration : `float`, optional
        The concentration to use for this measurement instead of the
        locator's.
    """

    locatorId: str
    direction: UnitVec3
    concentration: typing.Optional[float] = None

    def __post_init__(self):
        if self.concentration is not None \
                and not (math.isfinite(self.concentration) and self.concentration > 0.0):
            raise ValueError(f"Concentration override for {self.locatorId} must be positive, "
                             f"got {self.concentration}.")


class AoaProblem:
    """AoA measurements resolved against their locators.

    This class evaluates the AoA log-likelihood for many candidate positions
    at once.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.AoaLocator`
        The AoA locators of the scene.
    measurements : sequence of `AoaMeasurement`
        The measurements of one epoch.

    Raises
    ------
    ValueError
        Raised if ``measurements`` is empty.
    UnknownLocatorError
        Raised if a measurement names a locator not in ``locators``.
    """

    def __init__(self, locators, measurements):
        if not measurements:
            raise ValueError("At least one AoA measurement is required.")
        index = indexLocators(locators)
        origins = []
        directions = []
        concentrations = []
        for measurement in measurements:
            try:
                locator = index[measurement.locatorId]
            except KeyError as e:
                raise UnknownLocatorError(
                    f"Measurement from unknown AoA locator {measurement.locatorId!r}.") from e
            origins.append(locator.position.asArray())
            # The measured direction, rotated into the World frame
            directions.append(locator.orientation.apply(measurement.direction.asArray()))
            concentrations.append(measurement.concentration if measurement.concentration is not None
                                  else locator.concentration)
        self.origins = np.array(origins)
        self.directions = np.array(directions)
        self.concentrations = np.array(concentrations)
        self.logNormalization = math.fsum(VonMisesFisher.logNormalization(self.concentrations))

    def __len__(self):
        return len(self.concentrations)

    def checkPosition(self, position):
        """Verify that a position does not coincide with any locator.

        Parameters
        ----------
        position : `numpy.ndarray`, (3,)

        Raises
        ------
        DegeneratePositionError
            Raised if ``position`` is within 1e-9 m of a locator.
        """
        distances = np.linalg.norm(position - self.origins, axis=1)
        if np.any(distances <= DEGENERACY_TOLERANCE):
            raise DegeneratePositionError(f"Position {position} coincides with an AoA locator.")

    def evaluate(self, positions):
        """Evaluate the log-likelihood and its gradient.

        Parameters
        ----------
        positions : `numpy.ndarray`, (N, 3)
            Candidate device positions.

        Returns
        -------
        value : `numpy.ndarray`, (N,)
            The log-likelihood of the measurements, including normalization.
        gradPosition : `numpy.ndarray`, (N, 3)
            The gradient with respect to position.
        """
        offsets = positions[:, np.newaxis, :] - self.origins[np.newaxis, :, :]
        distances = np.maximum(np.linalg.norm(offsets, axis=-1), _MIN_DISTANCE)
        unit = offsets / distances[..., np.newaxis]
        cosines = np.sum(self.directions*unit, axis=-1)

        value = self.logNormalization + np.sum(self.concentrations*cosines, axis=1)
        # d(unit)/dx = (I - unit unit^T) / distance
        tangential = (self.directions - cosines[..., np.newaxis]*unit) / distances[..., np.newaxis]
        gradPosition = np.sum(self.concentrations[:, np.newaxis]*tangential, axis=1)
        return value, gradPosition


def aoaLogLikelihood(locators, x, measurements):
    """Compute the log-likelihood of AoA measurements.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.AoaLocator`
        The AoA locators of the scene.
    x : `lsst.locate.geometry.Point3`
        The device position.
    measurements : sequence of `AoaMeasurement`
        The measurements of one epoch.

    Returns
    -------
    logLikelihood : `float`
        The sum over measurements of the von Mises-Fisher log-density
        centered on the measured direction, evaluated at the direction of
        ``x``.

    Raises
    ------
    ValueError
        Raised if ``measurements`` is empty.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.
    DegeneratePositionError
        Raised if ``x`` coincides with a locator.
    """
    problem = AoaProblem(locators, measurements)
    position = x.asArray()
    problem.checkPosition(position)
    value, _ = problem.evaluate(position[np.newaxis, :])
    return float(value[0])


def aoaEstimate(locators, measurements, config, bounds=None):
    """Estimate the device position from directions of arrival alone.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.AoaLocator`
        The AoA locators of the scene.
    measurements : sequence of `AoaMeasurement`
        The measurements of one epoch.
    config : `lsst.locate.optimizer.SolverConfig`
        The solver settings.
    bounds : `lsst.locate.geometry.Box`, optional
        The scene bounds, padded according to ``config`` to form the search
        box. May be omitted if ``config`` sets an explicit box.

    Returns
    -------
    estimate : `lsst.locate.optimizer.Estimate`
        The maximum-likelihood position. ``tau`` is `None`. If the geometry
        cannot determine a position (a single bearing without a fixed
        height), ``converged`` is `False`.

    Raises
    ------
    ValueError
        Raised if ``measurements`` is empty.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.
    """
    problem = AoaProblem(locators, measurements)
    parameters = Parameterization(config.resolveBounds(bounds), config, hasTau=False)

    def objective(theta):
        value, gradPosition = problem.evaluate(parameters.positions(theta))
        return value, parameters.gradient(gradPosition)

    result = maximize(objective, parameters.lower, parameters.upper,
                      parameters.initialVariables(config), config)
    estimate = parameters.makeEstimate(result)
    if len(problem) < 2 and config.fixedZ is None:
        _LOG.getChild("aoaEstimate").warning("A single bearing cannot determine range; "
                                             "reporting the fix as unconverged.")
        estimate = dataclasses.replace(estimate, converged=False)
    return estimate
