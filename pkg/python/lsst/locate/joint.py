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

"""Fusion of ToA and AoA measurements into a single position fix.

ToA and AoA measurements are assumed independent, so the joint
log-likelihood is the sum of the two per-technology log-likelihoods.
"""

__all__ = ["jointLogLikelihood", "jointGradient", "jointEstimate"]

import logging

import numpy as np

from .aoa import AoaProblem, aoaEstimate
from .geometry import DEGENERACY_TOLERANCE, DegeneratePositionError
from .optimizer import Parameterization, maximize
from .toa import ToaProblem, mapToaEstimate

_LOG = logging.getLogger(__name__)


def _makeProblems(scene, toaMeasurements, aoaMeasurements):
    if not toaMeasurements and not aoaMeasurements:
        raise ValueError("At least one ToA or AoA measurement is required.")
    toaProblem = ToaProblem(scene.toaLocators, toaMeasurements, scene.toaNoise) if toaMeasurements else None
    aoaProblem = AoaProblem(scene.aoaLocators, aoaMeasurements) if aoaMeasurements else None
    return toaProblem, aoaProblem


def jointLogLikelihood(scene, x, tau, toaMeasurements, aoaMeasurements):
    """Compute the log-likelihood of one epoch's ToA and AoA measurements.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment, including the ToA error model.
    x : `lsst.locate.geometry.Point3`
        The device position.
    tau : `float`
        The transmit-time offset, in meters. Ignored if there are no ToA
        measurements.
    toaMeasurements : sequence of `lsst.locate.toa.ToaMeasurement`
        The ToA measurements; may be empty.
    aoaMeasurements : sequence of `lsst.locate.aoa.AoaMeasurement`
        The AoA measurements; may be empty.

    Returns
    -------
    logLikelihood : `float`
        The sum of the ToA and AoA log-likelihoods. If either measurement
        list is empty, exactly the other term.

    Raises
    ------
    ValueError
        Raised if both measurement lists are empty.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.
    DegeneratePositionError
        Raised if ``x`` coincides with an AoA locator.
    """
    toaProblem, aoaProblem = _makeProblems(scene, toaMeasurements, aoaMeasurements)
    position = x.asArray()[np.newaxis, :]
    total = None
    if toaProblem is not None:
        total = float(toaProblem.evaluate(position, np.array([tau]))[0][0])
    if aoaProblem is not None:
        aoaProblem.checkPosition(position[0])
        aoaValue = float(aoaProblem.evaluate(position)[0][0])
        total = aoaValue if total is None else total + aoaValue
    return total


def jointGradient(scene, x, tau, toaMeasurements, aoaMeasurements):
    """Compute the gradient of `jointLogLikelihood`.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment, including the ToA error model.
    x : `lsst.locate.geometry.Point3`
        The device position.
    tau : `float`
        The transmit-time offset, in meters.
    toaMeasurements : sequence of `lsst.locate.toa.ToaMeasurement`
        The ToA measurements; may be empty.
    aoaMeasurements : sequence of `lsst.locate.aoa.AoaMeasurement`
        The AoA measurements; may be empty.

    Returns
    -------
    gradPosition : `numpy.ndarray`, (3,)
        The gradient with respect to ``x``.
    gradTau : `float`
        The derivative with respect to ``tau``; zero without ToA data.

    Raises
    ------
    ValueError
        Raised if both measurement lists are empty.
    DegeneratePositionError
        Raised if ``x`` coincides with any measuring locator.
    """
    toaProblem, aoaProblem = _makeProblems(scene, toaMeasurements, aoaMeasurements)
    position = x.asArray()[np.newaxis, :]
    gradPosition = np.zeros(3)
    gradTau = 0.0
    if toaProblem is not None:
        if np.any(np.linalg.norm(position - toaProblem.positions, axis=1) <= DEGENERACY_TOLERANCE):
            raise DegeneratePositionError(f"Position {x} coincides with a ToA locator.")
        _, toaGradPosition, toaGradTau = toaProblem.evaluate(position, np.array([tau]))
        gradPosition += toaGradPosition[0]
        gradTau = float(toaGradTau[0])
    if aoaProblem is not None:
        aoaProblem.checkPosition(position[0])
        _, aoaGradPosition = aoaProblem.evaluate(position)
        gradPosition += aoaGradPosition[0]
    return gradPosition, gradTau


def jointEstimate(scene, toaMeasurements, aoaMeasurements, config):
    """Estimate the device position from ToA and AoA measurements together.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment. Its bounds, padded according to ``config``, form
        the search box unless ``config`` sets an explicit box.
    toaMeasurements : sequence of `lsst.locate.toa.ToaMeasurement`
        The ToA measurements; may be empty.
    aoaMeasurements : sequence of `lsst.locate.aoa.AoaMeasurement`
        The AoA measurements; may be empty.
    config : `lsst.locate.optimizer.SolverConfig`
        The solver settings.

    Returns
    -------
    estimate : `lsst.locate.optimizer.Estimate`
        The maximum-likelihood position, with the transmit-time offset if
        there are ToA measurements.

    Raises
    ------
    ValueError
        Raised if both measurement lists are empty, or if there are only
        ToA measurements and too few of them.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.

    Notes
    -----
    With only one kind of measurement, this function gives the same result
    as `lsst.locate.toa.mapToaEstimate` or `lsst.locate.aoa.aoaEstimate`.
    """
    if not toaMeasurements and not aoaMeasurements:
        raise ValueError("At least one ToA or AoA measurement is required.")
    if not aoaMeasurements:
        return mapToaEstimate(scene.toaLocators, scene.toaNoise, toaMeasurements, config, scene.bounds)
    if not toaMeasurements:
        return aoaEstimate(scene.aoaLocators, aoaMeasurements, config, scene.bounds)

    toaProblem, aoaProblem = _makeProblems(scene, toaMeasurements, aoaMeasurements)
    parameters = Parameterization(config.resolveBounds(scene.bounds), config, hasTau=True)

    def objective(theta):
        positions = parameters.positions(theta)
        toaValue, toaGradPosition, toaGradTau = toaProblem.evaluate(positions, parameters.taus(theta))
        aoaValue, aoaGradPosition = aoaProblem.evaluate(positions)
        return toaValue + aoaValue, parameters.gradient(toaGradPosition + aoaGradPosition, toaGradTau)

    result = maximize(objective, parameters.lower, parameters.upper,
                      parameters.initialVariables(config, toaProblem.tauGuess), config)
    return parameters.makeEstimate(result)
