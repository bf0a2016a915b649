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

"""Time-of-arrival measurements, likelihood, and ToA-only estimators.

Times are expressed in meters (multiplied by the speed of light) throughout.
A measurement at locator ``k`` is modeled as the range to the device, plus
an unknown transmit-time offset common to all locators, plus a channel bias
drawn from a per-locator Gaussian mixture, plus Gaussian noise.
"""

__all__ = ["ToaMeasurement", "ToaNoiseModel", "ToaProblem", "toaLogLikelihood", "nlsEstimate",
           "mapToaEstimate"]

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy.special import logsumexp

from .geometry import UnknownLocatorError, indexLocators
from .optimizer import Parameterization, maximize
from .probability import GaussianMixture

_LOG = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0*math.pi)
_MIN_DISTANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class ToaMeasurement:
    """A time of arrival observed by one locator.

    Parameters
    ----------
    locatorId : `str`
        The observing locator.
    toaM : `float`
        The time of arrival multiplied by the speed of light, in meters.
    """

    locatorId: str
    toaM: float

    def __post_init__(self):
        if not math.isfinite(self.toaM):
            raise ValueError(f"ToA from {self.locatorId} must be finite, got {self.toaM}.")


@dataclasses.dataclass(frozen=True)
class ToaNoiseModel:
    """The error model of ToA measurements.

    Parameters
    ----------
    sigma2 : `float`
        Variance (m^2) of the Gaussian measurement noise, shared by all
        locators.
    bias : mapping [`str`, `lsst.locate.probability.GaussianMixture`], optional
        The channel bias distribution of each locator, keyed by locator ID.
    defaultBias : `lsst.locate.probability.GaussianMixture`, optional
        The channel bias distribution of locators not in ``bias``.

    Raises
    ------
    ValueError
        Raised if ``sigma2`` is not strictly positive.
    """

    sigma2: float
    bias: typing.Mapping[str, GaussianMixture] = dataclasses.field(default_factory=dict)
    defaultBias: typing.Optional[GaussianMixture] = None

    def __post_init__(self):
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise ValueError(f"Noise variance must be positive, got {self.sigma2}.")
        object.__setattr__(self, "bias", dict(self.bias))

    def biasFor(self, locatorId):
        """Return the channel bias distribution of a locator.

        Raises
        ------
        UnknownLocatorError
            Raised if the locator has no bias model and there is no default.
        """
        try:
            return self.bias[locatorId]
        except KeyError as e:
            if self.defaultBias is not None:
                return self.defaultBias
            raise UnknownLocatorError(f"No channel bias model for ToA locator {locatorId!r}.") from e

    def __hash__(self):
        return hash((self.sigma2, tuple(sorted(self.bias.items())), self.defaultBias))


class ToaProblem:
    """ToA measurements resolved against their locators and noise model.

    This class evaluates the ToA objectives for many candidate positions at
    once.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.ToaLocator`
        The ToA locators of the scene.
    measurements : sequence of `ToaMeasurement`
        The measurements of one epoch.
    noise : `ToaNoiseModel`, optional
        The error model. Required for `evaluate`, but not for `evaluateNls`.

    Raises
    ------
    ValueError
        Raised if ``measurements`` is empty.
    UnknownLocatorError
        Raised if a measurement names a locator not in ``locators``, or one
        with no bias model.
    """

    def __init__(self, locators, measurements, noise=None):
        if not measurements:
            raise ValueError("At least one ToA measurement is required.")
        index = indexLocators(locators)
        try:
            self.positions = np.array([index[m.locatorId].position.asArray() for m in measurements])
        except KeyError as e:
            raise UnknownLocatorError(f"Measurement from unknown ToA locator {e.args[0]!r}.") from e
        self.toas = np.array([m.toaM for m in measurements])

        if noise is not None:
            mixtures = [noise.biasFor(m.locatorId) for m in measurements]
            nComponents = max(len(mixture.components) for mixture in mixtures)
            shape = (len(measurements), nComponents)
            # Padding components have zero weight
            self._logScale = np.full(shape, -np.inf)
            self._means = np.zeros(shape)
            self._variances = np.ones(shape)
            for k, mixture in enumerate(mixtures):
                n = len(mixture.components)
                variances = mixture.stds**2 + noise.sigma2
                self._means[k, :n] = mixture.means
                self._variances[k, :n] = variances
                self._logScale[k, :n] = np.log(mixture.weights) - 0.5*(_LOG_2PI + np.log(variances))
        else:
            self._logScale = None

    def __len__(self):
        return len(self.toas)

    def _geometry(self, positions):
        offsets = positions[:, np.newaxis, :] - self.positions[np.newaxis, :, :]
        distances = np.maximum(np.linalg.norm(offsets, axis=-1), _MIN_DISTANCE)
        return offsets, distances

    def tauGuess(self, positions):
        """Estimate the transmit-time offset at each candidate position as the
        median of ``t_k - |p_k - x|``.

        Parameters
        ----------
        positions : `numpy.ndarray`, (N, 3)

        Returns
        -------
        taus : `numpy.ndarray`, (N,)
        """
        _, distances = self._geometry(np.atleast_2d(positions))
        return np.median(self.toas - distances, axis=1)

    def evaluate(self, positions, taus):
        """Evaluate the mixture log-likelihood and its gradient.

        Parameters
        ----------
        positions : `numpy.ndarray`, (N, 3)
            Candidate device positions.
        taus : `numpy.ndarray`, (N,)
            Candidate transmit-time offsets.

        Returns
        -------
        value : `numpy.ndarray`, (N,)
            The log-likelihood of the measurements.
        gradPosition : `numpy.ndarray`, (N, 3)
            The gradient with respect to position.
        gradTau : `numpy.ndarray`, (N,)
            The derivative with respect to the transmit-time offset.
        """
        if self._logScale is None:
            raise RuntimeError("This ToaProblem was built without a noise model.")
        offsets, distances = self._geometry(positions)
        residuals = self.toas - distances - np.asarray(taus)[:, np.newaxis]
        centered = residuals[..., np.newaxis] - self._means
        terms = self._logScale - 0.5*centered**2/self._variances
        perLocator = logsumexp(terms, axis=-1)
        responsibilities = np.exp(terms - perLocator[..., np.newaxis])
        # d(log-likelihood)/d(residual), per locator
        slopes = -np.sum(responsibilities*centered/self._variances, axis=-1)

        value = perLocator.sum(axis=1)
        gradPosition = -np.sum(slopes[..., np.newaxis]*offsets/distances[..., np.newaxis], axis=1)
        gradTau = -slopes.sum(axis=1)
        return value, gradPosition, gradTau

    def evaluateNls(self, positions):
        """Evaluate the negated least-squares cost with the transmit-time
        offset profiled out.

        Parameters
        ----------
        positions : `numpy.ndarray`, (N, 3)
            Candidate device positions.

        Returns
        -------
        value : `numpy.ndarray`, (N,)
            Minus the residual sum of squares at the best offset.
        gradPosition : `numpy.ndarray`, (N, 3)
            The gradient with respect to position.
        taus : `numpy.ndarray`, (N,)
            The best offset at each position, the mean of ``t_k - |p_k - x|``.
        """
        offsets, distances = self._geometry(positions)
        excess = self.toas - distances
        taus = excess.mean(axis=1)
        residuals = excess - taus[:, np.newaxis]
        value = -np.sum(residuals**2, axis=1)
        gradPosition = 2.0*np.sum(residuals[..., np.newaxis]*offsets/distances[..., np.newaxis], axis=1)
        return value, gradPosition, taus


def toaLogLikelihood(locators, noise, x, tau, measurements):
    """Compute the log-likelihood of ToA measurements.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.ToaLocator`
        The ToA locators of the scene.
    noise : `ToaNoiseModel`
        The ToA error model.
    x : `lsst.locate.geometry.Point3`
        The device position.
    tau : `float`
        The transmit-time offset, in meters.
    measurements : sequence of `ToaMeasurement`
        The measurements of one epoch.

    Returns
    -------
    logLikelihood : `float`
        The sum over measurements of the log of the bias mixture, widened by
        the measurement noise, evaluated at each range residual.

    Raises
    ------
    ValueError
        Raised if ``measurements`` is empty.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.
    """
    problem = ToaProblem(locators, measurements, noise)
    value, _, _ = problem.evaluate(x.asArray()[np.newaxis, :], np.array([tau]))
    return float(value[0])


def _checkToaCount(problem, config):
    required = 3 if config.fixedZ is not None else 4
    if len(problem) < required:
        raise ValueError(f"At least {required} ToA measurements are needed, got {len(problem)}.")


def nlsEstimate(locators, measurements, config, bounds=None):
    """Estimate the device position by nonlinear least squares.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.ToaLocator`
        The ToA locators of the scene.
    measurements : sequence of `ToaMeasurement`
        The measurements of one epoch.
    config : `lsst.locate.optimizer.SolverConfig`
        The solver settings.
    bounds : `lsst.locate.geometry.Box`, optional
        The scene bounds, padded according to ``config`` to form the search
        box. May be omitted if ``config`` sets an explicit box.

    Returns
    -------
    estimate : `lsst.locate.optimizer.Estimate`
        The position minimizing the sum of squared range residuals. The
        transmit-time offset is profiled out and reported at its optimum.

    Raises
    ------
    ValueError
        Raised if there are too few measurements: 4, or 3 with a fixed height.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.
    """
    problem = ToaProblem(locators, measurements)
    _checkToaCount(problem, config)
    parameters = Parameterization(config.resolveBounds(bounds), config, hasTau=False)

    def objective(theta):
        value, gradPosition, _ = problem.evaluateNls(parameters.positions(theta))
        return value, parameters.gradient(gradPosition)

    result = maximize(objective, parameters.lower, parameters.upper,
                      parameters.initialVariables(config), config)
    _, _, taus = problem.evaluateNls(parameters.positions(result.theta))
    return parameters.makeEstimate(result, tau=float(taus[0]))


def mapToaEstimate(locators, noise, measurements, config, bounds=None):
    """Estimate the device position by maximizing the ToA likelihood.

    Parameters
    ----------
    locators : iterable of `lsst.locate.geometry.ToaLocator`
        The ToA locators of the scene.
    noise : `ToaNoiseModel`
        The ToA error model.
    measurements : sequence of `ToaMeasurement`
        The measurements of one epoch.
    config : `lsst.locate.optimizer.SolverConfig`
        The solver settings.
    bounds : `lsst.locate.geometry.Box`, optional
        The scene bounds, padded according to ``config`` to form the search
        box. May be omitted if ``config`` sets an explicit box.

    Returns
    -------
    estimate : `lsst.locate.optimizer.Estimate`
        The maximum-likelihood position and transmit-time offset.

    Raises
    ------
    ValueError
        Raised if there are too few measurements: 4, or 3 with a fixed height.
    UnknownLocatorError
        Raised if a measurement names an unknown locator.
    """
    problem = ToaProblem(locators, measurements, noise)
    _checkToaCount(problem, config)
    parameters = Parameterization(config.resolveBounds(bounds), config, hasTau=True)

    def objective(theta):
        value, gradPosition, gradTau = problem.evaluate(parameters.positions(theta), parameters.taus(theta))
        return value, parameters.gradient(gradPosition, gradTau)

    result = maximize(objective, parameters.lower, parameters.upper,
                      parameters.initialVariables(config, problem.tauGuess), config)
    return parameters.makeEstimate(result)
