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

"""Error distributions for ranging bias and directions of arrival.

Ranging bias is modeled by a Gaussian mixture on the line, and direction
errors by a von Mises-Fisher distribution on the unit sphere. Both classes
evaluate log-densities in forms that remain finite for very narrow
distributions, and draw samples from caller-owned `numpy.random.Generator`
objects.
"""

__all__ = ["MixtureComponent", "GaussianMixture", "VonMisesFisher", "logSinh"]

import dataclasses
import math

import numpy as np
from scipy.special import logsumexp

from .geometry import UnitVec3

_LOG_2PI = math.log(2.0*math.pi)
_LOG_4PI = math.log(4.0*math.pi)
_WEIGHT_TOLERANCE = 1e-9


def logSinh(kappa):
    """Compute ``ln(sinh(kappa))`` without overflow for large arguments.

    Parameters
    ----------
    kappa : `float` or `numpy.ndarray`
        Positive argument(s).

    Returns
    -------
    logSinh : `float` or `numpy.ndarray`
        The logarithm of the hyperbolic sine.
    """
    kappa = np.asarray(kappa, dtype=float)
    result = kappa - math.log(2.0) + np.log(-np.expm1(-2.0*kappa))
    return float(result) if result.ndim == 0 else result


@dataclasses.dataclass(frozen=True)
class MixtureComponent:
    """One Gaussian component of a `GaussianMixture`.

    Parameters
    ----------
    weight : `float`
        The mixing probability, strictly positive.
    mean : `float`
        The component mean, in meters.
    std : `float`
        The component standard deviation, in meters, strictly positive.
    """

    weight: float
    mean: float
    std: float


class GaussianMixture:
    """A mixture of Gaussian distributions on the real line.

    Parameters
    ----------
    components : iterable of `MixtureComponent` or ``(weight, mean, std)``
        The mixture components.

    Raises
    ------
    ValueError
        Raised if there are no components, if any weight or standard
        deviation is not strictly positive, or if the weights do not sum
        to 1 within 1e-9.
    """

    def __init__(self, components):
        self._components = tuple(c if isinstance(c, MixtureComponent) else MixtureComponent(*c)
                                 for c in components)
        if not self._components:
            raise ValueError("A Gaussian mixture needs at least one component.")

        self._weights = np.array([c.weight for c in self._components], dtype=float)
        self._means = np.array([c.mean for c in self._components], dtype=float)
        self._stds = np.array([c.std for c in self._components], dtype=float)
        for array in (self._weights, self._means, self._stds):
            array.flags.writeable = False

        if not np.all(np.isfinite(self._weights)) or np.any(self._weights <= 0.0):
            raise ValueError(f"Mixture weights must be strictly positive, got {self._weights}.")
        if abs(math.fsum(self._weights) - 1.0) > _WEIGHT_TOLERANCE:
            raise ValueError(f"Mixture weights must sum to 1, got {math.fsum(self._weights)}.")
        if not np.all(np.isfinite(self._means)):
            raise ValueError(f"Mixture means must be finite, got {self._means}.")
        if not np.all(np.isfinite(self._stds)) or np.any(self._stds <= 0.0):
            raise ValueError(f"Mixture standard deviations must be strictly positive, got {self._stds}.")

    @classmethod
    def single(cls, mean=0.0, std=1.0):
        """Create a mixture with one component of unit weight.
        """
        return cls([MixtureComponent(1.0, mean, std)])

    @property
    def components(self):
        """The mixture components (`tuple` of `MixtureComponent`, read-only).
        """
        return self._components

    @property
    def weights(self):
        return self._weights

    @property
    def means(self):
        return self._means

    @property
    def stds(self):
        return self._stds

    @property
    def mean(self):
        """The mean of the mixture (`float`).
        """
        return float(self._weights @ self._means)

    @property
    def variance(self):
        """The variance of the mixture (`float`).
        """
        return float(self._weights @ (self._stds**2 + self._means**2)) - self.mean**2

    def logPdf(self, value):
        """Evaluate the log-density of the mixture.

        Parameters
        ----------
        value : `float` or array-like
            The point(s), in meters, at which to evaluate the density.

        Returns
        -------
        logPdf : `float` or `numpy.ndarray`
            The log-density, with the same shape as ``value``.
        """
        value = np.asarray(value, dtype=float)
        z = (value[..., np.newaxis] - self._means) / self._stds
        terms = np.log(self._weights) - np.log(self._stds) - 0.5*_LOG_2PI - 0.5*z**2
        result = logsumexp(terms, axis=-1)
        return float(result) if result.ndim == 0 else result

    def sample(self, rng, size=None):
        """Draw from the mixture.

        A component is chosen according to the weights, then a value is drawn
        from that component.

        Parameters
        ----------
        rng : `numpy.random.Generator`
            The source of randomness.
        size : `int`, optional
            The number of draws. If omitted, a single `float` is returned.

        Returns
        -------
        sample : `float` or `numpy.ndarray`
            The draw(s), in meters.
        """
        index = rng.choice(len(self._components), size=size, p=self._weights)
        result = rng.normal(self._means[index], self._stds[index])
        return float(result) if size is None else result

    def __eq__(self, other):
        if not isinstance(other, GaussianMixture):
            return NotImplemented
        return self._components == other._components

    def __hash__(self):
        return hash(self._components)

    def __repr__(self):
        return f"GaussianMixture({list(self._components)!r})"


class VonMisesFisher:
    """The von Mises-Fisher distribution on the unit sphere.

    Parameters
    ----------
    meanDirection : `lsst.locate.geometry.UnitVec3`
        The mode of the distribution.
    concentration : `float`
        The concentration parameter; larger values give tighter spreads.

    Raises
    ------
    ValueError
        Raised if ``concentration`` is not strictly positive and finite.

    Notes
    -----
    The normalization constant is undefined at zero concentration. The
    uniform limit is available separately as `uniformLogPdf`.
    """

    def __init__(self, meanDirection, concentration):
        concentration = float(concentration)
        if not (math.isfinite(concentration) and concentration > 0.0):
            raise ValueError(f"Concentration must be positive and finite, got {concentration}.")
        self._mean = meanDirection
        self._kappa = concentration

    @property
    def meanDirection(self):
        return self._mean

    @property
    def concentration(self):
        return self._kappa

    @staticmethod
    def logNormalization(concentration):
        """Compute ``ln(kappa / (4 pi sinh(kappa)))``.

        Parameters
        ----------
        concentration : `float` or `numpy.ndarray`
            Positive concentration(s).

        Returns
        -------
        logC : `float` or `numpy.ndarray`
            The log of the normalization constant.
        """
        return np.log(concentration) - _LOG_4PI - logSinh(concentration)

    @staticmethod
    def uniformLogPdf():
        """The log-density of the uniform distribution on the sphere, the
        zero-concentration limit of any von Mises-Fisher distribution
        (`float`).
        """
        return -_LOG_4PI

    @property
    def meanResultantLength(self):
        """The expected cosine between a draw and the mean direction (`float`).
        """
        return 1.0/math.tanh(self._kappa) - 1.0/self._kappa

    def logPdf(self, u):
        """Evaluate the log-density at a direction.

        Parameters
        ----------
        u : `lsst.locate.geometry.UnitVec3`
            The direction at which to evaluate the density.

        Returns
        -------
        logPdf : `float`
        """
        return float(self.logNormalization(self._kappa)) + self._kappa*self._mean.dot(u)

    def sample(self, rng):
        """Draw one direction from the distribution.

        Parameters
        ----------
        rng : `numpy.random.Generator`
            The source of randomness.

        Returns
        -------
        direction : `lsst.locate.geometry.UnitVec3`
        """
        return UnitVec3.fromArray(self.sampleArray(rng, 1)[0])

    def sampleArray(self, rng, size):
        """Draw directions from the distribution.

        Parameters
        ----------
        rng : `numpy.random.Generator`
            The source of randomness.
        size : `int`
            The number of draws.

        Returns
        -------
        directions : `numpy.ndarray`, (``size``, 3)
            Unit vectors, one per row.
        """
        mu = self._mean.asArray()
        cosines = self._sampleCosines(rng, size)

        tangents = rng.standard_normal((size, 3))
        tangents -= np.outer(tangents @ mu, mu)
        tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)

        samples = cosines[:, np.newaxis]*mu + np.sqrt(np.clip(1.0 - cosines**2, 0.0, None))[:, np.newaxis]*tangents
        return samples / np.linalg.norm(samples, axis=1, keepdims=True)

    def _sampleCosines(self, rng, size):
        """Draw the cosine between a sample and the mean direction.

        Uses Wood's rejection scheme specialized to the two-sphere.
        """
        kappa = self._kappa
        b = 2.0 / (math.sqrt(4.0*kappa**2 + 4.0) + 2.0*kappa)
        x0 = (1.0 - b) / (1.0 + b)
        c = kappa*x0 + 2.0*math.log(1.0 - x0**2)

        accepted = []
        nAccepted = 0
        while nAccepted < size:
            batch = size - nAccepted
            z = rng.beta(1.0, 1.0, size=batch)
            w = (1.0 - (1.0 + b)*z) / (1.0 - (1.0 - b)*z)
            u = rng.random(size=batch)
            keep = kappa*w + 2.0*np.log(1.0 - x0*w) - c >= np.log(u)
            accepted.append(w[keep])
            nAccepted += int(keep.sum())
        return np.concatenate(accepted)[:size]

    def __repr__(self):
        return f"VonMisesFisher({self._mean!r}, {self._kappa!r})"
