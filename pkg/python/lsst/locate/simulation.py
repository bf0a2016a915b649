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

"""Forward synthesis of ToA and AoA measurements from ground truth.

Every (test point, epoch) pair owns four independent random streams, derived
from the master seed with `numpy.random.SeedSequence`:

0. ToA channel bias and thermal noise;
1. AoA directional noise;
2. synchronization error, drawn as standard normals and scaled by the
   synchronization error level, so that runs at different levels share
   their draws;
3. the true transmit-time offset.

Epochs can therefore be synthesized in any order, or in parallel, with
identical results.
"""

__all__ = ["TrialConfig", "Epoch", "EpochStream", "epochGenerators", "synthesizeToa", "synthesizeAoa",
           "synthesizeEpoch", "simulateMeasurements"]

import dataclasses
import enum
import logging
import math
import typing

import numpy as np

from .aoa import AoaMeasurement
from .geometry import Point3, trueDirection
from .probability import VonMisesFisher
from .scene import TestPoint
from .toa import ToaMeasurement

_LOG = logging.getLogger(__name__)


class EpochStream(enum.IntEnum):
    """The random streams of one epoch, by spawn key.
    """
    TOA = 0
    AOA = 1
    SYNC = 2
    TAU = 3


@dataclasses.dataclass(frozen=True)
class TrialConfig:
    """The design of a Monte-Carlo experiment.

    Parameters
    ----------
    testPoints : sequence of `lsst.locate.scene.TestPoint`
        The ground-truth device positions.
    trialsPerPoint : `int`
        The number of epochs simulated at each test point.
    syncStdM : `float`
        The standard deviation (m) of the synchronization error added to
        each ToA measurement.
    seed : `int`
        The master seed.
    tauSpreadM : `float`
        The true transmit-time offset of each epoch is uniform on
        ``[-tauSpreadM, tauSpreadM]`` meters.

    Raises
    ------
    ValueError
        Raised if any parameter is out of range or test point labels repeat.
    """

    testPoints: typing.Tuple[TestPoint, ...]
    trialsPerPoint: int = 1
    syncStdM: float = 0.0
    seed: int = 0
    tauSpreadM: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "testPoints", tuple(self.testPoints))
        labels = [point.label for point in self.testPoints]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Test point labels must be unique, got {labels}.")
        if self.trialsPerPoint < 1:
            raise ValueError(f"trialsPerPoint must be at least 1, got {self.trialsPerPoint}.")
        if not (math.isfinite(self.syncStdM) and self.syncStdM >= 0.0):
            raise ValueError(f"Synchronization error level must be non-negative, got {self.syncStdM}.")
        if not (math.isfinite(self.tauSpreadM) and self.tauSpreadM >= 0.0):
            raise ValueError(f"Transmit-time spread must be non-negative, got {self.tauSpreadM}.")


@dataclasses.dataclass(frozen=True)
class Epoch:
    """The measurements taken at one instant.

    Parameters
    ----------
    epochId : `int`
        Identifier of the epoch, unique within a measurement set.
    tpLabel : `str`
        The test point at which the measurements were taken.
    toa : `tuple` [`lsst.locate.toa.ToaMeasurement`]
        The ToA measurements; may be empty.
    aoa : `tuple` [`lsst.locate.aoa.AoaMeasurement`]
        The AoA measurements; may be empty.
    truth : `lsst.locate.geometry.Point3`, optional
        The true device position, if known.
    tau : `float`, optional
        The true transmit-time offset, if known.
    """

    epochId: int
    tpLabel: str
    toa: typing.Tuple[ToaMeasurement, ...] = ()
    aoa: typing.Tuple[AoaMeasurement, ...] = ()
    truth: typing.Optional[Point3] = None
    tau: typing.Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "toa", tuple(self.toa))
        object.__setattr__(self, "aoa", tuple(self.aoa))


def epochGenerators(seed, tpIndex, epoch):
    """Create the random generators of one epoch.

    Parameters
    ----------
    seed : `int`
        The master seed.
    tpIndex : `int`
        The position of the test point in the trial design.
    epoch : `int`
        The epoch number at that test point.

    Returns
    -------
    generators : `dict` [`EpochStream`, `numpy.random.Generator`]
        One independent generator per stream.
    """
    return {stream: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tpIndex, epoch, int(stream))))
            for stream in EpochStream}


def synthesizeToa(scene, x, tau, syncStdM, rng, syncRng=None):
    """Simulate the ToA measurements of a device.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment.
    x : `lsst.locate.geometry.Point3`
        The true device position.
    tau : `float`
        The true transmit-time offset, in meters.
    syncStdM : `float`
        The standard deviation (m) of the synchronization error.
    rng : `numpy.random.Generator`
        The source of channel bias and thermal noise.
    syncRng : `numpy.random.Generator`, optional
        The source of synchronization error. Defaults to ``rng``.

    Returns
    -------
    measurements : `list` [`lsst.locate.toa.ToaMeasurement`]
        One measurement per ToA locator, in scene order.
    """
    if not (math.isfinite(syncStdM) and syncStdM >= 0.0):
        raise ValueError(f"Synchronization error level must be non-negative, got {syncStdM}.")
    if syncRng is None:
        syncRng = rng
    noiseStd = math.sqrt(scene.toaNoise.sigma2)
    measurements = []
    for locator in scene.toaLocators:
        distance = float(np.linalg.norm(locator.position.asArray() - x.asArray()))
        bias = scene.toaNoise.biasFor(locator.id).sample(rng)
        thermal = rng.normal(0.0, noiseStd)
        measurements.append((locator.id, distance + tau + bias + thermal))
    sync = syncStdM*syncRng.standard_normal(len(measurements))
    return [ToaMeasurement(locatorId, toa + float(s)) for (locatorId, toa), s in zip(measurements, sync)]


def synthesizeAoa(scene, x, rng):
    """Simulate the AoA measurements of a device.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment.
    x : `lsst.locate.geometry.Point3`
        The true device position.
    rng : `numpy.random.Generator`
        The source of directional noise.

    Returns
    -------
    measurements : `list` [`lsst.locate.aoa.AoaMeasurement`]
        One measurement per AoA locator, in scene order, each drawn from a
        von Mises-Fisher distribution centered on the true direction.

    Raises
    ------
    DegeneratePositionError
        Raised if ``x`` coincides with an AoA locator.
    """
    return [AoaMeasurement(locator.id,
                           VonMisesFisher(trueDirection(locator, x), locator.concentration).sample(rng))
            for locator in scene.aoaLocators]


def synthesizeEpoch(scene, trialConfig, tpIndex, epoch):
    """Simulate one epoch of the trial design.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment.
    trialConfig : `TrialConfig`
        The trial design.
    tpIndex : `int`
        Index into ``trialConfig.testPoints``.
    epoch : `int`
        The epoch number at that test point.

    Returns
    -------
    epoch : `Epoch`
        The measurements, with the true position and transmit-time offset.
    """
    testPoint = trialConfig.testPoints[tpIndex]
    generators = epochGenerators(trialConfig.seed, tpIndex, epoch)
    spread = trialConfig.tauSpreadM
    tau = float(generators[EpochStream.TAU].uniform(-spread, spread))
    toa = synthesizeToa(scene, testPoint.position, tau, trialConfig.syncStdM,
                        generators[EpochStream.TOA], generators[EpochStream.SYNC])
    aoa = synthesizeAoa(scene, testPoint.position, generators[EpochStream.AOA])
    return Epoch(tpIndex*trialConfig.trialsPerPoint + epoch, testPoint.label, toa, aoa,
                 truth=testPoint.position, tau=tau)


def simulateMeasurements(scene, trialConfig):
    """Simulate every epoch of a trial design.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment.
    trialConfig : `TrialConfig`
        The trial design.

    Returns
    -------
    epochs : `list` [`Epoch`]
        All epochs, ordered by test point and then by epoch number.
    """
    _LOG.getChild("simulateMeasurements").info(
        "Simulating %d epochs at each of %d test points (sync error %g m).",
        trialConfig.trialsPerPoint, len(trialConfig.testPoints), trialConfig.syncStdM)
    return [synthesizeEpoch(scene, trialConfig, tpIndex, epoch)
            for tpIndex in range(len(trialConfig.testPoints))
            for epoch in range(trialConfig.trialsPerPoint)]
