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

"""Deployment descriptions and their file formats.

A `Scene` holds everything the estimators need to know about the
infrastructure: locator poses, the ToA error model, and the extent of the
area being covered. Scenes are stored as JSON; test points as CSV.
"""

__all__ = ["Scene", "TestPoint", "arenaScene", "defaultTestPoints", "PRESETS",
           "readScene", "writeScene", "sceneToDict", "sceneFromDict", "readTestPoints", "writeTestPoints"]

import csv
import dataclasses
import itertools
import json
import logging
import math
import typing

import numpy as np

from .geometry import AoaLocator, Box, Point3, ToaLocator, indexLocators, rotationFromEuler
from .probability import GaussianMixture, MixtureComponent
from .toa import ToaNoiseModel

_LOG = logging.getLogger(__name__)

ARENA_WIDTH = 20.0
ARENA_DEPTH = 10.0
ARENA_HEIGHT = 7.3
"""Height (m) of the ceiling-mounted locators of the arena preset (`float`).
"""

_TP_HEADER = ("label", "x_m", "y_m", "z_m")


@dataclasses.dataclass(frozen=True)
class Scene:
    """A localization deployment.

    Parameters
    ----------
    toaLocators : sequence of `lsst.locate.geometry.ToaLocator`
        The ToA locators.
    aoaLocators : sequence of `lsst.locate.geometry.AoaLocator`
        The AoA locators. A ToA and an AoA locator may share a position.
    toaNoise : `lsst.locate.toa.ToaNoiseModel`
        The ToA error model; must cover every ToA locator.
    bounds : `lsst.locate.geometry.Box`
        The extent of the covered area.

    Raises
    ------
    ValueError
        Raised if there are no locators, or if two locators of the same kind
        share an ID.
    UnknownLocatorError
        Raised if a ToA locator has no channel bias model.
    """

    toaLocators: typing.Tuple[ToaLocator, ...]
    aoaLocators: typing.Tuple[AoaLocator, ...]
    toaNoise: ToaNoiseModel
    bounds: Box

    def __post_init__(self):
        object.__setattr__(self, "toaLocators", tuple(self.toaLocators))
        object.__setattr__(self, "aoaLocators", tuple(self.aoaLocators))
        if not self.toaLocators and not self.aoaLocators:
            raise ValueError("A scene needs at least one locator.")
        indexLocators(self.toaLocators)
        indexLocators(self.aoaLocators)
        for locator in self.toaLocators:
            self.toaNoise.biasFor(locator.id)


@dataclasses.dataclass(frozen=True)
class TestPoint:
    """A labeled ground-truth device position.
    """

    __test__ = False  # not a pytest class

    label: str
    position: Point3


def arenaScene():
    """Build the reference deployment: a 20 m × 10 m hall with a co-located
    ToA/AoA locator pair in each corner, 7.3 m above the floor.

    Returns
    -------
    scene : `Scene`
        The World frame has its origin at one floor corner of the hall. Each
        AoA locator faces the center of the floor. The ToA channel bias is a
        single zero-mean, unit-variance Gaussian, thermal noise variance is
        1e-5 m^2, and every AoA concentration is 10.
    """
    center = np.array([ARENA_WIDTH/2, ARENA_DEPTH/2, 0.0])
    toaLocators = []
    aoaLocators = []
    for i, (x, y) in enumerate(itertools.product((0.0, ARENA_WIDTH), (0.0, ARENA_DEPTH)), start=1):
        # corners ordered (0,0), (0,10), (20,0), (20,10)
        position = Point3(x, y, ARENA_HEIGHT)
        toward = center - position.asArray()
        yaw = math.atan2(toward[1], toward[0])
        pitch = math.atan2(ARENA_HEIGHT, math.hypot(toward[0], toward[1]))
        toaLocators.append(ToaLocator(f"toa{i}", position))
        aoaLocators.append(AoaLocator(f"aoa{i}", position, rotationFromEuler(yaw, pitch, 0.0), 10.0))
    noise = ToaNoiseModel(sigma2=1e-5, defaultBias=GaussianMixture.single(0.0, 1.0))
    bounds = Box(Point3(0.0, 0.0, 0.0), Point3(ARENA_WIDTH, ARENA_DEPTH, ARENA_HEIGHT))
    return Scene(toaLocators, aoaLocators, noise, bounds)


PRESETS = {"arena2036": arenaScene}
"""Built-in scenes, keyed by name (`dict` [`str`, callable]).
"""


def defaultTestPoints():
    """Return the standard 28 test points of the arena preset.

    Returns
    -------
    testPoints : `list` [`TestPoint`]
        A 7 × 4 grid, inset 1.5 m from the walls, at 1 m height, labeled
        ``A01`` to ``A28`` in row-major order.
    """
    inset = 1.5
    xs = np.linspace(inset, ARENA_WIDTH - inset, 7)
    ys = np.linspace(inset, ARENA_DEPTH - inset, 4)
    return [TestPoint(f"A{i:02d}", Point3(x, y, 1.0))
            for i, (y, x) in enumerate(itertools.product(ys, xs), start=1)]


def _mixtureToList(mixture):
    return [{"weight": c.weight, "mean_m": c.mean, "std_m": c.std} for c in mixture.components]


def _mixtureFromList(entries):
    try:
        return GaussianMixture([MixtureComponent(float(e["weight"]), float(e["mean_m"]), float(e["std_m"]))
                                for e in entries])
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed bias mixture {entries!r}.") from e


def sceneToDict(scene):
    """Convert a scene to its JSON-compatible form.
    """
    aoaEntries = []
    for locator in scene.aoaLocators:
        aoaEntries.append({
            "id": locator.id,
            "pos_m": list(dataclasses.astuple(locator.position)),
            "yaw_pitch_roll_rad": list(locator.orientation.toEuler()),
            "kappa": locator.concentration,
        })
    noise = scene.toaNoise
    if noise.bias or noise.defaultBias is None:
        bias = {locator.id: _mixtureToList(noise.biasFor(locator.id)) for locator in scene.toaLocators}
    else:
        bias = _mixtureToList(noise.defaultBias)
    return {
        "world_bounds": {"min_m": list(dataclasses.astuple(scene.bounds.minimum)),
                         "max_m": list(dataclasses.astuple(scene.bounds.maximum))},
        "toa_locators": [{"id": locator.id, "pos_m": list(dataclasses.astuple(locator.position))}
                         for locator in scene.toaLocators],
        "aoa_locators": aoaEntries,
        "toa_noise": {"sigma2_m2": noise.sigma2, "bias": bias},
    }


def sceneFromDict(data):
    """Build a scene from its JSON-compatible form.

    Parameters
    ----------
    data : `dict`
        The scene description. ``toa_noise.bias`` may be either a single
        list of mixture components shared by all ToA locators, or a mapping
        from locator ID to such a list.

    Returns
    -------
    scene : `Scene`

    Raises
    ------
    ValueError
        Raised if a field is missing or invalid.
    """
    try:
        bounds = Box.fromArrays(data["world_bounds"]["min_m"], data["world_bounds"]["max_m"])
        toaLocators = [ToaLocator(str(entry["id"]), Point3.fromArray(entry["pos_m"]))
                       for entry in data.get("toa_locators", [])]
        aoaLocators = [AoaLocator(str(entry["id"]), Point3.fromArray(entry["pos_m"]),
                                  rotationFromEuler(*entry.get("yaw_pitch_roll_rad", (0.0, 0.0, 0.0))),
                                  float(entry["kappa"]))
                       for entry in data.get("aoa_locators", [])]
        noiseData = data.get("toa_noise", {"sigma2_m2": 1e-5, "bias": [{"weight": 1.0, "mean_m": 0.0,
                                                                         "std_m": 1.0}]})
        sigma2 = float(noiseData["sigma2_m2"])
        bias = noiseData["bias"]
    except KeyError as e:
        raise ValueError(f"Scene description is missing field {e.args[0]!r}.") from e
    except (TypeError, ValueError) as e:
        raise ValueError(f"Invalid scene description: {e}") from e

    if isinstance(bias, dict):
        noise = ToaNoiseModel(sigma2, bias={key: _mixtureFromList(value) for key, value in bias.items()})
    else:
        noise = ToaNoiseModel(sigma2, defaultBias=_mixtureFromList(bias))
    return Scene(toaLocators, aoaLocators, noise, bounds)


def readScene(path):
    """Read a scene from a JSON file.

    Parameters
    ----------
    path : `str` or `pathlib.Path`
        The file to read.

    Returns
    -------
    scene : `Scene`

    Raises
    ------
    ValueError
        Raised if the file is not a valid scene description.
    """
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path} is not valid JSON: {e}") from e
    scene = sceneFromDict(data)
    _LOG.getChild("readScene").debug("Read scene with %d ToA and %d AoA locators from %s.",
                                     len(scene.toaLocators), len(scene.aoaLocators), path)
    return scene


def writeScene(scene, path):
    """Write a scene to a JSON file readable by `readScene`.
    """
    with open(path, "w") as f:
        json.dump(sceneToDict(scene), f, indent=2)
        f.write("\n")


def readTestPoints(path):
    """Read test points from a CSV file with columns label, x_m, y_m, z_m.

    Returns
    -------
    testPoints : `list` [`TestPoint`]

    Raises
    ------
    ValueError
        Raised if a row is malformed or a label is repeated.
    """
    testPoints = []
    labels = set()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(_TP_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path} lacks columns {sorted(missing)}.")
        for row in reader:
            try:
                point = TestPoint(row["label"], Point3(float(row["x_m"]), float(row["y_m"]),
                                                       float(row["z_m"])))
            except (TypeError, ValueError) as e:
                raise ValueError(f"{path}, line {reader.line_num}: invalid test point {row}.") from e
            if point.label in labels:
                raise ValueError(f"{path}, line {reader.line_num}: duplicate label {point.label!r}.")
            labels.add(point.label)
            testPoints.append(point)
    return testPoints


def writeTestPoints(testPoints, path):
    """Write test points in the format read by `readTestPoints`.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_TP_HEADER)
        for point in testPoints:
            writer.writerow((point.label, repr(point.position.x), repr(point.position.y),
                             repr(point.position.z)))
