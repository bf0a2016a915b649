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

"""Coordinate types, locator poses, and frame transforms.

All coordinates are in meters in the World frame unless stated otherwise.
Directions measured by an AoA locator are expressed in that locator's local
frame, whose boresight is the local +x axis.
"""

__all__ = ["DEGENERACY_TOLERANCE", "DegeneratePositionError", "UnknownLocatorError", "Point3", "UnitVec3",
           "Rotation3", "Box", "ToaLocator", "AoaLocator", "indexLocators", "trueDirection",
           "rotationFromEuler", "horizontalError"]

import dataclasses
import itertools
import math

import numpy as np
from scipy.spatial.transform import Rotation

DEGENERACY_TOLERANCE = 1e-9
"""Smallest distance (m) between a position and an AoA locator for which the
direction of arrival is defined (`float`).
"""

_ORTHONORMAL_TOLERANCE = 1e-9


class DegeneratePositionError(ValueError):
    """Raised when a position coincides with a locator, so that the direction
    between them is undefined.
    """


class UnknownLocatorError(LookupError):
    """Raised when a measurement names a locator that is not part of the
    scene.
    """


@dataclasses.dataclass(frozen=True)
class Point3:
    """A position in the World frame.

    Parameters
    ----------
    x, y, z : `float`
        Coordinates, in meters.

    Raises
    ------
    ValueError
        Raised if any coordinate is not finite.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Coordinate {name} must be finite, got {value}.")
            object.__setattr__(self, name, value)

    @classmethod
    def fromArray(cls, array):
        """Create a point from any 3-element sequence.
        """
        x, y, z = np.asarray(array, dtype=float).ravel()
        return cls(x, y, z)

    def asArray(self):
        """Return the coordinates as a new ``(3,)`` array.
        """
        return np.array([self.x, self.y, self.z])


class UnitVec3:
    """A direction in three dimensions.

    The input is normalized on construction, so that components read from
    text files with limited precision are accepted.

    Parameters
    ----------
    x, y, z : `float`
        Components of any nonzero vector parallel to the direction.

    Raises
    ------
    ValueError
        Raised if the input is not finite or has (nearly) zero length.
    """

    __slots__ = ("_components",)

    def __init__(self, x, y, z):
        components = np.array([x, y, z], dtype=float)
        if not np.all(np.isfinite(components)):
            raise ValueError(f"Direction components must be finite, got {components}.")
        norm = np.linalg.norm(components)
        if norm <= DEGENERACY_TOLERANCE:
            raise ValueError(f"Cannot normalize a zero-length direction {components}.")
        self._components = components / norm
        self._components.flags.writeable = False

    @classmethod
    def fromArray(cls, array):
        """Create a direction from any 3-element sequence.
        """
        x, y, z = np.asarray(array, dtype=float).ravel()
        return cls(x, y, z)

    def asArray(self):
        """Return the components as a new ``(3,)`` array.
        """
        return self._components.copy()

    @property
    def x(self):
        return float(self._components[0])

    @property
    def y(self):
        return float(self._components[1])

    @property
    def z(self):
        return float(self._components[2])

    def dot(self, other):
        """Return the cosine of the angle between two directions (`float`).
        """
        return float(self._components @ other._components)

    def __eq__(self, other):
        if not isinstance(other, UnitVec3):
            return NotImplemented
        return np.array_equal(self._components, other._components)

    def __hash__(self):
        return hash(tuple(self._components))

    def __repr__(self):
        return f"UnitVec3({self.x!r}, {self.y!r}, {self.z!r})"


class Rotation3:
    """A proper rotation, stored as a 3×3 orthonormal matrix.

    The matrix maps local-frame vectors into the World frame.

    Parameters
    ----------
    matrix : array-like, (3, 3)
        An orthonormal matrix with determinant +1.

    Raises
    ------
    ValueError
        Raised if ``matrix`` is not a proper rotation to within 1e-9.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.shape != (3, 3):
            raise ValueError(f"A rotation must be a 3x3 matrix, got shape {matrix.shape}.")
        if not np.allclose(matrix.T @ matrix, np.eye(3), rtol=0.0, atol=_ORTHONORMAL_TOLERANCE):
            raise ValueError(f"Matrix is not orthonormal:\n{matrix}")
        if abs(np.linalg.det(matrix) - 1.0) > _ORTHONORMAL_TOLERANCE:
            raise ValueError(f"Matrix is not a proper rotation (det={np.linalg.det(matrix)}).")
        matrix.flags.writeable = False
        self._matrix = matrix

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @property
    def matrix(self):
        """The rotation matrix (read-only `numpy.ndarray`, (3, 3)).
        """
        return self._matrix

    def apply(self, vector):
        """Rotate a local-frame vector into the World frame.
        """
        return self._matrix @ np.asarray(vector, dtype=float)

    def applyInverse(self, vector):
        """Rotate a World-frame vector into the local frame.
        """
        return self._matrix.T @ np.asarray(vector, dtype=float)

    def compose(self, other):
        """Return the rotation that applies ``other`` first, then ``self``.
        """
        return Rotation3(self._matrix @ other._matrix)

    def toEuler(self):
        """Return the intrinsic Z-Y-X angles that reproduce this rotation.

        Returns
        -------
        yaw, pitch, roll : `float`
            Angles in radians; see `rotationFromEuler`.
        """
        yaw, pitch, roll = Rotation.from_matrix(self._matrix).as_euler("ZYX")
        return float(yaw), float(pitch), float(roll)

    def __eq__(self, other):
        if not isinstance(other, Rotation3):
            return NotImplemented
        return np.array_equal(self._matrix, other._matrix)

    def __hash__(self):
        return hash(self._matrix.tobytes())

    def __repr__(self):
        return f"Rotation3({self._matrix.tolist()!r})"


@dataclasses.dataclass(frozen=True)
class Box:
    """An axis-aligned box in the World frame.

    Parameters
    ----------
    minimum, maximum : `Point3`
        Opposite corners of the box.

    Raises
    ------
    ValueError
        Raised if the box is empty along any axis.
    """

    minimum: Point3
    maximum: Point3

    def __post_init__(self):
        if np.any(self.minimum.asArray() > self.maximum.asArray()):
            raise ValueError(f"Box is empty: {self.minimum} > {self.maximum}.")

    @classmethod
    def fromArrays(cls, minimum, maximum):
        return cls(Point3.fromArray(minimum), Point3.fromArray(maximum))

    @property
    def center(self):
        """The center of the box (`Point3`).
        """
        return Point3.fromArray(0.5*(self.minimum.asArray() + self.maximum.asArray()))

    def corners(self):
        """Return the eight corners of the box, as a ``(8, 3)`` array.

        The corners are ordered with z varying fastest, then y, then x.
        """
        return np.array(list(itertools.product(*zip(self.minimum.asArray(), self.maximum.asArray()))))

    def contains(self, point, tolerance=0.0):
        """Test whether a point lies inside the box (boundaries included).
        """
        coords = point.asArray()
        return bool(np.all(coords >= self.minimum.asArray() - tolerance)
                    and np.all(coords <= self.maximum.asArray() + tolerance))

    def padded(self, margin):
        """Return a copy of this box grown by ``margin`` meters on every side.
        """
        return Box.fromArrays(self.minimum.asArray() - margin, self.maximum.asArray() + margin)


@dataclasses.dataclass(frozen=True)
class ToaLocator:
    """A time-synchronized receiver that measures times of arrival.

    Parameters
    ----------
    id : `str`
        Identifier, unique within a scene.
    position : `Point3`
        The receiver position.
    """

    id: str
    position: Point3


@dataclasses.dataclass(frozen=True)
class AoaLocator:
    """A receiver with an antenna array that measures directions of arrival.

    Parameters
    ----------
    id : `str`
        Identifier, unique within a scene.
    position : `Point3`
        The array position.
    orientation : `Rotation3`
        The rotation from the locator's local frame to the World frame.
    concentration : `float`
        The von Mises-Fisher concentration of the locator's directional
        estimates.

    Raises
    ------
    ValueError
        Raised if ``concentration`` is not positive.
    """

    id: str
    position: Point3
    orientation: Rotation3
    concentration: float

    def __post_init__(self):
        if not self.concentration > 0:
            raise ValueError(f"Locator {self.id} must have positive concentration, "
                             f"got {self.concentration}.")


def trueDirection(locator, x):
    """Compute the direction of a position as seen from an AoA locator.

    Parameters
    ----------
    locator : `AoaLocator`
        The observing locator.
    x : `Point3`
        The observed position.

    Returns
    -------
    direction : `UnitVec3`
        The unit vector toward ``x``, in the locator's local frame.

    Raises
    ------
    DegeneratePositionError
        Raised if ``x`` coincides with the locator position.
    """
    offset = x.asArray() - locator.position.asArray()
    distance = np.linalg.norm(offset)
    if distance <= DEGENERACY_TOLERANCE:
        raise DegeneratePositionError(f"Position {x} coincides with locator {locator.id}.")
    return UnitVec3.fromArray(locator.orientation.applyInverse(offset / distance))


def rotationFromEuler(yaw, pitch, roll):
    """Build an orientation from intrinsic Z-Y-X (yaw-pitch-roll) angles.

    Parameters
    ----------
    yaw : `float`
        Rotation about the World z axis, in radians.
    pitch : `float`
        Rotation about the intermediate y axis, in radians.
    roll : `float`
        Rotation about the final x axis, in radians.

    Returns
    -------
    orientation : `Rotation3`
        The rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``.

    Notes
    -----
    With the boresight along local +x, a positive pitch tilts the boresight
    downward (toward -z).
    """
    for angle in (yaw, pitch, roll):
        if not math.isfinite(angle):
            raise ValueError(f"Euler angles must be finite, got {(yaw, pitch, roll)}.")
    return Rotation3(Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix())


def horizontalError(estimate, truth):
    """Return the distance between two positions in the x-y plane, in meters.
    """
    return math.hypot(estimate.x - truth.x, estimate.y - truth.y)


def indexLocators(locators):
    """Map locator IDs to locators.

    Parameters
    ----------
    locators : iterable of `ToaLocator` or `AoaLocator`
        The locators to index.

    Returns
    -------
    index : `dict` [`str`, `ToaLocator` or `AoaLocator`]
        The locators, keyed by ID.

    Raises
    ------
    ValueError
        Raised if two locators share an ID.
    """
    index = {}
    for locator in locators:
        if locator.id in index:
            raise ValueError(f"Duplicate locator ID {locator.id!r}.")
        index[locator.id] = locator
    return index
