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

"""Measurement ingestion for locate.

This module reads recorded (or simulated) measurements from CSV files into
epochs, so that estimator code need not be aware of the file format.

Each row of a measurement file holds one observation::

    epoch_id,tp_label,locator_id,type,value_m,ux,uy,uz,kappa

``type`` is ``toa`` or ``aoa``. ToA rows fill ``value_m``; AoA rows fill
``ux``, ``uy``, ``uz`` (the measured direction in the locator frame, not
necessarily normalized) and optionally ``kappa`` to override the locator's
concentration.
"""

__all__ = ["MEASUREMENT_COLUMNS", "MeasurementFormatError", "MeasurementIngestConfig",
           "MeasurementIngestTask", "ingestMeasurements", "writeMeasurements"]

import csv
import logging

import scipy.constants

import lsst.pex.config as pexConfig
import lsst.pipe.base as pipeBase

from .aoa import AoaMeasurement
from .geometry import UnitVec3
from .simulation import Epoch
from .toa import ToaMeasurement

_LOG = logging.getLogger(__name__)

MEASUREMENT_COLUMNS = ("epoch_id", "tp_label", "locator_id", "type", "value_m", "ux", "uy", "uz", "kappa")
"""The columns of a measurement file, in order (`tuple` [`str`]).
"""

_TOA_SCALE = {"m": 1.0, "s": scipy.constants.c, "ns": 1e-9*scipy.constants.c}


class MeasurementFormatError(ValueError):
    """Raised when a measurement file cannot be parsed.

    Parameters
    ----------
    path : `str`
        The file being read.
    lineNumber : `int`
        The line on which the problem was found.
    message : `str`
        A description of the problem.
    """

    def __init__(self, path, lineNumber, message):
        super().__init__(f"{path}, line {lineNumber}: {message}")
        self.path = path
        self.lineNumber = lineNumber


class MeasurementIngestConfig(pexConfig.Config):
    """Settings and defaults for `MeasurementIngestTask`.
    """

    toaUnit = pexConfig.ChoiceField(
        dtype=str,
        default="m",
        allowed={"m": "ToA values are already multiplied by the speed of light.",
                 "s": "ToA values are in seconds.",
                 "ns": "ToA values are in nanoseconds.",
                 },
        doc="Unit of the value_m column of ToA rows.",
    )
    defaultKappa = pexConfig.RangeField(
        dtype=float,
        default=None,
        optional=True,
        min=0.0,
        inclusiveMin=False,
        doc="Concentration to assign AoA rows with an empty kappa column. "
            "If not set, such rows use the concentration of their locator.",
    )


class MeasurementIngestTask(pipeBase.Task):
    """Task for reading measurement files into epochs.
    """

    ConfigClass = MeasurementIngestConfig
    _DefaultName = "measurementIngest"

    def run(self, path):
        """Read a measurement file.

        Parameters
        ----------
        path : `str` or `pathlib.Path`
            The CSV file to read.

        Returns
        -------
        result : `lsst.pipe.base.Struct`
            Result struct with components:

            ``epochs``
                The epochs in the file, in order of first appearance
                (`list` [`lsst.locate.simulation.Epoch`]).

        Raises
        ------
        MeasurementFormatError
            Raised if the file lacks a required column, or a row is missing
            a field or has an invalid value.
        """
        scale = _TOA_SCALE[self.config.toaUnit]
        rowsByEpoch = {}
        labels = {}
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            missing = set(MEASUREMENT_COLUMNS[:4]) - set(reader.fieldnames or ())
            if missing:
                raise MeasurementFormatError(path, 1, f"missing columns {sorted(missing)}")
            for row in reader:
                epochId, label, measurement = self._parseRow(path, reader.line_num, row, scale)
                if labels.setdefault(epochId, label) != label:
                    raise MeasurementFormatError(
                        path, reader.line_num,
                        f"epoch {epochId} was recorded at {labels[epochId]!r}, not {label!r}")
                rowsByEpoch.setdefault(epochId, []).append(measurement)

        epochs = []
        for epochId, measurements in rowsByEpoch.items():
            toa = [m for m in measurements if isinstance(m, ToaMeasurement)]
            aoa = [m for m in measurements if isinstance(m, AoaMeasurement)]
            epochs.append(Epoch(epochId, labels[epochId], toa, aoa))
        self.log.info("Read %d epochs from %s.", len(epochs), path)
        return pipeBase.Struct(epochs=epochs)

    def _parseRow(self, path, lineNumber, row, scale):
        """Convert one row of a measurement file.

        Returns
        -------
        epochId : `int`
        tpLabel : `str`
        measurement : `lsst.locate.toa.ToaMeasurement` or `lsst.locate.aoa.AoaMeasurement`
        """
        def field(name):
            value = row.get(name)
            if value is None or not value.strip():
                raise MeasurementFormatError(path, lineNumber, f"missing field {name!r}")
            return value.strip()

        def number(name):
            try:
                return float(field(name))
            except ValueError as e:
                raise MeasurementFormatError(path, lineNumber, f"{name} is not a number: {row[name]!r}") from e

        try:
            epochId = int(field("epoch_id"))
        except ValueError as e:
            raise MeasurementFormatError(path, lineNumber, f"invalid epoch_id {row['epoch_id']!r}") from e
        label = field("tp_label")
        locatorId = field("locator_id")
        kind = field("type").lower()

        try:
            if kind == "toa":
                measurement = ToaMeasurement(locatorId, number("value_m")*scale)
            elif kind == "aoa":
                direction = UnitVec3(number("ux"), number("uy"), number("uz"))
                kappa = number("kappa") if (row.get("kappa") or "").strip() else self.config.defaultKappa
                measurement = AoaMeasurement(locatorId, direction, kappa)
            else:
                raise MeasurementFormatError(path, lineNumber, f"unknown measurement type {kind!r}")
        except MeasurementFormatError:
            raise
        except ValueError as e:
            raise MeasurementFormatError(path, lineNumber, str(e)) from e
        return epochId, label, measurement


def ingestMeasurements(path, config=None):
    """Read a measurement file into epochs.

    Parameters
    ----------
    path : `str` or `pathlib.Path`
        The CSV file to read.
    config : `MeasurementIngestConfig`, optional
        The ingestion settings. Defaults to the default config.

    Returns
    -------
    epochs : `list` [`lsst.locate.simulation.Epoch`]
        The epochs in the file.
    """
    ingester = MeasurementIngestTask(config=config if config is not None else MeasurementIngestConfig())
    return ingester.run(path).epochs


def writeMeasurements(epochs, path):
    """Write epochs in the format read by `MeasurementIngestTask`.

    ToA values are written in meters. AoA rows carry the measured direction
    and, if the measurement overrides it, the concentration.

    Parameters
    ----------
    epochs : iterable of `lsst.locate.simulation.Epoch`
        The epochs to write.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    nRows = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MEASUREMENT_COLUMNS)
        for epoch in epochs:
            for m in epoch.toa:
                writer.writerow((epoch.epochId, epoch.tpLabel, m.locatorId, "toa", repr(m.toaM), "", "", "", ""))
                nRows += 1
            for m in epoch.aoa:
                kappa = repr(m.concentration) if m.concentration is not None else ""
                writer.writerow((epoch.epochId, epoch.tpLabel, m.locatorId, "aoa", "",
                                 repr(m.direction.x), repr(m.direction.y), repr(m.direction.z), kappa))
                nRows += 1
    _LOG.getChild("writeMeasurements").debug("Wrote %d measurements to %s.", nRows, path)
