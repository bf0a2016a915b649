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

import os
import shutil
import tempfile
import unittest

import lsst.utils.tests
from lsst.locate.ingestion import MEASUREMENT_COLUMNS, MeasurementFormatError, MeasurementIngestConfig, \
    MeasurementIngestTask, ingestMeasurements, writeMeasurements
from lsst.locate.scene import defaultTestPoints
from lsst.locate.simulation import TrialConfig, simulateMeasurements
from lsst.locate.testUtils import LocateTestCase

_HEADER = ",".join(MEASUREMENT_COLUMNS) + "\n"


class IngestionTestSuite(LocateTestCase):

    def setUp(self):
        super().setUp()
        self.root = tempfile.mkdtemp()
        self.path = os.path.join(self.root, "meas.csv")
        self.config = MeasurementIngestConfig()

    def tearDown(self):
        shutil.rmtree(self.root, ignore_errors=True)

    def _write(self, *rows):
        with open(self.path, "w") as f:
            f.write(_HEADER)
            for row in rows:
                f.write(row + "\n")

    def _ingest(self):
        return MeasurementIngestTask(config=self.config).run(self.path).epochs

    def testRoundTrip(self):
        epochs = simulateMeasurements(self.scene, TrialConfig(defaultTestPoints()[:2], trialsPerPoint=2))
        writeMeasurements(epochs, self.path)
        ingested = ingestMeasurements(self.path)
        self.assertEqual(len(ingested), len(epochs))
        for original, copy in zip(epochs, ingested):
            self.assertEqual((copy.epochId, copy.tpLabel), (original.epochId, original.tpLabel))
            self.assertEqual(copy.toa, original.toa)
            self.assertIsNone(copy.truth)
            self.assertEqual(len(copy.aoa), len(original.aoa))
            for a, b in zip(original.aoa, copy.aoa):
                self.assertEqual(a.locatorId, b.locatorId)
                self.assertIsNone(b.concentration)
                self.assertFloatsAlmostEqual(b.direction.asArray(), a.direction.asArray(), atol=1e-15, rtol=0)

    def testGrouping(self):
        self._write("7,A01,toa1,toa,12.5,,,,",
                    "3,A02,aoa1,aoa,,1,0,0,",
                    "7,A01,aoa2,AOA,,0,2,0,5.5")
        epochs = self._ingest()
        self.assertEqual([epoch.epochId for epoch in epochs], [7, 3])
        self.assertEqual(len(epochs[0].toa), 1)
        self.assertEqual(epochs[0].toa[0].toaM, 12.5)
        self.assertEqual(epochs[0].aoa[0].direction.y, 1.0)
        self.assertEqual(epochs[0].aoa[0].concentration, 5.5)
        self.assertEqual(epochs[1].toa, ())

    def testUnits(self):
        self._write("1,A01,toa1,toa,10,,,,")
        self.config.toaUnit = "ns"
        self.assertFloatsAlmostEqual(self._ingest()[0].toa[0].toaM, 2.99792458, rtol=1e-15)
        self.config.toaUnit = "s"
        self.assertFloatsAlmostEqual(self._ingest()[0].toa[0].toaM, 2997924580.0, rtol=1e-15)
        with self.assertRaises(ValueError):
            self.config.toaUnit = "us"

    def testDefaultKappa(self):
        self._write("1,A01,aoa1,aoa,,1,0,0,", "1,A01,aoa2,aoa,,0,1,0,3")
        self.config.defaultKappa = 20.0
        aoa = self._ingest()[0].aoa
        self.assertEqual([m.concentration for m in aoa], [20.0, 3.0])
        with self.assertRaises(ValueError):
            self.config.defaultKappa = 0.0

    def testMissingField(self):
        self._write("1,A01,toa1,toa,10,,,,", "1,A01,toa2,toa,,,,,")
        with self.assertRaises(MeasurementFormatError) as cm:
            self._ingest()
        self.assertEqual(cm.exception.lineNumber, 3)
        self.assertIn("value_m", str(cm.exception))

    def testBadValues(self):
        for row in ("x,A01,toa1,toa,10,,,,",
                    "1,A01,toa1,toa,ten,,,,",
                    "1,A01,toa1,rssi,10,,,,",
                    "1,A01,aoa1,aoa,,0,0,0,",
                    "1,A01,aoa1,aoa,,1,0,0,-2",
                    "1,A01,toa1,toa,nan,,,,",
                    ):
            with self.subTest(row=row):
                self._write(row)
                with self.assertRaises(MeasurementFormatError) as cm:
                    self._ingest()
                self.assertEqual(cm.exception.lineNumber, 2)

    def testInconsistentLabel(self):
        self._write("1,A01,toa1,toa,10,,,,", "1,A02,toa2,toa,10,,,,")
        with self.assertRaisesRegex(MeasurementFormatError, "line 3"):
            self._ingest()

    def testMissingColumns(self):
        with open(self.path, "w") as f:
            f.write("epoch_id,tp_label,value_m\n1,A01,10\n")
        with self.assertRaises(MeasurementFormatError) as cm:
            self._ingest()
        self.assertEqual(cm.exception.lineNumber, 1)


class MemoryTester(lsst.utils.tests.MemoryTestCase):
    pass


def setup_module(module):
    lsst.utils.tests.init()


if __name__ == "__main__":
    lsst.utils.tests.init()
    unittest.main()
