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

import csv
import json
import os
import shutil
import tempfile
import unittest

import lsst.pipe.base as pipeBase
import lsst.utils.tests
from lsst.locate.evaluation import ErrorStats, PerTpStats, TrialRecord
from lsst.locate.geometry import Point3
from lsst.locate.optimizer import Estimate
from lsst.locate.records import ESTIMATE_COLUMNS, PER_TP_COLUMNS, RECORD_COLUMNS, readRecords, readSummary, \
    writeCdf, writeEstimates, writePerTp, writeRecords, writeSummary, writeSweep
from lsst.locate.simulation import Epoch


class RecordsTestSuite(lsst.utils.tests.TestCase):

    def setUp(self):
        self.root = tempfile.mkdtemp()
        self.records = [
            TrialRecord("A01", 0, "toa_nls", Estimate(Point3(0.1, 1/3, 2.0), 7.25, -1e-17, True, 12, 8), 0.1),
            TrialRecord("A01", 0, "aoa", Estimate(Point3(-1.5, 1e-300, 7.3), None, 3.5, False, 200, 15),
                        2/3),
        ]

    def tearDown(self):
        shutil.rmtree(self.root, ignore_errors=True)

    def testRecordsRoundTrip(self):
        path = os.path.join(self.root, "records.csv")
        writeRecords(self.records, path)
        self.assertEqual(readRecords(path), self.records)
        with open(path) as f:
            rows = list(csv.reader(f))
        self.assertEqual(tuple(rows[0]), RECORD_COLUMNS)
        self.assertEqual(rows[2][RECORD_COLUMNS.index("tau_m")], "")
        self.assertEqual(rows[2][RECORD_COLUMNS.index("converged")], "false")

    def testBadRecord(self):
        path = os.path.join(self.root, "records.csv")
        writeRecords(self.records, path)
        with open(path, "a") as f:
            f.write("A02,0,joint,1,2,3,,0,maybe,1,0,0.5\n")
        with self.assertRaisesRegex(ValueError, "line 4"):
            readRecords(path)

    def testSummaryRoundTrip(self):
        path = os.path.join(self.root, "summary.json")
        summary = {"toa_nls": ErrorStats(1.25, 1.5, 1.0, 2.5, 56), "joint": ErrorStats(0.1, 0.2, 0.1, 0.3, 56)}
        writeSummary(summary, path)
        self.assertEqual(readSummary(path), summary)
        with open(path) as f:
            self.assertEqual(set(json.load(f)["joint"]), {"mean_m", "rms_m", "p50_m", "p90_m", "count"})

    def testEstimates(self):
        path = os.path.join(self.root, "estimates.csv")
        epoch = Epoch(42, "A07")
        writeEstimates([(epoch, "joint", self.records[0].estimate)], path)
        with open(path) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(list(rows[0]), list(ESTIMATE_COLUMNS))
        self.assertEqual((rows[0]["epoch_id"], rows[0]["tp_label"], rows[0]["algorithm"]), ("42", "A07", "joint"))
        self.assertEqual(float(rows[0]["y_m"]), 1/3)

    def testCdf(self):
        path = os.path.join(self.root, "cdf.json")
        writeCdf({"aoa": [(0.5, 0.5), (1.0, 1.0)]}, path)
        with open(path) as f:
            self.assertEqual(json.load(f), {"aoa": [[0.5, 0.5], [1.0, 1.0]]})

    def testPerTp(self):
        path = os.path.join(self.root, "per_tp.csv")
        writePerTp([PerTpStats("A01", "joint", 2.0, 1.0, 2)], path)
        with open(path) as f:
            self.assertEqual(f.read(), ",".join(PER_TP_COLUMNS) + "\nA01,joint,2.0,1.0,2\n")

    def testSweep(self):
        path = os.path.join(self.root, "sweep.json")
        results = {0.0: pipeBase.Struct(records=[], failures=["x"],
                                        summary={"joint": ErrorStats(1.0, 1.0, 1.0, 1.0, 1)},
                                        cdf={"joint": [(1.0, 1.0)]}),
                   2.0: pipeBase.Struct(records=[], failures=[], summary={}, cdf={})}
        writeSweep(results, path)
        with open(path) as f:
            data = json.load(f)
        self.assertEqual(data["eta_m"], [0.0, 2.0])
        self.assertEqual(data["levels"][0]["failures"], 1)
        self.assertEqual(data["levels"][0]["summary"]["joint"]["count"], 1)
        self.assertEqual(data["levels"][1]["cdf"], {})


class MemoryTester(lsst.utils.tests.MemoryTestCase):
    pass


def setup_module(module):
    lsst.utils.tests.init()


if __name__ == "__main__":
    lsst.utils.tests.init()
    unittest.main()
