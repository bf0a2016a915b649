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

"""Report files written by the evaluation pipeline.

Tables (records, estimates, per-test-point statistics) are CSV; summaries
and error distributions are JSON. Floating-point values are written with
full precision, so reading a records file reproduces the records exactly.
"""

__all__ = ["RECORD_COLUMNS", "ESTIMATE_COLUMNS", "PER_TP_COLUMNS", "writeRecords", "readRecords",
           "writeEstimates", "writeSummary", "readSummary", "writeCdf", "writePerTp", "writeSweep"]

import csv
import json

from .evaluation import ErrorStats, TrialRecord
from .geometry import Point3
from .optimizer import Estimate

RECORD_COLUMNS = ("tp_label", "epoch", "algorithm", "x_m", "y_m", "z_m", "tau_m", "log_likelihood",
                  "converged", "iterations", "start_index", "horiz_err_m")
ESTIMATE_COLUMNS = ("epoch_id", "tp_label", "algorithm", "x_m", "y_m", "z_m", "tau_m", "log_likelihood",
                    "converged", "iterations", "start_index")
PER_TP_COLUMNS = ("tp_label", "algorithm", "mean_m", "std_m", "count")


def _estimateFields(estimate):
    return (repr(estimate.position.x), repr(estimate.position.y), repr(estimate.position.z),
            repr(estimate.tau) if estimate.tau is not None else "",
            repr(estimate.logLikelihood), str(estimate.converged).lower(), str(estimate.iterations),
            str(estimate.startIndex))


def _parseBool(value):
    if value.lower() in ("true", "1"):
        return True
    if value.lower() in ("false", "0"):
        return False
    raise ValueError(f"Not a boolean: {value!r}.")


def _parseEstimate(row):
    return Estimate(position=Point3(float(row["x_m"]), float(row["y_m"]), float(row["z_m"])),
                    tau=float(row["tau_m"]) if row["tau_m"] else None,
                    logLikelihood=float(row["log_likelihood"]),
                    converged=_parseBool(row["converged"]),
                    iterations=int(row["iterations"]),
                    startIndex=int(row["start_index"]),
                    )


def writeRecords(records, path):
    """Write trial records as CSV.

    Parameters
    ----------
    records : iterable of `lsst.locate.evaluation.TrialRecord`
        The records to write, in the order given.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            writer.writerow((record.tpLabel, str(record.epoch), record.algorithm,
                             *_estimateFields(record.estimate), repr(record.horizErrM)))


def readRecords(path):
    """Read trial records written by `writeRecords`.

    Returns
    -------
    records : `list` [`lsst.locate.evaluation.TrialRecord`]

    Raises
    ------
    ValueError
        Raised if a row is malformed.
    """
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            try:
                records.append(TrialRecord(row["tp_label"], int(row["epoch"]), row["algorithm"],
                                           _parseEstimate(row), float(row["horiz_err_m"])))
            except (KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}, line {reader.line_num}: invalid record.") from e
    return records


def writeEstimates(results, path):
    """Write the output of estimators run on recorded epochs as CSV.

    Parameters
    ----------
    results : iterable of `tuple`
        ``(epoch, algorithm, estimate)`` triples, where ``epoch`` is a
        `lsst.locate.simulation.Epoch` and ``estimate`` a
        `lsst.locate.optimizer.Estimate`.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ESTIMATE_COLUMNS)
        for epoch, algorithm, estimate in results:
            writer.writerow((str(epoch.epochId), epoch.tpLabel, algorithm, *_estimateFields(estimate)))


def _statsToDict(stats):
    return {"mean_m": stats.meanM, "rms_m": stats.rmsM, "p50_m": stats.p50M, "p90_m": stats.p90M,
            "count": stats.count}


def _writeJson(data, path):
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def writeSummary(summary, path):
    """Write summary statistics as JSON.

    Parameters
    ----------
    summary : `dict` [`str`, `lsst.locate.evaluation.ErrorStats`]
        Statistics keyed by estimator.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    _writeJson({algorithm: _statsToDict(stats) for algorithm, stats in summary.items()}, path)


def readSummary(path):
    """Read summary statistics written by `writeSummary`.

    Returns
    -------
    summary : `dict` [`str`, `lsst.locate.evaluation.ErrorStats`]
    """
    with open(path) as f:
        data = json.load(f)
    return {algorithm: ErrorStats(meanM=entry["mean_m"], rmsM=entry["rms_m"], p50M=entry["p50_m"],
                                  p90M=entry["p90_m"], count=entry["count"])
            for algorithm, entry in data.items()}


def writeCdf(cdfs, path):
    """Write empirical error distributions as JSON.

    Parameters
    ----------
    cdfs : `dict` [`str`, `list` [`tuple` [`float`, `float`]]]
        ``(error, fraction)`` pairs keyed by estimator.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    _writeJson({algorithm: [[error, fraction] for error, fraction in cdf] for algorithm, cdf in cdfs.items()},
               path)


def writePerTp(stats, path):
    """Write per-test-point statistics as CSV.

    Parameters
    ----------
    stats : iterable of `lsst.locate.evaluation.PerTpStats`
        The statistics to write.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PER_TP_COLUMNS)
        for entry in stats:
            writer.writerow((entry.tpLabel, entry.algorithm, repr(entry.meanM), repr(entry.stdM),
                             str(entry.count)))


def writeSweep(results, path):
    """Write the aggregate results of a synchronization-error sweep as JSON.

    Parameters
    ----------
    results : `dict` [`float`, `lsst.pipe.base.Struct`]
        The output of `lsst.locate.evaluation.syncSweep`.
    path : `str` or `pathlib.Path`
        The file to create.
    """
    levels = []
    for eta, result in results.items():
        levels.append({
            "eta_m": eta,
            "failures": len(result.failures),
            "summary": {algorithm: _statsToDict(stats) for algorithm, stats in result.summary.items()},
            "cdf": {algorithm: [[error, fraction] for error, fraction in cdf]
                    for algorithm, cdf in result.cdf.items()},
        })
    _writeJson({"eta_m": list(results), "levels": levels}, path)

