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

"""Monte-Carlo evaluation of the position estimators.

The experiment is a paired design: each epoch's measurements are
synthesized once, and every estimator under test is run on the same
measurements. Accuracy is reported as horizontal error.
"""

__all__ = ["ALGORITHMS", "SWEEP_ALGORITHMS", "TrialRecord", "TrialFailure", "ErrorStats", "PerTpStats",
           "MonteCarloConfig", "MonteCarloTask", "runLocator", "runMonteCarlo", "horizontalErrors",
           "errorCdf", "summarize", "perTpStats", "syncSweep"]

import dataclasses
import logging
import math
import multiprocessing

import numpy as np

import lsst.pex.config as pexConfig
import lsst.pipe.base as pipeBase

from .aoa import aoaEstimate
from .geometry import horizontalError
from .joint import jointEstimate
from .optimizer import Estimate, SolverConfig
from .simulation import synthesizeEpoch
from .toa import mapToaEstimate, nlsEstimate

_LOG = logging.getLogger(__name__)

ALGORITHMS = ("toa_nls", "toa_map", "aoa", "joint")
"""The estimators that can be evaluated, in reporting order (`tuple` [`str`]).
"""

SWEEP_ALGORITHMS = ("toa_nls", "joint")
"""The estimators compared in a synchronization-error sweep (`tuple` [`str`]).
"""


@dataclasses.dataclass(frozen=True)
class TrialRecord:
    """The outcome of one estimator on one epoch.

    Parameters
    ----------
    tpLabel : `str`
        The test point.
    epoch : `int`
        The epoch number at that test point.
    algorithm : `str`
        The estimator, one of `ALGORITHMS`.
    estimate : `lsst.locate.optimizer.Estimate`
        The estimator output.
    horizErrM : `float`
        The horizontal distance (m) between the estimate and the truth.
    """

    tpLabel: str
    epoch: int
    algorithm: str
    estimate: Estimate
    horizErrM: float

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"Unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}.")
        if not self.horizErrM >= 0.0:
            raise ValueError(f"Horizontal error must be non-negative, got {self.horizErrM}.")


@dataclasses.dataclass(frozen=True)
class TrialFailure:
    """An estimator run that raised instead of returning an estimate.
    """

    tpLabel: str
    epoch: int
    algorithm: str
    message: str


@dataclasses.dataclass(frozen=True)
class ErrorStats:
    """Summary statistics of horizontal error.

    Parameters
    ----------
    meanM : `float`
        The mean error (m).
    rmsM : `float`
        The root-mean-square error (m).
    p50M, p90M : `float`
        The nearest-rank 50th and 90th percentiles (m).
    count : `int`
        The number of errors summarized.
    """

    meanM: float
    rmsM: float
    p50M: float
    p90M: float
    count: int


@dataclasses.dataclass(frozen=True)
class PerTpStats:
    """Error statistics of one estimator at one test point.
    """

    tpLabel: str
    algorithm: str
    meanM: float
    stdM: float
    count: int


class MonteCarloConfig(pexConfig.Config):
    """Settings for `MonteCarloTask`.
    """

    solver = pexConfig.ConfigField(
        dtype=SolverConfig,
        doc="Settings shared by all estimators.",
    )
    algorithms = pexConfig.ListField(
        dtype=str,
        default=list(ALGORITHMS),
        itemCheck=lambda name: name in ALGORITHMS,
        doc=f"Estimators to run on each epoch; any of {', '.join(ALGORITHMS)}.",
    )

    def validate(self):
        super().validate()
        if not self.algorithms:
            raise ValueError("At least one algorithm must be evaluated.")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError(f"Duplicate algorithms in {list(self.algorithms)}.")


def runLocator(algorithm, scene, epoch, solverConfig):
    """Run one estimator on one epoch's measurements.

    Parameters
    ----------
    algorithm : `str`
        The estimator, one of `ALGORITHMS`.
    scene : `lsst.locate.scene.Scene`
        The deployment.
    epoch : `lsst.locate.simulation.Epoch`
        The measurements.
    solverConfig : `lsst.locate.optimizer.SolverConfig`
        The solver settings.

    Returns
    -------
    estimate : `lsst.locate.optimizer.Estimate`

    Raises
    ------
    ValueError
        Raised if ``algorithm`` is unknown or the measurements are
        insufficient for it.
    """
    if algorithm == "toa_nls":
        return nlsEstimate(scene.toaLocators, epoch.toa, solverConfig, scene.bounds)
    elif algorithm == "toa_map":
        return mapToaEstimate(scene.toaLocators, scene.toaNoise, epoch.toa, solverConfig, scene.bounds)
    elif algorithm == "aoa":
        return aoaEstimate(scene.aoaLocators, epoch.aoa, solverConfig, scene.bounds)
    elif algorithm == "joint":
        return jointEstimate(scene, epoch.toa, epoch.aoa, solverConfig)
    else:
        raise ValueError(f"Unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}.")


def _processEpoch(work):
    """Synthesize one epoch and run every requested estimator on it.

    This function is the unit of work for parallel execution.
    """
    scene, trialConfig, tpIndex, epochNumber, algorithms, solverConfig = work
    epoch = synthesizeEpoch(scene, trialConfig, tpIndex, epochNumber)
    records = []
    failures = []
    for algorithm in algorithms:
        try:
            estimate = runLocator(algorithm, scene, epoch, solverConfig)
        except (ValueError, LookupError, ArithmeticError) as e:
            failures.append(TrialFailure(epoch.tpLabel, epochNumber, algorithm, str(e)))
            continue
        records.append(TrialRecord(epoch.tpLabel, epochNumber, algorithm, estimate,
                                   horizontalError(estimate.position, epoch.truth)))
    return records, failures


class MonteCarloTask(pipeBase.Task):
    """Task for running the paired Monte-Carlo experiment.

    For each test point and epoch, the task synthesizes one set of ToA and
    AoA measurements, runs every configured estimator on it, and records
    the horizontal error of each estimate.
    """

    ConfigClass = MonteCarloConfig
    _DefaultName = "monteCarlo"

    def run(self, scene, trialConfig, processes=1):
        """Run the experiment.

        Parameters
        ----------
        scene : `lsst.locate.scene.Scene`
            The deployment, used both to synthesize and to estimate.
        trialConfig : `lsst.locate.simulation.TrialConfig`
            The trial design.
        processes : `int`
            The number of processes to use. Results do not depend on this
            value.

        Returns
        -------
        result : `lsst.pipe.base.Struct`
            Result struct with components:

            ``records``
                One record per successful estimate, ordered by test point,
                then epoch, then algorithm (`list` [`TrialRecord`]).
            ``failures``
                The estimator runs that raised, in the same order
                (`list` [`TrialFailure`]).
        """
        self.config.validate()
        algorithms = [name for name in ALGORITHMS if name in self.config.algorithms]
        work = [(scene, trialConfig, tpIndex, epoch, algorithms, self.config.solver)
                for tpIndex in range(len(trialConfig.testPoints))
                for epoch in range(trialConfig.trialsPerPoint)]
        self.log.info("Running %s on %d epochs (sync error %g m)...",
                      ", ".join(algorithms), len(work), trialConfig.syncStdM)

        if processes > 1:
            with multiprocessing.Pool(processes) as pool:
                results = pool.map(_processEpoch, work, chunksize=max(1, len(work) // (4*processes)))
        else:
            results = [_processEpoch(item) for item in work]

        records = [record for epochRecords, _ in results for record in epochRecords]
        failures = [failure for _, epochFailures in results for failure in epochFailures]
        for failure in failures:
            self.log.warning("%s failed on %s, epoch %d: %s",
                             failure.algorithm, failure.tpLabel, failure.epoch, failure.message)
        nUnconverged = sum(1 for record in records if not record.estimate.converged)
        if nUnconverged:
            self.log.warning("%d of %d estimates did not meet the convergence criterion.",
                             nUnconverged, len(records))
        self.log.info("Finished: %d records, %d failures.", len(records), len(failures))
        return pipeBase.Struct(records=records, failures=failures)


def runMonteCarlo(scene, trialConfig, solverConfig=None, algorithms=None, processes=1):
    """Run the paired Monte-Carlo experiment.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment.
    trialConfig : `lsst.locate.simulation.TrialConfig`
        The trial design.
    solverConfig : `lsst.locate.optimizer.SolverConfig`, optional
        The solver settings. Defaults to the default `SolverConfig`.
    algorithms : iterable of `str`, optional
        The estimators to run. Defaults to all of `ALGORITHMS`.
    processes : `int`
        The number of processes to use.

    Returns
    -------
    result : `lsst.pipe.base.Struct`
        The output of `MonteCarloTask.run`.
    """
    config = MonteCarloConfig()
    if solverConfig is not None:
        config.solver = solverConfig
    if algorithms is not None:
        config.algorithms = list(algorithms)
    return MonteCarloTask(config=config).run(scene, trialConfig, processes=processes)


def horizontalErrors(records, algorithm=None):
    """Extract horizontal errors from trial records.

    Parameters
    ----------
    records : iterable of `TrialRecord`
        The records.
    algorithm : `str`, optional
        If set, keep only records of this estimator.

    Returns
    -------
    errors : `numpy.ndarray`
        The errors, sorted in increasing order.

    Raises
    ------
    ValueError
        Raised if no records remain, or if ``algorithm`` is omitted and the
        records mix estimators.
    """
    records = [record for record in records if algorithm is None or record.algorithm == algorithm]
    if not records:
        raise ValueError(f"No records to summarize{f' for {algorithm}' if algorithm else ''}.")
    if len({record.algorithm for record in records}) > 1:
        raise ValueError("Records mix several algorithms; select one.")
    return np.sort([record.horizErrM for record in records])


def errorCdf(records, algorithm=None):
    """Compute the empirical distribution of horizontal errors.

    Parameters
    ----------
    records : iterable of `TrialRecord`
        The records of a single estimator.
    algorithm : `str`, optional
        If set, keep only records of this estimator.

    Returns
    -------
    cdf : `list` [`tuple` [`float`, `float`]]
        ``(error, fraction)`` pairs, one per distinct error in increasing
        order, where ``fraction`` is the share of errors that do not exceed
        ``error``. The last fraction is 1.

    Raises
    ------
    ValueError
        Raised if there are no records.
    """
    errors = horizontalErrors(records, algorithm)
    values = np.unique(errors)
    counts = np.searchsorted(errors, values, side="right")
    return [(float(value), int(count)/len(errors)) for value, count in zip(values, counts)]


def summarize(records, algorithm=None):
    """Compute summary statistics of horizontal error.

    Parameters
    ----------
    records : iterable of `TrialRecord`
        The records of a single estimator.
    algorithm : `str`, optional
        If set, keep only records of this estimator.

    Returns
    -------
    stats : `ErrorStats`
        The mean, RMS, and nearest-rank 50th and 90th percentiles. The
        result does not depend on the order of ``records``.

    Raises
    ------
    ValueError
        Raised if there are no records.
    """
    errors = horizontalErrors(records, algorithm)
    n = len(errors)
    p50, p90 = np.percentile(errors, [50, 90], method="inverted_cdf")
    return ErrorStats(meanM=math.fsum(errors)/n,
                      rmsM=math.sqrt(math.fsum(errors**2)/n),
                      p50M=float(p50),
                      p90M=float(p90),
                      count=n,
                      )


def perTpStats(records):
    """Compute error statistics per test point and estimator.

    Parameters
    ----------
    records : iterable of `TrialRecord`
        The records to group.

    Returns
    -------
    stats : `list` [`PerTpStats`]
        One entry per (test point, estimator) pair present in ``records``,
        with test points in order of first appearance and estimators in the
        order of `ALGORITHMS`. Standard deviations use the population
        (n-denominator) formula.

    Raises
    ------
    ValueError
        Raised if there are no records.
    """
    groups = {}
    for record in records:
        groups.setdefault(record.tpLabel, {}).setdefault(record.algorithm, []).append(record.horizErrM)
    if not groups:
        raise ValueError("No records to summarize.")

    stats = []
    for tpLabel, byAlgorithm in groups.items():
        for algorithm in ALGORITHMS:
            if algorithm in byAlgorithm:
                errors = np.sort(byAlgorithm[algorithm])
                mean = math.fsum(errors)/len(errors)
                std = math.sqrt(math.fsum((errors - mean)**2)/len(errors))
                stats.append(PerTpStats(tpLabel, algorithm, mean, std, len(errors)))
    return stats


def syncSweep(scene, trialConfig, solverConfig, etaValues, processes=1):
    """Evaluate the ToA-only and joint estimators over a range of
    synchronization error levels.

    All levels reuse the same channel bias, thermal, AoA and transmit-time
    draws, and the same standardized synchronization draws, so that
    differences between levels are due to the synchronization error alone.

    Parameters
    ----------
    scene : `lsst.locate.scene.Scene`
        The deployment.
    trialConfig : `lsst.locate.simulation.TrialConfig`
        The trial design. Its ``syncStdM`` is ignored.
    solverConfig : `lsst.locate.optimizer.SolverConfig`
        The solver settings.
    etaValues : iterable of `float`
        The synchronization error levels (m) to evaluate.
    processes : `int`
        The number of processes to use.

    Returns
    -------
    results : `dict` [`float`, `lsst.pipe.base.Struct`]
        For each level, in the order given, a struct with components:

        ``records``
            The trial records (`list` [`TrialRecord`]).
        ``failures``
            The failed estimator runs (`list` [`TrialFailure`]).
        ``summary``
            Summary statistics per estimator (`dict` [`str`, `ErrorStats`]).
        ``cdf``
            Empirical error distribution per estimator (`dict` [`str`, `list`]).

    Raises
    ------
    ValueError
        Raised if any level is negative or not finite.
    """
    etaValues = [float(eta) for eta in etaValues]
    for eta in etaValues:
        if not (math.isfinite(eta) and eta >= 0.0):
            raise ValueError(f"Synchronization error levels must be non-negative, got {eta}.")
    log = _LOG.getChild("syncSweep")

    results = {}
    for eta in etaValues:
        log.info("Sweep level %g m...", eta)
        run = runMonteCarlo(scene, dataclasses.replace(trialConfig, syncStdM=eta), solverConfig,
                            SWEEP_ALGORITHMS, processes=processes)
        summary = {}
        cdf = {}
        for algorithm in SWEEP_ALGORITHMS:
            if any(record.algorithm == algorithm for record in run.records):
                summary[algorithm] = summarize(run.records, algorithm)
                cdf[algorithm] = errorCdf(run.records, algorithm)
        results[eta] = pipeBase.Struct(records=run.records, failures=run.failures, summary=summary, cdf=cdf)
    return results

