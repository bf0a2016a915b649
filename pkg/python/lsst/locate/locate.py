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

"""Command-line program for simulating, solving, and evaluating position
fixes.

In addition to containing locate's main function, this module manages
command-line argument parsing.
"""

__all__ = ["runLocate"]

import argparse
import logging
import sys

from .evaluation import ALGORITHMS, MonteCarloConfig, MonteCarloTask, errorCdf, perTpStats, runLocator, \
    summarize, syncSweep
from .ingestion import MeasurementIngestConfig, ingestMeasurements, writeMeasurements
from .records import writeCdf, writeEstimates, writePerTp, writeRecords, writeSummary, writeSweep
from .scene import PRESETS, defaultTestPoints, readScene, readTestPoints, writeScene, writeTestPoints
from .simulation import TrialConfig, simulateMeasurements
from .workspace import Workspace

_LOG = logging.getLogger(__name__)

_CLI_ALGORITHMS = {name.replace("_", "-"): name for name in ALGORITHMS}


def _configure_logger(level="INFO"):
    """Configure Python logging.
    """
    logging.basicConfig(level=level, stream=sys.stdout, force=True)


def _algorithmName(value):
    """Convert a command-line estimator name to its internal form.
    """
    try:
        return _CLI_ALGORITHMS[value.strip()]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"unknown algorithm {value!r}; choose from {', '.join(_CLI_ALGORITHMS)}") from None


def _algorithmList(value):
    return [_algorithmName(name) for name in value.split(",") if name.strip()]


def _floatList(value):
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from None


class _LoggingParser(argparse.ArgumentParser):
    """An argument parser for program-wide diagnostics.

    This parser is not complete, and is designed to be passed to another parser
    using the `parent` parameter.
    """

    def __init__(self):
        # Help and documentation will be handled by main program's parser
        argparse.ArgumentParser.__init__(self, add_help=False)
        self.add_argument("--log-level", default="INFO",
                          choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                          help="Verbosity of log messages.")


class _SceneParser(argparse.ArgumentParser):
    """An argument parser for the deployment description.

    This parser is not complete, and is designed to be passed to another parser
    using the `parent` parameter.
    """

    def __init__(self):
        # Help and documentation will be handled by main program's parser
        argparse.ArgumentParser.__init__(self, add_help=False)
        self.add_argument("--scene", required=True,
                          help="A JSON file describing the locators and noise models.")


class _TrialParser(argparse.ArgumentParser):
    """An argument parser for the design of a simulated experiment.

    This parser is not complete, and is designed to be passed to another parser
    using the `parent` parameter.
    """

    def __init__(self):
        # Help and documentation will be handled by main program's parser
        argparse.ArgumentParser.__init__(self, add_help=False)
        self.add_argument("--tps", default=None,
                          help="A CSV file of test points. Defaults to the 28-point grid of the "
                               "arena2036 preset.")
        self.add_argument("--trials", type=int, default=10,
                          help="Number of epochs simulated at each test point.")
        self.add_argument("--seed", type=int, default=0,
                          help="Master seed of all simulated randomness.")
        self.add_argument("--tau-spread-m", type=float, default=10.0,
                          help="Half-width (m) of the uniform distribution of the true transmit-time offset.")


class _ConfigParser(argparse.ArgumentParser):
    """An argument parser for Task config overrides.

    This parser is not complete, and is designed to be passed to another parser
    using the `parent` parameter.
    """

    def __init__(self):
        # Help and documentation will be handled by main program's parser
        argparse.ArgumentParser.__init__(self, add_help=False)
        self.add_argument("--config-file", dest="configFiles", action="append", default=[],
                          help="A config override file for the Monte-Carlo task, whose root is `config`.")
        self.add_argument("-c", "--config", dest="configOverrides", action="append", default=[],
                          metavar="NAME=VALUE",
                          help="A config override, e.g. solver.starts=32. VALUE is a Python literal.")


class _ProcessingParser(argparse.ArgumentParser):
    """An argument parser for general run-time characteristics.

    This parser is not complete, and is designed to be passed to another parser
    using the `parent` parameter.
    """

    def __init__(self):
        # Help and documentation will be handled by main program's parser
        argparse.ArgumentParser.__init__(self, add_help=False)
        self.add_argument("-j", "--processes", default=1, type=int,
                          help="Number of processes to use.")


class _LocateParser(argparse.ArgumentParser):
    """An argument parser for the main locate program.
    """

    def __init__(self):
        argparse.ArgumentParser.__init__(
            self,
            description="Simulates ToA and AoA measurements, estimates device positions from them, "
                        "and evaluates the accuracy of the estimators.",
            epilog="",
            add_help=True)
        subparsers = self.add_subparsers(dest="command", required=True, metavar="COMMAND",
                                           parser_class=argparse.ArgumentParser)
        common = [_LoggingParser()]

        simulate = subparsers.add_parser(
            "simulate", parents=common + [_SceneParser(), _TrialParser()],
            help="Synthesize measurements at the test points.")
        simulate.add_argument("--sync-std-m", type=float, default=0.0,
                              help="Standard deviation (m) of the synchronization error.")
        simulate.add_argument("--out", required=True, help="The measurement CSV file to create.")

        solve = subparsers.add_parser(
            "solve", parents=common + [_SceneParser(), _ConfigParser()],
            help="Run one estimator on recorded measurements.")
        solve.add_argument("--meas", required=True, help="The measurement CSV file to read.")
        solve.add_argument("--algo", required=True, type=_algorithmName,
                           help=f"The estimator: one of {', '.join(_CLI_ALGORITHMS)}.")
        solve.add_argument("--toa-unit", default="m", choices=["m", "s", "ns"],
                           help="Unit of ToA values in the measurement file.")
        solve.add_argument("--out", required=True, help="The estimate CSV file to create.")

        evaluate = subparsers.add_parser(
            "evaluate", parents=common + [_SceneParser(), _TrialParser(), _ConfigParser(),
                                          _ProcessingParser()],
            help="Run the Monte-Carlo evaluation of the estimators.")
        evaluate.add_argument("--algos", type=_algorithmList, default=None,
                              help="Comma-separated estimators to evaluate. Defaults to all.")
        evaluate.add_argument("--sync-std-m", type=float, default=0.0,
                              help="Standard deviation (m) of the synchronization error.")
        evaluate.add_argument("--out-dir", required=True, help="The directory in which to write reports.")

        sweep = subparsers.add_parser(
            "sweep", parents=common + [_SceneParser(), _TrialParser(), _ConfigParser(),
                                       _ProcessingParser()],
            help="Compare the ToA-only and joint estimators over synchronization error levels.")
        sweep.add_argument("--eta", type=_floatList, default=[0.0, 0.5, 1.0, 2.0, 4.0],
                           help="Comma-separated synchronization error levels (m).")
        sweep.add_argument("--out-dir", required=True, help="The directory in which to write reports.")

        preset = subparsers.add_parser(
            "preset", parents=common,
            help="Write a built-in scene.")
        preset.add_argument("--name", default="arena2036", choices=sorted(PRESETS),
                            help="The built-in scene.")
        preset.add_argument("--out", required=True, help="The scene JSON file to create.")
        preset.add_argument("--tps-out", default=None,
                            help="If given, also write the default test points to this CSV file.")


def _makeConfig(args):
    """Build the Monte-Carlo task config from command-line overrides.
    """
    config = MonteCarloConfig()
    for configFile in args.configFiles:
        config.load(configFile)
    for override in args.configOverrides:
        name, sep, value = override.partition("=")
        if not sep:
            raise ValueError(f"Config override {override!r} is not of the form NAME=VALUE.")
        config.loadFromString(f"config.{name.strip()} = {value.strip()}")
    return config


def _makeTrialConfig(args, syncStdM=0.0):
    testPoints = readTestPoints(args.tps) if args.tps else defaultTestPoints()
    return TrialConfig(testPoints, args.trials, syncStdM, args.seed, args.tau_spread_m)


def _runSimulate(args, log):
    scene = readScene(args.scene)
    epochs = simulateMeasurements(scene, _makeTrialConfig(args, args.sync_std_m))
    writeMeasurements(epochs, args.out)
    log.info("Measurements written to %s.", args.out)
    return 0


def _runSolve(args, log):
    scene = readScene(args.scene)
    config = _makeConfig(args)
    config.validate()
    ingestConfig = MeasurementIngestConfig()
    ingestConfig.toaUnit = args.toa_unit
    epochs = ingestMeasurements(args.meas, ingestConfig)

    results = []
    nFailed = 0
    for epoch in epochs:
        try:
            estimate = runLocator(args.algo, scene, epoch, config.solver)
        except (ValueError, LookupError, ArithmeticError) as e:
            log.warning("Epoch %d (%s) could not be solved: %s", epoch.epochId, epoch.tpLabel, e)
            nFailed += 1
            continue
        results.append((epoch, args.algo, estimate))
    writeEstimates(results, args.out)
    log.info("%d estimates written to %s.", len(results), args.out)
    return 1 if nFailed else 0


def _writeReports(workspace, records):
    algorithms = [name for name in ALGORITHMS if any(record.algorithm == name for record in records)]
    writeRecords(records, workspace.recordsLocation)
    if records:
        writeSummary({name: summarize(records, name) for name in algorithms}, workspace.summaryLocation)
        writeCdf({name: errorCdf(records, name) for name in algorithms}, workspace.cdfLocation)
        writePerTp(perTpStats(records), workspace.perTpLocation)


def _runEvaluate(args, log):
    scene = readScene(args.scene)
    config = _makeConfig(args)
    if args.algos is not None:
        config.algorithms = args.algos
    config.validate()
    workspace = Workspace(args.out_dir)
    config.save(workspace.configLocation(MonteCarloTask._DefaultName))

    result = MonteCarloTask(config=config).run(scene, _makeTrialConfig(args, args.sync_std_m),
                                               processes=args.processes)
    _writeReports(workspace, result.records)
    log.info("Reports written to %s.", workspace.workDir)
    return 1 if result.failures else 0


def _runSweep(args, log):
    scene = readScene(args.scene)
    config = _makeConfig(args)
    config.validate()
    workspace = Workspace(args.out_dir)
    config.save(workspace.configLocation(MonteCarloTask._DefaultName))

    results = syncSweep(scene, _makeTrialConfig(args), config.solver, args.eta, processes=args.processes)
    for eta, result in results.items():
        writeRecords(result.records, workspace.levelWorkspace(eta).recordsLocation)
    writeSweep(results, workspace.sweepLocation)
    log.info("Sweep results written to %s.", workspace.workDir)
    return 1 if any(result.failures for result in results.values()) else 0


def _runPreset(args, log):
    writeScene(PRESETS[args.name](), args.out)
    log.info("Scene %s written to %s.", args.name, args.out)
    if args.tps_out:
        writeTestPoints(defaultTestPoints(), args.tps_out)
        log.info("Test points written to %s.", args.tps_out)
    return 0


_COMMANDS = {
    "simulate": _runSimulate,
    "solve": _runSolve,
    "evaluate": _runEvaluate,
    "sweep": _runSweep,
    "preset": _runPreset,
}


def runLocate(cmdLine=None):
    """Execute one locate command.

    This is the main function for ``locate.py``, and handles logging,
    command-line argument parsing, and dispatch to the subcommands.

    Parameters
    ----------
    cmdLine : `list` of `str`
        an optional command line used to execute `runLocate` from other
        Python code. If `None`, `sys.argv` will be used.

    Returns
    -------
    code : `int`
        Zero if every estimate succeeded, one if any trial or epoch could
        not be solved.
    """
    args = _LocateParser().parse_args(args=cmdLine)
    _configure_logger(args.log_level)
    log = _LOG.getChild(args.command)
    log.debug('Command-line arguments: %s', args)
    return _COMMANDS[args.command](args, log)
