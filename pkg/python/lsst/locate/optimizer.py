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

"""The bounded multi-start optimizer shared by all position estimators.

Every estimator maximizes a smooth objective over a position (optionally
with a fixed height) and, where ToA data are involved, a transmit-time
offset. The local searches run from all starting points at once. Each iteration
takes a projected Newton step, using a Hessian differenced from the analytic
gradient, or falls back to a projected gradient step, with Armijo
backtracking in either case.
"""

__all__ = ["SolverConfig", "Estimate", "Parameterization", "maximize"]

import dataclasses
import itertools
import logging
import typing

import numpy as np

import lsst.pex.config as pexConfig
import lsst.pipe.base as pipeBase

from .geometry import Box, Point3

_LOG = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 60
_DIFFERENCE_SCALE = np.finfo(float).eps**(1.0/3.0)
_CURVATURE_FLOOR = 1e-12
# Improvements below this fraction of max(1, |objective|) are rounding noise
_RESOLUTION = 1e3*np.finfo(float).eps


class SolverConfig(pexConfig.Config):
    """Settings for the multi-start position solver.
    """

    starts = pexConfig.RangeField(
        dtype=int,
        default=16,
        min=1,
        doc="Number of local searches. The first starts are the corners and center of the "
            "search box; the remainder are drawn uniformly from it.",
    )
    maxIters = pexConfig.RangeField(
        dtype=int,
        default=200,
        min=1,
        doc="Maximum number of iterations of each local search.",
    )
    gradientTolerance = pexConfig.RangeField(
        dtype=float,
        default=1e-8,
        min=0.0,
        inclusiveMin=False,
        doc="Without refine, a search has converged when the norm of its projected gradient is below "
            "this value, scaled by max(1, |objective|).",
    )
    stepTolerance = pexConfig.RangeField(
        dtype=float,
        default=1e-9,
        min=0.0,
        inclusiveMin=False,
        doc="With refine, a search has converged when its Newton step is shorter than this (m).",
    )
    stepInitial = pexConfig.RangeField(
        dtype=float,
        default=1.0,
        min=0.0,
        inclusiveMin=False,
        doc="Length (m) of the first trial gradient step of each search.",
    )
    boundsPadding = pexConfig.RangeField(
        dtype=float,
        default=2.0,
        min=0.0,
        doc="Margin (m) by which the scene bounds are grown to form the search box. "
            "Ignored if boundsMin and boundsMax are set.",
    )
    boundsMin = pexConfig.ListField(
        dtype=float,
        default=None,
        optional=True,
        length=3,
        doc="Lower corner (m) of an explicit search box.",
    )
    boundsMax = pexConfig.ListField(
        dtype=float,
        default=None,
        optional=True,
        length=3,
        doc="Upper corner (m) of an explicit search box.",
    )
    tauMin = pexConfig.Field(
        dtype=float,
        default=-100.0,
        doc="Lower bound (m) on the transmit-time offset.",
    )
    tauMax = pexConfig.Field(
        dtype=float,
        default=100.0,
        doc="Upper bound (m) on the transmit-time offset.",
    )
    fixedZ = pexConfig.Field(
        dtype=float,
        default=None,
        optional=True,
        doc="If set, solve for horizontal position only, holding the height (m) at this value.",
    )
    refine = pexConfig.Field(
        dtype=bool,
        default=True,
        doc="Take Newton steps within each local search, falling back to gradient steps. "
            "If False, use projected gradient ascent alone.",
    )
    seed = pexConfig.Field(
        dtype=int,
        default=0,
        doc="Seed for the randomly placed starts.",
    )

    def validate(self):
        super().validate()
        if (self.boundsMin is None) != (self.boundsMax is None):
            raise ValueError("boundsMin and boundsMax must be set together.")
        if self.boundsMin is not None:
            box = Box.fromArrays(self.boundsMin, self.boundsMax)
            if self.fixedZ is not None and not box.minimum.z <= self.fixedZ <= box.maximum.z:
                raise ValueError(f"fixedZ={self.fixedZ} lies outside the search box {box}.")
        if not self.tauMin <= self.tauMax:
            raise ValueError(f"Empty transmit-time interval [{self.tauMin}, {self.tauMax}].")

    def resolveBounds(self, sceneBounds=None):
        """Return the position search box.

        Parameters
        ----------
        sceneBounds : `lsst.locate.geometry.Box`, optional
            The extent of the deployment area. Required unless this config
            sets an explicit box.

        Returns
        -------
        box : `lsst.locate.geometry.Box`
            The explicit box if one is configured, otherwise ``sceneBounds``
            grown by ``boundsPadding``.

        Raises
        ------
        ValueError
            Raised if neither an explicit box nor ``sceneBounds`` is available.
        """
        if self.boundsMin is not None:
            return Box.fromArrays(self.boundsMin, self.boundsMax)
        if sceneBounds is None:
            raise ValueError("No search box: pass the scene bounds or set boundsMin/boundsMax.")
        return sceneBounds.padded(self.boundsPadding)


@dataclasses.dataclass(frozen=True)
class Estimate:
    """The result of a position fix.

    Parameters
    ----------
    position : `lsst.locate.geometry.Point3`
        The estimated position.
    tau : `float` or `None`
        The estimated transmit-time offset (m), or `None` for estimators that
        use no ToA data.
    logLikelihood : `float`
        The objective value at the estimate. For nonlinear least squares this
        is the negated residual sum of squares.
    converged : `bool`
        Whether the winning search met the convergence criterion.
    iterations : `int`
        Iterations used by the winning search.
    startIndex : `int`
        Index of the winning start.
    """

    position: Point3
    tau: typing.Optional[float]
    logLikelihood: float
    converged: bool
    iterations: int
    startIndex: int


class Parameterization:
    """The mapping between optimizer variables and a position fix.

    The variables are ``(x, y, z, tau)``, with ``z`` omitted when the height
    is fixed and ``tau`` omitted when the objective does not depend on it.

    Parameters
    ----------
    box : `lsst.locate.geometry.Box`
        The position search box.
    config : `SolverConfig`
        The solver settings.
    hasTau : `bool`
        Whether ``tau`` is an optimization variable.
    """

    def __init__(self, box, config, hasTau):
        self.box = box
        self.fixedZ = config.fixedZ
        self.hasTau = hasTau
        self.nPosition = 2 if self.fixedZ is not None else 3

        lower = list(box.minimum.asArray()[:self.nPosition])
        upper = list(box.maximum.asArray()[:self.nPosition])
        if hasTau:
            lower.append(config.tauMin)
            upper.append(config.tauMax)
        self.lower = np.array(lower)
        self.upper = np.array(upper)

    def positions(self, theta):
        """Extract World-frame positions from an array of variables.

        Parameters
        ----------
        theta : `numpy.ndarray`, (N, M)
            Optimizer variables, one row per candidate.

        Returns
        -------
        positions : `numpy.ndarray`, (N, 3)
        """
        theta = np.atleast_2d(theta)
        if self.fixedZ is None:
            return theta[:, :3].copy()
        return np.column_stack([theta[:, :2], np.full(len(theta), self.fixedZ)])

    def taus(self, theta):
        """Extract transmit-time offsets, or `None` if there are none.
        """
        return np.atleast_2d(theta)[:, -1].copy() if self.hasTau else None

    def gradient(self, gradPosition, gradTau=None):
        """Assemble the gradient with respect to the variables.

        Parameters
        ----------
        gradPosition : `numpy.ndarray`, (N, 3)
            Gradient with respect to the World-frame position.
        gradTau : `numpy.ndarray`, (N,), optional
            Gradient with respect to the transmit-time offset.

        Returns
        -------
        gradient : `numpy.ndarray`, (N, M)
        """
        columns = [gradPosition[:, :self.nPosition]]
        if self.hasTau:
            columns.append(gradTau[:, np.newaxis])
        return np.concatenate(columns, axis=1)

    def initialPositions(self, config):
        """Generate the starting positions of the local searches.

        Parameters
        ----------
        config : `SolverConfig`
            The solver settings.

        Returns
        -------
        positions : `numpy.ndarray`, (``config.starts``, ``nPosition``)
            The box corners, then the box center, then seeded uniform draws.
        """
        lower = self.box.minimum.asArray()[:self.nPosition]
        upper = self.box.maximum.asArray()[:self.nPosition]
        fixed = [np.array(corner) for corner in itertools.product(*zip(lower, upper))]
        fixed.append(0.5*(lower + upper))
        nRandom = max(config.starts - len(fixed), 0)
        rng = np.random.default_rng(config.seed)
        random = rng.uniform(lower, upper, size=(nRandom, self.nPosition))
        return np.concatenate([np.array(fixed), random])[:config.starts]

    def initialVariables(self, config, tauGuess=None):
        """Generate the starting variables of the local searches.

        Parameters
        ----------
        config : `SolverConfig`
            The solver settings.
        tauGuess : callable, optional
            A function from an ``(N, 3)`` array of positions to an ``(N,)``
            array of transmit-time offsets. Required if ``hasTau``.

        Returns
        -------
        theta : `numpy.ndarray`, (``config.starts``, M)
        """
        theta = self.initialPositions(config)
        if self.hasTau:
            taus = np.clip(tauGuess(self.positions(theta)), config.tauMin, config.tauMax)
            theta = np.column_stack([theta, taus])
        return theta

    def makeEstimate(self, result, tau=None):
        """Convert the output of `maximize` into an `Estimate`.

        Parameters
        ----------
        result : `lsst.pipe.base.Struct`
            The output of `maximize`.
        tau : `float`, optional
            The transmit-time offset to report if it is not an optimization
            variable (e.g., one profiled out of the objective).
        """
        position = Point3.fromArray(self.positions(result.theta)[0])
        if self.hasTau:
            tau = float(result.theta[-1])
        return Estimate(position=position,
                        tau=tau,
                        logLikelihood=float(result.value),
                        converged=bool(result.converged),
                        iterations=int(result.iterations),
                        startIndex=int(result.startIndex),
                        )


def _projectedGradientNorm(theta, gradient, lower, upper):
    return np.linalg.norm(np.clip(theta + gradient, lower, upper) - theta, axis=-1)


def _isConverged(pgNorm, value, tolerance):
    return pgNorm <= tolerance*np.maximum(1.0, np.abs(value))


def _freeVariables(theta, gradient, lower, upper):
    """Flag the variables not held at a bound by a gradient pointing outward.
    """
    held = ((theta <= lower) & (gradient < 0.0)) | ((theta >= upper) & (gradient > 0.0))
    return ~held


def _hessians(objective, theta):
    """Estimate the Hessian of the objective at each row of ``theta`` by
    central differences of its analytic gradient.

    Parameters
    ----------
    objective : callable
        As for `maximize`.
    theta : `numpy.ndarray`, (N, M)

    Returns
    -------
    hessians : `numpy.ndarray`, (N, M, M)
        Symmetric Hessian estimates.
    """
    n, m = theta.shape
    offsets = _DIFFERENCE_SCALE*np.maximum(1.0, np.abs(theta))
    shifts = np.eye(m)[np.newaxis, :, :]*offsets[:, :, np.newaxis]
    points = np.concatenate([theta[:, np.newaxis, :] + shifts, theta[:, np.newaxis, :] - shifts], axis=1)
    _, gradients = objective(points.reshape(-1, m))
    gradients = gradients.reshape(n, 2, m, m)
    hessians = (gradients[:, 0] - gradients[:, 1])/(2.0*offsets[:, :, np.newaxis])
    return 0.5*(hessians + hessians.transpose(0, 2, 1))


def _newtonDirections(hessians, gradient, free):
    """Compute ascent directions from a regularized Newton model.

    Curvature eigenvalues are replaced by their magnitudes, floored relative
    to the largest, so every direction ascends. Variables that are not free
    do not move.

    Parameters
    ----------
    hessians : `numpy.ndarray`, (N, M, M)
    gradient : `numpy.ndarray`, (N, M)
    free : `numpy.ndarray` [`bool`], (N, M)

    Returns
    -------
    directions : `numpy.ndarray`, (N, M)
    """
    m = gradient.shape[1]
    diagonal = np.arange(m)
    held = ~free
    curvature = np.where(held[:, :, np.newaxis] | held[:, np.newaxis, :], 0.0, -hessians)
    curvature[:, diagonal, diagonal] = np.where(held, 1.0, curvature[:, diagonal, diagonal])
    unusable = ~np.all(np.isfinite(curvature), axis=(1, 2))
    curvature[unusable] = np.eye(m)

    eigenvalues, eigenvectors = np.linalg.eigh(curvature)
    magnitudes = np.abs(eigenvalues)
    floor = _CURVATURE_FLOOR*magnitudes.max(axis=1, keepdims=True) + np.finfo(float).tiny
    magnitudes = np.maximum(magnitudes, floor)

    freeGradient = np.where(free, gradient, 0.0)
    coefficients = np.einsum("njk,nj->nk", eigenvectors, freeGradient)
    directions = np.einsum("nik,nk->ni", eigenvectors, coefficients/magnitudes)
    return np.where(free, directions, 0.0)


def _lineSearch(objective, theta, value, gradient, rows, directions, steps, lower, upper):
    """Backtrack along projected paths until the Armijo condition holds.

    ``theta``, ``value`` and ``gradient`` are updated in place for the rows
    that improve.

    Returns
    -------
    accepted : `numpy.ndarray` [`bool`]
        One flag per entry of ``rows``.
    steps : `numpy.ndarray`
        The accepted step multipliers.
    """
    pending = np.ones(len(rows), dtype=bool)
    steps = np.array(steps, dtype=float)
    for _ in range(_MAX_BACKTRACKS):
        trying = np.flatnonzero(pending)
        if trying.size == 0:
            break
        current = rows[trying]
        candidate = np.clip(theta[current] + steps[trying, np.newaxis]*directions[trying], lower, upper)
        candValue, candGradient = objective(candidate)
        ascent = np.sum(gradient[current]*(candidate - theta[current]), axis=1)
        better = (ascent > 0.0) & np.isfinite(candValue) & (candValue >= value[current] + _ARMIJO*ascent)

        done = current[better]
        theta[done] = candidate[better]
        value[done] = candValue[better]
        gradient[done] = candGradient[better]
        pending[trying[better]] = False
        steps[trying[~better]] *= 0.5
    return ~pending, steps


def maximize(objective, lower, upper, theta0, config, trace=False):
    """Maximize a smooth function over a box from several starting points.

    Parameters
    ----------
    objective : callable
        A function from an ``(N, M)`` array of variables to a tuple of an
        ``(N,)`` array of values and an ``(N, M)`` array of gradients.
    lower, upper : `numpy.ndarray`, (M,)
        The bounds of the variables.
    theta0 : `numpy.ndarray`, (S, M)
        The starting points, one per row.
    config : `SolverConfig`
        The solver settings.
    trace : `bool`, optional
        If set, record the objective value of every search at every
        iteration.

    Returns
    -------
    result : `lsst.pipe.base.Struct`
        Result struct with components:

        ``theta``
            The best variables found (`numpy.ndarray`, (M,)).
        ``value``
            The objective at ``theta`` (`float`).
        ``converged``
            Whether the winning search converged (`bool`).
        ``iterations``
            Iterations of the winning search (`int`).
        ``startIndex``
            Row of ``theta0`` that led to ``theta`` (`int`).
        ``history``
            If ``trace``, an array of shape (iterations + 1, S) of objective
            values; otherwise `None`.

    Notes
    -----
    With ``config.refine`` each iteration tries a projected Newton step
    first and falls back to a projected gradient step; a search has
    converged once its Newton step is shorter than ``config.stepTolerance``,
    or no step can improve the objective and the improvement predicted by
    the Newton model is below its rounding level. Without ``config.refine``
    a search has converged once its projected gradient falls below
    ``config.gradientTolerance``.

    Ties between searches are broken in favor of the lowest start index.
    A search that fails to converge is never an error; the best iterate is
    returned with ``converged=False``.
    """
    log = _LOG.getChild("maximize")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    theta = np.clip(np.array(theta0, dtype=float), lower, upper)
    nStarts = len(theta)
    maxStep = np.linalg.norm(upper - lower)

    value, gradient = objective(theta)
    gradNorm = np.linalg.norm(gradient, axis=1)
    step = config.stepInitial / np.where(gradNorm > 0.0, gradNorm, 1.0)
    iterations = np.zeros(nStarts, dtype=int)
    converged = _isConverged(_projectedGradientNorm(theta, gradient, lower, upper), value,
                             config.gradientTolerance)
    if config.refine:
        converged[:] = False
    active = ~converged
    history = [value.copy()] if trace else None

    for _ in range(config.maxIters):
        if not active.any():
            break
        rows = np.flatnonzero(active)
        pending = np.ones(len(rows), dtype=bool)
        stalledConverged = np.zeros(len(rows), dtype=bool)

        if config.refine:
            free = _freeVariables(theta[rows], gradient[rows], lower, upper)
            directions = _newtonDirections(_hessians(objective, theta[rows]), gradient[rows], free)
            lengths = np.linalg.norm(directions, axis=1)
            short = lengths <= config.stepTolerance
            converged[rows[short]] = True
            active[rows[short]] = False
            pending[short] = False

            gain = 0.5*np.sum(gradient[rows]*directions, axis=1)
            stalledConverged = gain <= _RESOLUTION*np.maximum(1.0, np.abs(value[rows]))
            scale = np.minimum(1.0, maxStep/np.where(lengths > 0.0, lengths, 1.0))
            trying = np.flatnonzero(pending)
            accepted, _ = _lineSearch(objective, theta, value, gradient, rows[trying],
                                      directions[trying], scale[trying], lower, upper)
            pending[trying[accepted]] = False

        # Projected gradient steps, alone or where the Newton step failed
        trying = np.flatnonzero(pending)
        if trying.size > 0:
            current = rows[trying]
            accepted, steps = _lineSearch(objective, theta, value, gradient, current,
                                          gradient[current], step[current], lower, upper)
            step[current[accepted]] = 2.0*steps[accepted]
            pending[trying[accepted]] = False

        moved = rows[~pending & active[rows]]
        iterations[moved] += 1
        # Searches that cannot improve by any step are stationary to machine precision
        stalled = np.flatnonzero(pending)
        active[rows[stalled]] = False
        if config.refine:
            converged[rows[stalled]] = stalledConverged[stalled]
        else:
            converged = _isConverged(_projectedGradientNorm(theta, gradient, lower, upper), value,
                                     config.gradientTolerance)
            active &= ~converged
        if trace:
            history.append(value.copy())

    best = int(np.argmax(value))
    bestValue = float(value[best])
    bestConverged = bool(converged[best])
    if not bestConverged:
        log.debug("Best of %d searches did not converge (start %d, objective %g).",
                  nStarts, best, bestValue)
    return pipeBase.Struct(theta=theta[best].copy(),
                           value=bestValue,
                           converged=bestConverged,
                           iterations=int(iterations[best]),
                           startIndex=best,
                           history=np.array(history) if trace else None,
                           )
