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

__all__ = ["Workspace"]

import os
import pathlib
import stat


class Workspace:
    """A directory used by ``locate`` to hold the outputs of an evaluation.

    Any object of this class represents an output directory containing
    (possibly not yet written) report files, and a subdirectory recording
    the configuration that produced them. A synchronization-error sweep
    nests one workspace per error level.

    Parameters
    ----------
    location : `str`
       The location on disk where the workspace will be set up. Will be
       created if it does not already exist.

    Raises
    ------
    EnvironmentError
        Raised if ``location`` is not readable or not writeable
    """
    def __init__(self, location):
        # Properties must be `str` for consistency with configs
        self._location = str(pathlib.Path(location).resolve())

        self.mkdir(self._location)
        self.mkdir(self.configDir)

    @staticmethod
    def mkdir(directory):
        """Create a directory for the workspace.

        Parameters
        ----------
        directory : `str`
            The directory to create.
        """
        mode = stat.S_IRWXU | stat.S_IRGRP | stat.S_IXGRP | stat.S_IROTH | stat.S_IXOTH  # a+rx, u+rwx
        pathlib.Path(directory).mkdir(parents=True, exist_ok=True, mode=mode)

    def __eq__(self, other):
        """Test whether two workspaces are of the same type and have the
        same location.
        """
        return type(self) is type(other) and self.workDir == other.workDir

    def __repr__(self):
        """A string representation that can be used to reconstruct the Workspace.
        """
        return f"{type(self).__name__}({self.workDir!r})"

    @property
    def workDir(self):
        """The absolute location of the workspace as a whole
        (`str`, read-only).
        """
        return self._location

    @property
    def configDir(self):
        """The absolute location of a directory containing the Task config
        files used to produce the outputs (`str`, read-only).
        """
        return os.path.join(self._location, 'config')

    def configLocation(self, taskName):
        """The absolute location of the config file of a task (`str`).

        Parameters
        ----------
        taskName : `str`
            The ``_DefaultName`` of the task.
        """
        return os.path.join(self.configDir, f"{taskName}.py")

    @property
    def recordsLocation(self):
        """The absolute location of the per-trial records table
        (`str`, read-only).
        """
        return os.path.join(self._location, 'records.csv')

    @property
    def summaryLocation(self):
        """The absolute location of the summary statistics file
        (`str`, read-only).
        """
        return os.path.join(self._location, 'summary.json')

    @property
    def cdfLocation(self):
        """The absolute location of the error distribution file
        (`str`, read-only).
        """
        return os.path.join(self._location, 'cdf.json')

    @property
    def perTpLocation(self):
        """The absolute location of the per-test-point statistics table
        (`str`, read-only).
        """
        return os.path.join(self._location, 'per_tp.csv')

    @property
    def sweepLocation(self):
        """The absolute location of the aggregate results of a sweep
        (`str`, read-only).
        """
        return os.path.join(self._location, 'sweep.json')

    def levelWorkspace(self, eta):
        """Return the nested workspace of one synchronization error level.

        Parameters
        ----------
        eta : `float`
            The synchronization error level (m).

        Returns
        -------
        workspace : `Workspace`
            A workspace in the ``eta_<eta>`` subdirectory, created if needed.
        """
        return Workspace(os.path.join(self._location, f"eta_{eta:g}"))
