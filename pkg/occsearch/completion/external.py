"""
Completion by an out of process model

The exchange directory receives partial.vxg and free.vxg (and viewpoint.txt
when the camera position is known); the model writes completed.vxg back.
"""
import logging
import os
import subprocess

import numpy as np

from . import Completer
from ..exceptions import CompletionError
from ..gridfile import dump_grid, load_grid

logger = logging.getLogger(__name__)

PARTIAL_FILE = "partial.vxg"
FREE_FILE = "free.vxg"
VIEWPOINT_FILE = "viewpoint.txt"
COMPLETED_FILE = "completed.vxg"


class ExternalCompleter(Completer):
    """
    directory: exchange directory
    command: argument list run after the inputs are written, the exchange
        directory is appended as last argument; None to expect another
        process to have answered already
    """

    name = "external"

    def __init__(self, directory="completion_exchange", command=None, timeout=300):
        self.directory = directory
        self.command = list(command) if command else None
        self.timeout = timeout

    def predict(self, completion_input):
        os.makedirs(self.directory, exist_ok=True)
        dump_grid(completion_input.partial, os.path.join(self.directory, PARTIAL_FILE))
        dump_grid(completion_input.free, os.path.join(self.directory, FREE_FILE))
        if completion_input.viewpoint is not None:
            np.savetxt(os.path.join(self.directory, VIEWPOINT_FILE),
                       completion_input.viewpoint[None, :])
        output = os.path.join(self.directory, COMPLETED_FILE)
        if self.command:
            if os.path.exists(output):
                os.remove(output)
            logger.debug("running %s", self.command)
            try:
                subprocess.run(self.command + [self.directory], check=True,
                               timeout=self.timeout)
            except (OSError, subprocess.SubprocessError) as e:
                raise CompletionError("external completer failed: {}".format(e))
        if not os.path.exists(output):
            raise CompletionError("no {} in {}".format(COMPLETED_FILE, self.directory))
        completed = load_grid(output)
        if not completed.same_as(completion_input.partial):
            raise CompletionError("external completer answered in another geometry")
        return completed
