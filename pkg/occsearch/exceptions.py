"""
Errors raised by occsearch
"""


class EmptyInputError(ValueError):
    """A point set or voxel grid that must hold something is empty"""

    def __init__(self, name):
        self.name = name
        super().__init__("{} is empty".format(name))


class GeometryMismatchError(ValueError):
    """Two grids do not share dims, resolution and origin"""


class NoSelectableObjectError(RuntimeError):
    """Every sampled shadow voxel was cast by the table or by nothing known"""


class NoFeasibleActionError(RuntimeError):
    """Every sampled action candidate failed the feasibility check"""


class InfeasibleActionError(ValueError):
    """An action was handed to the simulator that it cannot execute"""


class CompletionError(RuntimeError):
    """A completer could not produce a result"""


class SceneFileError(ValueError):
    """A scene, experiment or trace file could not be read"""

    def __init__(self, message, filename=None, line=None):
        self.message = message
        self.filename = filename
        self.line = line
        location = ""
        if filename is not None:
            location = "{}:{}: ".format(filename, line if line else "?")
        super().__init__("{}{}".format(location, message))
