"""Exception types raised by the simulation and estimation layers."""


class StochSlamError(Exception):
    """Base class for all package errors."""


class ConfigError(StochSlamError, ValueError):
    """An experiment configuration violates a constraint.

    ``constraint`` names the violated rule so callers can report it
    without parsing the message.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class NotSkewSymmetricError(StochSlamError, ValueError):
    """A matrix passed to ``vex`` is not skew-symmetric."""


class NumericalError(StochSlamError, FloatingPointError):
    """A non-finite value appeared while evaluating a named update."""

    def __init__(self, equation: str, message: str = "non-finite value"):
        super().__init__(f"{equation}: {message}")
        self.equation = equation


class DivergenceError(StochSlamError, FloatingPointError):
    """A simulated quantity left the admissible range during a run."""

    def __init__(self, step: int, quantity: str, value: float, run_index: int | None = None):
        where = f"step {step}" if run_index is None else f"run {run_index}, step {step}"
        super().__init__(f"{where}: {quantity} = {value!r}")
        self.step = step
        self.quantity = quantity
        self.value = value
        self.run_index = run_index
