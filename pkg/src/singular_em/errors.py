"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes, so raising the right class
matters more than the message text.
"""


class ArgumentError(ValueError):
    """Invalid argument or malformed input (CLI exit code 2)."""


class DomainError(ValueError):
    """An iterate or evaluation point left the operator's domain."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or stabilize (exit code 3)."""


class ComponentCollapseError(NumericalError):
    """A mixture component lost all responsibility mass during an M-step."""


class EmIterationError(RuntimeError):
    """Wraps a step failure with the iteration index at which it occurred."""

    def __init__(self, iteration: int, cause: Exception):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"EM step failed at iteration {iteration}: {cause}")
