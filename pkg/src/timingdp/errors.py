"""Exception hierarchy shared by the VM, the program builders and the checkers."""


class TimingDPError(Exception):
    """Base class for every error raised by this package."""


# --- machine ---------------------------------------------------------------

class VMError(TimingDPError):
    pass


class InvalidProgram(VMError):
    pass


class AssemblyError(InvalidProgram):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IncompatibleEnvironment(VMError):
    """The declared input is not what the environment holds at input_ptr."""


class UninitializedRead(VMError):
    pass


class WordOverflow(VMError):
    pass


class AddressOutOfRange(VMError):
    pass


class StepLimitExceeded(VMError):
    pass


# --- programs --------------------------------------------------------------

class InvalidParameters(TimingDPError):
    pass


class ModelMismatch(TimingDPError):
    pass


class CompositionConventionViolated(TimingDPError):
    pass


# --- metrics / checkers ----------------------------------------------------

class ShapeMismatch(TimingDPError):
    pass


class ResidualMassPresent(TimingDPError):
    """An exact decision was requested on a distribution with pruned mass."""


class BoundMismatch(TimingDPError):
    pass


class PreconditionViolated(TimingDPError):
    pass


class DeltaOverflow(TimingDPError):
    pass


class UnsupportedTail(TimingDPError):
    """Infinite-support arithmetic that has no exact closed form here."""


class ConfigError(TimingDPError):
    pass
