"""Exception types raised across ifpbench."""


class IfpBenchError(Exception):
    pass


class SchedulingInPast(IfpBenchError):
    pass


class UnknownChain(IfpBenchError):
    pass


class MalformedTx(IfpBenchError):
    pass


class HeightOutOfRange(IfpBenchError):
    pass


class DuplicateBridge(IfpBenchError):
    pass


class MalformedRequest(IfpBenchError):
    pass


class UnknownTransfer(IfpBenchError):
    pass


class InvalidHeader(IfpBenchError):
    pass


class EmptyTopology(IfpBenchError):
    pass


class InvalidSpec(IfpBenchError):
    pass


class ConfigMismatch(IfpBenchError):
    pass


class UnknownTarget(IfpBenchError):
    pass


class KindMismatch(IfpBenchError):
    pass


class TruncatedLog(IfpBenchError):
    pass


class EmptySeries(IfpBenchError):
    pass


class RunIdMismatch(IfpBenchError):
    pass


class ConfigInvalid(IfpBenchError):
    """Config failed validation; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class UnknownParameter(IfpBenchError):
    pass


class EmptyValueList(IfpBenchError):
    pass


class IoError(IfpBenchError, OSError):
    pass
