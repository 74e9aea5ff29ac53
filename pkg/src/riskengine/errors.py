"""Exceptions raised by the risk engine."""


class RiskEngineError(Exception):
    """Base class for all engine errors."""


class MalformedRow(RiskEngineError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail


class NonPositivePrice(MalformedRow):
    pass


class DuplicateDate(MalformedRow):
    pass


class SeriesTooShort(RiskEngineError):
    pass


class NoCommonDates(RiskEngineError):
    pass


class MixedKinds(RiskEngineError):
    pass


class EmptySample(RiskEngineError):
    pass


class InsufficientData(RiskEngineError):
    pass


class NotPositiveSemidefinite(RiskEngineError):
    pass


class DimensionMismatch(RiskEngineError):
    pass


class ExpiredWithinHorizon(RiskEngineError):
    pass


class NoRoot(RiskEngineError):
    pass


class UnknownAsset(RiskEngineError):
    pass


class ScenarioUnavailable(RiskEngineError):
    pass


class UnsupportedMethod(RiskEngineError):
    pass
