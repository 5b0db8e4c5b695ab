from typing import Optional


class OdeIdentError(RuntimeError):
    kind = 'error'
    exit_code = 1

    def __init__(self, message: str, *, stage: Optional[str] = None):
        super(OdeIdentError, self).__init__(message)
        self.stage = stage

    def __str__(self):
        return f'{self.kind}: {super(OdeIdentError, self).__str__()}'


class ConfigurationError(OdeIdentError):
    kind = 'configuration-error'
    exit_code = 2


class InvalidInputError(ConfigurationError):
    kind = 'invalid-input'


class ExpressionSyntaxError(ConfigurationError):
    kind = 'syntax-error'

    def __init__(self, message: str, line: int, column: int, **kwargs):
        super(ExpressionSyntaxError, self).__init__(f'{message} at line {line}, column {column}', **kwargs)
        self.line = line
        self.column = column


class UnknownIdentifierError(ExpressionSyntaxError):
    kind = 'unknown-identifier'


class AnalysisFailure(OdeIdentError):
    kind = 'analysis-failure'
    exit_code = 1


class ClassMembershipError(AnalysisFailure):
    kind = 'class-membership-failure'


class OrderIndeterminateError(ClassMembershipError):
    kind = 'order-indeterminate'


class NotInClassHError(ClassMembershipError):
    kind = 'not-in-class-H'


class DegeneratePerturbationError(AnalysisFailure):
    kind = 'degenerate-perturbation'


class DegenerateDirectionError(AnalysisFailure):
    kind = 'degenerate-direction'


class InadmissibleDirectionError(AnalysisFailure):
    kind = 'inadmissible-direction'


class PartitionInconsistencyError(AnalysisFailure):
    kind = 'partition-inconsistency'


class InvalidRebaseError(AnalysisFailure):
    kind = 'invalid-rebase'


class NumericalFailure(OdeIdentError):
    kind = 'numerical-failure'
    exit_code = 3


class IntegrationFailure(NumericalFailure):
    kind = 'integration-failure'


class DomainViolationError(IntegrationFailure):
    kind = 'domain-violation'


class NumericalDegeneracyError(NumericalFailure):
    kind = 'numerical-degeneracy'


class NotPSDError(NumericalFailure):
    kind = 'not-psd'


class WindowTooSmallError(NumericalFailure):
    kind = 'window-too-small'
