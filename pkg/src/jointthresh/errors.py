"""Exception hierarchy shared by every module of the package."""


class JointThreshError(Exception):
    """Base class for all package errors."""


# data ingestion / preprocessing
class MissingFile(JointThreshError, FileNotFoundError):
    pass


class NonNumericCell(JointThreshError, ValueError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell {value!r} at row {row}, column {column!r}")


class ConstantColumn(JointThreshError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"feature column {column!r} has a single unique value")


class LabelNotBinary(JointThreshError, ValueError):
    pass


class ZeroVariance(JointThreshError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"continuous column {column!r} has zero variance")


class TooManyFolds(JointThreshError, ValueError):
    pass


# loss
class LengthMismatch(JointThreshError, ValueError):
    pass


class EmptyInput(JointThreshError, ValueError):
    pass


class ZeroReference(JointThreshError, ZeroDivisionError):
    pass


# learners / stacking
class SingleClass(JointThreshError, ValueError):
    pass


class ShapeMismatch(JointThreshError, ValueError):
    pass


class LearnerError(JointThreshError):
    """A base learner failed; ``index`` is its position in the library."""

    def __init__(self, index, learner_id, cause):
        self.index = index
        self.learner_id = learner_id
        self.cause = cause
        super().__init__(f"learner {index} ({learner_id}) failed: {cause}")


class FoldMissingClass(JointThreshError, ValueError):
    def __init__(self, fold):
        self.fold = fold
        super().__init__(f"training split of fold {fold} lacks one of the two classes")


# combiner / optimizer
class NumericalFailure(JointThreshError, ArithmeticError):
    pass


class AllZeroAlpha(JointThreshError, ArithmeticError):
    pass


class LibraryMismatch(JointThreshError, ValueError):
    pass


class BadBounds(JointThreshError, ValueError):
    pass


class BudgetTooSmall(JointThreshError, ValueError):
    pass


class GridTooLarge(JointThreshError, ValueError):
    pass


# cli
class ConfigParse(JointThreshError, ValueError):
    pass
