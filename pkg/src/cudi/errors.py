"""Exception types shared across the package."""


class InvalidConfigError(ValueError):
    """A structural precondition on shapes, sizes, or settings is violated."""


class ShapeMismatchError(ValueError):
    """Operands that must agree in shape do not."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value where finiteness is required."""


class IngestionError(RuntimeError):
    """Training corpus is missing, empty, or contains unusable images."""


class CheckpointError(RuntimeError):
    """Checkpoint file is malformed, truncated, or inconsistent."""


class RoleMismatchError(CheckpointError):
    """Checkpoint belongs to the other network (teacher vs student)."""
