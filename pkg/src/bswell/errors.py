"""Exception types shared across the package."""


class BswellError(Exception):
    """Base class for all library errors."""


class ParseError(BswellError):
    """Syntax error in a potential expression.

    Carries the byte offset into the source text and the set of token
    kinds that would have been accepted at that position.
    """

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        detail = f"{message} at offset {position}"
        if expected:
            detail += f" (expected {', '.join(expected)})"
        super().__init__(detail)


class EvalDomainError(BswellError):
    """Evaluation outside the natural domain of a sub-expression."""


class GeometryError(BswellError):
    """No valid single well / turning-point structure at the requested energy."""


class QuadratureError(BswellError):
    """Integrand failure or refinement limit reached."""


class SolverError(BswellError):
    """Root bracketing or iteration failure in an implicit solve."""
