"""Exception hierarchy shared across the engine."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class SortError(EngineError):
    """A term, formula or table is not well-sorted against the signature."""


class ContextMismatch(EngineError):
    """Two morphisms or formulas were combined over incompatible contexts."""


class FragmentError(EngineError):
    """An operation was applied outside its logical fragment (Horn/coherent/classical)."""


class TheoryError(EngineError):
    """A theory or goal violates the shape this engine accepts."""


class EnumerationLimitError(EngineError):
    """Model enumeration would exceed the configured table-size cap."""


class ParseError(EngineError):
    """Lexical, syntactic or elaboration error in a theory file, with a span."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        where = f"{line}:{column}"
        if token:
            where += f" at {token!r}"
        super().__init__(f"{where}: {message}")
