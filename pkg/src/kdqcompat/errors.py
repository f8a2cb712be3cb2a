"""Exception hierarchy shared by all modules."""


class KDQError(Exception):
    """Base class for library errors."""


class ShapeError(KDQError, ValueError):
    pass


class DomainError(KDQError, ValueError):
    pass


class CapacityError(KDQError):
    pass


class ValidationError(KDQError, ValueError):
    """Input failed one or more validity checks.

    ``failures`` lists every check that failed, not just the first.
    """

    def __init__(self, failures):
        if isinstance(failures, str):
            failures = [failures]
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class ParseError(KDQError, ValueError):
    """Syntax error in Hamiltonian text, with a 1-based line/column."""

    def __init__(self, message, line, column, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"line {line}, column {column}: {message}")

    def pointer(self):
        """Return the offending source line with a caret under the column."""
        if self.source is None:
            return str(self)
        lines = self.source.splitlines() or [""]
        text = lines[self.line - 1] if self.line <= len(lines) else ""
        return f"{self}\n  {text}\n  {' ' * (self.column - 1)}^"


class PreconditionError(KDQError):
    pass


class ResourceError(KDQError):
    """Budget exceeded. ``partial`` carries whatever was computed so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
