"""Exception types shared across the package."""


class SrtError(Exception):
    """Base class for all errors raised by srtplan."""


class InvalidWorld(SrtError, ValueError):
    pass


class InvalidStart(SrtError, ValueError):
    pass


class InvalidGoal(SrtError, ValueError):
    pass


class NotFound(SrtError, KeyError):
    pass


class NotDestroyable(SrtError, ValueError):
    pass


class NoClosedSet(SrtError, ValueError):
    pass


class NotASeed(SrtError, ValueError):
    pass


class GeometryError(SrtError, ValueError):
    pass


class RenderError(SrtError, ValueError):
    pass


class EmptyRegion(SrtError, ValueError):
    pass


class AgentInsideRegion(SrtError, ValueError):
    pass


class ResourceExhausted(SrtError, RuntimeError):
    pass


class Unsolvable(SrtError):
    pass


class Inapplicable(SrtError, ValueError):
    pass


class ParseError(SrtError, ValueError):
    """Syntax or lexical error in a PDDL text, with a 1-based position."""

    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        msg = f"line {line}, column {column}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class UnsupportedFeature(SrtError, ValueError):
    def __init__(self, name: str, line: int = 0, column: int = 0):
        self.name = name
        self.line = line
        self.column = column
        super().__init__(f"unsupported PDDL feature {name!r} at line {line}, column {column}")
