"""Exception types shared across the package."""


class DomainError(ValueError):
    """A physical parameter is outside its valid domain (e.g. non-positive mass)."""


class DegenerateGeometryError(DomainError):
    """Contact geometry makes the curvature bounds undefined (zero denominator
    or a cone that wraps past vertical, where the linear bound form breaks down)."""


class InfeasibleConeError(DomainError):
    """The twist cone does not intersect the sticking plane with forward motion."""


class ScenarioError(ValueError):
    """A scenario file failed validation.

    ``keypath`` names the offending key (dotted path), ``line`` its 1-based
    line in the source file when known.
    """

    def __init__(self, keypath: str, message: str, line: int | None = None):
        self.keypath = keypath
        self.line = line
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{keypath}: {message}{loc}")
