"""Exception types shared across the package."""


class CatalogError(ValueError):
    """Invalid level or line data."""


class CatalogParseError(CatalogError):
    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class MergeAmbiguityError(CatalogError):
    """A calculated line has more than one experimental candidate (or vice versa)."""

    def __init__(self, message, candidates=()):
        self.candidates = tuple(candidates)
        super().__init__(message)


class ResonanceError(ValueError):
    """Requested frequency lies inside the exclusion width of a pole."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message)


class NoSignChangeError(ValueError):
    pass


class FitError(RuntimeError):
    pass


class NoCrossingError(ValueError):
    """A population trace never reaches the requested threshold."""
