"""Exception hierarchy shared by every cupcf module."""


class CupcfError(Exception):
    """Base class for all errors raised by cupcf."""


class ParseError(CupcfError, ValueError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class RatingRangeError(ParseError):
    pass


class DuplicateRatingError(ParseError):
    pass


class NoDataError(CupcfError, LookupError):
    """A statistic was requested for a user or item with no ratings."""


class ConfigError(CupcfError, ValueError):
    pass


class ColdUserError(NoDataError):
    """The active user has no ratings in the training matrix."""


class ContractError(CupcfError, ValueError):
    """Arguments violate a documented pairing contract (e.g. lists for different users)."""
