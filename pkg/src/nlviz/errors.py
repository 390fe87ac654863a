"""Exception hierarchy shared across the package."""

from __future__ import annotations


class NlvizError(Exception):
    """Base class for all package errors."""


# -- tabular loading ---------------------------------------------------------

class MissingDatabase(NlvizError):
    pass


class MissingTable(NlvizError):
    pass


class UnreadableFile(NlvizError):
    pass


class ParseFailure(NlvizError):
    pass


# -- prompt engineering ------------------------------------------------------

class EmptyRefinement(NlvizError):
    pass


class TemplateError(NlvizError):
    """Raised at startup when a template carries unknown placeholders."""


# -- provider gateway --------------------------------------------------------

class GatewayError(NlvizError):
    """Base for provider-side failures; harness maps these to provider-failure."""


class AuthError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class ProviderTimeout(GatewayError):
    pass


class ProviderError(GatewayError):
    pass


class CassetteMiss(GatewayError):
    """Strict replay found no record for the request hash."""


# -- sandbox / pipeline ------------------------------------------------------

class SandboxUnavailable(NlvizError):
    """Infrastructure failure, distinct from a per-case execution error."""


# -- benchmark harness -------------------------------------------------------

class SpecParseError(NlvizError):
    pass


class MalformedSpec(NlvizError):
    """Reference vectors missing or of unequal length; benchmark damage."""


class NoFromClause(NlvizError):
    pass


# -- session service ---------------------------------------------------------

class BadDataset(NlvizError):
    pass


class TooManyModels(NlvizError):
    pass


class NoBaseQuery(NlvizError):
    pass
