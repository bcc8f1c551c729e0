"""Exception types raised across the package."""


class PulsecutError(Exception):
    """Base class for all pulsecut errors."""


class IoError(PulsecutError, OSError):
    """A file is missing or unreadable."""


class FormatError(PulsecutError, ValueError):
    """A file is readable but its content is malformed."""


class OrderError(FormatError):
    """Annotation positions are not strictly increasing."""


class ParamError(PulsecutError, ValueError):
    """An argument is outside its valid domain."""


class DegenerateError(PulsecutError, ValueError):
    """The input carries no usable information (all zeros, too short, ...)."""


class EmptyResult(PulsecutError):
    """Peak picking found no candidate beat frames."""


class NoAnchorError(PulsecutError):
    """No pair of consecutive systoles could anchor the sliding window."""


class InternalError(PulsecutError, RuntimeError):
    """An invariant that should hold by construction was violated."""


class PairingError(PulsecutError):
    """Detected and ground-truth files do not pair up by stem."""


class EmptyCorpus(PulsecutError, ValueError):
    """Aggregation was requested over zero reports."""
