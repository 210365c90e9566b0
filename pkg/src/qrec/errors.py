"""Exceptions shared across the package."""


class BranchStraddle(ValueError):
    """An enclosure meets more than one branch domain, or a partition endpoint."""


class OutsideSupport(BranchStraddle):
    """An enclosure lies entirely outside the support of the system."""


class PrecisionExhausted(RuntimeError):
    """Digits could not be certified before the precision cap was reached."""


class InsufficientDigits(ValueError):
    """A shift was requested too close to the end of a digit sequence."""


class SamplerStall(RuntimeError):
    """A rejection sampler hit its hard iteration cap."""
