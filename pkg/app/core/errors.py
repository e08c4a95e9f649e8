"""
Lab Exceptions
Error types raised when an operation's preconditions do not hold
"""

from typing import List, Optional


class LabError(ValueError):
    """Base class for all precondition failures in the lab"""


class CapExceeded(LabError):
    """The configuration space (or tree enumeration) exceeds the configured cap"""


class ZeroMass(LabError):
    """A conditioning event has zero mass"""


class NotErgodic(LabError):
    """The generator has more than one invariant measure"""


class SiteClash(LabError):
    """Two models share a site identifier"""


class UnknownSite(LabError):
    """A site identifier is not part of the model"""


class SpectrumFailure(LabError):
    """The symmetrized generator could not be diagonalized"""


class NegativeTime(LabError):
    """A semigroup time is negative"""


class BadExponent(LabError):
    """An L^p exponent is below 1"""


class NegativeInput(LabError):
    """A function that must be nonnegative has a negative entry"""


class BadArgs(LabError):
    """Scalar arguments outside their admissible range"""


class OrderViolated(LabError):
    """Two point sets are not time-separated"""


class NotALeaf(LabError):
    """A tree vertex expected to be a leaf is interior (or absent)"""


class BadAlphabet(LabError):
    """The operation needs the binary alphabet {0, 1}"""


class NotIncreasing(LabError):
    """An event is not an up-set"""


class NotHeatBath(LabError):
    """The kernels are not heat-bath kernels of the model's measure"""


class ThresholdHypothesisFailed(LabError):
    """The influence bound δ < e²α² fails somewhere on the parameter grid"""


class DegenerateEvent(LabError):
    """An event has probability 0 or 1"""


class ConfigError(LabError):
    """
    A configuration file failed validation.

    Args:
        errors: One message per offending item
        path: Optional path of the offending file
    """

    def __init__(self, errors: List[str], path: Optional[str] = None):
        self.errors = list(errors)
        self.path = path
        header = f"Invalid config {path}" if path else "Invalid config"
        lines = "\n".join(f"  - {message}" for message in self.errors)
        super().__init__(f"{header}:\n{lines}")
