"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


# --- channel / scene ---

class AliasError(ToolkitError):
    """A Doppler shift exceeds the representable (unaliased) range."""


class DelayError(ToolkitError):
    """A delay falls outside the configured unambiguous delay window."""


# --- waveforms ---

class LengthError(ToolkitError):
    """Bit vector length incompatible with the requested mapping."""


class LayoutError(ToolkitError):
    """Inconsistent modulation layout (pilot mask, active set, bit count)."""


class ZeroSignalError(ToolkitError):
    """Metric requested on an all-zero signal."""


# --- estimators ---

class GridError(ToolkitError):
    """Search grid extends beyond the representable window."""


class RankError(ToolkitError):
    """Selected atoms are numerically dependent."""


class OrderError(ToolkitError):
    """Model order too large for the available covariance dimension."""


class WeightError(ToolkitError):
    """Cost weights do not sum to one."""


class SaturationError(ToolkitError):
    """Weighted cost reaches or exceeds the saturation bound."""


# --- metrics ---

class LayoutMismatch(ToolkitError):
    """Parameter vectors with incompatible layouts."""


class SingularFisher(ToolkitError):
    """Fisher information estimate numerically singular."""


class NonStochasticChannel(ToolkitError):
    """Conditional PMF rows do not form probability distributions."""


class ZeroNoiseDensityError(ToolkitError):
    """Noise spectral density vanishes where signal energy is present."""


class DegenerateData(ToolkitError):
    """Constant data where variance is required."""


class DimensionError(ToolkitError):
    """Model dimension incompatible with the number of data points."""


class NormalizationError(ToolkitError):
    """A normalization reference constant is zero."""


# --- syncnet ---

class TopologyError(ToolkitError):
    """Missing priors or dangling measurements in the network."""


class DegeneracyError(ToolkitError):
    """All particle weights underflowed (inconsistent measurements/priors)."""


class EmptyBelief(ToolkitError):
    """Estimate requested from an empty belief."""


class IdMismatch(ToolkitError):
    """Estimate and truth id sets differ."""


# --- harness ---

class ParseError(ToolkitError):
    """Malformed config or scenario file; carries line/field context."""


class ValidationError(ToolkitError):
    """One or more config constraints violated; aggregates all of them."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
