"""Exception hierarchy shared by all choqlab modules."""


class ChoqlabError(Exception):
    """Base class for all package-specific errors."""


class RegimeViolation(ChoqlabError):
    """A parameter-regime inequality failed; names the first violated one."""

    def __init__(self, name, detail):
        self.name = name
        super().__init__(f"{name}: {detail}")


class OutOfRange(ChoqlabError):
    """Scalar argument outside its admissible interval."""


class NonPositiveConstant(ChoqlabError):
    """A derived constant that must be positive came out <= 0."""


class GridMismatch(ChoqlabError):
    """Two fields (or a field and a sampled potential) live on different grids."""


class NonFinite(ChoqlabError):
    """Field values contain NaN or Inf."""


class AliasRisk(ChoqlabError):
    """Requested dilation pushes significant spectral content past Nyquist."""

    def __init__(self, t, energy_fraction):
        self.t = t
        self.energy_fraction = energy_fraction
        super().__init__(
            f"dilation t={t:g} would alias {energy_fraction:.3e} of spectral energy"
        )


class ZeroField(ChoqlabError):
    """Operation undefined on the identically-zero field."""


class StepUnderflow(ChoqlabError):
    """Backtracking line search shrank the step below 1e-14."""


class NoConvergence(ChoqlabError):
    """Iteration budget exhausted before tolerances were met."""

    def __init__(self, message, trace=None):
        self.trace = trace if trace is not None else []
        super().__init__(message)


class TruncationActive(ChoqlabError):
    """Converged iterate has H^s norm >= R0: truncation radii are misconfigured."""


class EmptyM(ChoqlabError):
    """No grid point qualifies as a zero of the potential."""


class OutOfBox(ChoqlabError):
    """Translated profile support exits the torus nontrivially."""


class FormatError(ChoqlabError):
    """Snapshot file malformed; reports the byte offset of the defect."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class Indistinct(ChoqlabError):
    """Two multiplicity runs collapsed to the same solution."""


class ConfigError(ChoqlabError):
    """Experiment configuration is invalid."""
