"""Exception types raised across the toolkit."""


class LieintError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFamily(LieintError, ValueError):
    pass


class DimensionMismatch(LieintError, ValueError):
    pass


class NotUnitary(LieintError, ValueError):
    pass


class NotSubalgebra(LieintError, ValueError):
    pass


class DegenerateForm(LieintError, ValueError):
    pass


class RankIdentityError(LieintError, ArithmeticError):
    """Sum/intersection dimensions disagree at the chosen tolerance."""


class InconclusiveSampling(LieintError, RuntimeError):
    """Sampled ranks disagree too often to name a generic value."""


class SamplingFailure(LieintError, RuntimeError):
    """Rejection sampler exhausted its retry budget."""


class NonFiniteState(LieintError, FloatingPointError):
    pass


class ConfigError(LieintError, ValueError):
    pass
