"""Exception taxonomy shared across the library."""


class NcgoptError(Exception):
    """Base class for all library errors."""


class ConfigError(NcgoptError):
    """Invalid configuration value (tolerances, sizes, problem parameters)."""


class InputError(NcgoptError):
    """Malformed numerical input (e.g. asymmetric matrix where symmetry is required)."""


class OracleError(NcgoptError):
    """A problem oracle returned a non-finite or malformed value."""


class DivergenceError(NcgoptError):
    """An iterate left the representable domain (NaN/Inf coordinates)."""


class BoundExceededError(NcgoptError):
    """An iteration safety cap was exceeded; usually means misdeclared constants."""


class ConstantsError(NcgoptError):
    """A step increased the objective beyond tolerance, which is impossible
    under correctly declared Lipschitz constants."""


class AssumptionViolation(NcgoptError):
    """A surrogate or sub-sample violated its declared accuracy bound.

    Recorded in run flags rather than raised by the solvers; raised only by
    strict checking helpers.
    """


class CertificationUnavailable(NcgoptError):
    """Dense certification was requested above the dense dimension cap."""
