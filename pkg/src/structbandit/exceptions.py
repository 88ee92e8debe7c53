"""Exception hierarchy shared by all modules."""


class StructBanditError(Exception):
    """Base class for errors raised by this package."""


class InputError(StructBanditError, ValueError):
    """Malformed numerical input (shape mismatch, NaN, out-of-range value)."""


class ConfigurationError(StructBanditError, ValueError):
    """A model, schedule or config file violates its invariants."""


class DegenerateConeError(StructBanditError, RuntimeError):
    """Rejection sampling of cap directions accepts (almost) nothing."""


class DegenerateArmError(StructBanditError, RuntimeError):
    """An optimistic arm is the origin, so the perturbation ball is empty."""


class HorizonTooShortError(StructBanditError, RuntimeError):
    """The burn-in length is not smaller than the horizon.

    Attributes
    ----------
    n : int
        Burn-in length implied by the schedule.
    T : int
        Requested horizon.
    min_T : int
        Smallest horizon for which the schedule becomes feasible.
    """

    def __init__(self, n, T, min_T):
        self.n = n
        self.T = T
        self.min_T = min_T
        super().__init__(
            f"burn-in n={n} is not below horizon T={T}; "
            f"minimal feasible horizon is T={min_T}"
        )
