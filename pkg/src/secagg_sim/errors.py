"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class for all simulator errors."""


# finite field
class InversionOfZero(SimError, ZeroDivisionError):
    pass


class LengthMismatch(SimError, ValueError):
    pass


class DimensionMismatch(SimError, ValueError):
    pass


# secret sharing
class InvalidParams(SimError, ValueError):
    pass


class EmptySecret(SimError, ValueError):
    pass


class ThresholdNotMet(SimError):
    pass


class InconsistentParams(SimError, ValueError):
    pass


class DuplicatePoints(SimError, ValueError):
    pass


class MixedOwnerPoints(SimError, ValueError):
    pass


# crypto
class InvalidPublicKey(SimError, ValueError):
    pass


class AuthFailure(SimError):
    pass


# kernel / protocol api
class UnknownDestination(SimError, KeyError):
    pass


class DoubleTermination(SimError, RuntimeError):
    pass


# network
class EmptyDataset(SimError, ValueError):
    pass


# protocols
class InvalidDegree(SimError, ValueError):
    pass


# harness
class ConfigError(SimError, ValueError):
    pass
