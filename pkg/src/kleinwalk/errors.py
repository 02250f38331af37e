"""Exception types shared across the toolkit."""


class KleinwalkError(Exception):
    """Base class for all toolkit errors."""


class DomainError(KleinwalkError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeError(KleinwalkError, ValueError):
    """A request exceeds the reliable or enumerable range; the message names the safe bound."""


class ConfigError(KleinwalkError, ValueError):
    """A preset name, config file, or group file is malformed."""


class UnsupportedGroupError(KleinwalkError, ValueError):
    """The operation requires a free ping-pong preset and the group is not one."""
