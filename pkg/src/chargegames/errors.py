"""Exception types shared across the package."""


class ChargeGamesError(Exception):
    """Base class for all library errors."""


class DimensionError(ChargeGamesError):
    """Array sizes do not match the game dimensions."""


class DomainError(ChargeGamesError):
    """A price function was evaluated/differentiated outside its domain."""


class InfeasibleSetError(ChargeGamesError):
    """A feasible set is empty; carries an infeasibility certificate."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SpecValidationError(ChargeGamesError):
    """A scenario, class or config description is invalid."""
