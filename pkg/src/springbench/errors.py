"""Exception hierarchy shared by the bench, the reduction pipeline and the CLI."""


class BenchError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BenchError, ValueError):
    """Non-finite, non-positive or otherwise out-of-contract argument."""


class ProtocolError(InvalidInputError):
    """A loading protocol violates one of its constraints."""


class InfeasibleError(InvalidInputError):
    """A calibration target cannot be met by the load train."""


class UnderdeterminedError(InvalidInputError):
    """Not enough data to fit the requested parameters."""


class NoYieldError(BenchError):
    """The curve never crosses the offset line (entirely elastic)."""


class OpenLoopError(BenchError):
    """A hysteresis loop does not close within tolerance."""

    def __init__(self, gap, msg=None):
        self.gap = gap
        super().__init__(msg or f"hysteresis loop is open: gap = {gap:.3e}")


class SolverError(BenchError, RuntimeError):
    """Equilibrium iteration failed to converge."""

    def __init__(self, msg, residual=float("nan"), sample_index=None):
        self.residual = residual
        self.sample_index = sample_index
        super().__init__(msg)


class ConfigError(BenchError):
    """Malformed or inconsistent bench configuration."""


class RecordError(BenchError):
    """Malformed record file or metadata mismatch."""
