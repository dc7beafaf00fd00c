"""Exception types shared across the package."""


class BgcError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BgcError):
    """Operands live on incompatible Hilbert spaces."""


class SupportCapExceeded(BgcError):
    """An operation would materialize more active qubits than the cap allows."""


class TargetOutsideSubset(BgcError):
    """A gate targets a qubit outside the requested subset."""


class EnumerationCapExceeded(BgcError):
    """Exhaustive net enumeration would exceed the configured candidate cap."""


class EmptyNet(BgcError):
    """A candidate net with no candidates was passed to a selection routine."""


class LengthMismatch(BgcError):
    """A value sequence does not match the expected batch layout."""


class PostselectionImpossible(BgcError):
    """Projection onto the all-zero outcome has (numerically) zero probability."""


class IncompleteDataset(BgcError):
    """A classical dataset is missing blocks needed for exact reconstruction."""


class InvalidRegime(BgcError):
    """Parameters fall outside the validity regime of the algorithm."""


class EigRootFailure(BgcError):
    """Matrix root/power via eigendecomposition failed to produce a unitary."""


class ConfigError(BgcError):
    """Invalid experiment configuration."""
