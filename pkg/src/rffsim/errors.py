"""Exception types shared across the simulation pipeline."""


class RffsimError(Exception):
    """Base class for all library errors."""


class PacketNotFound(RffsimError):
    """No preamble plateau exceeded the detection threshold."""


class OutOfBounds(RffsimError):
    """A requested sample range falls outside the frame."""


class ShapeMismatch(RffsimError):
    """A tensor does not match the shape the model expects."""


class EmptyDataset(RffsimError):
    """A training routine received no records."""


class EmptyInput(RffsimError):
    """A metric received empty prediction/truth lists."""


class LabelOutOfRange(RffsimError):
    """A label falls outside the configured class count."""


class ZeroChallenge(RffsimError):
    """Phase estimation against an all-zero challenge signal."""


class ZeroReference(RffsimError):
    """NMSE against a zero-power reference signal."""


class EmptyList(RffsimError):
    """NMSE over an empty pair list."""


class InsufficientMatches(RffsimError):
    """Phase matching produced fewer pairs than requested."""


class IoError(RffsimError):
    """Report or dataset files could not be written."""
