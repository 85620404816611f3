"""Exception hierarchy shared by every stage of the pipeline.

Errors split into two families so the command line can map them onto exit
codes: :class:`ConfigError` for invalid user input (exit 1) and
:class:`DataError` for problems found while processing data (exit 2).
"""


class GaitSynthError(Exception):
    """Base class for all package errors."""


class ConfigError(GaitSynthError, ValueError):
    """Invalid configuration or parameter value."""


class DataError(GaitSynthError):
    """Input data cannot be processed."""


class ParseError(DataError):
    """A text document could not be parsed.

    ``line`` is 1-based and may be ``None`` when no single line is at fault.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# mocap ingestion
class MissingSection(ParseError):
    pass


class ChannelMismatch(ParseError):
    pass


class MalformedNumber(ParseError):
    pass


class UnsupportedChannelOrder(ParseError):
    pass


class MissingJointRow(ParseError):
    pass


class NonUnitQuaternion(ParseError):
    pass


class UnknownJointName(ParseError):
    pass


class EmptyClip(DataError):
    pass


class UnmappedJoint(DataError):
    pass


class IncompatibleHierarchy(DataError):
    pass


# rendering
class AvatarOutOfFrame(DataError):
    pass


# segmentation / features / similarity
class DimensionMismatch(DataError):
    pass


class DegenerateImage(DataError):
    pass


class EmptyForeground(DataError):
    pass


class EmptyCycle(DataError):
    pass


class CropTooLarge(ConfigError):
    pass


class EmptyInput(DataError):
    pass


# gait cycles
class NoCyclesDetected(DataError):
    pass


# recognition
class InsufficientSamples(DataError):
    pass


class InsufficientComponents(DataError):
    pass


class SingleClass(DataError):
    pass


class EmptyClass(DataError):
    pass


class LabelMismatch(DataError):
    pass


class RankDeficientWarning(UserWarning):
    """Requested more principal components than the data's numerical rank."""
