"""Exception and warning taxonomy shared by every condguide module."""


class CondGuideError(Exception):
    """Base class for all condguide errors."""


class ShapeError(CondGuideError, ValueError):
    """Raster/array dimensions do not satisfy an operation's contract."""


class ArgumentError(CondGuideError, ValueError):
    """An argument is out of the operation's domain (usage error)."""


class PoseParseError(CondGuideError, ValueError):
    """Pose-JSON payload is malformed or violates sequence invariants.

    ``frame_index`` is the offending frame when known, else None.
    """

    def __init__(self, message, frame_index=None):
        if frame_index is not None:
            message = f"frame {frame_index}: {message}"
        super().__init__(message)
        self.frame_index = frame_index


class FormatError(CondGuideError, ValueError):
    """Binary/structured file violates its format definition.

    ``offset`` is the byte offset of the violation when known, else None.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UndefinedStatisticError(CondGuideError, ValueError):
    """A statistic has an empty domain (e.g. no background pixels)."""


class DegenerateRegionError(CondGuideError, ValueError):
    """A character's non-intersection region is empty (total occlusion)."""

    def __init__(self, message, character_id=None):
        super().__init__(message)
        self.character_id = character_id


class IdentityMismatchError(CondGuideError, ValueError):
    """A frame references a character id absent from the reference ranks."""


class MetricError(CondGuideError, ValueError):
    """Metric inputs are invalid or the computation degenerated."""


class WindowGenerationError(CondGuideError, RuntimeError):
    """The per-window generator callback failed; carries the window index."""

    def __init__(self, message, window_index=None):
        super().__init__(message)
        self.window_index = window_index


class DegenerateCharacterWarning(UserWarning):
    """All joints of a character fell below the confidence threshold."""


class ShortClipWarning(UserWarning):
    """A clip is too short to produce the requested windows/statistics."""
