"""Exception types shared across the toolkit."""


class ClutterkitError(Exception):
    """Base class for all toolkit errors."""


class EmptyMaskError(ClutterkitError):
    """Mask has no foreground, or nothing survived cleanup."""


class DimensionMismatchError(ClutterkitError):
    """Two rasters that must share dimensions do not."""


class SceneTooSmallError(ClutterkitError):
    """No valid placement exists for a sampled object at any retried scale."""


class SourceTooSmallError(ClutterkitError):
    """Background source is smaller than the requested crop."""


class DuplicateIdError(ClutterkitError):
    """Two scenes carry the same scene id."""


class NoGroundTruthError(ClutterkitError):
    """Evaluation requested for data with no ground-truth instances."""


class NoPixelRefError(ClutterkitError):
    """Point cloud lacks the per-point pixel back-reference required here."""


class DegenerateCloudError(ClutterkitError):
    """Cloud has too few or only collinear points for plane fitting."""


class TooFewPointsError(ClutterkitError):
    """Cloud has fewer points than the operation needs."""


class EmptyCloudError(ClutterkitError):
    """Operation requires a non-empty point cloud."""


class NoDetectionsError(ClutterkitError):
    """Target selection called with an empty detection list."""


class NoCandidatesError(ClutterkitError):
    """No grasp candidate lies within the centroid region."""


class EmptyGroundTruthError(ClutterkitError):
    """Cloud segmentation scoring needs at least one ground-truth cluster."""


class ZeroAttemptsError(ClutterkitError):
    """Success rate requested over a tally with zero attempts."""
