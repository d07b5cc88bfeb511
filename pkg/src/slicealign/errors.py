"""Exception hierarchy shared by all slicealign modules."""


class SliceAlignError(Exception):
    """Base class for all errors raised by this package."""


# -- geometry ----------------------------------------------------------------

class InvalidParameter(SliceAlignError):
    """Non-finite or otherwise unusable rigid parameters."""


class InvalidTransform(SliceAlignError):
    """Matrix does not satisfy the rigid-transform invariants."""


class DegeneratePose(SliceAlignError):
    """Slice pose with a zero-length in-plane axis."""


class SingularAffine(SliceAlignError):
    """Voxel-to-world affine is not invertible."""


# -- file formats ------------------------------------------------------------

class IoError(SliceAlignError):
    """Underlying filesystem or stream failure."""


class CorruptHeader(SliceAlignError):
    """File is not a well-formed NIfTI-1 header."""


class UnsupportedDatatype(SliceAlignError):
    """NIfTI datatype or dimensionality outside the supported set."""


class MalformedCsv(SliceAlignError):
    """Transform CSV with a wrong header or column count."""


# -- configuration / dataset -------------------------------------------------

class MalformedConfig(SliceAlignError):
    """Configuration text could not be decoded."""


class MissingField(SliceAlignError):
    """Configuration lacks a required field."""


class BadPattern(SliceAlignError):
    """Configuration regex failed to compile."""


class MissingCaptureGroup(SliceAlignError):
    """Configuration regex lacks a required named capture group."""


class EmptyDataset(SliceAlignError):
    """Dataset scan matched no cases."""


class IncompleteCase(SliceAlignError):
    """A case is missing its volume, 3D label, or slices."""


class AmbiguousMatch(SliceAlignError):
    """A path matched several patterns, or a role matched several files."""


class UnknownCase(SliceAlignError):
    """Requested case id is not present in the dataset table."""


class UnknownSlice(SliceAlignError):
    """Requested slice id is not present in the loaded case."""


# -- metrics / evaluation ----------------------------------------------------

class DegenerateInput(SliceAlignError):
    """Metric is undefined for this input (e.g. constant images)."""


class EmptyRegion(SliceAlignError):
    """Evaluation region contains no pixels."""


class EmptyMask(SliceAlignError):
    """Mask argument contains no foreground pixels."""


class ShapeMismatch(SliceAlignError):
    """Paired arrays differ in shape."""


# -- history / session -------------------------------------------------------

class AtBoundary(SliceAlignError):
    """Undo/redo/shift requested past the first or last entry."""


class NoScores(SliceAlignError):
    """Optimize requested on a history without scored entries."""
