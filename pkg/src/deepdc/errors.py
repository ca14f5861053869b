"""Exception hierarchy shared by all deepdc modules."""


class DeepdcError(Exception):
    """Base class for every error raised by this package."""


# --- numeric kernels ---

class NonFiniteInput(DeepdcError):
    """An input array contains NaN or infinity."""


class ShapeMismatch(DeepdcError):
    """Array shapes are inconsistent with the requested operation."""


class DegenerateSample(DeepdcError):
    """A sample has coincident observations where strict separation is required."""


class ConstantInput(DeepdcError):
    """A series has zero variance where variation is required."""


# --- weight container ---

class BadMagic(DeepdcError):
    """File does not start with the DDCW magic bytes."""


class UnsupportedVersion(DeepdcError):
    """Container version is not one this reader understands."""


class CorruptTensor(DeepdcError):
    """Container payload is truncated, malformed, or inconsistent."""


class MissingTap(DeepdcError):
    """A tap layer named in the metadata has no corresponding conv layer."""


class InvalidScale(DeepdcError):
    """Channel-width divisor does not divide the standard channel counts."""


# --- image pipeline ---

class ImageTooSmall(DeepdcError):
    """Resize target is below the minimum the network can process."""


class NonFiniteActivation(DeepdcError):
    """A forward pass produced NaN or infinity at a tap."""


class TapMismatch(DeepdcError):
    """Two feature stacks disagree in tap names or geometry."""


# --- evaluation harness ---

class FitFailed(DeepdcError):
    """The logistic fit diverged and no fallback applies."""


class InsufficientData(DeepdcError):
    """Too few records for the requested statistic."""


class ManifestError(DeepdcError):
    """Dataset manifest file is malformed."""


# --- geometric transforms ---

class UnknownKind(DeepdcError):
    """Transform kind is not one of translation/rotation/scaling/combined."""


# --- cli ---

class UsageError(DeepdcError):
    """Command line arguments do not parse."""
