"""Exception hierarchy shared by all aquaghost modules."""


class AquaGhostError(Exception):
    """Base class for all library errors."""


# --- scene / file I/O ---

class ParseError(AquaGhostError):
    """Malformed PGM header or sample data."""


class TruncatedFile(AquaGhostError):
    """PGM file ended before the declared number of samples."""


class IoError(AquaGhostError):
    """Filesystem write/read failure."""


class InvalidSparsity(AquaGhostError):
    """Requested sparsity exceeds the number of coefficients."""


# --- optics ---

class UnknownPreset(AquaGhostError):
    """Water-channel preset name not recognized."""


# --- dmd ---

class TooLarge(AquaGhostError):
    """Requested pattern set exceeds the size guard."""


class WrongPatternKind(AquaGhostError):
    """Operation only defined for binary 0/1 DMD patterns."""


# --- acquisition ---

class ShapeError(AquaGhostError):
    """Scene / pattern / measurement dimensions disagree."""


class InvalidRate(AquaGhostError):
    """Negative or non-finite Poisson rate."""


# --- recovery ---

class DegenerateDictionary(AquaGhostError):
    """Dictionary contains a zero-norm column."""


class IllConditionedActiveSet(AquaGhostError):
    """Active-set normal equations singular beyond the jitter rescue."""


class NumericalDivergence(AquaGhostError):
    """Solver produced a non-finite objective."""


class OracleTooLarge(AquaGhostError):
    """Exhaustive support search would exceed the subset guard."""


class MismatchedM(AquaGhostError):
    """Measurement count differs between measurements and patterns."""


# --- quality ---

class ImageTooSmall(AquaGhostError):
    """Image smaller than the SSIM window."""


class PairingError(AquaGhostError):
    """Quantum/classical cells cannot be matched one-to-one."""
