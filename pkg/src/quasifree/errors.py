"""Exception hierarchy for the quasifree toolkit.

Every failure mode that callers are expected to branch on gets its own class;
the CLI maps them onto exit codes (see :mod:`quasifree.cli`).
"""


class QuasifreeError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatch(QuasifreeError):
    """Operator shape is incompatible with the declared self-dual spaces."""


class NotInSemigroup(QuasifreeError):
    """Membership check failed; the failing condition is named in the message."""


class IndexMismatch(QuasifreeError):
    """Structural index and SVD kernel count disagree at the truncation."""


class AntisymmetryViolation(QuasifreeError):
    """Computed pairing operator is not antisymmetric / symmetric as required."""


class RecoveryMismatch(QuasifreeError):
    """Recovering (h, T) from the basis projection P failed its self-check."""


class DimensionMismatch(QuasifreeError):
    """A derived subspace has the wrong dimension (e.g. dim k != ind/2)."""


class OddIndex(QuasifreeError):
    """dim ker V* came out odd, which the self-dual structure forbids."""


class NonzeroIndex(QuasifreeError):
    """Operation requires IND V = 0 (e.g. the Z2 index)."""


class NotChargeDiagonal(QuasifreeError):
    """V11 does not commute with the supplied charge grading."""


class DegenerateForm(QuasifreeError):
    """The kappa form is degenerate where it must not be."""


class NormBoundViolation(QuasifreeError):
    """CCR pairing operator has ||T|| >= 1 - margin."""


class NotGaugeCompatible(QuasifreeError):
    """Gauge action does not leave the required subspace invariant."""


class OrthonormalityFailure(QuasifreeError):
    """A constructed frame failed its (kappa-)orthonormality self-check."""


class ImplementationDefect(QuasifreeError):
    """Implementer equations violated beyond tolerance on the Fock oracle."""


class NotInvariant(QuasifreeError):
    """A subspace expected to be invariant under the gauge action is not."""


class CutoffTooSmall(QuasifreeError):
    """Bosonic occupation cutoff too small for the requested tolerance."""


class WindowTooSmall(QuasifreeError):
    """Fourier window too small for the requested local construction."""


class NonMonotone(QuasifreeError):
    """Partial HS norms failed to increase monotonically."""


class UnstableIndex(QuasifreeError):
    """Singular-value index count not stable across the two largest cutoffs."""


class NoCommonPhase(QuasifreeError):
    """No unimodular phase fits the localization test family."""


class LevelOutOfRange(QuasifreeError):
    """Requested charge level outside 0..dim(k) (CAR) or negative (CCR)."""


class CharacterMismatch(QuasifreeError):
    """Oracle character and symmetric-function character disagree."""


class CapExceeded(QuasifreeError):
    """Requested Fock space exceeds the configured size cap."""


class MalformedInput(QuasifreeError):
    """Model file failed validation."""
