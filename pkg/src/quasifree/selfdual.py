"""Self-dual single-particle spaces and the linear algebra under everything.

A truncated self-dual space with ``n`` modes is C^{2n} with coordinates
ordered ``(e_1, ..., e_n, e_1*, ..., e_n*)``.  The antiunitary involution J
swaps the two halves and conjugates entries; the reference basis projection
P1 selects the first half, and J P1 J = 1 - P1.  Rectangular maps between two
such spaces embed the smaller mode set as a prefix of the larger one.

All rank decisions go through absolute singular-value thresholds, and norms
are accumulated with `math.fsum` in a fixed order so repeated runs produce
identical bytes in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, OrthonormalityFailure, ShapeMismatch

DEFAULT_TOL = 1e-10


def rank_tolerance(matrix: np.ndarray, base: float = DEFAULT_TOL) -> float:
    """Absolute singular-value threshold: base * max(1, sigma_max)."""
    if matrix.size == 0:
        return base
    top = float(np.linalg.norm(matrix, 2))
    return base * max(1.0, top)


def hs_norm(matrix: np.ndarray) -> float:
    """Hilbert-Schmidt (Frobenius) norm with deterministic accumulation."""
    flat = np.abs(np.ascontiguousarray(matrix)).ravel()
    return math.sqrt(math.fsum((flat * flat).tolist()))


def _canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate a vector so its largest-magnitude entry is real positive."""
    idx = int(np.argmax(np.abs(vec)))
    pivot = vec[idx]
    if abs(pivot) == 0.0:
        return vec
    return vec * (abs(pivot) / pivot)


def kernel_basis(matrix: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Orthonormal kernel basis via SVD, deterministically ordered.

    Columns are ordered by ascending singular value with a lexicographic
    tie-break on (rounded) coordinates, and each column is phase-fixed so the
    largest entry is real positive.  Returns an (n, k) array (k may be 0).
    """
    n = matrix.shape[1]
    if matrix.size == 0 or matrix.shape[0] == 0:
        return np.eye(n, dtype=complex)
    if tol is None:
        tol = rank_tolerance(matrix)
    _, sigma, vh = np.linalg.svd(matrix)
    sigma = np.concatenate([sigma, np.zeros(n - len(sigma))])
    cols = []
    for i in range(n):
        if sigma[i] <= tol:
            cols.append((sigma[i], _canonical_phase(vh[i].conj())))
    cols.sort(key=lambda sv: (round(float(sv[0]), 14),
                              tuple(np.round(sv[1].view(float), 12).tolist())))
    if not cols:
        return np.zeros((n, 0), dtype=complex)
    return np.column_stack([c for _, c in cols]).astype(complex)


def cokernel_basis(matrix: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of ker(matrix*), same ordering rules."""
    return kernel_basis(matrix.conj().T, tol)


def pinv_on_range(matrix: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse, zeroing singular values <= tol."""
    if matrix.size == 0:
        return matrix.conj().T.copy()
    if tol is None:
        tol = rank_tolerance(matrix)
    u, sigma, vh = np.linalg.svd(matrix, full_matrices=False)
    inv = np.where(sigma > tol, 1.0 / np.where(sigma > tol, sigma, 1.0), 0.0)
    return (vh.conj().T * inv) @ u.conj().T


def orthonormal_range(matrix: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Orthonormal frame for the column range, deterministically ordered."""
    if matrix.size == 0:
        return np.zeros((matrix.shape[0], 0), dtype=complex)
    if tol is None:
        tol = rank_tolerance(matrix)
    u, sigma, _ = np.linalg.svd(matrix, full_matrices=False)
    keep = [i for i in range(len(sigma)) if sigma[i] > tol]
    cols = [(i, _canonical_phase(u[:, i])) for i in keep]
    if not cols:
        return np.zeros((matrix.shape[0], 0), dtype=complex)
    return np.column_stack([c for _, c in cols]).astype(complex)


def orthoprojection(frame: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the span of orthonormal frame columns."""
    if frame.shape[1] == 0:
        return np.zeros((frame.shape[0], frame.shape[0]), dtype=complex)
    return frame @ frame.conj().T


@dataclass(frozen=True)
class SelfDualSpace:
    """Truncated self-dual space: C^{2 n_modes} with J, P1, C attached."""

    n_modes: int

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    def swap(self) -> np.ndarray:
        n = self.n_modes
        s = np.zeros((2 * n, 2 * n))
        s[:n, n:] = np.eye(n)
        s[n:, :n] = np.eye(n)
        return s

    def p1(self) -> np.ndarray:
        n = self.n_modes
        return np.diag(np.concatenate([np.ones(n), np.zeros(n)])).astype(complex)

    def p2(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) - self.p1()

    def charge_conjugation(self) -> np.ndarray:
        """C = P1 - P2, the fundamental symmetry of the kappa form."""
        n = self.n_modes
        return np.diag(np.concatenate([np.ones(n), -np.ones(n)])).astype(complex)

    def conj_vector(self, vec: np.ndarray) -> np.ndarray:
        """J applied to coordinates: swap halves, conjugate entries."""
        if vec.shape[0] != self.dim:
            raise ShapeMismatch(f"vector length {vec.shape[0]} != {self.dim}")
        return self.swap() @ np.conj(vec)

    def basis_vector(self, mode: int, conjugate: bool = False) -> np.ndarray:
        """e_mode or e_mode* as a coordinate vector (modes are 1-based)."""
        if not 1 <= mode <= self.n_modes:
            raise ShapeMismatch(f"mode {mode} outside 1..{self.n_modes}")
        v = np.zeros(self.dim, dtype=complex)
        v[mode - 1 + (self.n_modes if conjugate else 0)] = 1.0
        return v

    def embed_matrix(self, into: "SelfDualSpace") -> np.ndarray:
        """Prefix embedding of this space into a larger one."""
        if into.n_modes < self.n_modes:
            raise ShapeMismatch("cannot embed into a smaller space")
        m = np.zeros((into.dim, self.dim))
        m[: self.n_modes, : self.n_modes] = np.eye(self.n_modes)
        m[into.n_modes: into.n_modes + self.n_modes,
          self.n_modes:] = np.eye(self.n_modes)
        return m

    def kappa_gram(self, x: np.ndarray, y: np.ndarray) -> complex:
        """kappa(x, y) = <x, C y> (hermitian, indefinite)."""
        return complex(np.vdot(x, self.charge_conjugation() @ y))


def conjugate_matrix(matrix: np.ndarray, domain: SelfDualSpace,
                     codomain: SelfDualSpace) -> np.ndarray:
    """Matrix of J A J for A: domain -> codomain."""
    return codomain.swap() @ np.conj(matrix) @ domain.swap()


@dataclass(frozen=True)
class BlockOperator:
    """Linear map between self-dual spaces with 2x2 block bookkeeping.

    Block (i, j) maps the K_j part of the domain into the K_i part of the
    codomain, i, j in {1, 2}.
    """

    matrix: np.ndarray
    domain: SelfDualSpace
    codomain: SelfDualSpace = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.codomain is None:
            object.__setattr__(self, "codomain", self.domain)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.codomain.dim, self.domain.dim):
            raise ShapeMismatch(
                f"matrix shape {mat.shape} != "
                f"({self.codomain.dim}, {self.domain.dim})")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_blocks(cls, b11, b12, b21, b22, domain: SelfDualSpace,
                    codomain: SelfDualSpace | None = None) -> "BlockOperator":
        top = np.hstack([np.asarray(b11, dtype=complex),
                         np.asarray(b12, dtype=complex)])
        bot = np.hstack([np.asarray(b21, dtype=complex),
                         np.asarray(b22, dtype=complex)])
        return cls(np.vstack([top, bot]), domain, codomain or domain)

    def block(self, i: int, j: int) -> np.ndarray:
        nc, nd = self.codomain.n_modes, self.domain.n_modes
        rows = slice(0, nc) if i == 1 else slice(nc, 2 * nc)
        cols = slice(0, nd) if j == 1 else slice(nd, 2 * nd)
        return self.matrix[rows, cols]

    def conjugate(self) -> "BlockOperator":
        return BlockOperator(
            conjugate_matrix(self.matrix, self.domain, self.codomain),
            self.domain, self.codomain)

    def adjoint(self) -> "BlockOperator":
        return BlockOperator(self.matrix.conj().T, self.codomain, self.domain)

    def kappa_adjoint(self) -> "BlockOperator":
        """A+ = C A* C, the adjoint for the kappa form."""
        cd = self.domain.charge_conjugation()
        cc = self.codomain.charge_conjugation()
        return BlockOperator(cd @ self.matrix.conj().T @ cc,
                             self.codomain, self.domain)

    def __matmul__(self, other: "BlockOperator") -> "BlockOperator":
        if other.codomain.n_modes != self.domain.n_modes:
            raise ShapeMismatch("composition spaces do not match")
        return BlockOperator(self.matrix @ other.matrix,
                             other.domain, self.codomain)

    def selfdual_defect(self) -> float:
        """HS distance between A and its J-conjugate (0 for semigroup members)."""
        return hs_norm(self.matrix - self.conjugate().matrix)

    def isometry_defect(self) -> float:
        return hs_norm(self.matrix.conj().T @ self.matrix
                       - np.eye(self.domain.dim))

    def kappa_isometry_defect(self) -> float:
        return hs_norm(self.kappa_adjoint().matrix @ self.matrix
                       - np.eye(self.domain.dim))

    def p1_commutator(self) -> np.ndarray:
        """P1(codomain) V - V P1(domain) as a matrix."""
        return self.codomain.p1() @ self.matrix - self.matrix @ self.domain.p1()

    def selfdual_reassembly_defect(self) -> float:
        """Blocks glued back must reproduce the matrix exactly."""
        glued = BlockOperator.from_blocks(
            self.block(1, 1), self.block(1, 2), self.block(2, 1),
            self.block(2, 2), self.domain, self.codomain)
        return float(np.max(np.abs(glued.matrix - self.matrix)))


@dataclass(frozen=True)
class Subspace:
    """Subspace of a self-dual space, held as an orthonormal column frame."""

    space: SelfDualSpace
    frame: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        fr = np.asarray(self.frame, dtype=complex)
        if fr.ndim != 2 or fr.shape[0] != self.space.dim:
            raise ShapeMismatch(
                f"frame shape {fr.shape} incompatible with dim {self.space.dim}")
        if self.check and fr.shape[1] > 0:
            gram = fr.conj().T @ fr
            if not np.allclose(gram, np.eye(fr.shape[1]), atol=1e-9):
                raise OrthonormalityFailure(
                    "frame columns are not orthonormal")
        fr = fr.copy()
        fr.setflags(write=False)
        object.__setattr__(self, "frame", fr)

    @classmethod
    def empty(cls, space: SelfDualSpace) -> "Subspace":
        return cls(space, np.zeros((space.dim, 0), dtype=complex))

    @classmethod
    def span(cls, space: SelfDualSpace, vectors: np.ndarray,
             tol: float | None = None) -> "Subspace":
        return cls(space, orthonormal_range(vectors, tol))

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return orthoprojection(self.frame)

    def conjugate(self) -> "Subspace":
        """The subspace J(this) = {f* : f in this}."""
        if self.dim == 0:
            return Subspace.empty(self.space)
        conj_frame = self.space.swap() @ np.conj(self.frame)
        return Subspace(self.space, conj_frame)

    def contains(self, vec: np.ndarray, tol: float = 1e-9) -> bool:
        resid = vec - self.projector() @ vec
        return float(np.linalg.norm(resid)) <= tol * max(
            1.0, float(np.linalg.norm(vec)))


def require_same_space(a: SelfDualSpace, b: SelfDualSpace) -> None:
    if a.n_modes != b.n_modes:
        raise DimensionMismatch(
            f"spaces with {a.n_modes} and {b.n_modes} modes")
