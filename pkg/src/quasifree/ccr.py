"""Bosonic (CCR) quasi-free endomorphisms on truncated self-dual spaces.

The CCR form is kappa(f, g) = <f, C g> with C = P1 - P2, and the relevant
adjoint is A+ = C A* C.  Members satisfy V+ V = 1, V = J V J, and [P1, V]
Hilbert-Schmidt.  The charge data differ from the fermionic case: there is no
swapped subspace h; instead the defect projection p is built from the
spectral decomposition of A = E C E on ker V+, the new kappa-basis projection
is P = V P1 V+ + p, the pairing operator T = P21 P11^{-1} is *symmetric* with
||T|| < 1, and k = P(ker V+) carries a kappa-orthonormal frame.  Sectors have
statistics dimension 1 (IND V = 0) or infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AntisymmetryViolation,
    DegenerateForm,
    DimensionMismatch,
    IndexMismatch,
    NormBoundViolation,
    NotInSemigroup,
    OddIndex,
    OrthonormalityFailure,
)
from .selfdual import (
    BlockOperator,
    SelfDualSpace,
    Subspace,
    conjugate_matrix,
    hs_norm,
    kernel_basis,
    orthoprojection,
    pinv_on_range,
    rank_tolerance,
)

ISO_TOL = 1e-10
CHECK_TOL = 1e-10
NORM_MARGIN = 1e-8


@dataclass(frozen=True)
class CcrMembership:
    is_member: bool
    kappa_isometry_defect: float
    selfdual_defect: float
    hs_defect: float
    index: int | None
    failures: tuple[str, ...] = ()


def ccr_membership(v: BlockOperator, tol: float = ISO_TOL,
                   declared_index: int | None = None) -> CcrMembership:
    """Classify V against the bosonic semigroup at this truncation."""
    iso = v.kappa_isometry_defect()
    sd = v.selfdual_defect()
    hs = hs_norm(v.p1_commutator())
    failures = []
    if iso > tol:
        failures.append(f"kappa isometry defect {iso:.3e} > {tol:.1e}")
    if sd > tol:
        failures.append(f"selfdual defect {sd:.3e} > {tol:.1e}")
    index: int | None = None
    if not failures:
        structural = 2 * (v.codomain.n_modes - v.domain.n_modes)
        kplus = v.kappa_adjoint().matrix
        count = kernel_basis(kplus, rank_tolerance(kplus)).shape[1]
        if count % 2 != 0:
            raise OddIndex(f"dim ker V+ = {count} is odd")
        if count != structural:
            raise IndexMismatch(
                f"kernel count {count} != structural index {structural}")
        if declared_index is not None and declared_index != structural:
            raise IndexMismatch(
                f"declared index {declared_index} != structural {structural}")
        index = structural
    return CcrMembership(not failures, iso, sd, hs, index, tuple(failures))


def require_ccr_member(v: BlockOperator, tol: float = ISO_TOL,
                       declared_index: int | None = None) -> CcrMembership:
    rec = ccr_membership(v, tol, declared_index)
    if not rec.is_member:
        raise NotInSemigroup("; ".join(rec.failures))
    return rec


def compute_defect_projection(v: BlockOperator,
                              tol: float | None = None,
                              check_tol: float = CHECK_TOL
                              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The triple (E-kernel frame, A = ECE, p = A_+^{-1} C) on the codomain.

    A is hermitian and must split as A = A_+ - conj(A_+) with A_+ conj(A_+) = 0
    (checked, not assumed); degenerate directions raise DegenerateForm.
    """
    space = v.codomain
    kplus = v.kappa_adjoint().matrix
    ker = kernel_basis(kplus, tol)
    c = space.charge_conjugation()
    e = orthoprojection(ker)
    a = e @ c @ e
    a = 0.5 * (a + a.conj().T)
    eigval, eigvec = np.linalg.eigh(a)
    thresh = check_tol * max(1.0, float(np.max(np.abs(eigval))) if eigval.size else 1.0)
    near_zero = int(np.sum(np.abs(eigval) <= thresh)) - (space.dim - ker.shape[1])
    if near_zero > 0:
        raise DegenerateForm(
            f"kappa form degenerate on ker V+ ({near_zero} null directions)")
    pos = eigval > thresh
    a_plus = (eigvec[:, pos] * eigval[pos]) @ eigvec[:, pos].conj().T
    a_bar = conjugate_matrix(a_plus, space, space)
    split = hs_norm(a - (a_plus - a_bar))
    cross = hs_norm(a_plus @ a_bar)
    if max(split, cross) > check_tol * max(1.0, hs_norm(a)):
        raise DegenerateForm(
            f"A != A+ - conj(A+) (defect {split:.3e}, cross {cross:.3e})")
    p_op = pinv_on_range(a_plus) @ c
    return ker, a, p_op


def compute_projection(v: BlockOperator, p_op: np.ndarray,
                       check_tol: float = CHECK_TOL) -> np.ndarray:
    """P = V P1 V+ + p, checked to be a kappa-basis projection."""
    space = v.codomain
    p = v.matrix @ v.domain.p1() @ v.kappa_adjoint().matrix + p_op
    idem = hs_norm(p @ p - p)
    c = space.charge_conjugation()
    kappa_herm = hs_norm(c @ p.conj().T @ c - p)
    comp = hs_norm(conjugate_matrix(p, space, space)
                   - (np.eye(space.dim) - p))
    if max(idem, kappa_herm, comp) > check_tol * max(1.0, hs_norm(p)):
        raise DegenerateForm(
            f"P self-check failed: idempotency {idem:.3e}, "
            f"kappa-hermiticity {kappa_herm:.3e}, complement {comp:.3e}")
    return p


def compute_t(p: np.ndarray, space: SelfDualSpace,
              check_tol: float = CHECK_TOL,
              norm_margin: float = NORM_MARGIN) -> np.ndarray:
    """T = P21 P11^{-1}: symmetric block with ||T|| < 1 (admissibility)."""
    n = space.n_modes
    p11, p21 = p[:n, :n], p[n:, :n]
    if kernel_basis(p11).shape[1] > 0:
        raise DegenerateForm("P11 is singular; no bosonic pairing operator")
    t = p21 @ np.linalg.inv(p11)
    sym = hs_norm(t - t.T)
    if sym > check_tol * max(1.0, hs_norm(t)):
        raise AntisymmetryViolation(
            f"T symmetry defect {sym:.3e} exceeds {check_tol:.1e}")
    norm = float(np.linalg.norm(t, 2)) if t.size else 0.0
    if norm >= 1.0 - norm_margin:
        raise NormBoundViolation(f"||T|| = {norm:.12f} >= 1 - {norm_margin:.0e}")
    return t


def kappa_orthonormal_frame(space: SelfDualSpace, vectors: np.ndarray,
                            expected_dim: int,
                            check_tol: float = 1e-9) -> np.ndarray:
    """Gram-Schmidt for the kappa form, pivoting on the largest kappa-norm.

    Keeps only directions of positive kappa-norm; raises if the count differs
    from expected_dim or the final frame is not kappa-orthonormal.
    """
    c = space.charge_conjugation()
    work = [vectors[:, j].astype(complex) for j in range(vectors.shape[1])]
    frame: list[np.ndarray] = []
    while work:
        norms = [float(np.real(np.vdot(w, c @ w))) for w in work]
        j = int(np.argmax(norms))
        if norms[j] <= check_tol:
            break
        g = work.pop(j) / math.sqrt(norms[j])
        frame.append(g)
        work = [w - g * np.vdot(c @ g, w) for w in work]
        work = [w for w in work if float(np.linalg.norm(w)) > check_tol]
    if len(frame) != expected_dim:
        raise DimensionMismatch(
            f"kappa-positive directions {len(frame)} != expected {expected_dim}")
    if frame:
        fr = np.column_stack(frame)
        gram = fr.conj().T @ c @ fr
        if not np.allclose(gram, np.eye(len(frame)), atol=check_tol):
            raise OrthonormalityFailure("frame is not kappa-orthonormal")
        return fr
    return np.zeros((space.dim, 0), dtype=complex)


def compute_k(v: BlockOperator, p: np.ndarray, ker_vplus: np.ndarray,
              index: int) -> np.ndarray:
    """k = P(ker V+) with a kappa-orthonormal frame; dim k = IND V / 2."""
    if ker_vplus.shape[1] == 0:
        return np.zeros((v.codomain.dim, 0), dtype=complex)
    return kappa_orthonormal_frame(v.codomain, p @ ker_vplus, index // 2)


def statistics_dimension(index: int) -> float:
    """1 for automorphism-type sectors, infinite otherwise."""
    return 1.0 if index == 0 else math.inf


@dataclass(frozen=True)
class CcrChargeData:
    v: BlockOperator
    membership: CcrMembership
    a: np.ndarray
    p_defect: np.ndarray
    p: np.ndarray
    t: np.ndarray
    k_frame: np.ndarray
    index: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def statistics_dimension(self) -> float:
        return statistics_dimension(self.index)

    @property
    def k_dim(self) -> int:
        return self.k_frame.shape[1]


def ccr_charge_data(v: BlockOperator, tol: float = ISO_TOL,
                    declared_index: int | None = None) -> CcrChargeData:
    """Full bosonic pipeline with all self-checks."""
    membership = require_ccr_member(v, tol, declared_index)
    assert membership.index is not None
    ker, a, p_op = compute_defect_projection(v)
    p = compute_projection(v, p_op)
    t = compute_t(p, v.codomain)
    k_frame = compute_k(v, p, ker, membership.index)
    diagnostics = {
        "kappa_isometry_defect": membership.kappa_isometry_defect,
        "selfdual_defect": membership.selfdual_defect,
        "hs_defect": membership.hs_defect,
        "t_norm": float(np.linalg.norm(t, 2)) if t.size else 0.0,
        "t_symmetry": hs_norm(t - t.T),
    }
    return CcrChargeData(v, membership, a, p_op, p, t, k_frame,
                         membership.index, diagnostics)
