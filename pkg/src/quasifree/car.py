"""Fermionic (CAR) quasi-free endomorphisms on truncated self-dual spaces.

Semigroup membership means: V is an isometry, V equals its J-conjugate, and
the off-diagonal part [P1, V] is Hilbert-Schmidt (always true at a finite
truncation; its norm is reported so families can be studied across cutoffs).
From a member V the charge data are derived:

* h   -- the subspace V12(ker V22) of K1 swapped into the new particle space,
* T   -- the antisymmetric pairing operator K1 -> K2 of the new vacuum,
* P   -- the basis projection built from (h, T), with J P J = 1 - P,
* k   -- P(ker V*), carrying the statistics; dim k = IND(V)/2.

The statistics dimension of the associated sector is 2^{IND(V)/2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AntisymmetryViolation,
    DimensionMismatch,
    IndexMismatch,
    NonzeroIndex,
    NotChargeDiagonal,
    NotInSemigroup,
    OddIndex,
    RecoveryMismatch,
)
from .selfdual import (
    BlockOperator,
    SelfDualSpace,
    Subspace,
    hs_norm,
    kernel_basis,
    cokernel_basis,
    orthonormal_range,
    orthoprojection,
    pinv_on_range,
    rank_tolerance,
)

ISO_TOL = 1e-10
CHECK_TOL = 1e-10
RECOVERY_TOL = 1e-8


@dataclass(frozen=True)
class CarMembership:
    """Outcome of the semigroup membership test."""

    is_member: bool
    isometry_defect: float
    selfdual_defect: float
    hs_defect: float
    index: int | None
    failures: tuple[str, ...] = ()


def structural_index(v: BlockOperator) -> int:
    return 2 * (v.codomain.n_modes - v.domain.n_modes)


def car_membership(v: BlockOperator, tol: float = ISO_TOL,
                   declared_index: int | None = None) -> CarMembership:
    """Classify V against the fermionic semigroup at this truncation."""
    iso = v.isometry_defect()
    sd = v.selfdual_defect()
    hs = hs_norm(v.p1_commutator())
    failures = []
    if iso > tol:
        failures.append(f"isometry defect {iso:.3e} > {tol:.1e}")
    if sd > tol:
        failures.append(f"selfdual defect {sd:.3e} > {tol:.1e}")
    index: int | None = None
    if not failures:
        index = _checked_index(v, declared_index)
    return CarMembership(not failures, iso, sd, hs, index, tuple(failures))


def _checked_index(v: BlockOperator, declared_index: int | None) -> int:
    """Structural index 2(n_out - n_in) cross-checked by an SVD kernel count."""
    structural = structural_index(v)
    sigma = np.linalg.svd(v.matrix, compute_uv=False)
    tol = rank_tolerance(v.matrix)
    svd_count = int(v.codomain.dim - np.sum(sigma > tol))
    if svd_count % 2 != 0:
        raise OddIndex(f"dim ker V* = {svd_count} is odd")
    if svd_count != structural:
        raise IndexMismatch(
            f"SVD kernel count {svd_count} != structural index {structural}")
    if declared_index is not None and declared_index != structural:
        raise IndexMismatch(
            f"declared index {declared_index} != structural {structural}")
    return structural


def require_car_member(v: BlockOperator, tol: float = ISO_TOL,
                       declared_index: int | None = None) -> CarMembership:
    rec = car_membership(v, tol, declared_index)
    if not rec.is_member:
        raise NotInSemigroup("; ".join(rec.failures))
    return rec


def compute_h(v: BlockOperator, tol: float | None = None) -> Subspace:
    """h = V12(ker V22), an orthonormal frame inside K1 of the codomain."""
    v22 = v.block(2, 2)
    ker22 = kernel_basis(v22, tol)
    if ker22.shape[1] == 0:
        return Subspace.empty(v.codomain)
    image = v.block(1, 2) @ ker22
    nc = v.codomain.n_modes
    frame_modes = orthonormal_range(image, tol)
    frame = np.zeros((v.codomain.dim, frame_modes.shape[1]), dtype=complex)
    frame[:nc] = frame_modes
    return Subspace(v.codomain, frame)


def compute_t(v: BlockOperator, h: Subspace | None = None,
              tol: float | None = None,
              check_tol: float = CHECK_TOL) -> np.ndarray:
    """Pairing operator T: K1 -> K2 of the codomain, as an n x n block.

    T = V21 V11^{-1} - V22^{-1*} V12* [ker V11*], pseudo-inverses on ranges.
    The result must be antisymmetric (T^t = -T in mode coordinates) and must
    annihilate h.
    """
    v11, v12 = v.block(1, 1), v.block(1, 2)
    v21, v22 = v.block(2, 1), v.block(2, 2)
    term1 = v21 @ pinv_on_range(v11, tol)
    coker = cokernel_basis(v11, tol)
    term2 = (pinv_on_range(v22, tol).conj().T @ v12.conj().T
             @ orthoprojection(coker))
    t = term1 - term2
    scale = max(1.0, hs_norm(t))
    anti = hs_norm(t + t.T)
    if anti > check_tol * scale:
        raise AntisymmetryViolation(
            f"T antisymmetry defect {anti:.3e} exceeds {check_tol:.1e}")
    if h is not None and h.dim > 0:
        nc = v.codomain.n_modes
        on_h = hs_norm(t @ h.frame[:nc])
        if on_h > check_tol * scale:
            raise AntisymmetryViolation(
                f"T does not annihilate h (defect {on_h:.3e})")
    return t


def full_t_matrix(t: np.ndarray, space: SelfDualSpace) -> np.ndarray:
    """Embed the n x n block as the (2,1) block of an operator on the space."""
    full = np.zeros((space.dim, space.dim), dtype=complex)
    n = space.n_modes
    full[n:, :n] = t
    return full


def compute_p(h: Subspace, t: np.ndarray,
              check_tol: float = CHECK_TOL,
              recovery_tol: float = RECOVERY_TOL) -> np.ndarray:
    """Basis projection P from the pair (h, T).

    P = (P1 + T)(P1 + T*T)^{-1}(P1 + T*) - [h] + [h*].  Self-checks: P is an
    orthogonal projection, J P J = 1 - P, and (h, T) are recovered from P as
    ker P11 and P21 P11^{-1}.
    """
    space = h.space
    p1 = space.p1()
    tf = full_t_matrix(t, space)
    middle = pinv_on_range(p1 + tf.conj().T @ tf)
    p = ((p1 + tf) @ middle @ (p1 + tf.conj().T)
         - h.projector() + h.conjugate().projector())

    idem = hs_norm(p @ p - p)
    herm = hs_norm(p - p.conj().T)
    comp = hs_norm(space.swap() @ np.conj(p) @ space.swap()
                   - (np.eye(space.dim) - p))
    if max(idem, herm, comp) > check_tol:
        raise RecoveryMismatch(
            f"P self-check failed: idempotency {idem:.3e}, "
            f"hermiticity {herm:.3e}, complement {comp:.3e}")

    n = space.n_modes
    p11, p21 = p[:n, :n], p[n:, :n]
    ker_p11 = kernel_basis(p11)
    if ker_p11.shape[1] != h.dim:
        raise RecoveryMismatch(
            f"dim ker P11 = {ker_p11.shape[1]} != dim h = {h.dim}")
    if h.dim > 0:
        proj_gap = hs_norm(orthoprojection(ker_p11)
                           - orthoprojection(h.frame[:n]))
        if proj_gap > recovery_tol:
            raise RecoveryMismatch(f"h recovery defect {proj_gap:.3e}")
    t_back = p21 @ pinv_on_range(p11)
    if hs_norm(t_back - t) > recovery_tol * max(1.0, hs_norm(t)):
        raise RecoveryMismatch(
            f"T recovery defect {hs_norm(t_back - t):.3e}")
    return p


def compute_k(v: BlockOperator, p: np.ndarray,
              index: int, tol: float | None = None) -> Subspace:
    """k = P(ker V*); its dimension must equal IND(V)/2."""
    ker_vstar = kernel_basis(v.adjoint().matrix, tol)
    if ker_vstar.shape[1] == 0:
        return Subspace.empty(v.codomain)
    frame = orthonormal_range(p @ ker_vstar, tol)
    k = Subspace(v.codomain, frame)
    if k.dim != index // 2:
        raise DimensionMismatch(
            f"dim k = {k.dim} != IND V / 2 = {index // 2}")
    return k


def statistics_dimension(index: int) -> int:
    """d = 2^{IND V / 2} for the fermionic sector."""
    return 2 ** (index // 2)


@dataclass(frozen=True)
class CarChargeData:
    """Everything the charge analysis derives from a semigroup member."""

    v: BlockOperator
    membership: CarMembership
    h: Subspace
    t: np.ndarray
    p: np.ndarray
    k: Subspace
    index: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def statistics_dimension(self) -> int:
        return statistics_dimension(self.index)


def car_charge_data(v: BlockOperator, tol: float = ISO_TOL,
                    declared_index: int | None = None) -> CarChargeData:
    """Full pipeline: membership, h, T, P, k, with all self-checks."""
    membership = require_car_member(v, tol, declared_index)
    assert membership.index is not None
    h = compute_h(v)
    t = compute_t(v, h)
    p = compute_p(h, t)
    k = compute_k(v, p, membership.index)
    diagnostics = {
        "isometry_defect": membership.isometry_defect,
        "selfdual_defect": membership.selfdual_defect,
        "hs_defect": membership.hs_defect,
        "t_norm": float(np.linalg.norm(t, 2)) if t.size else 0.0,
        "t_antisymmetry": hs_norm(t + t.T),
    }
    return CarChargeData(v, membership, h, t, p, k, membership.index,
                         diagnostics)


def z2_index(v: BlockOperator, tol: float | None = None) -> int:
    """(-1)^{dim ker V11}; defined only when IND V = 0."""
    rec = require_car_member(v)
    if rec.index != 0:
        raise NonzeroIndex(f"Z2 index needs IND V = 0, got {rec.index}")
    dim_ker = kernel_basis(v.block(1, 1), tol).shape[1]
    return -1 if dim_ker % 2 else 1


@dataclass(frozen=True)
class U1ChargeRecord:
    """Kernel-count index of the charge-+ block plus the det_h audit.

    At a square truncation the kernel-count difference is forced to zero
    (square matrices have equal kernel and cokernel dimensions), so the record
    carries the independently computed charge of h under the grading and flags
    which sign convention, if any, relates the two.  `gauge_commutes` reports
    whether V actually intertwines the U(1) action; when it does not, the
    index and the h-charge measure different things and no convention applies.
    """

    kernel_index: int
    h_charge: int
    h_charge_residual: float
    matches_plus: bool
    matches_minus: bool
    gauge_commutes: bool
    commutator_norm: float


def u1_charge(v: BlockOperator, charges: np.ndarray,
              charge_data: CarChargeData | None = None,
              tol: float = CHECK_TOL) -> U1ChargeRecord:
    """U(1) charge data for a square member whose V11 is grading-diagonal."""
    rec = require_car_member(v)
    if rec.index != 0:
        raise NonzeroIndex(f"u1 charge needs IND V = 0, got {rec.index}")
    q = np.asarray(charges, dtype=int)
    n = v.codomain.n_modes
    if q.shape != (n,) or not np.all(np.abs(q) == 1):
        raise NotChargeDiagonal("charges must be +-1 per mode")
    v11 = v.block(1, 1)
    grading = np.diag(q.astype(float))
    offdiag = hs_norm(v11 @ grading - grading @ v11)
    if offdiag > tol * max(1.0, hs_norm(v11)):
        raise NotChargeDiagonal(
            f"V11 grading commutator {offdiag:.3e} exceeds {tol:.1e}")

    plus = np.where(q == 1)[0]
    vpp = v11[np.ix_(plus, plus)]
    dim_ker = kernel_basis(vpp).shape[1]
    dim_coker = cokernel_basis(vpp).shape[1]
    kernel_index = dim_coker - dim_ker

    if charge_data is None:
        charge_data = car_charge_data(v)
    hf = charge_data.h.frame[:n]
    raw = float(np.real(np.trace(hf.conj().T @ grading @ hf)))
    h_charge = int(round(raw))
    residual = abs(raw - h_charge)

    q_ext = np.diag(np.concatenate([q, -q]).astype(float))
    comm = hs_norm(v.matrix @ q_ext - q_ext @ v.matrix)
    return U1ChargeRecord(
        kernel_index=kernel_index,
        h_charge=h_charge,
        h_charge_residual=residual,
        matches_plus=kernel_index == h_charge,
        matches_minus=kernel_index == -h_charge,
        gauge_commutes=comm <= tol * max(1.0, hs_norm(v.matrix)),
        commutator_norm=comm,
    )


def extend_gauge(u11: np.ndarray, space: SelfDualSpace) -> np.ndarray:
    """Extend a unitary on K1 modes to u + conj(u) on the self-dual space."""
    n = space.n_modes
    if u11.shape != (n, n):
        raise DimensionMismatch(f"u11 shape {u11.shape} != ({n}, {n})")
    full = np.zeros((space.dim, space.dim), dtype=complex)
    full[:n, :n] = u11
    full[n:, n:] = np.conj(u11)
    return full


def restrict_gauge(u11: np.ndarray, n_sub: int,
                   tol: float = CHECK_TOL) -> np.ndarray:
    """Compress a codomain gauge unitary to the domain mode prefix."""
    sub = u11[:n_sub, :n_sub]
    leak = hs_norm(u11[n_sub:, :n_sub])
    if leak > tol * max(1.0, hs_norm(u11)):
        raise NotChargeDiagonal(
            f"gauge action leaks out of the domain prefix ({leak:.3e})")
    return sub


@dataclass(frozen=True)
class GaugeCommutationReport:
    """Commutator norms showing gauge compatibility propagating to (T, P, h, k)."""

    v_commutator: float
    t_commutator: float
    p_commutator: float
    h_invariance: float
    k_invariance: float
    propagation_constant: float


def gauge_commutation_report(data: CarChargeData,
                             u11: np.ndarray) -> GaugeCommutationReport:
    """Measure ||[V,U]|| and the induced defects on T, P, h and k."""
    v = data.v
    u_cod = extend_gauge(u11, v.codomain)
    u_dom = extend_gauge(restrict_gauge(u11, v.domain.n_modes, tol=np.inf),
                         v.domain)
    comm_v = hs_norm(u_cod @ v.matrix - v.matrix @ u_dom)
    tf = full_t_matrix(data.t, v.codomain)
    comm_t = hs_norm(u_cod @ tf - tf @ u_cod)
    comm_p = hs_norm(u_cod @ data.p - data.p @ u_cod)
    eye = np.eye(v.codomain.dim)
    ph = data.h.projector()
    pk = data.k.projector()
    h_inv = hs_norm((eye - ph) @ u_cod @ ph)
    k_inv = hs_norm((eye - pk) @ u_cod @ pk)
    worst = max(comm_t, comm_p, h_inv, k_inv)
    const = worst / comm_v if comm_v > 1e-14 else 0.0
    return GaugeCommutationReport(comm_v, comm_t, comm_p, h_inv, k_inv, const)
