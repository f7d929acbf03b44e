"""Finite Fock-space oracle for the charge machinery.

Everything here is brute force on purpose: dense/sparse matrices on a finite
Fock space provide an independent check of the single-particle charge data.

Fermionic side (n modes, dimension 2^n, basis = occupation subsets encoded as
bitmasks): creation follows the fixed sign convention

    a*(e_i) |S> = (-1)^{#{j in S : j < i}} |S u {i}>   (0 if i in S).

The self-dual field is pi(f) = a*(P1 f) + a(P1 Jf); second quantization
Gamma(U) acts per particle number through exterior-power determinants; the
Klein twist is theta = (1 - i Gamma(-1)) / sqrt(2) and psi(f) = theta pi(f)
theta*, which commutes with pi(g) whenever <f, g> = <f, Jg> = 0.

Bosonic side (n modes, per-mode occupation cutoff M, dimension (M+1)^n):
truncated creation operators; the CCR hold exactly below the cutoff; Gamma is
available for phase-diagonal gauge actions, which is all the sector checks
need.

Vacua: for fermionic charge data (h, T) the representing vector is

    Omega_P = det(1 + T*T)^{-1/4} psi(h_1) ... psi(h_L) exp(B) Omega,
    B = 1/2 sum_ij conj(t)_ij a*_i a*_j,

and for bosonic data Omega_P = det(1 - T*T)^{+1/4} exp(-B) Omega.  Charged
vectors Omega_alpha apply twisted fields over the k frame (strictly
increasing multi-indices, CAR) or polar isometries of pi(g_j) (non-decreasing
multi-indices, CCR; the monomial route is kept as a cross-check and its
proportionality constant is reported, not assumed).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    CapExceeded,
    CutoffTooSmall,
    ImplementationDefect,
    LevelOutOfRange,
    NotGaugeCompatible,
    OrthonormalityFailure,
)
from .selfdual import BlockOperator, SelfDualSpace, hs_norm

FERMI_DIM_CAP = 4096
BOSE_DIM_CAP = 6561
GAMMA_DIM_CAP = 1024


def car_multi_indices(k_dim: int) -> list[tuple[int, ...]]:
    """Strictly increasing multi-indices over k, grouped by level, lex order."""
    out: list[tuple[int, ...]] = []
    for level in range(k_dim + 1):
        out.extend(itertools.combinations(range(k_dim), level))
    return out


def ccr_multi_indices(k_dim: int, l_max: int) -> list[tuple[int, ...]]:
    """Non-decreasing multi-indices over k up to level l_max, lex order."""
    if l_max < 0:
        raise LevelOutOfRange(f"l_max = {l_max} < 0")
    out: list[tuple[int, ...]] = []
    for level in range(l_max + 1):
        out.extend(itertools.combinations_with_replacement(range(k_dim), level))
    return out


class FermiFock:
    """Fermionic Fock space on n modes with memoized operator tables."""

    def __init__(self, n_modes: int, dim_cap: int = FERMI_DIM_CAP):
        dim = 2 ** n_modes
        if dim > dim_cap:
            raise CapExceeded(
                f"fermionic dimension 2^{n_modes} = {dim} exceeds cap {dim_cap}")
        self.n_modes = n_modes
        self.dim = dim
        self._creation = [self._build_creation(i) for i in range(n_modes)]
        self._annihilation = [m.conj().T.tocsr() for m in self._creation]
        parity = np.array([(-1.0) ** bin(s).count("1") for s in range(dim)])
        self._parity_diag = parity
        self._theta_diag = (1.0 - 1j * parity) / math.sqrt(2.0)

    def _build_creation(self, i: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        bit = 1 << i
        below = bit - 1
        for s in range(self.dim):
            if s & bit:
                continue
            sign = -1.0 if bin(s & below).count("1") % 2 else 1.0
            rows.append(s | bit)
            cols.append(s)
            vals.append(sign)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def creation(self, mode: int) -> sp.csr_matrix:
        return self._creation[mode - 1]

    def annihilation(self, mode: int) -> sp.csr_matrix:
        return self._annihilation[mode - 1]

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def parity(self) -> np.ndarray:
        """Gamma(-1) as a diagonal vector."""
        return self._parity_diag

    def pi(self, space: SelfDualSpace, f: np.ndarray) -> sp.csr_matrix:
        """Self-dual field pi(f) = a*(P1 f) + a(P1 Jf)."""
        if space.n_modes != self.n_modes:
            raise CapExceeded("space does not match this Fock space")
        n = self.n_modes
        op = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i in range(n):
            if f[i] != 0:
                op = op + complex(f[i]) * self._creation[i]
            if f[n + i] != 0:
                op = op + complex(f[n + i]) * self._annihilation[i]
        return op

    def psi(self, space: SelfDualSpace, f: np.ndarray) -> sp.csr_matrix:
        """Twisted field theta pi(f) theta*."""
        op = self.pi(space, f).tocoo()
        vals = (self._theta_diag[op.row] * op.data
                * np.conj(self._theta_diag[op.col]))
        return sp.csr_matrix((vals, (op.row, op.col)),
                             shape=op.shape)

    def theta_matrix(self) -> np.ndarray:
        return np.diag(self._theta_diag)

    def gamma(self, u11: np.ndarray, check_tol: float = 1e-10) -> np.ndarray:
        """Second quantization of a P1-commuting gauge unitary (dense).

        Built from exterior powers: <S'|Gamma(U)|S> = det u11[S', S] for
        |S'| = |S|, zero otherwise.
        """
        n = self.n_modes
        if u11.shape != (n, n):
            raise NotGaugeCompatible(f"u11 shape {u11.shape} != ({n}, {n})")
        if hs_norm(u11.conj().T @ u11 - np.eye(n)) > check_tol:
            raise NotGaugeCompatible("u11 is not unitary")
        if self.dim > GAMMA_DIM_CAP:
            raise CapExceeded(
                f"Gamma on dimension {self.dim} exceeds cap {GAMMA_DIM_CAP}")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        by_count: dict[int, list[int]] = {}
        for s in range(self.dim):
            by_count.setdefault(bin(s).count("1"), []).append(s)
        for count, states in by_count.items():
            if count == 0:
                out[0, 0] = 1.0
                continue
            supports = {s: [i for i in range(n) if s & (1 << i)]
                        for s in states}
            for s_col in states:
                cols = supports[s_col]
                sub = u11[:, cols]
                for s_row in states:
                    out[s_row, s_col] = np.linalg.det(sub[supports[s_row], :])
        return out


class BoseFock:
    """Truncated bosonic Fock space: per-mode occupation cutoff M."""

    def __init__(self, n_modes: int, cutoff: int, dim_cap: int = BOSE_DIM_CAP):
        dim = (cutoff + 1) ** n_modes
        if dim > dim_cap:
            raise CapExceeded(
                f"bosonic dimension {dim} exceeds cap {dim_cap}")
        self.n_modes = n_modes
        self.cutoff = cutoff
        self.dim = dim
        self._radix = cutoff + 1
        self._occupations = np.array(
            [self._decode(s) for s in range(dim)], dtype=int)
        self._creation = [self._build_creation(i) for i in range(n_modes)]
        self._annihilation = [m.conj().T.tocsr() for m in self._creation]

    def _decode(self, state: int) -> list[int]:
        occ = []
        for _ in range(self.n_modes):
            occ.append(state % self._radix)
            state //= self._radix
        return occ

    def state_index(self, occupation) -> int:
        idx = 0
        for i, m in reversed(list(enumerate(occupation))):
            idx = idx * self._radix + int(m)
        return idx

    def _build_creation(self, i: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        step = self._radix ** i
        for s in range(self.dim):
            m = self._occupations[s, i]
            if m < self.cutoff:
                rows.append(s + step)
                cols.append(s)
                vals.append(math.sqrt(m + 1.0))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def creation(self, mode: int) -> sp.csr_matrix:
        return self._creation[mode - 1]

    def annihilation(self, mode: int) -> sp.csr_matrix:
        return self._annihilation[mode - 1]

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def pi(self, space: SelfDualSpace, f: np.ndarray) -> sp.csr_matrix:
        if space.n_modes != self.n_modes:
            raise CapExceeded("space does not match this Fock space")
        n = self.n_modes
        op = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i in range(n):
            if f[i] != 0:
                op = op + complex(f[i]) * self._creation[i]
            if f[n + i] != 0:
                op = op + complex(f[n + i]) * self._annihilation[i]
        return op

    def gamma_phases(self, phases: np.ndarray) -> np.ndarray:
        """Diagonal Gamma(U) for U = diag(e^{i phases}) on the modes."""
        return np.exp(1j * (self._occupations @ np.asarray(phases)))

    def occupation_projector_diag(self, max_per_mode: int) -> np.ndarray:
        """Diagonal 0/1 vector selecting states below an occupation limit."""
        return (self._occupations.max(axis=1) <= max_per_mode).astype(float)


# --- vacua -------------------------------------------------------------------

def _pair_exponent(fock, t_block: np.ndarray) -> sp.csr_matrix:
    """B = 1/2 sum_ij conj(t)_ij a*_i a*_j as a sparse operator."""
    n = fock.n_modes
    op = sp.csr_matrix((fock.dim, fock.dim), dtype=complex)
    tc = np.conj(t_block)
    for j in range(n):
        if not np.any(tc[:, j]):
            continue
        left = sp.csr_matrix((fock.dim, fock.dim), dtype=complex)
        for i in range(n):
            if tc[i, j] != 0:
                left = left + complex(tc[i, j]) * fock._creation[i]
        op = op + 0.5 * (left @ fock._creation[j])
    return op


def _exp_apply(op: sp.csr_matrix, vec: np.ndarray,
               max_terms: int = 200) -> np.ndarray:
    """exp(op) vec by the power series; terminates on vanishing terms."""
    out = vec.astype(complex).copy()
    term = vec.astype(complex).copy()
    for k in range(1, max_terms):
        term = (op @ term) / k
        norm = float(np.linalg.norm(term))
        if norm == 0.0 or norm < 1e-300:
            break
        out += term
        if norm < 1e-18 * max(1.0, float(np.linalg.norm(out))):
            break
    return out


def omega_p_fermi(fock: FermiFock, space: SelfDualSpace, h_frame: np.ndarray,
                  t_block: np.ndarray, check_tol: float = 1e-10) -> np.ndarray:
    """Fermionic representing vacuum for charge data (h, T); unit norm."""
    factor = float(np.linalg.det(
        np.eye(fock.n_modes) + t_block.conj().T @ t_block).real) ** (-0.25)
    vec = _exp_apply(_pair_exponent(fock, t_block), fock.vacuum())
    for col in range(h_frame.shape[1] - 1, -1, -1):
        vec = fock.psi(space, h_frame[:, col]) @ vec
    vec = factor * vec
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > check_tol:
        raise ImplementationDefect(
            f"fermionic vacuum norm {norm:.12f} != 1")
    return vec


def omega_p_bose(fock: BoseFock, space: SelfDualSpace, t_block: np.ndarray,
                 tail_cap: float | None = None) -> tuple[np.ndarray, float]:
    """Bosonic representing vacuum and its truncation tail 1 - ||.||^2."""
    eye = np.eye(fock.n_modes)
    gram = eye - t_block.conj().T @ t_block
    eigs = np.linalg.eigvalsh(gram)
    if np.min(eigs) <= 0:
        raise CutoffTooSmall("1 - T*T is not positive definite")
    factor = float(np.linalg.det(gram).real) ** 0.25
    vec = factor * _exp_apply(-_pair_exponent(fock, t_block), fock.vacuum())
    tail = max(0.0, 1.0 - float(np.linalg.norm(vec)) ** 2)
    if tail_cap is not None and tail > tail_cap:
        raise CutoffTooSmall(
            f"vacuum tail {tail:.3e} exceeds cap {tail_cap:.1e}; raise the cutoff")
    return vec, tail


def polar_isometry(matrix: np.ndarray) -> np.ndarray:
    """Unitary polar factor via SVD (deterministic completion on kernels)."""
    u, _, vh = np.linalg.svd(matrix)
    return u @ vh


def omega_alphas_fermi(fock: FermiFock, space: SelfDualSpace,
                       omega_p: np.ndarray, k_frame: np.ndarray,
                       check_tol: float = 1e-10
                       ) -> tuple[list[tuple[int, ...]], list[np.ndarray]]:
    """Charged vectors over strictly increasing multi-indices; orthonormal."""
    alphas = car_multi_indices(k_frame.shape[1])
    psis = [fock.psi(space, k_frame[:, j]) for j in range(k_frame.shape[1])]
    vectors = []
    for alpha in alphas:
        vec = omega_p.copy()
        for j in reversed(alpha):
            vec = psis[j] @ vec
        vectors.append(vec)
    gram = np.array([[np.vdot(a, b) for b in vectors] for a in vectors])
    defect = float(np.max(np.abs(gram - np.eye(len(vectors)))))
    if defect > check_tol:
        raise OrthonormalityFailure(
            f"fermionic Omega_alpha Gram defect {defect:.3e}")
    return alphas, vectors


def omega_alphas_bose(fock: BoseFock, space: SelfDualSpace,
                      omega_p: np.ndarray, k_frame: np.ndarray, l_max: int,
                      t_block: np.ndarray
                      ) -> tuple[list[tuple[int, ...]], list[np.ndarray],
                                 list[dict]]:
    """Charged vectors via polar isometries, plus the monomial cross-check.

    Returns (alphas, vectors, route_records); each record carries the
    numerically determined proportionality constant between the polar-isometry
    route and the normalized pi-monomial route, and their angular defect.
    """
    k_dim = k_frame.shape[1]
    alphas = ccr_multi_indices(k_dim, l_max)
    isoms = [polar_isometry(fock.pi(space, k_frame[:, j]).toarray())
             for j in range(k_dim)]
    pis = [fock.pi(space, k_frame[:, j]) for j in range(k_dim)]
    pair = _exp_apply(-_pair_exponent(fock, t_block), fock.vacuum())
    vectors, records = [], []
    for alpha in alphas:
        vec = omega_p.copy()
        for j in reversed(alpha):
            vec = isoms[j] @ vec
        vectors.append(vec)
        raw = pair.copy()
        for j in reversed(alpha):
            raw = pis[j] @ raw
        raw_norm = float(np.linalg.norm(raw))
        if raw_norm > 0:
            const = complex(np.vdot(vec, raw))
            defect = float(np.linalg.norm(raw - const * vec)) / raw_norm
        else:
            const, defect = 0.0j, math.inf
        records.append({"alpha": alpha, "constant": const,
                        "angular_defect": defect})
    return alphas, vectors, records


# --- implementers -------------------------------------------------------------

@dataclass(frozen=True)
class ImplementerSet:
    """Isometries solving Psi_alpha pi(a) Omega = pi(rho_V(a)) Omega_alpha."""

    alphas: list
    psis: list
    intertwining_residual: float
    isometry_residual: float
    completeness_residual: float | None
    implementation_residual: float | None
    diagnostics: dict = field(default_factory=dict)


def car_implementers(v: BlockOperator, fock_dom: FermiFock,
                     fock_cod: FermiFock, omega_alphas: list[np.ndarray],
                     alphas: list[tuple[int, ...]],
                     check_tol: float = 1e-10) -> ImplementerSet:
    """Solve for the fermionic implementers and verify all their relations."""
    nd = fock_dom.n_modes
    pi_v = [fock_cod.pi(v.codomain, v.matrix[:, i]) for i in range(nd)]
    psis = []
    for omega in omega_alphas:
        cols = np.zeros((fock_cod.dim, fock_dom.dim), dtype=complex)
        cols[:, 0] = omega
        for s in range(1, fock_dom.dim):
            low = (s & -s).bit_length() - 1
            cols[:, s] = pi_v[low] @ cols[:, s ^ (1 << low)]
        psis.append(cols)

    inter = 0.0
    impl = 0.0
    for idx in range(v.domain.dim):
        f = np.zeros(v.domain.dim, dtype=complex)
        f[idx] = 1.0
        pi_d = fock_dom.pi(v.domain, f).toarray()
        pi_c = fock_cod.pi(v.codomain, v.matrix @ f).toarray()
        total = np.zeros((fock_cod.dim, fock_cod.dim), dtype=complex)
        for psi in psis:
            inter = max(inter, hs_norm(psi @ pi_d - pi_c @ psi))
            total += psi @ pi_d @ psi.conj().T
        impl = max(impl, hs_norm(total - pi_c))

    iso = 0.0
    for a, pa in enumerate(psis):
        for b, pb in enumerate(psis):
            gram = pa.conj().T @ pb
            target = np.eye(fock_dom.dim) if a == b else 0.0
            iso = max(iso, float(np.max(np.abs(gram - target))))
    comp = hs_norm(sum(p @ p.conj().T for p in psis)
                   - np.eye(fock_cod.dim))

    result = ImplementerSet(alphas, psis, inter, iso, comp, impl)
    worst = max(inter, iso, comp, impl)
    if worst > check_tol:
        raise ImplementationDefect(
            f"implementer relations violated: intertwining {inter:.3e}, "
            f"isometry {iso:.3e}, completeness {comp:.3e}, sum formula {impl:.3e}")
    return result


def bose_implementer(v: BlockOperator, fock_dom: BoseFock, fock_cod: BoseFock,
                     omega_alpha: np.ndarray, occ_probe: int
                     ) -> tuple[np.ndarray, float, float]:
    """One bosonic implementer column set, with truncation-aware residuals.

    The intertwining gap is measured on matrix elements between states with
    per-mode occupation <= occ_probe on both sides; entries near the cutoff
    only carry truncation noise.  The isometry defect is the Gram deviation of
    the probe-window columns (full rows kept, since the columns have genuine
    high-occupation weight); it converges to zero as the cutoff grows and is
    reported as a cutoff-limited diagnostic rather than asserted exactly.
    """
    nd = fock_dom.n_modes
    pi_v = [fock_cod.pi(v.codomain, v.matrix[:, i]) for i in range(nd)]
    psi = np.zeros((fock_cod.dim, fock_dom.dim), dtype=complex)
    psi[:, 0] = omega_alpha
    for s in range(1, fock_dom.dim):
        occ = fock_dom._occupations[s]
        i = int(np.argmax(occ > 0))
        prev = s - fock_dom._radix ** i
        psi[:, s] = (pi_v[i] @ psi[:, prev]) / math.sqrt(occ[i])

    low_d = fock_dom.occupation_projector_diag(occ_probe)
    low_c = fock_cod.occupation_projector_diag(occ_probe)
    inter = 0.0
    for idx in range(v.domain.dim):
        f = np.zeros(v.domain.dim, dtype=complex)
        f[idx] = 1.0
        pi_d = fock_dom.pi(v.domain, f).toarray()
        pi_c = fock_cod.pi(v.codomain, v.matrix @ f).toarray()
        gap = (psi @ pi_d - pi_c @ psi) * low_c[:, None] * low_d[None, :]
        inter = max(inter, float(np.max(np.abs(gap))))
    gram = psi.conj().T @ psi - np.eye(fock_dom.dim)
    gram = gram * low_d[None, :] * low_d[:, None]
    iso = float(np.max(np.abs(gram)))
    return psi, inter, iso


# --- charge representation matrices -------------------------------------------

def charge_rep_blocks(omega_alphas: list[np.ndarray],
                      alphas: list[tuple[int, ...]],
                      gamma_action) -> dict[int, np.ndarray]:
    """Blocks M_l[a, b] = <Omega_a, Gamma(U) Omega_b> per level l.

    gamma_action is either a dense matrix or a callable applying Gamma(U).
    """
    if callable(gamma_action):
        transformed = [gamma_action(vec) for vec in omega_alphas]
    else:
        transformed = [gamma_action @ vec for vec in omega_alphas]
    blocks: dict[int, np.ndarray] = {}
    levels = sorted({len(a) for a in alphas})
    for level in levels:
        idx = [i for i, a in enumerate(alphas) if len(a) == level]
        m = np.array([[np.vdot(omega_alphas[i], transformed[j])
                       for j in idx] for i in idx])
        blocks[level] = m
    return blocks


def compound_matrix(matrix: np.ndarray, level: int) -> np.ndarray:
    """Exterior-power (compound) matrix in lexicographic combination order."""
    n = matrix.shape[0]
    if level == 0:
        return np.ones((1, 1), dtype=complex)
    combs = list(itertools.combinations(range(n), level))
    out = np.zeros((len(combs), len(combs)), dtype=complex)
    for a, rows in enumerate(combs):
        for b, cols in enumerate(combs):
            out[a, b] = np.linalg.det(matrix[np.ix_(rows, cols)])
    return out


def span_invariance_residual(vectors: list[np.ndarray],
                             gamma_action) -> float:
    """Largest distance of Gamma(U) Omega_alpha from span{Omega_beta}."""
    q = np.column_stack(vectors)
    resid = 0.0
    for vec in vectors:
        img = gamma_action @ vec if not callable(gamma_action) else gamma_action(vec)
        gap = img - q @ (q.conj().T @ img)
        resid = max(resid, float(np.linalg.norm(gap)))
    return resid


def implementer_invariance_residual(psis: list[np.ndarray],
                                    gamma_cod: np.ndarray,
                                    gamma_dom: np.ndarray) -> float:
    """Largest HS distance of Gamma Psi Gamma* from span{Psi_beta}."""
    dim_d = psis[0].shape[1]
    resid = 0.0
    for psi in psis:
        img = gamma_cod @ psi @ gamma_dom.conj().T
        proj = np.zeros_like(img)
        for basis in psis:
            proj += (np.trace(basis.conj().T @ img) / dim_d) * basis
        resid = max(resid, hs_norm(img - proj) / max(hs_norm(img), 1e-300))
    return resid
