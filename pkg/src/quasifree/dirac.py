"""Localized chiral isometry on the circle, in a truncated Fourier basis.

The model lives on L^2 of the unit circle with orthonormal Fourier modes
e_n(z) = z^n (normalized arc-length measure, recorded here as the chosen
convention).  The half-circle arc A = {e^{i lam}: pi/2 <= lam <= 3 pi/2}
carries the localized orthonormal family

    f_m(z) = sqrt(2) (-1)^m z^{2m} on A, 0 elsewhere,

whose Fourier coefficients <e_n, f_m> have the closed form implemented in
`overlap` (independent quadrature oracle in the tests).  The localized
isometry is

    v = 1 + sum_{m=0}^{m_loc - 1} (f_{m+1} - f_m) <f_m, .>,

which shifts f_m -> f_{m+1} for 0 <= m < m_loc, acts as the identity on
functions supported off A, and has one cokernel direction (index 1).  All
continuum objects enter only through the analytic overlap table; everything
else is finite linear algebra on the mode window |n| <= W.

Truncating the m-sum leaves an exact seam: the pair (f_{m_loc-1}, f_{m_loc})
is mapped onto the single direction f_{m_loc}, so the full operator-norm
defect ||v*v - 1|| stays O(1) no matter the window.  Isometry quality is
therefore reported on a probe family (local modes |m| <= m_loc/2 plus
off-arc probes), where it decays with W; the full seam-dominated defect is
reported separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NoCommonPhase,
    NonMonotone,
    UnstableIndex,
    WindowTooSmall,
)
from .selfdual import BlockOperator, SelfDualSpace

DEFAULT_CUTOFFS = (64, 128, 256, 512)
SQRT2 = math.sqrt(2.0)


def cayley(x: float) -> complex:
    """The arc parametrization x -> (x - i)/(x + i) from the real line."""
    return (x - 1j) / (x + 1j)


def cayley_inverse(w: complex) -> complex:
    return 1j * (1.0 + w) / (1.0 - w)


def cayley_audit(grid: int = 257) -> dict:
    """Check the arc map: unimodular on the reals, endpoints, arc preimage."""
    xs = np.linspace(-50.0, 50.0, grid)
    values = np.array([cayley(x) for x in xs])
    unimodular_dev = float(np.max(np.abs(np.abs(values) - 1.0)))
    lam = np.linspace(math.pi / 2 + 1e-9, 3 * math.pi / 2 - 1e-9, grid)
    pre = np.array([cayley_inverse(np.exp(1j * t)) for t in lam])
    preimage_real = float(np.max(np.abs(pre.imag)))
    preimage_in_interval = bool(np.all((pre.real >= -1 - 1e-9)
                                       & (pre.real <= 1 + 1e-9)))
    return {
        "at_zero": cayley(0.0),
        "at_one": cayley(1.0),
        "at_minus_one": cayley(-1.0),
        "unimodular_deviation": unimodular_dev,
        "preimage_imag_max": preimage_real,
        "preimage_in_interval": preimage_in_interval,
    }


def overlap(m: int, n: int) -> float:
    """Fourier coefficient <e_n, f_m> of the localized mode f_m (closed form).

    With d = 2m - n: sqrt(2)(-1)^m / 2 at d = 0; zero for even d != 0; and
    -sqrt(2)(-1)^m sin(d pi/2) / (pi d) for odd d.
    """
    d = 2 * m - n
    sign_m = -1.0 if m % 2 else 1.0
    if d == 0:
        return SQRT2 * sign_m / 2.0
    if d % 2 == 0:
        return 0.0
    sin_half = 1.0 if d % 4 == 1 else -1.0
    return -SQRT2 * sign_m * sin_half / (math.pi * d)


def overlap_quadrature(m: int, n: int, order: int = 400) -> complex:
    """Gauss-Legendre evaluation of the defining integral (oracle only)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo, hi = math.pi / 2, 3 * math.pi / 2
    lam = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    vals = SQRT2 * (-1.0) ** m * np.exp(1j * (2 * m - n) * lam)
    return complex(np.sum(weights * vals) * 0.5 * (hi - lo) / (2 * math.pi))


def local_mode_table(w: int, m_values) -> np.ndarray:
    """Columns <e_n, f_m> for n in [-w, w], one column per requested m."""
    n = np.arange(-w, w + 1)
    cols = []
    for m in m_values:
        d = 2 * m - n
        sign_m = -1.0 if m % 2 else 1.0
        odd = d % 2 != 0
        sin_half = np.where(d % 4 == 1, 1.0, -1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            odd_vals = -SQRT2 * sign_m * sin_half / (math.pi * d)
        col = np.where(d == 0, SQRT2 * sign_m / 2.0,
                       np.where(odd, odd_vals, 0.0))
        cols.append(col)
    return np.asarray(cols, dtype=complex).T


def complement_probe(w: int, k: int) -> np.ndarray:
    """Fourier coefficients of e_k restricted to the complementary arc."""
    n = np.arange(-w, w + 1)
    d = k - n
    odd = d % 2 != 0
    sin_half = np.where(d % 4 == 1, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        odd_vals = sin_half / (math.pi * d)
    return np.where(d == 0, 0.5, np.where(odd, odd_vals, 0.0)).astype(complex)


@dataclass(frozen=True)
class CircleWindow:
    """Mode window |n| <= w with the local-mode overlap table."""

    w: int
    m_loc: int
    f_table: np.ndarray = field(repr=False)
    m_values: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, w: int, m_loc: int | None = None) -> "CircleWindow":
        if m_loc is None:
            m_loc = w // 4
        if m_loc < 2 or m_loc > w // 4:
            raise WindowTooSmall(
                f"need 2 <= m_loc <= w/4, got m_loc={m_loc}, w={w}")
        m_values = np.arange(-m_loc, m_loc + 1)
        return cls(w, m_loc, local_mode_table(w, m_values), m_values)

    @property
    def dim(self) -> int:
        return 2 * self.w + 1

    def f_column(self, m: int) -> np.ndarray:
        return self.f_table[:, m + self.m_loc]

    def hardy_plus_diag(self) -> np.ndarray:
        return (np.arange(-self.w, self.w + 1) >= 0).astype(float)

    def hardy_minus_diag(self) -> np.ndarray:
        return 1.0 - self.hardy_plus_diag()


@dataclass(frozen=True)
class DiracBuild:
    window: CircleWindow
    matrix: np.ndarray = field(repr=False)
    start_m: int
    diagnostics: dict


def build_v(w: int, m_loc: int | None = None, start_m: int = 0) -> DiracBuild:
    """Window matrix of the localized shift isometry, with diagnostics.

    start_m = 1 gives the robustness variant whose sum omits the m = 0 term
    (f_0 is then fixed); the index is unchanged.
    """
    window = CircleWindow.create(w, m_loc)
    m_loc = window.m_loc
    lower = window.f_table[:, window.m_loc + start_m:
                           window.m_loc + m_loc]      # f_m, start_m <= m < m_loc
    upper = window.f_table[:, window.m_loc + start_m + 1:
                           window.m_loc + m_loc + 1]  # f_{m+1}
    matrix = np.eye(window.dim, dtype=complex) + (upper - lower) @ lower.conj().T

    norms2 = np.einsum("ij,ij->j", window.f_table.conj(),
                       window.f_table).real
    rownorm_dev = float(np.max(np.abs(norms2 - 1.0)))
    gram = window.f_table.conj().T @ window.f_table
    gram_offid = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))

    probes = [window.f_column(m) for m in range(-(m_loc // 2), m_loc // 2 + 1)]
    probes += [complement_probe(w, k) for k in range(-8, 9)]
    vhv = matrix.conj().T @ matrix
    probe_defect = max(
        float(np.linalg.norm(vhv @ p - p)) / float(np.linalg.norm(p))
        for p in probes)
    full_defect = float(np.linalg.norm(vhv - np.eye(window.dim), ord=2))

    shift_overlaps = [
        complex(np.vdot(window.f_column(m + 1), matrix @ window.f_column(m)))
        for m in range(0, m_loc // 2)]
    diagnostics = {
        "w": w,
        "m_loc": m_loc,
        "start_m": start_m,
        "rownorm_deviation": rownorm_dev,
        "rownorm_bound": 4.0 / (math.pi ** 2 * (w / 2.0)),
        "gram_off_identity": gram_offid,
        "probe_isometry_defect": probe_defect,
        "seam_full_defect": full_defect,
        "shift_overlap_min": float(min(z.real for z in shift_overlaps))
        if shift_overlaps else None,
    }
    return DiracBuild(window, matrix, start_m, diagnostics)


@dataclass(frozen=True)
class IndexRecord:
    counts: dict
    value: int
    smallest_singular: dict
    spectral_gap: dict


def index_estimate(cutoffs=(256, 512), m_loc: int | None = None,
                   start_m: int = 0, threshold: float = 0.5) -> IndexRecord:
    """Cokernel count of the window matrix, required stable across cutoffs."""
    counts, smallest, gaps = {}, {}, {}
    for w in cutoffs:
        build = build_v(w, m_loc, start_m=start_m)
        svals = np.linalg.svd(build.matrix, compute_uv=False)
        below = np.sort(svals[svals < threshold])
        counts[w] = int(below.size)
        smallest[w] = float(svals.min())
        above = svals[svals >= threshold]
        gaps[w] = float(above.min() - (below.max() if below.size else 0.0))
    values = sorted(set(counts.values()))
    if len(values) != 1:
        raise UnstableIndex(f"cokernel count varies with cutoff: {counts}")
    return IndexRecord(counts, values[0], smallest, gaps)


def _nested_partial_hs(comm: np.ndarray, w_max: int, cutoffs) -> list[float]:
    ns = np.arange(-w_max, w_max + 1)
    sums = []
    sq = np.abs(comm) ** 2
    for w in cutoffs:
        mask = (np.abs(ns) <= w)
        sub = sq[np.ix_(mask, mask)]
        sums.append(math.sqrt(math.fsum(sub.ravel(order="C").tolist())))
    return sums


def _trend_verdict(cutoffs, partial_norms) -> tuple[str, float, list[float]]:
    increments = [partial_norms[i + 1] - partial_norms[i]
                  for i in range(len(partial_norms) - 1)]
    if any(inc <= 0 for inc in increments):
        raise NonMonotone(
            f"partial Hilbert-Schmidt sums are not increasing: {partial_norms}")
    if len(increments) < 2:
        # A single increment cannot support a log-log fit.
        return "inconclusive", math.nan, increments
    slope = float(np.polyfit(np.log(np.asarray(cutoffs[1:], dtype=float)),
                             np.log(np.asarray(increments)), 1)[0])
    decreasing = all(increments[i + 1] < increments[i]
                     for i in range(len(increments) - 1))
    verdict = ("consistent-with-HS"
               if decreasing and slope < -0.5 else "not-summable-trend")
    return verdict, slope, increments


@dataclass(frozen=True)
class HsStudy:
    cutoffs: tuple
    partial_norms: dict
    increments: dict
    slopes: dict
    verdicts: dict


def hs_commutator_study(cutoffs=DEFAULT_CUTOFFS,
                        build: DiracBuild | None = None) -> HsStudy:
    """Nested partial HS norms of the Hardy-projection commutators.

    One matrix is built at the largest cutoff; partial sums over nested
    windows are the partial sums of one fixed doubly-infinite array, so they
    increase and their increments must decay summably for an HS operator.
    """
    cutoffs = tuple(sorted(cutoffs))
    w_max = cutoffs[-1]
    if build is None:
        build = build_v(w_max)
    elif build.window.w != w_max:
        raise WindowTooSmall("supplied build does not match the largest cutoff")
    theta = build.window.hardy_plus_diag()
    partials, increments, slopes, verdicts = {}, {}, {}, {}
    for tag, diag in (("plus", theta), ("minus", 1.0 - theta)):
        comm = diag[:, None] * build.matrix - build.matrix * diag[None, :]
        sums = _nested_partial_hs(comm, w_max, cutoffs)
        verdict, slope, incs = _trend_verdict(cutoffs, sums)
        partials[tag] = sums
        increments[tag] = incs
        slopes[tag] = slope
        verdicts[tag] = verdict
    return HsStudy(cutoffs, partials, increments, slopes, verdicts)


def jump_symbol_control_study(cutoffs=DEFAULT_CUTOFFS) -> HsStudy:
    """The same trend detector on a known non-HS case.

    Multiplication by the unimodular symbol with a jump and half-integer
    winding has Fourier coefficients sinc(1/2 - d); its Hardy commutator is
    log-divergent in the HS norm, so the detector must flag it.
    """
    cutoffs = tuple(sorted(cutoffs))
    w_max = cutoffs[-1]
    ns = np.arange(-w_max, w_max + 1)
    d = ns[:, None] - ns[None, :]
    symbol = np.sinc(0.5 - d)
    theta = (ns >= 0).astype(float)
    comm = theta[:, None] * symbol - symbol * theta[None, :]
    sums = _nested_partial_hs(comm, w_max, cutoffs)
    verdict, slope, incs = _trend_verdict(cutoffs, sums)
    return HsStudy(cutoffs, {"plus": sums}, {"plus": incs}, {"plus": slope},
                   {"plus": verdict})


def prop_loc_check(build: DiracBuild, components: dict | None = None,
                   tol: float = 1e-3) -> dict:
    """Least-squares common phase of v on each off-arc component.

    components maps a label to a list of coefficient vectors supported in
    that component; default is the single complementary arc with the
    restricted-exponential family.  Raises NoCommonPhase when even the
    optimal unimodular phase leaves a relative residual above tol.
    """
    if components is None:
        components = {"complement": [complement_probe(build.window.w, k)
                                     for k in range(-8, 9)]}
    out = {}
    for label, probes in components.items():
        overlap_sum = 0.0j
        for g in probes:
            overlap_sum += np.vdot(g, build.matrix @ g)
        tau = overlap_sum / abs(overlap_sum) if abs(overlap_sum) else 1.0 + 0j
        residual = max(
            float(np.linalg.norm(build.matrix @ g - tau * g))
            / float(np.linalg.norm(g)) for g in probes)
        if residual > tol:
            raise NoCommonPhase(
                f"component {label!r}: best phase leaves residual "
                f"{residual:.3e} > {tol:.1e}")
        out[label] = {"tau": complex(tau), "residual": residual}
    return out


def assemble_species(n_species: int, index_v: int = 1) -> dict:
    """Symbolic N-species assembly: block-diagonal copies of v and conj(v).

    The full operator acts as v on each of the N particle species and as
    conj(v) on the conjugate species, so half the index scales by N and the
    statistics dimension is 2^(N index_v / 1) for index_v = 1.
    """
    half_index = n_species * index_v
    return {
        "species": n_species,
        "blocks": ["v"] * n_species + ["conj(v)"] * n_species,
        "half_index": half_index,
        "statistics_dimension": 2 ** half_index,
    }


def dirac_v_member(w: int, m_loc: int | None = None) -> BlockOperator:
    """The window matrix as a self-dual operator v + conj(v).

    Useful for feeding the circle model through the generic pipelines; note
    the window truncation means it only satisfies the isometry law up to the
    documented window defects.
    """
    build = build_v(w, m_loc)
    space = SelfDualSpace(build.window.dim)
    full = np.zeros((2 * space.n_modes, 2 * space.n_modes), dtype=complex)
    full[:space.n_modes, :space.n_modes] = build.matrix
    full[space.n_modes:, space.n_modes:] = np.conj(build.matrix)
    return BlockOperator(full, space, space)
