"""Character-level bookkeeping for gauge sectors.

Given charge data (the defect space h and the charge space k), a gauge group
acting on the particle modes decomposes the charged-vector span into levels.
The level-l character is det(U|h) * e_l(eigs of U|k) in the fermionic case
and h_l(eigs of U|k) in the bosonic case (elementary vs complete homogeneous
symmetric polynomials).  This module evaluates those characters on element
samples, groups levels into equivalence classes by sampled character equality,
and compares against brute-force Fock blocks.

Sampling is deterministic: a seeded QR-based Haar draw for matrix groups, the
full group for the two-element group, and a uniform angle grid for the circle
group.  Sector equivalence is certified only on the sample; the sample size
and seed are recorded in the table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    CharacterMismatch,
    LevelOutOfRange,
    MalformedInput,
    NotInvariant,
)
from .selfdual import SelfDualSpace, hs_norm

CHAR_TOL = 1e-9
COMPRESS_TOL = 1e-8


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with the R-diagonal phase fix."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class GaugeElement:
    label: str
    u11: np.ndarray


@dataclass(frozen=True)
class GaugeAction:
    """A compact gauge group acting unitarily on the particle modes.

    kind "u1" uses integer mode charges; "un"/"sun" act by the defining
    representation on a species index (modes ordered site-major, species
    fastest); "z2" is {1, -1}; "custom" takes an explicit unitary list.
    """

    kind: str
    n_modes: int
    charges: tuple = ()
    species: int = 0
    unitaries: tuple = ()

    def __post_init__(self):
        if self.kind == "u1" and len(self.charges) != self.n_modes:
            raise MalformedInput("u1 action needs one integer charge per mode")
        if self.kind in ("un", "sun"):
            if self.species < 1 or self.n_modes % self.species:
                raise MalformedInput(
                    f"species {self.species} does not divide {self.n_modes} modes")
        if self.kind == "custom" and not self.unitaries:
            raise MalformedInput("custom action needs at least one unitary")
        if self.kind not in ("u1", "un", "sun", "z2", "custom"):
            raise MalformedInput(f"unknown gauge kind {self.kind!r}")

    def elements(self, samples: int = 50, seed: int = 0) -> list[GaugeElement]:
        n = self.n_modes
        if self.kind == "z2":
            return [GaugeElement("+1", np.eye(n, dtype=complex)),
                    GaugeElement("-1", -np.eye(n, dtype=complex))]
        if self.kind == "u1":
            out = []
            for j in range(samples):
                lam = 2.0 * math.pi * j / samples
                u = np.diag(np.exp(1j * lam * np.asarray(self.charges)))
                out.append(GaugeElement(f"lambda={lam:.6f}", u))
            return out
        if self.kind == "custom":
            return [GaugeElement(f"custom[{i}]", np.asarray(u, dtype=complex))
                    for i, u in enumerate(self.unitaries)]
        rng = np.random.default_rng(seed)
        sites = n // self.species
        out = []
        for j in range(samples):
            u = haar_unitary(self.species, rng)
            if self.kind == "sun":
                u = u / np.linalg.det(u) ** (1.0 / self.species)
            out.append(GaugeElement(f"haar[{j}]",
                                    np.kron(np.eye(sites), u)))
        return out


def compressed_action(u11: np.ndarray, frame: np.ndarray,
                      space: SelfDualSpace,
                      tol: float = COMPRESS_TOL) -> np.ndarray:
    """Compress the extended gauge unitary u + conj(u) to a self-dual frame.

    The frame columns must span an invariant subspace; the leakage
    ||U frame - frame (frame* U frame)|| above tol raises NotInvariant.
    """
    if frame.shape[1] == 0:
        return np.zeros((0, 0), dtype=complex)
    n = space.n_modes
    u_ext = np.zeros((2 * n, 2 * n), dtype=complex)
    u_ext[:n, :n] = u11
    u_ext[n:, n:] = np.conj(u11)
    moved = u_ext @ frame
    comp = frame.conj().T @ moved
    leak = float(np.linalg.norm(moved - frame @ comp))
    if leak > tol:
        raise NotInvariant(
            f"gauge element moves the subspace: leakage {leak:.3e}")
    return comp


def eigenphases(compressed: np.ndarray,
                tol: float = COMPRESS_TOL) -> np.ndarray:
    """Eigenvalues of a compressed gauge element via Schur decomposition."""
    if compressed.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    t, _ = scipy.linalg.schur(compressed, output="complex")
    off = hs_norm(t - np.diag(np.diagonal(t)))
    if off > tol:
        raise NotInvariant(
            f"compressed action is not normal (defect {off:.3e}); "
            "the subspace is not honestly invariant")
    return np.diagonal(t).copy()


def char_det_h(u11: np.ndarray, h_frame: np.ndarray, space: SelfDualSpace,
               tol: float = COMPRESS_TOL) -> complex:
    """Determinant character on the defect space h (1 when h is empty)."""
    comp = compressed_action(u11, h_frame, space, tol)
    if comp.shape[0] == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(comp))


def char_lambda(eigs: np.ndarray, level: int) -> complex:
    """Elementary symmetric polynomial e_l: the antisymmetric-power character."""
    if level < 0 or level > len(eigs):
        raise LevelOutOfRange(
            f"level {level} outside 0..{len(eigs)}")
    if level == 0:
        return 1.0 + 0.0j
    total = 0.0j
    for combo in itertools.combinations(range(len(eigs)), level):
        total += math.prod((eigs[i] for i in combo), start=1.0 + 0.0j)
    return total


def char_sym(eigs: np.ndarray, level: int) -> complex:
    """Complete homogeneous polynomial h_l: the symmetric-power character."""
    if level < 0:
        raise LevelOutOfRange(f"level {level} < 0")
    if level == 0:
        return 1.0 + 0.0j
    total = 0.0j
    for combo in itertools.combinations_with_replacement(range(len(eigs)),
                                                         level):
        total += math.prod((eigs[i] for i in combo), start=1.0 + 0.0j)
    return total


@dataclass(frozen=True)
class SectorRow:
    level: int
    dimension: int
    characters: np.ndarray  # one sample per gauge element


@dataclass(frozen=True)
class SectorTable:
    algebra: str
    rows: list
    element_labels: list
    equivalence_classes: list
    annotations: dict = field(default_factory=dict)
    sample_meta: dict = field(default_factory=dict)


def _equivalence_classes(rows: list[SectorRow],
                         tol_char: float) -> list[list[int]]:
    classes: list[list[int]] = []
    for row in rows:
        for cls in classes:
            rep = rows[cls[0]]
            if np.max(np.abs(row.characters - rep.characters)) <= tol_char:
                cls.append(row.level)
                break
        else:
            classes.append([row.level])
    return classes


def sector_table(algebra: str, space: SelfDualSpace, h_frame: np.ndarray,
                 k_frame: np.ndarray, gauge: GaugeAction, samples: int = 50,
                 seed: int = 0, l_max: int | None = None,
                 tol: float = COMPRESS_TOL,
                 tol_char: float = CHAR_TOL) -> SectorTable:
    """Sampled character table over charge levels, with equivalence classes."""
    if algebra not in ("car", "ccr"):
        raise MalformedInput(f"unknown algebra {algebra!r}")
    elements = gauge.elements(samples=samples, seed=seed)
    k_dim = k_frame.shape[1]
    if algebra == "car":
        levels = list(range(k_dim + 1))
    else:
        levels = list(range((5 if l_max is None else l_max) + 1))

    dets = np.array([char_det_h(el.u11, h_frame, space, tol)
                     for el in elements])
    eig_list = [eigenphases(compressed_action(el.u11, k_frame, space, tol),
                            tol) for el in elements]

    rows = []
    for level in levels:
        if algebra == "car":
            dim = math.comb(k_dim, level)
            chars = dets * np.array([char_lambda(e, level) for e in eig_list])
        else:
            dim = math.comb(k_dim + level - 1, level) if k_dim else int(level == 0)
            chars = np.array([char_sym(e, level) for e in eig_list])
        rows.append(SectorRow(level, dim, chars))

    classes = _equivalence_classes(rows, tol_char)
    annotations = {}
    if gauge.kind == "un":
        annotations["pattern"] = "defining action: levels mutually inequivalent"
        annotations["verified"] = len(classes) == len(rows)
    elif gauge.kind == "sun":
        nsp = gauge.species
        annotations["pattern"] = (
            f"defining action: level {nsp} rejoins level 0 (period {nsp})")
        merged = any(0 in cls and nsp in cls for cls in classes)
        annotations["verified"] = merged if len(levels) > nsp else None

    meta = {"samples": len(elements), "seed": seed, "kind": gauge.kind,
            "tol_char": tol_char}
    return SectorTable(algebra, rows, [el.label for el in elements],
                       classes, annotations, meta)


def oracle_compare(table: SectorTable, oracle_blocks: list[dict],
                   tol: float = 1e-8, tail: float = 0.0,
                   strict: bool = True) -> dict:
    """Compare sampled characters against per-level Fock blocks by trace.

    oracle_blocks[i][level] is the matrix block for gauge element i.  The
    effective tolerance is tol + tail (tail covers bosonic truncation).
    """
    worst = 0.0
    worst_where = None
    per_level = {}
    for row in table.rows:
        level_worst = 0.0
        for i, blocks in enumerate(oracle_blocks):
            if row.level not in blocks:
                continue
            dev = abs(complex(np.trace(blocks[row.level]))
                      - complex(row.characters[i]))
            if dev > level_worst:
                level_worst = dev
            if dev > worst:
                worst, worst_where = dev, (table.element_labels[i], row.level)
        per_level[row.level] = level_worst
    effective = tol + tail
    report = {"max_deviation": worst, "per_level": per_level,
              "tolerance": effective, "tail": tail,
              "passed": worst <= effective, "worst_at": worst_where}
    if strict and not report["passed"]:
        label, level = worst_where
        raise CharacterMismatch(
            f"character mismatch {worst:.3e} > {effective:.1e} "
            f"at element {label}, level {level}")
    return report
