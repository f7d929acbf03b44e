"""Bosonic Fock oracle: truncated CCR, squeezed vacua, implementers."""

import math

import numpy as np
import pytest

from quasifree import builders
from quasifree.ccr import ccr_charge_data
from quasifree.errors import CapExceeded, CutoffTooSmall
from quasifree.fock import (
    BoseFock,
    bose_implementer,
    ccr_multi_indices,
    charge_rep_blocks,
    omega_alphas_bose,
    omega_p_bose,
    polar_isometry,
)
from quasifree.selfdual import SelfDualSpace, hs_norm


def test_ccr_relations_below_cutoff():
    fock = BoseFock(2, 5)
    low = fock.occupation_projector_diag(4)
    eye = np.eye(fock.dim)
    for i in (1, 2):
        for j in (1, 2):
            comm = (fock.annihilation(i) @ fock.creation(j)
                    - fock.creation(j) @ fock.annihilation(i)).toarray()
            target = eye if i == j else 0.0 * eye
            gap = (comm - target)[:, low > 0]
            assert np.max(np.abs(gap)) < 1e-12


def test_occupation_indexing():
    fock = BoseFock(2, 3)
    vec = fock.creation(2) @ (fock.creation(2) @ (fock.creation(1)
                                                  @ fock.vacuum()))
    # |1, 2> with bosonic normalization sqrt(1! * 2!)
    idx = fock.state_index((1, 2))
    assert vec[idx] == pytest.approx(math.sqrt(2.0))
    assert np.linalg.norm(vec) == pytest.approx(math.sqrt(2.0))


def test_bose_cap():
    with pytest.raises(CapExceeded):
        BoseFock(5, 8)


def test_squeeze_vacuum_amplitude_and_annihilation():
    r = 0.5
    t = math.tanh(r)
    v = builders.squeeze(r)
    data = ccr_charge_data(v)
    fock = BoseFock(1, 16, dim_cap=32)
    omega, tail = omega_p_bose(fock, v.codomain, data.t)
    assert tail < 1e-5
    # bare-vacuum overlap is exactly (1 - t^2)^{1/4} at any cutoff
    assert np.vdot(fock.vacuum(), omega) == pytest.approx(
        (1 - t * t) ** 0.25, abs=1e-12)
    # transformed annihilator kills it up to the truncation tail
    f = v.matrix @ v.domain.basis_vector(1, conjugate=True)
    assert np.linalg.norm(fock.pi(v.codomain, f) @ omega) < 1e-2


def test_cutoff_too_small_raises():
    v = builders.squeeze(1.5)
    data = ccr_charge_data(v)
    fock = BoseFock(1, 4)
    with pytest.raises(CutoffTooSmall):
        omega_p_bose(fock, v.codomain, data.t, tail_cap=1e-6)


def test_polar_isometry_of_creation_is_unilateral_shift():
    fock = BoseFock(1, 6)
    space = SelfDualSpace(1)
    u = polar_isometry(fock.pi(space, space.basis_vector(1)).toarray())
    for m in range(fock.cutoff):
        assert u[m + 1, m] == pytest.approx(1.0, abs=1e-12)


def test_shift_charged_vectors_and_route_constants():
    v = builders.shift(1)
    data = ccr_charge_data(v)
    fock = BoseFock(2, 6)
    omega_p, tail = omega_p_bose(fock, v.codomain, data.t)
    assert tail < 1e-14  # t = 0, no pair content
    alphas, omegas, records = omega_alphas_bose(
        fock, v.codomain, omega_p, data.k_frame, l_max=3, t_block=data.t)
    assert alphas == [(), (0,), (0, 0), (0, 0, 0)]
    # Omega_(0...0) with l quanta is the pure occupation state |l, 0>
    for level in range(4):
        idx = fock.state_index((level, 0))
        assert omegas[level][idx] == pytest.approx(1.0, abs=1e-12)
    # monomial-route proportionality constants are sqrt(l!)
    for level, rec in enumerate(records):
        assert rec["angular_defect"] < 1e-12
        assert rec["constant"] == pytest.approx(math.sqrt(math.factorial(level)),
                                                abs=1e-12)


def test_squeezed_route_cross_check():
    v = builders.squeeze(0.4, n_modes=2, mode=2) @ builders.shift(1)
    data = ccr_charge_data(v)
    fock = BoseFock(2, 8, dim_cap=81)
    omega_p, tail = omega_p_bose(fock, v.codomain, data.t)
    assert tail < 1e-4
    alphas, omegas, records = omega_alphas_bose(
        fock, v.codomain, omega_p, data.k_frame, l_max=2, t_block=data.t)
    for rec in records:
        # the two routes agree in direction up to the truncation tail
        assert rec["angular_defect"] < 1e-3
        assert abs(rec["constant"]) > 0.5


def test_shift_implementer_exact_below_cutoff():
    v = builders.shift(1)
    fock_d = BoseFock(1, 6)
    fock_c = BoseFock(2, 6)
    data = ccr_charge_data(v)
    omega_p, _ = omega_p_bose(fock_c, v.codomain, data.t)
    psi, inter, iso = bose_implementer(v, fock_d, fock_c, omega_p,
                                       occ_probe=5)
    assert inter < 1e-12
    assert iso < 1e-12
    # Psi |m> = |0, m> exactly
    for m in range(7):
        assert psi[fock_c.state_index((0, m)), m] == pytest.approx(1.0,
                                                                   abs=1e-12)


def test_squeeze_implementer_residual_tracks_tail():
    v = builders.squeeze(0.5)
    data = ccr_charge_data(v)
    defects = []
    for cutoff in (16, 24):
        fock = BoseFock(1, cutoff, dim_cap=40)
        omega_p, tail = omega_p_bose(fock, v.codomain, data.t)
        psi, inter, iso = bose_implementer(v, fock, fock, omega_p, occ_probe=6)
        # probe-window matrix elements of the intertwining law are exact
        assert inter < 1e-12
        defects.append(iso)
    # the Gram defect is pure truncation error: it shrinks with the cutoff
    assert defects[1] < 0.1 * defects[0]
    assert defects[1] < 1e-3


def test_bose_charge_blocks_are_gauge_phases():
    v = builders.shift(1)
    data = ccr_charge_data(v)
    fock = BoseFock(2, 6)
    omega_p, _ = omega_p_bose(fock, v.codomain, data.t)
    alphas, omegas, _ = omega_alphas_bose(
        fock, v.codomain, omega_p, data.k_frame, l_max=3, t_block=data.t)
    phi = 0.9
    gamma = np.diag(fock.gamma_phases(np.array([phi, 0.0])))
    blocks = charge_rep_blocks(omegas, alphas, gamma)
    for level, block in blocks.items():
        assert block.shape == (1, 1)
        assert block[0, 0] == pytest.approx(np.exp(1j * level * phi),
                                            abs=1e-12)


def test_ccr_multi_indices():
    assert ccr_multi_indices(2, 2) == [(), (0,), (1,), (0, 0), (0, 1), (1, 1)]
    assert len(ccr_multi_indices(1, 5)) == 6
