"""Named example isometries used by tests, docs and the CLI.

Every builder returns a semigroup member by construction (the dirac window
family is the exception: it is only asymptotically isometric and lives in
:mod:`quasifree.dirac`).  Mode ordering for multi-species builders is
site-major with the species index fastest, so a domain always embeds as a
mode prefix of its codomain.
"""

from __future__ import annotations

import numpy as np

from .errors import MalformedInput, ShapeMismatch
from .selfdual import BlockOperator, SelfDualSpace


def identity(n_modes: int) -> BlockOperator:
    space = SelfDualSpace(n_modes)
    return BlockOperator(np.eye(space.dim, dtype=complex), space)


def shift(n_sites_in: int, steps: int = 1, species: int = 1) -> BlockOperator:
    """e_{site k, species s} -> e_{site k+steps, s}; IND = 2*steps*species."""
    if n_sites_in < 1 or steps < 1 or species < 1:
        raise ShapeMismatch("shift needs n_sites_in, steps, species >= 1")
    nd = n_sites_in * species
    nc = (n_sites_in + steps) * species
    dom, cod = SelfDualSpace(nd), SelfDualSpace(nc)
    m = np.zeros((cod.dim, dom.dim), dtype=complex)
    off = steps * species
    for i in range(nd):
        m[i + off, i] = 1.0
        m[nc + i + off, nd + i] = 1.0
    return BlockOperator(m, dom, cod)


def flip(n_modes: int, mode: int = 1) -> BlockOperator:
    """Swap e_mode with e_mode*, identity elsewhere (square, IND = 0)."""
    if not 1 <= mode <= n_modes:
        raise ShapeMismatch(f"mode {mode} outside 1..{n_modes}")
    space = SelfDualSpace(n_modes)
    m = np.eye(space.dim, dtype=complex)
    i = mode - 1
    m[i, i] = 0.0
    m[n_modes + i, n_modes + i] = 0.0
    m[n_modes + i, i] = 1.0
    m[i, n_modes + i] = 1.0
    return BlockOperator(m, space)


def bogoliubov(theta: float, n_modes: int = 2) -> BlockOperator:
    """Two-mode fermionic pairing rotation, identity on any extra modes.

    V e1 = cos(theta) e1 + sin(theta) e2*, V e2 = cos(theta) e2 - sin(theta) e1*.
    """
    if n_modes < 2:
        raise ShapeMismatch("bogoliubov needs at least 2 modes")
    space = SelfDualSpace(n_modes)
    n = n_modes
    c, s = np.cos(theta), np.sin(theta)
    m = np.eye(space.dim, dtype=complex)
    for i in (0, 1, n, n + 1):
        m[i, i] = 0.0
    m[0, 0] = c
    m[n + 1, 0] = s          # e1 -> c e1 + s e2*
    m[1, 1] = c
    m[n, 1] = -s             # e2 -> c e2 - s e1*
    m[n, n] = c
    m[1, n] = s              # e1* -> c e1* + s e2
    m[n + 1, n + 1] = c
    m[0, n + 1] = -s         # e2* -> c e2* - s e1
    return BlockOperator(m, space)


def squeeze(r: float, n_modes: int = 1, mode: int = 1) -> BlockOperator:
    """Bosonic single-mode squeeze: e -> cosh(r) e + sinh(r) e*."""
    if not 1 <= mode <= n_modes:
        raise ShapeMismatch(f"mode {mode} outside 1..{n_modes}")
    space = SelfDualSpace(n_modes)
    n = n_modes
    ch, sh = np.cosh(r), np.sinh(r)
    m = np.eye(space.dim, dtype=complex)
    i = mode - 1
    m[i, i] = ch
    m[n + i, i] = sh
    m[i, n + i] = sh
    m[n + i, n + i] = ch
    return BlockOperator(m, space)


def from_matrix(matrix: np.ndarray, n_modes_in: int,
                n_modes_out: int) -> BlockOperator:
    return BlockOperator(np.asarray(matrix, dtype=complex),
                         SelfDualSpace(n_modes_in), SelfDualSpace(n_modes_out))


def build(name: str, params: dict) -> BlockOperator:
    """CLI-facing registry; raises MalformedInput on unknown names/params."""
    try:
        if name == "identity":
            return identity(int(params["n_modes"]))
        if name == "shift":
            return shift(int(params["n_sites_in"]),
                         int(params.get("steps", 1)),
                         int(params.get("species", 1)))
        if name == "flip":
            return flip(int(params["n_modes"]), int(params.get("mode", 1)))
        if name == "bogoliubov":
            return bogoliubov(float(params["theta"]),
                              int(params.get("n_modes", 2)))
        if name == "squeeze":
            return squeeze(float(params["r"]), int(params.get("n_modes", 1)),
                           int(params.get("mode", 1)))
        if name == "dirac-v":
            from . import dirac
            m_loc = params.get("m_loc")
            return dirac.dirac_v_member(int(params["window"]),
                                        None if m_loc is None else int(m_loc))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"builder {name!r}: bad parameters: {exc}") from exc
    raise MalformedInput(f"unknown builder {name!r}")
