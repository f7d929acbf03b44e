"""Quasi-free endomorphisms of CAR/CCR algebras on truncated self-dual spaces.

Library layout:

* :mod:`quasifree.selfdual` -- spaces, block operators, rank-revealing helpers
* :mod:`quasifree.car` / :mod:`quasifree.ccr` -- semigroup membership and
  charge data (h, T, P, k, index, statistics dimension)
* :mod:`quasifree.fock` -- finite Fock-space oracle (fields, twist, vacua,
  implementers, charge representation matrices)
* :mod:`quasifree.sectors` -- gauge actions, symmetric-function characters,
  sector tables, oracle comparison
* :mod:`quasifree.dirac` -- localized chiral endomorphism on the circle
* :mod:`quasifree.report` / :mod:`quasifree.cli` -- model files, reproducible
  JSON reports, command line front end
"""

from .selfdual import BlockOperator, SelfDualSpace, Subspace
from .car import car_charge_data, car_membership
from .ccr import ccr_charge_data, ccr_membership

__version__ = "0.1.0"

__all__ = [
    "BlockOperator",
    "SelfDualSpace",
    "Subspace",
    "car_charge_data",
    "car_membership",
    "ccr_charge_data",
    "ccr_membership",
    "__version__",
]
