"""Driven open Dicke model in the permutation-symmetric Liouville basis.

N two-level emitters coupled to one lossy cavity mode, coherently driven,
with individual decay, pure dephasing and cavity loss. The density matrix
is represented by its coefficients on the permutation-symmetric operator
basis, which scales as N**3 instead of 4**N.
"""

from .basis import ReducedState, SymBasis, SymIndex, ground_state, state_dim, sym_basis, tls_basis_size
from .dicke import (
    build_coeff_table,
    collectivity_R,
    dark_state_population,
    population,
    populations,
    subspace_population,
)
from .liouvillian import LiouvillianOp, assemble
from .observables import ObservableRecord, g2_zero, observe, ssi_A, ssi_all
from .params import ModelParams, paper_units
from .solvers import (
    FockCriteria,
    auto_fock_cutoff,
    cascade_protocol,
    liouvillian_gap,
    propagate,
    steady_state,
)

__version__ = "0.1.0"

__all__ = [
    "FockCriteria",
    "LiouvillianOp",
    "ModelParams",
    "ObservableRecord",
    "ReducedState",
    "SymBasis",
    "SymIndex",
    "assemble",
    "auto_fock_cutoff",
    "build_coeff_table",
    "cascade_protocol",
    "collectivity_R",
    "dark_state_population",
    "g2_zero",
    "ground_state",
    "liouvillian_gap",
    "observe",
    "paper_units",
    "population",
    "populations",
    "propagate",
    "ssi_A",
    "ssi_all",
    "state_dim",
    "steady_state",
    "subspace_population",
    "sym_basis",
    "tls_basis_size",
]
