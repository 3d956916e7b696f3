"""Dicke (l, m) eigenspace populations and the collectivity measure R(l).

The projector onto the full (degenerate) eigenspace of J^2 and J_z is
permutation invariant, so its expectation value is a linear combination of
the coefficients ``P[n-k, k, k]`` with ``n = m + N/2``:

    p(l, m) = sum_k a_k(l, m) P[n-k, k, k]

Within the n-excitation sector the eigenspace projectors are the primitive
idempotents of the Johnson scheme J(N, n). Their matrix elements depend only
on the number k of sites where ket and bra differ, and are given by Eberlein
polynomials; the table is computed exactly with rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .basis import ReducedState, sym_basis

#: default guard on the denominator of R(l)
R_EPS = 1e-12


def l_values(N: int) -> list[float]:
    """Allowed total spins N/2, N/2-1, ..., 0 or 1/2."""
    return [N / 2 - j for j in range(N // 2 + 1)]


def l_min(N: int) -> float:
    return 0.5 * (N % 2)


def degeneracy(N: int, l: float) -> int:
    """Number of copies of the spin-l irrep in N spin-1/2."""
    j = _j(N, l)
    return comb(N, j) - (comb(N, j - 1) if j > 0 else 0)


def _j(N, l):
    j = N / 2 - l
    if j < 0 or j != int(j) or j > N // 2:
        raise ValueError(f"l={l} is not a valid total spin for N={N}")
    return int(j)


def _eberlein(N, n, j, k):
    return sum(
        (-1) ** h * comb(j, h) * comb(n - j, k - h) * comb(N - n - j, k - h)
        for h in range(0, k + 1)
    )


def projector_coefficient(N: int, l: float, m: float, k: int) -> Fraction:
    """Exact a_k(l, m): matrix element of the (l, m) eigenspace projector
    between basis states with n excitations that differ on 2k sites."""
    j = _j(N, l)
    n = m + N / 2
    if n != int(n) or abs(m) > l:
        raise ValueError(f"invalid m={m} for l={l}")
    n = int(n)
    if k < 0 or k > min(n, N - n):
        return Fraction(0)
    mult = degeneracy(N, l)
    return Fraction(mult * _eberlein(N, n, j, k), comb(N, n) * comb(n, k) * comb(N - n, k))


@dataclass(frozen=True)
class DickeCoeffTable:
    """Expansion coefficients of all (l, m) eigenspace populations.

    ``coeffs[(l, m)][k]`` multiplies ``P[n-k, k, k]``; signs are included.
    """

    N: int
    coeffs: dict
    degeneracies: dict

    @property
    def levels(self) -> list[tuple[float, float]]:
        return list(self.coeffs)

    def m_values(self, l: float) -> list[float]:
        return [m for (ll, m) in self.coeffs if ll == l]

    def rows(self):
        """Yield (N, l, m, k, a_k) tuples, for export."""
        for (l, m), a in self.coeffs.items():
            for k, val in enumerate(a):
                yield self.N, l, m, k, float(val)

    def to_text(self) -> str:
        lines = ["# N l m k a_k"]
        lines += [f"{N} {l:g} {m:g} {k} {a:.17g}" for N, l, m, k, a in self.rows()]
        return "\n".join(lines) + "\n"


@lru_cache(maxsize=None)
def build_coeff_table(N: int) -> DickeCoeffTable:
    if N < 1:
        raise ValueError("N must be >= 1")
    kmax = N // 2
    coeffs = {}
    for l in l_values(N):
        for twice_m in range(-int(2 * l), int(2 * l) + 1, 2):
            m = twice_m / 2
            a = np.array([float(projector_coefficient(N, l, m, k)) for k in range(kmax + 1)])
            a.setflags(write=False)
            coeffs[(l, m)] = a
    degs = {l: degeneracy(N, l) for l in l_values(N)}
    return DickeCoeffTable(N, coeffs, degs)


def _coherence_matrix(state: ReducedState) -> np.ndarray:
    """C[n, k] = photon-traced P[n-k, k, k] (real part), 0 where invalid."""
    N = state.N
    basis = sym_basis(N)
    tls = state.tls_coeffs().real
    C = np.zeros((N + 1, N // 2 + 1))
    for k in range(N // 2 + 1):
        idx = basis.coherence_triples(k)
        ok = idx >= 0
        C[ok, k] = tls[idx[ok]]
    return C


def population(state: ReducedState, l: float, m: float) -> float:
    """p(l, m): population of the (l, m) eigenspace."""
    table = build_coeff_table(state.N)
    C = _coherence_matrix(state)
    return float(table.coeffs[(l, m)] @ C[int(m + state.N / 2)])


def populations(state: ReducedState) -> dict:
    """All p(l, m) as a dict keyed by (l, m)."""
    table = build_coeff_table(state.N)
    C = _coherence_matrix(state)
    return {(l, m): float(a @ C[int(m + state.N / 2)]) for (l, m), a in table.coeffs.items()}


def subspace_population(state: ReducedState, l: float) -> float:
    """Total population of the spin-l subspace, sum over m."""
    return sum(v for (ll, _), v in populations(state).items() if ll == l)


def incoherent_population(state: ReducedState, l: float) -> float:
    """Spin-l population computed from the diagonal elements P[n, 0, 0] only."""
    table = build_coeff_table(state.N)
    C = _coherence_matrix(state)
    return float(sum(table.coeffs[(l, m)][0] * C[int(m + state.N / 2), 0] for m in table.m_values(l)))


def collectivity_R(state: ReducedState, l: float, eps: float = R_EPS) -> float:
    """R(l): spin-l population over its incoherent part; NaN if the latter is below ``eps``."""
    den = incoherent_population(state, l)
    if den <= eps:
        return float("nan")
    return subspace_population(state, l) / den


def collectivity_all(state: ReducedState, eps: float = R_EPS) -> dict:
    return {l: collectivity_R(state, l, eps) for l in l_values(state.N)}


def dark_state_population(state: ReducedState, l: float) -> float:
    """p(l, -l), the lowest state of the spin-l ladder."""
    return population(state, l, -l)


def total_dark_population(state: ReducedState) -> float:
    """Sum of p(l, -l) over all l < N/2 (every lowest state except the ground state)."""
    return sum(dark_state_population(state, l) for l in l_values(state.N)[1:])
