"""Permutation-symmetric Liouville basis of N two-level systems times a
truncated photon mode.

A TLS basis element is labeled by the triple ``(n11, n10, n01)``: the number
of emitters carrying the single-site operator ``|1><1|``, ``|1><0|`` and
``|0><1|`` respectively (the rest carry ``|0><0|``). The symmetrized operator
is the plain sum over all distinct site assignments, without combinatorial
normalization. A density matrix is represented by the coefficients

    coeff(n11, n10, n01, p, q) = tr[(P[n11, n10, n01] x |p><q|) rho]

laid out with the photon indices fastest: ``flat = t * M**2 + p * M + q``
where ``t`` is the position of the triple in :attr:`SymBasis.triples`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb, factorial
from typing import NamedTuple

import numpy as np

LAYOUT_VERSION = 1


def tls_basis_size(N: int) -> int:
    """Number of symmetric TLS triples, (N+1)(N+2)(N+3)/6."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return (N + 1) * (N + 2) * (N + 3) // 6


class SymIndex(NamedTuple):
    n11: int
    n10: int
    n01: int
    ph_ket: int = 0
    ph_bra: int = 0


class SymBasis:
    """Enumeration tables for the symmetric basis of ``N`` emitters.

    Use :func:`sym_basis` to get a cached instance.
    """

    def __init__(self, N: int):
        if N < 0:
            raise ValueError("N must be >= 0")
        self.N = N
        triples = [
            (n11, n10, n01)
            for n11 in range(N + 1)
            for n10 in range(N + 1 - n11)
            for n01 in range(N + 1 - n11 - n10)
        ]
        self.triples = np.array(triples, dtype=np.int64).reshape(-1, 3)
        self.triples.setflags(write=False)
        lookup = -np.ones((N + 1,) * 3, dtype=np.int64)
        lookup[tuple(self.triples.T)] = np.arange(len(self.triples))
        lookup.setflags(write=False)
        self._lookup = lookup

    def __len__(self) -> int:
        return len(self.triples)

    @cached_property
    def counts(self) -> np.ndarray:
        """Per triple the occupation of (s11, s10, s01, s00), shape (T, 4)."""
        n00 = self.N - self.triples.sum(axis=1)
        out = np.column_stack([self.triples, n00])
        out.setflags(write=False)
        return out

    @cached_property
    def multiplicity(self) -> np.ndarray:
        """Number of product terms in each symmetrized operator."""
        f = factorial
        out = np.array(
            [f(self.N) // (f(a) * f(b) * f(c) * f(d)) for a, b, c, d in self.counts],
            dtype=np.float64,
        )
        out.setflags(write=False)
        return out

    @cached_property
    def conj_perm(self) -> np.ndarray:
        """Triple index of (n11, n01, n10) for each triple (n11, n10, n01)."""
        t = self.triples
        return self._lookup[t[:, 0], t[:, 2], t[:, 1]]

    def triple_index(self, n11: int, n10: int, n01: int) -> int:
        """Position of a triple, -1 if it does not exist."""
        if min(n11, n10, n01) < 0 or n11 + n10 + n01 > self.N:
            return -1
        return int(self._lookup[n11, n10, n01])

    @cached_property
    def diagonal_triples(self) -> np.ndarray:
        """Triple indices of (n, 0, 0) for n = 0..N."""
        return np.array([self._lookup[n, 0, 0] for n in range(self.N + 1)])

    def coherence_triples(self, k: int) -> np.ndarray:
        """Triple indices of (n - k, k, k) for n = 0..N (-1 where invalid)."""
        return np.array([self.triple_index(n - k, k, k) for n in range(self.N + 1)])


@lru_cache(maxsize=None)
def sym_basis(N: int) -> SymBasis:
    return SymBasis(N)


def state_dim(N: int, M: int) -> int:
    return tls_basis_size(N) * M * M


def index_of(idx: SymIndex, N: int, M: int) -> int:
    """Flat position of a basis element."""
    n11, n10, n01, p, q = idx
    t = sym_basis(N).triple_index(n11, n10, n01)
    if t < 0:
        raise IndexError(f"invalid triple {(n11, n10, n01)} for N={N}")
    if not (0 <= p < M and 0 <= q < M):
        raise IndexError(f"photon indices {(p, q)} out of range for M={M}")
    return (t * M + p) * M + q


def sym_of(flat: int, N: int, M: int) -> SymIndex:
    """Inverse of :func:`index_of`."""
    if not 0 <= flat < state_dim(N, M):
        raise IndexError(f"flat index {flat} out of range")
    t, rest = divmod(int(flat), M * M)
    p, q = divmod(rest, M)
    n11, n10, n01 = (int(x) for x in sym_basis(N).triples[t])
    return SymIndex(n11, n10, n01, p, q)


@dataclass
class ReducedState:
    """Coefficient vector of a permutation-symmetric density matrix."""

    coeffs: np.ndarray
    N: int
    M: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (state_dim(self.N, self.M),):
            raise ValueError(
                f"expected {state_dim(self.N, self.M)} coefficients, got {self.coeffs.shape}"
            )

    @property
    def basis(self) -> SymBasis:
        return sym_basis(self.N)

    @property
    def blocks(self) -> np.ndarray:
        """View of the coefficients as (T, M, M) with [t, p, q]."""
        return self.coeffs.reshape(-1, self.M, self.M)

    def coeff(self, n11: int, n10: int, n01: int, p: int = 0, q: int = 0) -> complex:
        return complex(self.coeffs[index_of(SymIndex(n11, n10, n01, p, q), self.N, self.M)])

    def tls_coeffs(self) -> np.ndarray:
        """Photon-traced TLS coefficients, one per triple."""
        return np.trace(self.blocks, axis1=1, axis2=2)

    def photon_distribution(self) -> np.ndarray:
        """Photon number probabilities P(p), p = 0..M-1."""
        diag = self.blocks[self.basis.diagonal_triples]
        return np.real(np.einsum("npp->p", diag))

    def trace(self) -> complex:
        return complex(self.tls_coeffs()[self.basis.diagonal_triples].sum())

    def dagger(self) -> "ReducedState":
        """Coefficients of the hermitian conjugate density matrix."""
        b = self.blocks[self.basis.conj_perm].transpose(0, 2, 1).conj()
        return ReducedState(b.reshape(-1), self.N, self.M)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.coeffs - self.dagger().coeffs), initial=0.0))

    def copy(self) -> "ReducedState":
        return ReducedState(self.coeffs.copy(), self.N, self.M)

    # checkpointing ---------------------------------------------------------

    def save(self, path) -> None:
        """Write a text checkpoint: header line then ``re im`` per coefficient."""
        header = f"opendicke-reduced-state N={self.N} M={self.M} layout={LAYOUT_VERSION}"
        data = np.column_stack([self.coeffs.real, self.coeffs.imag])
        np.savetxt(path, data, header=header, fmt="%.17e")

    @classmethod
    def load(cls, path) -> "ReducedState":
        with open(path) as fh:
            header = fh.readline()
            body = fh.read()
        fields = dict(tok.split("=") for tok in header.split() if "=" in tok)
        if int(fields.get("layout", -1)) != LAYOUT_VERSION:
            raise ValueError(f"unsupported checkpoint layout in {path}")
        data = np.loadtxt(io.StringIO(body), ndmin=2)
        return cls(data[:, 0] + 1j * data[:, 1], int(fields["N"]), int(fields["M"]))


def trace_functional(N: int, M: int) -> np.ndarray:
    """Real vector t with t . coeffs = tr(rho)."""
    basis = sym_basis(N)
    t = np.zeros(state_dim(N, M))
    for tr in basis.diagonal_triples:
        for p in range(M):
            t[(tr * M + p) * M + p] = 1.0
    return t


def ground_state(N: int, M: int) -> ReducedState:
    """All emitters in |0>, cavity in vacuum."""
    c = np.zeros(state_dim(N, M), dtype=np.complex128)
    c[index_of(SymIndex(0, 0, 0, 0, 0), N, M)] = 1.0
    return ReducedState(c, N, M)


def thermal_state(N: int, M: int, excitation: float, mean_photons: float = 0.0) -> ReducedState:
    """Uncorrelated state: each emitter excited with probability ``excitation``.

    ``P[n, 0, 0]`` is the binomial probability of n excitations; the photon
    mode is in a (truncated, renormalized) thermal state.
    """
    if not 0.0 <= excitation <= 1.0:
        raise ValueError("excitation probability must lie in [0, 1]")
    basis = sym_basis(N)
    if mean_photons > 0:
        r = mean_photons / (1 + mean_photons)
        ph = r ** np.arange(M)
    else:
        ph = np.zeros(M)
        ph[0] = 1.0
    ph /= ph.sum()
    blocks = np.zeros((len(basis), M, M), dtype=np.complex128)
    for n, t in enumerate(basis.diagonal_triples):
        w = comb(N, n) * excitation**n * (1 - excitation) ** (N - n)
        blocks[t] = w * np.diag(ph)
    return ReducedState(blocks.reshape(-1), N, M)
