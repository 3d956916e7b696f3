"""Sparse generator of the open Dicke master equation on the symmetric basis.

The reduced equations follow from the adjoint (Heisenberg) action on the basis
operators: with ``X_b = P[b] x |p><q|`` and ``L^+(X_b) = sum_a c[b, a] X_a``
the coefficients obey ``d/dt v_b = sum_a c[b, a] v_a``. Every term of ``L^+``
is a sum over emitters of a single-site superoperator, possibly times a photon
superoperator. A sum over sites of the single-site map ``x -> T[y, x] y``
acting on ``P[a]`` gives ``T[y, x] * n'_y * P[a']`` where ``a'`` is ``a`` with
one ``x`` replaced by ``y`` and ``n'_y`` counts ``y`` in ``a'``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .basis import state_dim, sym_basis, tls_basis_size
from .params import ModelParams

log = logging.getLogger(__name__)

#: default ceiling on the reduced state dimension T(N) * M**2
MAX_DIM = 3_000_000

# single-site matrices, row index = ket
S11 = np.array([[0, 0], [0, 1]], dtype=complex)
S10 = np.array([[0, 0], [1, 0]], dtype=complex)
S01 = np.array([[0, 1], [0, 0]], dtype=complex)
S00 = np.array([[1, 0], [0, 0]], dtype=complex)
SZ = S11 - S00
ID2 = np.eye(2, dtype=complex)

# row-major vec index (2a + b) of |a><b| -> order (s11, s10, s01, s00)
_SITE_ORDER = [3, 2, 1, 0]


def site_superop(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """4x4 matrix of ``x -> left @ x @ right`` on (s11, s10, s01, s00)."""
    K = np.kron(left, right.T)
    return K[np.ix_(_SITE_ORDER, _SITE_ORDER)]


def collective_superop(T: np.ndarray, N: int) -> sp.csr_matrix:
    """Matrix of ``sum_i T_i`` on the symmetric TLS basis, [target, source]."""
    basis = sym_basis(N)
    counts = basis.counts
    lookup = basis._lookup
    rows, cols, vals = [], [], []
    for x in range(4):
        src = np.nonzero(counts[:, x] >= 1)[0]
        for y in range(4):
            w = T[y, x]
            if w == 0 or src.size == 0:
                continue
            tgt_counts = counts[src].copy()
            tgt_counts[:, x] -= 1
            tgt_counts[:, y] += 1
            rows.append(lookup[tgt_counts[:, 0], tgt_counts[:, 1], tgt_counts[:, 2]])
            cols.append(src)
            vals.append(w * tgt_counts[:, y])
    n = len(basis)
    if not rows:
        return sp.csr_matrix((n, n), dtype=complex)
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()


@lru_cache(maxsize=32)
def photon_ops(M: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Truncated annihilation and creation operators on Fock states 0..M-1."""
    b = sp.diags(np.sqrt(np.arange(1, M, dtype=float)), 1, shape=(M, M), dtype=complex)
    b = b.tocsr()
    return b, b.T.tocsr()


def _lmul(A, M):
    return sp.kron(A, sp.identity(M), format="csr")


def _rmul(B, M):
    return sp.kron(sp.identity(M), B.T, format="csr")


def _combine(pieces, N, M):
    """Sum of kron(TLS part, photon part) pieces, transposed into the generator."""
    T = tls_basis_size(N)
    out = sp.csr_matrix((T * M * M, T * M * M), dtype=complex)
    for tls, ph in pieces:
        tls = sp.identity(T, dtype=complex, format="csr") if tls is None else tls
        ph = sp.identity(M * M, dtype=complex, format="csr") if ph is None else ph
        out = out + sp.kron(tls, ph, format="csr")
    out = out.T.tocsr()
    out.eliminate_zeros()
    return out


def _check_dim(N, M, max_dim):
    dim = state_dim(N, M)
    if dim > max_dim:
        raise ValueError(f"reduced dimension {dim} (N={N}, M={M}) exceeds ceiling {max_dim}")


def _drive_unit(N, M):
    Jx2 = S10 + S01
    T = 1j * (site_superop(Jx2, ID2) - site_superop(ID2, Jx2))
    return _combine([(collective_superop(T, N), None)], N, M)


def _static_hamiltonian(p: ModelParams, M: int):
    N = p.N
    b, bd = photon_ops(M)
    pieces = []
    if p.delta0 != 0:
        n = bd @ b
        pieces.append((None, 1j * p.delta0 * (_lmul(n, M) - _rmul(n, M))))
    if p.delta1 != 0:
        T = 1j * p.delta1 * (site_superop(S11, ID2) - site_superop(ID2, S11))
        pieces.append((collective_superop(T, N), None))
    if p.g != 0 and M > 1:
        ig = 1j * p.g
        pieces += [
            (collective_superop(site_superop(S10, ID2), N), ig * _lmul(b, M)),
            (collective_superop(site_superop(ID2, S10), N), -ig * _rmul(b, M)),
            (collective_superop(site_superop(S01, ID2), N), ig * _lmul(bd, M)),
            (collective_superop(site_superop(ID2, S01), N), -ig * _rmul(bd, M)),
        ]
    return pieces


def _decay_pieces(p: ModelParams, M: int):
    if p.gamma == 0:
        return []
    T = 0.5 * p.gamma * (
        2 * site_superop(S10, S01) - site_superop(S11, ID2) - site_superop(ID2, S11)
    )
    return [(collective_superop(T, p.N), None)]


def _dephasing_pieces(p: ModelParams, M: int):
    if p.delta == 0:
        return []
    T = 0.5 * p.delta * (site_superop(SZ, SZ) - site_superop(ID2, ID2))
    return [(collective_superop(T, p.N), None)]


def _cavity_pieces(p: ModelParams, M: int):
    if p.kappa == 0 or M == 1:
        return []
    b, bd = photon_ops(M)
    n = bd @ b
    P = 0.5 * p.kappa * (2 * sp.kron(bd, b.T) - _lmul(n, M) - _rmul(n, M))
    return [(None, P)]


@dataclass(frozen=True)
class LiouvillianOp:
    """Generator ``d/dt v = matrix @ v`` on reduced coefficient vectors.

    The drive-independent part and the drive per unit amplitude are kept
    separately so that changing ``E`` (a quench) costs one sparse sum.
    """

    params: ModelParams
    M: int
    static: sp.csr_matrix = field(repr=False)
    drive: sp.csr_matrix = field(repr=False)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        if self.params.E == 0:
            return self.static
        return (self.static + self.params.E * self.drive).tocsr()

    def with_drive(self, E: float) -> "LiouvillianOp":
        return LiouvillianOp(self.params.replace(E=E), self.M, self.static, self.drive)

    def __matmul__(self, v):
        return self.matrix @ v

    def dump(self, path) -> None:
        """Write the nonzeros as ``row col re im`` lines."""
        A = self.matrix.tocoo()
        order = np.lexsort((A.col, A.row))
        data = np.column_stack([A.row[order], A.col[order], A.data.real[order], A.data.imag[order]])
        header = f"N={self.N} M={self.M} dim={self.dim} nnz={A.nnz}"
        np.savetxt(path, data, fmt=["%d", "%d", "%.17e", "%.17e"], header=header)


def _wrap(params, M, matrix):
    zero = sp.csr_matrix(matrix.shape, dtype=complex)
    return LiouvillianOp(params.replace(E=0.0), M, matrix, zero)


def term_hamiltonian(params: ModelParams, M: int) -> LiouvillianOp:
    """The coherent part ``i[H, .]`` in reduced form, drive included."""
    static = _combine(_static_hamiltonian(params, M), params.N, M)
    return LiouvillianOp(params, M, static, _drive_unit(params.N, M))


def term_tls_decay(params: ModelParams, M: int) -> LiouvillianOp:
    return _wrap(params, M, _combine(_decay_pieces(params, M), params.N, M))


def term_pure_dephasing(params: ModelParams, M: int) -> LiouvillianOp:
    return _wrap(params, M, _combine(_dephasing_pieces(params, M), params.N, M))


def term_cavity_decay(params: ModelParams, M: int) -> LiouvillianOp:
    return _wrap(params, M, _combine(_cavity_pieces(params, M), params.N, M))


def assemble(params: ModelParams, M: int | None = None, *, max_dim: int = MAX_DIM) -> LiouvillianOp:
    """Full reduced generator for ``params`` with photon cutoff ``M``."""
    if M is None:
        if params.fock_cutoff == "auto":
            raise ValueError("fock_cutoff is 'auto'; pass M explicitly or use auto_fock_cutoff")
        M = int(params.fock_cutoff)
    if M < 1:
        raise ValueError("M must be >= 1")
    _check_dim(params.N, M, max_dim)
    pieces = (
        _static_hamiltonian(params, M)
        + _decay_pieces(params, M)
        + _dephasing_pieces(params, M)
        + _cavity_pieces(params, M)
    )
    static = _combine(pieces, params.N, M)
    drive = _drive_unit(params.N, M)
    log.debug("assembled N=%d M=%d dim=%d nnz=%d", params.N, M, static.shape[0], static.nnz)
    return LiouvillianOp(params, M, static, drive)
