"""Brute-force reference model on the full 2**N x Fock space.

Only meant for small N. Provides the textbook Lindblad generator built from
per-emitter operators, the maps between full density matrices and reduced
coefficient vectors, and a direct diagonalization of (J^2, J_z).

Full Hilbert space ordering: emitters first (site 1 is the most significant
bit, bit value 1 = excited), then the photon number, i.e. ``index = a*M + p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .basis import ReducedState, sym_basis
from .liouvillian import S01, S10, S11, SZ, photon_ops
from .params import ModelParams

MAX_N = 6
MAX_M = 6


def _check_size(N, M):
    if N > MAX_N or 2**N * M > 2**MAX_N * MAX_M:
        raise ValueError(f"oracle size ceiling exceeded (N={N}, M={M})")


def site_op(op: np.ndarray, i: int, N: int) -> sp.csr_matrix:
    """Single-site operator ``op`` on emitter ``i`` (0-based) of ``N``."""
    return sp.kron(
        sp.kron(sp.identity(2**i), sp.csr_matrix(op)), sp.identity(2 ** (N - i - 1)), format="csr"
    )


def collective(op: np.ndarray, N: int) -> sp.csr_matrix:
    out = sp.csr_matrix((2**N, 2**N), dtype=complex)
    for i in range(N):
        out = out + site_op(op, i, N)
    return out


def full_operators(params: ModelParams, M: int):
    """Hamiltonian and collapse operators on the full space (sparse)."""
    N = params.N
    _check_size(N, M)
    b, bd = photon_ops(M)
    Itls = sp.identity(2**N, format="csr")
    Iph = sp.identity(M, format="csr")
    J10 = collective(S10, N)
    J01 = collective(S01, N)
    J11 = collective(S11, N)
    H = (
        params.delta0 * sp.kron(Itls, bd @ b)
        + params.delta1 * sp.kron(J11, Iph)
        + params.g * (sp.kron(J10, b) + sp.kron(J01, bd))
        + params.E * sp.kron(J10 + J01, Iph)
    )
    c_ops = []
    for i in range(N):
        if params.gamma:
            c_ops.append(np.sqrt(params.gamma) * sp.kron(site_op(S01, i, N), Iph))
        if params.delta:
            c_ops.append(np.sqrt(params.delta / 2) * sp.kron(site_op(SZ, i, N), Iph))
    if params.kappa:
        c_ops.append(np.sqrt(params.kappa) * sp.kron(Itls, b))
    return H.tocsr(), [c.tocsr() for c in c_ops]


def apply_full_liouvillian(params: ModelParams, M: int, rho: np.ndarray) -> np.ndarray:
    """``L(rho)`` for a dense full-space density matrix."""
    H, c_ops = full_operators(params, M)
    out = -1j * (H @ rho - (H.T @ rho.T).T)
    for c in c_ops:
        cd = c.conj().T
        cdc = cd @ c
        out += c @ rho @ cd.toarray() - 0.5 * (cdc @ rho + (cdc.T @ rho.T).T)
    return out


def build_full_liouvillian(params: ModelParams, M: int) -> sp.csr_matrix:
    """Sparse superoperator on row-major ``vec(rho)``."""
    H, c_ops = full_operators(params, M)
    D = H.shape[0]
    I = sp.identity(D, format="csr")
    L = -1j * (sp.kron(H, I) - sp.kron(I, H.T))
    for c in c_ops:
        cd = c.conj().T
        cdc = (cd @ c).tocsr()
        L = L + sp.kron(c, c.conj()) - 0.5 * (sp.kron(cdc, I) + sp.kron(I, cdc.T))
    return L.tocsr()


@lru_cache(maxsize=16)
def _class_map(N: int):
    """Triple index of every pair (a, b) of computational basis states."""
    a = np.arange(2**N)[:, None]
    b = np.arange(2**N)[None, :]
    popcount = np.vectorize(lambda x: bin(int(x)).count("1"), otypes=[np.int64])
    mask = 2**N - 1
    n11 = popcount(a & b)
    n10 = popcount(a & (~b & mask))
    n01 = popcount((~a & mask) & b)
    cls = sym_basis(N)._lookup[n11, n10, n01]
    cls.setflags(write=False)
    return cls


def symmetric_operator(coeffs: np.ndarray, N: int) -> np.ndarray:
    """Dense ``sum_t coeffs[t] * P[t]`` on the 2**N emitter space."""
    return np.asarray(coeffs)[_class_map(N)]


def extract(rho: np.ndarray, N: int, M: int) -> ReducedState:
    """Reduced coefficients ``tr[(P x |p><q|) rho]`` of a full density matrix."""
    D = 2**N
    r4 = np.asarray(rho).reshape(D, M, D, M)
    X = np.einsum("bqap->abpq", r4).reshape(D * D, M * M)
    cls = _class_map(N).reshape(-1)
    T = len(sym_basis(N))
    out = np.zeros((T, M * M), dtype=complex)
    np.add.at(out, cls, X)
    return ReducedState(out.reshape(-1), N, M)


def inject(state: ReducedState, tol: float = 1e-10) -> np.ndarray:
    """The permutation-symmetric full density matrix with the given coefficients."""
    herm = state.hermiticity_error()
    if herm > tol * max(1.0, np.max(np.abs(state.coeffs))):
        raise ValueError(f"reduced state is not hermitian (error {herm:.3e})")
    N, M = state.N, state.M
    D = 2**N
    cls = _class_map(N)
    mult = sym_basis(N).multiplicity
    X = state.blocks[cls] / mult[cls][:, :, None, None]  # [a, b, p, q]
    return np.einsum("abpq->bqap", X).reshape(D * M, D * M)


def full_ground_state(N: int, M: int) -> np.ndarray:
    rho = np.zeros((2**N * M, 2**N * M), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def full_steady_state(params: ModelParams, M: int) -> np.ndarray:
    """Steady state of the full Liouvillian via a trace-constrained solve."""
    L = build_full_liouvillian(params, M).tolil()
    D = 2**params.N * M
    trace_row = np.zeros(D * D)
    trace_row[:: D + 1] = 1.0
    L[0, :] = trace_row
    rhs = np.zeros(D * D, dtype=complex)
    rhs[0] = 1.0
    x = sp.linalg.spsolve(L.tocsc(), rhs)
    rho = x.reshape(D, D)
    return 0.5 * (rho + rho.conj().T)


def full_propagate(
    params: ModelParams, M: int, rho0: np.ndarray, times, rtol=1e-10, atol=1e-12, method="DOP853"
):
    """Time evolution of the full density matrix; returns an array (len(times), D, D)."""
    from scipy.integrate import solve_ivp

    L = build_full_liouvillian(params, M)
    D = rho0.shape[0]
    times = np.asarray(times, dtype=float)
    y0 = np.asarray(rho0, dtype=complex).reshape(-1)
    extra = {}
    if method in ("Radau", "BDF", "LSODA"):
        # implicit schemes need a real system: d/dt [x; y] = [[A, -B], [B, A]] [x; y]
        A, B = sp.csr_matrix(L.real), sp.csr_matrix(L.imag)
        L = sp.bmat([[A, -B], [B, A]], format="csc")
        y0 = np.concatenate([y0.real, y0.imag])
        extra["jac"] = L
    sol = solve_ivp(
        lambda t, y: L @ y,
        (0.0, float(times[-1])),
        y0,
        method=method,
        t_eval=times,
        rtol=rtol,
        atol=atol,
        **extra,
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    y = sol.y
    if extra:
        y = y[: D * D] + 1j * y[D * D :]
    return y.T.reshape(len(times), D, D)


# random inputs ----------------------------------------------------------------


def random_density_matrix(N: int, M: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full density matrix (Wishart form), not permutation symmetric in general."""
    _check_size(N, M)
    D = 2**N * M
    k = rank or D
    X = rng.normal(size=(D, k)) + 1j * rng.normal(size=(D, k))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


def random_symmetric_state(N: int, M: int, rng: np.random.Generator, rank: int | None = None) -> ReducedState:
    """Reduced coefficients of the permutation average of a random density matrix."""
    return extract(random_density_matrix(N, M, rng, rank), N, M)


def random_params(rng: np.random.Generator, N: int, scale: float = 2.0) -> ModelParams:
    """Parameters with every term switched on, rates of order ``scale``."""
    return ModelParams(
        N=N,
        g=rng.uniform(-scale, scale),
        E=rng.uniform(-scale, scale),
        gamma=rng.uniform(0.1, scale),
        delta=rng.uniform(0.0, scale),
        kappa=rng.uniform(0.1, scale),
        delta0=rng.uniform(-scale, scale),
        delta1=rng.uniform(-scale, scale),
    )


# Dicke states ----------------------------------------------------------------


@dataclass(frozen=True)
class DickeLevel:
    l: float
    m: float
    degeneracy: int
    vectors: np.ndarray  # columns span the (l, m) eigenspace

    @property
    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T


def spin_operators(N: int):
    """Dense collective J_x, J_y, J_z on the emitter space."""
    J10 = collective(S10, N).toarray()
    J01 = collective(S01, N).toarray()
    Jz = 0.5 * collective(SZ, N).toarray()
    return (J10 + J01) / 2, (J10 - J01) / 2j, Jz


def dicke_eigenbasis(N: int, tol: float = 1e-8) -> list[DickeLevel]:
    """Simultaneous eigenspaces of J^2 and J_z by direct diagonalization."""
    if N > MAX_N + 4:
        raise ValueError("oracle size ceiling exceeded")
    Jx, Jy, Jz = spin_operators(N)
    J2 = Jx @ Jx + Jy @ Jy + Jz @ Jz
    nexc = np.array([bin(a).count("1") for a in range(2**N)])
    levels = []
    for n in range(N + 1):
        idx = np.nonzero(nexc == n)[0]
        w, v = np.linalg.eigh(J2[np.ix_(idx, idx)])
        lvals = 0.5 * (np.sqrt(1 + 4 * np.clip(w, 0, None)) - 1)
        lrounded = np.round(2 * lvals) / 2
        if np.max(np.abs(lvals - lrounded)) > tol:
            raise RuntimeError("J^2 eigenvalues not of the form l(l+1)")
        for l in sorted(set(lrounded), reverse=True):
            sel = lrounded == l
            vec = np.zeros((2**N, int(sel.sum())), dtype=complex)
            vec[idx] = v[:, sel]
            levels.append(DickeLevel(float(l), n - N / 2, int(sel.sum()), vec))
    return levels
