"""Steady states, Liouvillian gap, time propagation and Fock cutoff selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from . import dicke
from .basis import ReducedState, ground_state, state_dim, sym_basis, trace_functional
from .liouvillian import LiouvillianOp, assemble
from .params import ModelParams

log = logging.getLogger(__name__)

DENSE_GAP_MAX_DIM = 600
#: default ceiling of the automatic Fock cutoff search (reduced dimension T(N) M**2)
FOCK_MAX_DIM = 300_000


class SolverError(RuntimeError):
    pass


class SteadyStateError(SolverError):
    pass


class GapError(SolverError):
    pass


class PropagationError(SolverError):
    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} (at t = {t_fail:.6g})")
        self.t_fail = t_fail


class FockCutoffError(SolverError):
    pass


# steady state -----------------------------------------------------------------

#: largest linear system (unknowns) factorized in one piece by default
DIRECT_MAX_DIM = 30_000
#: target size of the photon-shell blocks of the iterative solver
SHELL_BLOCK_DIM = 20_000


def _constrained_matrix(L: LiouvillianOp) -> sp.csc_matrix:
    """Generator with the first row (a trace row) replaced by the trace functional.

    The trace rows of a trace-preserving generator sum to zero, so dropping
    one of them loses nothing and the new row pins the normalization.
    """
    return _replace_first_row(L.matrix, trace_functional(L.N, L.M))


def _replace_first_row(G, row_values) -> sp.csc_matrix:
    keep = np.ones(G.shape[0])
    keep[0] = 0.0
    nz = np.nonzero(row_values)[0]
    row = sp.csr_matrix((row_values[nz], (np.zeros(len(nz), int), nz)), shape=G.shape)
    return (sp.diags(keep) @ G + row).tocsc()


@dataclass
class SteadyResult:
    state: ReducedState
    residual: float
    fock_report: float
    M: int
    method: str = "direct"
    lu: object = field(default=None, repr=False)
    iterations: int = 0


@dataclass
class _LinearSystem:
    """``A w = e_0`` whose solution embeds into the steady-state coefficients."""

    A: sp.csc_matrix
    flat: np.ndarray  # coefficient index represented by each unknown
    phase: np.ndarray | None = None  # real form: coeff[flat] = phase * w
    S: sp.csr_matrix | None = None

    @property
    def real(self) -> bool:
        return self.S is not None

    def embed(self, w: np.ndarray) -> np.ndarray:
        return self.S @ w if self.real else w

    def restrict(self, coeffs: np.ndarray) -> np.ndarray:
        if self.real:
            return (coeffs[self.flat] / self.phase).real
        return np.asarray(coeffs, dtype=complex)


def _real_system(L: LiouvillianOp) -> _LinearSystem:
    """Real form of the constrained steady-state problem, see :func:`has_real_symmetry`."""
    reps, phase, orbit = _real_embedding(L.N, L.M)
    n, nr = L.dim, len(reps)
    S = sp.csr_matrix((phase, (np.arange(n), orbit)), shape=(n, nr))
    GS = (L.matrix @ S).tocsr()[reps]
    B = (sp.diags(1.0 / phase[reps]) @ GS).real
    tr = np.zeros(nr)
    np.add.at(tr, orbit, trace_functional(L.N, L.M).real)
    return _LinearSystem(_replace_first_row(B, tr), reps, phase[reps], S)


def _complex_system(L: LiouvillianOp) -> _LinearSystem:
    return _LinearSystem(_constrained_matrix(L), np.arange(L.dim))


def steady_state(
    L: LiouvillianOp,
    tol: float = 1e-10,
    *,
    keep_factor: bool = False,
    method: str = "auto",
    x0: ReducedState | None = None,
    direct_max_dim: int = DIRECT_MAX_DIM,
) -> SteadyResult:
    """Null vector of ``L`` normalized to unit trace.

    Parameters
    ----------
    L : LiouvillianOp
        Assembled generator.
    tol : float
        Acceptance threshold on ``|L v| / |v|`` relative to the largest
        entry of ``L``.
    keep_factor : bool
        Keep the complex LU factor of the trace-constrained generator on the
        result (used by :func:`liouvillian_gap`). Implies a direct solve.
    method : {"auto", "direct", "shells"}
        ``direct`` factorizes the whole system. ``shells`` runs GMRES
        preconditioned by a symmetric block Gauss-Seidel sweep over photon
        shells ``max(p, q)``, each block factorized exactly; this keeps
        memory roughly linear in the cutoff. ``auto`` picks ``direct`` up to
        ``direct_max_dim`` unknowns.
    x0 : ReducedState, optional
        Initial guess for the iterative path, e.g. the steady state at a
        smaller cutoff or a neighbouring drive; its photon grid is padded or
        truncated to ``L.M``.

    Notes
    -----
    On resonance the problem is solved in a real form of half the size (see
    :func:`has_real_symmetry`); the solution is identical.
    """
    if method not in ("auto", "direct", "shells"):
        raise ValueError(f"unknown steady-state method {method!r}")
    if keep_factor:
        method = "direct"
    use_real = has_real_symmetry(L.params) and not keep_factor
    system = _real_system(L) if use_real else _complex_system(L)
    n = system.A.shape[0]
    if method == "auto":
        method = "direct" if n <= direct_max_dim else "shells"
    rhs = np.zeros(n, dtype=system.A.dtype)
    rhs[0] = 1.0
    lu = None
    iterations = 0
    if method == "direct":
        try:
            lu = spla.splu(system.A)
            w = lu.solve(rhs)
        except MemoryError:
            log.warning("direct steady-state factorization ran out of memory; switching to shells")
            method = "shells"
        except RuntimeError as exc:  # exactly singular: more than one steady state
            raise SteadyStateError(f"trace-constrained generator is singular ({exc}); the null space is degenerate") from exc
    if method == "shells":
        guess = None if x0 is None else system.restrict(_regrid(x0, L.M).coeffs)
        w, iterations = _shell_solve(system, L.M, rhs, guess)
    x = system.embed(w)
    if not np.all(np.isfinite(x)):
        raise SteadyStateError("steady-state solve produced non-finite values (degenerate null space?)")
    state = ReducedState(x, L.N, L.M)
    # hermitian part; the anti-hermitian remainder is round-off
    state = ReducedState(0.5 * (state.coeffs + state.dagger().coeffs), L.N, L.M)
    res = float(np.linalg.norm(L.matrix @ state.coeffs) / np.linalg.norm(state.coeffs))
    scale = _scale(L)
    if res > tol * scale:
        raise SteadyStateError(
            f"steady-state residual {res:.3e} exceeds tolerance {tol:.1e} x |L| ({scale:.3g}); "
            "the null space may be degenerate"
        )
    trace_err = abs(state.trace() - 1)
    if trace_err > 1e-10:
        raise SteadyStateError(f"steady state trace off by {trace_err:.3e}")
    top = fock_top_population(state)
    return SteadyResult(state, res, top, L.M, method, lu if keep_factor else None, iterations)


def shell_blocks(shell: np.ndarray, block_dim: int = SHELL_BLOCK_DIM) -> list[np.ndarray]:
    """Partition unknowns into consecutive photon shells of about ``block_dim`` each."""
    counts = np.bincount(shell)
    edges = [0]
    size = 0
    for r, c in enumerate(counts):
        if size and size + c > block_dim:
            edges.append(r)
            size = 0
        size += c
    edges.append(len(counts))
    return [np.nonzero((shell >= a) & (shell < b))[0] for a, b in zip(edges[:-1], edges[1:])]


def _shell_solve(system: _LinearSystem, M: int, rhs, x0, *, block_dim=SHELL_BLOCK_DIM, rtol=1e-12):
    A = system.A.tocsr()
    p = (system.flat // M) % M
    q = system.flat % M
    blocks = shell_blocks(np.maximum(p, q), block_dim)
    rows = [A[b] for b in blocks]
    diag = [r[:, b] for r, b in zip(rows, blocks)]
    lus = [spla.splu(d.tocsc()) for d in diag]
    sweep = list(range(len(blocks))) + list(range(len(blocks) - 2, -1, -1))

    def precondition(r):
        y = np.zeros_like(r)
        for k in sweep:
            b = blocks[k]
            y[b] = lus[k].solve(r[b] - rows[k] @ y + diag[k] @ y[b])
        return y

    P = spla.LinearOperator(A.shape, precondition, dtype=A.dtype)
    if x0 is None:
        x0 = precondition(rhs)
    count = [0]

    def tick(_):
        count[0] += 1

    # residuals below ~eps * |A| are round-off; asking for less only stalls
    atol = 100 * np.finfo(float).eps * abs(A).max()
    w, info = spla.gmres(
        A, rhs, x0=x0, M=P, rtol=rtol, atol=atol, restart=100, maxiter=10, callback=tick, callback_type="pr_norm"
    )
    log.debug("shell GMRES: %d blocks, %d iterations, info=%d", len(blocks), count[0], info)
    return w, count[0]


def _regrid(state: ReducedState, M: int) -> ReducedState:
    """Copy of ``state`` with its photon grid padded with zeros or truncated to ``M``."""
    if state.M == M:
        return state
    blocks = np.zeros((state.blocks.shape[0], M, M), dtype=complex)
    m = min(M, state.M)
    blocks[:, :m, :m] = state.blocks[:, :m, :m]
    return ReducedState(blocks.reshape(-1), state.N, M)


def _scale(L: LiouvillianOp) -> float:
    """Largest absolute entry of the generator, a cheap norm estimate."""
    return float(max(1.0, abs(L.matrix).max()))


def fock_top_population(state: ReducedState) -> float:
    """Population of the two highest photon levels (vacuum excluded)."""
    P = state.photon_distribution()
    lo = max(state.M - 2, 1)
    return float(P[lo:].sum())


# real reduction ---------------------------------------------------------------


def has_real_symmetry(params: ModelParams) -> bool:
    """Whether the steady state admits a real representation.

    On resonance the Hamiltonian is real and changes sign under
    ``exp(i pi J11)``, while every dissipator is invariant. Complex
    conjugation composed with that unitary therefore maps steady states to
    steady states, so the (unique) steady state satisfies
    ``coeff(t, p, q) = i**(n10 - n01) * w(t, p, q)`` with ``w`` real.
    """
    return params.delta0 == 0 and params.delta1 == 0


def _real_embedding(N: int, M: int):
    """Representatives, phases and the orbit map of the real steady-state subspace.

    Returns ``(reps, phase, orbit)``: ``orbit[i]`` is the column of the
    representative of coefficient ``i``; hermiticity pairs ``(t, p, q)``
    with ``(conj t, q, p)`` and both share one real unknown.
    """
    basis = sym_basis(N)
    T = len(basis.triples)
    idx = np.arange(T * M * M).reshape(T, M, M)
    partner = idx[basis.conj_perm].transpose(0, 2, 1).ravel()
    rep_of = np.minimum(idx.ravel(), partner)
    reps, orbit = np.unique(rep_of, return_inverse=True)
    charge = basis.counts[:, 1] - basis.counts[:, 2]
    phase = np.repeat(1j ** (charge % 4), M * M)
    return reps, phase, orbit


# gap -------------------------------------------------------------------------


@dataclass
class GapResult:
    lambda1: complex
    gamma: float
    flagged: bool = False
    method: str = "arnoldi"

    @property
    def normalized(self) -> float:
        return abs(self.lambda1) / self.gamma if self.gamma else abs(self.lambda1)


def liouvillian_gap(
    L: LiouvillianOp,
    steady: SteadyResult | None = None,
    *,
    k: int = 4,
    tol: float = 1e-10,
    dense_max_dim: int = DENSE_GAP_MAX_DIM,
) -> GapResult:
    """Nonzero eigenvalue of smallest magnitude.

    Shift-invert Arnoldi at zero on the traceless subspace: the inverse of
    ``L`` restricted there is applied with the trace-constrained LU, and the
    steady-state direction is projected out, so its eigenvalue maps to 0
    instead of dominating.
    """
    gamma = L.params.gamma
    if L.dim <= dense_max_dim:
        return _dense_gap(L, tol)
    if steady is None or steady.lu is None:
        steady = steady_state(L, keep_factor=True)
    lu = steady.lu
    rho = steady.state.coeffs
    t = trace_functional(L.N, L.M)

    def project(x):
        return x - rho * (t @ x)

    def op(b):
        b = project(np.asarray(b, dtype=complex).ravel())
        b[0] = 0.0
        return project(lu.solve(b))

    A = spla.LinearOperator((L.dim, L.dim), matvec=op, dtype=complex)
    try:
        mu = spla.eigs(A, k=min(k, L.dim - 2), which="LM", return_eigenvectors=False, tol=1e-12, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            raise GapError("Arnoldi iteration did not converge") from exc
        mu = exc.eigenvalues
    mu = mu[np.abs(mu) > 0]
    lam = 1.0 / mu[np.argmax(np.abs(mu))]
    flagged = abs(lam) < tol * _scale(L)
    return GapResult(complex(lam), gamma, flagged, "arnoldi")


def _dense_gap(L: LiouvillianOp, tol: float) -> GapResult:
    w = np.linalg.eigvals(L.matrix.toarray())
    order = np.argsort(np.abs(w))
    if len(w) < 2:
        raise GapError("generator has a single eigenvalue")
    lam = w[order[1]]
    flagged = abs(lam) < tol * _scale(L) or abs(w[order[0]]) > tol * _scale(L)
    return GapResult(complex(lam), L.params.gamma, flagged, "dense")


# propagation -----------------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    max_trace_drift: float = 0.0
    max_hermiticity_error: float = 0.0
    nfev: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def series(self, fn) -> np.ndarray:
        return np.array([fn(s) for s in self.states])


IMPLICIT_METHODS = ("Radau", "BDF", "LSODA")


def _realify(G) -> sp.csc_matrix:
    """Real form [[A, -B], [B, A]] of the complex generator A + iB."""
    A, B = sp.csr_matrix(G.real), sp.csr_matrix(G.imag)
    return sp.bmat([[A, -B], [B, A]], format="csc")


def propagate(
    L: LiouvillianOp,
    initial: ReducedState,
    t_grid,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    method: str = "DOP853",
    max_step: float = np.inf,
) -> Trajectory:
    """Integrate ``d/dt v = L v`` and return snapshots at ``t_grid``.

    ``method`` is any embedded Runge-Kutta scheme of ``solve_ivp``
    ("DOP853", "RK45", or the implicit "Radau" for stiff problems).
    Trace drift is logged, not corrected.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be a non-empty increasing sequence")
    G = L.matrix
    y0 = np.asarray(initial.coeffs, dtype=complex)
    t0 = 0.0 if t_grid[0] >= 0 else float(t_grid[0])
    kwargs = dict(t_eval=t_grid, rtol=rtol, atol=atol, method=method, max_step=max_step)
    implicit = method in IMPLICIT_METHODS
    if implicit:
        # the implicit schemes of solve_ivp are real-only: integrate [Re v, Im v]
        G = _realify(G)
        y0 = np.concatenate([y0.real, y0.imag])
        kwargs["jac"] = G
    if t_grid[-1] == t0:
        ys = np.repeat(y0[:, None], len(t_grid), axis=1)
        nfev = 0
    else:
        sol = solve_ivp(lambda t, y: G @ y, (t0, float(t_grid[-1])), y0, **kwargs)
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if len(sol.t) else t0
            raise PropagationError(sol.message, t_fail)
        ys = sol.y
        nfev = sol.nfev
    if implicit:
        n = L.dim
        ys = ys[:n] + 1j * ys[n:]
    states = [ReducedState(ys[:, i], L.N, L.M) for i in range(ys.shape[1])]
    tr0 = initial.trace()
    drift = max((abs(s.trace() - tr0) for s in states), default=0.0)
    herm = max((s.hermiticity_error() for s in states), default=0.0)
    if drift > 1e-8:
        log.warning("trace drift %.3e during propagation", drift)
    else:
        log.debug("trace drift %.3e", drift)
    return Trajectory(t_grid, states, float(drift), float(herm), nfev)


# fock cutoff -----------------------------------------------------------------


@dataclass
class FockCriteria:
    """Convergence criteria and ceilings of :func:`auto_fock_cutoff`."""

    M_start: int = 1
    step: int = 2
    top_pop_tol: float = 1e-8
    rel_change: float = 1e-3
    abs_floor: float = 1e-12
    M_max: int = 120
    max_dim: int = FOCK_MAX_DIM


def auto_fock_cutoff(
    params: ModelParams,
    criteria: FockCriteria | None = None,
    *,
    tol: float = 1e-10,
    x0: ReducedState | None = None,
    return_steady: bool = False,
):
    """Smallest M (stepping by ``criteria.step``) meeting the convergence criteria.

    Converged means the two highest Fock levels at M hold less than
    ``top_pop_tol`` and <b+b> changes by less than ``rel_change`` going to
    M + step. Each probe starts from the previous steady state.

    Returns
    -------
    M : int
    history : list of (M, <b+b>, top population)
    steady : SteadyResult
        Only with ``return_steady``: the steady state at the returned M.

    Raises
    ------
    FockCutoffError
        When ``M_max`` or ``max_dim`` is reached first; the message carries
        the last cutoff examined and its top-level population.
    """
    c = criteria or FockCriteria()
    history = []
    solved = {}
    last = [x0]

    def probe(M):
        L = assemble(params, M, max_dim=c.max_dim)
        st = steady_state(L, tol, x0=last[0])
        last[0] = st.state
        solved[M] = st
        for old in sorted(solved)[:-2]:
            del solved[old]
        m = float(np.arange(M) @ st.state.photon_distribution())
        history.append((M, m, st.fock_report))
        log.info("fock probe M=%d <b+b>=%.8g top=%.3e (%s)", M, m, st.fock_report, st.method)
        return m, st.fock_report

    def ceiling(reason):
        M_last, m_last, top_last = history[-1]
        return FockCutoffError(
            f"ceiling exceeded ({reason}); last cutoff M={M_last} has top-level population "
            f"{top_last:.3e} and <b+b>={m_last:.6g}"
        )

    M = c.M_start
    m_prev, top_prev = probe(M)
    while True:
        M_next = M + c.step
        if M_next > c.M_max:
            raise ceiling(f"M_max={c.M_max}")
        if state_dim(params.N, M_next) > c.max_dim:
            raise ceiling(f"dimension {state_dim(params.N, M_next)} > max_dim={c.max_dim}")
        m_next, top_next = probe(M_next)
        close = abs(m_next - m_prev) <= max(c.rel_change * abs(m_next), c.abs_floor)
        if top_prev < c.top_pop_tol and close:
            return (M, history, solved[M]) if return_steady else (M, history)
        M, m_prev, top_prev = M_next, m_next, top_next


# cascade protocol --------------------------------------------------------------


@dataclass
class CascadeResult:
    E_star: float
    R_lmin_grid: np.ndarray
    E_grid: np.ndarray
    steady: SteadyResult
    trajectory: Trajectory
    dark: dict  # l -> array of p(l, -l)

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def total_dark(self) -> np.ndarray:
        N = self.steady.state.N
        return sum(self.dark[l] for l in dicke.l_values(N)[1:])


def cascade_protocol(
    params: ModelParams,
    E_grid,
    M: int,
    *,
    t_max: float = 10.0,
    t_min: float | None = None,
    n_out: int = 241,
    method: str = "Radau",
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> CascadeResult:
    """Drive to the steady state maximizing R(l_min) over ``E_grid``, then switch the drive off.

    The relaxation is sampled on a log grid from ``t_min`` (default a tenth
    of 1/g) to ``t_max`` in units of 1/gamma, plus t = 0.
    """
    N = params.N
    lm = dicke.l_min(N)
    base = assemble(params.replace(E=0.0), M)
    E_grid = np.asarray(E_grid, dtype=float)
    Rs = np.full(len(E_grid), np.nan)
    for i, E in enumerate(E_grid):
        try:
            st = steady_state(base.with_drive(E))
        except SolverError as exc:
            log.warning("steady state failed at E=%g: %s", E, exc)
            continue
        Rs[i] = dicke.collectivity_R(st.state, lm)
    if not np.any(np.isfinite(Rs)):
        raise SolverError("R(l_min) undefined on the whole drive grid; cascade aborted")
    i_star = int(np.nanargmax(Rs))
    E_star = float(E_grid[i_star])
    steady = steady_state(base.with_drive(E_star))
    if t_min is None:
        t_min = 0.1 / abs(params.g) if params.g else 1e-4 * t_max
    times = np.concatenate([[0.0], np.geomspace(t_min, t_max, n_out - 1)])
    traj = propagate(base.with_drive(0.0), steady.state, times, method=method, rtol=rtol, atol=atol)
    dark = {l: traj.series(lambda s, l=l: dicke.dark_state_population(s, l)) for l in dicke.l_values(N)}
    return CascadeResult(E_star, Rs, E_grid, steady, traj, dark)
