"""Shared test utilities."""

import numpy as np

from opendicke import oracle
from opendicke.basis import state_dim


def oracle_matrix(params, M, rng, extra=8):
    """Reduced generator reconstructed from the full-space action on random operators."""
    N = params.N
    n = state_dim(N, M)
    D = 2**N * M
    X, Y = [], []
    for _ in range(n + extra):
        rho = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
        X.append(oracle.extract(rho, N, M).coeffs)
        Y.append(oracle.extract(oracle.apply_full_liouvillian(params, M, rho), N, M).coeffs)
    X, Y = np.array(X).T, np.array(Y).T
    return Y @ np.linalg.pinv(X)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
