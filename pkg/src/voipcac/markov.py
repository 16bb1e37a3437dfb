"""Stationary distributions of finite continuous-time Markov chains."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DIRECT_SOLVE_LIMIT = 5000
BALANCE_TOL = 1e-10


class SteadyStateError(ArithmeticError):
    """The balance equations could not be solved to tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _direct(G: sp.csr_matrix) -> np.ndarray:
    n = G.shape[0]
    A = sp.vstack([G.T.tocsr()[: n - 1], sp.csr_matrix(np.ones((1, n)))], format="csc")
    b = np.zeros(n)
    b[n - 1] = 1.0
    # SuperLU with partial pivoting
    try:
        return spla.spsolve(A, b)
    except RuntimeError as exc:
        raise SteadyStateError(f"factorization failed: {exc}", float("inf")) from None


def _gauss_seidel(G: sp.csr_matrix, tol: float, max_iter: int) -> np.ndarray:
    """Successive sweeps on pi G = 0 written as (D + L) x = -U x on G^T."""
    A = G.T.tocsr()
    lower = sp.tril(A, k=0, format="csr")
    upper = sp.triu(A, k=1, format="csr")
    x = np.full(A.shape[0], 1.0 / A.shape[0])
    scale = max(abs(G.diagonal()).max(), 1.0)
    for _ in range(max_iter):
        x = spla.spsolve_triangular(lower, -(upper @ x), lower=True)
        x = np.abs(x)
        x /= x.sum()
        if np.abs(A @ x).max() <= tol * scale:
            return x
    raise SteadyStateError(
        f"Gauss-Seidel did not converge in {max_iter} sweeps", float(np.abs(A @ x).max())
    )


def solve_ctmc(G: sp.spmatrix, method: str = "auto", tol: float = BALANCE_TOL,
               max_iter: int = 100_000) -> tuple[np.ndarray, float]:
    """Stationary vector of an irreducible generator, plus its balance residual."""
    G = sp.csr_matrix(G)
    n = G.shape[0]
    if n == 1:
        return np.ones(1), 0.0
    if method == "auto":
        method = "direct" if n < DIRECT_SOLVE_LIMIT else "iterative"
    if method == "direct":
        pi = _direct(G)
    elif method == "iterative":
        pi = _gauss_seidel(G, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(pi)):
        raise SteadyStateError("singular balance system", float("inf"))
    if pi.min() < -1e-12:
        raise SteadyStateError("negative stationary probability", float(-pi.min()))
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(G.T @ pi).max())
    scale = max(float(np.abs(G.diagonal()).max()), 1.0)
    if residual > tol * scale:
        raise SteadyStateError("balance equations not satisfied", residual)
    return pi, residual
