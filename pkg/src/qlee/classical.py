"""Classical reference solvers: forward-Euler stepping, matrix exponentials, spectral norms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

DENSE_DIM_LIMIT = 1 << 14


class ConvergenceError(RuntimeError):
    pass


@dataclass
class FdmResult:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    diverged: bool = False
    diverged_at: float | None = None


def fdm_evolve(A, f0, tau: float, steps: int, snapshot_every: int = 1,
               growth_limit: float = 10.0) -> FdmResult:
    """Plain forward Euler ``f <- f + tau * A f``; no renormalization.

    Stepping stops at the first non-finite value or once the norm exceeds
    ``growth_limit`` times the initial norm; the result is then flagged
    ``diverged`` and keeps the snapshots taken so far.
    """
    A = sp.csr_array(A)
    f = np.array(f0, dtype=complex)
    if A.shape[1] != f.shape[0]:
        raise ValueError(f"operator dim {A.shape} does not match vector length {f.shape[0]}")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    n0 = np.linalg.norm(f)
    res = FdmResult([0.0], [f.copy()], [float(n0)])
    for k in range(1, steps + 1):
        f = f + tau * (A @ f)
        nrm = float(np.linalg.norm(f))
        if not np.isfinite(nrm) or nrm > growth_limit * n0:
            res.diverged = True
            res.diverged_at = k * tau
            break
        if k % snapshot_every == 0:
            res.times.append(k * tau)
            res.states.append(f.copy())
            res.norms.append(nrm)
    return res


def expm_apply(A, f0, t: float) -> np.ndarray:
    """``exp(A t) f0`` via truncated-Taylor action (no dense exponential)."""
    f0 = np.asarray(f0, dtype=complex)
    if t == 0:
        return f0.copy()
    return expm_multiply(sp.csr_array(A) * t, f0)


def expm_dense(A, t: float = 1.0) -> np.ndarray:
    """Dense ``exp(A t)`` (scaling and squaring with Pade), guarded by dimension."""
    dim = A.shape[0]
    if dim > DENSE_DIM_LIMIT:
        raise ValueError(f"dense exponential refused for dim {dim} > {DENSE_DIM_LIMIT}")
    M = A.toarray() if sp.issparse(A) else np.asarray(A)
    return scipy.linalg.expm(M * t)


def operator_norm(M, rtol: float = 1e-8, max_iter: int = 200_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``M^dagger M``."""
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    if M.shape[0] > DENSE_DIM_LIMIT:
        raise ValueError("operator_norm refused above dense guard")
    G = M.conj().T @ M
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(G.shape[0]) + 1j * rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(max_iter):
        w = G @ v
        rho = float(np.vdot(v, w).real)
        if rho <= 0.0:
            return 0.0
        # the eigen-residual bounds the gap to the top eigenvalue of G
        if np.linalg.norm(w - rho * v) <= rtol * rho:
            return float(np.sqrt(rho))
        v = w / np.linalg.norm(w)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps (last estimate {np.sqrt(rho):.6g})"
    )
