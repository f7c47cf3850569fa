"""Dense double-precision kernels used on projected (small) matrices.

Everything here operates on plain ndarrays. The heavy lifting is delegated
to LAPACK through numpy/scipy; the functions add the contracts the rest of
the library relies on (rank reporting, symmetry repair, residual checks).
"""

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack


class SolvabilityError(np.linalg.LinAlgError):
    """The Sylvester operator of a Lyapunov solve is (near-)singular."""


class IterationLimitError(RuntimeError):
    """An extremal-eigenvalue iteration did not converge."""


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {M.shape}")
    return M


def _require_square(M, name="matrix"):
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def frob_norm(M):
    return float(np.linalg.norm(np.asarray(M), "fro"))


def spec_norm_2(M):
    M = _as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def qr_thin(block, rank_tol=1e-12):
    """Economy QR of a tall block with rank reporting.

    Returns (Q, R, rank) with Q @ R == block and Q orthonormal. The rank
    counts diagonal entries of R exceeding rank_tol * ||block||_F, so a
    zero block reports rank 0 rather than failing.
    """
    block = _as_matrix(block)
    rows, cols = block.shape
    if rows < cols:
        raise ValueError(f"block must be tall, got shape {block.shape}")
    if cols == 0:
        return block.copy(), np.zeros((0, 0)), 0
    Q, R = sla.qr(block, mode="economic")
    thresh = rank_tol * frob_norm(block)
    rank = int(np.sum(np.abs(np.diag(R)) > thresh))
    return Q, R, rank


def expm(M):
    """Matrix exponential (scaling and squaring with diagonal Pade)."""
    M = _require_square(M)
    if M.size == 0:
        return M.copy()
    return sla.expm(M)


def sym_part(M):
    return 0.5 * (M + M.T)


class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues decreasing."""

    def __init__(self, values, vectors):
        self.values = values
        self.vectors = vectors

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def sym_eig(M):
    M = _require_square(M)
    w, U = np.linalg.eigh(sym_part(M))
    order = np.argsort(w)[::-1]
    return SymEig(w[order], U[:, order])


class LyapunovSolver:
    """Bartels-Stewart solver for F X + X F^T + Q = 0 with F fixed.

    The real Schur form of F is computed once; repeated solves against
    different right-hand sides reuse it (one trsyl call each), which is
    what the fixed-step implicit time integration needs.
    """

    def __init__(self, F):
        F = _require_square(F, "F")
        self.F = F
        self.n = F.shape[0]
        self.S, self.U = sla.schur(F, output="real")
        ev = np.linalg.eigvals(self.S) if self.n else np.array([])
        # lambda_i + lambda_j == 0 for some pair means no unique solution
        if self.n:
            pair_sums = np.abs(ev[:, None] + ev[None, :])
            scale = max(np.max(np.abs(ev)), 1.0)
            if np.min(pair_sums) <= 1e-14 * scale:
                raise SolvabilityError(
                    "Lyapunov operator is singular: eigenvalue pair sums to zero"
                )

    def solve(self, Q):
        """Solve F X + X F^T + Q = 0 for symmetric Q; X is symmetrized."""
        Q = _require_square(Q, "Q")
        if Q.shape[0] != self.n:
            raise ValueError(f"Q has dimension {Q.shape[0]}, expected {self.n}")
        if self.n == 0:
            return Q.copy()
        C = self.U.T @ (-Q) @ self.U
        Y, scale, info = lapack.dtrsyl(self.S, self.S, C, tranb="T")
        if info < 0 or scale == 0.0:
            raise SolvabilityError(f"trsyl failed with info={info}, scale={scale}")
        if info == 1:
            raise SolvabilityError(
                "trsyl solved a perturbed system: near-singular Lyapunov operator"
            )
        X = self.U @ (Y / scale) @ self.U.T
        return sym_part(X)


def lyap_direct(F, Q):
    """One-shot solve of F X + X F^T + Q = 0 (Schur reduction + back-solve)."""
    return LyapunovSolver(F).solve(Q)


def log_norm_mu2(op, tol=1e-10, maxiter=None, dense_cutoff=800):
    """2-logarithmic norm: largest eigenvalue of (A + A^T)/2.

    Accepts a dense array or anything with the linear-operator interface
    (`dim`, `apply`, optionally `apply_transpose`). Small or
    transpose-less operators are assembled densely; large ones go through
    a Lanczos iteration on the symmetrized action.
    """
    if isinstance(op, np.ndarray):
        A = _require_square(op)
        return 0.5 * float(np.linalg.eigvalsh(A + A.T)[-1])

    n = op.dim
    has_transpose = hasattr(op, "apply_transpose")
    if n <= dense_cutoff or not has_transpose:
        A = op.apply(np.eye(n))
        return 0.5 * float(np.linalg.eigvalsh(A + A.T)[-1])

    from scipy.sparse.linalg import LinearOperator as ScipyOp
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    def sym_action(v):
        V = v.reshape(n, 1)
        return 0.5 * (op.apply(V) + op.apply_transpose(V)).ravel()

    sym = ScipyOp((n, n), matvec=sym_action, dtype=float)
    try:
        w = eigsh(sym, k=1, which="LA", tol=tol, maxiter=maxiter,
                  return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise IterationLimitError(
            f"symmetric extremal-eigenvalue iteration did not converge: {exc}"
        ) from exc
    return float(w[0])
