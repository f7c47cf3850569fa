"""Projection solvers for dX/dt = A X + X A^T + B B^T, X(t0) = Z0 Z0^T.

Two routes share the same Krylov outer loop. The exponential route
propagates the projected Gramian integral over the time grid with a
composite Gauss-Legendre panel rule; the BDF route integrates the
projected matrix ODE with a fixed-step backward differentiation formula,
each step reducing to one small algebraic Lyapunov solve. Convergence is
monitored through the coupling-block residual formula, which never forms
the large approximation.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .dense import (LyapunovSolver, SolvabilityError, expm, frob_norm,
                    spec_norm_2, sym_eig, sym_part)
from .krylov import KrylovBreakdown, KrylovDecomposition
from .sparsela import LinearOperator, wrap_dense, wrap_sparse

BDF_TABLE = {
    1: (1.0, (1.0,)),
    2: (2.0 / 3.0, (4.0 / 3.0, -1.0 / 3.0)),
    3: (6.0 / 11.0, (18.0 / 11.0, -9.0 / 11.0, 2.0 / 11.0)),
}


class PSDViolationError(ValueError):
    """A projected solution has an eigenvalue below the allowed floor."""


@dataclass(frozen=True)
class BDFCoefficients:
    order: int
    beta: float
    alphas: tuple

    @classmethod
    def for_order(cls, p):
        if p not in BDF_TABLE:
            raise ValueError(f"BDF order must be in {sorted(BDF_TABLE)}, got {p}")
        beta, alphas = BDF_TABLE[p]
        return cls(p, beta, alphas)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0, t0+h, ..., tf."""

    t0: float
    tf: float
    h: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"step must be positive, got {self.h}")
        if self.tf <= self.t0:
            raise ValueError(f"need tf > t0, got [{self.t0}, {self.tf}]")
        steps = (self.tf - self.t0) / self.h
        if abs(steps - round(steps)) > 1e-8 * max(steps, 1.0):
            raise ValueError(f"({self.tf} - {self.t0}) is not a multiple of h={self.h}")

    @property
    def n_steps(self):
        return int(round((self.tf - self.t0) / self.h))

    @property
    def nodes(self):
        return self.t0 + self.h * np.arange(self.n_steps + 1)


@dataclass
class SolverConfig:
    method: str = "eba_exp"             # "eba_exp" | "eba_bdf"
    krylov_variant: str = "extended"    # "extended" | "block"
    m_max: int = 30
    tol: float = 1e-10
    bdf_order: int = 2
    quadrature_order: int = 4
    dtol: float = 1e-12
    probe_stride: int = 10
    rank_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.bdf_order not in BDF_TABLE:
            raise ValueError(f"bdf_order must be in {sorted(BDF_TABLE)}")


@dataclass
class SymLowRank:
    """Tall factor Z representing the PSD matrix Z @ Z.T."""

    Z: np.ndarray

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, 0)))

    @property
    def rank(self):
        return self.Z.shape[1]

    def to_dense(self):
        return self.Z @ self.Z.T


@dataclass
class IterationRecord:
    m: int
    basis_size: int
    residual_final: float
    residual_probe_max: float
    residual_max: float
    coupling_norm: float
    gbar_sup: float
    small_final: np.ndarray
    elapsed: float


@dataclass
class Trajectory:
    grid: TimeGrid
    nodes: np.ndarray
    small_solutions: np.ndarray        # (n_nodes, k, k) at the final step
    residuals: np.ndarray
    decomposition: KrylovDecomposition
    converged: bool
    method: str
    iterations: list
    dim: int
    config: SolverConfig

    @property
    def final_residual(self):
        return float(self.residuals[-1])

    @property
    def basis_size(self):
        return self.small_solutions.shape[1]

    def solution_dense(self, i=-1):
        if self.decomposition is None:
            return np.zeros((self.dim, self.dim))
        return self.decomposition.lift(self.small_solutions[i])

    def lowrank_factor(self, i=-1, dtol=None):
        dtol = self.config.dtol if dtol is None else dtol
        if self.decomposition is None:
            return SymLowRank.empty(self.dim)
        return truncate_lowrank(self.decomposition, self.small_solutions[i], dtol)

    def ranks(self, dtol=None):
        """Rank of the truncated factor at every node."""
        dtol = self.config.dtol if dtol is None else dtol
        out = np.empty(len(self.nodes), dtype=int)
        for i, G in enumerate(self.small_solutions):
            if G.size == 0:
                out[i] = 0
                continue
            vals = np.linalg.eigvalsh(sym_part(G))
            out[i] = int(np.sum(vals > dtol))
        return out


# -- small dense building blocks -------------------------------------------


def gauss_legendre(q, a, b):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (b - a) * (x + 1.0) + a, 0.5 * (b - a) * w


def _gl_subpanel_count(t_norm, width, q, target=1e-12):
    """Panels needed so the q-point rule resolves integrand variation
    exp(c s) with |c| <= 2||T||: per-panel relative error below target."""
    coef = math.exp(4.0 * math.lgamma(q + 1) - math.log(2 * q + 1)
                    - 3.0 * math.lgamma(2 * q + 1))
    c_max = (target / coef) ** (1.0 / (2 * q))
    return int(min(max(1, np.ceil(2.0 * t_norm * width / c_max)), 4096))


def _panel_increment(T, B, width, q):
    """integral over [0, width] of e^{sT} B B^T e^{sT^T} ds.

    Composite q-point Gauss-Legendre; the panel is split into uniform
    sub-panels sized by the stiffness of T, with node blocks propagated
    by one small multiply per sub-panel."""
    k = T.shape[0]
    n_sub = _gl_subpanel_count(spec_norm_2(T), width, q)
    w_sub = width / n_sub
    sigma, wts = gauss_legendre(q, 0.0, w_sub)
    node_blocks = [expm(s_j * T) @ B for s_j in sigma]
    E_sub = expm(w_sub * T) if n_sub > 1 else None
    acc = np.zeros((k, k))
    for j in range(n_sub):
        for w_j, W in zip(wts, node_blocks):
            acc += w_j * (W @ W.T)
        if j + 1 < n_sub:
            node_blocks = [E_sub @ W for W in node_blocks]
    return sym_part(acc)


def gram_integral(T, B, t0, t, q=4, panel_width=None):
    """Gramian integral of the projected pair over [t0, t].

    Composite Gauss-Legendre with q nodes per panel; panels are uniform
    with width at most `panel_width` (a single panel when it is None).
    """
    T = np.asarray(T, dtype=float)
    B = np.asarray(B, dtype=float)
    if t < t0:
        raise ValueError(f"need t >= t0, got t={t} < t0={t0}")
    k = T.shape[0]
    if t == t0:
        return np.zeros((k, k))
    span = t - t0
    n_panels = 1 if panel_width is None else max(1, int(np.ceil(span / panel_width - 1e-12)))
    width = span / n_panels
    delta = _panel_increment(T, B, width, q)
    if n_panels == 1:
        return delta
    E = expm(width * T)
    G = delta
    for _ in range(n_panels - 1):
        G = sym_part(E @ G @ E.T + delta)
    return G


def gram_integral_exact(T, B, t0, t):
    """Quadrature-free evaluation of the Gramian integral.

    Uses the algebraic identity T G + G T^T = E Q E^T - Q with
    E = e^{(t-t0)T}, solved by Bartels-Stewart; falls back to the block
    matrix exponential of [[T, Q], [0, -T^T]] when the Lyapunov operator
    is singular. Used as an independent cross-check for the panel rule.
    """
    T = np.asarray(T, dtype=float)
    B = np.asarray(B, dtype=float)
    if t < t0:
        raise ValueError(f"need t >= t0, got t={t} < t0={t0}")
    k = T.shape[0]
    Q = B @ B.T
    span = t - t0
    try:
        E = expm(span * T)
        G = LyapunovSolver(T).solve(Q - E @ Q @ E.T)
    except SolvabilityError:
        # eigenvalue pair sums to zero: use the block-exponential form
        # (only safe when span*||T|| is moderate)
        blk = np.zeros((2 * k, 2 * k))
        blk[:k, :k] = T
        blk[:k, k:] = Q
        blk[k:, k:] = -T.T
        M = expm(span * blk)
        G = M[:k, k:] @ M[:k, :k].T
    return sym_part(G)


def expm_action_small(T, B, s):
    """e^{s T} @ B for the projected (small) pair."""
    if s < 0:
        raise ValueError(f"duration must be nonnegative, got {s}")
    T = np.asarray(T, dtype=float)
    B = np.asarray(B, dtype=float)
    return expm(s * T) @ B


def expm_action_rational(T, B, s, coeffs):
    """Partial-fraction approximation of e^{s T} @ B.

    `coeffs` is (a0, poles, residues) as produced by
    rational.rational_exp_coefficients; conjugate-closed pole sets give a
    real result. A shift that makes (s T - pole I) singular raises.
    """
    a0, poles, residues = coeffs
    T = np.asarray(T, dtype=float)
    B = np.asarray(B, dtype=float)
    M = s * T
    k = M.shape[0]
    acc = a0 * B.astype(complex)
    eye = np.eye(k)
    for z, c in zip(poles, residues):
        try:
            acc += c * np.linalg.solve(M - z * eye, B.astype(complex))
        except np.linalg.LinAlgError as exc:
            raise SolvabilityError(f"shift {z} makes the resolvent singular") from exc
    return acc.real


def residual_norm(coupling, small_sol):
    """Frobenius norm of the true residual from the coupling block.

    The residual of the lifted approximation is a symmetric pair of
    cross blocks, each congruent to coupling @ (last rows of the small
    solution); its Frobenius norm is sqrt(2) times the norm of one block.
    """
    coupling = np.asarray(coupling, dtype=float)
    if coupling.size == 0:
        return 0.0
    w = coupling.shape[1]
    small_sol = np.asarray(small_sol, dtype=float)
    return np.sqrt(2.0) * frob_norm(coupling @ small_sol[-w:, :])


def _residuals_over_nodes(coupling, bar_rows):
    if coupling.size == 0:
        return np.zeros(bar_rows.shape[0])
    prod = np.einsum("ij,njk->nik", coupling, bar_rows)
    return np.sqrt(2.0) * np.sqrt(np.einsum("nik,nik->n", prod, prod))


def truncate_lowrank(basis, small_sol, dtol=1e-12):
    """Eigen-truncate a projected PSD solution and lift it through the basis.

    Eigenvalues with magnitude at most dtol are dropped; an eigenvalue
    below -dtol violates positive semidefiniteness and raises.
    """
    V = basis.inner_basis if isinstance(basis, KrylovDecomposition) else np.asarray(basis)
    eig = sym_eig(small_sol)
    if eig.values.size and eig.values[-1] < -dtol:
        raise PSDViolationError(
            f"projected solution has eigenvalue {eig.values[-1]:.3e} < -dtol"
        )
    keep = eig.values > dtol
    Z = V @ (eig.vectors[:, keep] * np.sqrt(eig.values[keep]))
    return SymLowRank(Z)


def _psd_floor(Y):
    """Clip tiny negative eigenvalues; cheap Cholesky screen first."""
    k = Y.shape[0]
    scale = max(np.trace(Y) / max(k, 1), 0.0)
    shift = 1e-13 * max(scale, 1e-300)
    try:
        np.linalg.cholesky(Y + shift * np.eye(k))
        return Y
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(Y)
        return (vecs * np.clip(vals, 0.0, None)) @ vecs.T


def bdf_step(T, Bm, history, h, coeffs):
    """One fixed-step BDF update of the projected matrix ODE.

    `history` holds the previous solutions, most recent first, at least
    `coeffs.order` of them. The implicit relation is one algebraic
    Lyapunov equation with coefficient h*beta*T - I/2 and a dense
    right-hand side assembled exactly from the history.
    """
    T = np.asarray(T, dtype=float)
    Bm = np.asarray(Bm, dtype=float)
    p = coeffs.order
    if len(history) < p:
        raise ValueError(f"need {p} history entries, got {len(history)}")
    k = T.shape[0]
    TT = h * coeffs.beta * T - 0.5 * np.eye(k)
    rhs = h * coeffs.beta * (Bm @ Bm.T)
    for alpha, Y_prev in zip(coeffs.alphas, history):
        rhs = rhs + alpha * Y_prev
    Y = LyapunovSolver(TT).solve(rhs)
    return _psd_floor(sym_part(Y))


# -- grid propagation for one Krylov step ----------------------------------


@dataclass
class _SmallRun:
    bar_rows: np.ndarray               # (n_nodes, w, k)
    final: np.ndarray                  # (k, k)
    full: np.ndarray = None            # (n_nodes, k, k) when requested


def _run_gram_grid(T, Bm, P0, grid, q, w, keep_full):
    k = T.shape[0]
    N = grid.n_steps
    h = grid.h
    E = expm(h * T)
    delta = _panel_increment(T, Bm, h, q)
    G = P0 @ P0.T if P0.shape[1] else np.zeros((k, k))
    bar = np.empty((N + 1, w, k))
    full = np.empty((N + 1, k, k)) if keep_full else None
    bar[0] = G[k - w:, :]
    if keep_full:
        full[0] = G
    for i in range(1, N + 1):
        G = sym_part(E @ G @ E.T + delta)
        bar[i] = G[k - w:, :]
        if keep_full:
            full[i] = G
    return _SmallRun(bar_rows=bar, final=G, full=full)


def exact_step_pair(T, Q, h):
    """(E, delta) with Y -> E Y E^T + delta the exact one-step propagator
    of dY/dt = T Y + Y T^T + Q.

    delta solves T delta + delta T^T = E Q E^T - Q, which is stable for
    stiff T where the block-exponential construction cancels
    catastrophically; a fine composite panel rule covers the case of a
    singular Lyapunov operator."""
    E = expm(h * T)
    try:
        delta = LyapunovSolver(T).solve(Q - E @ Q @ E.T)
    except SolvabilityError:
        # accumulate sub-panel contributions of int e^{sT} Q e^{sT^T} ds,
        # sub-panels sized so the rule resolves the stiffest decay
        n_sub = int(np.ceil(h * max(frob_norm(T), 1.0) / 2.0)) + 1
        sigma, wts = gauss_legendre(8, 0.0, h / n_sub)
        E_sub = expm((h / n_sub) * T)
        node_factors = [expm(s_j * T) for s_j in sigma]
        delta = np.zeros_like(Q)
        left = np.eye(T.shape[0])
        for _ in range(n_sub):
            for w_j, Fs in zip(wts, node_factors):
                F = left @ Fs
                delta += w_j * (F @ Q @ F.T)
            left = left @ E_sub
        delta = sym_part(delta)
    return E, sym_part(delta)


def _run_bdf_grid(T, Bm, P0, grid, order, w, keep_full):
    k = T.shape[0]
    N = grid.n_steps
    h = grid.h
    Q_const = Bm @ Bm.T
    Y = P0 @ P0.T if P0.shape[1] else np.zeros((k, k))
    bar = np.empty((N + 1, w, k))
    full = np.empty((N + 1, k, k)) if keep_full else None
    bar[0] = Y[k - w:, :]
    if keep_full:
        full[0] = Y
    history = [Y]
    n_start = min(order - 1, N)
    if n_start:
        # multistep start-up values by exact propagation (a low-order
        # bootstrap step would cap the observable global order at 2)
        E, delta = exact_step_pair(T, Q_const, h)
        for i in range(1, n_start + 1):
            Y = _psd_floor(sym_part(E @ Y @ E.T + delta))
            history.insert(0, Y)
            bar[i] = Y[k - w:, :]
            if keep_full:
                full[i] = Y
    beta, alphas = BDF_TABLE[order]
    stepper = LyapunovSolver(h * beta * T - 0.5 * np.eye(k)) if N > n_start else None
    for i in range(n_start + 1, N + 1):
        rhs = h * beta * Q_const
        for alpha, Y_prev in zip(alphas, history):
            rhs = rhs + alpha * Y_prev
        Y = _psd_floor(stepper.solve(rhs))
        history.insert(0, Y)
        del history[order:]
        bar[i] = Y[k - w:, :]
        if keep_full:
            full[i] = Y
    return _SmallRun(bar_rows=bar, final=Y, full=full)


# -- outer Krylov loop ------------------------------------------------------


def as_operator(A):
    if isinstance(A, LinearOperator):
        return A
    import scipy.sparse as sp

    if sp.issparse(A):
        return wrap_sparse(A)
    return wrap_dense(np.asarray(A, dtype=float))


def _zero_trajectory(n, grid, config, method):
    nodes = grid.nodes
    rec = IterationRecord(m=1, basis_size=0, residual_final=0.0,
                          residual_probe_max=0.0, residual_max=0.0,
                          coupling_norm=0.0, gbar_sup=0.0,
                          small_final=np.zeros((0, 0)), elapsed=0.0)
    return Trajectory(
        grid=grid, nodes=nodes,
        small_solutions=np.zeros((len(nodes), 0, 0)),
        residuals=np.zeros(len(nodes)),
        decomposition=None, converged=True, method=method,
        iterations=[rec], dim=n, config=config,
    )


def _probe_indices(n_nodes, stride):
    idx = set(range(0, n_nodes, max(stride, 1)))
    idx.add(n_nodes - 1)
    return np.array(sorted(idx))


def _solve(op, B, X0, grid, config, method):
    op = as_operator(op)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n = op.dim
    Z0 = X0.Z if X0 is not None else np.zeros((n, 0))
    if frob_norm(B) == 0.0 and Z0.shape[1] == 0:
        return _zero_trajectory(n, grid, config, method)

    start = np.hstack([B, Z0]) if Z0.shape[1] else B
    dec = KrylovDecomposition(op, start, variant=config.krylov_variant,
                              rank_tol=config.rank_tol)
    probes = _probe_indices(grid.n_steps + 1, config.probe_stride)

    def small_run(keep_full):
        T = dec.T
        Bm = dec.project_block(B)
        P0 = dec.project_block(Z0) if Z0.shape[1] else np.zeros((T.shape[0], 0))
        w = dec.widths[dec.m - 1]
        if method == "eba_exp":
            return _run_gram_grid(T, Bm, P0, grid, config.quadrature_order,
                                  w, keep_full)
        return _run_bdf_grid(T, Bm, P0, grid, config.bdf_order, w, keep_full)

    iterations = []
    converged = False
    while dec.m < config.m_max:
        t_start = time.perf_counter()
        broke = False
        try:
            dec.extend(op)
        except KrylovBreakdown as exc:
            # partial rank loss narrows the block and the process keeps
            # going; a full breakdown means the subspace is invariant
            broke = exc.rank == 0
        run = small_run(keep_full=False)
        res = _residuals_over_nodes(dec.coupling, run.bar_rows)
        gbar_sup = float(np.max(np.sqrt(np.einsum("nik,nik->n", run.bar_rows,
                                                  run.bar_rows))))
        iterations.append(IterationRecord(
            m=dec.m, basis_size=dec.inner_width,
            residual_final=float(res[-1]),
            residual_probe_max=float(np.max(res[probes])),
            residual_max=float(np.max(res)),
            coupling_norm=frob_norm(dec.coupling),
            gbar_sup=gbar_sup,
            small_final=run.final,
            elapsed=time.perf_counter() - t_start,
        ))
        # probe subset first, full grid to confirm
        if np.max(res[probes]) < config.tol and np.max(res) < config.tol:
            converged = True
            break
        if broke:
            converged = bool(np.max(res) < config.tol)
            break

    final = small_run(keep_full=True)
    residuals = _residuals_over_nodes(dec.coupling, final.bar_rows)
    return Trajectory(
        grid=grid, nodes=grid.nodes, small_solutions=final.full,
        residuals=residuals, decomposition=dec, converged=converged,
        method=method, iterations=iterations, dim=n, config=config,
    )


def solve_eba_exp(op, B, X0, grid, config=None):
    """Arnoldi projection + exponential quadrature of the projected Gramian."""
    config = config or SolverConfig(method="eba_exp")
    return _solve(op, B, X0, grid, config, "eba_exp")


def solve_eba_bdf(op, B, X0, grid, config=None):
    """Arnoldi projection + fixed-step BDF on the projected matrix ODE."""
    config = config or SolverConfig(method="eba_bdf")
    return _solve(op, B, X0, grid, config, "eba_bdf")


def solve(op, B, X0, grid, config):
    if config.method == "eba_exp":
        return solve_eba_exp(op, B, X0, grid, config)
    if config.method == "eba_bdf":
        return solve_eba_bdf(op, B, X0, grid, config)
    raise ValueError(f"unknown method {config.method!r}")
