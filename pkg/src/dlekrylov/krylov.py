"""Block and extended block Arnoldi processes.

Both variants produce an orthonormal block basis, the projection of the
operator onto it, and the coupling block that drives the cheap residual
formula of the solvers. Blocks are orthogonalized by block modified
Gram-Schmidt with one reorthogonalization pass.
"""

import numpy as np

from .dense import frob_norm, qr_thin
from .sparsela import CapabilityError


class KrylovBreakdown(Exception):
    """Rank loss in a new basis block: an invariant subspace was captured.

    The decomposition that raised this is left in a consistent, usable
    state (the rank-deficient block is kept at its reduced width).
    """

    def __init__(self, rank, width):
        super().__init__(f"new block deflated to rank {rank} (width {width})")
        self.rank = rank
        self.width = width


class KrylovDecomposition:
    """Growing Arnoldi decomposition A @ V_m = V_{m+1} @ T_bar.

    `m` counts completed projection steps: after `extend` has run m times
    the inner basis spans m blocks and the trailing block V_{m+1} carries
    the coupling. For the extended variant each block is built from a
    forward half A @ V and an inverse half A^{-1} @ V, and the projected
    matrix is formed by explicit projection onto the basis.
    """

    def __init__(self, op, start_block, variant="extended", rank_tol=1e-12):
        if variant not in ("block", "extended"):
            raise ValueError(f"unknown variant {variant!r}")
        self.variant = variant
        self.rank_tol = rank_tol
        self.breakdown_rank = None

        B = np.asarray(start_block, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        self.n = B.shape[0]

        if variant == "extended":
            cand = np.hstack([B, op.apply_inverse(B)])
        else:
            cand = B
        Q, labels = self._orthonormal_block(cand, frob_norm(cand), None)
        if Q.shape[1] == 0:
            raise ValueError("start block has rank 0")
        self._blocks = [Q]
        self._labels = [labels]
        self._av = []            # cached A @ block, extended variant only
        self._n_inner = 0
        self._tbar = np.zeros((Q.shape[1], 0))

    # -- assembled views ---------------------------------------------------

    @property
    def m(self):
        return self._n_inner

    @property
    def widths(self):
        return [blk.shape[1] for blk in self._blocks]

    @property
    def basis(self):
        return np.hstack(self._blocks)

    @property
    def inner_width(self):
        return sum(self.widths[: self._n_inner])

    @property
    def inner_basis(self):
        return np.hstack(self._blocks[: self._n_inner])

    @property
    def T_bar(self):
        return self._tbar

    @property
    def T(self):
        k = self.inner_width
        return self._tbar[:k, :k]

    @property
    def coupling(self):
        """Sub-diagonal block T_{m+1,m}; zero rows after a full breakdown."""
        k = self.inner_width
        w_last = self.widths[self._n_inner - 1] if self._n_inner else 0
        return self._tbar[k:, k - w_last:k]

    # -- construction ------------------------------------------------------

    def _orthonormal_block(self, cand, scale_norm, prior_labels):
        """QR of a candidate block with rank detection against scale_norm.

        Returns the orthonormal block (possibly narrower than the
        candidate) and the forward/inverse column labeling for the
        extended variant.
        """
        thresh = self.rank_tol * scale_norm
        Q, R, _ = qr_thin(cand, rank_tol=0.0)
        keep = np.abs(np.diag(R)) > thresh
        if keep.all():
            rank = cand.shape[1]
            out = Q
        else:
            U, s, _ = np.linalg.svd(cand, full_matrices=False)
            rank = int(np.sum(s > thresh))
            out = U[:, :rank]
        if rank == cand.shape[1] and prior_labels is not None:
            labels = prior_labels
        else:
            # deflation loses the forward/inverse column split; rebalance
            labels = ((rank + 1) // 2, rank // 2)
        return out, labels

    def _orthogonalize(self, W):
        """Two-pass block MGS against all existing blocks; returns the
        remainder and the accumulated coefficients per block."""
        coeffs = [np.zeros((blk.shape[1], W.shape[1])) for blk in self._blocks]
        for _ in range(2):
            for i, blk in enumerate(self._blocks):
                c = blk.T @ W
                coeffs[i] += c
                W = W - blk @ c
        return W, coeffs

    def extend(self, op):
        """Append one block. Raises KrylovBreakdown on rank loss; the
        state is updated (at reduced width) before the signal is raised."""
        if self.breakdown_rank == 0:
            raise KrylovBreakdown(0, 0)
        if self.variant == "extended":
            self._extend_extended(op)
        else:
            self._extend_block(op)

    def _extend_block(self, op):
        newest = self._blocks[-1]
        width = newest.shape[1]
        cand = op.apply(newest)
        cand_norm = frob_norm(cand)
        W, coeffs = self._orthogonalize(cand.copy())

        thresh = self.rank_tol * max(cand_norm, 1e-300)
        Q, R, _ = qr_thin(W, rank_tol=0.0)
        keep = np.abs(np.diag(R)) > thresh
        if keep.all():
            rank, Vnew, C = width, Q, R
        else:
            U, s, Vt = np.linalg.svd(W, full_matrices=False)
            rank = int(np.sum(s > thresh))
            Vnew = U[:, :rank]
            C = s[:rank, None] * Vt[:rank, :]

        self._append(Vnew if rank else None, np.vstack(coeffs), C[:rank])
        if rank < width:
            self.breakdown_rank = rank
            raise KrylovBreakdown(rank, width)

    def _extend_extended(self, op):
        newest = self._blocks[-1]
        wf, wi = self._labels[-1]
        if not op.has_inverse:
            raise CapabilityError("extended Arnoldi needs an inverse action")
        a_newest = op.apply(newest)
        cand_parts = []
        if wf:
            cand_parts.append(a_newest[:, :wf])
        if wi:
            cand_parts.append(op.apply_inverse(newest[:, wf:]))
        cand = np.hstack(cand_parts)
        cand_norm = frob_norm(cand)
        width = cand.shape[1]

        W, _ = self._orthogonalize(cand.copy())
        Vnew, labels = self._orthonormal_block(W, max(cand_norm, 1e-300),
                                               (wf, wi))
        rank = Vnew.shape[1]

        self._av.append(a_newest)
        if rank:
            self._blocks.append(Vnew)
            self._labels.append(labels)
        self._n_inner += 1
        # explicit projection: T_bar = V^T (A V_inner)
        AV = np.hstack(self._av)
        self._tbar = self.basis.T @ AV
        if rank < width:
            self.breakdown_rank = rank
            raise KrylovBreakdown(rank, width)

    def _append(self, Vnew, coeff_col, coupling_rows):
        """Grow T_bar by one column block (and one row block if a new
        basis block exists). Used by the block variant."""
        rows_k, cols_k = self._tbar.shape
        w_new = 0 if Vnew is None else Vnew.shape[1]
        d_c = coeff_col.shape[1]
        tbar = np.zeros((rows_k + w_new, cols_k + d_c))
        tbar[:rows_k, :cols_k] = self._tbar
        tbar[:rows_k, cols_k:] = coeff_col
        if w_new:
            tbar[rows_k:, cols_k:] = coupling_rows
            self._blocks.append(Vnew)
            self._labels.append((w_new, 0))
        self._tbar = tbar
        self._n_inner += 1

    # -- projections used by the solvers ------------------------------------

    def project_block(self, B):
        """V_m^T @ B onto the inner basis."""
        B = np.asarray(B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        return self.inner_basis.T @ B

    def lift(self, small):
        """V_m @ small @ V_m^T."""
        V = self.inner_basis
        return V @ small @ V.T


def arnoldi_relation_residual(op, dec):
    """|| A V_m - V_{m+1} T_bar || / (||A V_m||), for tests and diagnostics."""
    V_inner = dec.inner_basis
    AV = op.apply(V_inner)
    R = AV - dec.basis @ dec.T_bar
    return frob_norm(R) / max(frob_norm(AV), 1e-300)
