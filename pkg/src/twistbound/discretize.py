"""Sparse finite-difference assembly on masked grids.

All symmetric operators are assembled from quadratic forms (L, A^T A,
B^T B plus diagonal additions), never by symmetrizing an unsymmetric
stencil, so max|M - M^T| = 0 holds exactly at the bit level.  Where a
product like A^T A could pick up 1-ulp asymmetry from summation order,
the result is replaced by (M + M^T)/2, which is bitwise symmetric
because IEEE addition commutes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import MemoryBudgetExceeded, TruncationTooSmall
from .geometry import CrossSection
from .profiles import TwistProfile, mu, mu_dot


@dataclass(frozen=True)
class SparseSymOperator:
    """Symmetric CSR operator with assembly provenance."""

    mat: sp.csr_matrix
    provenance: str
    sym_defect: float      # max |M - M^T| entry, 0.0 by construction

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def scale(self) -> float:
        """Max absolute row sum; the natural magnitude of the operator."""
        return float(np.max(np.abs(self.mat).sum(axis=1)))

    def diagonal(self) -> np.ndarray:
        return self.mat.diagonal()

    def matvec(self, x):
        return self.mat @ x

    def to_coo_text(self) -> str:
        """Coordinate (row, col, value) text dump for external inspection."""
        coo = self.mat.tocoo()
        lines = [f"{r} {c} {repr(float(v))}"
                 for r, c, v in zip(coo.row, coo.col, coo.data)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SparseOperator:
    """Unsymmetric CSR operator (the angular factor A)."""

    mat: sp.csr_matrix
    provenance: str

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def matvec(self, x):
        return self.mat @ x


def _sym_defect(m: sp.csr_matrix) -> float:
    d = m - m.T
    return float(np.max(np.abs(d.data))) if d.nnz else 0.0


def _exact_symmetrize(m: sp.spmatrix) -> sp.csr_matrix:
    # (M + M^T)/2 entry (i,j) computes a+b and b+a, identical in IEEE
    return ((m + m.T) * 0.5).tocsr()


def assemble_laplacian(cs: CrossSection) -> SparseSymOperator:
    """Five-point Dirichlet Laplacian: 4/h^2 diagonal, -1/h^2 to interior
    neighbours; neighbours outside the mask are Dirichlet zeros (dropped
    columns)."""
    h = cs.h
    diag = 4.0 / h ** 2
    off = -1.0 / h ** 2
    rows, cols, vals = [], [], []
    for r, (i, j) in enumerate(cs.nodes):
        rows.append(r)
        cols.append(r)
        vals.append(diag)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c = cs.index.get((i + di, j + dj))
            if c is not None:
                rows.append(r)
                cols.append(c)
                vals.append(off)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(cs.n, cs.n))
    return SparseSymOperator(mat=m, provenance="laplacian", sym_defect=_sym_defect(m))


def assemble_angular(cs: CrossSection) -> SparseOperator:
    """Central-difference angular momentum factor A = t2 d/dt3 - t3 d/dt2.

    Coefficients are evaluated at the row node; with Dirichlet-dropped
    columns this makes A exactly antisymmetric on the masked grid (the
    coefficient i/2 seen from row (i,j) toward (i,j+1) equals the one
    seen back from (i,j+1), with opposite sign).
    """
    h = cs.h
    rows, cols, vals = [], [], []
    for r, (i, j) in enumerate(cs.nodes):
        t2 = i * h
        t3 = j * h
        for dj, sgn in ((1, 1.0), (-1, -1.0)):
            c = cs.index.get((i, j + dj))
            if c is not None:
                rows.append(r)
                cols.append(c)
                vals.append(sgn * t2 / (2.0 * h))
        for di, sgn in ((1, 1.0), (-1, -1.0)):
            c = cs.index.get((i + di, j))
            if c is not None:
                rows.append(r)
                cols.append(c)
                vals.append(-sgn * t3 / (2.0 * h))
    m = sp.csr_matrix((vals, (rows, cols)), shape=(cs.n, cs.n))
    return SparseOperator(mat=m, provenance="angular")


def assemble_h_beta0(cs: CrossSection, beta0: float) -> SparseSymOperator:
    """Cross-section operator h = L + beta0^2 A^T A.

    The angular second derivative enters as the Gram matrix of A, which
    mirrors the quadratic form int |d_alpha phi|^2 and is symmetric
    positive semidefinite by construction.
    """
    lap = assemble_laplacian(cs)
    a = assemble_angular(cs)
    gram = _exact_symmetrize(a.mat.T @ a.mat)
    m = (lap.mat + beta0 ** 2 * gram).tocsr()
    return SparseSymOperator(mat=m, provenance="h_beta0", sym_defect=_sym_defect(m))


@dataclass(frozen=True)
class ClampStats:
    cap: float
    q99: float
    n_clamped: int
    n_floored: int
    n_sample: int

    def to_dict(self):
        return {"cap": self.cap, "q99": self.q99, "n_clamped": self.n_clamped,
                "n_floored": self.n_floored, "n_sample": self.n_sample}


def _interior_core(cs: CrossSection) -> np.ndarray:
    """Nodes at distance >= 2h from the boundary: every grid offset with
    a^2 + b^2 <= 4 must still be interior."""
    offsets = [(a, b) for a in range(-2, 3) for b in range(-2, 3)
               if a * a + b * b <= 4]
    keep = np.empty(cs.n, dtype=bool)
    for r, (i, j) in enumerate(cs.nodes):
        keep[r] = all((i + a, j + b) in cs.index for a, b in offsets)
    return keep


def effective_potential(cs: CrossSection, f: np.ndarray, E: float,
                        profile: TwistProfile, alpha_sq: float, s: float,
                        angular: SparseOperator | None = None):
    """Node-sampled effective potential V(s, .) with magnitude clamp.

    V = -(1/alpha_sq) * ( mu_dot(s) * (A f)/f  -  mu(s)(2 beta0 - mu(s)) * (A(A f))/f )

    f vanishes at the boundary while A f need not, so the raw ratios blow
    up like 1/dist near boundary nodes.  |V| is clamped at

        V_cap = (1/alpha_sq) * (|mu_dot(s)| + mu(2 beta0 - mu)) * Q99,

    Q99 the 99th percentile of |A f|/f over nodes at distance >= 2h from
    the boundary (non-finite ratios from isolated zero-f nodes are
    excluded from the sample).  Nodes where f is below 1e-14 * max f get
    V = 0: the 0/0 ratio carries no information there.  E is accepted for
    interface symmetry with the H(s) assembly and is not used.

    Returns (V, ClampStats).
    """
    del E
    if not alpha_sq > 0:
        raise ValueError(f"alpha_sq must be positive, got {alpha_sq}")
    a_op = angular if angular is not None else assemble_angular(cs)
    af = a_op.mat @ f
    aaf = a_op.mat @ af
    mu_s = mu(profile, s)
    mud_s = mu_dot(profile, s)
    mu_fac = mu_s * (2.0 * profile.beta0 - mu_s)
    if mu_s == 0.0 and mud_s == 0.0:
        # off support: exact zero potential, not a small number
        stats = ClampStats(cap=0.0, q99=0.0, n_clamped=0, n_floored=0, n_sample=0)
        return np.zeros(cs.n), stats

    floor = 1e-14 * float(np.max(f))
    good = f > floor
    core = _interior_core(cs) & good
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(af) / f
    sample = ratio[core]
    sample = sample[np.isfinite(sample)]
    q99 = float(np.percentile(sample, 99)) if sample.size else 0.0
    cap = (abs(mud_s) + mu_fac) * q99 / alpha_sq

    v = np.zeros(cs.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = -(mud_s * af[good] - mu_fac * aaf[good]) / f[good] / alpha_sq
    v[good] = raw
    n_clamped = int(np.sum(np.abs(v) > cap))
    v = np.clip(v, -cap, cap)
    stats = ClampStats(cap=float(cap), q99=q99, n_clamped=n_clamped,
                       n_floored=int(np.sum(~good)), n_sample=int(sample.size))
    return v, stats


def assemble_H_of_s(cs: CrossSection, f: np.ndarray, E: float,
                    profile: TwistProfile, alpha_sq: float, s: float,
                    h_op: SparseSymOperator | None = None,
                    angular: SparseOperator | None = None):
    """H(s) = h_beta0 + diag(V(s, .)) - E * I.

    E must be the discrete ground eigenvalue of the assembled h at the
    same spacing; then H(s) is positive semidefinite off the support of
    mu up to solver tolerance.  Returns (SparseSymOperator, ClampStats).
    """
    if h_op is None:
        h_op = assemble_h_beta0(cs, profile.beta0)
    v, stats = effective_potential(cs, f, E, profile, alpha_sq, s, angular=angular)
    m = (h_op.mat + sp.diags(v - E, format="csr")).tocsr()
    return SparseSymOperator(mat=m, provenance="H_of_s",
                             sym_defect=h_op.sym_defect), stats


def estimate_3d_bytes(cs: CrossSection, n_s: int) -> int:
    """Crude upper estimate of the assembled 3D operator's memory."""
    lap_nnz = 5 * cs.n
    gram_nnz = 13 * cs.n        # A^T A stencil reaches 13 points
    per_slab = lap_nnz + gram_nnz + 4 * 2 * cs.n + cs.n
    # index + value per entry, doubled for assembly scratch
    return int(n_s * per_slab * 16 * 2)


def assemble_3d(cs: CrossSection, profile: TwistProfile, L_trunc: float,
                n_s: int, mem_budget_bytes: int = 4 << 30) -> SparseSymOperator:
    """Straightened 3D operator on [-L_trunc, L_trunc] x omega, Dirichlet ends.

        H3 = I_s (x) L + B^T B,    B = D_s (x) I_omega + diag(theta_dot) (x) A,

    with D_s the forward difference carrying Dirichlet ghosts at both
    ends.  B is rectangular ((n_s + 1) blocks of rows) so that B^T B
    reproduces the exact 1D Dirichlet second difference on the axis; the
    theta_dot block is the diagonal embedding with a zero last row block.
    Ordering is s-major, so the I_s (x) L blocks are contiguous.
    """
    if L_trunc <= profile.s0:
        raise TruncationTooSmall(
            f"L_trunc={L_trunc} does not exceed the support half-width {profile.s0}")
    if n_s < 16:
        raise ValueError(f"n_s must be at least 16, got {n_s}")
    est = estimate_3d_bytes(cs, n_s)
    if est > mem_budget_bytes:
        raise MemoryBudgetExceeded(est, mem_budget_bytes)

    ds = 2.0 * L_trunc / (n_s + 1)
    s_nodes = np.array([-L_trunc + (m + 1) * ds for m in range(n_s)])
    theta_dot = profile.beta0 - mu(profile, s_nodes)

    rows = np.concatenate([np.arange(n_s), np.arange(1, n_s + 1)])
    cols = np.concatenate([np.arange(n_s), np.arange(n_s)])
    vals = np.concatenate([np.full(n_s, 1.0 / ds), np.full(n_s, -1.0 / ds)])
    d_fwd = sp.csr_matrix((vals, (rows, cols)), shape=(n_s + 1, n_s))
    s_embed = sp.csr_matrix((theta_dot, (np.arange(n_s), np.arange(n_s))),
                            shape=(n_s + 1, n_s))

    lap = assemble_laplacian(cs)
    ang = assemble_angular(cs)
    eye_omega = sp.identity(cs.n, format="csr")
    b = (sp.kron(d_fwd, eye_omega, format="csr")
         + sp.kron(s_embed, ang.mat, format="csr"))
    gram = _exact_symmetrize(b.T @ b)
    m = (sp.kron(sp.identity(n_s, format="csr"), lap.mat, format="csr") + gram).tocsr()
    return SparseSymOperator(mat=m, provenance="H_3d", sym_defect=_sym_defect(m))
