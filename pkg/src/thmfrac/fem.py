"""Q4 finite-element machinery: shape functions, quadrature, assembly, solves.

Element matrices are produced in bulk as (n_elems, nd, nd) arrays and
scattered through precomputed COO index maps, which keeps assembly
vectorized and deterministic. Linear solves go through SuperLU with a
small content-addressed factorization cache so repeated operators (linear
benchmarks, frozen staggered branches) only pay for back-substitution.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure
from .mesh import Mesh

_Q4_LOCAL = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def shape_q4(xi: float, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear shape values (4,) and local gradients (4, 2) at (xi, eta)."""
    xi_i = _Q4_LOCAL[:, 0]
    eta_i = _Q4_LOCAL[:, 1]
    N = 0.25 * (1.0 + xi * xi_i) * (1.0 + eta * eta_i)
    dN = np.empty((4, 2))
    dN[:, 0] = 0.25 * xi_i * (1.0 + eta * eta_i)
    dN[:, 1] = 0.25 * eta_i * (1.0 + xi * xi_i)
    return N, dN


def gauss_2x2() -> tuple[np.ndarray, np.ndarray]:
    """2x2 Gauss rule on the reference square: points (4, 2), weights (4,)."""
    a = 1.0 / np.sqrt(3.0)
    pts = np.array([[-a, -a], [a, -a], [a, a], [-a, a]])
    return pts, np.ones(4)


@dataclass
class ElementTables:
    """Per-mesh precomputed quadrature data and scatter index maps."""

    mesh: Mesh
    N: np.ndarray        # (4 qp, 4 nodes) shape values
    dNdx: np.ndarray     # (E, 4 qp, 4 nodes, 2) physical gradients
    detJw: np.ndarray    # (E, 4 qp) weighted Jacobian determinants
    B: np.ndarray        # (E, 4 qp, 3, 8) strain-displacement matrices
    conn: np.ndarray     # (E, 4) node ids
    dofs_vec: np.ndarray  # (E, 8) interleaved (ux, uy) dofs
    rows_s: np.ndarray   # COO scatter indices, scalar fields
    cols_s: np.ndarray
    rows_v: np.ndarray   # COO scatter indices, vector field
    cols_v: np.ndarray
    h_e_qp: np.ndarray   # (E, 4) element size replicated per qp

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_nodes

    @property
    def n_elems(self) -> int:
        return self.mesh.n_elems


def build_tables(mesh: Mesh) -> ElementTables:
    pts, wts = gauss_2x2()
    Nq = np.empty((4, 4))
    dNq = np.empty((4, 4, 2))
    for q, (xi, eta) in enumerate(pts):
        Nq[q], dNq[q] = shape_q4(xi, eta)

    X = mesh.nodes[mesh.elems]                      # (E, 4, 2)
    # J[e, q, a, b] = sum_i dN[q, i, a] X[e, i, b]
    J = np.einsum("qia,eib->eqab", dNq, X)
    detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(detJ <= 0.0):
        raise ValueError("non-positive Jacobian determinant in mesh")
    Jinv = np.empty_like(J)
    Jinv[..., 0, 0] = J[..., 1, 1]
    Jinv[..., 1, 1] = J[..., 0, 0]
    Jinv[..., 0, 1] = -J[..., 0, 1]
    Jinv[..., 1, 0] = -J[..., 1, 0]
    Jinv /= detJ[..., None, None]
    dNdx = np.einsum("qia,eqba->eqib", dNq, Jinv)   # dN_i/dx_b
    detJw = detJ * wts[None, :]

    E = mesh.n_elems
    B = np.zeros((E, 4, 3, 8))
    B[:, :, 0, 0::2] = dNdx[..., 0]
    B[:, :, 1, 1::2] = dNdx[..., 1]
    B[:, :, 2, 0::2] = dNdx[..., 1]
    B[:, :, 2, 1::2] = dNdx[..., 0]

    conn = mesh.elems
    dofs_vec = np.empty((E, 8), dtype=np.int64)
    dofs_vec[:, 0::2] = 2 * conn
    dofs_vec[:, 1::2] = 2 * conn + 1

    rows_s = np.repeat(conn, 4, axis=1).ravel()
    cols_s = np.tile(conn, (1, 4)).ravel()
    rows_v = np.repeat(dofs_vec, 8, axis=1).ravel()
    cols_v = np.tile(dofs_vec, (1, 8)).ravel()

    h_e_qp = np.repeat(mesh.h_e[:, None], 4, axis=1)
    return ElementTables(mesh=mesh, N=Nq, dNdx=dNdx, detJw=detJw, B=B,
                         conn=conn, dofs_vec=dofs_vec,
                         rows_s=rows_s, cols_s=cols_s,
                         rows_v=rows_v, cols_v=cols_v, h_e_qp=h_e_qp)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass
class SparseSystem:
    """Assembled linear system A x = b with its node-to-dof convention."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    ndof_per_node: int = 1


def assemble(mesh: Mesh, element_kernel, ndof_per_node: int = 1) -> SparseSystem:
    """Assemble a global system from a per-element kernel.

    ``element_kernel(eid) -> (ke, fe)`` must return an (nd, nd) matrix and
    an (nd,) vector with nd = 4 * ndof_per_node, ordered by local node
    (components interleaved for vector fields).
    """
    nd = 4 * ndof_per_node
    n_dofs = mesh.n_nodes * ndof_per_node
    KE = np.empty((mesh.n_elems, nd, nd))
    FE = np.empty((mesh.n_elems, nd))
    for e in range(mesh.n_elems):
        ke, fe = element_kernel(e)
        ke = np.asarray(ke, dtype=float)
        fe = np.asarray(fe, dtype=float)
        if ke.shape != (nd, nd) or fe.shape != (nd,):
            raise ValueError(
                f"element kernel size mismatch on element {e}: "
                f"got {ke.shape}/{fe.shape}, expected {(nd, nd)}/{(nd,)}")
        KE[e] = ke
        FE[e] = fe
    if ndof_per_node == 1:
        dofs = mesh.elems
        rows = np.repeat(dofs, nd, axis=1).ravel()
        cols = np.tile(dofs, (1, nd)).ravel()
    else:
        dofs = np.empty((mesh.n_elems, nd), dtype=np.int64)
        for c in range(ndof_per_node):
            dofs[:, c::ndof_per_node] = ndof_per_node * mesh.elems + c
        rows = np.repeat(dofs, nd, axis=1).ravel()
        cols = np.tile(dofs, (1, nd)).ravel()
    A = sp.coo_matrix((KE.ravel(), (rows, cols)), shape=(n_dofs, n_dofs)).tocsr()
    b = np.zeros(n_dofs)
    np.add.at(b, dofs.ravel(), FE.ravel())
    return SparseSystem(matrix=A, rhs=b, ndof_per_node=ndof_per_node)


def assemble_batched(tables: ElementTables, KE: np.ndarray, FE: np.ndarray,
                     vector: bool = False) -> SparseSystem:
    """Scatter precomputed element matrices/vectors into a global system."""
    if vector:
        n = 2 * tables.n_nodes
        rows, cols = tables.rows_v, tables.cols_v
        dofs = tables.dofs_vec
    else:
        n = tables.n_nodes
        rows, cols = tables.rows_s, tables.cols_s
        dofs = tables.conn
    A = sp.coo_matrix((KE.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    b = np.zeros(n)
    np.add.at(b, dofs.ravel(), FE.ravel())
    return SparseSystem(matrix=A, rhs=b, ndof_per_node=2 if vector else 1)


def scatter_vector(tables: ElementTables, FE: np.ndarray, vector: bool = False) -> np.ndarray:
    n = 2 * tables.n_nodes if vector else tables.n_nodes
    dofs = tables.dofs_vec if vector else tables.conn
    out = np.zeros(n)
    np.add.at(out, dofs.ravel(), FE.ravel())
    return out


def apply_dirichlet(system: SparseSystem, dofs: np.ndarray, values: np.ndarray) -> SparseSystem:
    """Row/column elimination preserving symmetry.

    Constrained rows/columns are reduced to the identity with the
    prescribed value on the right-hand side; the rhs of free dofs absorbs
    A[:, c] * g.
    """
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    n = system.matrix.shape[0]
    if dofs.size == 0:
        return system
    g = np.zeros(n)
    g[dofs] = values
    rhs = system.rhs - system.matrix @ g
    keep = np.ones(n)
    keep[dofs] = 0.0
    A = system.matrix.tocsr(copy=True)
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    A.data = A.data * (keep[rows] * keep[A.indices])
    A = (A + sp.diags(1.0 - keep)).tocsr()
    rhs = rhs * keep
    rhs[dofs] = values
    return SparseSystem(matrix=A, rhs=rhs, ndof_per_node=system.ndof_per_node)


# ---------------------------------------------------------------------------
# linear solve with factorization reuse
# ---------------------------------------------------------------------------

class _LUCache:
    def __init__(self, maxsize: int = 8):
        self.maxsize = maxsize
        self._store: OrderedDict[bytes, object] = OrderedDict()

    def key(self, A: sp.csr_matrix) -> bytes:
        hsh = hashlib.blake2b(digest_size=16)
        hsh.update(np.asarray(A.shape, dtype=np.int64).tobytes())
        hsh.update(A.indptr.tobytes())
        hsh.update(A.indices.tobytes())
        hsh.update(A.data.tobytes())
        return hsh.digest()

    def factorize(self, A: sp.csr_matrix):
        k = self.key(A)
        lu = self._store.get(k)
        if lu is None:
            lu = spla.splu(A.tocsc())
            self._store[k] = lu
            if len(self._store) > self.maxsize:
                self._store.popitem(last=False)
        else:
            self._store.move_to_end(k)
        return lu


_lu_cache = _LUCache()


def solve_linear(system: SparseSystem, reuse_factorization: bool = True) -> np.ndarray:
    """Direct sparse solve with a relative residual gate of 1e-10.

    The operator is symmetrically Jacobi-scaled before factorization (the
    mobility contrast between broken and intact cells reaches 1e8+) and a
    few iterative-refinement sweeps against the unscaled residual recover
    full accuracy.
    """
    A, b = system.matrix, system.rhs
    n = A.shape[0]
    d = A.diagonal()
    if np.all(d > 0.0) and np.all(np.isfinite(d)):
        s = 1.0 / np.sqrt(d)
    else:
        s = np.ones(n)
    As = A.tocsr(copy=True)
    rows = np.repeat(np.arange(n), np.diff(As.indptr))
    As.data = As.data * (s[rows] * s[As.indices])
    try:
        lu = _lu_cache.factorize(As) if reuse_factorization else spla.splu(As.tocsc())
        x = s * lu.solve(s * b)
    except RuntimeError as exc:  # SuperLU signals singularity this way
        raise SolverFailure(f"sparse LU factorization failed: {exc}",
                            diagnostics={"n": n}) from exc
    if not np.all(np.isfinite(x)):
        raise SolverFailure("linear solve produced non-finite values",
                            diagnostics={"n": n})
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    resid = b - A @ x
    gate = 1e-10 * bnorm
    for _ in range(5):
        if np.linalg.norm(resid) <= gate:
            return x
        x = x + s * lu.solve(s * resid)
        resid = b - A @ x
    # With strong cancellation (||b|| << |A||x|, e.g. source-driven flow in a
    # high-contrast crack) no float64 vector can reach 1e-10*||b||; accept the
    # standard backward-error scale instead, which coincides with the ||b||
    # gate whenever the system is well scaled.
    absA = sp.csr_matrix((np.abs(A.data), A.indices, A.indptr), shape=A.shape)
    denom = bnorm + float(np.linalg.norm(absA @ np.abs(x)))
    rnorm = float(np.linalg.norm(resid))
    if rnorm > 1e-10 * denom:
        raise SolverFailure(
            f"linear solve residual {rnorm:.3e} exceeds 1e-10 * backward scale "
            f"{1e-10 * denom:.3e} (||b|| = {bnorm:.3e})",
            diagnostics={"residual": rnorm, "rhs_norm": bnorm, "n": n})
    return x


# ---------------------------------------------------------------------------
# bound-constrained quadratic solve (phase-field subproblem)
# ---------------------------------------------------------------------------

def solve_bound_constrained(system: SparseSystem, lower: np.ndarray,
                            upper: np.ndarray, init: np.ndarray,
                            rel_tol: float = 1e-8,
                            max_iter: int = 200) -> np.ndarray:
    """Minimize 1/2 x'Ax - b'x subject to lower <= x <= upper.

    Active-set iteration on the symmetric system: solve the free block,
    clamp violating components, release actives whose KKT multiplier has
    the wrong sign. At the solution the gradient r = Ax - b vanishes on
    free components, is >= 0 at lower bounds and <= 0 at upper bounds.
    """
    A = system.matrix.tocsr()
    b = system.rhs
    n = A.shape[0]
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    if np.any(lower > upper + 1e-15):
        raise ValueError("lower bound exceeds upper bound")
    x = np.clip(np.asarray(init, dtype=float).copy(), lower, upper)

    pinned = lower >= upper - 1e-15          # equality-constrained dofs
    x[pinned] = lower[pinned]
    at_lo = (x <= lower + 1e-15) & ~pinned
    at_up = (x >= upper - 1e-15) & ~pinned

    scale = max(np.abs(b).max(initial=0.0), np.abs(A.diagonal()).max(initial=0.0), 1e-300)
    tol = rel_tol * scale

    for _ in range(max_iter):
        active = pinned | at_lo | at_up
        free = ~active
        if np.any(free):
            fidx = np.nonzero(free)[0]
            Aff = A[fidx][:, fidx].tocsc()
            rhs_f = b[fidx] - A[fidx][:, np.nonzero(active)[0]] @ x[np.nonzero(active)[0]]
            try:
                xf = spla.splu(Aff).solve(rhs_f)
            except RuntimeError as exc:
                raise SolverFailure(
                    f"bound-constrained solve: free-block factorization failed: {exc}",
                    diagnostics={"free_dofs": int(free.sum())}) from exc
            x[fidx] = xf
            viol_lo = free & (x < lower - 1e-15)
            viol_up = free & (x > upper + 1e-15)
            if np.any(viol_lo) or np.any(viol_up):
                x[viol_lo] = lower[viol_lo]
                x[viol_up] = upper[viol_up]
                at_lo |= viol_lo
                at_up |= viol_up
                continue
        r = A @ x - b
        wrong_lo = at_lo & (r < -tol)
        wrong_up = at_up & (r > tol)
        if not np.any(wrong_lo) and not np.any(wrong_up):
            return x
        at_lo &= ~wrong_lo
        at_up &= ~wrong_up

    r = A @ x - b
    kkt = float(np.max(np.abs(np.where(pinned | at_lo | at_up, 0.0, r))))
    raise SolverFailure(
        f"bound-constrained solve did not satisfy KKT in {max_iter} iterations "
        f"(free-gradient norm {kkt:.3e})",
        diagnostics={"last_iterate": x, "kkt_violation": kkt})
