"""Matrix-free linear algebra: CG solves and symmetric eigensolvers.

Solvers work on raw component arrays with a caller-supplied inner product
(usually the L^2_Omega pairing of the relevant field kind).  Axisymmetric
sphere problems are assembled densely (the DOF count is tiny) and solved
exactly; torus problems run matrix-free through CG / shift-inverted Lanczos.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from . import mesh

_DENSE_DOF_CAP = 5000


@dataclass
class LinearOperatorHandle:
    """An operator closure with the inner product it is self-adjoint for."""

    apply: callable
    inner: callable
    shape: tuple
    self_adjoint: bool = True
    project: callable = None

    def check_self_adjoint(self, rng, probes=3, tol=1e-9):
        """Random-probe symmetry check; returns the worst defect."""
        worst = 0.0
        for _ in range(probes):
            x = rng.standard_normal(self.shape)
            y = rng.standard_normal(self.shape)
            if self.project is not None:
                x, y = self.project(x), self.project(y)
            ax, ay = self.apply(x), self.apply(y)
            s = max(1.0, abs(self.inner(ax, y)))
            worst = max(worst, abs(self.inner(ax, y) - self.inner(x, ay)) / s)
        if self.self_adjoint and worst > tol:
            raise ValueError(f"operator failed the self-adjointness probe: {worst:.3e}")
        return worst


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    indefinite: bool = False
    history: list = field(default_factory=list)


def cg_solve(op, rhs, tol=1e-10, max_iter=2000, precond=None):
    """Conjugate gradients for a self-adjoint positive operator handle.

    Returns the solution together with the iteration count and the final
    relative residual; a non-positive curvature direction flags the result
    as indefinite and stops the iteration.
    """
    project = op.project or (lambda x: x)
    b = project(np.array(rhs, dtype=float, copy=True))
    x = np.zeros_like(b)
    r = b.copy()
    norm_b = np.sqrt(max(op.inner(b, b), 0.0))
    if norm_b == 0.0:
        return CGResult(x, 0, 0.0, True)
    z = project(precond(r)) if precond is not None else r
    p = z.copy()
    rz = op.inner(r, z)
    history = []
    for it in range(1, max_iter + 1):
        Ap = project(op.apply(p))
        pAp = op.inner(p, Ap)
        if pAp <= 0.0:
            res = np.sqrt(max(op.inner(r, r), 0.0)) / norm_b
            return CGResult(x, it, res, False, indefinite=True, history=history)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.sqrt(max(op.inner(r, r), 0.0)) / norm_b
        history.append(res)
        if res <= tol:
            return CGResult(x, it, res, True, history=history)
        z = project(precond(r)) if precond is not None else r
        rz_new = op.inner(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CGResult(x, max_iter, history[-1], False, history=history)


# ---------------------------------------------------------------------------
# eigensolvers for scalar operators
# ---------------------------------------------------------------------------

def _quad_weights(state):
    """Quadrature weights of the L^2_Omega scalar product, grid-shaped."""
    grid = state.grid
    if grid.kind == mesh.TORUS:
        return state.omega.values * grid.spacing**grid.dim
    return state.omega.values * (2.0 * np.pi) * grid._sphere_weights


def scalar_l2_inner(state):
    w = _quad_weights(state)

    def inner(x, y):
        return float(np.sum(w * x * y))

    return inner


def zero_mean_projector(state):
    w = _quad_weights(state)
    total = float(np.sum(w))

    def project(x):
        return x - np.sum(w * x) / total

    return project


def eigensolve(state, apply_op, k, constraint="zero_omega_mean"):
    """Lowest-k eigenpairs of a scalar operator, L^2_Omega-orthonormal.

    Dense assembly on the sphere backend (exact small problem); matrix-free
    shift-inverted Lanczos through cg_solve on the torus.
    """
    grid = state.grid
    w = _quad_weights(state)
    project = zero_mean_projector(state) if constraint == "zero_omega_mean" else None
    if grid.kind == mesh.SPHERE_AXISYM or np.prod(grid.shape) <= _DENSE_DOF_CAP:
        return _eigensolve_dense(grid, apply_op, w, k, project)
    return _eigensolve_torus(grid, apply_op, w, k, project, state)


def _eigensolve_dense(grid, apply_op, w, k, project):
    shape = grid.shape
    N = int(np.prod(shape))
    if N > _DENSE_DOF_CAP:
        raise ValueError(f"dense eigensolve DOF cap exceeded: {N}")
    A = np.empty((N, N))
    basis = np.zeros(shape)
    for j in range(N):
        basis.flat[j] = 1.0
        col = apply_op(basis.copy())
        A[:, j] = col.ravel()
        basis.flat[j] = 0.0
    wflat = w.ravel()
    sq = np.sqrt(wflat)
    S = (sq[:, None] * A) / sq[None, :]
    if project is not None:
        # restrict to the zero-mean subspace: P S P + big * (I - P)
        ones = sq / np.linalg.norm(sq)
        P = np.eye(N) - np.outer(ones, ones)
        big = 10.0 * max(1.0, np.max(np.abs(S)))
        S = P @ S @ P + big * np.outer(ones, ones)
    S = 0.5 * (S + S.T)
    vals, vecs = scipy.linalg.eigh(S)
    out = []
    for i in range(min(k, N)):
        lam = vals[i]
        v = vecs[:, i] / sq
        nrm = np.sqrt(np.sum(wflat * v * v))
        out.append((float(lam), (v / nrm).reshape(shape)))
    return out


def _eigensolve_torus(grid, apply_op, w, k, project, state):
    shape = grid.shape
    N = int(np.prod(shape))
    sq = np.sqrt(w)
    sigma = 1.0
    inner = lambda x, y: float(np.sum(x * y))

    def apply_shifted(xdense):
        x = xdense.reshape(shape) / sq
        if project is not None:
            x = project(x)
        y = apply_op(x)
        if project is not None:
            y = project(y)
        return (sq * (y + sigma * x)).ravel() if False else (sq * y).ravel() + sigma * xdense

    # shift-invert: each matvec solves (S + sigma) z = x by CG
    handle = LinearOperatorHandle(
        apply=lambda x: apply_shifted(x), inner=inner, shape=(N,)
    )

    def inv_matvec(xdense):
        res = cg_solve(handle, xdense, tol=1e-12, max_iter=20 * N)
        return res.x

    L = scipy.sparse.linalg.LinearOperator((N, N), matvec=inv_matvec)
    v0 = np.cos(grid.axis_coordinate(0)).ravel() * sq.ravel()
    mu, vecs = scipy.sparse.linalg.eigsh(L, k=k, which="LM", v0=v0, tol=1e-12)
    order = np.argsort(1.0 / mu - sigma)
    out = []
    for idx in order:
        lam = 1.0 / mu[idx] - sigma
        v = vecs[:, idx].reshape(shape) / sq
        if project is not None:
            v = project(v)
        nrm = np.sqrt(np.sum(w * v * v))
        out.append((float(lam), v / nrm))
    return out


def eigen_residual(state, apply_op, lam, vec):
    """Relative operator residual ||A v - lam v|| / ||v|| in L^2_Omega."""
    w = _quad_weights(state)
    r = apply_op(vec) - lam * vec
    return float(np.sqrt(np.sum(w * r * r) / np.sum(w * vec * vec)))
