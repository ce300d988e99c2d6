"""Tensor-field value types on a Grid and their pointwise algebra.

Components are stored covariant (indices down) except for endomorphisms,
which carry one upper and one lower index; formulas that need an upper index
insert explicit inverse-metric factors.  Component arrays have shape
(dim,)*rank + grid.shape.

Sphere parity: a component picks up a factor (-1) per theta index under the
cross-pole reflection, covariant or contravariant alike; volume densities
carry an extra factor (-1) because dtheta flips.  (The reflection map is
(theta, phi) -> (-theta, phi + pi), which is the identity on the sphere, so
this is the unique smooth extension rule; note that it makes azimuthal
vector components even, the regularity forced by e.g. the rotation field.)
"""

from __future__ import annotations

import numpy as np

from . import mesh
from .mesh import SPHERE_AXISYM, TORUS


def component_parity(comp, base_parity=1):
    """Reflection parity of one component: base * (-1)^(#theta indices)."""
    p = base_parity
    for i in comp:
        if i == 0:
            p = -p
    return p


def grad_components(grid, values, rank, base_parity=1):
    """partial_a applied to every component; result shape (dim,)+values.shape."""
    values = np.asarray(values)
    out = np.empty((grid.dim,) + values.shape, dtype=values.dtype)
    if grid.kind == TORUS:
        for axis in range(grid.dim):
            out[axis] = mesh.partial_derivative(values, axis, grid)
        return out
    # sphere: batch theta-derivatives per parity class, azimuthal slot is zero
    out[1] = 0.0
    if rank == 0:
        out[0] = mesh.partial_derivative(values, 0, grid, parity=base_parity)
        return out
    for comp in np.ndindex(*values.shape[:rank]):
        p = component_parity(comp, base_parity)
        out[(0,) + comp] = mesh.partial_derivative(values[comp], 0, grid, parity=p)
    return out


class TensorField:
    """Base class: immutable-by-convention component array on a grid."""

    rank = 0
    base_parity = 1

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=self._dtype(values))
        expected = (grid.dim,) * self.rank + grid.shape
        if values.shape != expected:
            raise ValueError(
                f"{type(self).__name__} expects shape {expected}, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite components")
        self.grid = grid
        self.values = values

    @staticmethod
    def _dtype(values):
        return complex if np.iscomplexobj(values) else float

    def _like(self, values):
        return type(self)(self.grid, values)

    def __add__(self, other):
        self._check_compatible(other)
        return self._like(self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(self.values - other.values)

    def __neg__(self):
        return self._like(-self.values)

    def __mul__(self, a):
        return self._like(self.values * self._factor(a))

    __rmul__ = __mul__

    def _factor(self, a):
        if isinstance(a, ScalarField):
            return a.values
        if np.isscalar(a):
            return a
        return np.asarray(a)

    def _check_compatible(self, other):
        if type(other) is not type(self) or other.grid is not self.grid:
            raise TypeError("incompatible field operands")

    def sup_abs(self):
        return float(np.max(np.abs(self.values)))

    def gradients(self):
        return grad_components(self.grid, self.values, self.rank, self.base_parity)


class ScalarField(TensorField):
    rank = 0


class ComplexScalarField(TensorField):
    rank = 0

    @staticmethod
    def _dtype(values):
        return complex

    def conj(self):
        return ComplexScalarField(self.grid, np.conj(self.values))

    @property
    def real(self):
        return ScalarField(self.grid, self.values.real.copy())

    @property
    def imag(self):
        return ScalarField(self.grid, self.values.imag.copy())


class VectorField(TensorField):
    rank = 1


class OneForm(TensorField):
    rank = 1


class SymTensor2(TensorField):
    rank = 2

    def __init__(self, grid, values):
        values = np.asarray(values)
        skew = np.max(np.abs(values - values.swapaxes(0, 1)))
        scale = max(1.0, np.max(np.abs(values)))
        if skew > 1e-10 * scale:
            raise ValueError(f"symmetric 2-tensor has skew part {skew:.3e}")
        super().__init__(grid, 0.5 * (values + values.swapaxes(0, 1)))


class TwoForm(TensorField):
    rank = 2

    def __init__(self, grid, values):
        values = np.asarray(values)
        sym = np.max(np.abs(values + values.swapaxes(0, 1)))
        scale = max(1.0, np.max(np.abs(values)))
        if sym > 1e-10 * scale:
            raise ValueError(f"2-form has symmetric part {sym:.3e}")
        super().__init__(grid, 0.5 * (values - values.swapaxes(0, 1)))


class Endo(TensorField):
    """Mixed tensor A^i_j; A(xi)^i = A^i_j xi^j."""

    rank = 2


class ScalarDensity(TensorField):
    """Coefficient of the coordinate volume element; strictly positive."""

    rank = 0
    base_parity = -1

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0.0):
            raise ValueError("density must be strictly positive")
        super().__init__(grid, values)

    def total(self):
        return mesh.integrate(self.values, self.grid)

    def normalized(self):
        return ScalarDensity(self.grid, self.values / self.total())


# ---------------------------------------------------------------------------
# pointwise metric algebra
# ---------------------------------------------------------------------------

def inv_sym(gvals):
    """Pointwise inverse of a symmetric matrix field (dim,dim)+grid."""
    d = gvals.shape[0]
    mat = np.moveaxis(gvals, (0, 1), (-2, -1))
    inv = np.linalg.inv(mat)
    return np.moveaxis(inv, (-2, -1), (0, 1))


def det_sym(gvals):
    mat = np.moveaxis(gvals, (0, 1), (-2, -1))
    return np.linalg.det(mat)


def min_eig_sym(gvals):
    """Smallest pointwise eigenvalue of a symmetric matrix field."""
    mat = np.moveaxis(gvals, (0, 1), (-2, -1))
    w = np.linalg.eigvalsh(mat)
    return float(np.min(w))


def is_positive_definite(gvals):
    # leading principal minors, vectorized over the grid
    d = gvals.shape[0]
    for k in range(1, d + 1):
        sub = np.moveaxis(gvals[:k, :k], (0, 1), (-2, -1))
        if np.any(np.linalg.det(sub) <= 0.0):
            return False
    return True


def raise_index(t, g):
    """g^{-1} t: covariant symmetric 2-tensor -> endomorphism."""
    ginv = inv_sym(g.values)
    return Endo(t.grid, np.einsum("ab...,bc...->ac...", ginv, t.values))


def lower_index(A, g):
    """g A: endomorphism with symmetric g A -> covariant 2-tensor."""
    vals = np.einsum("ab...,bc...->ac...", g.values, A.values)
    return SymTensor2(A.grid, vals)


def lower_endo_raw(Avals, gvals):
    """g A without the symmetry requirement (raw array)."""
    return np.einsum("ab...,bc...->ac...", gvals, Avals)


def endo_transpose_g(Avals, gvals, ginvvals):
    """g-transpose of an endomorphism: A^T_g = g^{-1} A^T g."""
    return np.einsum("ab...,cb...,cd...->ad...", ginvvals, Avals, gvals)


def pair_contract(avals, bvals, itypes, gvals, ginvvals):
    """Pointwise full contraction of two tensors with matching index types.

    Each 'd' slot is paired with the inverse metric, each 'u' slot with the
    metric.  Returns a plain ndarray over the grid.
    """
    rank = len(itypes)
    letters = "abcdefgh"
    pairs = "ijklmnop"
    terms, ops = [], []
    for pos, it in enumerate(itypes):
        m = ginvvals if it == "d" else gvals
        terms.append(letters[pos] + pairs[pos] + "...")
        ops.append(m)
    sub = (
        "".join(letters[:rank]) + "...," + "".join(pairs[:rank]) + "...,"
        + ",".join(terms) + "->..."
    )
    return np.einsum(sub, avals, bvals, *ops)


def inner(u, v, g):
    """Pointwise scalar product <u, v>_g for same-type tensor fields."""
    ginv = inv_sym(g.values)
    if isinstance(u, (SymTensor2, TwoForm)):
        vals = pair_contract(u.values, v.values, "dd", g.values, ginv)
    elif isinstance(u, OneForm):
        vals = pair_contract(u.values, v.values, "d", g.values, ginv)
    elif isinstance(u, VectorField):
        vals = pair_contract(u.values, v.values, "u", g.values, ginv)
    elif isinstance(u, Endo):
        vals = pair_contract(u.values, v.values, "ud", g.values, ginv)
    else:
        vals = u.values * v.values
    return ScalarField(u.grid, vals)


def trace_g(u, g):
    """Tr_g u = Tr(g^{-1} u) for a covariant 2-tensor."""
    ginv = inv_sym(g.values)
    return ScalarField(u.grid, np.einsum("ab...,ab...->...", ginv, u.values))


def sup_norm_g(t, g, itypes=None):
    """Max over the grid of the pointwise g-norm of a tensor (raw or typed)."""
    if isinstance(t, TensorField):
        vals = t.values
        if itypes is None:
            itypes = {0: "", 1: "d" if isinstance(t, OneForm) else "u"}.get(
                t.rank, "ud" if isinstance(t, Endo) else "dd"
            )
    else:
        vals = np.asarray(t)
    ginv = inv_sym(g.values)
    sq = pair_contract(vals, np.conj(vals), itypes, g.values, ginv)
    return float(np.sqrt(np.max(np.abs(sq))))


# ---------------------------------------------------------------------------
# Lie derivatives (coordinate formulas; no connection required)
# ---------------------------------------------------------------------------

def lie_metric(xi, g):
    """L_xi g in coordinates: xi^k d_k g_ij + g_kj d_i xi^k + g_ik d_j xi^k."""
    grid = g.grid
    dg = grad_components(grid, g.values, 2)          # (a, i, j)
    dxi = grad_components(grid, xi.values, 1)        # (a, k)
    adv = np.einsum("k...,kij...->ij...", xi.values, dg)
    strain = np.einsum("kj...,ik...->ij...", g.values, dxi)
    vals = adv + strain + strain.swapaxes(0, 1)
    return SymTensor2(grid, vals)


def lie_density_rate(xi, omega):
    """(L_xi Omega)/Omega = div(omega xi)/omega; equals the weighted divergence."""
    grid = omega.grid
    flux = omega.values * xi.values
    dflux = grad_components(grid, flux, 1, base_parity=-1)
    div = np.einsum("kk...->...", dflux)
    return ScalarField(grid, div / omega.values)


def omega_mean(u, omega):
    """Integral of a scalar against the density."""
    return mesh.integrate(u.values * omega.values, u.grid)
