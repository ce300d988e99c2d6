"""Seeded construction of test states and tangent pairs on both backends.

All random fields are band-limited with exponentially decaying coefficients
so torus quadrature and differentiation stay at spectral accuracy; sphere
states are zonal and respect the pole regularity built into the backend
(conformal metric factors, densities proportional to sin(theta))."""

from __future__ import annotations

import numpy as np

from . import mesh
from .fields import ScalarDensity, ScalarField, SymTensor2, VectorField
from .perelman import TangentPair
from .riemann import MetricState


def flat_torus_state(grid):
    """Flat metric with the uniform normalized volume form."""
    d, shape = grid.dim, grid.shape
    gv = np.zeros((d, d) + shape)
    for i in range(d):
        gv[i, i] = 1.0
    om = np.full(shape, (2.0 * np.pi) ** (-d))
    return MetricState(grid, SymTensor2(grid, gv), ScalarDensity(grid, om))


def conformal_torus_state(grid, u_values, omega_values=None):
    """g = e^{2u} delta with an optional custom (unnormalized) density."""
    d, shape = grid.dim, grid.shape
    gv = np.zeros((d, d) + shape)
    conf = np.exp(2.0 * u_values)
    for i in range(d):
        gv[i, i] = conf
    if omega_values is None:
        omega_values = np.ones(shape)
    om = ScalarDensity(grid, omega_values).normalized()
    return MetricState(grid, SymTensor2(grid, gv), om)


def random_torus_state(grid, rng, amp=0.15, conformal=False):
    """Seeded band-limited SPD metric and positive normalized density."""
    d, shape = grid.dim, grid.shape
    if conformal:
        u = mesh.random_scalar(grid, rng, amplitude=amp)
        st = conformal_torus_state(grid, u)
        gv = st.g.values
    else:
        gv = np.zeros((d, d) + shape)
        for i in range(d):
            gv[i, i] = 1.0
        for i in range(d):
            for j in range(i, d):
                p = mesh.random_scalar(grid, rng, amplitude=amp if i != j else amp)
                gv[i, j] += p
                if i != j:
                    gv[j, i] += p
    om = 1.0 + mesh.random_scalar(grid, rng, amplitude=amp)
    if np.min(om) <= 0.1:
        om = om - np.min(om) + 0.5
    om = om / mesh.integrate(om, grid)
    return MetricState(grid, SymTensor2(grid, gv), ScalarDensity(grid, om))


def round_sphere_state(grid):
    """The unit round sphere with Omega = dV / 4 pi (the shrinking soliton)."""
    th = grid.theta
    gv = np.zeros((2, 2) + grid.shape)
    gv[0, 0] = 1.0
    gv[1, 1] = np.sin(th) ** 2
    om = np.sin(th) / (4.0 * np.pi)
    return MetricState(grid, SymTensor2(grid, gv), ScalarDensity(grid, om))


def conformal_sphere_state(grid, a_values, omega_perturb=None):
    """g = e^{2a} g_round, Omega = (1 + perturbation) dV_round normalized."""
    th = grid.theta
    gv = np.zeros((2, 2) + grid.shape)
    conf = np.exp(2.0 * a_values)
    gv[0, 0] = conf
    gv[1, 1] = conf * np.sin(th) ** 2
    om = np.sin(th)
    if omega_perturb is not None:
        om = om * (1.0 + omega_perturb)
    om = om / mesh.integrate(om, grid)
    return MetricState(grid, SymTensor2(grid, gv), ScalarDensity(grid, om))


def random_sphere_state(grid, rng, amp=0.05):
    a = mesh.random_scalar(grid, rng, amplitude=amp)
    pert = mesh.random_scalar(grid, rng, amplitude=amp, zero_mean=True)
    return conformal_sphere_state(grid, a, pert)


def random_scalar_zero_mean(state, rng, amp=1.0):
    """Band-limited scalar with zero Omega-mean."""
    u = mesh.random_scalar(state.grid, rng, amplitude=amp)
    u = u - state.integral(u)
    return ScalarField(state.grid, u)


def random_vector(state, rng, amp=1.0):
    grid = state.grid
    vals = np.zeros((grid.dim,) + grid.shape)
    if grid.kind == mesh.TORUS:
        for i in range(grid.dim):
            vals[i] = mesh.random_scalar(grid, rng, amplitude=amp)
    else:
        th = grid.theta
        vals[0] = np.sin(th) * mesh.random_scalar(grid, rng, amplitude=amp)
        vals[1] = mesh.random_scalar(grid, rng, amplitude=amp)
    return VectorField(grid, vals)


def random_sym2(state, rng, amp=1.0):
    """Band-limited symmetric 2-tensor respecting sphere pole regularity."""
    grid = state.grid
    vals = np.zeros((grid.dim,) + (grid.dim,) + grid.shape)
    if grid.kind == mesh.TORUS:
        for i in range(grid.dim):
            for j in range(i, grid.dim):
                p = mesh.random_scalar(grid, rng, amplitude=amp)
                vals[i, j] = p
                vals[j, i] = p
        return SymTensor2(grid, vals)
    th = grid.theta
    s = np.sin(th)
    vals[0, 0] = mesh.random_scalar(grid, rng, amplitude=amp)
    vals[1, 1] = s**2 * mesh.random_scalar(grid, rng, amplitude=amp)
    cross = s**2 * mesh.random_scalar(grid, rng, amplitude=amp)
    vals[0, 1] = cross
    vals[1, 0] = cross
    return SymTensor2(grid, vals)


def random_pair(state, rng, amp=0.3):
    """Random tangent pair (v, V*) with the zero-mean constraint."""
    v = random_sym2(state, rng, amp=amp)
    vstar = random_scalar_zero_mean(state, rng, amp=amp)
    return TangentPair(v, vstar)
