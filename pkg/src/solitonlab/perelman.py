"""Entropy-type functionals on metric/volume pairs and their variations.

The objects: h = Ric_g(Omega) - g, the potential 2H = -Delta^Omega f +
Tr_g h + 2f, the centered Hbar, the entropy W = 2 int H Omega, the twice
contracted Bianchi-type residual adj(h) + dH, the closed first variations of
h, H and W, and finite-difference oracles along affine curves
(g + t v, Omega (1 + t V*)) used to verify them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mesh, riemann
from .fields import (
    OneForm,
    ScalarField,
    SymTensor2,
    VectorField,
    inner,
    lie_metric,
    min_eig_sym,
    sup_norm_g,
    trace_g,
)
from .riemann import MetricState


@dataclass
class TangentPair:
    """Tangent vector (v, V) of metric x volume pairs, stored as (v, V/Omega)."""

    v: SymTensor2
    vstar: ScalarField

    def __post_init__(self):
        if self.v.grid is not self.vstar.grid:
            raise ValueError("components live on different grids")

    def check_tangency(self, state, tol=1e-10):
        drift = abs(state.integral(self.vstar.values))
        if drift > tol:
            raise ValueError(f"volume component not tangent: integral {drift:.3e}")
        return drift

    def scaled(self, a):
        return TangentPair(a * self.v, a * self.vstar)


def pair_add(a, b):
    return TangentPair(a.v + b.v, a.vstar + b.vstar)


def pair_sub(a, b):
    return TangentPair(a.v - b.v, a.vstar - b.vstar)


def lie_pair(state, xi):
    """Orbit direction (L_xi g, (L_xi Omega)/Omega) of the diffeomorphism action."""
    from .fields import lie_density_rate

    return TangentPair(lie_metric(xi, state.g), lie_density_rate(xi, state.omega))


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def w_functional(state):
    """W(g, Omega) = int [Tr_g h + 2 f] Omega = 2 int H Omega."""
    tr_h = trace_g(state.h, state.g)
    return state.integral(tr_h.values + 2.0 * state.f.values)


def w_functional_gradient_form(state):
    """W in the |grad f|^2 + Scal + 2f - m form (cross-check of w_functional)."""
    df = state.df.values
    grad_sq = np.einsum("ab...,a...,b...->...", state.ginv, df, df)
    integrand = grad_sq + state.scal.values + 2.0 * state.f.values - state.dim
    return state.integral(integrand)


def bianchi_residual(state):
    """The 1-form adj^Omega(h) + dH and its max norm; zero in the continuum."""
    adj_h = riemann.omega_adjoint(state, state.h)
    dH = riemann.differential(state, state.H)
    res = OneForm(state.grid, adj_h.values + dH.values)
    return res, sup_norm_g(res, state.g, "d")


def first_variation_w(state, pair):
    """D W (v, V) = -int [<v, h> - 2 V* Hbar] Omega."""
    vh = inner(pair.v, state.h, state.g)
    integrand = vh.values - 2.0 * pair.vstar.values * state.Hbar.values
    return -state.integral(integrand)


def monotonicity_integrand(state):
    """int [|h|^2 - 2 Hbar^2] Omega, the entropy production rate of the flow."""
    h_sq = inner(state.h, state.h, state.g)
    return state.integral(h_sq.values - 2.0 * state.Hbar.values**2)


# ---------------------------------------------------------------------------
# closed-form linearizations
# ---------------------------------------------------------------------------

def pair_drift_vector(state, pair):
    """xi(v, V) = adj^Omega(v)# + grad V*, the Lie-gauge direction."""
    adj_v = riemann.omega_adjoint(state, pair.v)
    dV = riemann.differential(state, pair.vstar)
    alpha = adj_v.values + dV.values
    return VectorField(state.grid, np.einsum("ab...,b...->a...", state.ginv, alpha))


def d_h(state, pair):
    """Closed first variation of h: 2 Dh = Lich(v) - L_xi g - 2 v."""
    lich = riemann.lichnerowicz(state, pair.v)
    xi = pair_drift_vector(state, pair)
    lie = lie_metric(xi, state.g)
    vals = 0.5 * (lich.values - lie.values - 2.0 * pair.v.values)
    return SymTensor2(state.grid, vals)


def d_hfunc(state, pair):
    """Closed first variation of H:

    2 DH = Delta^Omega V* - div^Omega xi - 2 V* - <v, h>.
    """
    lapV = riemann.weighted_laplacian(state, pair.vstar)
    xi = pair_drift_vector(state, pair)
    div = riemann.omega_divergence(state, xi)
    vh = inner(pair.v, state.h, state.g)
    vals = 0.5 * (lapV.values - div.values - 2.0 * pair.vstar.values - vh.values)
    return ScalarField(state.grid, vals)


def d_hbar(state, pair):
    """First variation of Hbar = H - int H Omega along the pair."""
    dH = d_hfunc(state, pair)
    mean_rate = state.integral(dH.values) + state.integral(
        state.H.values * pair.vstar.values
    )
    return ScalarField(state.grid, dH.values - mean_rate)


# ---------------------------------------------------------------------------
# finite-difference oracles along affine curves
# ---------------------------------------------------------------------------

def curve_state(state, pair, t):
    """(g + t v, Omega (1 + t V*) / norm); the curve of the affine identification."""
    gv = state.g.values + t * pair.v.values
    om = state.omega.values * (1.0 + t * pair.vstar.values)
    return MetricState(state.grid, SymTensor2(state.grid, gv), om,
                       normalize=True, check=False)


def safe_step(state, pair, h0=1e-3):
    """Shrink the step until g +- h v stays inside the positive cone."""
    h = h0
    for _ in range(40):
        ok = True
        for t in (h, -h):
            gv = state.g.values + t * pair.v.values
            if min_eig_sym(gv) <= 0.1 * state.min_eig_g:
                ok = False
                break
        if ok:
            return h
        h *= 0.5
    raise ValueError("could not find a positive-definite step")


def fd_richardson(sample, h):
    """Richardson-extrapolated central difference of a scalar/array curve."""
    d_h = (sample(h) - sample(-h)) / (2.0 * h)
    d_h2 = (sample(0.5 * h) - sample(-0.5 * h)) / h
    return (4.0 * d_h2 - d_h) / 3.0


def fd_first_variation_w(state, pair, h0=1e-3):
    h = safe_step(state, pair, h0)
    return fd_richardson(lambda t: w_functional(curve_state(state, pair, t)), h)


def fd_d_h(state, pair, h0=1e-3):
    h = safe_step(state, pair, h0)
    return fd_richardson(lambda t: curve_state(state, pair, t).h.values, h)


def fd_d_hfunc(state, pair, h0=1e-3):
    h = safe_step(state, pair, h0)
    return fd_richardson(lambda t: curve_state(state, pair, t).H.values, h)


def fd_d_hbar(state, pair, h0=1e-3):
    h = safe_step(state, pair, h0)

    def hbar_along(t):
        st = curve_state(state, pair, t)
        mean = st.integral(st.H.values)
        return st.H.values - mean

    return fd_richardson(hbar_along, h)


def is_soliton(state, tol=1e-8):
    """Shrinking-soliton test: h = 0 and Hbar = 0 within tolerance."""
    return sup_norm_g(state.h, state.g, "dd") <= tol and state.Hbar.sup_abs() <= tol
