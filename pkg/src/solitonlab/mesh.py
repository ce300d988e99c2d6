"""Model grids: periodic flat tori and the axisymmetric 2-sphere chart.

The torus backend samples [0, 2pi)^d uniformly and differentiates by Fourier
collocation, so derivatives of band-limited data are exact to roundoff.

The sphere backend stores axisymmetric fields on cell-centered colatitude
nodes theta_j = (j + 1/2) pi / n, which never touch the poles.  A component
with parity p extends to a smooth 2pi-periodic function of theta through
F(-theta) = p F(theta) and F(2pi - theta) = p F(theta); theta-derivatives are
taken spectrally on that extension.  The parity of a tensor component in the
(theta, phi) chart is (-1)^(number of theta indices), covariant or
contravariant alike.  Azimuthal derivatives of axisymmetric samples vanish;
the Christoffel terms that an azimuthal derivative would normally produce are
supplied by the covariant machinery downstream.

Quadrature nodes are the same cell centers.  On the sphere the weights are
chosen to integrate sin(k theta), k = 1..n, exactly: every smooth coordinate
volume density is an odd function of theta across the poles, so this rule is
spectrally accurate precisely on the class of densities that occur.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TORUS = "torus"
SPHERE_AXISYM = "sphere_axisym"

_MIN_POINTS = 8


@dataclass(eq=False)
class Grid:
    """Discrete model manifold (see module docstring for conventions)."""

    kind: str
    dim: int
    n: int
    coords: tuple = field(repr=False, default=())
    _sphere_weights: np.ndarray = field(repr=False, default=None)

    @property
    def shape(self):
        if self.kind == TORUS:
            return (self.n,) * self.dim
        return (self.n,)

    @property
    def spacing(self):
        return 2.0 * np.pi / self.n if self.kind == TORUS else np.pi / self.n

    @property
    def theta(self):
        if self.kind != SPHERE_AXISYM:
            raise ValueError("theta is only defined on the sphere backend")
        return self.coords[0]

    def axis_coordinate(self, axis):
        """Coordinate of `axis` broadcast to the full grid shape."""
        c = self.coords[axis]
        if self.kind == SPHERE_AXISYM:
            return c if axis == 0 else np.zeros_like(c)
        shape = [1] * self.dim
        shape[axis] = self.n
        return np.broadcast_to(c.reshape(shape), self.shape).copy()


def build_grid(kind, dim, n):
    """Construct a Grid; rejects unsupported (kind, dim, n) combinations."""
    if n < _MIN_POINTS:
        raise ValueError(f"n={n} below minimum {_MIN_POINTS}")
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}")
    if kind == TORUS:
        x = 2.0 * np.pi * np.arange(n) / n
        return Grid(kind=TORUS, dim=dim, n=n, coords=(x,) * dim)
    if kind == SPHERE_AXISYM:
        if dim != 2:
            raise ValueError("sphere backend requires dim=2")
        theta = (np.arange(n) + 0.5) * np.pi / n
        g = Grid(kind=SPHERE_AXISYM, dim=2, n=n, coords=(theta,))
        g._sphere_weights = _sine_exact_weights(n, theta)
        return g
    raise ValueError(f"unknown grid kind {kind!r}")


def _sine_exact_weights(n, theta):
    # Solve S w = I with S[k-1, j] = sin(k theta_j); rows are orthogonal up to
    # scaling, so the system is perfectly conditioned.
    k = np.arange(1, n + 1)
    S = np.sin(np.outer(k, theta))
    I = (1.0 - (-1.0) ** k) / k
    return np.linalg.solve(S, I)


def _torus_spectral_derivative(values, axis, n):
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0  # odd derivative of the Nyquist mode is not representable
    shape = [1] * values.ndim
    shape[axis] = n
    fh = np.fft.fft(values, axis=axis) * (1j * k).reshape(shape)
    out = np.fft.ifft(fh, axis=axis)
    return out if np.iscomplexobj(values) else out.real


def _sphere_theta_derivative(values, parity):
    # Extend over theta in [0, 2pi) via the cross-pole reflection, then take
    # the periodic spectral derivative of the (smooth) extension.  Spectral
    # coefficients at machine-noise level are zeroed before the ik multiply:
    # the noise does not vanish at the poles the way true tensor components
    # do, and inverse-metric contractions would amplify it by 1/sin^2(theta).
    n = values.shape[-1]
    ext = np.concatenate([values, parity * values[..., ::-1]], axis=-1)
    k = np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    k[n] = 0.0
    fh = np.fft.fft(ext, axis=-1)
    scale = np.max(np.abs(fh), axis=-1, keepdims=True)
    fh[np.abs(fh) < 1e-14 * scale] = 0.0
    out = np.fft.ifft(fh * (1j * k), axis=-1)
    if not np.iscomplexobj(values):
        out = out.real
    return out[..., :n]


def partial_derivative(values, axis, grid, parity=1):
    """Coordinate partial derivative of one field component.

    On the torus this is the Fourier-collocation derivative along `axis`.
    On the sphere axis 0 is the spectral theta-derivative of the parity
    extension and axis 1 (azimuth) is identically zero for axisymmetric
    samples.
    """
    values = np.asarray(values)
    if grid.kind == TORUS:
        if values.shape[-grid.dim:] != grid.shape:
            raise ValueError("field shape does not match grid")
        return _torus_spectral_derivative(values, values.ndim - grid.dim + axis, grid.n)
    if values.shape[-1] != grid.n:
        raise ValueError("field shape does not match grid")
    if axis == 0:
        return _sphere_theta_derivative(values, parity)
    return np.zeros_like(values)


def integrate(density, grid):
    """Integral of a sampled coordinate density over the chart.

    Torus: the periodic trapezoid rule (spectral quadrature).  Sphere: the
    sine-exact cell-centered rule in theta times the 2pi azimuthal factor;
    the sin(theta) geometric factor is part of the density, not the rule.
    """
    density = np.asarray(density)
    if grid.kind == TORUS:
        return float(np.sum(density) * grid.spacing ** grid.dim)
    return float(2.0 * np.pi * np.dot(grid._sphere_weights, density))


def integrate_complex(density, grid):
    """Like integrate() but keeps a complex result."""
    density = np.asarray(density)
    if grid.kind == TORUS:
        return complex(np.sum(density) * grid.spacing ** grid.dim)
    return complex(2.0 * np.pi * np.sum(grid._sphere_weights * density))


def random_scalar(grid, rng, max_mode=None, amplitude=1.0, zero_mean=False):
    """Seeded band-limited random field with |c_k| ~ exp(-|k|).

    On the torus the modes fill the box |k_i| <= min(max_mode, n//4); on the
    sphere the field is a zonal cosine polynomial (even parity) of degree
    <= min(max_mode, n//4).
    """
    if grid.kind == TORUS:
        m = min(max_mode or grid.n // 4, grid.n // 4)
        spec = np.zeros(grid.shape, dtype=complex)
        ranges = [range(-m, m + 1)] * grid.dim
        idx = np.meshgrid(*ranges, indexing="ij")
        kvecs = np.stack([a.ravel() for a in idx], axis=-1)
        for kv in kvecs:
            if zero_mean and not kv.any():
                continue
            c = rng.standard_normal() + 1j * rng.standard_normal()
            spec[tuple(kv % grid.n)] = c * np.exp(-np.linalg.norm(kv))
        out = amplitude * np.fft.ifftn(spec).real * grid.n ** grid.dim / (2 * m + 1) ** grid.dim
        if zero_mean:
            out -= out.mean()
        return out
    m = min(max_mode or grid.n // 4, grid.n // 4)
    coeff = rng.standard_normal(m + 1) * np.exp(-np.arange(m + 1))
    if zero_mean:
        coeff[0] = 0.0
    out = amplitude * np.cos(np.outer(np.arange(m + 1), grid.theta)).T @ coeff
    return out


def random_zonal_odd(grid, rng, max_mode=None, amplitude=1.0):
    """Seeded odd-parity zonal field (sine polynomial) on the sphere."""
    if grid.kind != SPHERE_AXISYM:
        raise ValueError("odd zonal fields only exist on the sphere backend")
    m = min(max_mode or grid.n // 4, grid.n // 4)
    coeff = rng.standard_normal(m) * np.exp(-np.arange(1, m + 1))
    return amplitude * np.sin(np.outer(np.arange(1, m + 1), grid.theta)).T @ coeff
