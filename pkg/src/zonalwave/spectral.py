"""Zonal spectral basis on the 3-sphere.

A zonal function depends only on the polar angle ``R`` in ``(0, pi)``, with
integration measure ``sin^2(R) dR``.  The orthonormal eigenbasis of
``1 - Laplace_{S^3}`` restricted to zonal functions is

    e_n(R) = sqrt(2/pi) * sin(n R) / sin(R),    n = 1, 2, ...

with ``(1 - Laplace) e_n = n^2 e_n``.  Coefficient vectors are complex
ndarrays of shape ``(..., N)`` (mode ``n`` stored at index ``n-1``); grid
fields are samples at the interior collocation nodes ``R_j = j pi / M``,
``j = 1 .. M-1``, stored as arrays of shape ``(..., M-1)``.  Leading batch
dimensions are supported throughout.

All operations are pure; nothing here carries mutable state.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dst

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)

# atol under which an evaluation angle counts as the endpoint 0 or pi
_ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class SpectralParams:
    """Resolution parameters: N modes, M grid intervals, Sobolev index sigma.

    ``M >= 4N`` oversamples the collocation grid enough that quadrature of
    the fractional-power nonlinearity stays at spectral accuracy.
    """

    N: int
    M: int
    sigma: float = 0.4

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"mode count N must be >= 1, got {self.N}")
        if self.M < 4 * self.N:
            raise ValueError(f"grid size M={self.M} must be >= 4N={4 * self.N}")


@lru_cache(maxsize=64)
def _grid_cached(M):
    nodes = np.arange(1, M) * (np.pi / M)
    nodes.setflags(write=False)
    return nodes


@lru_cache(maxsize=64)
def _sin_grid_cached(M):
    s = np.sin(_grid_cached(M))
    s.setflags(write=False)
    return s


@lru_cache(maxsize=64)
def _quadrature_weights_cached(M):
    w = (np.pi / M) * _sin_grid_cached(M) ** 2
    w.setflags(write=False)
    return w


def grid(M):
    """Interior collocation nodes R_j = j pi / M, j = 1 .. M-1."""
    return _grid_cached(M)


def eval_eigenfunction(n, R):
    """Evaluate e_n(R) = sqrt(2/pi) sin(nR)/sin(R) for R in [0, pi].

    Within 1e-12 of an endpoint the removable singularity is replaced by its
    analytic limit: n*sqrt(2/pi) at 0 and (-1)^(n+1) n sqrt(2/pi) at pi.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"mode index must be a positive integer, got {n}")
    R = np.asarray(R, dtype=float)
    if np.any(R < -_ENDPOINT_TOL) or np.any(R > np.pi + _ENDPOINT_TOL):
        raise ValueError("evaluation angle outside [0, pi]")
    at_zero = np.abs(R) <= _ENDPOINT_TOL
    at_pi = np.abs(R - np.pi) <= _ENDPOINT_TOL
    interior = ~(at_zero | at_pi)
    out = np.empty_like(R)
    Ri = R[interior]
    out[interior] = SQRT_2_OVER_PI * np.sin(n * Ri) / np.sin(Ri)
    out[at_zero] = n * SQRT_2_OVER_PI
    out[at_pi] = (-1.0) ** (n + 1) * n * SQRT_2_OVER_PI
    if out.ndim == 0:
        return float(out)
    return out


def synthesize(coeffs, M):
    """Evaluate ``sum_n c_n e_n`` at the interior nodes of an M-point grid.

    Uses a type-I discrete sine transform; exact for M >= N+1.
    """
    coeffs = np.asarray(coeffs)
    N = coeffs.shape[-1]
    if M < N + 1:
        raise ValueError(f"grid size M={M} too small for N={N} modes (need M >= N+1)")
    pad_shape = coeffs.shape[:-1] + (M - 1,)
    pad = np.zeros(pad_shape, dtype=coeffs.dtype)
    pad[..., :N] = coeffs
    # scipy dst-I: y_k = 2 sum_n x_n sin(pi (n+1)(k+1) / M)
    sine_sums = 0.5 * dst(pad, type=1, axis=-1)
    return SQRT_2_OVER_PI * sine_sums / _sin_grid_cached(M)


def analyze(field, N=None):
    """Coefficients ``c_n = <field, e_n>`` from interior-node samples.

    Quadrature on the uniform grid: multiply by sin(R_j), sine-transform,
    scale by sqrt(2/pi) * pi / M.  Exact (inverse of synthesize) for fields
    that are sine polynomials of degree < M.  Returns the first N modes
    (default M-1).
    """
    field = np.asarray(field)
    M = field.shape[-1] + 1
    if N is None:
        N = M - 1
    if N > M - 1:
        raise ValueError(f"cannot extract N={N} modes from an M={M} grid")
    weighted = field * _sin_grid_cached(M)
    coeffs = 0.5 * dst(weighted, type=1, axis=-1) * (SQRT_2_OVER_PI * np.pi / M)
    return coeffs[..., :N]


def smooth_cutoff_profile(x):
    """C^2 cutoff chi: 1 on [0, 1/2], 0 on [1, inf), smoothstep in between."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.ones_like(x)
    y = 2.0 * x - 1.0
    mid = (x > 0.5) & (x < 1.0)
    ym = y[mid]
    out[mid] = 1.0 - ym**3 * (10.0 - 15.0 * ym + 6.0 * ym**2)
    out[x >= 1.0] = 0.0
    return out


@lru_cache(maxsize=128)
def _cutoff_weights_cached(N_cut, N):
    n = np.arange(1, N + 1)
    w = smooth_cutoff_profile(n**2 / float(N_cut) ** 2)
    w.setflags(write=False)
    return w


def smooth_cutoff_weights(N_cut, N):
    """Multiplier weights chi(n^2 / N_cut^2) for modes n = 1 .. N."""
    return _cutoff_weights_cached(int(N_cut), int(N))


@dataclass(frozen=True)
class MultiplierSpec:
    """Diagonal spectral multiplier.

    kind
        ``"h_power"``   : c_n -> n**s c_n (powers of H = sqrt(1 - Laplace))
        ``"smooth_cutoff"`` : c_n -> chi(n^2/N_cut^2) c_n
        ``"sharp_projector"``: zero all modes with n > N_cut
    """

    kind: str
    s: float = 0.0
    N_cut: int = 0

    def weights(self, N):
        n = np.arange(1, N + 1)
        if self.kind == "h_power":
            return n.astype(float) ** self.s
        if self.kind == "smooth_cutoff":
            return smooth_cutoff_weights(self.N_cut, N)
        if self.kind == "sharp_projector":
            return (n <= self.N_cut).astype(float)
        raise ValueError(f"unknown multiplier kind {self.kind!r}")


def apply_multiplier(spec, coeffs):
    """Apply a diagonal multiplier to a coefficient array."""
    coeffs = np.asarray(coeffs)
    return coeffs * spec.weights(coeffs.shape[-1])


def h_power(coeffs, s):
    """c_n -> n**s c_n."""
    return apply_multiplier(MultiplierSpec("h_power", s=s), coeffs)


def smooth_cutoff(coeffs, N_cut):
    """Smooth spectral cutoff S_{N_cut}, uniformly bounded on L^p."""
    return apply_multiplier(MultiplierSpec("smooth_cutoff", N_cut=N_cut), coeffs)


def sharp_projector(coeffs, N_cut):
    """Sharp Galerkin projector Pi_{N_cut}."""
    return apply_multiplier(MultiplierSpec("sharp_projector", N_cut=N_cut), coeffs)


def quadrature_weights(M):
    """Trapezoid weights (pi/M) sin^2(R_j) for the zonal measure.

    Endpoint terms vanish because sin^2 R does; for trigonometric-polynomial
    integrands below the Nyquist limit the rule is exact.
    """
    return _quadrature_weights_cached(M)


def lp_norm(field, p):
    """L^p norm of a grid field in the zonal measure sin^2(R) dR.

    p = inf returns the max of |field| over the grid.
    """
    if p < 1:
        raise ValueError(f"exponent p must be >= 1, got {p}")
    field = np.asarray(field)
    if np.isinf(p):
        return np.abs(field).max(axis=-1)
    M = field.shape[-1] + 1
    w = quadrature_weights(M)
    return (np.abs(field) ** p * w).sum(axis=-1) ** (1.0 / p)


def sobolev_norm(coeffs, s):
    """H^s norm sqrt(sum n^(2s) |c_n|^2)."""
    coeffs = np.asarray(coeffs)
    n = np.arange(1, coeffs.shape[-1] + 1, dtype=float)
    return np.sqrt((n ** (2.0 * s) * np.abs(coeffs) ** 2).sum(axis=-1))


def wsp_norm(coeffs, s, p, M):
    """W^{s,p} norm: L^p norm of the synthesised field of n^s c_n."""
    return lp_norm(synthesize(h_power(coeffs, s), M), p)
