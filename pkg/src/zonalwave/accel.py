"""Hot numeric kernels with optional numba acceleration.

Every kernel has a pure-numpy implementation; when numba is importable the
jitted variant is bound to the public name instead.  Set the environment
variable ``ZONALWAVE_NO_NUMBA=1`` before import to force the numpy path
(useful for debugging and for the kernel benchmark).

The kernels cover the two loops that dominate ensemble runtime:

* partial sums of sine series ``sum_n c_n sin(n*theta)`` on arbitrary point
  sets, evaluated by the Chebyshev two-term recurrence (uniform-grid
  transforms go through ``scipy.fft`` instead, which a jitted loop cannot
  beat),
* the pointwise power nonlinearity on the collocation grid.
"""

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("ZONALWAVE_NO_NUMBA", "").lower() in ("1", "true", "yes")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by ZONALWAVE_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def sine_block_sum_numpy(coeffs, theta, n_start=1):
    """Evaluate ``sum_j coeffs[j] * sin((n_start + j) * theta)`` pointwise.

    Uses the recurrence sin((n+1)t) = 2 cos(t) sin(nt) - sin((n-1)t),
    vectorised over the evaluation points, looping over modes.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    out = np.zeros_like(theta)
    if coeffs.size == 0:
        return out
    two_cos = 2.0 * np.cos(theta)
    s_prev = np.sin((n_start - 1) * theta)
    s_cur = np.sin(n_start * theta)
    for j in range(coeffs.size):
        out += coeffs[j] * s_cur
        s_prev, s_cur = s_cur, two_cos * s_cur - s_prev
    return out


def sine_block_sum_batch_numpy(coeffs, theta, n_start=1):
    """Batched variant: ``coeffs`` has shape (B, J), output (B, len(theta))."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    nbatch, nmode = coeffs.shape
    out = np.zeros((nbatch, theta.size))
    two_cos = 2.0 * np.cos(theta)
    s_prev = np.sin((n_start - 1) * theta)
    s_cur = np.sin(n_start * theta)
    for j in range(nmode):
        out += np.outer(coeffs[:, j], s_cur)
        s_prev, s_cur = s_cur, two_cos * s_cur - s_prev
    return out


def sine_rows_sum_numpy(coeffs, theta):
    """Per-point coefficient rows: ``out[i] = sum_n coeffs[i, n-1] sin(n*theta[i])``."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    npts, nmode = coeffs.shape
    out = np.zeros(npts)
    two_cos = 2.0 * np.cos(theta)
    s_prev = np.zeros_like(theta)
    s_cur = np.sin(theta)
    for j in range(nmode):
        out += coeffs[:, j] * s_cur
        s_prev, s_cur = s_cur, two_cos * s_cur - s_prev
    return out


def power_nonlinearity_numpy(w, omega, alpha):
    """Pointwise ``omega**(alpha-2) * |w|**alpha * w`` with ``0**0 == 1``."""
    return omega ** (alpha - 2.0) * np.abs(w) ** alpha * w


if HAS_NUMBA:

    @njit(cache=True)
    def _sine_block_sum_nb(coeffs, theta, n_start):
        npts = theta.size
        nmode = coeffs.size
        out = np.zeros(npts)
        for i in range(npts):
            t = theta[i]
            two_cos = 2.0 * np.cos(t)
            s_prev = np.sin((n_start - 1) * t)
            s_cur = np.sin(n_start * t)
            acc = 0.0
            for j in range(nmode):
                acc += coeffs[j] * s_cur
                s_next = two_cos * s_cur - s_prev
                s_prev = s_cur
                s_cur = s_next
            out[i] = acc
        return out

    @njit(cache=True)
    def _sine_block_sum_batch_nb(coeffs, theta, n_start):
        nbatch, nmode = coeffs.shape
        npts = theta.size
        out = np.zeros((nbatch, npts))
        for i in range(npts):
            t = theta[i]
            two_cos = 2.0 * np.cos(t)
            s_prev = np.sin((n_start - 1) * t)
            s_cur = np.sin(n_start * t)
            for j in range(nmode):
                sj = s_cur
                for b in range(nbatch):
                    out[b, i] += coeffs[b, j] * sj
                s_next = two_cos * s_cur - s_prev
                s_prev = s_cur
                s_cur = s_next
        return out

    @njit(cache=True)
    def _sine_rows_sum_nb(coeffs, theta):
        npts, nmode = coeffs.shape
        out = np.zeros(npts)
        for i in range(npts):
            t = theta[i]
            two_cos = 2.0 * np.cos(t)
            s_prev = 0.0
            s_cur = np.sin(t)
            acc = 0.0
            for j in range(nmode):
                acc += coeffs[i, j] * s_cur
                s_next = two_cos * s_cur - s_prev
                s_prev = s_cur
                s_cur = s_next
            out[i] = acc
        return out

    @njit(cache=True)
    def _power_nonlinearity_nb(w, omega, alpha):
        out = np.empty_like(w)
        for i in range(w.size):
            out[i] = omega[i] ** (alpha - 2.0) * np.abs(w[i]) ** alpha * w[i]
        return out

    def sine_block_sum(coeffs, theta, n_start=1):
        return _sine_block_sum_nb(
            np.ascontiguousarray(coeffs, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64),
            n_start,
        )

    def sine_block_sum_batch(coeffs, theta, n_start=1):
        return _sine_block_sum_batch_nb(
            np.ascontiguousarray(coeffs, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64),
            n_start,
        )

    def sine_rows_sum(coeffs, theta):
        return _sine_rows_sum_nb(
            np.ascontiguousarray(coeffs, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64),
        )

    # below this size the jit wrapper's marshalling costs more than it saves
    _POWER_JIT_MIN_SIZE = 4096

    def power_nonlinearity(w, omega, alpha):
        if w.size < _POWER_JIT_MIN_SIZE:
            return power_nonlinearity_numpy(w, omega, alpha)
        shape = w.shape
        out = _power_nonlinearity_nb(
            np.ascontiguousarray(w, dtype=np.float64).ravel(),
            np.ascontiguousarray(np.broadcast_to(omega, shape), dtype=np.float64).ravel(),
            float(alpha),
        )
        return out.reshape(shape)

    sine_block_sum.__doc__ = sine_block_sum_numpy.__doc__
    sine_block_sum_batch.__doc__ = sine_block_sum_batch_numpy.__doc__
    sine_rows_sum.__doc__ = sine_rows_sum_numpy.__doc__
    power_nonlinearity.__doc__ = power_nonlinearity_numpy.__doc__
else:
    sine_block_sum = sine_block_sum_numpy
    sine_block_sum_batch = sine_block_sum_batch_numpy
    sine_rows_sum = sine_rows_sum_numpy
    power_nonlinearity = power_nonlinearity_numpy
