"""Gaussian ensemble on the zonal modes and its Gibbs reweighting.

Sampling contract (bit-exact, platform independent)
---------------------------------------------------
The stream for ``(master_seed, sample_index)`` is generated by the
counter-based Philox4x64 bit generator keyed with the 128-bit key
``[master_seed, sample_index]`` (two uint64 words).  The first ``2N`` doubles
of ``Generator.random`` — documented by numpy as ``(next_uint64 >> 11) *
2**-53`` — are shifted by ``2**-54`` into the open interval (0, 1) and mapped
through the inverse normal CDF (``scipy.special.ndtri``).  Even-indexed
draws become real parts, odd-indexed draws imaginary parts:

    g_n = (ndtri(u[2n-2]) + i * ndtri(u[2n-1])) / sqrt(2)

so ``E|g_n|^2 = 1`` with independent real/imaginary parts of variance 1/2.
The spectral coefficients are ``c_n = sqrt(2) g_n / n``, matching the
Gaussian density with exponent n^2/2 per real component.  Distinct sample
indices give independent streams; replaying a pair reproduces the sample
bit for bit.

The normalising constant of the Gaussian density is intentionally never
computed: sampling and the Gibbs weight only need the unnormalised form.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import penrose, spectral


@dataclass(frozen=True)
class RngStreamSpec:
    """Address of one deterministic sample stream."""

    master_seed: int
    sample_index: int = 0

    def generator(self):
        key = np.array(
            [self.master_seed % (1 << 64), self.sample_index % (1 << 64)],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GaussianSample:
    """One draw: complex amplitudes g, coefficients u, real component views h, l.

    ``u`` are the coefficients c_n = sqrt(2) g_n / n; ``h_n = sqrt(2) Re g_n``
    are the coefficients of Re u against e_n/n, and ``l_n = -sqrt(2) Im g_n``
    those of the conjugate momentum -H Im u against e_n.
    """

    g: np.ndarray
    u: np.ndarray
    h: np.ndarray
    l: np.ndarray


def sample_mu(stream, N):
    """Draw the Gaussian sample with N modes addressed by ``stream``."""
    if N < 1:
        raise ValueError(f"mode count must be >= 1, got {N}")
    gen = stream.generator()
    uniforms = gen.random(2 * N) + 2.0**-54
    normals = ndtri(uniforms)
    g = (normals[0::2] + 1j * normals[1::2]) / np.sqrt(2.0)
    n = np.arange(1, N + 1)
    u = np.sqrt(2.0) * g / n
    return GaussianSample(g=g, u=u, h=np.sqrt(2.0) * g.real, l=-np.sqrt(2.0) * g.imag)


def sample_coeff_block(master_seed, start_index, count, N):
    """Coefficient rows for sample indices [start, start+count), shape (count, N)."""
    out = np.empty((count, N), dtype=complex)
    for k in range(count):
        out[k] = sample_mu(RngStreamSpec(master_seed, start_index + k), N).u
    return out


def potential_integral(u, alpha, M, truncate_N=None):
    """int Omega(0,R)^(alpha-2) |w|^(alpha+2) sin^2 R dR with w = Re u or S_N Re u.

    Omega at cylinder time zero is 1 + cos R.
    """
    u = np.asarray(u)
    w_hat = np.real(u)
    if truncate_N is not None:
        w_hat = spectral.smooth_cutoff(w_hat, truncate_N)
    w = spectral.synthesize(w_hat, M)
    omega0 = 1.0 + np.cos(spectral.grid(M))
    integrand = omega0 ** (alpha - 2.0) * np.abs(w) ** (alpha + 2.0)
    return (integrand * spectral.quadrature_weights(M)).sum(axis=-1)


def density_weight(u, alpha, M, truncate_N=None):
    """Gibbs weight exp(-potential/(alpha+2)) in (0, 1]."""
    if not 2.0 <= alpha < 3.0:
        raise ValueError(f"alpha must lie in [2, 3), got {alpha}")
    return np.exp(-potential_integral(u, alpha, M, truncate_N) / (alpha + 2.0))


def rho_mass_estimate(seed, N, alpha, samples, M=None, block=512):
    """Monte Carlo mean and standard error of the truncated Gibbs weight.

    The weight uses S_N Re u, i.e. the finite-dimensional measure's density.
    Samples are consumed in index order in fixed-size blocks, so the result
    is independent of any outer parallel scheduling.
    """
    if samples < 1:
        raise ValueError("sample count must be positive")
    if M is None:
        M = 4 * N
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        b = min(block, samples - done)
        coeffs = sample_coeff_block(seed, done, b, N)
        w = density_weight(coeffs, alpha, M, truncate_N=N)
        total += w.sum()
        total_sq += (w**2).sum()
        done += b
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    stderr = np.sqrt(var / samples)
    return mean, stderr


def potential_mean_estimate(seed, N, alpha, samples, M=None, block=512):
    """Monte Carlo mean/stderr of the potential integral itself (finiteness check)."""
    if M is None:
        M = 4 * N
    vals = np.empty(samples)
    done = 0
    while done < samples:
        b = min(block, samples - done)
        coeffs = sample_coeff_block(seed, done, b, N)
        vals[done : done + b] = potential_integral(coeffs, alpha, M, truncate_N=N)
        done += b
    return vals.mean(), vals.std(ddof=1) / np.sqrt(samples)


@dataclass(frozen=True)
class TailEstimate:
    """Empirical exceedance curve of a truncation-difference norm."""

    lambda_grid: np.ndarray
    prob: np.ndarray
    ci: np.ndarray
    fit_slope: float
    fit_intercept: float
    fit_r_squared: float
    fit_mask: np.ndarray


def tail_admissible(s, p):
    """Regularity admissibility for the sub-Gaussian tail bound."""
    if p <= 3:
        return s < 0.5
    return s < 3.0 / p - 0.5


def tail_probability(seed, N, N0, s, p, lambda_grid, samples, M=None, block=2048):
    """Empirical tails of ||S_N u - S_N0 u||_{W^{s,p}} under the Gaussian ensemble.

    Returns exceedance probabilities with 95% binomial half-widths and a
    linear fit of log(prob) against lambda^2 restricted to the resolved tail
    region (exceedance counts in [50, samples/10]).
    """
    if not (N >= N0 >= 1):
        raise ValueError("need N >= N0 >= 1")
    if p < 2:
        raise ValueError("tail exponent p must be >= 2")
    if not tail_admissible(s, p):
        raise ValueError(f"(s, p) = ({s}, {p}) not admissible: need s < 1/2 for p <= 3, s < 3/p - 1/2 otherwise")
    if M is None:
        M = 4 * N
    lam = np.asarray(lambda_grid, dtype=float)
    diff_weights = spectral.smooth_cutoff_weights(N, N) - spectral.smooth_cutoff_weights(N0, N)
    norms = np.empty(samples)
    done = 0
    while done < samples:
        b = min(block, samples - done)
        coeffs = sample_coeff_block(seed, done, b, N) * diff_weights
        norms[done : done + b] = spectral.wsp_norm(coeffs, s, p, M)
        done += b
    counts = (norms[None, :] > lam[:, None]).sum(axis=1)
    prob = counts / samples
    ci = 1.96 * np.sqrt(np.maximum(prob * (1.0 - prob), 0.0) / samples)
    mask = (counts >= 50) & (counts <= samples // 10)
    if mask.sum() >= 3:
        x = lam[mask] ** 2
        y = np.log(prob[mask])
        design = np.vstack([x, np.ones_like(x)]).T
        coef, residual, *_ = np.linalg.lstsq(design, y, rcond=None)
        ss_tot = ((y - y.mean()) ** 2).sum()
        r2 = 1.0 - float(residual[0]) / ss_tot if ss_tot > 0 and residual.size else 0.0
        slope, intercept = float(coef[0]), float(coef[1])
    else:
        slope, intercept, r2 = np.nan, np.nan, np.nan
    return TailEstimate(
        lambda_grid=lam,
        prob=prob,
        ci=ci,
        fit_slope=slope,
        fit_intercept=intercept,
        fit_r_squared=r2,
        fit_mask=mask,
    )


def moment_growth(c, q_grid, samples, seed=0):
    """Moment ratios ||sum g_n c_n||_{L^q} / sqrt(q sum |c_n|^2) for each q.

    The scalar sum of independent complex Gaussians is simulated with the
    same keyed streams as sample_mu; a zero coefficient vector returns zeros.
    """
    c = np.asarray(c, dtype=complex)
    q_grid = np.asarray(q_grid, dtype=float)
    if np.any(q_grid < 2):
        raise ValueError("moment exponents must be >= 2")
    scale = np.sqrt((np.abs(c) ** 2).sum())
    if scale == 0.0:
        return np.zeros_like(q_grid)
    N = c.size
    z = np.empty(samples, dtype=complex)
    for k in range(samples):
        z[k] = (sample_mu(RngStreamSpec(seed, k), N).g * c).sum()
    az = np.abs(z)
    ratios = np.empty_like(q_grid)
    for i, q in enumerate(q_grid):
        ratios[i] = (az**q).mean() ** (1.0 / q) / (np.sqrt(q) * scale)
    return ratios


def gaussian_abs_moment(q):
    """Exact E|Z|^q for a standard complex Gaussian (E|Z|^2 = 1)."""
    from scipy.special import gamma

    return gamma(q / 2.0 + 1.0)


def f0_initial_pair(stream, N, r_grid):
    """Draw one sample and return (sample, f0, f1) on the radial grid."""
    smp = sample_mu(stream, N)
    f0, f1 = penrose.pt_initial_data(smp.u, r_grid)
    return smp, f0, f1
