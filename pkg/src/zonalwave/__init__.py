"""Spectral simulation and statistical verification toolkit for the radial
cubic-to-subquartic nonlinear wave equation, realised through its conformal
compactification onto the 3-sphere.

Subpackages:

* ``spectral``     zonal eigenbasis, transforms, multipliers, norms
* ``penrose``      compactified chart, time-zero data map, radial norms
* ``measures``     seeded Gaussian ensemble and Gibbs reweighting
* ``dynamics``     truncated Hamiltonian flow, Picard solver, scattering data
* ``diagnostics``  ensemble scans and power-law fits
* ``verification`` acceptance criteria as callable checks
* ``cli``          command-line experiments and reports
"""

__version__ = "0.1.0"

from . import accel, diagnostics, dynamics, measures, penrose, spectral  # noqa: F401
