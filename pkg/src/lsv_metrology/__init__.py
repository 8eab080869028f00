"""Lsv_metrology module.

Precision bounds for estimating a Lorentz-symmetry-violation coupling kappa
that enters as kappa * sum_i (j_z^(i))^2, for entangled probe states of
spin-1 (and higher spin) ensembles.

Key concepts:
- Fock basis: occupations (n+, n0, n-) of the three spin-1 modes
- Generator H: sum of squared single-particle j_z, diagonal in the Fock basis
- QFI / QCRB: quantum Fisher information and the Cramer-Rao bound derived from it
"""

# SPDX-License-Identifier: Apache-2.0

__version__ = "1.0.0"

NORM_TOL = 1e-10  # Allowed drift of a state norm after any operation
NORMALIZED_INPUT_TOL = 1e-12  # Amplitude inputs must be normalized to this precision
HERMITIAN_TOL = 1e-12  # Max. entry of A - A^dagger for an operator to count as Hermitian
EXPECTATION_IMAG_TOL = 1e-10  # Max. imaginary residue of an expectation value
VARIANCE_CLAMP_TOL = 1e-10  # Negative variances above -tol are clamped to 0
MOMENT_VARIANCE_CLAMP_TOL = 1e-8  # Same for the variance of Jx^2 in moment scans

ROTATION_TOL = 1e-12  # Default truncation error for exp(-i angle J) |psi>
EXPM_ROUNDOFF_FACTOR = 1024  # Norm drift allowance of a matrix exponential, in units of eps * (1 + |angle| ||A||_1)

FD_STEP = 1e-5  # Central finite difference step, scaled by max(1, kt)
DERIVATIVE_CROSSCHECK_RTOL = 1e-6  # Finite difference vs. commutator derivative
SLOPE_FLOOR = 1e-9  # Slopes below SLOPE_FLOOR * max(1, |<A>|) count as vanishing
MIN_MOMENT_GRID_POINTS = 64  # Recommended operating-point grid size

FIT_MIN_POINTS = 3  # Power law fits need at least this many points
FIG1_DEFAULTS = (2, 10_000, 40)  # n_min, n_max, points of the QCRB curve
FIG2_DEFAULTS = (10, 1_000, 25)  # n_min, n_max, points of the QFI scaling fit

CSV_FLOAT_FORMAT = ".17g"  # Round-trip exact for doubles
