"""Shared numerical tolerances.

All values are plain module attributes so callers (and the CLI) can override
them in one place, e.g. ``cosserat_critic._numerics.SYMMETRY_RTOL = 1e-9``.
"""

# relative asymmetry accepted by the symmetric eigensolver
SYMMETRY_RTOL = 1e-10

# orthogonality / determinant slack for something to count as a rotation
ROTATION_TOL = 1e-8

# unit-norm slack for quaternions
QUATERNION_TOL = 1e-8

# relative gap under which two singular values are treated as equal
COINCIDENT_RTOL = 1e-9

# slack on strict-inequality existence gates (lambda_i +- lambda_j vs 2)
GATE_TOL = 1e-9

# default residual bound for criticality tests
CRITICAL_TOL = 1e-9

# classification: eigenvalues with |ev| <= ZERO_RTOL * (1 + max|ev|) count as zero
ZERO_RTOL = 1e-7
