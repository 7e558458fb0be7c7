"""Embedded-gradient machinery on SO(n): multipliers, criticality, restricted Hessian."""

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from . import _numerics
from .energy import ambient_hessian_form, as_rotation, energy_gradient
from .matlin import as_square, fro, skew, symmetric_eigen


class CriticalityCheck(NamedTuple):
    critical: bool
    residual: float


class SquareRootCheck(NamedTuple):
    critical: bool
    rotation: object  # ndarray or None
    root_residual: float
    bracket_residual: float


@dataclass(frozen=True)
class TangentBasis:
    base_point: np.ndarray
    directions: tuple
    pairs: tuple

    def __len__(self):
        return len(self.directions)


@dataclass(frozen=True)
class RestrictedHessian:
    matrix: np.ndarray
    spectrum: np.ndarray
    basis: TangentBasis


def sigma_matrix(R, grad):
    """Multiplier matrix 1/2 (grad^T R + R^T grad)."""
    R = np.asarray(R, dtype=float)
    grad = np.asarray(grad, dtype=float)
    return 0.5 * (grad.T @ R + R.T @ grad)


def embedded_gradient(R, grad):
    """Tangential part grad - R Sigma(R) of an ambient gradient at ``R``."""
    R = np.asarray(R, dtype=float)
    return np.asarray(grad, dtype=float) - R @ sigma_matrix(R, grad)


def energy_embedded_gradient(R, F, p):
    """Embedded gradient of the energy, R [(mu - mu_c) skew(E^2) - 2 mu_c skew(E)], E = R^T F - I.

    Algebraically equal to ``embedded_gradient(R, energy_gradient(R, F, p))`` but free of
    the O(1) cancellation in G - R Sigma, so it stays accurate near degenerate minima.
    """
    R = np.asarray(R, dtype=float)
    F = np.asarray(F, dtype=float)
    E = R.T @ F - np.eye(F.shape[0])
    return R @ ((p.mu - p.mu_c) * skew(E @ E) - 2.0 * p.mu_c * skew(E))


def criticality_residual(R, F, p):
    R = np.asarray(R, dtype=float)
    F = np.asarray(F, dtype=float)
    FRt = F @ R.T
    RFt = R @ F.T
    M = (p.mu - p.mu_c) * (FRt @ FRt - RFt @ RFt) - 2.0 * p.mu * (FRt - RFt)
    return fro(M)


def is_critical(R, F, p, tol=None):
    """Test (mu - mu_c)(F R^T F R^T - R F^T R F^T) = 2 mu (F R^T - R F^T)."""
    tol = _numerics.CRITICAL_TOL if tol is None else tol
    res = criticality_residual(as_rotation(R), as_square(F), p)
    return CriticalityCheck(res <= tol, res)


def grioli_is_critical(R, F, tol=None):
    """Criticality for mu == mu_c: F R^T symmetric."""
    tol = _numerics.CRITICAL_TOL if tol is None else tol
    R = as_rotation(R)
    F = as_square(F)
    res = fro(F @ R.T - R @ F.T)
    return CriticalityCheck(res <= tol, res)


def critical_from_square_root(X, F, p, tol=None):
    """Check whether ``R = X^T F^{-T}`` is critical via the square-root characterisation.

    Requires X X^T = F F^T and
    (X - X^T)((mu - mu_c)(X + X^T) - 2 mu I) = (mu - mu_c)[X, X^T].
    The returned rotation is ``None`` unless both identities hold and det X > 0.
    """
    tol = _numerics.CRITICAL_TOL if tol is None else tol
    X = as_square(X)
    F = as_square(F)
    n = F.shape[0]
    scale = max(1.0, fro(F) ** 2)
    root_res = fro(X @ X.T - F @ F.T) / scale
    lhs = (X - X.T) @ ((p.mu - p.mu_c) * (X + X.T) - 2.0 * p.mu * np.eye(n))
    rhs = (p.mu - p.mu_c) * (X @ X.T - X.T @ X)
    bracket_res = fro(lhs - rhs)
    if root_res > tol or bracket_res > tol or not np.linalg.det(X) > 0:
        return SquareRootCheck(False, None, root_res, bracket_res)
    R = X.T @ np.linalg.inv(F.T)
    check = is_critical(R, F, p, tol)
    if not check.critical:
        raise AssertionError(
            f"square-root criterion holds but criticality residual is {check.residual:.3e}"
        )
    return SquareRootCheck(True, R, root_res, bracket_res)


def skew_basis(n):
    """Orthonormal basis (E_ij - E_ji)/sqrt(2), i < j, of the skew matrices."""
    out = []
    for i, j in combinations(range(n), 2):
        A = np.zeros((n, n))
        A[i, j] = 1.0
        A[j, i] = -1.0
        out.append(A / np.sqrt(2.0))
    return out


def tangent_basis(R):
    R = as_rotation(R)
    n = R.shape[0]
    dirs = tuple(R @ A for A in skew_basis(n))
    return TangentBasis(R, dirs, tuple(combinations(range(n), 2)))


def restricted_hessian(R, F, p):
    """Riemannian Hessian of the energy at ``R`` in the orthonormal tangent basis.

    Entry (j, k) is the ambient second derivative along (U_j, U_k) minus the
    constraint curvature term tr(U_j Sigma U_k^T).
    """
    basis = tangent_basis(R)
    R = basis.base_point
    F = as_square(F)
    Sigma = sigma_matrix(R, energy_gradient(R, F, p))
    dirs = basis.directions
    d = len(dirs)
    H = np.empty((d, d))
    for j in range(d):
        for k in range(j, d):
            U, V = dirs[j], dirs[k]
            H[j, k] = ambient_hessian_form(R, F, p, U, V) - float(np.trace(U @ Sigma @ V.T))
            H[k, j] = H[j, k]
    spectrum = symmetric_eigen(H).eigenvalues[::-1].copy()
    return RestrictedHessian(H, spectrum, basis)


def default_zero_tol(spectrum):
    spectrum = np.asarray(spectrum, dtype=float)
    return _numerics.ZERO_RTOL * (1.0 + float(np.max(np.abs(spectrum))))


def classify(spectrum, zero_tol=None):
    """Second-order label from a Hessian spectrum: min, max, saddle or degenerate."""
    spectrum = np.asarray(spectrum, dtype=float)
    if zero_tol is None:
        zero_tol = default_zero_tol(spectrum)
    if np.any(np.abs(spectrum) <= zero_tol):
        return "degenerate"
    if np.all(spectrum > 0):
        return "min"
    if np.all(spectrum < 0):
        return "max"
    return "saddle"


def is_tangent(R, U, tol=1e-10):
    R = np.asarray(R, dtype=float)
    return fro(R.T @ U + (R.T @ U).T) <= tol
