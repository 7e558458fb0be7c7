"""Cosserat shear-stretch energy on SO(n), its derivatives, and the parameter reduction.

The energy of a rotation ``R`` for a deformation gradient ``F`` is

    W(R; F) = mu * ||sym(R^T F - I)||^2 + mu_c * ||skew(R^T F - I)||^2

Off the rotation group it is extended by the polynomial

    (mu - mu_c)/2 tr(F^T X F^T X) - 2 mu tr(F^T X) + (mu + mu_c)/2 tr(F^T F) + mu n

which agrees with W on SO(n); gradient and ambient Hessian refer to this extension.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _numerics
from .matlin import as_square, det, fro, polar_decompose, skew, sym, symmetric_eigen

LABELS = ("min", "max", "saddle", "degenerate")

MU_GT_MUC = "mu_gt_muc"
GRIOLI = "grioli"
MU_LT_MUC = "mu_lt_muc"


class NotARotationError(ValueError):
    """Matrix is not in SO(n) within tolerance."""

    def __init__(self, orthogonality, determinant, tol):
        super().__init__(
            f"not a rotation: ||R^T R - I||_F = {orthogonality:.3e}, det R = {determinant:.17g} "
            f"(tolerance {tol:.1e})"
        )
        self.orthogonality = orthogonality
        self.determinant = determinant


@dataclass(frozen=True)
class MaterialParams:
    mu: float
    mu_c: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not (np.isfinite(self.mu_c) and self.mu_c >= 0):
            raise ValueError(f"mu_c must be >= 0, got {self.mu_c}")

    @property
    def regime(self):
        if self.mu > self.mu_c:
            return MU_GT_MUC
        if self.mu < self.mu_c:
            return MU_LT_MUC
        return GRIOLI

    @property
    def scale(self):
        """The factor (mu - mu_c) / mu mapping F to the reduced deformation gradient."""
        return (self.mu - self.mu_c) / self.mu


UNIT = MaterialParams(1.0, 0.0)


def deformation_gradient(F):
    """Validate a deformation gradient (square, finite, det > 0)."""
    F = as_square(F)
    d = det(F)
    if not d > 0:
        raise ValueError(f"deformation gradient must have det F > 0, got {d:.17g}")
    return F


def rotation_residuals(R):
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    return fro(R.T @ R - np.eye(n)), float(np.linalg.det(R))


def as_rotation(R, tol=None):
    """Return ``R`` as an array after checking it lies in SO(n)."""
    tol = _numerics.ROTATION_TOL if tol is None else tol
    R = as_square(R)
    orth, d = rotation_residuals(R)
    if orth > tol or abs(d - 1.0) > tol:
        raise NotARotationError(orth, d, tol)
    return R


def _check_dims(R, F):
    if R.shape != F.shape:
        raise ValueError(f"dimension mismatch: R is {R.shape}, F is {F.shape}")


def energy(R, F, p):
    """Energy W(R; F) for a rotation ``R``; always non-negative."""
    R = as_rotation(R)
    F = as_square(F)
    _check_dims(R, F)
    M = R.T @ F - np.eye(F.shape[0])
    return p.mu * float(np.sum(sym(M) ** 2)) + p.mu_c * float(np.sum(skew(M) ** 2))


def ambient_energy(X, F, p):
    """Polynomial extension of the energy to arbitrary square ``X``."""
    X = np.asarray(X, dtype=float)
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    FtX = F.T @ X
    return (
        0.5 * (p.mu - p.mu_c) * float(np.trace(FtX @ FtX))
        - 2.0 * p.mu * float(np.trace(FtX))
        + 0.5 * (p.mu + p.mu_c) * float(np.sum(F * F))
        + p.mu * n
    )


def energy_difference(R0, R1, F, p):
    """W(R1) - W(R0) for nearby rotations, evaluated from the increment R1 - R0.

    Uses the Lagrangian L(X) = ext(X) - 1/2 <Sigma, X^T X - I> with the multiplier
    Sigma frozen at R0. L equals W on SO(n) and its gradient at R0 is tangent, so
    orthogonality roundoff of the iterates enters only at second order. The plain
    difference of two energy values loses everything below roundoff of W itself.
    """
    R0 = np.asarray(R0, dtype=float)
    F = np.asarray(F, dtype=float)
    D = np.asarray(R1, dtype=float) - R0
    A = F.T @ R0
    B = F.T @ D
    G = (p.mu - p.mu_c) * (F @ R0.T @ F) - 2.0 * p.mu * F
    Sigma = sym(R0.T @ G)
    d_ext = (p.mu - p.mu_c) * (float(np.sum(A * B.T)) + 0.5 * float(np.sum(B * B.T))) - 2.0 * p.mu * float(
        np.trace(B)
    )
    # first-order part <G, D> - <R0 Sigma, D> = <dW, D>, collected explicitly
    return d_ext - float(np.sum(Sigma * (R0.T @ D))) - 0.5 * float(np.sum(Sigma * (D.T @ D)))


def energy_gradient(R, F, p):
    """Euclidean gradient (mu - mu_c) F R^T F - 2 mu F of the polynomial extension."""
    R = np.asarray(R, dtype=float)
    F = np.asarray(F, dtype=float)
    _check_dims(R, F)
    return (p.mu - p.mu_c) * (F @ R.T @ F) - 2.0 * p.mu * F


def ambient_hessian_form(R, F, p, U, V):
    """Second derivative of the extension: (U, V) -> (mu - mu_c) tr(F^T U F^T V).

    Constant in ``R``; the argument is kept for a uniform call signature.
    """
    F = np.asarray(F, dtype=float)
    return (p.mu - p.mu_c) * float(np.trace(F.T @ U @ F.T @ V))


def classification_transfer(label, p):
    """Map a label of the reduced problem to the original one (and back).

    For mu > mu_c labels agree; for mu < mu_c the sign of the energy scale flips,
    exchanging minima and maxima.
    """
    if label not in LABELS:
        raise ValueError(f"unknown label {label!r}")
    if p.regime == GRIOLI:
        raise ValueError("no classification transfer in the mu == mu_c (Grioli) regime")
    if p.regime == MU_GT_MUC:
        return label
    return {"min": "max", "max": "min"}.get(label, label)


@dataclass(frozen=True)
class ReducedProblem:
    """Singular values of the reduced deformation gradient and the coordinate changes.

    ``rotation_part`` and ``basis_change`` are the rotations R_hat, Q with
    F_hat = R_hat Q^T diag(lambdas) Q. They are ``None`` in the Grioli regime and
    when det F_hat < 0 (mu < mu_c in odd dimension), where no such factorisation
    over SO(n) exists.
    """

    n: int
    regime: str
    params: MaterialParams
    lambdas: Optional[np.ndarray]
    rotation_part: Optional[np.ndarray]
    basis_change: Optional[np.ndarray]
    det_F: float

    @property
    def F_hat_positive(self):
        return self.rotation_part is not None

    def coincidences(self, rtol=None):
        """Booleans (l1 == l2, l2 == l3, ...) at relative tolerance ``rtol``."""
        return coincidence_pattern(self.lambdas, rtol)

    def product_identity_residual(self):
        """Relative residual of prod(lambdas) = |scale|^n det F."""
        target = abs(self.params.scale) ** self.n * self.det_F
        return abs(float(np.prod(self.lambdas)) - target) / abs(target)

    def to_reduced_rotation(self, R):
        """R_bar = Q R_hat^T R Q^T, the rotation seen by the diagonal problem."""
        Q = self.basis_change
        return Q @ self.rotation_part.T @ R @ Q.T

    def from_reduced_rotation(self, R_bar):
        Q = self.basis_change
        return self.rotation_part @ Q.T @ R_bar @ Q


def coincidence_pattern(lambdas, rtol=None):
    rtol = _numerics.COINCIDENT_RTOL if rtol is None else rtol
    lam = np.asarray(lambdas, dtype=float)
    return tuple(
        bool(abs(lam[i] - lam[i + 1]) <= rtol * max(abs(lam[i]), abs(lam[i + 1])))
        for i in range(len(lam) - 1)
    )


def reduce(F, p):
    """Reduce (F, mu, mu_c) to the diagonal unit-modulus problem."""
    F = deformation_gradient(F)
    n = F.shape[0]
    detF = det(F)
    if p.regime == GRIOLI:
        return ReducedProblem(n, GRIOLI, p, None, None, None, detF)
    F_hat = p.scale * F
    if det(F_hat) > 0:
        R_hat, S = polar_decompose(F_hat)
        eig = symmetric_eigen(S)
        V = eig.eigenvectors.copy()
        if np.linalg.det(V) < 0:
            V[:, -1] = -V[:, -1]
        lambdas = eig.eigenvalues
        return ReducedProblem(n, p.regime, p, lambdas, R_hat, V.T, detF)
    lambdas = np.sqrt(np.clip(symmetric_eigen(F_hat.T @ F_hat).eigenvalues, 0.0, None))
    return ReducedProblem(n, p.regime, p, lambdas, None, None, detF)


def reduction_constant(F, p, R=None):
    """Additive constant c with W_{mu,mu_c}(R; F) = mu^2/(mu - mu_c) W_{1,0}(R; F_hat) + c.

    Evaluated numerically as the difference of both sides at one rotation.
    """
    F = as_square(F)
    if p.regime == GRIOLI:
        raise ValueError("no reduction in the mu == mu_c (Grioli) regime")
    if R is None:
        R = np.eye(F.shape[0])
    F_hat = p.scale * F
    return energy(R, F, p) - p.mu**2 / (p.mu - p.mu_c) * energy(R, F_hat, UNIT)
