"""Small dense linear algebra: Jacobi eigensolver, SPD square root, polar decomposition."""

from dataclasses import dataclass

import numpy as np

from . import _numerics


class NotSymmetricError(ValueError):
    """Input matrix is not symmetric within the configured tolerance."""

    def __init__(self, asymmetry, limit):
        super().__init__(
            f"matrix is not symmetric: ||S - S^T||_F = {asymmetry:.3e} exceeds {limit:.3e}"
        )
        self.asymmetry = asymmetry


class NotPositiveDefiniteError(ValueError):
    """Symmetric matrix has an eigenvalue at or below the acceptance threshold."""

    def __init__(self, eigenvalue, threshold):
        super().__init__(
            f"matrix is not positive definite: eigenvalue {eigenvalue:.17g} <= {threshold:.3e}"
        )
        self.eigenvalue = eigenvalue


class SingularMatrixError(ValueError):
    """Matrix has non-positive determinant where a positive one is required."""


@dataclass(frozen=True)
class SymmetricEigen:
    """Eigenvalues (decreasing) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def as_square(M):
    """Return ``M`` as a finite float array of shape (n, n)."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def fro(M):
    return float(np.sqrt(np.sum(np.square(M))))


def det(M):
    return float(np.linalg.det(as_square(M)))


def sym(M):
    return 0.5 * (M + M.T)


def skew(M):
    return 0.5 * (M - M.T)


def _jacobi(A, max_sweeps=100):
    """Cyclic Jacobi iteration; returns (diagonal, accumulated rotations)."""
    A = A.copy()
    n = A.shape[0]
    V = np.eye(n)
    scale = fro(A)
    if scale == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = fro(A - np.diag(np.diag(A)))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-20 * scale:
                    # negligible coupling: drop it instead of rotating by ~0
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) plane rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def _canonical_order(d, V):
    n = len(d)
    for k in range(n):
        v = V[:, k]
        nz = np.flatnonzero(np.abs(v) > 1e-14)
        if nz.size and v[nz[0]] < 0:
            V[:, k] = -v
    tie = 1e-12 * (1.0 + float(np.max(np.abs(d)))) if n else 0.0
    order = sorted(range(n), key=lambda k: -d[k])
    # within runs of tied eigenvalues, order eigenvectors lexicographically (largest first)
    # values stay sorted; only the vectors of a tied run are reordered
    out = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and d[order[j - 1]] - d[order[j]] <= tie:
            j += 1
        run = sorted(order[i:j], key=lambda k: tuple(V[:, k]), reverse=True)
        out.extend(run)
        i = j
    return d[order], V[:, out]


def symmetric_eigen(S):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back sorted in decreasing order. Each eigenvector has its
    first nonzero component positive, and eigenvectors sharing an eigenvalue are
    ordered lexicographically, so identical inputs always give identical output.
    """
    S = as_square(S)
    asym = fro(S - S.T)
    limit = _numerics.SYMMETRY_RTOL * max(1.0, fro(S))
    if asym > limit:
        raise NotSymmetricError(asym, limit)
    d, V = _jacobi(sym(S))
    d, V = _canonical_order(d, V)
    return SymmetricEigen(eigenvalues=d, eigenvectors=V)


def _spd_eigen(S):
    eig = symmetric_eigen(S)
    d = eig.eigenvalues
    threshold = 1e-14 * max(1.0, float(np.max(np.abs(d))))
    if d[-1] <= threshold:
        raise NotPositiveDefiniteError(float(d[-1]), threshold)
    return eig


def symmetric_sqrt(S):
    """Unique symmetric positive-definite square root of an SPD matrix."""
    eig = _spd_eigen(S)
    Q = eig.eigenvectors
    return sym((Q * np.sqrt(eig.eigenvalues)) @ Q.T)


def polar_decompose(F):
    """Right polar decomposition ``F = R @ S`` with ``R`` in SO(n), ``S`` SPD.

    Raises SingularMatrixError when ``det F <= 0``.
    """
    F = as_square(F)
    d = det(F)
    if not d > 0.0:
        raise SingularMatrixError(f"polar decomposition needs det F > 0, got {d:.17g}")
    eig = _spd_eigen(F.T @ F)
    Q = eig.eigenvectors
    root = np.sqrt(eig.eigenvalues)
    S = sym((Q * root) @ Q.T)
    R = F @ ((Q / root) @ Q.T)
    return R, S
