"""Unit-quaternion lift of the reduced energy on SO(3).

The lifted cost is G(q) = W_{1,0}(P(q); diag(lambdas)) with P the double cover
S^3 -> SO(3). Its ambient extension to R^4 uses the polynomial entries of P, so
gradient and Hessian are assembled exactly from quadratic-form coefficients.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _numerics
from .matlin import fro, symmetric_eigen


class NotUnitQuaternionError(ValueError):
    pass


def as_unit_quaternion(q, tol=None):
    tol = _numerics.QUATERNION_TOL if tol is None else tol
    q = np.array(q, dtype=float).reshape(-1)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise NotUnitQuaternionError(f"expected a finite 4-vector, got {q!r}")
    dev = abs(float(np.linalg.norm(q)) - 1.0)
    if dev > tol:
        raise NotUnitQuaternionError(f"quaternion norm deviates from 1 by {dev:.3e}")
    return q


def _P(q):
    q0, q1, q2, q3 = q
    return np.array(
        [
            [q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3, 2 * (q1 * q2 - q0 * q3), 2 * (q1 * q3 + q0 * q2)],
            [2 * (q1 * q2 + q0 * q3), q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3, 2 * (q2 * q3 - q0 * q1)],
            [2 * (q1 * q3 - q0 * q2), 2 * (q2 * q3 + q0 * q1), q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3],
        ]
    )


def quat_to_rotation(q):
    """Rotation matrix P(q) of a unit quaternion (q0, q1, q2, q3); P(q) == P(-q)."""
    return _P(as_unit_quaternion(q))


def rotation_to_quat(R):
    """One of the two unit quaternions with P(q) = R (q0 >= 0 when possible)."""
    R = np.asarray(R, dtype=float)
    # K is 4x4 symmetric with top eigenvector q (Bar-Itzhack)
    K = np.array(
        [
            [R[0, 0] + R[1, 1] + R[2, 2], R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]],
            [R[2, 1] - R[1, 2], R[0, 0] - R[1, 1] - R[2, 2], R[0, 1] + R[1, 0], R[0, 2] + R[2, 0]],
            [R[0, 2] - R[2, 0], R[0, 1] + R[1, 0], R[1, 1] - R[0, 0] - R[2, 2], R[1, 2] + R[2, 1]],
            [R[1, 0] - R[0, 1], R[0, 2] + R[2, 0], R[1, 2] + R[2, 1], R[2, 2] - R[0, 0] - R[1, 1]],
        ]
    ) / 3.0
    q = symmetric_eigen(0.5 * (K + K.T)).eigenvectors[:, 0]
    q = q / np.linalg.norm(q)
    nz = np.flatnonzero(np.abs(q) > 1e-15)
    if nz.size and q[nz[0]] < 0:
        q = -q
    return q


@lru_cache(maxsize=None)
def _p_coefficients():
    """M[i, j] (4x4 symmetric) with P(q)_ij = q^T M[i, j] q, by polarisation."""
    E = np.eye(4)
    M = np.zeros((3, 3, 4, 4))
    for a in range(4):
        for b in range(4):
            M[:, :, a, b] = (_P(E[a] + E[b]) - _P(E[a] - E[b])) / 4.0
    M.setflags(write=False)
    return M


def _n_coefficients(lambdas):
    """N[k, l] with K_kl(q) = q^T N[k, l] q - 2 delta_kl, K = P^T D + D P."""
    lam = np.asarray(lambdas, dtype=float)
    M = _p_coefficients()
    # (P^T D)_kl = lam_l P_lk,  (D P)_kl = lam_k P_kl
    return lam[None, :, None, None] * np.swapaxes(M, 0, 1) + lam[:, None, None, None] * M


def _k_values(N, q):
    return np.einsum("klab,a,b->kl", N, q, q) - 2.0 * np.eye(3)


def _check_lambdas(lambdas):
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.shape != (3,):
        raise ValueError(f"need three singular values, got {lam!r}")
    return lam


def ambient_lifted_energy(q, lambdas):
    """Degree-4 polynomial extension 1/4 ||P(q)^T D + D P(q) - 2 I||^2 on R^4."""
    N = _n_coefficients(_check_lambdas(lambdas))
    K = _k_values(N, np.asarray(q, dtype=float))
    return 0.25 * float(np.sum(K * K))


def lifted_energy(q, lambdas):
    """Reduced energy W_{1,0}(P(q); diag(lambdas)) at a unit quaternion."""
    return ambient_lifted_energy(as_unit_quaternion(q), lambdas)


def lifted_gradient(q, lambdas):
    """Euclidean gradient of the ambient lifted energy."""
    q = np.asarray(q, dtype=float)
    N = _n_coefficients(_check_lambdas(lambdas))
    K = _k_values(N, q)
    Nq = np.einsum("klab,b->kla", N, q)
    return np.einsum("kl,kla->a", K, Nq)


def lifted_hessian(q, lambdas):
    """Exact Euclidean Hessian (4x4) of the ambient lifted energy."""
    q = np.asarray(q, dtype=float)
    N = _n_coefficients(_check_lambdas(lambdas))
    K = _k_values(N, q)
    Nq = np.einsum("klab,b->kla", N, q)
    return 2.0 * np.einsum("kla,klb->ab", Nq, Nq) + np.einsum("kl,klab->ab", K, N)


def sphere_multiplier(q, lambdas):
    q = np.asarray(q, dtype=float)
    return float(lifted_gradient(q, lambdas) @ q) / float(q @ q)


def sphere_embedded_gradient(q, lambdas):
    """Projection grad - (<grad, q>/|q|^2) q of the lifted gradient onto T_q S^3."""
    q = as_unit_quaternion(q)
    return lifted_gradient(q, lambdas) - sphere_multiplier(q, lambdas) * q


@dataclass(frozen=True)
class SphereTangentBasis:
    base_point: np.ndarray
    pivot: int
    directions: np.ndarray  # 4 x 3, orthonormal columns
    raw_directions: np.ndarray  # 4 x 3, the vectors e_i - q^i q


def sphere_tangent_basis(q):
    """Tangent basis of S^3 at ``q`` from e_i - q^i q (i != pivot), Gram-Schmidt orthonormalised.

    The pivot is the index of the largest |q^j| (first one on ties).
    """
    q = as_unit_quaternion(q)
    j = int(np.argmax(np.abs(q)))
    raw = np.stack([np.eye(4)[i] - q[i] * q for i in range(4) if i != j], axis=1)
    ortho = np.zeros_like(raw)
    for k in range(3):
        v = raw[:, k].copy()
        # project out q as well so the basis is tangent to working precision
        v -= (v @ q) * q
        for m in range(k):
            v -= (v @ ortho[:, m]) * ortho[:, m]
        ortho[:, k] = v / np.linalg.norm(v)
    return SphereTangentBasis(q, j, ortho, raw)


@dataclass(frozen=True)
class SphereHessian:
    matrix: np.ndarray
    spectrum: np.ndarray
    basis: SphereTangentBasis
    ambient: np.ndarray

    def raw_basis_spectrum(self, pivot=None):
        """Eigenvalues of the form in the non-orthonormal basis {e_i - q^i q : i != pivot}.

        The default pivot is the last nonzero component of q, the convention under
        which the tabulated closed-form spectra are written.
        """
        q = self.basis.base_point
        if pivot is None:
            pivot = int(np.flatnonzero(np.abs(q) > 1e-12)[-1])
        B = np.stack([np.eye(4)[i] - q[i] * q for i in range(4) if i != pivot], axis=1)
        H = B.T @ self.ambient @ B
        return symmetric_eigen(0.5 * (H + H.T)).eigenvalues[::-1].copy()


def sphere_restricted_hessian(q, lambdas):
    """Hessian of the lifted cost on S^3 restricted to T_q S^3 (orthonormal basis).

    Returns the 3x3 matrix, its increasing spectrum, and the 4x4 ambient form
    Hess G - (<grad G, q>/|q|^2) I_4 it was restricted from.
    """
    q = as_unit_quaternion(q)
    basis = sphere_tangent_basis(q)
    A = lifted_hessian(q, lambdas) - sphere_multiplier(q, lambdas) * np.eye(4)
    A = 0.5 * (A + A.T)
    B = basis.directions
    H = B.T @ A @ B
    H = 0.5 * (H + H.T)
    spectrum = symmetric_eigen(H).eigenvalues[::-1].copy()
    return SphereHessian(H, spectrum, basis, A)


def random_unit_quaternions(rng, size):
    """Haar-uniform unit quaternions from normalised standard normals."""
    x = rng.standard_normal((size, 4))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def great_circle(q, v, t):
    """Point cos(t) q + sin(t) v on the great circle through q with unit tangent v."""
    return np.cos(t) * np.asarray(q) + np.sin(t) * np.asarray(v)


def antipodal_distance(q1, q2):
    """min(|q1 - q2|, |q1 + q2|): distance between the rotations' lifts."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    return min(fro(q1 - q2), fro(q1 + q2))
