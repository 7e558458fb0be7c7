"""Closed-form critical points of the reduced energy W_{1,0}(R; diag(lambdas)) for n = 2, 3.

Every entry is re-verified numerically on construction: criticality residual,
energy against direct evaluation, and the restricted-Hessian spectrum, from
which the label is derived. For n = 3 rotations are produced from the listed
quaternions through the double cover.

Spectra are reported twice. ``spectrum`` is the Riemannian Hessian in an
orthonormal tangent basis (agrees with second differences along geodesics).
``printed_spectrum`` evaluates the tabulated closed forms, which are the
eigenvalues of the same form written in the non-orthonormal basis
{e_i - q^i q}, pivot = last nonzero component of q; see
``quaternion.SphereHessian.raw_basis_spectrum``. Both share sign patterns.
"""

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import _numerics
from .energy import UNIT, MaterialParams, classification_transfer, coincidence_pattern, energy
from .quaternion import antipodal_distance, quat_to_rotation, sphere_restricted_hessian
from .son import classify, default_zero_tol, is_critical, restricted_hessian
from .matlin import fro


class CatalogInconsistency(AssertionError):
    """Theorem-based global flags disagree with the numerical energies."""


@dataclass(frozen=True)
class Family:
    """A continuous family of critical quaternions.

    ``kind`` is ``"circle"`` (parameter alpha in [0, 2 pi)) or ``"two_sphere"``
    (parameter a unit 3-vector u).
    """

    name: str
    kind: str
    quaternion: Callable
    parameterization: str
    samples: tuple

    @property
    def dimension(self):
        return 1 if self.kind == "circle" else 2

    def rotation(self, param):
        return quat_to_rotation(self.quaternion(param))

    def distance(self, R):
        """Smallest rotation angle between ``R`` and a member of the family.

        Minimises over the family parameter: 64-point coarse grid, then local refinement.
        """
        return _family_distance(self, np.asarray(R, dtype=float))

    def closest_parameter(self, q):
        """Parameter of the member nearest to ``q`` (families are affine circles/spheres in R^4)."""
        q = np.asarray(q, dtype=float)
        if self.kind == "circle":
            a, b, c = self.quaternion(0.0), self.quaternion(math.pi / 2), self.quaternion(math.pi)
            center = 0.5 * (a + c)
            w = q - center
            return math.atan2(float(w @ (b - center)), float(w @ (a - center)))
        e1 = np.array([1.0, 0.0, 0.0])
        center = 0.5 * (self.quaternion(e1) + self.quaternion(-e1))
        u = (q - center)[1:]
        nrm = np.linalg.norm(u)
        return e1 if nrm == 0 else u / nrm

    def contains(self, q, tol=1e-9):
        """Whether ``q`` or ``-q`` lies on the family."""
        q = np.asarray(q, dtype=float)
        return min(
            antipodal_distance(s * q, self.quaternion(self.closest_parameter(s * q))) for s in (1, -1)
        ) <= tol


@dataclass(frozen=True)
class FamilySample:
    parameter: object
    quaternion: np.ndarray
    rotation: np.ndarray
    residual: float
    energy: float


@dataclass(frozen=True)
class CriticalPoint:
    name: str
    base: str
    rotation: np.ndarray
    energy: float
    spectrum: np.ndarray
    label: str
    raw_label: str
    residual: float
    quaternion: Optional[np.ndarray] = None
    family: Optional[Family] = None
    parameter: object = None
    printed_spectrum: Optional[np.ndarray] = None
    global_flag: str = "none"
    member_of: tuple = ()
    structural_zeros: int = 0
    samples: tuple = ()
    notes: tuple = ()

    @property
    def family_kind(self):
        return "isolated" if self.family is None else self.family.kind



@dataclass
class Catalog:
    lambdas: np.ndarray
    subcase: str
    points: list
    notes: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def by_base(self, base):
        return [p for p in self.points if p.base == base]

    def bases(self):
        out = []
        for p in self.points:
            if p.base not in out:
                out.append(p.base)
        return out

    @property
    def min_energy(self):
        return min(p.energy for p in self.points)

    @property
    def max_energy(self):
        return max(p.energy for p in self.points)

    def global_minima(self):
        return [p for p in self.points if p.global_flag == "global_min"]

    def global_maxima(self):
        return [p for p in self.points if p.global_flag == "global_max"]


# ---------------------------------------------------------------- helpers


def rotation_angle(R1, R2):
    """Geodesic angle between two rotations, stable near zero."""
    x = fro(np.asarray(R1) - np.asarray(R2)) / (2.0 * math.sqrt(2.0))
    return 2.0 * math.asin(min(1.0, x))


def _gt(x, c):
    return x > c + _numerics.GATE_TOL * max(1.0, abs(c))


def _boundary(x, c):
    return abs(x - c) <= _numerics.GATE_TOL * max(1.0, abs(c))


def _check_lambdas(lambdas, n):
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.shape != (n,):
        raise ValueError(f"expected {n} singular values, got {lam.tolist()}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError(f"singular values must be positive, got {lam.tolist()}")
    if np.any(np.diff(lam) > 0):
        raise ValueError(f"singular values must be sorted decreasingly, got {lam.tolist()}")
    return lam


def _transverse_label(spectrum, structural_zeros):
    """Classify after dropping the eigenvalues that are zero along a family."""
    spectrum = np.asarray(spectrum, dtype=float)
    if structural_zeros == 0:
        return classify(spectrum)
    tol = default_zero_tol(spectrum)
    order = np.argsort(np.abs(spectrum))
    if np.any(np.abs(spectrum[order[:structural_zeros]]) > tol):
        return "degenerate"
    rest = spectrum[np.sort(order[structural_zeros:])]
    if rest.size == 0:
        return "degenerate"
    return classify(rest, tol)


def _fib_sphere(k):
    i = np.arange(k) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / k)
    theta = np.pi * (1.0 + 5.0**0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)


def _unit(theta, phi):
    return np.array([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)])


def _family_distance(fam, R):
    def sq(param):
        return float(np.sum((fam.rotation(param) - R) ** 2))

    if fam.kind == "circle":
        grid = 2.0 * np.pi * np.arange(64) / 64
        vals = [sq(a) for a in grid]
        a0 = grid[int(np.argmin(vals))]
        h = 2.0 * np.pi / 64
        res = minimize_scalar(sq, bounds=(a0 - h, a0 + h), method="bounded", options={"xatol": 1e-13})
        best = min(res.fun, min(vals))
    else:
        grid = _fib_sphere(64)
        vals = [sq(u) for u in grid]
        u0 = grid[int(np.argmin(vals))]
        x0 = np.array([math.atan2(u0[1], u0[0]), math.acos(max(-1.0, min(1.0, u0[2])))])
        res = minimize(
            lambda x: sq(_unit(*x)),
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 4000},
        )
        best = min(res.fun, min(vals))
    return 2.0 * math.asin(min(1.0, math.sqrt(max(best, 0.0)) / (2.0 * math.sqrt(2.0))))


# ---------------------------------------------------------------- n = 2


def _rot2(c, s):
    return np.array([[c, -s], [s, c]])


def catalog_n2(l1, l2):
    """All critical rotations of W_{1,0}(.; diag(l1, l2)) on SO(2), classified and flagged."""
    lam = _check_lambdas([l1, l2], 2)
    l1, l2 = lam
    D = np.diag(lam)
    s = l1 + l2
    notes = []
    entries = [
        ("R^(1)", np.eye(2), (l1 - 1) ** 2 + (l2 - 1) ** 2),
        ("R^(2)", -np.eye(2), (l1 + 1) ** 2 + (l2 + 1) ** 2),
    ]
    if _gt(s, 2.0):
        c = 2.0 / s
        sn = math.sqrt(1.0 - c * c)
        entries.append(("R^(3)_+", _rot2(c, sn), 0.5 * (l1 - l2) ** 2))
        entries.append(("R^(3)_-", _rot2(c, -sn), 0.5 * (l1 - l2) ** 2))
    elif _boundary(s, 2.0):
        notes.append("boundary degeneration: l1 + l2 = 2, R^(3)_+- coincide with R^(1)")
    points = []
    for name, R, closed in entries:
        base = name.split("_")[0]
        res = is_critical(R, D, UNIT).residual
        spec = restricted_hessian(R, D, UNIT).spectrum
        lab = classify(spec)
        points.append(
            CriticalPoint(
                name=name,
                base=base,
                rotation=R,
                energy=float(closed),
                spectrum=spec,
                label=lab,
                raw_label=lab,
                residual=res,
            )
        )
    cat = Catalog(lam, "n2", points, notes)
    _verify_energies(cat, D)
    global_extrema(cat)
    return cat


# ---------------------------------------------------------------- n = 3 tables


def _isolated_table(l1, l2, l3):
    """(base, sign pattern, quaternion builder, energy, printed spectrum, gate) for items 1-10."""
    r = math.sqrt

    def pair(k):
        return r(0.5 + 1.0 / k), r(max(0.0, 0.5 - 1.0 / k))

    rows = [
        ("q^(0)", 1, lambda s: (s[0], 0, 0, 0),
         (l1 - 1) ** 2 + (l2 - 1) ** 2 + (l3 - 1) ** 2,
         [-4 * (l2 + l3) * (l2 + l3 - 2), -4 * (l1 + l3) * (l1 + l3 - 2), -4 * (l1 + l2) * (l1 + l2 - 2)],
         None),
        ("q^(1)", 1, lambda s: (0, s[0], 0, 0),
         (l1 - 1) ** 2 + (l2 + 1) ** 2 + (l3 + 1) ** 2,
         [-4 * (l2 + l3) * (l2 + l3 + 2), -4 * (l1 - l3) * (l1 - l3 - 2), -4 * (l1 - l2) * (l1 - l2 - 2)],
         None),
        ("q^(2)", 1, lambda s: (0, 0, s[0], 0),
         (l1 + 1) ** 2 + (l2 - 1) ** 2 + (l3 + 1) ** 2,
         [-4 * (l1 + l3) * (l1 + l3 + 2), -4 * (l1 - l2) * (l1 - l2 + 2), -4 * (l2 - l3) * (l2 - l3 - 2)],
         None),
        ("q^(3)", 1, lambda s: (0, 0, 0, s[0]),
         (l1 + 1) ** 2 + (l2 + 1) ** 2 + (l3 - 1) ** 2,
         [-4 * (l1 + l2) * (l1 + l2 + 2), -4 * (l1 - l3) * (l1 - l3 + 2), -4 * (l2 - l3) * (l2 - l3 + 2)],
         None),
    ]
    d = l2 - l3
    if d > 0:
        a, b = pair(d)
        rows.append(("q^(4)", 2, lambda s, a=a, b=b: (0, 0, s[0] * a, s[1] * b),
                     (l1 + 1) ** 2 + 0.5 * (l2 + l3) ** 2,
                     [-4 * (l1 + l2) * (l1 + l3), -4 * (l1 - l2) * (l1 - l3), 2 * (d - 2) ** 2 * (d + 2) / d],
                     ("l2 - l3", d)))
    d = l1 - l3
    if d > 0:
        a, b = pair(d)
        rows.append(("q^(5)", 2, lambda s, a=a, b=b: (0, s[0] * a, 0, s[1] * b),
                     (l2 + 1) ** 2 + 0.5 * (l1 + l3) ** 2,
                     [-4 * (l1 + l2) * (l2 + l3), 4 * (l1 - l2) * (l2 - l3), 2 * (d - 2) ** 2 * (d + 2) / d],
                     ("l1 - l3", d)))
    d = l1 - l2
    if d > 0:
        a, b = pair(d)
        rows.append(("q^(6)", 2, lambda s, a=a, b=b: (0, s[0] * a, s[1] * b, 0),
                     (l3 + 1) ** 2 + 0.5 * (l1 + l2) ** 2,
                     [-4 * (l1 + l3) * (l2 + l3), -4 * (l1 - l3) * (l2 - l3), 2 * (d - 2) ** 2 * (d + 2) / d],
                     ("l1 - l2", d)))
    s_ = l1 + l2
    a, b = pair(s_)
    rows.append(("q^(7)", 2, lambda s, a=a, b=b: (s[0] * a, 0, 0, s[1] * b),
                 (l3 - 1) ** 2 + 0.5 * (l1 - l2) ** 2,
                 [4 * (l2 + l3) * (l1 - l3), 4 * (l1 + l3) * (l2 - l3), 2 * (s_ - 2) ** 2 * (s_ + 2) / s_],
                 ("l1 + l2", s_)))
    s_ = l1 + l3
    a, b = pair(s_)
    rows.append(("q^(8)", 2, lambda s, a=a, b=b: (s[0] * a, 0, s[1] * b, 0),
                 (l2 - 1) ** 2 + 0.5 * (l1 - l3) ** 2,
                 [4 * (l2 + l3) * (l1 - l2), -4 * (l1 + l2) * (l2 - l3), 2 * (s_ - 2) ** 2 * (s_ + 2) / s_],
                 ("l1 + l3", s_)))
    s_ = l2 + l3
    a, b = pair(s_)
    rows.append(("q^(9)", 2, lambda s, a=a, b=b: (s[0] * a, s[1] * b, 0, 0),
                 (l1 - 1) ** 2 + 0.5 * (l2 - l3) ** 2,
                 [-4 * (l1 + l2) * (l1 - l3), -4 * (l1 + l3) * (l1 - l2), 2 * (s_ - 2) ** 2 * (s_ + 2) / s_],
                 ("l2 + l3", s_)))
    return rows


def _circle_families(l1, l2, l3, subcase):
    """(base, branches, quaternion(sign, alpha), energy, printed spectrum(alpha), gate)."""
    r = math.sqrt
    out = []
    if subcase == "l1=l2>l3":
        out.append(("q^(10)", (None,), lambda sg, al: (0, math.cos(al), math.sin(al), 0),
                    2 * (l1**2 + 1) + (l3 + 1) ** 2,
                    lambda al: [0.0, -4 * (l1 + l3) * (l1 + l3 + 2), -4 * (l1 - l3) * (l1 - l3 - 2)],
                    None))
        d = l1 - l3
        a, b = r(0.5 + 1 / d), r(max(0.0, 0.5 - 1 / d))
        out.append(("q^(11)", (1, -1),
                    lambda sg, al, a=a, b=b: (0, a * math.cos(al), a * math.sin(al), sg * b),
                    (l1 + 1) ** 2 + 0.5 * (l1 + l3) ** 2,
                    lambda al, d=d: [0.0, -8 * l1 * (l1 + l3), 2 * (d + 2) * (d - 2) ** 2 / d],
                    ("l1 - l3", d)))
        s_ = l1 + l3
        a, b = r(0.5 + 1 / s_), r(max(0.0, 0.5 - 1 / s_))
        out.append(("q^(12)", (1, -1),
                    lambda sg, al, a=a, b=b: (sg * a, b * math.cos(al), b * math.sin(al), 0),
                    (l1 - 1) ** 2 + 0.5 * (l1 - l3) ** 2,
                    lambda al, s_=s_: [0.0, -8 * l1 * (l1 - l3),
                                       2 * (s_ + 2) * (s_ - 2) * (s_ - 2 + math.cos(al) ** 2 * (s_ + 2)) / s_],
                    ("l1 + l3", s_)))
    elif subcase == "l1>l2=l3":
        out.append(("q^(13)", (None,), lambda sg, al: (0, 0, math.cos(al), math.sin(al)),
                    (l1 + 1) ** 2 + 2 * (l2**2 + 1),
                    lambda al: [0.0, -4 * (l1 + l2) * (l1 + l2 + 2), -4 * (l1 - l2) * (l1 - l2 + 2)],
                    None))
        d = l1 - l2
        a, b = r(0.5 + 1 / d), r(max(0.0, 0.5 - 1 / d))
        out.append(("q^(14)", (1, -1),
                    lambda sg, al, a=a, b=b: (0, sg * a, b * math.cos(al), b * math.sin(al)),
                    (l2 + 1) ** 2 + 0.5 * (l1 + l2) ** 2,
                    lambda al, d=d: [0.0, -8 * l2 * (l1 + l2),
                                     2 * (d + 2) * (d - 2) * (d - 2 + math.cos(al) ** 2 * (d + 2)) / d],
                    ("l1 - l2", d)))
        s_ = l1 + l2
        a, b = r(0.5 + 1 / s_), r(max(0.0, 0.5 - 1 / s_))
        out.append(("q^(15)", (1, -1),
                    lambda sg, al, a=a, b=b: (sg * a, 0, b * math.cos(al), b * math.sin(al)),
                    (l2 - 1) ** 2 + 0.5 * (l1 - l2) ** 2,
                    lambda al, s_=s_: [0.0, 8 * l2 * (l1 - l2),
                                       2 * (s_ + 2) * (s_ - 2) * (s_ - 2 + math.cos(al) ** 2 * (s_ + 2)) / s_],
                    ("l1 + l2", s_)))
    return out


def subcase_of(lambdas):
    """Equality pattern of three sorted singular values: distinct, l1=l2>l3, l1>l2=l3, equal."""
    e12, e23 = coincidence_pattern(lambdas)
    if e12 and e23:
        return "equal"
    if e12:
        return "l1=l2>l3"
    if e23:
        return "l1>l2=l3"
    return "distinct"


_EXCLUDED = {"l1=l2>l3": {"q^(6)"}, "l1>l2=l3": {"q^(4)"}}

_SIGN_NAMES = {1: "+", -1: "-"}


def _sign_patterns(count):
    if count == 1:
        return [(1,), (-1,)]
    return [(1, 1), (1, -1), (-1, 1), (-1, -1)]


def _pattern_name(signs):
    return ";".join(_SIGN_NAMES[s] for s in signs)


def _printed_pivot_order(q):
    nz = np.flatnonzero(np.abs(q) > 1e-12)
    return int(nz[-1])


def _make_point3(name, base, q, D, closed_energy, printed, family=None, parameter=None, notes=()):
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    R = quat_to_rotation(q)
    res = is_critical(R, D, UNIT).residual
    H = sphere_restricted_hessian(q, np.diag(D))
    lab = classify(H.spectrum)
    return CriticalPoint(
        name=name,
        base=base,
        rotation=R,
        energy=float(closed_energy),
        spectrum=H.spectrum,
        label=lab,
        raw_label=lab,
        residual=res,
        quaternion=q,
        family=family,
        parameter=parameter,
        printed_spectrum=None if printed is None else np.sort(np.asarray(printed, dtype=float)),
        notes=tuple(notes),
    )


def _two_sphere_families(lam):
    l = float(lam[0])
    fams = [
        (
            "q^(16)",
            Family(
                "q^(16)",
                "two_sphere",
                lambda u: np.concatenate([[0.0], np.asarray(u, float) / np.linalg.norm(u)]),
                "(0, u1, u2, u3), |u| = 1",
                (np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), np.array([1.0, 2.0, 2.0]) / 3.0),
            ),
            3 * l * l + 2 * l + 3,
            lambda q: [0.0, 0.0, -16 * l * (l + 1)],
        )
    ]
    if _gt(l, 1.0):
        a = math.sqrt((l + 1) / (2 * l))
        b = math.sqrt((l - 1) / (2 * l))
        for sg in (1, -1):
            nm = f"q^(17)_{_SIGN_NAMES[sg]}"
            fams.append(
                (
                    nm,
                    Family(
                        nm,
                        "two_sphere",
                        lambda u, sg=sg, a=a, b=b: np.concatenate(
                            [[sg * a], b * np.asarray(u, float) / np.linalg.norm(u)]
                        ),
                        f"({'+' if sg > 0 else '-'}sqrt((l+1)/(2l)), sqrt((l-1)/(2l)) u), |u| = 1",
                        (np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), np.array([1.0, 2.0, 2.0]) / 3.0),
                    ),
                    (l - 1) ** 2,
                    lambda q: [0.0, 0.0, -16 * (l + 1) * (q[3] ** 2 * (l + 1) + 1 - l)],
                )
            )
    return fams


def catalog_n3(l1, l2, l3):
    """All critical points of the lifted reduced energy for sorted singular values (l1, l2, l3)."""
    lam = _check_lambdas([l1, l2, l3], 3)
    l1, l2, l3 = (float(x) for x in lam)
    D = np.diag(lam)
    subcase = subcase_of(lam)
    notes = []
    gaps = np.abs(np.diff(lam)) / lam[:-1]
    if subcase == "distinct" and np.any(gaps < 1e-6):
        notes.append("conditioning: nearly coincident singular values treated as distinct")
    points = []
    families = []

    if subcase == "equal":
        l = l1
        for sg in (1, -1):
            q = (sg, 0, 0, 0)
            points.append(
                _make_point3(f"q^(0)_{_SIGN_NAMES[sg]}", "q^(0)", q, D, 3 * (l - 1) ** 2, [-16 * l * (l - 1)] * 3)
            )
        if _boundary(l, 1.0):
            notes.append("boundary degeneration: l = 1, family q^(17) collapses onto q^(0)")
        for nm, fam, en, printed in _two_sphere_families(lam):
            families.append(fam)
            rep = np.array([1.0, 2.0, 2.0]) / 3.0
            q = fam.quaternion(rep)
            pt = _make_point3(nm, nm.split("_")[0], q, D, en, printed(q), family=fam, parameter=rep)
            points.append(replace(pt, samples=_samples(fam, D, lam)))
    else:
        for base, nsigns, qfun, en, printed, gate in _isolated_table(l1, l2, l3):
            if base in _EXCLUDED.get(subcase, ()):
                continue
            if gate is not None:
                gname, gval = gate
                if not _gt(gval, 2.0):
                    if _boundary(gval, 2.0):
                        notes.append(f"boundary degeneration: {gname} = 2, {base} absent")
                    continue
            for signs in _sign_patterns(nsigns):
                name = f"{base}_{_pattern_name(signs) if nsigns == 2 else _SIGN_NAMES[signs[0]]}"
                points.append(_make_point3(name, base, qfun(signs), D, en, printed))
        for base, branches, qfun, en, printed, gate in _circle_families(l1, l2, l3, subcase):
            if gate is not None:
                gname, gval = gate
                if not _gt(gval, 2.0):
                    if _boundary(gval, 2.0):
                        notes.append(f"boundary degeneration: {gname} = 2, {base} absent")
                    continue
            for sg in branches:
                nm = base if sg is None else f"{base}_{_SIGN_NAMES[sg]}"
                fam = Family(
                    nm,
                    "circle",
                    lambda al, sg=sg, qfun=qfun: np.asarray(qfun(sg, al), dtype=float),
                    f"{base} alpha in [0, 2 pi)",
                    (0.0, math.pi / 4, math.pi / 2),
                )
                families.append(fam)
                alpha = math.pi / 4
                pt = _make_point3(nm, base, qfun(sg, alpha), D, en, printed(alpha), family=fam, parameter=alpha)
                points.append(replace(pt, samples=_samples(fam, D, lam)))

    points = [_attach_membership(p, families) for p in points]
    cat = Catalog(lam, subcase, points, notes)
    _verify_energies(cat, D)
    global_extrema(cat)
    return cat


def _samples(fam, D, lam):
    out = []
    for param in fam.samples:
        q = fam.quaternion(param)
        R = quat_to_rotation(q)
        out.append(FamilySample(param, q, R, is_critical(R, D, UNIT).residual, energy(R, D, UNIT)))
    return tuple(out)


def _attach_membership(p, families):
    # sibling branches (q^(k)_+ / q^(k)_-) are antipodal copies of each other
    members = [f for f in families if not f.name.startswith(p.base) and f.contains(p.quaternion)]
    zeros = max([p.family.dimension if p.family is not None else 0] + [f.dimension for f in members])
    return replace(
        p,
        member_of=tuple(f.name for f in members),
        structural_zeros=zeros,
        label=_transverse_label(p.spectrum, zeros),
    )


def _verify_energies(cat, D):
    for p in cat.points:
        direct = energy(p.rotation, D, UNIT)
        if abs(direct - p.energy) > 1e-10 * max(1.0, abs(direct)):
            raise CatalogInconsistency(
                f"{p.name}: closed-form energy {p.energy!r} differs from direct {direct!r}"
            )


# ---------------------------------------------------------------- global extrema


def _theorem_extrema(cat):
    """Names (bases) of the global minima / maxima asserted by the closed-form theorems."""
    lam = cat.lambdas
    if cat.subcase == "n2":
        l1, l2 = lam
        return (["R^(1)"] if not _gt(l1 + l2, 2.0) else ["R^(3)"]), ["R^(2)"]
    l1, l2, l3 = lam
    if cat.subcase == "distinct":
        return (["q^(7)"] if _gt(l1 + l2, 2.0) else ["q^(0)"]), ["q^(3)"]
    if cat.subcase == "l1=l2>l3":
        return (["q^(7)"] if _gt(l1, 1.0) else ["q^(0)"]), ["q^(3)"]
    if cat.subcase == "l1>l2=l3":
        mins = ["q^(7)", "q^(8)", "q^(15)"] if _gt(l1 + l2, 2.0) else ["q^(0)"]
        return mins, ["q^(2)", "q^(3)", "q^(13)"]
    mins = ["q^(17)"] if _gt(l1, 1.0) else ["q^(0)"]
    return mins, ["q^(16)"]


def global_extrema(cat):
    """Flag global minima/maxima per the theorems and cross-check against energies.

    Raises CatalogInconsistency if a flagged point is not at the numerical extreme
    or an unflagged point reaches it.
    """
    mins, maxs = _theorem_extrema(cat)
    pts = []
    for p in cat.points:
        flag = "global_min" if p.base in mins else "global_max" if p.base in maxs else "none"
        pts.append(replace(p, global_flag=flag))
    cat.points = pts
    scale = max(1.0, cat.max_energy)
    tol = 1e-9 * scale
    lo, hi = cat.min_energy, cat.max_energy
    for p in pts:
        if p.global_flag == "global_min" and p.energy - lo > tol:
            raise CatalogInconsistency(f"{p.name}: flagged global_min but energy {p.energy} vs min {lo}")
        if p.global_flag == "global_max" and hi - p.energy > tol:
            raise CatalogInconsistency(f"{p.name}: flagged global_max but energy {p.energy} vs max {hi}")
    flagged_lo = min((p.energy for p in pts if p.global_flag == "global_min"), default=math.inf)
    flagged_hi = max((p.energy for p in pts if p.global_flag == "global_max"), default=-math.inf)
    for p in pts:
        if p.global_flag != "global_min" and p.energy < flagged_lo - tol:
            raise CatalogInconsistency(f"{p.name}: unflagged point below the flagged minimum ({p.energy} < {flagged_lo})")
        if p.global_flag != "global_max" and p.energy > flagged_hi + tol:
            raise CatalogInconsistency(f"{p.name}: unflagged point above the flagged maximum ({p.energy} > {flagged_hi})")
    ties = [p.name for p in pts if p.global_flag != "global_min" and p.energy <= flagged_lo + tol]
    if ties and not any(n.startswith("boundary degeneration") for n in cat.notes):
        cat.notes.append(f"near-tie with the global minimum energy (within {tol:.1e}): {', '.join(ties)}")
    return cat


def transfer_labels(cat, params):
    """Catalog as seen by the original energy (labels and global flags for mu < mu_c)."""
    if params.regime == "mu_gt_muc":
        return cat
    swap = {"global_min": "global_max", "global_max": "global_min", "none": "none"}
    pts = [
        replace(
            p,
            label=classification_transfer(p.label, params),
            raw_label=classification_transfer(p.raw_label, params),
            global_flag=swap[p.global_flag],
        )
        for p in cat.points
    ]
    return Catalog(cat.lambdas, cat.subcase, pts, cat.notes + ["labels transferred for mu < mu_c"])


def catalog(lambdas):
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.size == 2:
        return catalog_n2(*lam)
    if lam.size == 3:
        return catalog_n3(*lam)
    raise ValueError(
        f"closed-form catalogs exist for n = 2 and n = 3 only (got n = {lam.size}); "
        "use the generic criticality test (verify) instead"
    )


# ---------------------------------------------------------------- feasibility


@dataclass(frozen=True)
class FeasibilityReport:
    product_lambda: float
    required_value: float
    expected_product: float
    identity_residual: float
    physically_consistent: bool
    note: str
    identity_holds: bool = True


def feasibility(lambdas, params, det_F=1.0):
    """Check prod(lambdas) = ((mu - mu_c)/mu)^n det F and the isochoric constraint.

    ``identity_holds`` checks the product identity for the given ``det_F`` (relative
    1e-9); ``physically_consistent`` is True when prod(lambdas) equals
    ((mu - mu_c)/mu)^n within 1e-8, i.e. the singular values fit det F = 1.
    """
    lam = np.asarray(lambdas, dtype=float)
    n = lam.size
    scale = params.scale
    required = abs(scale) ** n
    prod = float(np.prod(lam))
    expected = required * det_F
    ident = abs(prod - expected) / max(abs(expected), 1e-300)
    consistent = abs(prod - required) <= 1e-8
    notes = []
    if not consistent:
        notes.append(
            f"prod(lambdas) = {prod:.17g} differs from ((mu - mu_c)/mu)^n = {required:.17g}: "
            "not realisable by an isochoric deformation (det F = 1)"
        )
    if params.regime == "mu_gt_muc" and required < 1.0 and prod >= 1.0:
        notes.append("violates prod(lambdas) < 1 required by the isochoric model")
    if n == 3 and consistent and np.all(np.abs(lam - lam[0]) <= 1e-9 * lam[0]) and lam[0] > 1.0:
        notes.append("all-equal branch with lambda > 1 is impossible in the considered model")
    return FeasibilityReport(prod, required, expected, ident, consistent, "; ".join(notes) or "ok", ident <= 1e-9)


# ---------------------------------------------------------------- worked examples


@dataclass(frozen=True)
class NamedExample:
    key: str
    F: np.ndarray
    params: MaterialParams
    description: str
    lambdas: np.ndarray


def shear_lambdas(k, params):
    c = params.scale
    root = math.sqrt(k * k * (k * k + 4))
    return np.array(
        [c * math.sqrt(1 + k * k / 2 + root / 2), c, c * math.sqrt(1 + k * k / 2 - root / 2)]
    )


def named_examples(k_shear=1.0, k_biaxial=2.0, k_flat=0.5, params=UNIT):
    """The simple shear and the two isochoric equi-biaxial stretches with their closed-form lambdas."""
    if not k_biaxial > 1 or not 0 < k_flat < 1:
        raise ValueError("need k_biaxial > 1 and 0 < k_flat < 1")
    c = params.scale
    return [
        NamedExample(
            "shear",
            np.array([[1.0, k_shear, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            params,
            f"simple shear, k = {k_shear}",
            shear_lambdas(k_shear, params),
        ),
        NamedExample(
            "biaxial_stretch",
            np.diag([k_biaxial, k_biaxial, 1.0 / k_biaxial**2]),
            params,
            f"isochoric equi-biaxial stretch diag(k, k, 1/k^2), k = {k_biaxial}",
            c * np.array([k_biaxial, k_biaxial, 1.0 / k_biaxial**2]),
        ),
        NamedExample(
            "biaxial_flattening",
            np.diag([1.0 / k_flat**2, k_flat, k_flat]),
            params,
            f"isochoric equi-biaxial stretch diag(1/k^2, k, k), k = {k_flat}",
            c * np.array([1.0 / k_flat**2, k_flat, k_flat]),
        ),
    ]


# ---------------------------------------------------------------- mu == mu_c


def catalog_grioli(F, params):
    """Critical points for mu == mu_c: R = R_p V diag(s) V^T, s in {+-1}^n, prod(s) = 1.

    Here F = R_p S with S = V diag(sigma) V^T, so F R^T = R_p S V diag(s) V^T R_p^T is
    symmetric. Only distinct singular values give isolated points; with coincident ones
    the critical set contains continuous families, which are not enumerated.
    """
    from .energy import deformation_gradient
    from .matlin import polar_decompose, symmetric_eigen

    if params.regime != "grioli":
        raise ValueError("catalog_grioli needs mu == mu_c")
    F = deformation_gradient(F)
    n = F.shape[0]
    R_p, S = polar_decompose(F)
    eig = symmetric_eigen(S)
    sigma, V = eig.eigenvalues, eig.eigenvectors
    if any(coincidence_pattern(sigma)):
        raise ValueError(
            "coincident singular values in the mu == mu_c regime: continuous critical "
            "families are not enumerated; use verify on specific rotations"
        )
    points = []
    for signs in itertools.product((1, -1), repeat=n):
        if math.prod(signs) != 1:
            continue
        s = np.array(signs, dtype=float)
        R = R_p @ V @ np.diag(s) @ V.T
        e = energy(R, F, params)
        closed = params.mu * float(np.sum((s * sigma - 1.0) ** 2))
        if abs(e - closed) > 1e-10 * max(1.0, closed):
            raise CatalogInconsistency(f"Grioli energy {e} vs closed form {closed}")
        h = restricted_hessian(R, F, params)
        label = classify(h.spectrum)
        res = fro(F @ R.T - R @ F.T)
        name = "R_grioli" + "".join("+" if x > 0 else "-" for x in signs)
        points.append(CriticalPoint(name, "R_grioli", R, e, h.spectrum, label, label, res))
    cat = Catalog(sigma, "grioli", points, ["mu == mu_c: symmetric F R^T; no reduction"])
    lo, hi = cat.min_energy, cat.max_energy
    tol = 1e-9 * max(1.0, hi)
    cat.points = [
        replace(p, global_flag="global_min" if abs(p.energy - lo) <= tol
                else "global_max" if abs(p.energy - hi) <= tol else "none")
        for p in points
    ]
    return cat
