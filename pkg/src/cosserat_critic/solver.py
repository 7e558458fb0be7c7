"""Riemannian descent on SO(n) along the embedded gradient, with multistart and catalog matching."""

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .catalog import catalog as closed_form_catalog
from .catalog import catalog_grioli, rotation_angle, transfer_labels
from .energy import as_rotation, energy, energy_difference, reduce
from .matlin import SingularMatrixError, as_square, fro, polar_decompose
from .quaternion import quat_to_rotation, random_unit_quaternions
from .son import energy_embedded_gradient

UNMATCHED = "unmatched"
NO_CATALOG = "no catalog"


@dataclass(frozen=True)
class SolverConfig:
    """Descent and multistart settings.

    The step policy is Barzilai-Borwein trial steps (``initial_step`` on the first
    iteration) with Armijo backtracking by ``backtrack``. A run has converged once
    the embedded gradient norm is at most ``grad_tol`` and the next trial
    displacement is at most ``step_tol``.
    """

    max_iters: int = 5000
    initial_step: float = 0.05
    backtrack: float = 0.5
    armijo: float = 1e-4
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    max_halvings: int = 60
    seed: int = 0
    num_starts: int = 200
    match_tol: float = 1e-5

    def __post_init__(self):
        for name in ("initial_step", "armijo", "grad_tol", "step_tol", "match_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.num_starts < 1 or self.max_iters < 0:
            raise ValueError("num_starts must be >= 1 and max_iters >= 0")


@dataclass(frozen=True)
class SolveOutcome:
    rotation: np.ndarray
    grad_norm: float
    iterations: int
    status: str  # converged | max_iters | stalled
    energy: float
    matched: str = UNMATCHED
    match_distance: float = math.inf
    energies: tuple = field(default=(), repr=False)
    diagnostics: str = ""

    @property
    def converged(self):
        return self.status == "converged"


def polar_retract(M):
    """Nearest rotation to ``M`` (its polar factor); SingularMatrixError if det M <= 0."""
    R, _ = polar_decompose(M)
    return R


class CatalogMatcher:
    """Match rotations of the original problem to closed-form catalog entries."""

    def __init__(self, F, p, tol=1e-5):
        F = as_square(F)
        self.tol = tol
        self.reduced = red = reduce(F, p)
        if red.regime == "grioli":
            self.catalog = catalog_grioli(F, p)
            self._to_cat = lambda R: R
        else:
            if not red.F_hat_positive:
                raise ValueError("no rotation-group reduction for det F_hat < 0")
            self.catalog = transfer_labels(closed_form_catalog(red.lambdas), p)
            self._to_cat = red.to_reduced_rotation

    def match(self, R):
        """Return (name, distance) of the nearest catalog entry, or UNMATCHED."""
        Rc = self._to_cat(np.asarray(R, dtype=float))
        best_name, best = UNMATCHED, math.inf
        for pt in self.catalog.points:
            if pt.family is None:
                d = rotation_angle(Rc, pt.rotation)
                if d < best:
                    best_name, best = pt.name, d
        if best < self.tol:
            return best_name, best
        for pt in self.catalog.points:
            if pt.family is not None:
                d = pt.family.distance(Rc)
                if d < best:
                    best_name, best = pt.family.name, d
        if best < self.tol:
            return best_name, best
        return UNMATCHED, best


def _matcher_for(F, p, tol):
    n = np.asarray(F).shape[0]
    if n not in (2, 3):
        return None
    try:
        return CatalogMatcher(F, p, tol)
    except ValueError:
        return None


def descend(F, p, R0, cfg=SolverConfig(), matcher=None):
    """Armijo descent R_{k+1} = polar(R_k - t_k dW(R_k)) from ``R0``.

    ``matcher`` defaults to a CatalogMatcher for n in {2, 3}; pass ``False`` to skip
    matching. Without a catalog (n >= 4, or n = 3 with mu < mu_c where det F_hat < 0)
    the outcome is labelled NO_CATALOG rather than UNMATCHED.

    ``energies`` records the accepted energies, advanced by the accurately evaluated
    increments that the Armijo test was applied to; ``energy`` is a direct evaluation.
    """
    F = as_square(F)
    R = as_rotation(R0)
    if matcher is None:
        matcher = _matcher_for(F, p, cfg.match_tol)
    E = energy(R, F, p)
    g = energy_embedded_gradient(R, F, p)
    gn = fro(g)
    t = cfg.initial_step
    energies = [E]
    status = "max_iters"
    diagnostics = ""
    k = 0
    while True:
        if gn <= cfg.grad_tol and t * gn <= cfg.step_tol:
            status = "converged"
            break
        if k >= cfg.max_iters:
            break
        trial = t
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            try:
                R_new = polar_retract(R - trial * g)
            except SingularMatrixError:
                trial *= cfg.backtrack
                continue
            dE = energy_difference(R, R_new, F, p)
            if dE < 0 and dE <= -cfg.armijo * trial * gn * gn:
                accepted = True
                break
            trial *= cfg.backtrack
        if not accepted:
            if gn <= cfg.grad_tol:
                status = "converged"
            else:
                status = "stalled"
                diagnostics = (
                    f"line search failed after {cfg.max_halvings} halvings at iteration {k}: "
                    f"|grad| = {gn:.3e}, energy = {E:.17g}"
                )
            break
        g_new = energy_embedded_gradient(R_new, F, p)
        s = R_new - R
        y = g_new - g
        sy = float(np.sum(s * y))
        ss = float(np.sum(s * s))
        t = ss / sy if sy > 0 else 2.0 * trial
        t = min(max(t, 1e-8), 1e20)
        R, E, g = R_new, E + dE, g_new
        gn = fro(g)
        energies.append(E)
        k += 1
    name, dist = (NO_CATALOG, math.inf) if not matcher else matcher.match(R)
    return SolveOutcome(R, gn, k, status, energy(R, F, p), name, dist, tuple(energies), diagnostics)


def random_rotations(n, count, rng):
    """Haar-uniform rotations: uniform angle (n=2), uniform quaternion (n=3), sign-fixed QR otherwise."""
    if n == 2:
        out = []
        for a in rng.uniform(0.0, 2.0 * math.pi, size=count):
            c, s = math.cos(a), math.sin(a)
            out.append(np.array([[c, -s], [s, c]]))
        return out
    if n == 3:
        return [quat_to_rotation(q) for q in random_unit_quaternions(rng, count)]
    out = []
    for _ in range(count):
        Q, Rr = np.linalg.qr(rng.standard_normal((n, n)))
        Q = Q * np.sign(np.diag(Rr))
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        out.append(Q)
    return out


@dataclass(frozen=True)
class MultistartReport:
    outcomes: tuple
    hits: dict
    unmatched: tuple
    not_converged: tuple
    catalog_names: tuple

    @property
    def all_matched(self):
        return not self.unmatched

    def summary(self):
        lines = [f"starts: {len(self.outcomes)}"]
        if not self.catalog_names:
            lines.append("no closed-form catalog for this problem; limits not matched")
        for name, count in sorted(self.hits.items()):
            lines.append(f"  {name}: {count}")
        missing = [c for c in self.catalog_names if c not in self.hits]
        if missing:
            lines.append("catalog entries not reached: " + ", ".join(missing))
        if self.unmatched:
            lines.append(f"UNMATCHED limits at starts {list(self.unmatched)}")
        if self.not_converged:
            lines.append(f"not converged at starts {list(self.not_converged)}")
        return "\n".join(lines)


def _threads():
    raw = os.environ.get("COSSERAT_CRITIC_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _distinct_entries(cat):
    """Catalog names with sign-flipped duplicates (q and -q give one rotation) removed.

    The first name is kept, which is also the one the matcher reports.
    """
    kept = []
    for pt in cat.points:
        dup = False
        for other in kept:
            if pt.family is None and other.family is None:
                dup = rotation_angle(pt.rotation, other.rotation) < 1e-9
            elif pt.family is not None and other.family is not None and pt.family.kind == other.family.kind:
                dup = other.family.distance(pt.rotation) < 1e-7
            if dup:
                break
        if not dup:
            kept.append(pt)
    return tuple(pt.name if pt.family is None else pt.family.name for pt in kept)


def multistart(F, p, cfg=SolverConfig(), starts=None):
    """Descend from ``cfg.num_starts`` seeded Haar-random rotations and match every limit.

    Results are ordered by start index regardless of how many threads run them.
    """
    F = as_square(F)
    n = F.shape[0]
    if starts is None:
        starts = random_rotations(n, cfg.num_starts, np.random.default_rng(cfg.seed))
    matcher = _matcher_for(F, p, cfg.match_tol)

    def run(R0):
        return descend(F, p, R0, cfg, matcher=matcher if matcher is not None else False)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = tuple(pool.map(run, starts))
    else:
        outcomes = tuple(run(R0) for R0 in starts)
    hits = Counter(o.matched for o in outcomes if o.matched not in (UNMATCHED, NO_CATALOG))
    unmatched = tuple(i for i, o in enumerate(outcomes) if o.matched == UNMATCHED)
    not_conv = tuple(i for i, o in enumerate(outcomes) if not o.converged)
    names = () if matcher is None else _distinct_entries(matcher.catalog)
    return MultistartReport(outcomes, dict(hits), unmatched, not_conv, names)
