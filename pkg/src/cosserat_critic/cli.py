"""Command-line interface: ``cosserat-critic reduce|catalog|verify|solve``.

Problem input is a JSON document with keys ``F`` (row-major nested lists) or
``lambdas``, plus ``mu`` and ``mu_c`` (defaults 1 and 0). With ``--format csv`` the
input file is a plain comma-separated matrix F and the moduli come from ``--mu``
and ``--mu-c``. Giving ``lambdas`` selects the reduced diagonal problem directly.

Exit status: 0 success, 2 parse error, 3 validation error, 4 unmatched solver limits.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__, _numerics
from .catalog import CatalogInconsistency, catalog, catalog_grioli, feasibility, transfer_labels
from .energy import (
    GRIOLI,
    MU_LT_MUC,
    UNIT,
    MaterialParams,
    NotARotationError,
    deformation_gradient,
    energy,
    reduce,
)
from .matlin import NotPositiveDefiniteError, NotSymmetricError, SingularMatrixError
from .quaternion import rotation_to_quat
from .solver import SolverConfig, multistart
from .son import classify, default_zero_tol, is_critical, restricted_hessian

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_UNMATCHED = 4


class ParseError(Exception):
    pass


class ValidationError(Exception):
    pass


# ---------------------------------------------------------------- serialization


def fmt(x):
    """17 significant digits: enough for an exact float round trip."""
    return format(float(x), ".17g")


def _json_float(x):
    # keep float syntax so that -0.0 and integral values reload as floats
    text = fmt(x)
    return text if any(c in text for c in ".en") else text + ".0"


def to_json(obj, indent=0):
    """JSON text with every float written to 17 significant digits (non-finite -> null)."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _matrix(M):
    return None if M is None else [[float(x) for x in row] for row in np.asarray(M)]


def _vector(v):
    return None if v is None else [float(x) for x in np.asarray(v).reshape(-1)]


# ---------------------------------------------------------------- input


def _parse_matrix(rows, name):
    if not isinstance(rows, list) or not rows:
        raise ParseError(f"{name} must be a non-empty list of rows")
    n = len(rows)
    out = np.empty((n, n))
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ParseError(f"{name} row {i} is not a list")
        if len(row) != n:
            raise ParseError(f"{name} row {i} has {len(row)} entries, expected {n} (square matrix)")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ParseError(f"{name}[{i}][{j}] = {x!r} is not a number")
            out[i, j] = x
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{name} has non-finite entries")
    return out


def read_csv_matrix(text, name="matrix"):
    rows = []
    for lineno, line in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not line or all(not c.strip() for c in line):
            continue
        row = []
        for col, cell in enumerate(line, start=1):
            try:
                row.append(float(cell))
            except ValueError:
                raise ParseError(f"{name}: line {lineno}, column {col}: {cell.strip()!r} is not a number") from None
        rows.append(row)
    return _parse_matrix(rows, name)


def _load_json(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def _number(doc, key, default):
    x = doc.get(key, default)
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{key} = {x!r} is not a number")
    return float(x)


class Problem:
    """Parsed input: either a deformation gradient F or reduced singular values."""

    def __init__(self, F=None, lambdas=None, mu=1.0, mu_c=0.0):
        try:
            self.params = MaterialParams(mu, mu_c)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        self.F = F
        self.notes = []
        if lambdas is not None:
            lam = np.asarray(lambdas, dtype=float)
            if np.any(lam <= 0):
                raise ValidationError(f"lambdas must be positive, got {lam.tolist()}")
            order = np.argsort(-lam, kind="stable")
            if np.any(order != np.arange(lam.size)):
                self.notes.append("lambdas sorted decreasingly")
            lam = lam[order]
            self.lambdas = lam
        else:
            self.lambdas = None
        n = self.n
        if not 2 <= n <= 8:
            raise ValidationError(f"dimension n = {n} outside the supported range 2..8")
        if F is not None:
            try:
                deformation_gradient(F)
            except ValueError as exc:
                raise ValidationError(str(exc)) from None

    @property
    def n(self):
        return self.F.shape[0] if self.F is not None else self.lambdas.size

    @property
    def given(self):
        return "F" if self.F is not None else "lambdas"

    def solve_data(self):
        """(F, params) of the energy that the solver and verify act on."""
        if self.F is not None:
            return self.F, self.params
        return np.diag(self.lambdas), UNIT

    def describe(self):
        d = {"given": self.given, "n": self.n, "mu": self.params.mu, "mu_c": self.params.mu_c}
        if self.F is not None:
            d["F"] = _matrix(self.F)
        else:
            d["lambdas"] = _vector(self.lambdas)
        return d


def load_problem(args):
    if args.input is None:
        raise ParseError("--input is required")
    text = _read(args.input)
    if args.format == "csv":
        F = read_csv_matrix(text, "F")
        return Problem(F=F, mu=args.mu if args.mu is not None else 1.0, mu_c=args.mu_c if args.mu_c is not None else 0.0)
    doc = _load_json(text, args.input)
    if not isinstance(doc, dict):
        raise ParseError(f"{args.input}: top level must be an object with keys F or lambdas, mu, mu_c")
    has_F, has_l = "F" in doc, "lambdas" in doc
    if has_F == has_l:
        raise ParseError(f"{args.input}: give exactly one of F or lambdas")
    mu = args.mu if args.mu is not None else _number(doc, "mu", 1.0)
    mu_c = args.mu_c if args.mu_c is not None else _number(doc, "mu_c", 0.0)
    if has_F:
        return Problem(F=_parse_matrix(doc["F"], "F"), mu=mu, mu_c=mu_c)
    lam = doc["lambdas"]
    if not isinstance(lam, list) or not lam or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in lam):
        raise ParseError("lambdas must be a non-empty list of numbers")
    return Problem(lambdas=lam, mu=mu, mu_c=mu_c)


def load_rotations(path, fmt_hint):
    """Rotations to verify: a CSV matrix, a JSON matrix / {"R": ...}, or a catalog report."""
    text = _read(path)
    if fmt_hint == "csv" or path.endswith(".csv"):
        return [("R", read_csv_matrix(text, "R"))]
    doc = _load_json(text, path)
    if isinstance(doc, dict) and "points" in doc:
        return [(p["name"], _parse_matrix(p["rotation"], f"points[{i}].rotation")) for i, p in enumerate(doc["points"])]
    if isinstance(doc, dict) and "R" in doc:
        return [("R", _parse_matrix(doc["R"], "R"))]
    if isinstance(doc, list):
        return [("R", _parse_matrix(doc, "R"))]
    raise ParseError(f"{path}: expected a matrix, an object with key R, or a catalog report")


# ---------------------------------------------------------------- commands


def _provenance(args, command):
    return {
        "tool": "cosserat-critic",
        "version": __version__,
        "command": command,
        "tolerances": {
            "rotation": _numerics.ROTATION_TOL,
            "critical": args.tol_crit,
            "gate": _numerics.GATE_TOL,
            "coincident_rtol": _numerics.COINCIDENT_RTOL,
            "zero_rtol": _numerics.ZERO_RTOL,
            "grad": args.tol_grad,
            "match": args.tol_match,
        },
    }


def _regime_notes(regime, n):
    if regime == GRIOLI:
        return ["mu == mu_c (Grioli): no reduction; critical points are the rotations with F R^T symmetric"]
    if regime == MU_LT_MUC:
        notes = ["mu < mu_c: the energy scale mu^2/(mu - mu_c) is negative, minima and maxima of the reduced problem exchange"]
        if n % 2:
            notes.append("odd n with mu < mu_c: det F_hat < 0, no factorisation over SO(n); closed-form catalog unavailable")
        return notes
    return []


def cmd_reduce(prob, args):
    p = prob.params
    rep = {"problem": prob.describe(), "regime": p.regime, "notes": list(prob.notes)}
    if prob.F is None:
        rep["lambdas"] = _vector(prob.lambdas)
        rep["notes"].append("lambdas given directly: nothing to reduce")
        return rep
    red = reduce(prob.F, p)
    rep["det_F"] = red.det_F
    rep["notes"] += _regime_notes(p.regime, prob.n)
    if red.lambdas is not None:
        rep["scale"] = p.scale
        rep["lambdas"] = _vector(red.lambdas)
        rep["coincidences"] = list(red.coincidences())
        rep["product_identity_residual"] = red.product_identity_residual()
        rep["rotation_part"] = _matrix(red.rotation_part)
        rep["basis_change"] = _matrix(red.basis_change)
    return rep


def _point_record(pt, prob, red, n):
    R_bar = pt.rotation
    R = R_bar if red is None else red.from_reduced_rotation(R_bar)
    rec = {
        "name": pt.name,
        "base": pt.base,
        "rotation": _matrix(R),
        "reduced_rotation": _matrix(R_bar),
    }
    if n == 3 and pt.quaternion is not None:
        rec["quaternion"] = _vector(pt.quaternion)
    rec["reduced_energy"] = pt.energy
    if prob.F is not None:
        rec["energy"] = energy(R, prob.F, prob.params)
    rec["spectrum"] = _vector(pt.spectrum)
    if pt.printed_spectrum is not None:
        rec["printed_spectrum"] = _vector(pt.printed_spectrum)
    rec["label"] = pt.label
    rec["raw_label"] = pt.raw_label
    rec["global"] = pt.global_flag
    rec["criticality_residual"] = pt.residual
    rec["structural_zeros"] = pt.structural_zeros
    rec["member_of"] = list(pt.member_of)
    if pt.family is not None:
        fam = pt.family
        rec["family"] = {
            "name": fam.name,
            "kind": fam.kind,
            "dimension": fam.dimension,
            "parameterization": fam.parameterization,
            "representative_parameter": _param(pt.parameter),
            "samples": [
                {"parameter": _param(s.parameter), "quaternion": _vector(s.quaternion), "residual": s.residual, "energy": s.energy}
                for s in pt.samples
            ],
        }
    if pt.notes:
        rec["notes"] = list(pt.notes)
    return rec


def _param(x):
    if x is None:
        return None
    arr = np.asarray(x, dtype=float)
    return float(arr) if arr.ndim == 0 else _vector(arr)


def cmd_catalog(prob, args):
    n = prob.n
    if n not in (2, 3):
        raise ValidationError(
            f"closed-form catalogs exist for n = 2 and n = 3 only (got n = {n}); "
            "use `verify` to test criticality and classify any rotation for 2 <= n <= 8"
        )
    p = prob.params
    rep = {"problem": prob.describe(), "regime": p.regime, "notes": list(prob.notes)}
    red = None
    if prob.F is not None:
        if p.regime == GRIOLI:
            try:
                cat = catalog_grioli(prob.F, p)
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
            rep["notes"] += _regime_notes(p.regime, n) + list(cat.notes)
            rep["singular_values"] = _vector(cat.lambdas)
            rep["points"] = [_point_record(pt, prob, None, n) for pt in cat.points]
            return rep
        red = reduce(prob.F, p)
        if not red.F_hat_positive:
            raise ValidationError(" ".join(_regime_notes(p.regime, n)))
        lam, det_F = red.lambdas, red.det_F
    else:
        lam, det_F = prob.lambdas, 1.0
        rep["notes"].append("lambdas given directly: rotations are those of the reduced diagonal problem")
    rep["notes"] += _regime_notes(p.regime, n)
    try:
        cat = catalog(lam)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if p.regime == MU_LT_MUC:
        cat = transfer_labels(cat, p)
    fz = feasibility(lam, p, det_F=det_F) if p.regime != GRIOLI else None
    rep["lambdas"] = _vector(lam)
    rep["subcase"] = cat.subcase
    if fz is not None:
        rep["feasibility"] = {
            "product_lambda": fz.product_lambda,
            "required_value": fz.required_value,
            "expected_product": fz.expected_product,
            "identity_residual": fz.identity_residual,
            "identity_holds": fz.identity_holds,
            "physically_consistent": fz.physically_consistent,
            "note": fz.note,
        }
    rep["notes"] += list(cat.notes)
    rep["points"] = [_point_record(pt, prob, red, n) for pt in cat.points]
    return rep


def cmd_verify(prob, args):
    if args.rotation is None:
        raise ParseError("verify needs --rotation PATH (CSV matrix, JSON matrix, or a catalog report)")
    F, p = prob.solve_data()
    results = []
    for name, R in load_rotations(args.rotation, args.format):
        if R.shape != F.shape:
            raise ValidationError(f"{name}: rotation is {R.shape[0]}x{R.shape[1]}, problem is {F.shape[0]}x{F.shape[1]}")
        try:
            chk = is_critical(R, F, p, args.tol_crit)
        except NotARotationError as exc:
            raise ValidationError(f"{name}: {exc}") from None
        rec = {"name": name, "criticality_residual": chk.residual, "critical": bool(chk.critical), "energy": energy(R, F, p)}
        if chk.critical:
            h = restricted_hessian(R, F, p)
            zt = args.tol_zero if args.tol_zero is not None else default_zero_tol(h.spectrum)
            rec["spectrum"] = _vector(h.spectrum)
            rec["zero_tol"] = zt
            rec["label"] = classify(h.spectrum, zt)
        results.append(rec)
    rep = {"problem": prob.describe(), "notes": list(prob.notes), "results": results}
    if prob.F is None:
        rep["notes"].append("lambdas given directly: checked against the reduced energy W_{1,0}(R; diag(lambdas))")
    return rep


def cmd_solve(prob, args):
    F, p = prob.solve_data()
    try:
        cfg = SolverConfig(
            grad_tol=args.tol_grad, seed=args.seed, num_starts=args.starts, match_tol=args.tol_match
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    report = multistart(F, p, cfg)
    outcomes = []
    for i, o in enumerate(report.outcomes):
        outcomes.append(
            {
                "start": i,
                "matched": o.matched,
                "match_distance": o.match_distance,
                "status": o.status,
                "iterations": o.iterations,
                "grad_norm": o.grad_norm,
                "energy": o.energy,
                "rotation": _matrix(o.rotation),
                **({"diagnostics": o.diagnostics} if o.diagnostics else {}),
            }
        )
    return {
        "problem": prob.describe(),
        "notes": list(prob.notes) + _regime_notes(p.regime, prob.n),
        "config": {
            "seed": cfg.seed,
            "num_starts": cfg.num_starts,
            "max_iters": cfg.max_iters,
            "initial_step": cfg.initial_step,
            "backtrack": cfg.backtrack,
            "armijo": cfg.armijo,
            "grad_tol": cfg.grad_tol,
            "step_tol": cfg.step_tol,
            "match_tol": cfg.match_tol,
        },
        "hits": dict(sorted(report.hits.items())),
        "catalog_entries_not_reached": [c for c in report.catalog_names if c not in report.hits],
        "unmatched": list(report.unmatched),
        "not_converged": list(report.not_converged),
        "summary": report.summary(),
        "outcomes": outcomes,
    }


# ---------------------------------------------------------------- human output


def _table(rows, headers):
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    out = [line, "-" * len(line)]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def _vec_str(v):
    return "[" + ", ".join(fmt(x) for x in v) + "]"


def render(command, rep):
    lines = []
    for note in rep.get("notes", []):
        lines.append(f"note: {note}")
    if command == "reduce":
        lines.append(f"regime: {rep['regime']}")
        if "lambdas" in rep:
            lines.append(f"lambdas: {_vec_str(rep['lambdas'])}")
        if "product_identity_residual" in rep:
            lines.append(f"det F: {fmt(rep['det_F'])}")
            lines.append(f"product identity residual: {fmt(rep['product_identity_residual'])}")
    elif command == "catalog":
        lines.append(f"regime: {rep['regime']}")
        if "lambdas" in rep:
            lines.append(f"lambdas: {_vec_str(rep['lambdas'])}   subcase: {rep['subcase']}")
        if "feasibility" in rep:
            f = rep["feasibility"]
            lines.append(f"feasibility: consistent={f['physically_consistent']}  prod={fmt(f['product_lambda'])}  {f['note']}")
        rows = [
            [
                pt["name"],
                pt.get("family", {}).get("kind", "isolated"),
                fmt(pt.get("energy", pt["reduced_energy"])),
                pt["label"],
                pt["global"],
                _vec_str(pt["spectrum"]),
            ]
            for pt in rep["points"]
        ]
        spec_head = "spectrum (reduced problem)" if rep["problem"]["given"] == "F" else "spectrum"
        lines.append(_table(rows, ["name", "kind", "energy", "label", "global", spec_head]))
    elif command == "verify":
        rows = [
            [r["name"], str(r["critical"]), fmt(r["criticality_residual"]), r.get("label", "-"), _vec_str(r.get("spectrum", []))]
            for r in rep["results"]
        ]
        lines.append(_table(rows, ["rotation", "critical", "residual", "label", "spectrum"]))
    elif command == "solve":
        lines.append(rep["summary"])
        if rep["unmatched"]:
            lines.append("!!! UNMATCHED LIMITS: solver artifact or catalog gap !!!")
    return "\n".join(lines)


# ---------------------------------------------------------------- entry point

COMMANDS = {"reduce": cmd_reduce, "catalog": cmd_catalog, "verify": cmd_verify, "solve": cmd_solve}


def build_parser():
    ap = argparse.ArgumentParser(prog="cosserat-critic", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", metavar="PATH", required=True)
        sp.add_argument("--out", metavar="PATH", help="write the JSON report here")
        sp.add_argument("--format", choices=("json", "csv"), default="json", help="input format")
        sp.add_argument("--mu", type=float, help="overrides mu (required meaning for --format csv)")
        sp.add_argument("--mu-c", type=float, dest="mu_c")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--starts", type=int, default=200)
        sp.add_argument("--tol-grad", type=float, default=1e-8)
        sp.add_argument("--tol-crit", type=float, default=_numerics.CRITICAL_TOL)
        sp.add_argument("--tol-match", type=float, default=1e-5)
        sp.add_argument("--tol-zero", type=float, default=None, help="absolute zero tolerance for labels")
        if name == "verify":
            sp.add_argument("--rotation", metavar="PATH", help="CSV/JSON matrix or a catalog report")
    return ap


def main(argv=None, stdout=None, stderr=None):
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = build_parser().parse_args(argv)
    try:
        prob = load_problem(args)
        rep = COMMANDS[args.command](prob, args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=stderr)
        return EXIT_PARSE
    except (ValidationError, NotARotationError, NotSymmetricError, NotPositiveDefiniteError, SingularMatrixError) as exc:
        print(f"validation error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except CatalogInconsistency as exc:
        print(f"internal consistency check failed: {exc}", file=stderr)
        return 1
    rep["provenance"] = _provenance(args, args.command)
    print(render(args.command, rep), file=stdout)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(to_json(rep) + "\n")
    if args.command == "solve" and rep["unmatched"]:
        return EXIT_UNMATCHED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
