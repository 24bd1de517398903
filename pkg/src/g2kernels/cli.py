"""Command-line frontend.

Every subcommand prints one JSON document on stdout.  Exit codes: 0 for a
passing verdict, 1 for a failing one (not_psd, not quasi-invariant,
inequivalent), 2 for usage errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .automorphisms import AutomorphismMap, G2Point, random_moebius, to_fundamental
from .curvature import (
    FDOptions,
    bergman_curvature,
    curvature_numeric,
    det_curvature,
)
from .errors import DomainError, NumericalError
from .homogeneity import (
    MultiplierSpec,
    curvature_criterion,
    default_multiplier,
    factorization_test,
    quasi_invariance_residual,
    reconstruct_from_fundamental,
)
from .invariants import (
    audit,
    classify,
    format_module,
    ke_test,
    parse_module,
    signature,
)
from .kernels import (
    EvalOptions,
    WeightedBergman,
    eval_kernel,
    format_spec,
    is_matrix_valued,
    parse_spec,
)
from .psd import SampleSet, gram, psd_check, wallach_probe

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 7


# ----------------------------------------------------------------------------
# output


def _num(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{to_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _point_json(p) -> dict:
    return {
        "u1_re": complex(p[0]).real,
        "u1_im": complex(p[0]).imag,
        "u2_re": complex(p[1]).real,
        "u2_im": complex(p[1]).imag,
    }


def _matrix_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _write_csv(path, header, rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(x) if isinstance(x, float) else x for x in row])


# ----------------------------------------------------------------------------
# argument helpers


def parse_point(text: str) -> G2Point:
    """``"re1,im1,re2,im2"`` or the real shorthand ``"u1,u2"``."""
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from None
    if len(vals) == 4:
        return G2Point(complex(vals[0], vals[1]), complex(vals[2], vals[3]))
    if len(vals) == 2:
        return G2Point(complex(vals[0]), complex(vals[1]))
    raise argparse.ArgumentTypeError(f"expected 2 or 4 numbers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _eval_opts(args) -> EvalOptions:
    if getattr(args, "series_eps", None) is None:
        return EvalOptions()
    return EvalOptions(series_threshold=args.series_eps)


def _fd_opts(args) -> FDOptions:
    if getattr(args, "fd_step", None) is None:
        return FDOptions()
    return FDOptions(step=args.fd_step)


def _sample(args, default_n: int) -> SampleSet:
    if args.points is not None:
        return SampleSet.from_file(args.points)
    if args.grid is not None:
        return SampleSet.grid(args.grid)
    n = args.random if args.random is not None else default_n
    return SampleSet.random(n, args.seed)


def _add_sample_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--points", metavar="FILE", help="CSV of re(u1),im(u1),re(u2),im(u2)")
    g.add_argument("--grid", type=int, metavar="N", help="N points from a polar grid")
    g.add_argument("--random", type=int, metavar="N", help="N seeded random points")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _add_numeric_args(p):
    p.add_argument("--fd-step", type=float, default=None)
    p.add_argument("--series-eps", type=float, default=None)


# ----------------------------------------------------------------------------
# subcommands


def cmd_eval(args):
    spec = parse_spec(args.kernel)
    v = args.v if args.v is not None else args.u
    val = np.asarray(eval_kernel(spec, args.u, v, _eval_opts(args)))
    if val.ndim == 0:
        out = {"value_re": complex(val).real, "value_im": complex(val).imag}
    else:
        out = {"value_re": val.real.tolist(), "value_im": val.imag.tolist()}
    return out, EXIT_PASS, None


def cmd_curvature(args):
    spec = parse_spec(args.kernel)
    out = {"kernel": format_spec(spec), "u": _point_json(args.u), "method": args.method}
    if args.method == "paper":
        if not isinstance(spec, WeightedBergman):
            raise DomainError("--method paper needs a bergman kernel")
        K = bergman_curvature(spec.lam, args.u)
    else:
        K = curvature_numeric(spec, args.u, _fd_opts(args), _eval_opts(args))
    out["curvature"] = _matrix_json(K.entries)
    out["eigenvalues"] = K.eigenvalues().tolist()
    out["det"] = K.det
    out["error_estimate"] = K.error_estimate
    if isinstance(spec, WeightedBergman):
        out["det_curvature"] = det_curvature(spec.lam, args.u, args.method)
    return out, EXIT_PASS, None


def _psd_json(rep) -> dict:
    return {
        "n": rep.n,
        "min_eig": rep.min_eig,
        "max_eig": rep.max_eig,
        "verdict": rep.verdict,
        "tol": rep.tol,
    }


def cmd_psd(args):
    spec = parse_spec(args.kernel)
    sample = _sample(args, 15)
    G = gram(spec, sample, _eval_opts(args))
    rep = psd_check(G, args.tol)
    out = {"kernel": format_spec(spec), "scheme": sample.scheme, "seed": sample.seed}
    out.update(_psd_json(rep))
    if rep.verdict == "psd":
        out["note"] = "consistent with non-negative definiteness on this sample"
    eig = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    rows = [(k, float(e)) for k, e in enumerate(eig)]
    return out, EXIT_PASS if rep.verdict == "psd" else EXIT_FAIL, (("index", "eigenvalue"), rows)


def cmd_wallach(args):
    sample = _sample(args, 8)
    res = wallach_probe(args.lam, args.nu_grid, sample, args.tol, _eval_opts(args))
    rows = [dict(nu=nu, **_psd_json(rep)) for nu, rep in res]
    out = {"lambda": args.lam, "scheme": sample.scheme, "seed": sample.seed, "rows": rows}
    code = EXIT_PASS if all(r["verdict"] == "psd" for r in rows) else EXIT_FAIL
    csv_rows = [(r["nu"], r["min_eig"], r["max_eig"], r["verdict"]) for r in rows]
    return out, code, (("nu", "min_eig", "max_eig", "verdict"), csv_rows)


def _report_json(rep) -> dict:
    return {
        "max_relative_residual": rep.max_relative_residual,
        "argmax_points": [_point_json(p) for p in rep.argmax_points],
        "trials": rep.trials,
        "seed": rep.seed,
    }


def cmd_homogeneity(args):
    spec = parse_spec(args.kernel)
    if is_matrix_valued(spec):
        raise DomainError("homogeneity checks need a scalar kernel")
    if args.exponent is None:
        mult = default_multiplier(spec)
        if args.jacobian_power is not None:
            mult = MultiplierSpec(mult.kappa, args.jacobian_power)
    else:
        mult = MultiplierSpec(args.exponent, args.jacobian_power or 0.0)
    sample = _sample(args, 20)
    pts = sample.points
    n = len(pts)
    pairs = [(pts[k], pts[(k + 1) % n]) for k in range(n)]
    rng = np.random.default_rng(args.seed)
    opts = _eval_opts(args)
    qi = fac = None
    for pair in pairs:
        g = AutomorphismMap(random_moebius(rng))
        r1 = quasi_invariance_residual(spec, mult, g, [pair], opts)
        r2 = factorization_test(spec, g, [pair], opts=opts)
        qi = r1 if qi is None else qi.merge(r1)
        fac = r2 if fac is None else fac.merge(r2)
    qi = qi._replace(seed=args.seed)
    fac = fac._replace(seed=args.seed)
    ok = qi.max_relative_residual <= args.tol
    out = {
        "kernel": format_spec(spec),
        "multiplier": {"kappa": mult.kappa, "jacobian_power": mult.jacobian_power},
        "quasi_invariance": _report_json(qi),
        "factorization": _report_json(fac),
        "tol": args.tol,
    }
    if args.r_grid is not None:
        cc = curvature_criterion(spec, args.r_grid, "numeric", _fd_opts(args), opts)
        out["curvature_criterion"] = _report_json(cc)
    out["verdict"] = "quasi_invariant" if ok else "not_quasi_invariant"
    return out, EXIT_PASS if ok else EXIT_FAIL, None


def cmd_fundamental(args):
    dec = to_fundamental(args.u, swap=args.swap)
    b = dec.g.base
    out = {
        "r": dec.r,
        "theta": dec.theta,
        "g": {"t_re": b.t.real, "t_im": b.t.imag, "alpha_re": b.alpha.real, "alpha_im": b.alpha.imag},
        "preimage": {
            "z1_re": dec.preimage[0].real,
            "z1_im": dec.preimage[0].imag,
            "z2_re": dec.preimage[1].real,
            "z2_im": dec.preimage[1].imag,
        },
    }
    if args.kernel is not None:
        spec = parse_spec(args.kernel)
        opts = _eval_opts(args)

        def on_lambda(r):
            p = G2Point(complex(r), 0j)
            return complex(eval_kernel(spec, p, p, opts)).real

        out["kernel"] = format_spec(spec)
        out["reconstructed"] = reconstruct_from_fundamental(on_lambda, default_multiplier(spec), args.u)
        out["direct"] = complex(eval_kernel(spec, args.u, args.u, opts)).real
    return out, EXIT_PASS, None


def cmd_invariants(args):
    m = parse_module(args.module)
    s = signature(m)
    out = {
        "module": format_module(m),
        "family": s.family,
        "closed_pair": list(s.closed_pair),
        "numeric_diagonal_exponent": s.numeric_diagonal_exponent,
        "reference_exponents": s.reference_exponents,
    }
    return out, EXIT_PASS, None


def cmd_classify(args):
    a, b = parse_module(args.a), parse_module(args.b)
    res = classify(a, b)
    out = {"a": format_module(a), "b": format_module(b), "verdict": res.verdict, "witness": res.witness}
    return out, EXIT_PASS if res.verdict == "equivalent" else EXIT_FAIL, None


def cmd_ke(args):
    points = args.u or [G2Point(0.2 + 0j, 0j), G2Point(0.6 + 0j, 0j)]
    rep = ke_test(args.lam, points, args.exponent)
    out = {
        "lambda": args.lam,
        "control_exponent": args.exponent,
        "points": [
            {"u": _point_json(p), "ratios_re": [complex(x).real for x in rho], "ratios_im": [complex(x).imag for x in rho]}
            for p, rho in rep.c_estimates
        ],
        "max_ratio_spread": rep.max_ratio_spread,
        "verdict": rep.verdict,
    }
    return out, EXIT_PASS, None


def cmd_audit(args):
    rows = audit(args.lam, args.r_grid, args.nu)
    out = {
        "lambda": args.lam,
        "nu": args.nu,
        "rows": [r._asdict() for r in rows],
    }
    header = ("formula", "r", "paper_value", "oracle_value", "relative_gap")
    return out, EXIT_PASS, (header, [tuple(r) for r in rows])


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="g2kernels", description="Reproducing kernels on the symmetrized bidisc")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("--csv", metavar="PATH", help="also write a CSV table")
        return p

    p = add("eval", cmd_eval, "evaluate a kernel at (u, v)")
    p.add_argument("--kernel", required=True)
    p.add_argument("--u", type=parse_point, required=True)
    p.add_argument("--v", type=parse_point)
    _add_numeric_args(p)

    p = add("curvature", cmd_curvature, "curvature matrix at u")
    p.add_argument("--kernel", required=True)
    p.add_argument("--u", type=parse_point, required=True)
    p.add_argument("--method", choices=["oracle", "paper"], default="oracle")
    _add_numeric_args(p)

    p = add("psd", cmd_psd, "Gram-matrix positivity on a sample")
    p.add_argument("--kernel", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    _add_sample_args(p)
    _add_numeric_args(p)

    p = add("wallach", cmd_wallach, "PSD scan of (B^(lambda))^nu over nu")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--nu-grid", type=_floats, default=[0.5, 1.0, 2.0, 3.0])
    p.add_argument("--tol", type=float, default=1e-9)
    _add_sample_args(p)
    _add_numeric_args(p)

    p = add("homogeneity", cmd_homogeneity, "quasi-invariance and factorization residuals")
    p.add_argument("--kernel", required=True)
    p.add_argument("--exponent", type=float, help="kappa; defaults to the family's exponent")
    p.add_argument("--jacobian-power", type=float)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--r-grid", type=_floats, help="also run the curvature criterion on these r")
    _add_sample_args(p)
    _add_numeric_args(p)

    p = add("fundamental", cmd_fundamental, "decompose u = g(r, 0)")
    p.add_argument("--u", type=parse_point, required=True)
    p.add_argument("--swap", action="store_true", help="use the other root ordering")
    p.add_argument("--kernel", help="also reconstruct K(u, u) from the fundamental set")
    _add_numeric_args(p)

    p = add("invariants", cmd_invariants, "invariant signature of a module")
    p.add_argument("--module", required=True, help='e.g. "w:l=2,nu=1" or "d:l=1,nu=0"')

    p = add("classify", cmd_classify, "decide unitary equivalence of two modules")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = add("ke", cmd_ke, "Kaehler-Einstein test of the weighted Bergman metric")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--u", type=parse_point, action="append", help="repeatable")
    p.add_argument("--exponent", type=float, help="control: replace det by B^c")

    p = add("audit", cmd_audit, "published formulas against oracles")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--r-grid", type=_floats, default=[0.0, 0.2, 0.4, 0.6, 0.8])
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        out, code, table = args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(to_json(out))
    if args.csv and table is not None:
        _write_csv(args.csv, *table)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))
