"""Command line: ``landaunf <command> --input problem.yaml [flags]``.

Exit status is 0 on success, 1 for invalid input and 2 when a computation
fails.  Structured output is JSON with sorted keys, so a fixed input and seed
give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Callable

from . import __version__
from .adapted import AdaptError, adapt, classify_resonances, numeric_jordan
from .homological import quadratic_data
from .invariants import AmbiguousBasis, MIBError, NotExpressible, p_matrix
from .linalg import InconsistentSystemError
from .orbit import (
    OrbitGradientSystem,
    SearchConfig,
    critical_points,
    orbit_gradient_system,
    singular_locus,
    transport_critical_points,
    verify_equivalence,
)
from .pipeline import ConfigurationError, PipelineInvariantError, ReductionReport, run_reduction
from .poly import NotNearIdentityError, series_invert
from .problem import BuiltProblem, ProblemError, load_problem, parse_number

COMMANDS = ("validate", "pmatrix", "reduce", "adapt", "critical", "verify", "invert")
INPUT_ERRORS = (ProblemError, ConfigurationError, MIBError, NotExpressible, AmbiguousBasis, NotNearIdentityError)


class MissingParameters(ValueError):
    pass


# helpers ----------------------------------------------------------------
def parse_params(text: str | None) -> dict[str, Fraction]:
    """``c1=-3,c2=1/2`` -> {'c1': Fraction(-3), 'c2': Fraction(1, 2)}."""
    out: dict[str, Fraction] = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ProblemError(f"--params: expected name=value, got '{item}'")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_number(v)
    return out


def _num(v) -> str:
    return str(v)


def _float(v: float) -> float:
    # normalise -0.0 so that output bytes do not depend on rounding noise
    return 0.0 if v == 0 else float(v)


def _matrix(M) -> list[list[str]]:
    return [[str(v) for v in row] for row in M]


def _need_params(bp: BuiltProblem, params: dict, names) -> dict:
    ext = set(bp.field.extension_names())
    missing = sorted(n for n in names if n not in params and n not in ext)
    if missing:
        raise MissingParameters(f"numeric values needed for {', '.join(missing)} (use --params or options.numeric_params)")
    return params


# commands ---------------------------------------------------------------
def cmd_validate(bp: BuiltProblem, args) -> tuple[dict, int]:
    B = bp.mib
    problems = B.validate(bp.group)
    if bp.group is not None:
        from .invariants import check_invariance

        if not check_invariance(B.expand(bp.potential), bp.group):
            problems.append("potential is not invariant under the group generators")
    try:
        p_matrix(B)
    except MIBError as exc:
        problems.append(str(exc))
    rep = {
        "command": "validate",
        "variables": list(B.xring.names),
        "invariants": [{"name": i.name, "definition": str(i.definition), "degree": i.degree} for i in B.invariants],
        "quadratic_invariants": B.s,
        "syzygy_rules": [r.describe(B.jring) for r in B.rules],
        "term_order": [B.names[i] for i in B.term_order] if B.term_order else [],
        "potential": str(bp.potential),
        "truncation_degree": bp.degree,
        "problems": problems,
        "warnings": bp.warnings + bp.landau().warnings,
        "valid": not problems,
    }
    return rep, 0 if not problems else 1


def cmd_pmatrix(bp: BuiltProblem, args) -> tuple[dict, int]:
    B = bp.mib
    P = p_matrix(B)
    data = quadratic_data(bp.potential, B, P)
    s = B.s
    P0 = [[str(P[a, b].component(2)) for b in range(s)] for a in range(s)]
    K = {B.names[g]: _matrix(data.K[g]) for g in range(B.r) if any(v for row in data.K[g] for v in row)}
    rep = {
        "command": "pmatrix",
        "invariants": list(B.names),
        "P": P.rows(),
        "P0": P0,
        "K": K,
        "c": [str(v) for v in data.c],
        "Q": _matrix(data.Q),
    }
    return rep, 0


def reduction_dict(rep: ReductionReport) -> dict:
    B = rep.problem.mib
    steps = []
    for st in rep.steps:
        h = st.homological
        steps.append(
            {
                "order": st.order,
                "degree": h.degree,
                "basis": [B.jring.monomial(e).__str__() for e in h.basis],
                "chi": str(h.chi),
                "generator": str(st.generator),
                "retained_monomials": [B.jring.monomial(e).__str__() for e in h.retained_monomials],
                "retained": str(st.retained),
                "ledger": [str(f) for f in st.ledger],
            }
        )
    return {
        "original": str(rep.original),
        "reduced": str(rep.reduced),
        "reduced_x": str(rep.reduced_x()),
        "steps": steps,
        "forward_map": [str(c) for c in rep.forward_map.components],
        "inverse_map": [str(c) for c in rep.inverse_map.components],
        "ledger": [str(f) for f in rep.ledger],
        "parameters": {
            "original": rep.original_parameter_count,
            "retained": rep.retained_parameter_count,
            "eliminated": rep.eliminated_count,
        },
        "warnings": rep.warnings,
    }


def _run(bp: BuiltProblem, args) -> ReductionReport:
    return run_reduction(bp.landau(args.degree))


def cmd_reduce(bp: BuiltProblem, args) -> tuple[dict, int]:
    rep = _run(bp, args)
    diff = rep.original_x().compose(rep.inverse_map.components, rep.inverse_map.trunc) - rep.reduced_x()
    out = {"command": "reduce", "truncation_degree": rep.problem.degree, **reduction_dict(rep)}
    out["exact"] = diff.is_zero()
    return out, 0 if diff.is_zero() else 2


def cmd_adapt(bp: BuiltProblem, args) -> tuple[dict, int]:
    B = bp.mib
    data = quadratic_data(bp.potential, B)
    A = bp.adapt_matrix()
    params = bp.numeric_params(parse_params(args.params))
    if A is not None:
        basis = adapt(data.Q, A, bp.field, B)
        source = "adapt_matrix"
    else:
        try:
            basis = adapt(data.Q, [[bp.field.one if i == j else bp.field.zero for j in range(B.s)] for i in range(B.s)], bp.field, B)
            source = "identity"
        except AdaptError:
            _need_params(bp, params, sorted({n for row in data.Q for v in row for n in v.free_symbols()}))
            basis = numeric_jordan(data.Q, params, bp.field, B)
            source = "numeric"
    D = args.degree or bp.degree
    table = []
    if basis.exact:
        for d in range(3, D + 1):
            for rc in classify_resonances(basis, B, d):
                table.append(
                    {
                        "degree": d,
                        "monomial": rc.label,
                        "k": list(rc.k),
                        "weight": str(rc.weight),
                        "verdict": rc.verdict,
                        "factors": [str(f) for f in rc.factors],
                    }
                )
    rep: dict[str, Any] = {
        "command": "adapt",
        "source": source,
        "exact": basis.exact,
        "Q": _matrix(data.Q),
        "notes": basis.notes,
    }
    if basis.exact:
        rep.update(
            {
                "A": _matrix(basis.A),
                "P": _matrix(basis.P),
                "P_s": _matrix(basis.P_s),
                "P_n": _matrix(basis.P_n),
                "semisimple": basis.semisimple,
                "eigenvalues": [str(e) for e in basis.eigenvalues],
                "adapted_invariants": [str(z) for z in basis.z_definitions()],
                "resonances": table,
            }
        )
    else:
        rep["eigenvalues"] = [_complex_str(e) for e in basis.eigenvalues]
    return rep, 0


def _complex_str(e) -> str:
    import mpmath

    re_, im = mpmath.re(e), mpmath.im(e)
    s = mpmath.nstr(re_, 30)
    if abs(im) > mpmath.mpf(10) ** (-40):
        s += (" + " if im > 0 else " - ") + mpmath.nstr(abs(im), 30) + "*i"
    return s


def _search_config(args) -> SearchConfig:
    return SearchConfig(seed=args.seed if args.seed is not None else 0)


def _orbit_dict(og: OrbitGradientSystem) -> dict:
    return {
        "equations": [str(e) for e in og.equations],
        "solutions": {s.variable: [str(b) for b in s.branches] for s in og.solutions},
        "unsolved": [str(e) for e in og.unsolved],
        "inconsistent": [f"{c} = 0" for c in og.inconsistent],
    }


def cmd_critical(bp: BuiltProblem, args) -> tuple[dict, int]:
    B = bp.mib
    params = bp.numeric_params(parse_params(args.params))
    if args.reduced:
        rep = _run(bp, args)
        pot_j = rep.reduced
    else:
        pot_j = bp.potential.with_trunc(args.degree or bp.degree)
    pot_x = B.expand(pot_j)
    _need_params(bp, params, pot_x.free_symbols())
    pts = critical_points(pot_x, params, _search_config(args), B, bp.group, bp.generator_labels)
    sl = singular_locus(B)
    rep = {
        "command": "critical",
        "potential": str(pot_j),
        "params": {k: _num(v) for k, v in sorted(params.items())},
        "critical_points": [
            {
                "x": [_float(v) for v in cp.x],
                "J": [_float(v) for v in cp.J_values],
                "gradient_norm": _float(cp.gradient_norm),
                "hessian_eigenvalues": [_float(v) for v in cp.hessian_eigenvalues],
                "stability": cp.stability,
                "isotropy": cp.isotropy,
                "stabilizer_order": cp.stabilizer_order,
            }
            for cp in pts
        ],
        "orbit_space": _orbit_dict(orbit_gradient_system(pot_j, B)),
        "singular_locus": sl.describe(),
    }
    return rep, 0


def cmd_verify(bp: BuiltProblem, args) -> tuple[dict, int]:
    rep = _run(bp, args)
    orig, red = rep.original_x(), rep.reduced_x()
    seed = args.seed if args.seed is not None else bp.source.options.get("seed", 0)
    er = verify_equivalence(
        orig,
        red,
        rep.inverse_map,
        trials=args.trials,
        seed=seed,
        radius=args.radius,
        ledger=rep.ledger.items(),
        quadratic=bp.quadratic_names(),
    )
    out: dict[str, Any] = {
        "command": "verify",
        "reduced": str(rep.reduced),
        "symbolic": {"ok": er.symbolic_ok, "nonzero_terms": er.symbolic_nonzero_terms},
        "numeric": {
            "ok": er.numeric_ok,
            "trials": er.numeric_trials,
            "radius": args.radius,
            "worst_ratio": _float(er.numeric_worst_ratio),
            "redraws": er.redraws,
            "params": er.params_used,
        },
    }
    params = bp.numeric_params(parse_params(args.params))
    needed = orig.free_symbols() | red.free_symbols()
    for c in rep.inverse_map.components:
        needed |= c.free_symbols()
    ext = set(bp.field.extension_names())
    if params and not (needed - set(params) - ext):
        tr = transport_critical_points(orig, red, rep.inverse_map, params, _search_config(args))
        out["transport"] = [
            {k: ([_float(x) for x in v] if isinstance(v, list) else (_float(v) if isinstance(v, float) else v)) for k, v in t.items()}
            for t in tr
        ]
    ok = er.ok
    return out, 0 if ok else 2


def cmd_invert(bp: BuiltProblem, args) -> tuple[dict, int]:
    m = bp.map()
    if m is None:
        raise ProblemError("invert needs options.map")
    D = args.degree or bp.degree
    m = m.truncate(D)
    inv = series_invert(m)
    roundtrip = m.compose(inv)
    ok = all((c - x).is_zero() for c, x in zip(roundtrip.components, bp.xring.gens(D)))
    rep = {
        "command": "invert",
        "truncation_degree": D,
        "map": [str(c) for c in m.components],
        "inverse": [str(c) for c in inv.components],
        "round_trip_identity": ok,
    }
    return rep, 0 if ok else 2


HANDLERS: dict[str, Callable] = {
    "validate": cmd_validate,
    "pmatrix": cmd_pmatrix,
    "reduce": cmd_reduce,
    "adapt": cmd_adapt,
    "critical": cmd_critical,
    "verify": cmd_verify,
    "invert": cmd_invert,
}


# text rendering ---------------------------------------------------------
def render_text(rep: dict) -> str:
    lines: list[str] = []

    def emit(key: str, value, indent: int = 0):
        pad = "  " * indent
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            for k in value:
                emit(k, value[k], indent + 1)
        elif isinstance(value, list) and value and all(isinstance(v, list) for v in value):
            lines.append(f"{pad}{key}:")
            for row in value:
                lines.append(f"{pad}  [" + ", ".join(str(v) for v in row) + "]")
        elif isinstance(value, list) and value and any(isinstance(v, dict) for v in value):
            lines.append(f"{pad}{key}:")
            for i, v in enumerate(value):
                emit(f"[{i + 1}]", v, indent + 1)
        elif isinstance(value, list):
            if len(value) <= 1 or sum(len(str(v)) for v in value) < 60:
                lines.append(f"{pad}{key}: [" + ", ".join(str(v) for v in value) + "]")
            else:
                lines.append(f"{pad}{key}:")
                for v in value:
                    lines.append(f"{pad}  {v}")
        else:
            lines.append(f"{pad}{key}: {value}")

    for k, v in rep.items():
        emit(k, v)
    return "\n".join(lines) + "\n"


def render(rep: dict, fmt: str) -> str:
    if fmt == "structured":
        return json.dumps(rep, sort_keys=True, indent=2, ensure_ascii=True) + "\n"
    return render_text(rep)


# entry point ------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landaunf", description="Normal forms of invariant Landau potentials")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", "-i", required=True, help="problem file (YAML); '-' reads stdin")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--degree", type=int, help="override the truncation degree")
    p.add_argument("--params", help="numeric parameters, e.g. c1=-3,c2=1")
    p.add_argument("--seed", type=int)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--reduced", action="store_true", help="critical: analyse the reduced potential")
    return p


def run_command(cmd: str, text: str, argv: list[str] | None = None) -> tuple[dict, int]:
    """Library entry: run ``cmd`` on problem text with CLI-style flags."""
    args = build_parser().parse_args([cmd, "--input", "-"] + list(argv or []))
    bp = load_problem(text)
    return HANDLERS[cmd](bp, args)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.degree is not None and (args.degree < 2 or args.degree % 2):
            raise ProblemError(f"--degree must be an even integer >= 2, got {args.degree}")
        bp = load_problem(text)
        rep, code = HANDLERS[args.command](bp, args)
    except (*INPUT_ERRORS, MissingParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PipelineInvariantError, AdaptError, InconsistentSystemError, ArithmeticError, KeyError, RuntimeError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2
    out = render(rep, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
