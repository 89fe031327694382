"""Problem files: YAML layout, located diagnostics, validation and printing.

The file layout is documented in docs/FORMATS.md.  Parsing happens in two
stages: ``parse_problem`` checks structure and returns a :class:`ProblemFile`
of plain strings and numbers; ``build_problem`` turns that into the algebraic
objects and reports unknown identifiers with their line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any

import yaml

from . import expr as _expr
from .field import CoefficientField, ParamSymbol, RationalFunction
from .invariants import MIB, GroupPresentation, Invariant, MIBError
from .pipeline import LandauProblem, ProblemOptions
from .poly import Poly, PolyMap, PolyRing

PARAMETER_KINDS = {
    "quadratic": "quadratic-coefficient",
    "higher": "higher-coefficient",
    "auxiliary": "auxiliary",
}
TOP_KEYS = (
    "variables",
    "parameters",
    "extensions",
    "abbreviations",
    "group",
    "invariants",
    "syzygies",
    "potential",
    "truncation_degree",
    "options",
)
OPTION_KEYS = ("top_order_target", "kernel", "route", "adapt_matrix", "numeric_params", "seed", "map")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class ProblemError(ValueError):
    """Invalid problem file; ``line``/``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)


class Loc(str):
    """A string scalar that remembers where it came from."""

    line: int | None
    column: int | None
    quoted: bool

    def __new__(cls, value: str, line=None, column=None, quoted=False):
        obj = super().__new__(cls, value)
        obj.line = line
        obj.column = column
        obj.quoted = quoted
        return obj


def _where(node) -> tuple[int | None, int | None]:
    if node is None:
        return None, None
    return node.start_mark.line + 1, node.start_mark.column + 1


def _fail(msg: str, node=None):
    line, col = _where(node)
    raise ProblemError(msg, line, col)


def _construct(node) -> Any:
    """Plain data from a YAML node; string scalars become :class:`Loc`."""
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = _construct(k)
            if not isinstance(key, str):
                _fail("mapping keys must be strings", k)
            if key in out:
                _fail(f"duplicate key '{key}'", k)
            out[Loc(key, *_where(k))] = _construct(v)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v) for v in node.value]
    value = node.value
    line, col = _where(node)
    if node.style in ("'", '"'):
        return Loc(value, line, col, quoted=True)
    tag = node.tag
    if tag.endswith(":int"):
        return int(value.replace("_", ""))
    if tag.endswith(":null"):
        return None
    if tag.endswith(":bool"):
        return value.lower() in ("true", "yes", "on")
    if tag.endswith(":float"):
        return Loc(value, line, col)
    return Loc(value, line, col)


def _loc_of(value) -> tuple[int | None, int | None]:
    if isinstance(value, Loc):
        return value.line, value.column
    return None, None


def _expr_error(text: Loc | str, pos: int, msg: str) -> ProblemError:
    line, col = _loc_of(text)
    if line is not None and "\n" not in text:
        col = col + pos + (1 if getattr(text, "quoted", False) else 0)
    return ProblemError(msg, line, col)


@dataclass
class ExtensionSpec:
    symbol: str
    relation: str


@dataclass
class GeneratorSpec:
    name: str
    matrix: list[list[str]]


@dataclass
class InvariantSpec:
    name: str
    expr: str
    degree: int


@dataclass
class ProblemFile:
    variables: list[str]
    parameters: dict[str, list[str]]
    invariants: list[InvariantSpec]
    potential: str
    truncation_degree: int
    extensions: list[ExtensionSpec] = dc_field(default_factory=list)
    abbreviations: dict[str, str] = dc_field(default_factory=dict)
    group: list[GeneratorSpec] = dc_field(default_factory=list)
    syzygies: list[str] = dc_field(default_factory=list)
    options: dict[str, Any] = dc_field(default_factory=dict)

    def plain(self) -> dict:
        """Structure with plain builtins (for comparisons and printing)."""
        return _plain(
            {
                "variables": self.variables,
                "parameters": self.parameters,
                "extensions": [{"symbol": e.symbol, "relation": e.relation} for e in self.extensions],
                "abbreviations": self.abbreviations,
                "group": [{"name": g.name, "matrix": g.matrix} for g in self.group],
                "invariants": [{"name": i.name, "expr": i.expr, "degree": i.degree} for i in self.invariants],
                "syzygies": self.syzygies,
                "potential": self.potential,
                "truncation_degree": self.truncation_degree,
                "options": self.options,
            }
        )

    def __eq__(self, other):
        return isinstance(other, ProblemFile) and self.plain() == other.plain()


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, str):
        return str(v)
    return v


def _need(data: dict, key: str, root):
    if key not in data:
        _fail(f"missing required key '{key}'", root)
    return data[key]


def _ident_list(value, what: str, node) -> list[str]:
    if not isinstance(value, list):
        _fail(f"{what} must be a list", node)
    out = []
    for v in value:
        if not isinstance(v, str) or not _IDENT.match(v):
            line, col = _loc_of(v)
            raise ProblemError(f"{what}: '{v}' is not an identifier", line, col)
        out.append(str(v))
    return out


def _scalar_text(v, what: str) -> str:
    if isinstance(v, bool) or v is None:
        raise ProblemError(f"{what}: expected an expression")
    if isinstance(v, int):
        return Loc(str(v))
    if isinstance(v, str):
        return v
    line, col = _loc_of(v)
    raise ProblemError(f"{what}: expected an expression", line, col)


def parse_problem(text: str) -> ProblemFile:
    """Structural parse with line/column diagnostics."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ProblemError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    if root is None or not isinstance(root, yaml.MappingNode):
        raise ProblemError("problem file must be a mapping", 1, 1)
    data = _construct(root)
    for k in data:
        if k not in TOP_KEYS:
            raise ProblemError(f"unknown key '{k}'", k.line, k.column)

    variables = _ident_list(_need(data, "variables", root), "variables", root)
    params_raw = data.get("parameters") or {}
    if not isinstance(params_raw, dict):
        _fail("parameters must be a mapping from kind to list", root)
    parameters = {}
    for kind, names in params_raw.items():
        if kind not in PARAMETER_KINDS:
            raise ProblemError(f"unknown parameter kind '{kind}' (use {', '.join(PARAMETER_KINDS)})", kind.line, kind.column)
        parameters[str(kind)] = _ident_list(names or [], f"parameters.{kind}", root)

    extensions = []
    for e in data.get("extensions") or []:
        if not isinstance(e, dict) or set(e) != {"symbol", "relation"}:
            _fail("each extension needs exactly 'symbol' and 'relation'", root)
        sym = _ident_list([e["symbol"]], "extension symbol", root)[0]
        extensions.append(ExtensionSpec(sym, _scalar_text(e["relation"], f"relation for {sym}")))

    abbreviations = {}
    for k, v in (data.get("abbreviations") or {}).items():
        if not _IDENT.match(k):
            raise ProblemError(f"abbreviation '{k}' is not an identifier", k.line, k.column)
        abbreviations[str(k)] = _scalar_text(v, f"abbreviation {k}")

    group = []
    for k, g in enumerate(data.get("group") or []):
        if isinstance(g, dict):
            name = str(g.get("name", f"g{k + 1}"))
            mat = g.get("matrix")
        else:
            name, mat = f"g{k + 1}", g
        if not isinstance(mat, list) or not all(isinstance(row, list) for row in mat):
            _fail(f"group generator {name}: matrix must be a list of rows", root)
        group.append(GeneratorSpec(name, [[_scalar_text(v, f"generator {name}") for v in row] for row in mat]))

    invariants = []
    for item in _need(data, "invariants", root):
        if not isinstance(item, dict) or not {"name", "expr", "degree"} <= set(item):
            _fail("each invariant needs 'name', 'expr' and 'degree'", root)
        deg = item["degree"]
        if not isinstance(deg, int) or isinstance(deg, bool) or deg < 1:
            line, col = _loc_of(item["name"])
            raise ProblemError(f"invariant {item['name']}: degree must be a positive integer", line, col)
        name = _ident_list([item["name"]], "invariant name", root)[0]
        invariants.append(InvariantSpec(name, _scalar_text(item["expr"], f"invariant {name}"), deg))

    syzygies = [_scalar_text(s, "syzygy") for s in data.get("syzygies") or []]
    potential = _scalar_text(_need(data, "potential", root), "potential")
    D = _need(data, "truncation_degree", root)
    if not isinstance(D, int) or isinstance(D, bool):
        _fail("truncation_degree must be an integer", root)
    if D % 2 or D < 2:
        line = next((k.line for k in data if k == "truncation_degree"), None)
        raise ProblemError(f"truncation_degree must be an even integer >= 2, got {D}", line, 1)

    options = data.get("options") or {}
    if not isinstance(options, dict):
        _fail("options must be a mapping", root)
    for k in options:
        if k not in OPTION_KEYS:
            raise ProblemError(f"unknown option '{k}'", k.line, k.column)
    opts: dict[str, Any] = {}
    for k, v in options.items():
        if k in ("top_order_target", "kernel", "route"):
            opts[str(k)] = str(v)
        elif k == "seed":
            if not isinstance(v, int) or isinstance(v, bool):
                raise ProblemError("seed must be an integer", k.line, k.column)
            opts["seed"] = v
        elif k == "numeric_params":
            if not isinstance(v, dict):
                raise ProblemError("numeric_params must be a mapping", k.line, k.column)
            opts["numeric_params"] = {str(a): _scalar_text(b, f"numeric value for {a}") for a, b in v.items()}
        elif k == "adapt_matrix":
            if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
                raise ProblemError("adapt_matrix must be a list of rows", k.line, k.column)
            opts["adapt_matrix"] = [[_scalar_text(x, "adapt_matrix entry") for x in r] for r in v]
        elif k == "map":
            if not isinstance(v, list):
                raise ProblemError("map must be a list of component expressions", k.line, k.column)
            opts["map"] = [_scalar_text(x, "map component") for x in v]
    return ProblemFile(
        variables=variables,
        parameters=parameters,
        invariants=invariants,
        potential=potential,
        truncation_degree=D,
        extensions=extensions,
        abbreviations=abbreviations,
        group=group,
        syzygies=syzygies,
        options=opts,
    )


# printing ---------------------------------------------------------------
def _q(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_problem(pf: ProblemFile) -> str:
    """Canonical text of a problem file; reparsing gives an equal structure."""
    out = [f"variables: [{', '.join(pf.variables)}]"]
    if pf.parameters:
        out.append("parameters:")
        for kind in PARAMETER_KINDS:
            if kind in pf.parameters:
                out.append(f"  {kind}: [{', '.join(pf.parameters[kind])}]")
    if pf.extensions:
        out.append("extensions:")
        for e in pf.extensions:
            out.append(f"  - symbol: {e.symbol}")
            out.append(f"    relation: {_q(e.relation)}")
    if pf.abbreviations:
        out.append("abbreviations:")
        for k, v in pf.abbreviations.items():
            out.append(f"  {k}: {_q(v)}")
    if pf.group:
        out.append("group:")
        for g in pf.group:
            out.append(f"  - name: {g.name}")
            out.append("    matrix:")
            for row in g.matrix:
                out.append("      - [" + ", ".join(_q(v) for v in row) + "]")
    out.append("invariants:")
    for i in pf.invariants:
        out.append(f"  - {{name: {i.name}, expr: {_q(i.expr)}, degree: {i.degree}}}")
    if pf.syzygies:
        out.append("syzygies:")
        for s in pf.syzygies:
            out.append(f"  - {_q(s)}")
    out.append(f"potential: {_q(pf.potential)}")
    out.append(f"truncation_degree: {pf.truncation_degree}")
    if pf.options:
        out.append("options:")
        for k in OPTION_KEYS:
            if k not in pf.options:
                continue
            v = pf.options[k]
            if k == "seed":
                out.append(f"  seed: {v}")
            elif k in ("top_order_target", "kernel", "route"):
                out.append(f"  {k}: {_q(v)}")
            elif not v:
                out.append(f"  {k}: {'{}' if k == 'numeric_params' else '[]'}")
            elif k == "numeric_params":
                out.append("  numeric_params:")
                for a, b in v.items():
                    out.append(f"    {a}: {_q(b)}")
            elif k == "adapt_matrix":
                out.append("  adapt_matrix:")
                for row in v:
                    out.append("    - [" + ", ".join(_q(x) for x in row) + "]")
            elif k == "map":
                out.append("  map:")
                for x in v:
                    out.append(f"    - {_q(x)}")
    return "\n".join(out) + "\n"


# building ---------------------------------------------------------------
@dataclass
class BuiltProblem:
    source: ProblemFile
    field: CoefficientField
    xring: PolyRing
    mib: MIB
    potential: Poly
    group: GroupPresentation | None
    generator_labels: list[str]
    options: ProblemOptions
    abbreviations: dict[str, RationalFunction]
    warnings: list[str] = dc_field(default_factory=list)

    @property
    def degree(self) -> int:
        return self.source.truncation_degree

    def landau(self, degree: int | None = None) -> LandauProblem:
        D = degree if degree is not None else self.degree
        return LandauProblem(self.mib, self.potential, D, self.group, self.options, list(self.warnings))

    def quadratic_names(self) -> list[str]:
        return list(self.source.parameters.get("quadratic", []))

    def numeric_params(self, override: dict[str, Fraction] | None = None) -> dict[str, Fraction]:
        vals = {k: parse_number(v) for k, v in self.source.options.get("numeric_params", {}).items()}
        if override:
            vals.update(override)
        return vals

    def parse_field_element(self, text: str) -> RationalFunction:
        return _eval_text(text, lambda n, p: self._field_lookup(n, p), self.field.one)

    def _field_lookup(self, name, pos):
        if name in self.abbreviations:
            return self.abbreviations[name]
        if name in self.field.names:
            return self.field.symbol(name)
        raise _expr.UnknownIdentifierError(name, pos)

    def adapt_matrix(self) -> list[list[RationalFunction]] | None:
        A = self.source.options.get("adapt_matrix")
        if A is None:
            return None
        return [[self.parse_field_element(v) for v in row] for row in A]

    def map(self) -> PolyMap | None:
        comps = self.source.options.get("map")
        if comps is None:
            return None
        if len(comps) != self.xring.nvars:
            raise ProblemError(f"map has {len(comps)} components, expected {self.xring.nvars}")
        env = dict(zip(self.xring.names, self.xring.gens()))
        polys = [_eval_text(c, lambda n, p: env[n] if n in env else self._field_lookup(n, p), self.xring.one()) for c in comps]
        return PolyMap([p.with_trunc(self.degree) for p in polys], self.degree)


def parse_number(text) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        line, col = _loc_of(text)
        raise ProblemError(f"'{text}' is not a rational number", line, col) from None


def _eval_text(text, lookup, one):
    try:
        node = _expr.parse_expression(str(text))
    except _expr.ExpressionSyntaxError as exc:
        raise _expr_error(text, exc.pos, f"syntax error in '{text}': {exc.args[0]}") from None
    try:
        return _expr.evaluate(node, lookup, one=one)
    except _expr.UnknownIdentifierError as exc:
        raise _expr_error(text, exc.pos, f"unknown identifier '{exc.name}' in '{text}'") from None
    except ZeroDivisionError as exc:
        raise _expr_error(text, 0, f"{exc} in '{text}'") from None
    except TypeError:
        raise _expr_error(text, 0, f"'{text}': division is only allowed by constants") from None


def build_problem(pf: ProblemFile) -> BuiltProblem:
    """Algebraic objects for a parsed problem file."""
    names: list[str] = []
    symbols = []
    for kind, lst in pf.parameters.items():
        for n in lst:
            symbols.append(ParamSymbol(n, PARAMETER_KINDS[kind]))
            names.append(n)
    for e in pf.extensions:
        rel = str(e.relation)
        if "=" in rel:
            lhs, rhs = rel.split("=", 1)
            rel = f"({lhs}) - ({rhs})"
        symbols.append(ParamSymbol(e.symbol, "algebraic-extension", rel))
        names.append(e.symbol)
    taken = set(pf.variables) | {i.name for i in pf.invariants}
    clash = sorted((set(names) & taken) | (set(pf.variables) & {i.name for i in pf.invariants}))
    dup = sorted({n for n in names + pf.variables if (names + pf.variables).count(n) > 1})
    if clash or dup:
        raise ProblemError(f"identifier declared twice: {', '.join(sorted(set(clash) | set(dup)))}")
    try:
        field = CoefficientField(symbols)
    except _expr.UnknownIdentifierError as exc:
        spec = next((e for e in pf.extensions if re.search(rf"\b{exc.name}\b", str(e.relation))), pf.extensions[0])
        raise _expr_error(spec.relation, exc.pos, f"unknown identifier '{exc.name}' in the relation for {spec.symbol}") from None
    except (ValueError, _expr.ExpressionSyntaxError) as exc:
        raise ProblemError(f"extensions: {exc}") from None

    abbreviations: dict[str, RationalFunction] = {}
    for k, v in pf.abbreviations.items():
        if k in field.names or k in taken:
            raise ProblemError(f"abbreviation '{k}' shadows a declared name")

        def look(n, p, _a=abbreviations):
            if n in _a:
                return _a[n]
            if n in field.names:
                return field.symbol(n)
            raise _expr.UnknownIdentifierError(n, p)

        abbreviations[k] = _eval_text(v, look, field.one)

    def param_lookup(n, p):
        if n in abbreviations:
            return abbreviations[n]
        if n in field.names:
            return field.symbol(n)
        raise _expr.UnknownIdentifierError(n, p)

    xring = PolyRing(field, pf.variables)
    xenv = dict(zip(pf.variables, xring.gens()))

    def x_lookup(n, p):
        return xenv[n] if n in xenv else param_lookup(n, p)

    invs = []
    for spec in pf.invariants:
        d = _eval_text(spec.expr, x_lookup, xring.one())
        if d.free_symbols():
            raise _expr_error(spec.expr, 0, f"invariant {spec.name}: definition must have rational coefficients")
        if d.is_zero() or not d.is_homogeneous():
            raise _expr_error(spec.expr, 0, f"invariant {spec.name} = {spec.expr} is not homogeneous")
        if d.degree() != spec.degree:
            raise _expr_error(spec.expr, 0, f"invariant {spec.name}: declared degree {spec.degree}, expression has degree {d.degree()}")
        invs.append(Invariant(spec.name, d, spec.degree))
    jring = PolyRing(field, [i.name for i in invs], [i.degree for i in invs])
    jenv = dict(zip(jring.names, jring.gens()))

    def j_lookup(n, p):
        return jenv[n] if n in jenv else param_lookup(n, p)

    syz = []
    for s in pf.syzygies:
        if "=" in s:
            lhs_t, rhs_t = s.split("=", 1)
            off = len(lhs_t) + 1
            lhs = _eval_text(Loc(lhs_t, *_loc_of(s), getattr(s, "quoted", False)), j_lookup, jring.one())
            rhs = _eval_text(_shift(s, rhs_t, off), j_lookup, jring.one())
        else:
            lhs, rhs = _eval_text(s, j_lookup, jring.one()), jring.zero()
        syz.append((lhs, rhs))
    try:
        mib = MIB(xring, invs, syz, jring=jring)
    except MIBError as exc:
        raise ProblemError(str(exc)) from None

    gens, labels = [], []
    for g in pf.group:
        m = [[_eval_text(v, param_lookup, field.one) for v in row] for row in g.matrix]
        gens.append(m)
        labels.append(g.name)
    try:
        group = GroupPresentation(gens, field, xring.nvars) if gens else None
    except MIBError as exc:
        raise ProblemError(str(exc)) from None

    # the potential may use variables, invariants or both
    pot_text = pf.potential
    node_names = {v.name for v in _expr.identifiers(_safe_parse(pot_text))}
    uses_x = bool(node_names & set(pf.variables))
    if uses_x:
        defs = {i.name: i.definition for i in invs}
        pot_x = _eval_text(pot_text, lambda n, p: defs[n] if n in defs else x_lookup(n, p), xring.one())
        try:
            potential = mib.express(pot_x.with_trunc(pf.truncation_degree))
        except ValueError as exc:
            raise _expr_error(pot_text, 0, f"potential is not expressible in the invariants: {exc}") from None
    else:
        potential = mib.normalize(_eval_text(pot_text, j_lookup, jring.one()))
    o = pf.options
    try:
        options = ProblemOptions(
            top_order_target=o.get("top_order_target", "rho"),
            kernel=o.get("kernel", "quadratic"),
            route=o.get("route", "orbit"),
        )
    except ValueError as exc:
        raise ProblemError(str(exc)) from None
    built = BuiltProblem(pf, field, xring, mib, potential, group, labels, options, abbreviations)
    if potential.degree() > pf.truncation_degree:
        built.warnings.append(f"potential has terms above degree {pf.truncation_degree}; they are dropped")
    for k in o.get("numeric_params", {}):
        if k not in field.names:
            line, col = _loc_of(k)
            raise ProblemError(f"numeric_params: unknown parameter '{k}'", line, col)
    return built


def _safe_parse(text):
    try:
        return _expr.parse_expression(str(text))
    except _expr.ExpressionSyntaxError as exc:
        raise _expr_error(text, exc.pos, f"syntax error in '{text}': {exc.args[0]}") from None


def _shift(whole, part: str, off: int):
    line, col = _loc_of(whole)
    if line is None:
        return part
    return Loc(part, line, col + off, getattr(whole, "quoted", False))


def load_problem(text: str) -> BuiltProblem:
    return build_problem(parse_problem(text))
