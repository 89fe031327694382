"""Critical points, orbit-space gradient system, singular locus, equivalence checks."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Sequence

import flint
import numpy as np

from .field import CoefficientField, RationalFunction
from .invariants import MIB, GroupPresentation
from .linalg import InconsistentSystemError, Ledger, rf_solve_linear
from .poly import Poly, PolyMap


# numeric parameters -----------------------------------------------------
def extension_values(field: CoefficientField, params: Mapping[str, object], strict: bool = True) -> dict[str, float]:
    """Numeric values for extension symbols: the largest real root of each relation.

    With ``strict`` false, extensions whose relation needs a missing
    parameter are left out instead of raising ``KeyError``.
    """
    out: dict[str, float] = {}
    vals = {k: v for k, v in params.items() if k in field.names}
    for name in field.extension_names():
        if name in vals:
            out[name] = float(vals[name])
            continue
        rule = next(r for r in field._rules if field.names[r.index] == name)
        idx = rule.index
        n = rule.degree
        try:
            # lcm * b^n - rhs(b) = 0, highest power first
            coeffs = [0.0] * (n + 1)
            coeffs[0] = float(RationalFunction._make(field, rule.lcm, field.ctx.constant(1)).evaluate(vals))
            for e, c in rule.rhs.to_dict().items():
                k = e[idx]
                e2 = list(e)
                e2[idx] = 0
                mono = field.ctx.from_dict({tuple(e2): c})
                coeffs[n - k] -= float(RationalFunction._make(field, mono, field.ctx.constant(1)).evaluate(vals))
        except KeyError:
            if strict:
                raise
            continue
        roots = np.roots(coeffs)
        real = [r.real for r in roots if abs(r.imag) < 1e-12 * max(1.0, abs(r))]
        if not real:
            raise ValueError(f"relation for {name} has no real root at these parameters")
        out[name] = max(real)
        vals[name] = out[name]
    return out


def numeric_params(field: CoefficientField, params: Mapping[str, object], strict: bool = False) -> dict[str, object]:
    """Parameter values completed with numeric extension values."""
    out = dict(params)
    if field.has_extensions():
        out.update(extension_values(field, params, strict))
    return out


class NumericPoly:
    """Float evaluation of a polynomial in the order parameters (batched)."""

    def __init__(self, p: Poly, params: Mapping[str, object]):
        self.m = p.ring.nvars
        terms = list(p.terms.items())
        self.exps = np.array([e for e, _ in terms], dtype=np.int64).reshape(len(terms), self.m)
        self.coef = np.array([float(c.evaluate(params)) for _, c in terms], dtype=float)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if not len(self.coef):
            return np.zeros(X.shape[0])
        mon = np.ones((X.shape[0], len(self.coef)))
        for j in range(self.m):
            mon *= X[:, j : j + 1] ** self.exps[:, j]
        return mon @ self.coef


class NumericGradient:
    def __init__(self, p: Poly, params: Mapping[str, object]):
        m = p.ring.nvars
        self.m = m
        self.value = NumericPoly(p, params)
        self.grad = [NumericPoly(p.derivative(i), params) for i in range(m)]
        self.hess = [[NumericPoly(p.derivative(i).derivative(j), params) for j in range(m)] for i in range(m)]

    def gradient(self, X):
        return np.stack([g(X) for g in self.grad], axis=-1)

    def hessian(self, X):
        return np.stack([np.stack([h(X) for h in row], axis=-1) for row in self.hess], axis=-2)


# critical points --------------------------------------------------------
@dataclass
class SearchConfig:
    box: float = 2.0
    grid: int = 11
    tol_grad: float = 1e-10
    tol_eig: float = 1e-8
    dedup: float = 1e-6
    max_iter: int = 100
    random_starts: int = 0
    seed: int = 0
    escape: float = 1e6


@dataclass
class CriticalPoint:
    x: list[float]
    J_values: list[float]
    gradient_norm: float
    hessian_eigenvalues: list[float]
    stability: str
    isotropy: list[str]
    stabilizer_order: int | None = None


def classify_stability(eigs: Sequence[float], tol: float) -> str:
    if any(abs(e) <= tol for e in eigs):
        return "degenerate"
    if all(e > 0 for e in eigs):
        return "minimum"
    if all(e < 0 for e in eigs):
        return "maximum"
    return "saddle"


def _numeric_matrices(G: GroupPresentation | None, params, bound: int = 200, tol: float = 1e-9):
    """Float generators and, when it closes within ``bound``, the float group."""
    if G is None:
        return [], None
    vals = numeric_params(G.field, params)
    gens = [np.array([[float(v.evaluate(vals)) for v in row] for row in g]) for g in G.generators]
    elems = [np.eye(G.dim)]
    frontier = list(elems)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                p = g @ a
                if not any(np.abs(p - e).max() <= tol for e in elems):
                    elems.append(p)
                    nxt.append(p)
                    if len(elems) > bound:
                        return gens, None
        frontier = nxt
    return gens, elems


def critical_points(
    potential: Poly,
    params: Mapping[str, object],
    config: SearchConfig | None = None,
    mib: MIB | None = None,
    group: GroupPresentation | None = None,
    generator_labels: Sequence[str] | None = None,
) -> list[CriticalPoint]:
    """Multi-start Newton on grad = 0 with deduplication."""
    cfg = config or SearchConfig()
    vals = numeric_params(potential.field, params)
    missing = potential.free_symbols() - set(vals)
    if missing:
        raise KeyError(f"numeric values needed for {', '.join(sorted(missing))}")
    ng = NumericGradient(potential, vals)
    m = potential.ring.nvars
    axis = np.linspace(-cfg.box, cfg.box, cfg.grid)
    starts = np.array(list(itertools.product(axis, repeat=m)), dtype=float).reshape(-1, m)
    if cfg.random_starts:
        rng = np.random.default_rng(cfg.seed)
        starts = np.vstack([starts, rng.uniform(-cfg.box, cfg.box, size=(cfg.random_starts, m))])
    X = starts.copy()
    active = np.ones(len(X), dtype=bool)
    for _ in range(cfg.max_iter):
        if not active.any():
            break
        Xa = X[active]
        g = ng.gradient(Xa)
        H = ng.hessian(Xa)
        step = np.einsum("nij,nj->ni", np.linalg.pinv(H), g)
        Xa = Xa - step
        X[active] = Xa
        done = np.linalg.norm(step, axis=1) <= 1e-15 * (1 + np.linalg.norm(Xa, axis=1))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        bad = ~np.isfinite(Xa).all(axis=1) | (np.abs(Xa).max(axis=1) > cfg.escape)
        active[idx[bad]] = False
    finite = np.isfinite(X).all(axis=1)
    X = X[finite]
    gn = np.linalg.norm(ng.gradient(X), axis=1) if len(X) else np.zeros(0)
    X = X[gn <= cfg.tol_grad]
    # deterministic dedup: sort, then greedy by distance
    order = sorted(range(len(X)), key=lambda i: tuple(np.round(X[i], 9)))
    kept: list[np.ndarray] = []
    for i in order:
        if all(np.linalg.norm(X[i] - k) > cfg.dedup for k in kept):
            kept.append(X[i])
    gens, elems = _numeric_matrices(group, params)
    labels = list(generator_labels or [f"g{i + 1}" for i in range(len(gens))])
    out = []
    for x in kept:
        x = np.where(np.abs(x) < 1e-14, 0.0, x)
        H = ng.hessian(x[None, :])[0]
        eigs = sorted(np.linalg.eigvalsh((H + H.T) / 2).tolist())
        iso = [labels[i] for i, g in enumerate(gens) if np.linalg.norm(g @ x - x) <= 1e-8 * (1 + np.linalg.norm(x))]
        order_ = None
        if elems is not None:
            order_ = sum(1 for g in elems if np.linalg.norm(g @ x - x) <= 1e-8 * (1 + np.linalg.norm(x)))
        jv = []
        if mib is not None:
            jv = [float(NumericPoly(inv.definition, {})(x[None, :])[0]) for inv in mib.invariants]
        out.append(
            CriticalPoint(
                x=[float(v) for v in x],
                J_values=jv,
                gradient_norm=float(np.linalg.norm(ng.gradient(x[None, :])[0])),
                hessian_eigenvalues=[float(e) for e in eigs],
                stability=classify_stability(eigs, cfg.tol_eig),
                isotropy=iso,
                stabilizer_order=order_,
            )
        )
    return out


# orbit-space gradient system -------------------------------------------
@dataclass
class Radical:
    """value = (base)^(1/n); for even n the sign choice is ``sign``."""

    base: RationalFunction
    n: int
    sign: int = 1

    def __str__(self):
        s = "" if self.sign > 0 else "-"
        if self.n == 1:
            return f"{s}({self.base})"
        return f"{s}({self.base})^(1/{self.n})"

    def evaluate(self, params) -> float:
        b = float(self.base.evaluate(params))
        if self.n % 2 == 1:
            return self.sign * math.copysign(abs(b) ** (1.0 / self.n), b)
        if b < 0:
            return float("nan")
        return self.sign * b ** (1.0 / self.n)


@dataclass
class QuadraticRoot:
    """(-b + sign*sqrt(b^2 - 4ac)) / (2a)."""

    a: RationalFunction
    b: RationalFunction
    c: RationalFunction
    sign: int

    @property
    def discriminant(self) -> RationalFunction:
        return self.b * self.b - self.a * self.c * 4

    def __str__(self):
        pm = "+" if self.sign > 0 else "-"
        return f"(-({self.b}) {pm} sqrt({self.discriminant}))/(2*({self.a}))"

    def evaluate(self, params) -> float:
        a, b, d = (float(v.evaluate(params)) for v in (self.a, self.b, self.discriminant))
        if d < 0:
            return float("nan")
        return (-b + self.sign * math.sqrt(d)) / (2 * a)


@dataclass
class OrbitSolution:
    variable: str
    branches: list  # RationalFunction | Radical | QuadraticRoot


@dataclass
class OrbitGradientSystem:
    equations: list[Poly]
    solutions: list[OrbitSolution] = dc_field(default_factory=list)
    unsolved: list[Poly] = dc_field(default_factory=list)
    inconsistent: list[RationalFunction] = dc_field(default_factory=list)
    ledger: Ledger = dc_field(default_factory=Ledger)

    def solution_for(self, name: str) -> OrbitSolution | None:
        return next((s for s in self.solutions if s.variable == name), None)


def _univariate(eq: Poly):
    vars_ = {i for e in eq.terms for i, k in enumerate(e) if k}
    return vars_


def orbit_gradient_system(reduced: Poly, B: MIB | None = None) -> OrbitGradientSystem:
    """Equations dPsi/dJ_a = 0 with the closed forms that are cheap to get."""
    ring = reduced.ring
    eqs = [reduced.derivative(a).with_trunc(None) for a in range(ring.nvars)]
    out = OrbitGradientSystem(eqs)
    pending = []
    for eq in eqs:
        if eq.is_zero():
            continue
        vs = _univariate(eq)
        if not vs:
            out.inconsistent.append(eq.constant_term())
            continue
        if len(vs) == 1:
            (i,) = vs
            sol = _solve_univariate(eq, i)
            if sol is not None:
                out.solutions.append(OrbitSolution(ring.names[i], sol))
                continue
        pending.append(eq)
    # linear subsystem in the remaining variables
    lin = [eq for eq in pending if all(sum(e) <= 1 for e in eq.terms)]
    nonlin = [eq for eq in pending if eq not in lin]
    if lin:
        vars_ = sorted({i for eq in lin for e in eq.terms for i, k in enumerate(e) if k})
        solved = {s.variable for s in out.solutions}
        f = ring.field
        A = []
        b = []
        for eq in lin:
            row = []
            for i in vars_:
                e = tuple(1 if t == i else 0 for t in range(ring.nvars))
                row.append(eq.coefficient(e))
            A.append(row)
            b.append(-eq.constant_term())
        try:
            sol = rf_solve_linear(A, b, f)
            if not sol.kernel and not any(ring.names[i] in solved for i in vars_):
                for i, v in zip(vars_, sol.solution):
                    out.solutions.append(OrbitSolution(ring.names[i], [v]))
                out.ledger.update(sol.ledger)
            else:
                nonlin.extend(lin)
        except InconsistentSystemError:
            nonlin.extend(lin)
    out.unsolved = nonlin
    return out


def _solve_univariate(eq: Poly, i: int):
    deg = max(e[i] for e in eq.terms)
    coeff = {e[i]: c for e, c in eq.terms.items()}
    if len(coeff) == 2 and 0 in coeff:
        (n,) = [k for k in coeff if k]
        base = -coeff[0] / coeff[n]
        if n == 1:
            return [base]
        if n % 2:
            return [Radical(base, n)]
        return [Radical(base, n, 1), Radical(base, n, -1)]
    if deg == 1:
        return [-coeff.get(0, eq.field.zero) / coeff[1]]
    if deg == 2:
        z = eq.field.zero
        a, b, c = coeff[2], coeff.get(1, z), coeff.get(0, z)
        return [QuadraticRoot(a, b, c, 1), QuadraticRoot(a, b, c, -1)]
    return None


# singular locus ---------------------------------------------------------
@dataclass
class SingularLocus:
    minors: list[Poly]
    factorizations: list[tuple[Fraction, list[tuple[Poly, int]]]]

    @property
    def determinant(self) -> Poly:
        return self.minors[0]

    def describe(self) -> list[str]:
        out = []
        for content, facs in self.factorizations:
            parts = [] if content == 1 else [str(content)]
            for f, k in facs:
                s = str(f)
                if len(f.terms) > 1:
                    s = f"({s})"
                parts.append(s if k == 1 else f"{s}^{k}")
            out.append("*".join(parts) if parts else "1")
        return out


def factor_xpoly(p: Poly) -> tuple[Fraction, list[tuple[Poly, int]]]:
    """Factor a polynomial with rational coefficients over Q."""
    ring = p.ring
    ctx = flint.fmpq_mpoly_ctx.get(ring.names, "deglex")
    d = {}
    for e, c in p.terms.items():
        v = c.constant_value()
        d[e] = flint.fmpq(v.numerator, v.denominator)
    fp = ctx.from_dict(d)
    if fp.is_zero():
        return Fraction(0), []
    content, facs = fp.factor()
    out = []
    for f, k in facs:
        terms = {tuple(e): ring.field.coerce(Fraction(int(c.p), int(c.q))) for e, c in f.to_dict().items()}
        out.append((Poly(ring, terms), int(k)))
    out.sort(key=lambda fk: (fk[0].degree(), str(fk[0])))
    return Fraction(int(content.p), int(content.q)), out


def _det(M: list[list[Poly]]) -> Poly:
    n = len(M)
    if n == 1:
        return M[0][0]
    total = M[0][0].ring.zero()
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        term = M[0][j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def singular_locus(B: MIB) -> SingularLocus:
    """Maximal minors of the gradient matrix (rows: invariants, columns: x)."""
    m = B.xring.nvars
    grads = [[inv.definition.derivative(j) for j in range(m)] for inv in B.invariants]
    k = min(B.r, m)
    minors = []
    for rows in itertools.combinations(range(B.r), k):
        for cols in itertools.combinations(range(m), k):
            minors.append(_det([[grads[i][j] for j in cols] for i in rows]))
    return SingularLocus(minors, [factor_xpoly(p) for p in minors])


def restrict_to(potential: Poly, parametrization: Sequence[Poly]) -> Poly:
    """Potential restricted to a user-supplied parametrized component."""
    return potential.compose(list(parametrization))


# equivalence oracle -----------------------------------------------------
@dataclass
class EquivalenceReport:
    symbolic_ok: bool
    symbolic_nonzero_terms: int
    numeric_ok: bool
    numeric_trials: int
    numeric_worst_ratio: float
    redraws: int
    params_used: dict
    transport: list[dict] = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.symbolic_ok and self.numeric_ok


def random_rational_params(
    names: Sequence[str],
    rng: random.Random,
    ledger: Sequence[RationalFunction] = (),
    field: CoefficientField | None = None,
    quadratic: Sequence[str] = (),
    max_redraws: int = 1000,
    tol: float = 0.05,
) -> tuple[dict[str, Fraction], int]:
    """Random small rationals kept away from the zeros of the ledger factors.

    A draw is rejected when some factor is smaller than ``tol`` times the sum
    of the absolute values of its terms, i.e. when its terms nearly cancel.
    """
    redraws = 0
    while True:
        vals: dict[str, Fraction] = {}
        for n in names:
            if n in quadratic:
                v = Fraction(rng.randint(5, 20), 10) * rng.choice((-1, 1))
            else:
                v = Fraction(rng.randint(-10, 10), 10)
            vals[n] = v
        bad = False
        for fct in ledger:
            try:
                size = _term_size(fct, vals)
                val = float(fct.evaluate(numeric_params(fct.field, vals) if fct.free_symbols() & set(fct.field.extension_names()) else vals))
            except (ZeroDivisionError, KeyError, ValueError):
                bad = True
                break
            if abs(val) < tol * max(size, 1e-300):
                bad = True
                break
        if not bad:
            return vals, redraws
        redraws += 1
        if redraws > max_redraws:
            raise RuntimeError("could not draw parameters away from the ledger zeros")


def _term_size(fct: RationalFunction, vals) -> float:
    """Sum of |term| of the numerator at ``vals`` (extension symbols count as 1)."""
    names = fct.field.names
    ext = set(fct.field.extension_names())
    total = 0.0
    for exps, c in fct.num.terms():
        t = abs(float(int(c.p)) / float(int(c.q)))
        for n, e in zip(names, exps):
            if e and n not in ext:
                t *= abs(float(vals[n])) ** int(e)
        total += t
    return total


def _exact_eval_map(components, params, point):
    return [_exact_eval(c, params, point) for c in components]


def _exact_eval(p: Poly, params, point):
    total = Fraction(0)
    for e, c in p.terms.items():
        t = c.evaluate(params)
        for x, k in zip(point, e):
            if k:
                t *= x ** k
        total += t
    return total


def verify_equivalence(
    original: Poly,
    reduced: Poly,
    inverse_map: PolyMap,
    trials: int = 100,
    seed: int = 0,
    radius: float = 0.1,
    bound: float = 10.0,
    ledger: Sequence[RationalFunction] = (),
    params: Mapping[str, object] | None = None,
    quadratic: Sequence[str] = (),
    symbolic: bool = True,
) -> EquivalenceReport:
    """(a) symbolic difference, (b) numeric bound at random points."""
    D = inverse_map.trunc
    nonzero = 0
    if symbolic:
        diff = original.compose(inverse_map.components, D) - reduced.with_trunc(D)
        nonzero = len(diff.terms)
    rng = random.Random(seed)
    names = sorted((original.free_symbols() | reduced.free_symbols() | _map_symbols(inverse_map)))
    field = original.field
    ext = set(field.extension_names())
    names = [n for n in names if n not in ext]
    redraws = 0
    if params is None:
        params, redraws = random_rational_params(names, rng, ledger, field, quadratic)
    vals = numeric_params(field, params) if ext else dict(params)
    orig_p = original.subs_params(params) if not ext else original
    red_p = reduced.subs_params(params) if not ext else reduced
    map_p = [c.subs_params(params) if not ext else c for c in inverse_map.components]
    m = original.ring.nvars
    worst = 0.0
    ok = True
    for _ in range(trials):
        v = [rng.gauss(0, 1) for _ in range(m)]
        nv = math.sqrt(sum(t * t for t in v)) or 1.0
        r = radius * rng.random() ** (1.0 / m)
        if ext:
            pt = [r * t / nv for t in v]
            y = [c.evaluate(pt, vals) for c in map_p]
            d = abs(orig_p.evaluate(y, vals) - red_p.evaluate(pt, vals))
            nx = math.sqrt(sum(t * t for t in pt))
        else:
            pt = [Fraction(r * t / nv) for t in v]
            y = _exact_eval_map(map_p, {}, pt)
            d = abs(float(_exact_eval(orig_p, {}, y) - _exact_eval(red_p, {}, pt)))
            nx = math.sqrt(sum(float(t) ** 2 for t in pt))
        lim = bound * nx ** (D + 1)
        ratio = d / lim if lim > 0 else (0.0 if d == 0 else math.inf)
        worst = max(worst, ratio)
        if d > lim:
            ok = False
    return EquivalenceReport(
        symbolic_ok=(nonzero == 0) if symbolic else True,
        symbolic_nonzero_terms=nonzero,
        numeric_ok=ok,
        numeric_trials=trials,
        numeric_worst_ratio=worst,
        redraws=redraws,
        params_used={k: str(v) for k, v in params.items()},
    )


def _map_symbols(m: PolyMap) -> set[str]:
    out: set[str] = set()
    for c in m.components:
        out |= c.free_symbols()
    return out


def transport_critical_points(
    original: Poly,
    reduced: Poly,
    inverse_map: PolyMap,
    params: Mapping[str, object],
    config: SearchConfig | None = None,
    polish_steps: int = 50,
) -> list[dict]:
    """Map critical points of the reduced potential back to old coordinates.

    Old coordinates are ``inverse_map(new)``.  The residual |grad original|
    there reflects the truncation error; a Newton polish on the original
    potential is reported alongside with its displacement.
    """
    cfg = config or SearchConfig()
    vals = numeric_params(original.field, params)
    pts = critical_points(reduced, params, cfg)
    ng = NumericGradient(original, vals)
    maps = [NumericPoly(c, vals) for c in inverse_map.components]
    out = []
    for cp in pts:
        y = np.array(cp.x)[None, :]
        x0 = np.array([mp(y)[0] for mp in maps])
        r0 = float(np.linalg.norm(ng.gradient(x0[None, :])[0]))
        x = x0.copy()
        for _ in range(polish_steps):
            g = ng.gradient(x[None, :])[0]
            if np.linalg.norm(g) <= cfg.tol_grad * 1e-2:
                break
            H = ng.hessian(x[None, :])[0]
            x = x - np.linalg.pinv(H) @ g
        r1 = float(np.linalg.norm(ng.gradient(x[None, :])[0]))
        out.append(
            {
                "reduced_point": cp.x,
                "stability": cp.stability,
                "transported": [float(v) for v in x0],
                "residual": r0,
                "polished": [float(v) for v in x],
                "polished_residual": r1,
                "displacement": float(np.linalg.norm(x - x0)),
            }
        )
    return out


def finite_difference_gradient(p: Poly, params, x: Sequence[float], h: float = 1e-6) -> np.ndarray:
    f = NumericPoly(p, numeric_params(p.field, params))
    x = np.asarray(x, dtype=float)
    g = np.zeros(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        g[i] = (f((x + e)[None, :])[0] - f((x - e)[None, :])[0]) / (2 * h)
    return g
