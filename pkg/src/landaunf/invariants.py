"""Group action, integrity basis, orbit-space conversion and the P-matrix."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .field import CoefficientField, RationalFunction
from .linalg import row_reduce
from .poly import Exps, Poly, PolyRing


class NotExpressible(ValueError):
    """An invariant polynomial lies outside the span of the basis monomials."""


class AmbiguousBasis(ValueError):
    """Basis monomials of some degree are linearly dependent (missing syzygy)."""


class MIBError(ValueError):
    pass


Matrix = list[list[RationalFunction]]


class GroupPresentation:
    """Orthogonal linear action given by generator matrices."""

    def __init__(self, generators: Sequence[Sequence[Sequence[RationalFunction]]], field: CoefficientField, dim: int):
        self.field = field
        self.dim = dim
        gens = []
        for k, g in enumerate(generators):
            g = [[field.coerce(v) for v in row] for row in g]
            if len(g) != dim or any(len(row) != dim for row in g):
                raise MIBError(f"generator {k + 1} is not {dim}x{dim}")
            gens.append(g)
        self.generators: list[Matrix] = gens

    def check_orthogonal(self) -> list[str]:
        """Problems found (empty when every generator satisfies g^T g = 1)."""
        out = []
        f = self.field
        for k, g in enumerate(self.generators):
            for i in range(self.dim):
                for j in range(self.dim):
                    s = f.zero
                    for t in range(self.dim):
                        s = s + g[t][i] * g[t][j]
                    want = f.one if i == j else f.zero
                    if s != want:
                        out.append(f"generator {k + 1}: (g^T g)[{i + 1}][{j + 1}] = {s}, expected {want}")
        return out

    def act(self, p: Poly, g: Matrix) -> Poly:
        """p(g x)."""
        ring = p.ring
        xs = ring.gens()
        images = []
        for i in range(self.dim):
            im = ring.zero()
            for j in range(self.dim):
                if g[i][j]:
                    im = im + xs[j].scale(g[i][j])
            images.append(im)
        return p.compose(images)

    def elements(self, bound: int = 1000) -> list[Matrix] | None:
        """Closure under products, or ``None`` if it exceeds ``bound``."""
        f = self.field
        ident = [[f.one if i == j else f.zero for j in range(self.dim)] for i in range(self.dim)]

        def key(m):
            return tuple(tuple(row) for row in m)

        def mul(a, b):
            return [
                [sum((a[i][t] * b[t][j] for t in range(self.dim)), f.zero) for j in range(self.dim)]
                for i in range(self.dim)
            ]

        seen = {key(ident): ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for m in frontier:
                for g in self.generators:
                    p = mul(g, m)
                    k = key(p)
                    if k not in seen:
                        seen[k] = p
                        nxt.append(p)
                        if len(seen) > bound:
                            return None
            frontier = nxt
        return list(seen.values())


def check_invariance(p: Poly, G: GroupPresentation) -> bool:
    if p.ring.nvars != G.dim:
        raise ValueError("dimension mismatch between polynomial and group")
    return all(G.act(p, g) == p for g in G.generators)


@dataclass(frozen=True)
class Invariant:
    name: str
    definition: Poly
    degree: int


@dataclass(frozen=True)
class RewriteRule:
    lhs: Exps
    rhs: Poly  # in the J ring

    def describe(self, ring: PolyRing) -> str:
        return f"{ring.monomial(self.lhs)} -> {self.rhs}"


class _DegreeSolver:
    """Cached elimination for expressing degree-d invariants."""

    def __init__(self, mib: "MIB", d: int):
        self.monos = mib.canonical_monomials(d)
        expansions = [mib.expand_monomial(e) for e in self.monos]
        rows: list[Exps] = sorted({x for ex in expansions for x in ex.terms})
        self.rowpos = {x: i for i, x in enumerate(rows)}
        f = mib.field
        mat = [[ex.coefficient(x) for ex in expansions] for x in rows]
        ech = row_reduce(mat, len(self.monos), f, track=True)
        self.rank = len(ech.pivots)
        self.pivots = ech.pivots
        self.transform = ech.transform
        self.nrows = len(rows)
        self.degree = d
        self.dependent = self.rank < len(self.monos)
        if self.dependent:
            free = [self.monos[c] for c in range(len(self.monos)) if c not in set(ech.pivots)]
            self.free_monos = free
        self.field = f

    def solve(self, comp: Poly) -> dict[Exps, RationalFunction]:
        f = self.field
        b = [f.zero] * self.nrows
        for x, c in comp.terms.items():
            i = self.rowpos.get(x)
            if i is None:
                raise NotExpressible(f"x-monomial {comp.ring.monomial(x)} of degree {self.degree} is not reachable from the basis")
            b[i] = c
        nz = [i for i, v in enumerate(b) if v]

        def apply(row):
            s = f.zero
            for i in nz:
                t = row[i]
                if t:
                    s = s + t * b[i]
            return s

        for r in range(self.rank, self.nrows):
            if apply(self.transform[r]):
                raise NotExpressible(f"degree-{self.degree} invariant is outside the span of the basis monomials")
        if self.dependent:
            names = ", ".join(str(m) for m in self.free_monos)
            raise AmbiguousBasis(f"basis monomials of degree {self.degree} are dependent; add syzygy rules (free: {names})")
        out = {}
        for r, c in enumerate(self.pivots):
            v = apply(self.transform[r])
            if v:
                out[self.monos[c]] = v
        return out


class MIB:
    """Ordered basic invariants plus syzygy rewrite rules.

    ``syzygies`` entries are ``(lhs, rhs)`` pairs of J-ring polynomials meaning
    ``lhs = rhs``; a monomial ``lhs`` fixes the orientation, otherwise the
    leading monomial of ``lhs - rhs`` is rewritten.
    """

    def __init__(
        self,
        xring: PolyRing,
        invariants: Sequence[Invariant],
        syzygies: Sequence[tuple[Poly, Poly]] = (),
        jring: PolyRing | None = None,
    ):
        self.xring = xring
        self.field = xring.field
        self.invariants = tuple(invariants)
        self.degrees = tuple(inv.degree for inv in self.invariants)
        self.names = tuple(inv.name for inv in self.invariants)
        self.r = len(self.invariants)
        self.s = sum(1 for d in self.degrees if d == 2)
        self.jring = jring or PolyRing(self.field, self.names, self.degrees)
        self._expansion_cache: dict[Exps, Poly] = {}
        self._solvers: dict[int, _DegreeSolver] = {}
        self.rules: tuple[RewriteRule, ...] = ()
        self.term_order: tuple[int, ...] | None = None
        self._orient(syzygies)

    # syzygy handling ---------------------------------------------------
    def _orient(self, syzygies):
        jr = self.jring
        pending = []
        for lhs, rhs in syzygies:
            if lhs.ring != jr or rhs.ring != jr:
                raise MIBError("syzygy sides must be polynomials in the invariants")
            pending.append((lhs, rhs))
        rules: list[RewriteRule] = []
        forced: list[tuple[Exps, Poly]] = []
        free: list[Poly] = []
        for lhs, rhs in pending:
            if len(lhs.terms) == 1 and not (lhs - rhs).is_zero():
                (e, c), = lhs.terms.items()
                if any(e) and e not in rhs.terms:
                    forced.append((e, rhs.scale(c.inverse())))
                    continue
            free.append(lhs - rhs)
        order = self._find_order(forced, free)
        if order is None:
            raise MIBError("no weighted lexicographic order makes every syzygy rule decreasing")
        self.term_order = order
        key = self._order_key(order)
        for e, rhs in forced:
            rules.append(RewriteRule(e, rhs))
        for diff in free:
            if diff.is_zero():
                raise MIBError("trivial syzygy 0 = 0")
            e = max(diff.terms, key=key)
            c = diff.terms[e]
            rest = diff - jr.monomial(e, c)
            rules.append(RewriteRule(e, rest.scale(-c.inverse())))
        self.rules = tuple(rules)

    def _order_key(self, order: tuple[int, ...]):
        wd = self.jring.wdeg
        return lambda e: (wd(e), tuple(e[i] for i in order))

    def _find_order(self, forced, free) -> tuple[int, ...] | None:
        r = self.r
        # Default: graded lex with the last variable most significant; then
        # every other variable priority.
        default = tuple(range(r - 1, -1, -1))
        candidates = itertools.chain([default], (p for p in itertools.permutations(range(r)) if p != default))
        for order in candidates:
            key = self._order_key(order)
            ok = all(all(key(m) < key(e) for m in rhs.terms) for e, rhs in forced)
            if ok:
                return order
        return None

    def is_reducible(self, e: Exps) -> bool:
        return any(all(a >= b for a, b in zip(e, rule.lhs)) for rule in self.rules)

    def normalize(self, q: Poly) -> Poly:
        """Rewrite until no monomial is divisible by a rule's lhs."""
        if not self.rules:
            return q
        jr = self.jring
        terms = dict(q.terms)
        while True:
            hit = None
            for e in terms:
                for rule in self.rules:
                    if all(a >= b for a, b in zip(e, rule.lhs)):
                        hit = (e, rule)
                        break
                if hit:
                    break
            if hit is None:
                return Poly(jr, terms, q.trunc)
            e, rule = hit
            c = terms.pop(e)
            quot = tuple(a - b for a, b in zip(e, rule.lhs))
            for m, v in rule.rhs.terms.items():
                e2 = tuple(a + b for a, b in zip(quot, m))
                w = terms.get(e2)
                s = c * v if w is None else w + c * v
                if s:
                    terms[e2] = s
                else:
                    terms.pop(e2, None)

    def canonical_monomials(self, d: int) -> list[Exps]:
        return [e for e in self.jring.monomials_of_degree(d) if not self.is_reducible(e)]

    # conversions -------------------------------------------------------
    def expand_monomial(self, e: Exps) -> Poly:
        hit = self._expansion_cache.get(e)
        if hit is not None:
            return hit
        if not any(e):
            val = self.xring.one()
        else:
            i = max(k for k, a in enumerate(e) if a)
            prev = list(e)
            prev[i] -= 1
            val = self.expand_monomial(tuple(prev)) * self.invariants[i].definition
        self._expansion_cache[e] = val
        return val

    def expand(self, q: Poly, trunc: int | None = None) -> Poly:
        """J-polynomial to x-polynomial."""
        acc: dict = {}
        for e, c in q.terms.items():
            for x, v in self.expand_monomial(e).terms.items():
                w = acc.get(x)
                acc[x] = c * v if w is None else w + c * v
        t = trunc if trunc is not None else q.trunc
        return Poly(self.xring, acc, t)

    def solver(self, d: int) -> _DegreeSolver:
        s = self._solvers.get(d)
        if s is None:
            s = _DegreeSolver(self, d)
            self._solvers[d] = s
        return s

    def express(self, p: Poly, trunc: int | None = None) -> Poly:
        """x-polynomial to canonical J-polynomial (componentwise by degree)."""
        if p.ring != self.xring:
            raise ValueError("polynomial is not in the order-parameter ring")
        terms: dict = {}
        for d, comp in p.components().items():
            if d == 0:
                terms[(0,) * self.r] = comp.constant_term()
                continue
            terms.update(self.solver(d).solve(comp))
        return Poly(self.jring, terms, trunc if trunc is not None else p.trunc)

    # J-ring arithmetic with rewriting -----------------------------------
    def mul(self, a: Poly, b: Poly, trunc: int | None = None) -> Poly:
        return self.normalize(a.mul(b, trunc))

    def pow(self, a: Poly, k: int, trunc: int | None = None) -> Poly:
        out = self.jring.one(trunc)
        for _ in range(k):
            out = self.mul(out, a, trunc)
        return out

    def compose_in_j(self, q: Poly, images: Sequence[Poly], trunc: int | None) -> Poly:
        """q(images) in the J ring, normalizing after every product."""
        jr = self.jring
        powers: list[list[Poly]] = [[jr.one(trunc)] for _ in images]

        def power(i, k):
            pw = powers[i]
            while len(pw) <= k:
                pw.append(self.mul(pw[-1], images[i], trunc))
            return pw[k]

        acc = jr.zero(trunc)
        cache: dict[Exps, Poly] = {(): jr.one(trunc)}

        def prefix(e):
            hit = cache.get(e)
            if hit is not None:
                return hit
            head = prefix(e[:-1])
            val = head if e[-1] == 0 else self.mul(head, power(len(e) - 1, e[-1]), trunc)
            cache[e] = val
            return val

        for e, c in q.sorted_terms():
            n = len(e)
            while n and e[n - 1] == 0:
                n -= 1
            acc = acc + prefix(e[:n]).scale(c)
        return acc

    # validation --------------------------------------------------------
    def validate(self, G: GroupPresentation | None = None) -> list[str]:
        problems = []
        for k, inv in enumerate(self.invariants):
            d = inv.definition
            if d.is_zero():
                problems.append(f"{inv.name}: definition is zero")
                continue
            if not d.is_homogeneous():
                problems.append(f"{inv.name}: definition is not homogeneous")
            elif d.degree() != inv.degree:
                problems.append(f"{inv.name}: declared degree {inv.degree} but definition has degree {d.degree()}")
            if d.free_symbols():
                problems.append(f"{inv.name}: definition must have rational coefficients")
        if list(self.degrees) != sorted(self.degrees):
            problems.append("invariants must be ordered by nondecreasing degree")
        if G is not None:
            problems.extend(G.check_orthogonal())
            for inv in self.invariants:
                if not check_invariance(inv.definition, G):
                    problems.append(f"{inv.name}: not invariant under the group generators")
        for rule in self.rules:
            lhs = self.expand(self.jring.monomial(rule.lhs))
            rhs = self.expand(rule.rhs)
            if lhs != rhs:
                problems.append(f"syzygy {rule.describe(self.jring)} does not hold after expansion")
            if not rule.rhs.is_homogeneous() or (rule.rhs and rule.rhs.degree() != self.jring.wdeg(rule.lhs)):
                problems.append(f"syzygy {rule.describe(self.jring)} is not homogeneous")
        return problems


def express_in_basis(p: Poly, B: MIB) -> Poly:
    return B.express(p)


def expand_to_x(q: Poly, B: MIB) -> Poly:
    return B.expand(q)


class PMatrix:
    def __init__(self, entries: list[list[Poly]], mib: MIB):
        self.entries = entries
        self.mib = mib

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def rows(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.entries]

    def __eq__(self, other):
        return isinstance(other, PMatrix) and self.entries == other.entries


def p_matrix(B: MIB) -> PMatrix:
    xr = B.xring
    grads = [[inv.definition.derivative(j) for j in range(xr.nvars)] for inv in B.invariants]
    entries: list[list[Poly | None]] = [[None] * B.r for _ in range(B.r)]
    for i in range(B.r):
        for h in range(i, B.r):
            s = xr.zero()
            for j in range(xr.nvars):
                s = s + grads[i][j] * grads[h][j]
            try:
                e = B.express(s)
            except NotExpressible as exc:
                raise MIBError(f"P[{i + 1}][{h + 1}] is not expressible in the basis: {exc}") from exc
            entries[i][h] = e
            entries[h][i] = e
    return PMatrix(entries, B)  # type: ignore[arg-type]


def rho_in_basis(B: MIB) -> Poly:
    xr = B.xring
    rho = xr.zero()
    for x in xr.gens():
        rho = rho + x * x
    return B.express(rho)
