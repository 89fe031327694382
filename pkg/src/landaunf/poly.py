"""Sparse weighted polynomials with exact coefficients and optional truncation.

One class serves both rings: order-parameter polynomials (all weights 1) and
polynomials in the basic invariants (weight of J_a is its x-degree d_a).
The weighted degree is the grading used for truncation; monomials sort by
weighted degree, then lexicographically with the last variable most
significant (graded lex with x1 < x2 < ...).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .field import CoefficientField, RationalFunction

Exps = tuple[int, ...]


class PolyRing:
    """Variables, their weights and the coefficient field."""

    def __init__(self, field: CoefficientField, names: Sequence[str], weights: Sequence[int] | None = None):
        self.field = field
        self.names = tuple(names)
        self.nvars = len(self.names)
        self.weights = tuple(weights) if weights is not None else (1,) * self.nvars
        if len(self.weights) != self.nvars:
            raise ValueError("one weight per variable required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        self._index = {n: i for i, n in enumerate(self.names)}

    def __eq__(self, other):
        return (
            isinstance(other, PolyRing)
            and self.field is other.field
            and self.names == other.names
            and self.weights == other.weights
        )

    def __hash__(self):
        return hash((id(self.field), self.names, self.weights))

    def __repr__(self):
        return f"PolyRing({', '.join(self.names)}; weights={self.weights})"

    def index(self, name: str) -> int:
        return self._index[name]

    def wdeg(self, e: Exps) -> int:
        return sum(a * w for a, w in zip(e, self.weights))

    def sort_key(self, e: Exps):
        return (self.wdeg(e), e[::-1])

    def zero(self, trunc: int | None = None) -> "Poly":
        return Poly(self, {}, trunc)

    def one(self, trunc: int | None = None) -> "Poly":
        return self.constant(self.field.one, trunc)

    def constant(self, c, trunc: int | None = None) -> "Poly":
        c = self.field.coerce(c)
        return Poly(self, {(0,) * self.nvars: c} if c else {}, trunc)

    def gen(self, i: int | str, trunc: int | None = None) -> "Poly":
        if isinstance(i, str):
            i = self._index[i]
        e = [0] * self.nvars
        e[i] = 1
        return Poly(self, {tuple(e): self.field.one}, trunc)

    def gens(self, trunc: int | None = None) -> list["Poly"]:
        return [self.gen(i, trunc) for i in range(self.nvars)]

    def monomial(self, e: Exps, c=None, trunc: int | None = None) -> "Poly":
        c = self.field.one if c is None else self.field.coerce(c)
        return Poly(self, {tuple(e): c} if c else {}, trunc)

    def monomials_of_degree(self, d: int) -> list[Exps]:
        """All exponent vectors of weighted degree ``d``, sorted."""
        out: list[Exps] = []

        def rec(i: int, left: int, acc: list[int]):
            if i == self.nvars:
                if left == 0:
                    out.append(tuple(acc))
                return
            w = self.weights[i]
            for k in range(left // w + 1):
                acc.append(k)
                rec(i + 1, left - k * w, acc)
                acc.pop()

        rec(0, d, [])
        out.sort(key=self.sort_key)
        return out


def _mintrunc(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class Poly:
    """Immutable sparse polynomial; ``trunc`` caps the retained weighted degree."""

    __slots__ = ("ring", "terms", "trunc")

    def __init__(self, ring: PolyRing, terms: Mapping[Exps, RationalFunction], trunc: int | None = None):
        self.ring = ring
        self.trunc = trunc
        if trunc is None:
            self.terms = {e: c for e, c in terms.items() if c}
        else:
            wd = ring.wdeg
            self.terms = {e: c for e, c in terms.items() if c and wd(e) <= trunc}

    @classmethod
    def _trusted(cls, ring: PolyRing, terms: dict, trunc: int | None) -> "Poly":
        self = object.__new__(cls)
        self.ring = ring
        self.terms = terms
        self.trunc = trunc
        return self

    # basic queries -----------------------------------------------------
    @property
    def field(self) -> CoefficientField:
        return self.ring.field

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, e: Exps) -> RationalFunction:
        return self.terms.get(tuple(e), self.field.zero)

    def sorted_terms(self) -> list[tuple[Exps, RationalFunction]]:
        key = self.ring.sort_key
        return sorted(self.terms.items(), key=lambda t: key(t[0]))

    def degree(self) -> int:
        """Maximal weighted degree (-1 for zero)."""
        wd = self.ring.wdeg
        return max((wd(e) for e in self.terms), default=-1)

    def low_degree(self) -> int:
        wd = self.ring.wdeg
        return min((wd(e) for e in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        wd = self.ring.wdeg
        return len({wd(e) for e in self.terms}) <= 1

    def component(self, d: int) -> "Poly":
        wd = self.ring.wdeg
        return Poly._trusted(self.ring, {e: c for e, c in self.terms.items() if wd(e) == d}, self.trunc)

    def components(self) -> dict[int, "Poly"]:
        wd = self.ring.wdeg
        out: dict[int, dict] = {}
        for e, c in self.terms.items():
            out.setdefault(wd(e), {})[e] = c
        return {d: Poly._trusted(self.ring, t, self.trunc) for d, t in sorted(out.items())}

    def truncate(self, trunc: int | None) -> "Poly":
        return Poly(self.ring, self.terms, _mintrunc(self.trunc, trunc))

    def with_trunc(self, trunc: int | None) -> "Poly":
        """Same terms (dropping any above ``trunc``), truncation set to ``trunc``."""
        return Poly(self.ring, self.terms, trunc)

    def coefficients(self) -> list[RationalFunction]:
        return [c for _, c in self.sorted_terms()]

    def free_symbols(self) -> set[str]:
        out: set[str] = set()
        for c in self.terms.values():
            out |= c.free_symbols()
        return out

    # arithmetic --------------------------------------------------------
    def _lift(self, other) -> "Poly | None":
        if isinstance(other, Poly):
            if other.ring != self.ring:
                raise ValueError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, (RationalFunction, int, Fraction)):
            return self.ring.constant(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        trunc = _mintrunc(self.trunc, o.trunc)
        terms = dict(self.terms)
        for e, c in o.terms.items():
            v = terms.get(e)
            if v is None:
                terms[e] = c
            else:
                s = v + c
                if s:
                    terms[e] = s
                else:
                    del terms[e]
        if trunc is not None and (trunc != self.trunc or trunc != o.trunc):
            return Poly(self.ring, terms, trunc)
        return Poly._trusted(self.ring, terms, trunc)

    __radd__ = __add__

    def __neg__(self):
        return Poly._trusted(self.ring, {e: -c for e, c in self.terms.items()}, self.trunc)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def scale(self, c) -> "Poly":
        c = self.field.coerce(c)
        if not c:
            return Poly._trusted(self.ring, {}, self.trunc)
        if c.is_one():
            return self
        return Poly._trusted(self.ring, {e: v * c for e, v in self.terms.items()}, self.trunc)

    def __mul__(self, other):
        if isinstance(other, (RationalFunction, int, Fraction)):
            return self.scale(other)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.mul(o)

    __rmul__ = __mul__

    def mul(self, other: "Poly", trunc: int | None = None) -> "Poly":
        trunc = _mintrunc(_mintrunc(self.trunc, other.trunc), trunc)
        ring = self.ring
        wd = ring.wdeg
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        out: dict = {}
        if trunc is None:
            for ea, ca in a.items():
                for eb, cb in b.items():
                    e = tuple(x + y for x, y in zip(ea, eb))
                    v = out.get(e)
                    out[e] = ca * cb if v is None else v + ca * cb
        else:
            bdeg = sorted(((wd(e), e, c) for e, c in b.items()), key=lambda t: t[0])
            for ea, ca in a.items():
                room = trunc - wd(ea)
                if room < 0:
                    continue
                for d, eb, cb in bdeg:
                    if d > room:
                        break
                    e = tuple(x + y for x, y in zip(ea, eb))
                    v = out.get(e)
                    out[e] = ca * cb if v is None else v + ca * cb
        return Poly(ring, out, trunc)

    def __truediv__(self, other):
        if isinstance(other, (RationalFunction, int, Fraction)):
            return self.scale(self.field.coerce(other).inverse())
        if isinstance(other, Poly) and other.is_constant():
            return self.scale(other.constant_term().inverse())
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return self.pow(k)

    def pow(self, k: int, trunc: int | None = None) -> "Poly":
        trunc = _mintrunc(self.trunc, trunc)
        out = self.ring.one(trunc)
        base = self.truncate(trunc) if trunc is not None else self
        while k:
            if k & 1:
                out = out.mul(base, trunc)
            k >>= 1
            if k:
                base = base.mul(base, trunc)
        return out

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> RationalFunction:
        return self.terms.get((0,) * self.ring.nvars, self.field.zero)

    def derivative(self, i: int | str) -> "Poly":
        if isinstance(i, str):
            i = self.ring.index(i)
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = list(e)
                e2[i] = k - 1
                out[tuple(e2)] = c * k
        trunc = None if self.trunc is None else self.trunc - self.ring.weights[i]
        return Poly._trusted(self.ring, out, trunc)

    def map_coefficients(self, fn) -> "Poly":
        return Poly(self.ring, {e: fn(c) for e, c in self.terms.items()}, self.trunc)

    def subs_params(self, values: Mapping[str, object]) -> "Poly":
        return self.map_coefficients(lambda c: c.subs(values))

    # comparison --------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.ring == other.ring and self.terms == other.terms
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # composition -------------------------------------------------------
    def compose(self, images: Sequence["Poly"], trunc: int | None = None) -> "Poly":
        """Substitute ``images[i]`` for variable ``i``; truncate at ``trunc``."""
        if len(images) != self.ring.nvars:
            raise ValueError(f"need {self.ring.nvars} images, got {len(images)}")
        if not images:
            return self
        target = images[0].ring
        for im in images:
            if im.ring != target:
                raise ValueError("images live in different rings")
        for im in images:
            trunc = _mintrunc(trunc, im.trunc)
        zero = target.zero(trunc)
        if not self.terms:
            return zero
        lows = [im.low_degree() if im.terms else None for im in images]
        # powers[i][k] = images[i]^k (truncated)
        powers: list[list[Poly]] = [[target.one(trunc)] for _ in images]

        def power(i: int, k: int) -> Poly:
            pw = powers[i]
            while len(pw) <= k:
                pw.append(pw[-1].mul(images[i], trunc))
            return pw[k]

        prefix: dict[Exps, Poly] = {(): target.one(trunc)}

        def prefix_product(e: Exps) -> Poly:
            hit = prefix.get(e)
            if hit is not None:
                return hit
            head = prefix_product(e[:-1])
            i = len(e) - 1
            val = head if e[-1] == 0 else head.mul(power(i, e[-1]), trunc)
            prefix[e] = val
            return val

        acc: dict = {}
        for e, c in self.sorted_terms():
            if trunc is not None:
                low = 0
                dead = False
                for i, k in enumerate(e):
                    if k:
                        if lows[i] is None:
                            dead = True
                            break
                        low += k * lows[i]
                if dead or low > trunc:
                    continue
            elif any(k and lows[i] is None for i, k in enumerate(e)):
                continue
            # strip trailing zeros so prefixes are shared
            n = len(e)
            while n and e[n - 1] == 0:
                n -= 1
            term = prefix_product(e[:n])
            for te, tc in term.terms.items():
                v = acc.get(te)
                acc[te] = c * tc if v is None else v + c * tc
        return Poly(target, acc, trunc)

    # evaluation --------------------------------------------------------
    def evaluate(self, point: Sequence, params: Mapping[str, object] | None = None):
        """Numeric value at ``point`` with coefficients evaluated at ``params``."""
        total = 0
        for e, c in self.terms.items():
            cv = c.evaluate(params or {})
            t = cv
            for x, k in zip(point, e):
                if k:
                    t = t * x ** k
            total = total + t
        return total

    # printing ----------------------------------------------------------
    def monomial_str(self, e: Exps) -> str:
        parts = [n if k == 1 else f"{n}^{k}" for n, k in zip(self.ring.names, e) if k]
        return "*".join(parts)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for e, c in self.sorted_terms():
            mono = self.monomial_str(e)
            cs = str(c)
            neg = False
            if _single_term(c):
                if cs.startswith("-"):
                    neg, cs = True, cs[1:]
            else:
                cs = f"({cs})"
            if not mono:
                body = cs
            elif cs == "1":
                body = mono
            else:
                body = f"{cs}*{mono}"
            out.append(("-" if neg else "+", body))
        s = ("-" if out[0][0] == "-" else "") + out[0][1]
        for sgn, body in out[1:]:
            s += f" {sgn} {body}"
        return s

    def __repr__(self) -> str:
        t = "" if self.trunc is None else f", trunc={self.trunc}"
        return f"Poly({self}{t})"


def _single_term(c: RationalFunction) -> bool:
    return len(list(c.num.terms())) == 1


class PolyMap:
    """Vector of polynomials, one per variable of the source ring."""

    __slots__ = ("components", "trunc")

    def __init__(self, components: Sequence[Poly], trunc: int | None = None):
        comps = list(components)
        if not comps:
            raise ValueError("empty map")
        ring = comps[0].ring
        if any(c.ring != ring for c in comps):
            raise ValueError("map components live in different rings")
        if len(comps) != ring.nvars:
            raise ValueError("map must have one component per variable")
        if trunc is None:
            for c in comps:
                trunc = _mintrunc(trunc, c.trunc)
        self.components = tuple(c.with_trunc(trunc) for c in comps)
        self.trunc = trunc

    @property
    def ring(self) -> PolyRing:
        return self.components[0].ring

    @classmethod
    def identity(cls, ring: PolyRing, trunc: int | None) -> "PolyMap":
        return cls(ring.gens(trunc), trunc)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __eq__(self, other):
        return isinstance(other, PolyMap) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def is_identity(self) -> bool:
        return all(c == g for c, g in zip(self.components, self.ring.gens()))

    def linear_part_is_identity(self) -> bool:
        n = self.ring.nvars
        for i, c in enumerate(self.components):
            if c.constant_term():
                return False
            for j in range(n):
                e = tuple(1 if t == j else 0 for t in range(n))
                want = self.field.one if i == j else self.field.zero
                if c.coefficient(e) != want:
                    return False
        return True

    @property
    def field(self):
        return self.ring.field

    def compose(self, inner: "PolyMap") -> "PolyMap":
        """``self o inner``: x -> self(inner(x))."""
        trunc = _mintrunc(self.trunc, inner.trunc)
        return PolyMap([c.compose(inner.components, trunc) for c in self.components], trunc)

    def truncate(self, trunc: int) -> "PolyMap":
        t = _mintrunc(self.trunc, trunc)
        return PolyMap([c.with_trunc(t) for c in self.components], t)

    def subs_params(self, values) -> "PolyMap":
        return PolyMap([c.subs_params(values) for c in self.components], self.trunc)

    def evaluate(self, point, params=None):
        return [c.evaluate(point, params) for c in self.components]

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.components) + ")"

    def __repr__(self):
        return f"PolyMap{self}"


def poly_substitute(p: Poly, m: PolyMap) -> Poly:
    """``p o m`` expanded and truncated at the common truncation degree."""
    if p.ring.nvars != len(m):
        raise ValueError(f"dimension mismatch: polynomial in {p.ring.nvars} variables, map has {len(m)} components")
    return p.compose(m.components, _mintrunc(p.trunc, m.trunc))


class NotNearIdentityError(ValueError):
    pass


def series_invert(m: PolyMap) -> PolyMap:
    """Compositional inverse of a near-identity map through its truncation degree.

    Writing ``m = id + g`` the inverse ``n`` solves ``n = id - g(n)``; each
    pass of the fixed-point iteration fixes one more degree, and the loop stops
    once an iteration changes nothing.
    """
    if m.trunc is None:
        raise ValueError("series inversion needs a truncation degree")
    if not m.linear_part_is_identity():
        raise NotNearIdentityError("linear part of the map is not the identity")
    ring = m.ring
    D = m.trunc
    ids = ring.gens(D)
    g = [c - x for c, x in zip(m.components, ids)]
    n = list(ids)
    for _ in range(max(D - 1, 0)):
        new = [x - gi.compose(n, D) for x, gi in zip(ids, g)]
        if new == n:
            break
        n = new
    return PolyMap(n, D)
