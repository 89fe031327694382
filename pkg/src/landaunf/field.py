"""Exact coefficient field: rational functions in parameter symbols over Q.

Elements are ``num/den`` pairs of ``flint.fmpq_mpoly`` with
``gcd(num, den) = 1`` and ``den`` monic, so structural equality is
mathematical equality.  Symbols of kind ``algebraic-extension`` carry a monic
relation ``b^n = sum_j r_j b^j`` (``r_j`` rational functions in the ordinary
symbols).  Numerators are kept reduced below degree ``n`` in each extension
symbol and denominators never contain extension symbols; together with the
gcd normalization this gives a unique representative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

import flint

from . import expr as _expr

KINDS = ("quadratic-coefficient", "higher-coefficient", "auxiliary", "algebraic-extension")

Number = Union[int, Fraction, "flint.fmpq", "flint.fmpz"]


@dataclass(frozen=True)
class ParamSymbol:
    name: str
    kind: str = "higher-coefficient"
    relation: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r} for {self.name}")
        if (self.kind == "algebraic-extension") != (self.relation is not None):
            raise ValueError(f"{self.name}: a relation is required exactly for algebraic-extension symbols")


def _to_fmpq(v) -> flint.fmpq:
    if isinstance(v, flint.fmpq):
        return v
    if isinstance(v, (int, flint.fmpz)):
        return flint.fmpq(v)
    if isinstance(v, Fraction):
        return flint.fmpq(v.numerator, v.denominator)
    raise TypeError(f"cannot convert {type(v).__name__} to a rational")


def _fmpq_to_fraction(q: flint.fmpq) -> Fraction:
    return Fraction(int(q.p), int(q.q))


class _ExtRule:
    __slots__ = ("index", "degree", "lcm", "rhs")

    def __init__(self, index: int, degree: int, lcm, rhs):
        self.index = index
        self.degree = degree
        self.lcm = lcm  # base polynomial
        self.rhs = rhs  # polynomial in the symbol: lcm * b^degree == rhs


class CoefficientField:
    """Q(symbols) modulo the declared extension relations."""

    def __init__(self, symbols: Iterable[ParamSymbol | str] = ()):
        syms = [s if isinstance(s, ParamSymbol) else ParamSymbol(s) for s in symbols]
        names = [s.name for s in syms]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate parameter names: {', '.join(dup)}")
        self.symbols: tuple[ParamSymbol, ...] = tuple(syms)
        self.names: tuple[str, ...] = tuple(names)
        self._index = {n: i for i, n in enumerate(names)}
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(names), "deglex")
        self._nv = len(names)
        self._rules: list[_ExtRule] = []
        self._ext_idx: tuple[int, ...] = tuple(i for i, s in enumerate(syms) if s.kind == "algebraic-extension")
        self.zero = RationalFunction._raw(self, self.ctx.from_dict({}), self.ctx.constant(1))
        self.one = RationalFunction._raw(self, self.ctx.constant(1), self.ctx.constant(1))
        for i in self._ext_idx:
            self._rules.append(self._build_rule(i))

    # construction -----------------------------------------------------
    def _build_rule(self, idx: int) -> _ExtRule:
        sym = self.symbols[idx]
        node = _expr.parse_expression(sym.relation)

        def look(name, pos):
            if name not in self._index:
                raise _expr.UnknownIdentifierError(name, pos)
            return self.symbol(name)

        # Rules are installed one at a time, so earlier extensions are already
        # reduced while this symbol is still free.
        val = _expr.evaluate(node, look, one=self.one)
        num, den = val.num, val.den
        if any(den.degrees()[j] for j in self._ext_idx):
            raise ValueError(f"relation for {sym.name}: denominator may not involve extension symbols")
        n = num.degrees()[idx] if self._nv else 0
        if n < 2:
            raise ValueError(f"relation for {sym.name} must have degree >= 2 in {sym.name}")
        coeffs: dict[int, dict] = {}
        for exps, c in num.to_dict().items():
            e = list(exps)
            k = e[idx]
            e[idx] = 0
            coeffs.setdefault(k, {})[tuple(e)] = c
        lead = self.ctx.from_dict(coeffs[n])
        if any(lead.degrees()[j] for j in self._ext_idx):
            raise ValueError(f"relation for {sym.name}: leading coefficient may not involve extension symbols")
        # b^n = -(sum_{j<n} coeff_j b^j) / lead; multiply through by lead.
        rest = {}
        for k, d in coeffs.items():
            if k == n:
                continue
            for e, c in d.items():
                e2 = list(e)
                e2[idx] = k
                rest[tuple(e2)] = -c
        rhs = self.ctx.from_dict(rest)
        lcm = lead
        if lcm.leading_coefficient() != 1:
            lc = lcm.leading_coefficient()
            lcm = lcm / lc
            rhs = rhs / lc
        return _ExtRule(idx, n, lcm, rhs)

    def __call__(self, value) -> "RationalFunction":
        return self.coerce(value)

    def coerce(self, value) -> "RationalFunction":
        if isinstance(value, RationalFunction):
            if value.field is not self:
                raise ValueError("element belongs to a different coefficient field")
            return value
        if isinstance(value, str):
            return self.parse(value)
        q = _to_fmpq(value)
        return RationalFunction._raw(self, self.ctx.constant(q), self.ctx.constant(1))

    def symbol(self, name: str) -> "RationalFunction":
        i = self._index[name]
        g = self.ctx.gens()[i]
        if self._rules:
            return RationalFunction._make(self, g, self.ctx.constant(1))
        return RationalFunction._raw(self, g, self.ctx.constant(1))

    def parse(self, text: str, extra: Mapping[str, "RationalFunction"] | None = None) -> "RationalFunction":
        node = _expr.parse_expression(text)

        def look(name, pos):
            if extra and name in extra:
                return extra[name]
            if name not in self._index:
                raise _expr.UnknownIdentifierError(name, pos)
            return self.symbol(name)

        return self.coerce(_expr.evaluate(node, look, one=self.one))

    def has_extensions(self) -> bool:
        return bool(self._rules)

    def extension_names(self) -> tuple[str, ...]:
        return tuple(self.names[i] for i in self._ext_idx)

    def kind_of(self, name: str) -> str:
        return self.symbols[self._index[name]].kind

    def same_as(self, other: "CoefficientField") -> bool:
        return self is other or self.symbols == other.symbols

    def __repr__(self) -> str:
        return f"CoefficientField({', '.join(self.names)})"

    # polynomial helpers ------------------------------------------------
    def _reduce(self, num, den):
        """Rewrite extension powers in ``num``; returns (num, den)."""
        for rule in self._rules:
            idx, n = rule.index, rule.degree
            while num.degrees()[idx] >= n:
                low, high = {}, {}
                for e, c in num.to_dict().items():
                    if e[idx] >= n:
                        e2 = list(e)
                        e2[idx] -= n
                        high[tuple(e2)] = c
                    else:
                        low[e] = c
                num = rule.lcm * self.ctx.from_dict(low) + self.ctx.from_dict(high) * rule.rhs
                den = den * rule.lcm
        return num, den

    def _ext_basis(self) -> list[tuple[int, ...]]:
        basis = [()]
        for rule in self._rules:
            basis = [b + (k,) for b in basis for k in range(rule.degree)]
        return basis

    def _ext_coords(self, num) -> dict[tuple[int, ...], dict]:
        """Split a reduced numerator by its extension exponents."""
        out: dict[tuple[int, ...], dict] = {}
        for e, c in num.to_dict().items():
            key = tuple(e[r.index] for r in self._rules)
            e2 = list(e)
            for r in self._rules:
                e2[r.index] = 0
            out.setdefault(key, {})[tuple(e2)] = c
        return out

    def _ext_monomial(self, key: tuple[int, ...]):
        e = [0] * self._nv
        for r, k in zip(self._rules, key):
            e[r.index] = k
        return self.ctx.from_dict({tuple(e): 1})

    def _invert_num(self, num):
        """Inverse of a reduced numerator as a (num, den) pair, via a linear solve."""
        basis = self._ext_basis()
        pos = {b: i for i, b in enumerate(basis)}
        nb = len(basis)
        one = self.one
        cols = []
        for b in basis:
            prod, d = self._reduce(num * self._ext_monomial(b), self.ctx.constant(1))
            col = [self.zero] * nb
            for key, dct in self._ext_coords(prod).items():
                col[pos[key]] = RationalFunction._make(self, self.ctx.from_dict(dct), d)
            cols.append(col)
        mat = [[cols[j][i] for j in range(nb)] + [one if i == 0 else self.zero] for i in range(nb)]
        # Plain Gauss-Jordan over the base field.
        for c in range(nb):
            p = next((r for r in range(c, nb) if mat[r][c]), None)
            if p is None:
                raise ZeroDivisionError("element is not invertible modulo the extension relations")
            mat[c], mat[p] = mat[p], mat[c]
            inv = mat[c][c].inverse()
            mat[c] = [v * inv for v in mat[c]]
            for r in range(nb):
                if r != c and mat[r][c]:
                    f = mat[r][c]
                    mat[r] = [a - f * b for a, b in zip(mat[r], mat[c])]
        result = self.zero
        for i, b in enumerate(basis):
            if mat[i][nb]:
                result = result + mat[i][nb] * RationalFunction._raw(self, self._ext_monomial(b), self.ctx.constant(1))
        return result.num, result.den


class RationalFunction:
    """Canonical element of a :class:`CoefficientField`."""

    __slots__ = ("field", "num", "den", "_hash")

    # constructors ------------------------------------------------------
    @classmethod
    def _raw(cls, field: CoefficientField, num, den) -> "RationalFunction":
        self = object.__new__(cls)
        self.field = field
        self.num = num
        self.den = den
        self._hash = None
        return self

    @classmethod
    def _make(cls, field: CoefficientField, num, den) -> "RationalFunction":
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if field._rules:
            num, den = field._reduce(num, den)
        if num.is_zero():
            return field.zero
        if not den.is_one():
            g = num.gcd(den)
            if not g.is_one():
                num = num / g
                den = den / g
            lc = den.leading_coefficient()
            if lc != 1:
                num = num / lc
                den = den / lc
        return cls._raw(field, num, den)

    # predicates --------------------------------------------------------
    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def is_polynomial(self) -> bool:
        return self.den.is_one()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a constant")
        if self.num.is_zero():
            return Fraction(0)
        return _fmpq_to_fraction(self.num.leading_coefficient())

    def free_symbols(self) -> set[str]:
        names = self.field.names
        out = set()
        for p in (self.num, self.den):
            for i, d in enumerate(p.degrees()):
                if d > 0:
                    out.add(names[i])
        return out

    # arithmetic --------------------------------------------------------
    def _other(self, other):
        if isinstance(other, RationalFunction):
            if other.field is not self.field:
                raise ValueError("mixing elements of different coefficient fields")
            return other
        if isinstance(other, (int, Fraction, flint.fmpq, flint.fmpz)):
            return self.field.coerce(other)
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if o.num.is_zero():
            return self
        if self.num.is_zero():
            return o
        f = self.field
        if self.den.is_one() and o.den.is_one():
            n = self.num + o.num
            if n.is_zero():
                return f.zero
            return RationalFunction._raw(f, n, self.den)
        if self.den == o.den:
            return RationalFunction._make(f, self.num + o.num, self.den)
        g = self.den.gcd(o.den)
        if g.is_one():
            return RationalFunction._make(f, self.num * o.den + o.num * self.den, self.den * o.den)
        d1 = self.den / g
        d2 = o.den / g
        return RationalFunction._make(f, self.num * d2 + o.num * d1, d1 * o.den)

    __radd__ = __add__

    def __neg__(self):
        if self.num.is_zero():
            return self
        return RationalFunction._raw(self.field, -self.num, self.den)

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        f = self.field
        if self.num.is_zero() or o.num.is_zero():
            return f.zero
        if f._rules:
            return RationalFunction._make(f, self.num * o.num, self.den * o.den)
        if self.den.is_one() and o.den.is_one():
            return RationalFunction._raw(f, self.num * o.num, self.den)
        if o.is_constant():
            return RationalFunction._raw(f, self.num * o.num.leading_coefficient() / o.den.leading_coefficient(), self.den)
        if self.is_constant():
            return RationalFunction._raw(f, o.num * self.num.leading_coefficient() / self.den.leading_coefficient(), o.den)
        # cross-cancel before multiplying
        g1 = self.num.gcd(o.den)
        g2 = o.num.gcd(self.den)
        n1, d2 = (self.num, o.den) if g1.is_one() else (self.num / g1, o.den / g1)
        n2, d1 = (o.num, self.den) if g2.is_one() else (o.num / g2, self.den / g2)
        num = n1 * n2
        den = d1 * d2
        lc = den.leading_coefficient()
        if lc != 1:
            num = num / lc
            den = den / lc
        return RationalFunction._raw(f, num, den)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero")
        f = self.field
        if f._rules and any(self.num.degrees()[r.index] for r in f._rules):
            n, d = f._invert_num(self.num)
            return RationalFunction._make(f, self.den * n, d)
        return RationalFunction._make(f, self.den, self.num)

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return self.field.one
        f = self.field
        if f._rules:
            out = f.one
            base = self
            while k:
                if k & 1:
                    out = out * base
                base = base * base
                k >>= 1
            return out
        return RationalFunction._raw(f, self.num ** k, self.den ** k)

    # comparison --------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RationalFunction):
            return other.field is self.field and self.num == other.num and self.den == other.den
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((str(self.num), str(self.den)))
        return self._hash

    # evaluation --------------------------------------------------------
    def subs(self, values: Mapping[str, Number]) -> "RationalFunction":
        """Substitute rational numbers for some symbols."""
        f = self.field
        vals = {k: _to_fmpq(v) for k, v in values.items() if k in f._index}
        if not vals:
            return self
        num = self.num.subs(vals)
        den = self.den.subs(vals)
        if den.is_zero():
            raise ZeroDivisionError(f"denominator {self.den} vanishes at {values}")
        return RationalFunction._make(f, num, den)

    def evaluate(self, values: Mapping[str, object]) -> Fraction | float | complex:
        """Numeric value; exact ``Fraction`` when every symbol gets a rational."""
        names = self.field.names
        used = self.free_symbols()
        missing = used - set(values)
        if missing:
            raise KeyError(f"no value for {', '.join(sorted(missing))}")
        exact = all(isinstance(values[n], (int, Fraction)) for n in used)
        if exact:
            return _poly_eval_exact(self.num, names, values) / _poly_eval_exact(self.den, names, values)
        return _poly_eval_float(self.num, names, values) / _poly_eval_float(self.den, names, values)

    # factor ledger -----------------------------------------------------
    def numerator_factors(self) -> list["RationalFunction"]:
        """Irreducible non-constant factors of the numerator, primitive over Z."""
        return _factors(self.field, self.num)

    def denominator_factors(self) -> list["RationalFunction"]:
        return _factors(self.field, self.den)

    # printing ----------------------------------------------------------
    def integer_parts(self):
        """(num, den) scaled to integer coefficients with den primitive and positive."""
        num, den = self.num, self.den
        dl = _coeff_denominator_lcm(num, den)
        num = num * dl
        den = den * dl
        g = _content_gcd(num, den)
        if g != 1:
            num = num / g
            den = den / g
        return num, den

    def __str__(self) -> str:
        if self.num.is_zero():
            return "0"
        num, den = self.integer_parts()
        ns = _poly_str(num)
        if den.is_one():
            return ns
        if len(list(num.terms())) > 1:
            ns = f"({ns})"
        return f"{ns}/{_factored_str(den)}"

    def __repr__(self) -> str:
        return f"RationalFunction({self})"


def _is_bare_symbol(p) -> bool:
    terms = list(p.terms())
    if len(terms) != 1:
        return False
    exps, c = terms[0]
    return c == 1 and sum(exps) == 1


def _factored_str(den) -> str:
    """Denominator as content times factor powers, parenthesized when compound."""
    if den.is_constant():
        return str(_fmpq_to_fraction(den.leading_coefficient()))
    content, facs = den.factor()
    content = _fmpq_to_fraction(content)
    pieces = [] if content == 1 else [str(content)]
    facs = sorted(facs, key=lambda fe: (not _is_bare_symbol(fe[0]), fe[0].total_degree(), str(fe[0])))
    for fac, e in facs:
        fs = _poly_str(fac)
        if not _is_bare_symbol(fac):
            fs = f"({fs})"
        pieces.append(fs if e == 1 else f"{fs}^{e}")
    if len(pieces) == 1 and (facs[0][1] == 1 or _is_bare_symbol(facs[0][0])):
        return pieces[0]
    return f"({'*'.join(pieces)})"


def _poly_str(p) -> str:
    """Render a polynomial with ``^``/``*`` in the problem-file grammar."""
    if p.is_zero():
        return "0"
    names = p.context().names()
    parts = []
    for exps, c in p.terms():
        c = _fmpq_to_fraction(c)
        mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e)
        neg = c < 0
        a = abs(c)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        elif a.denominator == 1:
            body = f"{a.numerator}*{mono}"
        else:
            body = f"{a.numerator}/{a.denominator}*{mono}"
        parts.append(("-" if neg else "+", body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sgn, body in parts[1:]:
        out += f" {sgn} {body}"
    return out


def _coeff_denominator_lcm(*polys) -> int:
    out = 1
    for p in polys:
        for _, c in p.terms():
            out = math.lcm(out, int(c.q))
    return out


def _content_gcd(*polys) -> int:
    g = 0
    for p in polys:
        for _, c in p.terms():
            g = math.gcd(g, int(c.p))
    # keep the denominator's leading coefficient positive
    lead = polys[-1].leading_coefficient()
    return -g if lead < 0 else (g or 1)


def _factors(field: CoefficientField, p) -> list[RationalFunction]:
    if p.is_constant():
        return []
    _, facs = p.factor()
    out = []
    for fac, _ in facs:
        out.append(RationalFunction._raw(field, fac, field.ctx.constant(1)))
    return out


def _poly_eval_exact(p, names, values) -> Fraction:
    total = Fraction(0)
    for exps, c in p.terms():
        t = _fmpq_to_fraction(c)
        for n, e in zip(names, exps):
            if e:
                t *= Fraction(values[n]) ** int(e)
        total += t
    return total


def _poly_eval_float(p, names, values):
    total = 0.0
    for exps, c in p.terms():
        t = float(int(c.p)) / float(int(c.q))
        for n, e in zip(names, exps):
            if e:
                t *= values[n] ** int(e)
        total += t
    return total


def common_field(*fields: CoefficientField) -> CoefficientField:
    f0 = fields[0]
    for f in fields[1:]:
        if f is not f0:
            raise ValueError("elements belong to different coefficient fields")
    return f0
