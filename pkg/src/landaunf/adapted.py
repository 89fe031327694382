"""Adapted quadratic invariants Z = A J, resonance classification, diagonal solve."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Sequence

from .field import CoefficientField, RationalFunction
from .homological import QuadraticData, quadratic_data
from .invariants import MIB, Invariant
from .linalg import Ledger, mat_inverse, mat_mul
from .poly import Exps, Poly, PolyRing


class AdaptError(ValueError):
    pass


Matrix = list[list[RationalFunction]]


def jordan_violation(P: Matrix) -> str | None:
    """None if P is upper bidiagonal Jordan form, else the offending entry."""
    n = len(P)
    for i in range(n):
        for j in range(n):
            v = P[i][j]
            if i == j:
                continue
            if j == i + 1:
                if v.is_zero():
                    continue
                if v.is_one() and P[i][i] == P[j][j]:
                    continue
                return f"P[{i + 1}][{j + 1}] = {v}"
            if v:
                return f"P[{i + 1}][{j + 1}] = {v}"
    return None


@dataclass
class AdaptedBasis:
    A: Matrix
    A_inv: Matrix
    Q: Matrix
    P: Matrix
    P_s: Matrix
    P_n: Matrix
    eigenvalues: list
    exact: bool = True
    mib: MIB | None = None
    zmib: MIB | None = None
    notes: list[str] = dc_field(default_factory=list)

    @property
    def s(self) -> int:
        return len(self.A)

    @property
    def semisimple(self) -> bool:
        return all(not v for row in self.P_n for v in row) if self.exact else True

    def z_definitions(self) -> list[Poly]:
        """Z_mu = A_mu,nu J_nu as polynomials in J."""
        jr = self.mib.jring
        gens = jr.gens()
        out = []
        for row in self.A:
            z = jr.zero()
            for nu, a in enumerate(row):
                if a:
                    z = z + gens[nu].scale(a)
            out.append(z)
        return out

    def to_z(self, q: Poly) -> Poly:
        """Rewrite a J-polynomial in the adapted invariants."""
        zr = self.zmib.jring
        zg = zr.gens()
        images = []
        for a in range(self.mib.r):
            if a < self.s:
                im = zr.zero()
                for b in range(self.s):
                    if self.A_inv[a][b]:
                        im = im + zg[b].scale(self.A_inv[a][b])
                images.append(im)
            else:
                images.append(zg[a])
        return self.zmib.normalize(q.compose(images, q.trunc))

    def to_j(self, q: Poly) -> Poly:
        jr = self.mib.jring
        images = self.z_definitions() + list(jr.gens()[self.s :])
        return self.mib.normalize(q.compose(images, q.trunc))


def _build_zmib(mib: MIB, A: Matrix, A_inv: Matrix) -> MIB:
    s, r = mib.s, mib.r
    ident = all(A[i][j] == (mib.field.one if i == j else mib.field.zero) for i in range(s) for j in range(s))
    if ident:
        return mib
    names = [f"Z{i + 1}" for i in range(s)] + list(mib.names[s:])
    zring = PolyRing(mib.field, names, mib.degrees)
    defs = []
    for mu in range(s):
        d = mib.xring.zero()
        for nu in range(s):
            if A[mu][nu]:
                d = d + mib.invariants[nu].definition.scale(A[mu][nu])
        defs.append(Invariant(names[mu], d, 2))
    defs += [Invariant(names[a], mib.invariants[a].definition, mib.degrees[a]) for a in range(s, r)]
    zg = zring.gens()
    images = []
    for a in range(r):
        if a < s:
            im = zring.zero()
            for b in range(s):
                if A_inv[a][b]:
                    im = im + zg[b].scale(A_inv[a][b])
            images.append(im)
        else:
            images.append(zg[a])
    syz = []
    for rule in mib.rules:
        diff = mib.jring.monomial(rule.lhs) - rule.rhs
        syz.append((diff.compose(images), zring.zero()))
    return MIB(mib.xring, defs, syz, jring=zring)


def adapt(Q: Matrix, A: Matrix, field: CoefficientField, mib: MIB | None = None) -> AdaptedBasis:
    """Verify that A Q A^-1 is in Jordan form and split it."""
    s = len(Q)
    if len(A) != s or any(len(row) != s for row in A):
        raise AdaptError(f"A must be {s}x{s}")
    A = [[field.coerce(v) for v in row] for row in A]
    try:
        A_inv = mat_inverse(A, field)
    except ZeroDivisionError:
        raise AdaptError("A is singular") from None
    P = mat_mul(mat_mul(A, Q, field), A_inv, field)
    bad = jordan_violation(P)
    if bad is not None:
        raise AdaptError(f"A Q A^-1 is not in Jordan form: {bad}")
    zero = field.zero
    P_s = [[P[i][j] if i == j else zero for j in range(s)] for i in range(s)]
    P_n = [[P[i][j] if i != j else zero for j in range(s)] for i in range(s)]
    if mat_mul(P_s, P_n, field) != mat_mul(P_n, P_s, field):
        raise AdaptError("semisimple and nilpotent parts do not commute")
    basis = AdaptedBasis(A, A_inv, Q, P, P_s, P_n, [P[i][i] for i in range(s)], True, mib)
    if mib is not None:
        basis.zmib = _build_zmib(mib, A, A_inv)
    return basis


def identity_adapt(data: QuadraticData) -> AdaptedBasis:
    f = data.mib.field
    s = data.s
    ident = [[f.one if i == j else f.zero for j in range(s)] for i in range(s)]
    return adapt(data.Q, ident, f, data.mib)


def numeric_jordan(Q: Matrix, params: Mapping[str, object], field: CoefficientField, mib: MIB | None = None, dps: int = 50):
    """Jordan data of Q at a numeric parameter point.

    Exact when sympy finds a rational Jordan form; otherwise the eigenvalues
    come from mpmath at ``dps`` digits and the result is flagged non-exact.
    """
    import sympy

    vals = [[_exact_value(v, params) for v in row] for row in Q]
    M = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else sympy.Float(v) for v in row] for row in vals])
    try:
        Pm, J = M.jordan_form()
        rational = all(x.is_Rational for x in list(Pm) + list(J))
    except Exception:  # noqa: BLE001 - sympy raises several error types here
        rational = False
    if rational:
        A = [[field.coerce(Fraction(int(x.p), int(x.q))) for x in row] for row in Pm.inv().tolist()]
        Qn = [[field.coerce(Fraction(int(x.p), int(x.q))) for x in row] for row in M.tolist()]
        out = adapt(Qn, A, field, mib)
        out.notes.append("Jordan form computed at a numeric parameter point")
        return out
    import mpmath

    mpmath.mp.dps = dps
    Mm = mpmath.matrix([[mpmath.mpf(float(v)) if not isinstance(v, Fraction) else mpmath.mpf(v.numerator) / v.denominator for v in row] for row in vals])
    E, ER = mpmath.eig(Mm)
    order = sorted(range(len(E)), key=lambda i: (float(mpmath.re(E[i])), float(mpmath.im(E[i]))))
    eig = [E[i] for i in order]
    Rm = mpmath.matrix(len(E), len(E))
    for j, i in enumerate(order):
        for k in range(len(E)):
            Rm[k, j] = ER[k, i]
    A_num = mpmath.inverse(Rm)
    f = field
    zero = f.zero
    s = len(Q)
    basis = AdaptedBasis(
        A=[[zero] * s for _ in range(s)],
        A_inv=[[zero] * s for _ in range(s)],
        Q=Q,
        P=[[zero] * s for _ in range(s)],
        P_s=[[zero] * s for _ in range(s)],
        P_n=[[zero] * s for _ in range(s)],
        eigenvalues=eig,
        exact=False,
        mib=mib,
    )
    basis.notes.append(f"non-exact: eigenvalues from mpmath at {dps} digits")
    basis.numeric_A = A_num  # type: ignore[attr-defined]
    return basis


def _exact_value(v: RationalFunction, params):
    return v.evaluate(params)


@dataclass
class ResonanceClass:
    monomial: Exps
    label: str
    k: tuple[int, ...]
    weight: object
    verdict: str  # resonant | nonresonant | conditional
    factors: list[RationalFunction] = dc_field(default_factory=list)

    def describe(self) -> str:
        extra = ""
        if self.verdict == "conditional":
            extra = "(" + ", ".join(str(f) for f in self.factors) + ")"
        return f"{self.label}: weight {self.weight} -> {self.verdict}{extra}"


def _weight_verdict(w, eigen: Sequence, k: Sequence[int], exact: bool, tol: float = 1e-9):
    if not exact:
        mag = abs(complex(w))
        scale = max([abs(complex(e)) for e in eigen] + [1.0])
        return ("resonant", []) if mag <= tol * scale else ("nonresonant", [])
    if w.is_zero():
        return "resonant", []
    if w.is_constant():
        return "nonresonant", []
    # A rational multiple of one eigenvalue that actually occurs is nonzero
    # whenever the quadratic part is nondegenerate.
    for a, lam in enumerate(eigen):
        if k[a] and lam and (w / lam).is_constant():
            return "nonresonant", []
    return "conditional", w.numerator_factors()


def classify_resonances(basis: AdaptedBasis, B: MIB, degree: int) -> list[ResonanceClass]:
    """Every canonical adapted monomial of the given induced degree with its weight."""
    zmib = basis.zmib or B
    s = B.s
    out = []
    zr = zmib.jring
    f = B.field
    for e in zmib.canonical_monomials(degree):
        k = e[:s]
        if basis.exact:
            w = f.zero
            for a in range(s):
                if k[a]:
                    w = w + basis.eigenvalues[a] * k[a]
        else:
            w = sum(basis.eigenvalues[a] * k[a] for a in range(s))
        verdict, factors = _weight_verdict(w, basis.eigenvalues, k, basis.exact)
        out.append(ResonanceClass(e, zr.monomial(e).__str__(), tuple(k), w, verdict, factors))
    return out


@dataclass
class DiagonalSolution:
    xi: Poly  # generating function in adapted coordinates
    retained: Poly
    ledger: Ledger
    chi_j: Poly  # generating function back in the original invariants


def diagonal_solve(psi_m: Poly, basis: AdaptedBasis) -> DiagonalSolution:
    """xi = coefficient / (lambda . k) on nonresonant adapted monomials."""
    if not basis.exact:
        raise AdaptError("diagonal_solve needs an exact adapted basis")
    zmib = basis.zmib
    s = basis.s
    f = zmib.field
    psi_z = basis.to_z(psi_m) if psi_m.ring == basis.mib.jring else psi_m
    xi: dict = {}
    kept: dict = {}
    ledger = Ledger()
    for e, c in psi_z.terms.items():
        w = f.zero
        for a in range(s):
            if e[a]:
                w = w + basis.eigenvalues[a] * e[a]
        if w.is_zero():
            kept[e] = c
        else:
            ledger.add_divisor(w)
            xi[e] = c / w
    xi_p = Poly(zmib.jring, xi)
    kept_p = Poly(zmib.jring, kept)
    return DiagonalSolution(xi_p, kept_p, ledger, basis.to_j(xi_p))


def adapted_quadratic_data(basis: AdaptedBasis, psi: Poly) -> QuadraticData:
    """Quadratic data rebuilt from the adapted invariants' own P-matrix."""
    return quadratic_data(basis.to_z(psi), basis.zmib)
