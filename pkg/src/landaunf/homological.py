"""Quadratic data, the homological operator and its per-order solve.

Sign convention: ``apply_L`` is the positive operator
``L(chi) = c^a P0_ab d(chi)/dJ_b``; the coordinate change generated by
``chi`` is ``x -> x - grad(chi o J)``, which shifts the order-m part of the
potential by ``-L(chi)`` at first order.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .field import CoefficientField, RationalFunction
from .invariants import MIB, PMatrix, p_matrix
from .linalg import Ledger, row_reduce
from .poly import Exps, Poly


def extract_quadratic_part(P: PMatrix, B: MIB) -> list[list[list[RationalFunction]]]:
    """K[g][a][b]: coefficient of J_g in the degree-2 part of P_ab (a, b < s).

    Entries are pure numbers for a basis with rational definitions; adapted
    bases built from a parameter-dependent matrix give field elements.
    """
    s = B.s
    K = [[[B.field.zero] * s for _ in range(s)] for _ in range(B.r)]
    for a in range(s):
        for b in range(s):
            comp = P[a, b].component(2)
            for e, c in comp.terms.items():
                g = next(i for i, k in enumerate(e) if k)
                K[g][a][b] = c
    return K


def q_matrix(K, c: Sequence[RationalFunction], field: CoefficientField) -> list[list[RationalFunction]]:
    """Q[b][g] = sum_a c_a K[g][a][b], for b, g < s."""
    s = len(c)
    Q = []
    for b in range(s):
        row = []
        for g in range(s):
            v = field.zero
            for a in range(s):
                k = K[g][a][b]
                if k:
                    v = v + c[a] * k
            row.append(v)
        Q.append(row)
    return Q


@dataclass
class QuadraticData:
    c: list[RationalFunction]
    K: list[list[list[RationalFunction]]]
    Q: list[list[RationalFunction]]
    mib: MIB
    P: PMatrix

    @property
    def s(self) -> int:
        return len(self.c)

    def theta(self) -> list[Poly]:
        """Row polynomials sum_g Q[b][g] J_g."""
        jr = self.mib.jring
        gens = jr.gens()
        out = []
        for b in range(self.s):
            t = jr.zero()
            for g in range(self.s):
                if self.Q[b][g]:
                    t = t + gens[g].scale(self.Q[b][g])
            out.append(t)
        return out


def quadratic_coefficients(psi: Poly, B: MIB) -> list[RationalFunction]:
    """c_a: coefficients of J_a (a < s) in the potential."""
    out = []
    for a in range(B.s):
        e = tuple(1 if i == a else 0 for i in range(B.r))
        out.append(psi.coefficient(e))
    return out


def quadratic_data(psi: Poly, B: MIB, P: PMatrix | None = None) -> QuadraticData:
    P = P or p_matrix(B)
    K = extract_quadratic_part(P, B)
    c = quadratic_coefficients(psi, B)
    return QuadraticData(c, K, q_matrix(K, c, B.field), B, P)


def apply_L(chi: Poly, data: QuadraticData) -> Poly:
    """Homological operator built from Q (graded, linear, syzygy-normalized)."""
    B = data.mib
    out = B.jring.zero()
    for b, th in enumerate(data.theta()):
        if th:
            d = chi.derivative(b)
            if d:
                out = out + th.mul(d)
    return B.normalize(out.with_trunc(chi.trunc))


def apply_L_direct(chi: Poly, data: QuadraticData) -> Poly:
    """Same operator assembled as c^a P0_ab d/dJ_b (construction check)."""
    B = data.mib
    out = B.jring.zero()
    for a in range(data.s):
        if not data.c[a]:
            continue
        for b in range(data.s):
            p0 = data.P[a, b].component(2)
            d = chi.derivative(b)
            if p0 and d:
                out = out + p0.mul(d).scale(data.c[a])
    return B.normalize(out.with_trunc(chi.trunc))


def apply_first_order(chi: Poly, data: QuadraticData) -> Poly:
    """Complete first-order action <grad Psi0, grad chi> = c^a P_ab d(chi)/dJ_b.

    ``b`` ranges over all invariants; for s = r this equals :func:`apply_L`.
    """
    B = data.mib
    out = B.jring.zero()
    for a in range(data.s):
        if not data.c[a]:
            continue
        for b in range(B.r):
            d = chi.derivative(b)
            if d:
                out = out + data.P[a, b].mul(d).scale(data.c[a])
    return B.normalize(out.with_trunc(chi.trunc))


def action_matrix(op, basis: Sequence[Exps], data: QuadraticData) -> list[list[RationalFunction]]:
    """Column j holds the coordinates of op(basis_j) in ``basis``."""
    jr = data.mib.jring
    f = data.mib.field
    pos = {e: i for i, e in enumerate(basis)}
    n = len(basis)
    M = [[f.zero] * n for _ in range(n)]
    for j, e in enumerate(basis):
        img = op(jr.monomial(e), data)
        for e2, v in img.terms.items():
            if e2 not in pos:
                raise ArithmeticError(f"operator leaves the degree-{jr.wdeg(e)} basis")
            M[pos[e2]][j] = v
    return M


@dataclass
class HomologicalStep:
    order: int
    basis: list[Exps]
    action_matrix: list[list[RationalFunction]]
    psi: Poly
    chi: Poly
    removed: Poly
    retained: Poly
    ledger: Ledger
    retained_monomials: list[Exps] = dc_field(default_factory=list)
    target: Poly | None = None  # kept term at top order

    @property
    def degree(self) -> int:
        return self.order + 2

    def chi_coefficients(self) -> list[RationalFunction]:
        return [self.chi.coefficient(e) for e in self.basis]


def decompose(
    M: list[list[RationalFunction]],
    rhs: list[RationalFunction],
    field: CoefficientField,
    keep_first: Sequence[int] = (),
) -> tuple[list[RationalFunction], list[RationalFunction], list[int], Ledger]:
    """Split ``rhs = M a + r`` with ``r`` on a complement of the range.

    Solves ``[E_keep | M | E_rest] (r_keep, a, r_rest) = rhs`` by deterministic
    elimination with all free variables zero.  Returns ``a``, ``r``, the
    indices carrying ``r`` and the ledger.  With ``keep_first`` empty this is
    the plain ``[M | I]`` split: range first, complement from the leftover
    unit columns.
    """
    n = len(M)
    zero, one = field.zero, field.one
    keep = list(keep_first)
    rest = [i for i in range(n) if i not in set(keep)]
    cols: list[tuple[str, int]] = [("e", i) for i in keep] + [("m", j) for j in range(n)] + [("e", i) for i in rest]
    rows = []
    for i in range(n):
        row = []
        for kind, j in cols:
            if kind == "m":
                row.append(M[i][j])
            else:
                row.append(one if i == j else zero)
        row.append(rhs[i])
        rows.append(row)
    ech = row_reduce(rows, len(cols), field)
    a = [zero] * n
    r = [zero] * n
    comp: list[int] = []
    for k, c in enumerate(ech.pivots):
        kind, j = cols[c]
        v = ech.rows[k][len(cols)]
        if kind == "m":
            a[j] = v
        else:
            comp.append(j)
            r[j] = v
    return a, r, sorted(comp), ech.ledger


def solve_homological(psi_m: Poly, data: QuadraticData, B: MIB, m: int, target: Poly | None = None) -> HomologicalStep:
    """Solve ``L(chi) = psi_m - target`` on the degree-(m+2) basis.

    The unremovable part is returned as ``retained`` (plus ``target``).
    """
    d = m + 2
    jr = B.jring
    f = B.field
    psi_m = B.normalize(psi_m)
    if any(jr.wdeg(e) != d for e in psi_m.terms):
        raise ValueError(f"input is not homogeneous of degree {d}")
    basis = B.canonical_monomials(d)
    M = action_matrix(apply_L, basis, data)
    goal = psi_m - target if target is not None else psi_m
    rhs = [goal.coefficient(e) for e in basis]
    a, r, comp, ledger = decompose(M, rhs, f)
    chi = Poly(jr, {e: v for e, v in zip(basis, a)})
    retained = Poly(jr, {e: v for e, v in zip(basis, r)})
    if target is not None:
        retained = retained + target
    removed = psi_m - retained
    return HomologicalStep(
        order=m,
        basis=basis,
        action_matrix=M,
        psi=psi_m,
        chi=chi,
        removed=removed,
        retained=retained,
        ledger=ledger,
        retained_monomials=[basis[i] for i in comp],
        target=target,
    )
