"""Gauss-Jordan elimination over the rational-function coefficient field."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .field import CoefficientField, RationalFunction


class InconsistentSystemError(ArithmeticError):
    """``A x = b`` has no solution.

    ``certificate`` holds multipliers ``y`` with ``y A = 0`` and ``y b != 0``.
    """

    def __init__(self, certificate: list[RationalFunction], residual: RationalFunction):
        self.certificate = certificate
        self.residual = residual
        shown = ", ".join(str(v) for v in certificate)
        super().__init__(f"inconsistent system: row combination ({shown}) gives 0 = {residual}")


class Ledger:
    """Ordered set of irreducible nondegeneracy factors."""

    def __init__(self, items: Sequence[RationalFunction] = ()):
        self._items: list[RationalFunction] = []
        self._seen: set = set()
        for it in items:
            self.add(it)

    def add(self, factor: RationalFunction) -> None:
        if factor.is_constant() or factor in self._seen:
            return
        self._seen.add(factor)
        self._items.append(factor)

    def add_divisor(self, value: RationalFunction) -> None:
        """Record the irreducible factors of the numerator of ``value``."""
        for f in value.numerator_factors():
            self.add(f)

    def update(self, other: "Ledger | Sequence[RationalFunction]") -> None:
        for it in other:
            self.add(it)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __contains__(self, item):
        return item in self._seen

    def items(self) -> tuple[RationalFunction, ...]:
        return tuple(self._items)

    def __repr__(self):
        return f"Ledger([{', '.join(str(i) for i in self._items)}])"


@dataclass
class Echelon:
    """Reduced row echelon form of ``[A | extra]`` with pivots in ``A`` only."""

    rows: list[list[RationalFunction]]
    pivots: list[int]
    ledger: Ledger
    transform: list[list[RationalFunction]] = dc_field(default_factory=list)


def row_reduce(
    rows: Sequence[Sequence[RationalFunction]],
    pivot_cols: int,
    field: CoefficientField,
    track: bool = False,
) -> Echelon:
    """Gauss-Jordan with deterministic pivoting.

    Columns are scanned left to right among the first ``pivot_cols``; the pivot
    is the first remaining row with a nonzero entry.  Every pivot is scaled to
    one, and the numerator factors of the divisors go into the ledger.  With
    ``track`` the row operations are accumulated in ``transform`` so that
    ``transform @ rows_in == rows_out``.
    """
    mat = [list(r) for r in rows]
    nr = len(mat)
    zero, one = field.zero, field.one
    trans = [[one if i == j else zero for j in range(nr)] for i in range(nr)] if track else []
    ledger = Ledger()
    pivots: list[int] = []
    r = 0
    for c in range(pivot_cols):
        if r == nr:
            break
        p = next((i for i in range(r, nr) if mat[i][c]), None)
        if p is None:
            continue
        if p != r:
            mat[r], mat[p] = mat[p], mat[r]
            if track:
                trans[r], trans[p] = trans[p], trans[r]
        piv = mat[r][c]
        if not piv.is_one():
            ledger.add_divisor(piv)
            inv = piv.inverse()
            mat[r] = [v * inv if v else v for v in mat[r]]
            if track:
                trans[r] = [v * inv if v else v for v in trans[r]]
        prow = mat[r]
        nz = [j for j, v in enumerate(prow) if v]
        for i in range(nr):
            if i == r:
                continue
            f = mat[i][c]
            if not f:
                continue
            row = mat[i]
            for j in nz:
                row[j] = row[j] - f * prow[j]
            if track:
                trow, tp = trans[i], trans[r]
                for j in range(nr):
                    if tp[j]:
                        trow[j] = trow[j] - f * tp[j]
        pivots.append(c)
        r += 1
    return Echelon(mat, pivots, ledger, trans)


@dataclass
class LinearSolution:
    solution: list[RationalFunction]
    kernel: list[list[RationalFunction]]
    ledger: Ledger
    pivots: list[int]


def rf_solve_linear(
    A: Sequence[Sequence[RationalFunction]],
    b: Sequence[RationalFunction],
    field: CoefficientField | None = None,
) -> LinearSolution:
    """Solve ``A x = b``; free variables are set to zero.

    Returns a particular solution, a nullspace basis (one vector per free
    column, in column order) and the ledger of divisor factors.  Raises
    :class:`InconsistentSystemError` with a certificate row otherwise.
    """
    if field is None:
        field = _infer_field(A, b)
    nr = len(A)
    nc = len(A[0]) if nr else 0
    if len(b) != nr:
        raise ValueError(f"right-hand side has length {len(b)}, expected {nr}")
    if any(len(row) != nc for row in A):
        raise ValueError("ragged matrix")
    zero, one = field.zero, field.one
    aug = [list(A[i]) + [field.coerce(b[i])] for i in range(nr)]
    ech = row_reduce(aug, nc, field, track=True)
    rank = len(ech.pivots)
    for i in range(rank, nr):
        if ech.rows[i][nc]:
            raise InconsistentSystemError(ech.transform[i], ech.rows[i][nc])
    x = [zero] * nc
    for i, c in enumerate(ech.pivots):
        x[c] = ech.rows[i][nc]
    kernel = []
    pivset = set(ech.pivots)
    for f in range(nc):
        if f in pivset:
            continue
        v = [zero] * nc
        v[f] = one
        for i, c in enumerate(ech.pivots):
            if ech.rows[i][f]:
                v[c] = -ech.rows[i][f]
        kernel.append(v)
    return LinearSolution(x, kernel, ech.ledger, list(ech.pivots))


def _infer_field(*blocks) -> CoefficientField:
    def walk(x):
        if isinstance(x, RationalFunction):
            return x.field
        if isinstance(x, (list, tuple)):
            for y in x:
                f = walk(y)
                if f is not None:
                    return f
        return None

    f = walk(list(blocks))
    if f is None:
        raise ValueError("cannot infer the coefficient field; pass field=")
    return f


def mat_mul(A, B, field: CoefficientField):
    n, k, m = len(A), len(B), len(B[0]) if B else 0
    zero = field.zero
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = zero
            for t in range(k):
                if A[i][t] and B[t][j]:
                    s = s + A[i][t] * B[t][j]
            row.append(s)
        out.append(row)
    return out


def mat_inverse(A, field: CoefficientField):
    """Inverse of a square matrix; raises ``ZeroDivisionError`` if singular."""
    n = len(A)
    one, zero = field.one, field.zero
    aug = [list(A[i]) + [one if i == j else zero for j in range(n)] for i in range(n)]
    ech = row_reduce(aug, n, field)
    if len(ech.pivots) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in ech.rows]


def determinant(A, field: CoefficientField) -> RationalFunction:
    """Determinant by elimination (tracks swaps and pivot products)."""
    mat = [list(r) for r in A]
    n = len(mat)
    det = field.one
    for c in range(n):
        p = next((i for i in range(c, n) if mat[i][c]), None)
        if p is None:
            return field.zero
        if p != c:
            mat[c], mat[p] = mat[p], mat[c]
            det = -det
        piv = mat[c][c]
        det = det * piv
        inv = piv.inverse()
        for i in range(c + 1, n):
            f = mat[i][c]
            if f:
                f = f * inv
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[c])]
    return det
