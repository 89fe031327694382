"""Order-by-order reduction with exact substitution.

At each order the homological equation is solved with the quadratic operator
(``solve_homological``), which fixes which monomials are kept.  The generator
actually applied is then solved against the complete first-order action
``<grad Psi0, grad chi>`` with those kept monomials eliminated first, so the
substitution removes exactly the complement.  When every basic invariant is
quadratic the two operators coincide and so do the generators.  Higher-order
effects come from the exact substitution ``x -> x - grad(chi o J)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .field import RationalFunction
from .homological import (
    HomologicalStep,
    QuadraticData,
    action_matrix,
    apply_first_order,
    apply_L,
    decompose,
    quadratic_data,
    solve_homological,
)
from .invariants import MIB, GroupPresentation, PMatrix, p_matrix, rho_in_basis
from .linalg import Ledger
from .poly import Poly, PolyMap, series_invert


class ConfigurationError(ValueError):
    pass


class PipelineInvariantError(AssertionError):
    """An internal exactness check failed."""


KERNELS = ("quadratic", "exact")
TARGETS = ("rho", "none")
ROUTES = ("orbit", "order-parameter")


@dataclass
class ProblemOptions:
    top_order_target: str = "rho"
    kernel: str = "quadratic"
    route: str = "orbit"

    def __post_init__(self):
        if self.top_order_target not in TARGETS:
            raise ConfigurationError(f"top_order_target must be one of {TARGETS}")
        if self.kernel not in KERNELS:
            raise ConfigurationError(f"kernel must be one of {KERNELS}")
        if self.route not in ROUTES:
            raise ConfigurationError(f"route must be one of {ROUTES}")


@dataclass
class LandauProblem:
    mib: MIB
    potential: Poly  # canonical J-polynomial
    degree: int
    group: GroupPresentation | None = None
    options: ProblemOptions = dc_field(default_factory=ProblemOptions)
    warnings: list[str] = dc_field(default_factory=list)

    def __post_init__(self):
        B = self.mib
        if self.potential.ring == B.xring:
            self.potential = B.express(self.potential)
        elif self.potential.ring != B.jring:
            raise ConfigurationError("potential must be a polynomial in the variables or in the invariants")
        self.potential = B.normalize(self.potential).with_trunc(self.degree)
        if self.degree < 2 * max(B.degrees, default=0):
            msg = f"truncation degree {self.degree} is below 2*d_r = {2 * max(B.degrees)}"
            if msg not in self.warnings:
                self.warnings.append(msg)
        if any(B.jring.wdeg(e) < 2 for e in self.potential.terms if any(e)) or self.potential.constant_term():
            raise ConfigurationError("potential must start at degree 2")


@dataclass
class PipelineStep:
    """One order: the homological solve plus the generator actually applied."""

    homological: HomologicalStep
    generator: Poly
    retained: Poly  # degree-(m+2) part after the substitution
    incremental_map: PolyMap
    ledger: Ledger

    @property
    def order(self) -> int:
        return self.homological.order


@dataclass
class ReductionReport:
    problem: LandauProblem
    original: Poly
    reduced: Poly
    steps: list[PipelineStep]
    forward_map: PolyMap
    inverse_map: PolyMap
    ledger: Ledger
    original_parameter_count: int
    retained_parameter_count: int
    quadratic: QuadraticData
    warnings: list[str] = dc_field(default_factory=list)

    @property
    def eliminated_count(self) -> int:
        return self.original_parameter_count - self.retained_parameter_count

    def original_x(self) -> Poly:
        return self.problem.mib.expand(self.original, self.problem.degree)

    def reduced_x(self) -> Poly:
        return self.problem.mib.expand(self.reduced, self.problem.degree)


def parameter_count(q: Poly) -> int:
    """Terms whose coefficient is not a pure number."""
    return sum(1 for c in q.terms.values() if not c.is_constant())


class ReductionState:
    """Mutable working state of one run (not shared)."""

    def __init__(self, problem: LandauProblem):
        self.problem = problem
        self.B = problem.mib
        self.D = problem.degree
        self.psi = problem.potential
        self.P: PMatrix = p_matrix(self.B)
        self.data: QuadraticData = quadratic_data(self.psi, self.B, self.P)


def gradient_map(chi: Poly, B: MIB, D: int) -> PolyMap:
    """x -> x - grad(chi o J), truncated at D."""
    X = B.expand(chi)
    xr = B.xring
    comps = [g - X.derivative(i) for i, g in enumerate(xr.gens())]
    return PolyMap([c.with_trunc(D) for c in comps], D)


def substitute_potential(psi: Poly, m: PolyMap, B: MIB, D: int, route: str = "orbit") -> Poly:
    """Canonical J-form of psi(J(m(x))) through degree D."""
    if m.is_identity():
        return psi
    if route == "order-parameter":
        X = B.expand(psi, D)
        return B.express(X.compose(m.components, D), D)
    images = [B.express(inv.definition.with_trunc(D).compose(m.components, D), D) for inv in B.invariants]
    return B.compose_in_j(psi, images, D)


def _applied_generator(
    step: HomologicalStep, data: QuadraticData, B: MIB, kernel: str
) -> tuple[Poly, Poly, Ledger]:
    """Generator for the complete first-order action, and the part it keeps."""
    jr = B.jring
    if B.s == B.r:
        return step.chi, step.retained, Ledger()
    basis = step.basis
    goal = step.psi - step.target if step.target is not None else step.psi
    rhs = [goal.coefficient(e) for e in basis]
    M = action_matrix(apply_first_order, basis, data)
    keep = [basis.index(e) for e in step.retained_monomials] if kernel == "quadratic" else []
    a, r, _, ledger = decompose(M, rhs, B.field, keep_first=keep)
    chi = Poly(jr, {e: v for e, v in zip(basis, a)})
    kept = Poly(jr, {e: v for e, v in zip(basis, r)})
    if step.target is not None:
        kept = kept + step.target
    return chi, kept, ledger


def _run_step(state: ReductionState, m: int, target: Poly | None) -> tuple[Poly, PipelineStep]:
    B, D = state.B, state.D
    opts = state.problem.options
    d = m + 2
    psi_m = state.psi.component(d).with_trunc(None)
    step = solve_homological(psi_m, state.data, B, m, target=target)
    chi, kept, extra = _applied_generator(step, state.data, B, opts.kernel)
    ledger = Ledger(step.ledger)
    ledger.update(extra)
    if not chi:
        inc = PolyMap.identity(B.xring, D)
        new = state.psi
    else:
        inc = gradient_map(chi, B, D)
        new = substitute_potential(state.psi, inc, B, D, opts.route)
    # exactness checks: lower orders untouched, order m lands on the kept part
    for k in range(2, d):
        if new.component(k).terms != state.psi.component(k).terms:
            raise PipelineInvariantError(f"step at order {m} changed degree {k}")
    got = new.component(d).with_trunc(None)
    if got != kept.with_trunc(None):
        raise PipelineInvariantError(f"order {m}: new degree-{d} part {got} differs from the kept part {kept}")
    first = apply_first_order(chi, state.data)
    if got != B.normalize(psi_m - first):
        raise PipelineInvariantError(f"order {m}: first-order action disagrees with the substitution")
    return new, PipelineStep(step, chi, got, inc, ledger)


def reduce_order(state: ReductionState, m: int) -> tuple[Poly, PipelineStep, PolyMap]:
    new, ps = _run_step(state, m, None)
    state.psi = new
    return new, ps, ps.incremental_map


def reduce_top_order(state: ReductionState, target_coefficient=1) -> tuple[Poly, PipelineStep, PolyMap]:
    D = state.D
    B = state.B
    if D % 2:
        raise ConfigurationError(f"truncation degree {D} is odd: no power of rho has that degree")
    rho = rho_in_basis(B)
    target = B.pow(rho, D // 2).scale(B.field.coerce(target_coefficient))
    new, ps = _run_step(state, D - 2, target)
    state.psi = new
    return new, ps, ps.incremental_map


def run_reduction(problem: LandauProblem) -> ReductionReport:
    state = ReductionState(problem)
    B, D = state.B, state.D
    inverse = PolyMap.identity(B.xring, D)
    steps: list[PipelineStep] = []
    ledger = Ledger()
    top = problem.options.top_order_target == "rho"
    if top and D % 2:
        raise ConfigurationError(f"truncation degree {D} is odd: no power of rho has that degree")
    last = D - 2 if not top else D - 3
    for m in range(1, last + 1):
        if not B.canonical_monomials(m + 2):
            continue
        _, ps, inc = reduce_order(state, m)
        steps.append(ps)
        ledger.update(ps.ledger)
        if not inc.is_identity():
            inverse = inverse.compose(inc)
    if top and D >= 4:
        _, ps, inc = reduce_top_order(state)
        steps.append(ps)
        ledger.update(ps.ledger)
        if not inc.is_identity():
            inverse = inverse.compose(inc)
    forward = series_invert(inverse)
    return ReductionReport(
        problem=problem,
        original=problem.potential,
        reduced=state.psi,
        steps=steps,
        forward_map=forward,
        inverse_map=inverse,
        ledger=ledger,
        original_parameter_count=parameter_count(problem.potential),
        retained_parameter_count=parameter_count(state.psi),
        quadratic=state.data,
        warnings=list(problem.warnings),
    )
