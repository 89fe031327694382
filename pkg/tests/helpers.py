"""Shared loaders for the example problems."""

import functools
from pathlib import Path

from landaunf import expr
from landaunf.pipeline import run_reduction
from landaunf.problem import load_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def problem_text(name: str) -> str:
    return (PROBLEMS / f"{name}.yaml").read_text()


@functools.lru_cache(maxsize=None)
def problem(name: str):
    return load_problem(problem_text(name))


@functools.lru_cache(maxsize=None)
def reduction(name: str):
    return run_reduction(problem(name).landau())


def jpoly(bp, text: str):
    """Polynomial in the invariants of ``bp`` (parameters allowed)."""
    B = bp.mib
    env = dict(zip(B.names, B.jring.gens()))
    f = bp.field

    def look(n, pos):
        if n in env:
            return env[n]
        return f.symbol(n)

    return expr.evaluate(expr.parse_expression(text), look, one=B.jring.one())


def xpoly(bp, text: str):
    env = dict(zip(bp.xring.names, bp.xring.gens()))
    f = bp.field

    def look(n, pos):
        if n in env:
            return env[n]
        return f.symbol(n)

    return expr.evaluate(expr.parse_expression(text), look, one=bp.xring.one())


def rf(bp, text: str):
    return bp.parse_field_element(text)
