"""Base change of a level-one eigenform to a real quadratic field.

lambda_D is the multiplicative function on integral ideals of O_D whose
Dirichlet series is L(pi, s) L(pi x chi_D, s).  At an inert prime the
eigenvalue of (p)^e is the coefficient of X^(2e) in
1/((1 - alpha^2 X^2)(1 - alpha^-2 X^2)), computed by the recursion

    u_0 = 1,  u_1 = lambda(p)^2 - 2,  u_(j+1) = (lambda(p)^2 - 2) u_j - u_(j-1).

Inert primes in ``ram_set`` carry the Steinberg value lambda(p)^(2e).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .eigenforms import EigenformTable, RangeError
from .quadarith import (
    IdealFactorization,
    PrimeKind,
    QuadField,
    QuadInteger,
    Splitting,
    factorize,
    ideal_factor,
    ideals_of_norm,
    kronecker,
    split_inert_parts,
    splitting,
)

__all__ = [
    "BaseChangeContext",
    "SplittingMismatch",
    "lambda_D_prime",
    "lambda_D_ideal",
    "lambda_D_element",
    "lambda_D_coefficient",
    "lambda_D_coefficient_exact",
    "INERT_RULES",
]

INERT_RULES = ("generating", "display")


class SplittingMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BaseChangeContext:
    table: EigenformTable
    field: QuadField
    ram_set: frozenset = field(default_factory=frozenset)
    # "display" evaluates lambda(p^(2e)) at inert primes; kept only to show it is wrong
    inert_rule: str = "generating"

    def __post_init__(self):
        object.__setattr__(self, "ram_set", frozenset(self.ram_set))
        for p in self.ram_set:
            if splitting(self.field, p) is not Splitting.INERT:
                raise ValueError(f"ramified prime {p} of B must be inert in Q(sqrt {self.field.D})")
        if self.inert_rule not in INERT_RULES:
            raise ValueError(f"inert_rule must be one of {INERT_RULES}")


def _inert_value(lp: float, e: int) -> float:
    t = lp * lp - 2.0
    prev, cur = 1.0, t
    if e == 0:
        return 1.0
    for _ in range(e - 1):
        prev, cur = cur, t * cur - prev
    return cur


def lambda_D_prime(ctx: BaseChangeContext, p: int, e: int, which: PrimeKind) -> float:
    if e < 0:
        raise ValueError("exponent must be nonnegative")
    actual = splitting(ctx.field, p)
    if which.splitting is not actual:
        raise SplittingMismatch(f"{p} is {actual.value} in Q(sqrt {ctx.field.D}), not {which.value}")
    if e == 0:
        return 1.0
    t = ctx.table
    if actual is not Splitting.INERT:
        return t.lam(p**e)
    if p in ctx.ram_set:
        return t.lam(p) ** (2 * e)
    if ctx.inert_rule == "display":
        return t.lam(p ** (2 * e))
    return _inert_value(t.lam(p), e)


def lambda_D_ideal(ctx: BaseChangeContext, f: IdealFactorization) -> float:
    out = 1.0
    for p, kind, e in f:
        out *= lambda_D_prime(ctx, p, e, kind)
    return out


def _lambda_D_inert_natural(ctx: BaseChangeContext, d2: int) -> float:
    out = 1.0
    if d2 > 1:
        for p, e in factorize(d2).items():
            out *= lambda_D_prime(ctx, p, e, PrimeKind.INERT)
    return out


def lambda_D_element(ctx: BaseChangeContext, x: QuadInteger) -> float:
    """lambda_D((x)) = lambda(d1) lambda_D(d2) lambda(|N x| / (d1 d2^2))."""
    d1, d2, res = split_inert_parts(x)
    t = ctx.table
    if res > t.nmax or d1 > t.nmax:
        raise RangeError(f"lambda_D of {x} needs nmax >= {max(res, d1)}", required=max(res, d1))
    return t.lam(d1) * _lambda_D_inert_natural(ctx, d2) * t.lam(res)


def _divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in (factorize(n).items() if n > 1 else []):
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def lambda_D_coefficient(ctx: BaseChangeContext, n: int) -> tuple[float, float]:
    """(sum over ideals of norm n of lambda_D, sum_{de=n} lambda(d) chi_D(e) lambda(e))."""
    ctx.table.require(n)
    _, ideals = ideals_of_norm(ctx.field, n)
    lhs = sum(lambda_D_ideal(ctx, a) for a in ideals)
    D = ctx.field.D
    rhs = sum(ctx.table.lam(d) * kronecker(D, n // d) * ctx.table.lam(n // d) for d in _divisors(n))
    return lhs, rhs


def _scaled_prime(ctx: BaseChangeContext, p: int, e: int, kind: PrimeKind) -> int:
    """lambda_D(P^e) * N(P^e)^((k-1)/2), an integer for exact tables."""
    t = ctx.table
    if e == 0:
        return 1
    if kind is not PrimeKind.INERT:
        return t.a(p**e)
    if p in ctx.ram_set:
        return t.a(p) ** (2 * e)
    if ctx.inert_rule == "display":
        return t.a(p ** (2 * e))
    pk = p ** (t.weight - 1)
    step = t.a(p) ** 2 - 2 * pk
    prev, cur = 1, step
    for _ in range(e - 1):
        prev, cur = cur, step * cur - pk * pk * prev
    return cur


def lambda_D_coefficient_exact(ctx: BaseChangeContext, n: int) -> tuple[Fraction, Fraction]:
    """Both sides of the coefficient identity scaled by n^((k-1)/2); exact integers."""
    t = ctx.table
    if not t.exact:
        raise ValueError("exact coefficient identity needs an exact table")
    t.require(n)
    _, ideals = ideals_of_norm(ctx.field, n)
    lhs = 0
    for a in ideals:
        term = 1
        for p, kind, e in a:
            term *= _scaled_prime(ctx, p, e, kind)
        lhs += term
    D = ctx.field.D
    rhs = sum(t.a(d) * kronecker(D, n // d) * t.a(n // d) for d in _divisors(n))
    return Fraction(lhs), Fraction(rhs)
