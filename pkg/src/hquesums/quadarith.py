"""Arithmetic of real quadratic fields Q(sqrt D) and integer-valued quadratics."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

__all__ = [
    "Splitting",
    "PrimeKind",
    "QuadField",
    "QuadInteger",
    "QuadPoly",
    "IdealFactorization",
    "is_fundamental",
    "is_squarefree",
    "kronecker",
    "splitting",
    "admissible_discriminant",
    "qp_is_irreducible",
    "root_count",
    "ideal_factor",
    "split_inert_parts",
    "ideals_of_norm",
    "factorize",
]


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of |n| by trial division (n != 0)."""
    n = abs(n)
    if n == 0:
        raise ValueError("cannot factor 0")
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 5
    while f * f <= n:
        for p in (f, f + 2):
            while n % p == 0:
                out[p] = out.get(p, 0) + 1
                n //= p
        f += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_squarefree(n: int) -> bool:
    return n != 0 and all(e == 1 for e in factorize(n).values())


def is_fundamental(D: int) -> bool:
    if D in (0, 1):
        return False
    if D % 4 == 1:
        return is_squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D/n)."""
    if n == 0:
        return 1 if abs(D) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if D < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5) and v % 2:
            result = -result
    if n == 1:
        return result
    return result * _jacobi(D, n)


class Splitting(enum.Enum):
    SPLIT = "split"
    INERT = "inert"
    RAMIFIED = "ramified"


class PrimeKind(enum.Enum):
    SPLIT1 = "split1"
    SPLIT2 = "split2"
    INERT = "inert"
    RAMIFIED = "ramified"

    @property
    def degree(self) -> int:
        return 2 if self is PrimeKind.INERT else 1

    @property
    def splitting(self) -> Splitting:
        if self in (PrimeKind.SPLIT1, PrimeKind.SPLIT2):
            return Splitting.SPLIT
        return Splitting(self.value)


@dataclass(frozen=True)
class QuadField:
    D: int

    def __post_init__(self):
        if self.D <= 1 or not is_fundamental(self.D):
            raise ValueError(f"D={self.D} is not a positive nontrivial fundamental discriminant")

    def splitting(self, p: int) -> Splitting:
        return splitting(self, p)

    def chi(self, n: int) -> int:
        return kronecker(self.D, n)

    def omega_root(self, p: int) -> int:
        """Smallest r >= 0 with r^2 - D r + (D^2 - D)/4 = 0 mod p (split p)."""
        return _omega_root(self.D, p)

    def element(self, n: int, l: int) -> "QuadInteger":
        return QuadInteger(self, n, l)


@lru_cache(maxsize=4096)
def _omega_root(D: int, p: int) -> int:
    c = (D * D - D) // 4
    if p <= _EXHAUSTIVE_P:
        for r in range(p):
            if (r * r - D * r + c) % p == 0:
                return r
        raise ValueError(f"{p} is inert in Q(sqrt {D})")
    s = _sqrt_mod_p(D, p)  # the minimal polynomial of omega has discriminant D
    if s is None:
        raise ValueError(f"{p} is inert in Q(sqrt {D})")
    half = (p + 1) // 2
    return min((D + s) * half % p, (D - s) * half % p)


def splitting(field: QuadField, p: int) -> Splitting:
    if field.D % p == 0:
        return Splitting.RAMIFIED
    return Splitting.SPLIT if kronecker(field.D, p) == 1 else Splitting.INERT


def admissible_discriminant(D: int, ram_set) -> bool:
    if D <= 0 or not is_fundamental(D):
        return False
    field = QuadField(D)
    return all(splitting(field, p) is Splitting.INERT for p in ram_set)


@dataclass(frozen=True)
class QuadInteger:
    """x = (n + l*sqrt(D))/2 in O_D."""

    field: QuadField
    n: int
    l: int

    def __post_init__(self):
        D = self.field.D
        if D % 2 == 0:
            ok = self.n % 2 == 0
        else:
            ok = (self.n - self.l) % 2 == 0
        if not ok:
            raise ValueError(f"(n, l) = ({self.n}, {self.l}) fails the O_D parity condition for D={D}")

    @property
    def norm(self) -> int:
        return (self.n * self.n - self.field.D * self.l * self.l) // 4

    @property
    def trace(self) -> int:
        return self.n

    def conjugate(self) -> "QuadInteger":
        return QuadInteger(self.field, self.n, -self.l)

    def is_zero(self) -> bool:
        return self.n == 0 and self.l == 0

    def divisible_by(self, d: int) -> bool:
        """x/d lies in O_D."""
        if d == 0:
            return False
        if self.n % d or self.l % d:
            return False
        n2, l2 = self.n // d, self.l // d
        if self.field.D % 2 == 0:
            return n2 % 2 == 0
        return (n2 - l2) % 2 == 0

    def divide(self, d: int) -> "QuadInteger":
        if not self.divisible_by(d):
            raise ValueError(f"{d} does not divide {self}")
        return QuadInteger(self.field, self.n // d, self.l // d)

    def omega_coords(self) -> tuple[int, int]:
        """(u, v) with x = u + v*omega, omega = (D + sqrt D)/2."""
        return (self.n - self.l * self.field.D) // 2, self.l


# ------------------------------------------------------------- quadratics

def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class QuadPoly:
    """Q(n) = a n^2 + b n + c with rational coefficients."""

    a: Fraction
    b: Fraction
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", _frac(self.a))
        object.__setattr__(self, "b", _frac(self.b))
        object.__setattr__(self, "c", _frac(self.c))
        if self.a == 0:
            raise ValueError("leading coefficient must be nonzero")

    @classmethod
    def parse(cls, text: str) -> "QuadPoly":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'a,b,c', got {text!r}")
        return cls(*(Fraction(p) for p in parts))

    def is_integer_valued(self) -> bool:
        return self.c.denominator == 1 and (self.a + self.b).denominator == 1 and (2 * self.a).denominator == 1

    @property
    def norm(self) -> Fraction:
        return max(abs(self.a), abs(self.b), abs(self.c))

    @property
    def discriminant(self) -> Fraction:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, n: int) -> Fraction:
        return (self.a * n + self.b) * n + self.c

    def value_int(self, n: int) -> int:
        v = self(n)
        if v.denominator != 1:
            raise ValueError(f"Q({n}) = {v} is not an integer")
        return v.numerator

    def integer_form(self) -> tuple[int, int, int, int]:
        """(den, A, B, C) with den*Q = A n^2 + B n + C in Z[n]."""
        den = math.lcm(self.a.denominator, self.b.denominator, self.c.denominator)
        return den, int(self.a * den), int(self.b * den), int(self.c * den)

    def __str__(self) -> str:
        return f"{self.a},{self.b},{self.c}"


def _is_rational_square(q: Fraction) -> bool:
    if q < 0:
        return False
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    return rn * rn == q.numerator and rd * rd == q.denominator


def qp_is_irreducible(Q: QuadPoly) -> bool:
    return not _is_rational_square(Q.discriminant)


def _sqrt_mod_p(a: int, p: int) -> int | None:
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


_EXHAUSTIVE_P = 7


def _roots_mod_p(A: int, B: int, C: int, p: int) -> list[int]:
    if p <= _EXHAUSTIVE_P:
        return [x for x in range(p) if (A * x * x + B * x + C) % p == 0]
    A, B, C = A % p, B % p, C % p
    if A == 0:
        if B == 0:
            return list(range(p)) if C == 0 else []
        return [(-C) * pow(B, p - 2, p) % p]
    disc = (B * B - 4 * A * C) % p
    s = _sqrt_mod_p(disc, p)
    if s is None:
        return []
    inv = pow(2 * A, p - 2, p)
    return sorted({(-B + s) * inv % p, (-B - s) * inv % p})


def _count_mod_prime_power(A: int, B: int, C: int, p: int, e: int) -> int:
    sols = _roots_mod_p(A, B, C, p)
    mod = p
    for _ in range(1, e):
        nxt = mod * p
        new = []
        for r in sols:
            deriv = (2 * A * r + B) % p
            if deriv and p > _EXHAUSTIVE_P:
                val = A * r * r + B * r + C
                inv = pow(2 * A * r + B, -1, nxt)
                new.append((r - val * inv) % nxt)
            else:
                for t in range(p):
                    x = r + t * mod
                    if (A * x * x + B * x + C) % nxt == 0:
                        new.append(x)
        sols = new
        mod = nxt
        if not sols:
            break
    return len(sols)


def root_count(Q: QuadPoly, n: int) -> int:
    """rho_Q(n): roots of Q modulo n, counted as n times the density of {x : n | Q(x)}.

    For Q with integer coefficients this is the usual #{x mod n : Q(x) = 0 mod n}.
    """
    if n <= 0:
        raise ValueError("root_count needs a positive modulus")
    den, A, B, C = Q.integer_form()
    # n | Q(x)  <=>  den*n | den*Q(x), and den*Q has period den*n
    m = den * n
    total = 1
    for p, e in factorize(m).items() if m > 1 else []:
        total *= _count_mod_prime_power(A, B, C, p, e)
        if total == 0:
            return 0
    return total // den if total % den == 0 else Fraction(total, den)  # type: ignore[return-value]


# ---------------------------------------------------------------- ideals

@dataclass(frozen=True)
class IdealFactorization:
    factors: tuple[tuple[int, PrimeKind, int], ...]

    @property
    def norm(self) -> int:
        out = 1
        for p, kind, e in self.factors:
            out *= p ** (kind.degree * e)
        return out

    def __iter__(self):
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)


def _canon(fs: list[tuple[int, PrimeKind, int]]) -> IdealFactorization:
    order = {PrimeKind.SPLIT1: 0, PrimeKind.SPLIT2: 1, PrimeKind.INERT: 2, PrimeKind.RAMIFIED: 3}
    merged: dict[tuple[int, PrimeKind], int] = {}
    for p, k, e in fs:
        if e:
            merged[(p, k)] = merged.get((p, k), 0) + e
    items = sorted(merged.items(), key=lambda kv: (kv[0][0], order[kv[0][1]]))
    return IdealFactorization(tuple((p, k, e) for (p, k), e in items))


def _rational_content(x: QuadInteger) -> dict[int, int]:
    g = math.gcd(x.n, x.l)
    out: dict[int, int] = {}
    if g == 0:
        raise ValueError("zero element")
    cur = x
    for p in factorize(g) if g > 1 else {}:
        while cur.divisible_by(p):
            cur = cur.divide(p)
            out[p] = out.get(p, 0) + 1
    return out


def ideal_factor(x: QuadInteger) -> IdealFactorization:
    """Prime ideal factorisation of the principal ideal (x)."""
    if x.is_zero():
        raise ValueError("cannot factor the zero element")
    field = x.field
    content = _rational_content(x)
    fs: list[tuple[int, PrimeKind, int]] = []
    y = x
    for p, e in content.items():
        y = y.divide(p**e)
        kind = splitting(field, p)
        if kind is Splitting.SPLIT:
            fs += [(p, PrimeKind.SPLIT1, e), (p, PrimeKind.SPLIT2, e)]
        elif kind is Splitting.INERT:
            fs.append((p, PrimeKind.INERT, e))
        else:
            fs.append((p, PrimeKind.RAMIFIED, 2 * e))
    N = abs(y.norm)
    if N > 1:
        u, v = y.omega_coords()
        for p, f in factorize(N).items():
            kind = splitting(field, p)
            if kind is Splitting.RAMIFIED:
                fs.append((p, PrimeKind.RAMIFIED, f))
            elif kind is Splitting.INERT:
                raise AssertionError("inert prime divides the norm of a primitive element")
            else:
                r = field.omega_root(p)
                which = PrimeKind.SPLIT1 if (u + v * r) % p == 0 else PrimeKind.SPLIT2
                fs.append((p, which, f))
    return _canon(fs)


def split_inert_parts(x: QuadInteger) -> tuple[int, int, int]:
    """(d1, d2, residual): largest split and inert naturals dividing x, and |N(x)|/(d1 d2^2)."""
    if x.is_zero():
        raise ValueError("x must be nonzero")
    d1 = d2 = 1
    for p, e in _rational_content(x).items():
        kind = splitting(x.field, p)
        if kind is Splitting.SPLIT:
            d1 *= p**e
        elif kind is Splitting.INERT:
            d2 *= p**e
    num = abs(x.n * x.n - x.field.D * x.l * x.l)
    q, r = divmod(num, 4 * d1 * d2 * d2)
    if r:
        raise AssertionError("residual is not an integer")
    return d1, d2, q


def ideals_of_norm(field: QuadField, n: int) -> tuple[int, list[IdealFactorization]]:
    if n < 1:
        raise ValueError("n must be positive")
    choices: list[list[list[tuple[int, PrimeKind, int]]]] = []
    for p, e in (factorize(n).items() if n > 1 else []):
        kind = splitting(field, p)
        if kind is Splitting.SPLIT:
            choices.append([[(p, PrimeKind.SPLIT1, i), (p, PrimeKind.SPLIT2, e - i)] for i in range(e + 1)])
        elif kind is Splitting.INERT:
            if e % 2:
                return 0, []
            choices.append([[(p, PrimeKind.INERT, e // 2)]])
        else:
            choices.append([[(p, PrimeKind.RAMIFIED, e)]])
    ideals = [_canon([f for part in combo for f in part]) for combo in itertools.product(*choices)]
    return len(ideals), ideals
