"""Exact integer q-expansions for level-one modular forms.

Products of long series are computed with a multi-prime number theoretic
transform followed by Chinese remaindering.  The number of primes is chosen
from a proven bound on the output coefficients, so reconstruction is exact
by construction; a failed bound check raises :class:`InternalError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

__all__ = [
    "InternalError",
    "IntegerSeries",
    "eisenstein_qexp",
    "series_mul",
    "series_add",
    "series_scale",
    "delta_qexp",
    "cusp_dim",
    "miller_basis",
    "bernoulli",
    "SCHOOLBOOK_THRESHOLD",
    "DENSE_NMAX_CEILING",
]

SCHOOLBOOK_THRESHOLD = 48
DENSE_NMAX_CEILING = 200_000
_PRIME_CEIL = 1 << 31
_MIN_PRIMES = 3


class InternalError(RuntimeError):
    """An arithmetic self-check failed; the result would have been wrong."""


@dataclass(frozen=True)
class IntegerSeries:
    """Coefficients of q^0 .. q^nmax."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValueError("a series needs at least the constant term")

    @classmethod
    def from_list(cls, values, nmax: int | None = None) -> "IntegerSeries":
        vals = [int(v) for v in values]
        if nmax is not None:
            vals = (vals + [0] * (nmax + 1))[: nmax + 1]
        return cls(tuple(vals))

    @property
    def nmax(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self) -> int:
        return len(self.coeffs)

    def truncate(self, nmax: int) -> "IntegerSeries":
        if nmax > self.nmax:
            raise ValueError(f"cannot extend a series from nmax={self.nmax} to {nmax}")
        return IntegerSeries(self.coeffs[: nmax + 1])

    def valuation(self) -> int | None:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return None

    def __add__(self, other: "IntegerSeries") -> "IntegerSeries":
        return series_add(self, other)

    def __sub__(self, other: "IntegerSeries") -> "IntegerSeries":
        return series_add(self, series_scale(other, -1))

    def __mul__(self, other: "IntegerSeries") -> "IntegerSeries":
        return series_mul(self, other)


# ---------------------------------------------------------------- Bernoulli

@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n with B_1 = -1/2."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    b = [Fraction(1)]
    for m in range(1, n + 1):
        b.append(-sum(comb(m + 1, j) * b[j] for j in range(m)) / (m + 1))
    return b[n]


def _sigma_table(power: int, nmax: int) -> list[int]:
    sig = [0] * (nmax + 1)
    for d in range(1, nmax + 1):
        dp = d**power
        for m in range(d, nmax + 1, d):
            sig[m] += dp
    return sig


def eisenstein_qexp(weight: int, nmax: int, *, with_scale: bool = False):
    """Integer multiple c*E_k of the normalized Eisenstein series.

    c is the least positive integer making every coefficient integral.  With
    ``with_scale=True`` the pair (series, c) is returned.
    """
    if weight % 2 or weight < 4:
        raise ValueError(f"weight must be even and >= 4, got {weight}")
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    factor = Fraction(-2 * weight) / bernoulli(weight)
    # c*E_k = c + c*factor*sum sigma(n) q^n; sigma(1) = 1 so c = denom(factor)
    c = factor.denominator
    num = factor.numerator
    sig = _sigma_table(weight - 1, nmax)
    coeffs = [c] + [num * sig[n] for n in range(1, nmax + 1)]
    series = IntegerSeries(tuple(coeffs))
    return (series, c) if with_scale else series


# ------------------------------------------------------------ NTT machinery

def _is_prime32(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 7, 61):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


class _PrimePool:
    """Lazily enumerated primes p < 2^31 with 2^s | p-1, largest first."""

    def __init__(self, s: int):
        self.step = 1 << s
        self.next_c = (_PRIME_CEIL - 2) // self.step
        self.items: list[tuple[int, int]] = []

    def get(self, i: int) -> tuple[int, int] | None:
        while len(self.items) <= i and self.next_c > 0:
            p = self.next_c * self.step + 1
            self.next_c -= 1
            if _is_prime32(p):
                fac = _prime_factors(p - 1)
                g = 2
                while any(pow(g, (p - 1) // q, p) == 1 for q in fac):
                    g += 1
                self.items.append((p, g))
        return self.items[i] if i < len(self.items) else None


_POOLS: dict[int, _PrimePool] = {}


def _ntt_prime(log_len: int, i: int) -> tuple[int, int] | None:
    s = max(log_len, 16)
    pool = _POOLS.get(s)
    if pool is None:
        pool = _POOLS.setdefault(s, _PrimePool(s))
    return pool.get(i)


@lru_cache(maxsize=64)
def _bitrev(size: int) -> np.ndarray:
    bits = size.bit_length() - 1
    idx = np.arange(size, dtype=np.int64)
    rev = np.zeros(size, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=256)
def _twiddles(p: int, g: int, size: int, inverse: bool) -> tuple[np.ndarray, ...]:
    """Per-stage root-of-unity tables for an iterative radix-2 transform."""
    w_n = pow(g, (p - 1) // size, p)
    if inverse:
        w_n = pow(w_n, p - 2, p)
    half_size = max(size // 2, 1)
    pw = np.ones(half_size, dtype=np.int64)
    k = 1
    while k < half_size:
        pw[k : 2 * k] = pw[:k] * pow(w_n, k, p) % p
        k *= 2
    tables = []
    m = 2
    while m <= size:
        tables.append(np.ascontiguousarray(pw[:: size // m][: m // 2]))
        m *= 2
    return tuple(tables)


def _ntt(a: np.ndarray, p: int, g: int, inverse: bool = False) -> np.ndarray:
    size = a.shape[0]
    a = a[_bitrev(size)].copy()
    for tab in _twiddles(p, g, size, inverse):
        half = tab.shape[0]
        blocks = a.reshape(-1, 2 * half)
        u = blocks[:, :half].copy()
        v = blocks[:, half:] * tab % p
        blocks[:, :half] = (u + v) % p
        blocks[:, half:] = (u - v) % p
    if inverse:
        a = a * pow(size, p - 2, p) % p
    return a


def _reduce(values: tuple[int, ...], p: int, small: bool) -> np.ndarray:
    if small:
        return np.mod(np.array(values, dtype=np.int64), p)
    return np.fromiter((v % p for v in values), dtype=np.int64, count=len(values))


def _schoolbook(a: tuple[int, ...], b: tuple[int, ...], nmax: int) -> tuple[int, ...]:
    out = [0] * (nmax + 1)
    for i, ai in enumerate(a):
        if ai:
            for j in range(min(len(b), nmax + 1 - i)):
                out[i + j] += ai * b[j]
    return tuple(out)


def _crt_combine(residues: list[np.ndarray], primes: list[int]) -> list[int]:
    """Garner's algorithm: mixed-radix digits in int64, final assembly in Python ints."""
    r = len(primes)
    digits: list[np.ndarray] = []
    for i in range(r):
        p = primes[i]
        t = np.zeros_like(residues[i])
        for j in range(i - 1, -1, -1):
            t = (t * (primes[j] % p) + digits[j]) % p
        prod = 1
        for j in range(i):
            prod = prod * primes[j] % p
        inv = pow(prod, p - 2, p) if i else 1
        digits.append((residues[i] - t) % p * inv % p)
    acc = digits[-1].astype(object)
    for j in range(r - 2, -1, -1):
        acc = acc * primes[j] + digits[j].astype(object)
    return [int(v) for v in acc]


def series_mul(a: IntegerSeries, b: IntegerSeries) -> IntegerSeries:
    """Exact product truncated at the common nmax."""
    if a.nmax != b.nmax:
        raise ValueError(f"nmax mismatch: {a.nmax} vs {b.nmax}")
    nmax = a.nmax
    ca, cb = a.coeffs, b.coeffs
    if nmax < SCHOOLBOOK_THRESHOLD:
        return IntegerSeries(_schoolbook(ca, cb, nmax))
    max_a = max(map(abs, ca))
    max_b = max(map(abs, cb))
    if max_a == 0 or max_b == 0:
        return IntegerSeries((0,) * (nmax + 1))
    bound = (nmax + 1) * max_a * max_b
    size = 1
    while size < 2 * nmax + 1:
        size *= 2
    log_len = size.bit_length() - 1
    primes: list[tuple[int, int]] = []
    modulus = 1
    while modulus <= 2 * bound or len(primes) < _MIN_PRIMES:
        pg = _ntt_prime(log_len, len(primes))
        if pg is None:
            break
        primes.append(pg)
        modulus *= pg[0]
    if modulus <= 2 * bound:
        raise InternalError(
            f"CRT modulus ({modulus.bit_length()} bits) cannot certify "
            f"coefficient bound ({bound.bit_length()} bits)"
        )
    small_a = max_a < (1 << 62)
    small_b = max_b < (1 << 62)
    residues = []
    for p, g in primes:
        fa = np.zeros(size, dtype=np.int64)
        fb = np.zeros(size, dtype=np.int64)
        fa[: nmax + 1] = _reduce(ca, p, small_a)
        fb[: nmax + 1] = _reduce(cb, p, small_b)
        prod = _ntt(fa, p, g) * _ntt(fb, p, g) % p
        residues.append(_ntt(prod, p, g, inverse=True)[: nmax + 1])
    plist = [p for p, _ in primes]
    raw = _crt_combine(residues, plist)
    half = modulus // 2
    out = tuple(v - modulus if v > half else v for v in raw)
    return IntegerSeries(out)


def series_add(a: IntegerSeries, b: IntegerSeries) -> IntegerSeries:
    if a.nmax != b.nmax:
        raise ValueError(f"nmax mismatch: {a.nmax} vs {b.nmax}")
    return IntegerSeries(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))


def series_scale(a: IntegerSeries, c: int) -> IntegerSeries:
    return IntegerSeries(tuple(c * x for x in a.coeffs))


def series_pow(a: IntegerSeries, e: int) -> IntegerSeries:
    result = IntegerSeries.from_list([1], a.nmax)
    base = a
    while e:
        if e & 1:
            result = series_mul(result, base)
        e >>= 1
        if e:
            base = series_mul(base, base)
    return result


# ---------------------------------------------------------------------- Delta

def _euler_cube(nmax: int) -> IntegerSeries:
    # prod (1-q^n)^3 = sum_{m>=0} (-1)^m (2m+1) q^{m(m+1)/2}
    out = [0] * (nmax + 1)
    m = 0
    while m * (m + 1) // 2 <= nmax:
        out[m * (m + 1) // 2] = (-1) ** m * (2 * m + 1)
        m += 1
    return IntegerSeries(tuple(out))


def _delta_eta(nmax: int) -> IntegerSeries:
    p3 = _euler_cube(nmax - 1)
    p24 = series_pow(p3, 8)
    return IntegerSeries((0,) + p24.coeffs)


def delta_qexp(nmax: int) -> IntegerSeries:
    """Ramanujan's Delta; (E4^3 - E6^2)/1728 below the dense ceiling, eta route above."""
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    if nmax > DENSE_NMAX_CEILING:
        return _delta_eta(nmax)
    e4 = eisenstein_qexp(4, nmax)
    e6 = eisenstein_qexp(6, nmax)
    diff = series_mul(series_mul(e4, e4), e4) - series_mul(e6, e6)
    out = []
    for c in diff.coeffs:
        q, r = divmod(c, 1728)
        if r:
            raise InternalError("E4^3 - E6^2 is not divisible by 1728")
        out.append(q)
    return IntegerSeries(tuple(out))


# --------------------------------------------------------------- Miller basis

def cusp_dim(weight: int) -> int:
    """dim S_k for SL2(Z)."""
    if weight % 2 or weight < 0:
        return 0
    if weight == 2:
        return 0
    d = weight // 12
    return d - 1 if weight % 12 == 2 else d


def miller_basis(weight: int, nmax: int) -> list[IntegerSeries]:
    """Echelon basis f_1..f_d of S_k with f_i = q^i + O(q^{d+1})."""
    if weight % 2 or weight < 12:
        raise ValueError(f"weight must be even and >= 12, got {weight}")
    d = cusp_dim(weight)
    if d == 0:
        return []
    if nmax < d:
        raise ValueError(f"nmax={nmax} is smaller than dim S_{weight} = {d}")
    rest = weight - 12 * d
    a, b = {0: (0, 0), 4: (1, 0), 6: (0, 1), 8: (2, 0), 10: (1, 1), 14: (2, 1)}[rest]
    e4 = eisenstein_qexp(4, nmax)
    e6 = eisenstein_qexp(6, nmax)
    delta = delta_qexp(nmax)
    tail = IntegerSeries.from_list([1], nmax)
    for _ in range(a):
        tail = series_mul(tail, e4)
    for _ in range(b):
        tail = series_mul(tail, e6)
    e6sq = series_mul(e6, e6)
    e6sq_pows = [tail]
    for _ in range(d - 1):
        e6sq_pows.append(series_mul(e6sq_pows[-1], e6sq))
    gens = []
    dpow = delta
    for j in range(1, d + 1):
        gens.append(series_mul(dpow, e6sq_pows[d - j]))
        if j < d:
            dpow = series_mul(dpow, delta)
    # leading coefficient of gens[j-1] is q^j with coefficient 1: clear upwards
    rows = [list(g.coeffs) for g in gens]
    for i in range(d - 1, -1, -1):
        for j in range(i):
            c = rows[j][i + 1]
            if c:
                rows[j] = [x - c * y for x, y in zip(rows[j], rows[i])]
    basis = [IntegerSeries(tuple(r)) for r in rows]
    for i, f in enumerate(basis):
        for j in range(1, d + 1):
            if f[j] != (1 if i + 1 == j else 0) or f[0] != 0:
                raise InternalError("Miller basis failed the echelon check")
    return basis
