"""Sum statistics of Hecke eigenvalues: quadratic progressions, shifted
convolutions, prime sums by splitting class, sieve majorants, L(ad, 1)
proxies and Sato-Tate moments.

Reductions use math.fsum, which is correctly rounded and therefore
independent of the order in which worker chunks finish.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .analysis import TestFunction, _gl_panels
from .eigenforms import EigenformTable, RangeError, primes_upto, smallest_prime_factors
from .quadarith import QuadPoly, kronecker, root_count

__all__ = [
    "SUM_SCHEMA",
    "CSV_COLUMNS",
    "ClassAccumulator",
    "PrimeStats",
    "prime_stats",
    "prime_stats_from_values",
    "SumReport",
    "quad_sum",
    "quad_sum_nmax",
    "shifted_sum_nmax",
    "divisor_majorant",
    "shifted_sum",
    "holowinsky_majorants",
    "NairReport",
    "nair_majorant",
    "q_norm",
    "l_ad_value",
    "lambda_squares",
    "sato_tate",
    "sato_tate_empirical",
    "minimax_exponent",
    "minimax_grid",
    "integral_of",
    "reports_to_csv",
    "report_to_json",
]

SUM_SCHEMA = "hquesums.sumreport/1"
CSV_COLUMNS = ("k", "weight_index", "D", "Q", "statistic", "raw", "normalization", "normalized")
ZETA2 = math.pi**2 / 6


# ------------------------------------------------------------- prime stats

@dataclass(frozen=True)
class ClassAccumulator:
    """Exact (dyadic rational) sums over one class of primes."""

    count: int = 0
    inv_p: Fraction = Fraction(0)
    abs_lam: Fraction = Fraction(0)
    sq_lam: Fraction = Fraction(0)
    dev_sq: Fraction = Fraction(0)

    def add(self, p: int, lam: float) -> "ClassAccumulator":
        a = abs(lam)
        return ClassAccumulator(
            self.count + 1,
            self.inv_p + Fraction(1.0 / p),
            self.abs_lam + Fraction(a / p),
            self.sq_lam + Fraction(a * a / p),
            self.dev_sq + Fraction((1.0 - a) ** 2 / p),
        )

    def __add__(self, other: "ClassAccumulator") -> "ClassAccumulator":
        return ClassAccumulator(
            self.count + other.count,
            self.inv_p + other.inv_p,
            self.abs_lam + other.abs_lam,
            self.sq_lam + other.sq_lam,
            self.dev_sq + other.dev_sq,
        )

    def floats(self) -> dict:
        return {
            "count": self.count,
            "sum_inv_p": float(self.inv_p),
            "sum_abs_lambda_over_p": float(self.abs_lam),
            "sum_sq_lambda_over_p": float(self.sq_lam),
            "sum_dev_sq_over_p": float(self.dev_sq),
        }


@dataclass(frozen=True)
class PrimeStats:
    X: int
    D: int | None
    classes: dict  # "all", and with D: "split", "inert", "ramified"

    def __getitem__(self, name: str) -> ClassAccumulator:
        return self.classes[name]

    def additive(self) -> bool:
        if self.D is None:
            return True
        return self["split"] + self["inert"] + self["ramified"] == self["all"]

    def to_dict(self) -> dict:
        return {"X": self.X, "D": self.D, "classes": {k: v.floats() for k, v in self.classes.items()}}


def prime_stats_from_values(lam_p: Callable[[int], float], X: int, D: int | None = None) -> PrimeStats:
    """PrimeStats for an arbitrary assignment p -> lambda(p) (hypothetical data allowed)."""
    acc = {"all": ClassAccumulator()}
    if D is not None:
        acc.update(split=ClassAccumulator(), inert=ClassAccumulator(), ramified=ClassAccumulator())
    for p in primes_upto(X):
        p = int(p)
        lam = float(lam_p(p))
        acc["all"] = acc["all"].add(p, lam)
        if D is not None:
            chi = kronecker(D, p)
            name = "split" if chi == 1 else "inert" if chi == -1 else "ramified"
            acc[name] = acc[name].add(p, lam)
    return PrimeStats(X, D, acc)


def prime_stats(table: EigenformTable, X: int, D: int | None = None) -> PrimeStats:
    table.require(X)
    lam = table.lambdas
    return prime_stats_from_values(lambda p: lam[p], X, D)


def holowinsky_majorants(stats: PrimeStats) -> dict:
    """The three exponential majorants built from prime sums.

    Without a discriminant every prime counts as split and none as inert.
    """
    split = stats["split"] if stats.D is not None else stats["all"]
    inert = stats["inert"] if stats.D is not None else ClassAccumulator()
    a = stats["all"]
    split_exp = -float(split.dev_sq)
    nonsplit_exp = -float(split.dev_sq) + float(inert.inv_p - inert.sq_lam)
    sym_exp = float(a.abs_lam - a.sq_lam)
    return {
        "split_majorant": math.exp(split_exp),
        "nonsplit_ratio": math.exp(nonsplit_exp),
        "symmetrized": math.exp(sym_exp),
    }


# ------------------------------------------------------------------ L(ad,1)

def lambda_squares(table: EigenformTable, N: int) -> np.ndarray:
    """Array L with L[n] = lambda(n^2) for n <= N, built from lambda(p), p <= N."""
    table.require(max(N, 1))
    lam = table.lambdas
    spf = smallest_prime_factors(N)
    out = np.zeros(N + 1)
    if N >= 1:
        out[1] = 1.0
    for n in range(2, N + 1):
        p = int(spf[n])
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        lp = lam[p]
        prev, cur = 1.0, lp  # lambda(p^0), lambda(p^1)
        for _ in range(2 * e - 1):
            prev, cur = cur, lp * cur - prev
        out[n] = out[m] * cur
    return out


@lru_cache(maxsize=64)
def _l_ad_cached(table: EigenformTable, D: int | None, M: float) -> tuple[float, float]:
    N = table.nmax
    n = np.arange(1, N + 1, dtype=float)
    weights = np.exp(-((n / M) ** 2))
    terms = lambda_squares(table, N)[1:] / n * weights
    factor = ZETA2
    if D is not None:
        chi = np.array([kronecker(D, int(v)) for v in range(1, N + 1)], dtype=float)
        terms = terms * chi
        for p in _prime_divisors(abs(D)):
            factor *= 1 - p**-2
    value = factor * math.fsum(terms)
    tail = factor * abs(math.fsum(terms[int(M / 10):]))
    return value, tail


def _prime_divisors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def l_ad_value(table: EigenformTable, D: int | None = None, M: float | None = None) -> tuple[float, float]:
    """Smoothed proxy for L(ad, 1) (or its twist by chi_D) and a tail estimate.

    zeta(2) sum_n lambda(n^2) n^-1 exp(-(n/M)^2), summed over n <= nmax.  The
    default M = min(nmax/5, 10^4) puts the table edge at e^-25 of the weight.
    """
    if M is None:
        M = min(table.nmax / 5, 1e4)
    if M <= 0:
        raise RangeError("smoothing cutoff needs nmax >= 5", required=5)
    if M > table.nmax:
        raise RangeError(f"cutoff M={M} exceeds nmax={table.nmax}", required=int(math.ceil(M)))
    return _l_ad_cached(table, D, float(M))


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class SumReport:
    statistic: str
    k: float
    weight: int
    index: int
    D: int | None
    Q: str
    f: str
    raw: float
    normalization: float
    normalized: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SUM_SCHEMA
        return d


def report_to_json(report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n"


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([repr(r.k), f"{r.weight}-{r.index}", "" if r.D is None else r.D, r.Q, r.statistic,
                    repr(r.raw), repr(r.normalization), repr(r.normalized)])
    return buf.getvalue()


def _n_range(f: TestFunction, k: float) -> range:
    lo, hi = f.support
    return range(max(int(math.floor(lo * k)) + 1, 1), int(math.ceil(hi * k)))


def _chunks(r: range, workers: int) -> list[range]:
    workers = max(1, int(workers))
    size = max(1, -(-len(r) // workers))
    return [r[i : i + size] for i in range(0, len(r), size)]


def _parallel_terms(fn, r: range, workers: int) -> np.ndarray:
    parts = _chunks(r, workers)
    if workers <= 1 or len(parts) <= 1:
        out = [fn(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(fn, parts))
    return np.concatenate(out) if out else np.zeros(0)


def _abs_q(Q: QuadPoly, r: range) -> list[int]:
    return [abs(Q.value_int(n)) for n in r]


def quad_sum_nmax(Q: QuadPoly, f: TestFunction, k: float) -> int:
    """Smallest table size covering every |Q(n)| that quad_sum touches."""
    r = _n_range(f, k)
    return max(_abs_q(Q, r), default=1)


def shifted_sum_nmax(ell: int, f: TestFunction, k: float) -> int:
    r = _n_range(f, k)
    return max(r.stop - 1 + abs(ell), 1) if len(r) else 1


def quad_sum(table: EigenformTable, Q: QuadPoly, f: TestFunction, k: float, signed: bool = True,
             workers: int = 1, l_ad: float | None = None, A_grid=()) -> SumReport:
    """sum_n lambda(|Q(n)|) f(n/k) (or with |lambda|), normalised by k L(ad, 1).

    For each exponent A in ``A_grid`` the report also carries normalized / ||Q||^A
    under ``extra["by_A"]``, keyed by ``repr(A)``.
    """
    if not Q.is_integer_valued():
        raise ValueError(f"{Q} is not integer-valued")
    r = _n_range(f, k)
    if len(r):
        vals = _abs_q(Q, r)
        need = max(vals)
        table.require(need)
    lam = table.lambdas

    def chunk(sub: range) -> np.ndarray:
        if not len(sub):
            return np.zeros(0)
        ns = np.arange(sub.start, sub.stop, dtype=float)
        q = np.array(_abs_q(Q, sub), dtype=np.int64)
        lv = np.where(q > 0, lam[q], 0.0)
        if not signed:
            lv = np.abs(lv)
        return lv * f(ns / k)

    terms = _parallel_terms(chunk, r, workers)
    raw = math.fsum(terms)
    if l_ad is None:
        l_ad = l_ad_value(table)[0]
    norm = k * l_ad
    extra = {"terms": len(r)}
    if A_grid:
        qn = float(q_norm(Q))
        extra["by_A"] = {repr(float(A)): raw / norm / qn ** float(A) for A in A_grid}
    return SumReport("quad_sum_signed" if signed else "quad_sum_abs", k, table.weight, table.index, None,
                     str(Q), f.describe(), raw, norm, raw / norm, extra)


def divisor_majorant(Q: QuadPoly, f: TestFunction, k: float, normalization: float) -> float:
    """sum_n tau(|Q(n)|) |f(n/k)| / normalization, the Deligne-bound majorant."""
    r = _n_range(f, k)
    if not len(r):
        return 0.0
    vals = _abs_q(Q, r)
    spf = smallest_prime_factors(max(max(vals), 2))
    taus = []
    for v in vals:
        t = 1
        while v > 1:
            p, e = int(spf[v]), 0
            while v % p == 0:
                v //= p
                e += 1
            t *= e + 1
        taus.append(t)
    taus = np.array([t if q else 0 for t, q in zip(taus, vals)], dtype=float)
    ns = np.arange(r.start, r.stop, dtype=float)
    return math.fsum(taus * np.abs(f(ns / k))) / normalization


def integral_of(f: TestFunction) -> float:
    lo, hi = f.support
    y, w = _gl_panels(float(lo), float(hi), 64, 24)
    return math.fsum(w * f(y))


def shifted_sum(table: EigenformTable, ell: int, f: TestFunction, k: float, workers: int = 1,
                l_ad: float | None = None) -> SumReport:
    """zeta(2)/(k L(ad,1)) sum_n f(n/k) lambda(n) lambda(n + ell)."""
    r = _n_range(f, k)
    if len(r):
        table.require(r.stop - 1 + abs(ell))
        if r.start + ell < 1:
            r = range(max(r.start, 1 - ell), r.stop)
    lam = table.lambdas

    def chunk(sub: range) -> np.ndarray:
        if not len(sub):
            return np.zeros(0)
        ns = np.arange(sub.start, sub.stop)
        return lam[ns] * lam[ns + ell] * f(ns / k)

    raw = math.fsum(_parallel_terms(chunk, r, workers))
    if l_ad is None:
        l_ad = l_ad_value(table)[0]
    norm = k * l_ad / ZETA2
    expected = integral_of(f) if ell == 0 else 0.0
    value = raw / norm
    return SumReport("shifted_sum", k, table.weight, table.index, None, f"n(n+{ell})", f.describe(),
                     raw, norm, value, {"ell": ell, "expected": expected, "deviation": value - expected})


# -------------------------------------------------------------------- Nair

def q_norm(Q: QuadPoly) -> Fraction:
    return max(abs(Q.a), abs(Q.b), abs(Q.c))


@dataclass(frozen=True)
class NairReport:
    x: int
    lhs: float
    majorant: float
    ratio: float
    y: float
    z: float
    omega_bound: float
    samples: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = "hquesums.nair/1"
        return d


def _smooth_part(v: int, z: float, spf: np.ndarray) -> tuple[int, int, int]:
    a, b, omega_b = 1, 1, 0
    while v > 1:
        p = int(spf[v])
        v //= p
        if p <= z:
            a *= p
        else:
            b *= p
            omega_b += 1
    return a, b, omega_b


def nair_majorant(Q: QuadPoly, table: EigenformTable, x: int, alpha: float = 0.5, eps: float = 0.05,
                  C: float = 1.0, n_samples: int = 8) -> NairReport:
    """x^-1 sum_{n<=x} |lambda(|Q(n)|)| against ||Q||^C exp sum_{split p<=x} (2(|lambda(p)|-1)+eps)/p.

    Split primes are those with two roots of Q mod p.  The smooth/rough
    diagnostic uses y = x^alpha and z = x^(1/(alpha log log x)).
    """
    if not Q.is_integer_valued():
        raise ValueError(f"{Q} is not integer-valued")
    vals = [abs(Q.value_int(n)) for n in range(1, x + 1)]
    table.require(max(max(vals), x))
    lam = table.lambdas
    lhs = math.fsum(abs(lam[v]) for v in vals if v) / x
    expo = []
    for p in primes_upto(x):
        p = int(p)
        if root_count(Q, p) == 2:
            expo.append((2 * (abs(lam[p]) - 1) + eps) / p)
    majorant = float(q_norm(Q)) ** C * math.exp(math.fsum(expo))
    loglog = math.log(math.log(x)) if x > math.e else 1.0
    y = x**alpha
    z = x ** (1 / (alpha * loglog))
    omega_bound = alpha * loglog * math.log(3 * float(q_norm(Q)) * x * x) / math.log(x)
    spf = smallest_prime_factors(max(max(vals), 2))
    small_primes = [int(p) for p in primes_upto(int(z))]
    samples = []
    step = max(1, x // n_samples)
    for n in range(1, x + 1, step)[:n_samples]:
        v = vals[n - 1]
        if v == 0:
            continue
        a, b, om = _smooth_part(v, z, spf)
        prod = 1.0
        for p in small_primes:
            if a % p:
                prod *= 1 - root_count(Q, p) / p
        samples.append({"n": n, "a": a, "b": b, "Omega_b": om, "sieve_product": prod})
    return NairReport(x, lhs, majorant, lhs / majorant, y, z, omega_bound, tuple(samples))


# -------------------------------------------------------------- Sato-Tate

_ST_SELECTORS = {
    "c": lambda t: np.abs(2 * np.cos(t)) - np.abs(2 * np.cos(t)) ** 2,
    "one": lambda t: np.ones_like(t),
    "second": lambda t: (2 * np.cos(t)) ** 2,
    "abs": lambda t: np.abs(2 * np.cos(t)),
}


def sato_tate(g="c") -> float:
    """(2/pi) int_0^pi g(theta) sin^2 theta d theta; kinks at pi/2 are panel edges."""
    fn = _ST_SELECTORS[g] if isinstance(g, str) else g
    t, w = _gl_panels(0.0, math.pi, 2, 40)
    return (2 / math.pi) * math.fsum(w * fn(t) * np.sin(t) ** 2)


def sato_tate_empirical(table: EigenformTable, X: int) -> float:
    """sum_{p<=X} (|lambda(p)| - lambda(p)^2)/p divided by sum_{p<=X} 1/p."""
    s = prime_stats(table, X)["all"]
    return float((s.abs_lam - s.sq_lam) / s.inv_p)


def minimax_exponent() -> tuple[Fraction, Fraction]:
    """min over c in [0, 2] of max(c^2, (1-c)^2)/2.

    c^2 increases and (1-c)^2 decreases on [0, 1], they cross at c = 1/2,
    and for c > 1 the maximum is at least c^2 > 1/2; so the value is 1/8.
    """
    c = Fraction(1, 2)
    return max(c * c, (1 - c) ** 2) / 2, c


def minimax_grid(points: int = 10**4) -> tuple[float, float]:
    c = np.linspace(0.0, 2.0, points + 1)
    v = np.maximum(c**2, (1 - c) ** 2) / 2
    i = int(np.argmin(v))
    return float(v[i]), float(c[i])
