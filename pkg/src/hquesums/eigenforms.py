"""Hecke eigenforms of level one.

Tables of weight k with one-dimensional cusp space carry exact integer
coefficients.  Higher-dimensional spaces are diagonalised numerically: the
characteristic polynomial of T_2 is computed exactly, its roots and the
eigenvectors are refined at a working precision chosen from the size of the
basis coefficients, and a(p) is read off for every prime p.  The remaining
coefficients come from the Hecke recursions.

The on-disk cache stores one JSON document per table, see :func:`cache_store`.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from .seriescore import IntegerSeries, InternalError, cusp_dim, delta_qexp, miller_basis

__all__ = [
    "EigenformTable",
    "CacheIntegrityError",
    "RangeError",
    "CACHE_VERSION",
    "CACHE_ENV",
    "hecke_matrix",
    "eigenforms",
    "normalized_lambda",
    "cache_store",
    "cache_load",
    "cache_dir",
    "smallest_prime_factors",
    "primes_upto",
]

CACHE_VERSION = 1
CACHE_ENV = "HQUESUMS_CACHE_DIR"
INEXACT_TOL = 1e-7


class RangeError(ValueError):
    """A coefficient beyond the available range was requested."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class CacheIntegrityError(RuntimeError):
    """A cache file exists but its checksum or structure is wrong."""


def smallest_prime_factors(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, int(math.isqrt(n)) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.nonzero(spf == 0)[0]
    spf[idx] = idx
    return spf


def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    spf = smallest_prime_factors(n)
    ar = np.arange(n + 1)
    return ar[(spf == ar) & (ar >= 2)]


@dataclass(frozen=True)
class EigenformTable:
    weight: int
    index: int
    nmax: int
    coeffs: tuple  # a(1), ..., a(nmax); int when exact, mpmath.mpf otherwise
    exact: bool
    _lam: np.ndarray | None = field(default=None, repr=False, compare=False)

    def a(self, n: int):
        if not 1 <= n <= self.nmax:
            raise RangeError(f"coefficient a({n}) outside 1..{self.nmax}", required=n)
        return self.coeffs[n - 1]

    @property
    def lambdas(self) -> np.ndarray:
        """Array L with L[n] = lambda(n) for 1 <= n <= nmax (L[0] = 0)."""
        if self._lam is None:
            object.__setattr__(self, "_lam", _compute_lambdas(self))
        return self._lam

    def lam(self, n: int) -> float:
        if not 1 <= n <= self.nmax:
            raise RangeError(f"lambda({n}) needs nmax >= {n}, table has {self.nmax}", required=n)
        return float(self.lambdas[n])

    def require(self, n: int) -> None:
        if n > self.nmax:
            raise RangeError(
                f"weight {self.weight} table has nmax={self.nmax}; nmax >= {n} is required",
                required=n,
            )


def _exact_lambda(a: int, n: int, weight: int) -> float:
    if a == 0:
        return 0.0
    val = math.sqrt(a * a / n ** (weight - 1))
    return val if a > 0 else -val


def _compute_lambdas(t: EigenformTable) -> np.ndarray:
    lam = np.zeros(t.nmax + 1)
    if t.exact:
        half = (t.weight - 2) // 2
        for n in range(1, t.nmax + 1):
            # a / n^((k-2)/2) is a correctly rounded int division; one more rounding from sqrt(n)
            lam[n] = (t.coeffs[n - 1] / n**half) / math.sqrt(n)
        return lam
    with mpmath.workprec(80):
        e = mpmath.mpf(t.weight - 1) / 2
        for n in range(1, t.nmax + 1):
            lam[n] = float(t.coeffs[n - 1] / mpmath.power(n, e))
    return lam


def normalized_lambda(t: EigenformTable, n: int) -> float:
    """lambda(n) = a(n)/n^((k-1)/2) in binary64."""
    a = t.a(n)
    if t.exact:
        return _exact_lambda(a, n, t.weight)
    return t.lam(n)


# ---------------------------------------------------------------- Hecke ops

def _hecke_image(f: IntegerSeries, p: int, weight: int, upto: int) -> list[int]:
    pk = p ** (weight - 1)
    out = []
    for n in range(1, upto + 1):
        v = f[n * p]
        if n % p == 0:
            v += pk * f[n // p]
        out.append(v)
    return out


def hecke_matrix(weight: int, p: int, nmax: int, basis: list[IntegerSeries] | None = None):
    """Integer matrix of T_p on the Miller basis; column j is T_p f_j."""
    d = cusp_dim(weight)
    if d == 0:
        return ()
    if nmax < p * d:
        raise RangeError(f"hecke_matrix({weight}, {p}) needs nmax >= {p * d}", required=p * d)
    if basis is None:
        basis = miller_basis(weight, p * d)
    cols = [_hecke_image(f, p, weight, d) for f in basis]
    return tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))


def _charpoly(mat) -> list[int]:
    """Coefficients c_0..c_d of det(xI - M) (monic), by Faddeev-LeVerrier."""
    d = len(mat)
    A = [list(r) for r in mat]
    c = [0] * (d + 1)
    c[d] = 1
    Mk = [[0] * d for _ in range(d)]
    for k in range(1, d + 1):
        # Mk <- A*M_{k-1} + c_{d-k+1} I
        if k == 1:
            Mk = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
        else:
            prod = [[sum(A[i][t] * Mk[t][j] for t in range(d)) for j in range(d)] for i in range(d)]
            for i in range(d):
                prod[i][i] += c[d - k + 1]
            Mk = prod
        tr = sum(sum(A[i][t] * Mk[t][i] for t in range(d)) for i in range(d))
        q, r = divmod(-tr, k)
        if r:
            raise InternalError("characteristic polynomial is not integral")
        c[d - k] = q
    return c


# --------------------------------------------------------------- eigenforms

def _hecke_fill(lp: dict[int, float], nmax: int) -> np.ndarray:
    """Normalised eigenvalues lambda(n), n <= nmax, from lambda(p)."""
    spf = smallest_prime_factors(nmax)
    lam = np.zeros(nmax + 1)
    if nmax >= 1:
        lam[1] = 1.0
    for n in range(2, nmax + 1):
        p = int(spf[n])
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        if m > 1:
            lam[n] = lam[m] * lam[n // m]
            continue
        if e == 1:
            lam[n] = lp[p]
        else:
            lam[n] = lp[p] * lam[n // p] - lam[n // (p * p)]
    return lam


def _numeric_eigenforms(weight: int, nmax: int, basis: list[IntegerSeries]) -> list[EigenformTable]:
    d = len(basis)
    mat = hecke_matrix(weight, 2, nmax, basis)
    cp = _charpoly(mat)
    coeff_bits = max(abs(c).bit_length() for f in basis for c in f.coeffs)
    mat_bits = max(abs(v).bit_length() for row in mat for v in row)
    prec = 128 + 2 * coeff_bits + d * mat_bits // 4
    scale = mpmath.mpf(2) ** (mpmath.mpf(weight - 1) / 2)
    forms = []
    with mpmath.workprec(prec):
        scale = mpmath.mpf(2) ** (mpmath.mpf(weight - 1) / 2)
        # roots of the normalised polynomial y -> cp(scale*y)/scale^d lie in [-2, 2]
        qcoef = [mpmath.mpf(cp[j]) / scale ** (d - j) for j in range(d, -1, -1)]
        roots = mpmath.polyroots(qcoef, maxsteps=400, extraprec=prec)
        for r in roots:
            if abs(mpmath.im(r)) > mpmath.mpf(2) ** (-prec // 4):
                raise InternalError("Hecke operator T_2 produced a non-real eigenvalue")
        ys = sorted(mpmath.re(r) for r in roots)
        M = mpmath.matrix([[mpmath.mpf(v) for v in row] for row in mat])
        for y in ys:
            lam2 = y * scale
            A = M - lam2 * mpmath.eye(d)
            sub = A[1:, 1:]
            rhs = -A[1:, 0]
            rest = mpmath.lu_solve(sub, rhs)
            vec = mpmath.matrix([1] + [rest[i] for i in range(d - 1)])
            try:  # one inverse-iteration pass
                w = mpmath.lu_solve(A, vec)
                if w[0] != 0:
                    vec = w / w[0]
            except ZeroDivisionError:
                pass
            forms.append((y, vec))
    bits = prec
    out = []
    for y, vec in forms:
        with mpmath.workprec(bits + 64):
            fixed = [int(mpmath.nint(vec[j] * mpmath.mpf(2) ** bits)) for j in range(d)]
        forms_a = {}
        for p in primes_upto(nmax):
            p = int(p)
            acc = sum(fixed[j] * basis[j][p] for j in range(d))
            forms_a[p] = acc
        lp = {}
        with mpmath.workprec(96):
            e = mpmath.mpf(weight - 1) / 2
            for p, acc in forms_a.items():
                lp[p] = float(mpmath.mpf(acc) / mpmath.mpf(2) ** bits / mpmath.power(p, e))
        out.append((lp, fixed))
    tables = []
    for lp, fixed in out:
        lam = _hecke_fill(lp, nmax)
        _check_numeric(weight, lam, fixed, bits, basis, nmax)
        with mpmath.workprec(96):
            e = mpmath.mpf(weight - 1) / 2
            coeffs = tuple(mpmath.mpf(float(lam[n])) * mpmath.power(n, e) for n in range(1, nmax + 1))
        tables.append((lam, coeffs))
    ordered = sorted(
        range(len(tables)),
        key=lambda i: (round(float(tables[i][0][2]), 12), float(tables[i][0][3]) if nmax >= 3 else 0.0),
    )
    result = []
    for idx, i in enumerate(ordered):
        lam, coeffs = tables[i]
        t = EigenformTable(weight, idx, nmax, coeffs, False)
        object.__setattr__(t, "_lam", lam)
        result.append(t)
    return result


def _check_numeric(weight, lam, fixed, bits, basis, nmax) -> None:
    """Compare Hecke-generated lambda(n) with the direct basis combination."""
    d = len(basis)
    e = (weight - 1) / 2
    probes = [n for n in (4, 6, 8, 9, 10, 12, 15, 16, 25, nmax) if n <= nmax]
    with mpmath.workprec(96):
        for n in probes:
            direct = sum(fixed[j] * basis[j][n] for j in range(d))
            val = float(mpmath.mpf(direct) / mpmath.mpf(2) ** bits / mpmath.power(n, e))
            if abs(val - lam[n]) > INEXACT_TOL * max(1.0, abs(val)):
                raise InternalError(f"numeric eigenform failed the Hecke check at n={n}")


def eigenforms(weight: int, nmax: int, *, use_cache: bool = False,
               directory: str | Path | None = None) -> list[EigenformTable]:
    """All normalised Hecke eigenforms of weight k, sorted by lambda(2).

    ``directory`` overrides :func:`cache_dir` when the cache is in use.
    """
    if weight % 2 or weight < 12:
        raise ValueError(f"weight must be even and >= 12, got {weight}")
    d = cusp_dim(weight)
    if d == 0:
        return []
    if use_cache:
        cached = [cache_load(weight, i, nmax, directory) for i in range(d)]
        if all(c is not None for c in cached):
            return cached  # type: ignore[return-value]
    if d == 1:
        series = delta_qexp(nmax) if weight == 12 else miller_basis(weight, nmax)[0]
        tables = [EigenformTable(weight, 0, nmax, tuple(series.coeffs[1:]), True)]
    else:
        need = max(nmax, 2 * d)
        basis = miller_basis(weight, need)
        tables = _numeric_eigenforms(weight, need, basis)
        if need != nmax:
            tables = [_truncate(t, nmax) for t in tables]
    if use_cache:
        for t in tables:
            cache_store(t, directory)
    return tables


def _truncate(t: EigenformTable, nmax: int) -> EigenformTable:
    out = EigenformTable(t.weight, t.index, nmax, t.coeffs[:nmax], t.exact)
    if t._lam is not None:
        object.__setattr__(out, "_lam", t._lam[: nmax + 1].copy())
    return out


# -------------------------------------------------------------------- cache

def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "hquesums"


def _cache_path(weight: int, index: int, nmax: int, directory=None) -> Path:
    return (Path(directory) if directory else cache_dir()) / f"eigen_w{weight}_i{index}_n{nmax}_v{CACHE_VERSION}.json"


def _coeff_str(c, exact: bool) -> str:
    return str(c) if exact else mpmath.nstr(c, 34, strip_zeros=False)  # covers 96-bit mantissas


def _payload_checksum(doc: dict) -> str:
    body = {k: doc[k] for k in ("version", "weight", "index", "nmax", "exact", "coeffs")}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def cache_store(t: EigenformTable, directory: str | Path | None = None) -> Path:
    doc = {
        "version": CACHE_VERSION,
        "weight": t.weight,
        "index": t.index,
        "nmax": t.nmax,
        "exact": t.exact,
        "coeffs": [_coeff_str(c, t.exact) for c in t.coeffs],
    }
    doc["checksum"] = _payload_checksum(doc)
    path = _cache_path(t.weight, t.index, t.nmax, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def cache_load(weight: int, index: int, nmax: int, directory: str | Path | None = None) -> EigenformTable | None:
    """Return the cached table, or None when absent or written by another format version."""
    path = _cache_path(weight, index, nmax, directory)
    if not path.exists():
        return None
    try:
        doc = json.loads(path.read_bytes().decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CacheIntegrityError(f"{path}: unreadable cache file ({exc})") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise CacheIntegrityError(f"{path}: malformed cache document")
    if doc["version"] != CACHE_VERSION:
        return None
    try:
        if doc.get("checksum") != _payload_checksum(doc):
            raise CacheIntegrityError(f"{path}: checksum mismatch")
        if (doc["weight"], doc["index"], doc["nmax"]) != (weight, index, nmax):
            raise CacheIntegrityError(f"{path}: key fields do not match file name")
        exact = bool(doc["exact"])
        if exact:
            coeffs = tuple(int(s) for s in doc["coeffs"])
        else:
            with mpmath.workprec(120):
                coeffs = tuple(mpmath.mpf(s) for s in doc["coeffs"])
    except KeyError as exc:
        raise CacheIntegrityError(f"{path}: missing field {exc}") from exc
    if len(coeffs) != nmax:
        raise CacheIntegrityError(f"{path}: expected {nmax} coefficients")
    return EigenformTable(weight, index, nmax, coeffs, exact)
