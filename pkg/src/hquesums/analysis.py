"""Archimedean analysis: test functions, zeta/Gamma/xi, Whittaker functions,
the Mellin-contour weight h(y) and the integrals V_k and J(s).

Derivatives are carried as *invariant jets*: an array whose row j holds
D^j f with D = y d/dy.  Products use the Leibniz rule and the substitution
y -> c/y flips the sign of odd rows, which keeps every composite in this
module differentiable to any order without finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import loggamma

from .seriescore import bernoulli

__all__ = [
    "PoleError",
    "IngestionError",
    "TestFunction",
    "Bump",
    "Scaled",
    "Shifted",
    "LinearCombination",
    "JetFunction",
    "ZeroFunction",
    "sobolev_norm",
    "sup_second_derivative",
    "zeta_line",
    "HEllTable",
    "WhittakerJetTable",
    "h_ell_jet_from",
    "xi_c",
    "xi_direct",
    "afe_kernel",
    "whittaker_wk",
    "kbessel_ir",
    "kbessel_ir_real_line",
    "MaassData",
    "load_maass",
    "maass_from_dict",
    "bundled_maass",
    "maass_whittaker",
    "maass_whittaker_jet",
    "h_eval",
    "h_jet",
    "h_tail_bound",
    "h_ell",
    "h_ell_jet",
    "v_k",
    "v_k_batch",
    "iwaniec_j",
    "f_ell",
    "f_ell_function",
    "num_divisors",
    "HEllTable",
    "LogChebTable",
    "v_k_batch_table",
]


class PoleError(ValueError):
    """Evaluation at a pole."""


class IngestionError(ValueError):
    """Ingested data violates a stated invariant."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant, self.detail = invariant, detail


# ------------------------------------------------------------ power series
# Truncated Taylor series are arrays of shape (order+1, npts).

def _ps_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    for k in range(a.shape[0]):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def _ps_recip(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, a.shape[0]):
        out[k] = -np.sum(a[1 : k + 1] * out[k - 1 :: -1], axis=0) / a[0]
    return out


def _ps_exp(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        i = np.arange(1, k + 1)[:, None]
        out[k] = np.sum(i * a[1 : k + 1] * out[k - 1 :: -1], axis=0) / k
    return out


def _factorials(n: int) -> np.ndarray:
    return np.array([math.factorial(j) for j in range(n + 1)], dtype=float)


@lru_cache(maxsize=None)
def _stirling1(n: int) -> np.ndarray:
    """s[j][i] with y^j f^(j) = sum_i s[j][i] D^i f (signed, first kind)."""
    s = np.zeros((n + 1, n + 1))
    s[0, 0] = 1.0
    for j in range(1, n + 1):
        for i in range(1, j + 1):
            s[j, i] = s[j - 1, i - 1] - (j - 1) * s[j - 1, i]
    return s


@lru_cache(maxsize=None)
def _stirling2(n: int) -> np.ndarray:
    """S[j][i] with D^j f = sum_i S[j][i] y^i f^(i)."""
    S = np.zeros((n + 1, n + 1))
    S[0, 0] = 1.0
    for j in range(1, n + 1):
        for i in range(1, j + 1):
            S[j, i] = S[j - 1, i - 1] + i * S[j - 1, i]
    return S


def _jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for j in range(n):
        for i in range(j + 1):
            out[j] += math.comb(j, i) * a[i] * b[j - i]
    return out


def _jet_reflect(a: np.ndarray) -> np.ndarray:
    """Jet of y -> g(c/y) given the jet of g evaluated at c/y."""
    sign = np.array([(-1) ** j for j in range(a.shape[0])], dtype=float)
    return a * sign.reshape((-1,) + (1,) * (a.ndim - 1))


def _jet_to_ordinary(jet: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = jet.shape[0] - 1
    s = _stirling1(n)
    out = np.einsum("ji,i...->j...", s, jet)
    for j in range(n + 1):
        out[j] = out[j] / y**j
    return out


# ----------------------------------------------------------- test functions

class TestFunction:
    """A smooth function on (0, oo) with derivatives of every order."""

    __test__ = False  # not a pytest class
    support: tuple[float, float]
    max_order: int | None = None

    def jet(self, y, order: int) -> np.ndarray:
        """Rows D^0 f .. D^order f at the points y."""
        raise NotImplementedError

    def __call__(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        vals = self.jet(y_arr, 0)[0]
        return vals if np.ndim(y) else float(vals[0])

    def derivatives(self, y, order: int) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return _jet_to_ordinary(self.jet(y, order), y)

    def _check_order(self, order: int) -> None:
        if self.max_order is not None and order > self.max_order:
            raise ValueError(f"derivatives available to order {self.max_order}, requested {order}")

    def scaled(self, a: float) -> "Scaled":
        return Scaled(self, a)

    def __add__(self, other: "TestFunction") -> "LinearCombination":
        return LinearCombination(((1.0, self), (1.0, other)))

    def __rmul__(self, c: float) -> "LinearCombination":
        return LinearCombination(((float(c), self),))

    def describe(self) -> str:
        return type(self).__name__


class _SeriesFunction(TestFunction):
    """Functions given through a Taylor-series map Y -> f(Y)."""

    def series(self, Y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jet(self, y, order: int) -> np.ndarray:
        self._check_order(order)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        fac = _factorials(order)
        # f(y e^u) as a series in u: the argument has coefficients y/j!
        Y = y[None, :] / fac[:, None]
        return self.series(Y) * fac[:, None]

    def taylor(self, y, order: int) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        Y = np.zeros((order + 1, y.size))
        Y[0] = y
        if order >= 1:
            Y[1] = 1.0
        return self.series(Y)


class ZeroFunction(_SeriesFunction):
    def __init__(self, support=(1.0, 2.0)):
        self.support = tuple(support)

    def series(self, Y):
        return np.zeros_like(Y)

    def describe(self) -> str:
        return "zero"


class Bump(_SeriesFunction):
    """exp(1 - 1/(1 - t^2)) with t mapping (y0, y1) onto (-1, 1); maximum 1 at the midpoint."""

    def __init__(self, y0: float, y1: float):
        if not 0 < y0 < y1:
            raise ValueError("bump support must satisfy 0 < y0 < y1")
        self.y0, self.y1 = float(y0), float(y1)
        self.support = (self.y0, self.y1)

    def series(self, Y: np.ndarray) -> np.ndarray:
        width = self.y1 - self.y0
        t = 2.0 * Y / width
        t[0] -= (self.y0 + self.y1) / width
        out = np.zeros_like(Y)
        inside = 1.0 - t[0] ** 2 > 1e-6
        if not np.any(inside):
            return out
        ti = t[:, inside]
        one_minus = -_ps_mul(ti, ti)
        one_minus[0] += 1.0
        g = -_ps_recip(one_minus)
        g[0] += 1.0
        out[:, inside] = _ps_exp(g)
        return out

    def describe(self) -> str:
        return f"bump({self.y0:g},{self.y1:g})"


class Scaled(_SeriesFunction):
    """y -> f(a y)."""

    def __init__(self, base: _SeriesFunction, a: float):
        if a <= 0:
            raise ValueError("scale must be positive")
        self.base, self.a = base, float(a)
        self.support = (base.support[0] / a, base.support[1] / a)

    def series(self, Y):
        return self.base.series(self.a * Y)

    def describe(self) -> str:
        return f"{self.base.describe()}∘(×{self.a:g})"


class Shifted(_SeriesFunction):
    """y -> f(y - s)."""

    def __init__(self, base: _SeriesFunction, s: float):
        lo = base.support[0] + s
        if lo <= 0:
            raise ValueError("shift would move the support out of (0, oo)")
        self.base, self.s = base, float(s)
        self.support = (lo, base.support[1] + s)

    def series(self, Y):
        Z = Y.copy()
        Z[0] = Y[0] - self.s
        return self.base.series(Z)

    def describe(self) -> str:
        return f"{self.base.describe()}∘(-{self.s:g})"


class LinearCombination(_SeriesFunction):
    def __init__(self, terms):
        self.terms = tuple((float(c), f) for c, f in terms)
        if not self.terms:
            raise ValueError("empty combination")
        self.support = (min(f.support[0] for _, f in self.terms), max(f.support[1] for _, f in self.terms))

    def series(self, Y):
        return sum(c * f.series(Y) for c, f in self.terms)

    def describe(self) -> str:
        return "+".join(f"{c:g}*{f.describe()}" for c, f in self.terms)


class JetFunction(TestFunction):
    """Wrapper around a callable returning invariant jets; support is the evaluation window."""

    def __init__(self, jet_fn, support, max_order: int | None = None, name: str = "jet"):
        self._fn = jet_fn
        self.support = (float(support[0]), float(support[1]))
        self.max_order = max_order
        self.name = name

    def jet(self, y, order: int) -> np.ndarray:
        self._check_order(order)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return np.asarray(self._fn(y, order), dtype=float)

    def describe(self) -> str:
        return self.name


# ----------------------------------------------------------- Sobolev norms

GRID_PER_UNIT = 2**12


def _log_grid(support, per_unit=GRID_PER_UNIT) -> np.ndarray:
    a, b = np.log(support[0]), np.log(support[1])
    n = max(int(math.ceil((b - a) * per_unit)), 16)
    return np.linspace(a, b, n + 1)


def _grid_sup(values_fn, support, rows: int) -> np.ndarray:
    """Per-row sup of |values_fn(y)| over a log grid plus one local refinement."""
    u = _log_grid(support)
    best = np.zeros(rows)
    chunk = 1 << 15
    argmax = np.zeros(rows, dtype=int)
    for start in range(0, u.size, chunk):
        vals = np.abs(values_fn(np.exp(u[start : start + chunk])))
        idx = np.argmax(vals, axis=1)
        vmax = vals[np.arange(rows), idx]
        better = vmax > best
        best[better] = vmax[better]
        argmax[better] = idx[better] + start
    for r in range(rows):
        i = argmax[r]
        lo, hi = u[max(i - 1, 0)], u[min(i + 1, u.size - 1)]
        fine = np.linspace(lo, hi, 257)
        best[r] = max(best[r], float(np.max(np.abs(values_fn(np.exp(fine))[r]))))
    return best


def sobolev_norm(f: TestFunction, N: int) -> float:
    """max_{j<=N} sup_y (y + 1/y)^N |D^j f(y)| on a dense log grid (about 5% certified)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    f._check_order(N)

    def weighted(y):
        return (y + 1.0 / y) ** N * f.jet(y, N)

    return float(np.max(_grid_sup(weighted, f.support, N + 1)))


def sup_second_derivative(f: TestFunction, support=None) -> float:
    supp = support or f.support
    return float(_grid_sup(lambda y: f.derivatives(y, 2)[2:3], supp, 1)[0])


# --------------------------------------------------------- zeta, Gamma, xi

_EM_TERMS = 24
_EM_COEF = np.array([float(bernoulli(2 * j)) / math.factorial(2 * j) for j in range(1, _EM_TERMS + 1)])


def _is_nonpositive_int(s: np.ndarray) -> np.ndarray:
    return (s.imag == 0) & (s.real <= 0) & (s.real == np.round(s.real))


def gamma_c(s):
    """Gamma on the complex plane; raises PoleError at 0, -1, -2, ..."""
    arr = np.asarray(s, dtype=complex)
    if np.any(_is_nonpositive_int(arr)):
        raise PoleError("Gamma has a pole at a nonpositive integer")
    out = np.exp(loggamma(arr))
    return out if arr.ndim else complex(out)


def _zeta_em(s: np.ndarray) -> np.ndarray:
    if s.size == 0:
        return s.copy()
    N = int(np.max(np.abs(s))) + 24
    n = np.arange(1, N, dtype=float)
    head = np.exp(-np.multiply.outer(s, np.log(n))).sum(axis=-1)
    logN = math.log(N)
    tail = np.exp((1 - s) * logN) / (s - 1) + 0.5 * np.exp(-s * logN)
    rising = s.copy()
    power = np.exp(-(s + 1) * logN)
    for j in range(_EM_TERMS):
        tail = tail + _EM_COEF[j] * rising * power
        rising = rising * (s + 2 * j + 1) * (s + 2 * j + 2)
        power = power / (N * N)
    return head + tail


def zeta_line(s):
    """Riemann zeta by Euler-Maclaurin summation (validated for Re s > -1, |Im s| <= 200)."""
    arr = np.asarray(s, dtype=complex)
    if np.any(arr == 1):
        raise PoleError("zeta has a pole at s = 1")
    out = _zeta_em(np.atleast_1d(arr))
    return out.reshape(arr.shape) if arr.ndim else complex(out[0])


def _xi_right(s: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * s * math.log(math.pi) + loggamma(s / 2)) * _zeta_em(s)


def xi_direct(s):
    """pi^(-s/2) Gamma(s/2) zeta(s) without reflection (Re s > -1); used to test xi(s) = xi(1-s)."""
    arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any((arr == 0) | (arr == 1)):
        raise PoleError("xi has poles at s = 0 and s = 1")
    if np.any(arr.real <= -1):
        raise ValueError("direct evaluation needs Re s > -1")
    out = _xi_right(arr)
    return out.reshape(np.shape(s)) if np.ndim(s) else complex(out[0])


def xi_c(s):
    """Completed zeta pi^(-s/2) Gamma(s/2) zeta(s); the left half-plane uses xi(s) = xi(1-s)."""
    arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any((arr == 0) | (arr == 1)):
        raise PoleError("xi has poles at s = 0 and s = 1")
    left = arr.real < 0.5
    out = np.empty_like(arr)
    out[~left] = _xi_right(arr[~left])
    out[left] = _xi_right(1 - arr[left])
    return out.reshape(np.shape(s)) if np.ndim(s) else complex(out[0])


_XI_C0 = 0.5 * 0.5772156649015329 - 0.5 * math.log(4 * math.pi)


def afe_kernel(s):
    """(2s - 1) 2 xi(2s); the pole of xi at 1 is removable here, with value 2 at s = 1/2."""
    arr = np.atleast_1d(np.asarray(s, dtype=complex))
    w = 2 * arr
    near = np.abs(w - 1) < 1e-5
    out = np.empty_like(arr)
    if np.any(~near):
        out[~near] = (w[~near] - 1) * 2 * xi_c(w[~near])
    out[near] = 2 * (1 + _XI_C0 * (w[near] - 1))
    return out.reshape(np.shape(s)) if np.ndim(s) else complex(out[0])


# ------------------------------------------------------------- W_k, K_ir

def whittaker_wk(k: int, y):
    """L2-normalised holomorphic Whittaker function, evaluated in the log domain."""
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros(np.shape(y_arr))
    pos = y_arr > 0
    yp = y_arr[pos]
    out[pos] = np.exp(0.5 * k * np.log(4 * math.pi * yp) - 2 * math.pi * yp - 0.5 * math.lgamma(k))
    return out if np.ndim(y) else float(out)


@lru_cache(maxsize=32)
def _k_real_nodes(r: float, xmin: float):
    T = math.acosh((60.0 + math.pi * r / 2) / xmin + 1.0)
    h = 2 * math.pi * 1.2 / (50.0 + 1.2 * r + math.pi * r / 2)
    t = np.arange(0.0, T + h, h)
    w = np.full(t.shape, h)
    w[0] = h / 2
    return t, w


def kbessel_ir_real_line(r: float, x, deriv: int = 0):
    """Trapezoid rule for int_0^oo e^{-x cosh t} cos(rt) dt on the real axis.

    Loses about e^{pi r/2 - x} in relative accuracy through cancellation;
    kept as an independent route for cross-checks.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0):
        raise ValueError("K_ir needs x > 0")
    t, w = _k_real_nodes(float(r), float(max(np.min(x_arr), 1e-8)))
    ch = np.cosh(t)
    base = w * np.cos(r * t) * (-ch) ** deriv
    res = np.exp(-np.multiply.outer(x_arr.ravel(), ch)) @ base
    out = res.reshape(x_arr.shape)
    return out if np.ndim(x) else float(out[0])


@lru_cache(maxsize=32)
def _k_shift_nodes(r: float, xmin: float):
    delta = min(2.3 / max(r, 1e-9), 0.5)
    h = 2 * math.pi * delta / (45.0 + 2 * r * delta)
    U = math.acosh(50.0 / (xmin * math.sin(delta)) + 1.0)
    u = np.arange(-math.ceil(U / h), math.ceil(U / h) + 1) * h
    return delta, u, h


def kbessel_ir(r: float, x, deriv: int = 0):
    """d^j/dx^j K_{ir}(x), x > 0.

    K_{ir}(x) = 1/2 int_R e^{-x cosh t + irt} dt.  The line of integration is
    moved to Im t = theta, with theta = arcsin(r/x) capped at pi/2 - delta,
    so the integrand is no larger than the result (no cancellation), and the
    trapezoid rule converges geometrically since the integrand is entire.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0):
        raise ValueError("K_ir needs x > 0")
    flat = x_arr.ravel()
    delta, u, h = _k_shift_nodes(float(r), float(max(np.min(flat), 1e-8)))
    res = np.empty(flat.shape)
    chunk = max(1, (1 << 21) // u.size)
    for s in range(0, flat.size, chunk):
        xs = flat[s : s + chunk]
        theta = np.minimum(np.arcsin(np.minimum(1.0, r / xs)), math.pi / 2 - delta)
        t = u[None, :] + 1j * theta[:, None]
        ch = np.cosh(t)
        integrand = np.exp(-xs[:, None] * ch + 1j * r * t) * (-ch) ** deriv
        res[s : s + chunk] = 0.5 * h * integrand.sum(axis=1).real
    out = res.reshape(x_arr.shape)
    return out if np.ndim(x) else float(out[0])


# -------------------------------------------------------------- Maass data

@dataclass(frozen=True)
class MaassData:
    r: float
    parity: str
    rho: tuple[float, ...]
    source: str = ""

    @property
    def nmax(self) -> int:
        return len(self.rho)

    def coeff(self, n: int) -> float:
        n = abs(n)
        if not 1 <= n <= len(self.rho):
            raise IngestionError("range", f"rho({n}) requested, data has 1..{len(self.rho)}")
        return self.rho[n - 1]

    @property
    def sign(self) -> int:
        return 1 if self.parity == "even" else -1

    def with_rho(self, rho) -> "MaassData":
        """Same spectral data with replaced coefficients (no validation; for synthetic probes)."""
        return MaassData(self.r, self.parity, tuple(float(v) for v in rho), self.source + " [synthetic]")


def num_divisors(n: int) -> int:
    c, d = 0, 1
    while d * d <= n:
        if n % d == 0:
            c += 1 if d * d == n else 2
        d += 1
    return c


MAASS_MIN_COEFFS = 6


def _validate_maass(r: float, parity: str, rho: tuple[float, ...]) -> None:
    if not r > 0:
        raise IngestionError("spectral-parameter", f"r must be positive, got {r}")
    if parity not in ("even", "odd"):
        raise IngestionError("parity", f"expected 'even' or 'odd', got {parity!r}")
    if not rho or abs(rho[0] - 1.0) > 1e-12:
        raise IngestionError("rho(1)=1", f"rho(1) = {rho[0] if rho else None}")
    N = len(rho)
    if N < MAASS_MIN_COEFFS:
        raise IngestionError("coefficient count", f"{N} coefficients; at least {MAASS_MIN_COEFFS} are needed "
                             "so that a Hecke relation can be checked")
    for n in range(1, N + 1):
        bound = num_divisors(n) * n ** (7 / 64) * 1.01
        if abs(rho[n - 1]) > bound:
            raise IngestionError("Kim-Sarnak bound", f"|rho({n})| = {abs(rho[n - 1]):.6g} > {bound:.6g}")
    for m in range(2, N + 1):
        for n in range(m, N // m + 1):
            g = math.gcd(m, n)
            rhs = sum(rho[m * n // (d * d) - 1] for d in range(1, g + 1) if g % d == 0)
            if abs(rho[m - 1] * rho[n - 1] - rhs) > 1e-6:
                raise IngestionError("Hecke relation", f"m={m}, n={n}: defect {rho[m - 1] * rho[n - 1] - rhs:.3g}")


def maass_from_dict(doc: dict) -> MaassData:
    for key in ("version", "r", "parity", "rho"):
        if key not in doc:
            raise IngestionError("schema", f"missing field {key!r}")
    if doc["version"] != 1:
        raise IngestionError("schema", f"unsupported version {doc['version']!r}")
    try:
        r = float(str(doc["r"]))
        rho = tuple(float(str(v)) for v in doc["rho"])
    except ValueError as exc:
        raise IngestionError("schema", f"non-numeric entry ({exc})") from exc
    _validate_maass(r, doc["parity"], rho)
    return MaassData(r, doc["parity"], rho, str(doc.get("source", "")))


def load_maass(path) -> MaassData:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError("readable JSON", str(exc)) from exc
    return maass_from_dict(doc)


_BUNDLED = {"even": "maass_even_r13.78.json", "odd": "maass_odd_r9.53.json"}


@lru_cache(maxsize=None)
def bundled_maass(parity: str = "even") -> MaassData:
    name = _BUNDLED[parity]
    text = resources.files("hquesums").joinpath("data", name).read_text()
    return maass_from_dict(json.loads(text))


def _w_psi_positive_jet(data: MaassData, y: np.ndarray, order: int) -> np.ndarray:
    """Invariant jet of y -> sqrt(y) e^{pi r/2} K_ir(2 pi y), y > 0."""
    x = 2 * math.pi * y
    pref = math.exp(math.pi * data.r / 2)
    # ordinary derivatives of g(y) = K(2 pi y): (2 pi)^i K^(i)
    kd = np.array([(2 * math.pi) ** i * kbessel_ir(data.r, x, i) for i in range(order + 1)])
    # D^j g = sum_i S(j,i) y^i g^(i); then multiply by the jet of sqrt(y): D^j sqrt(y) = 2^-j sqrt(y)
    S = _stirling2(order)
    gjet = np.einsum("ji,i...->j...", S, kd * y[None, :] ** np.arange(order + 1)[:, None])
    sjet = np.array([0.5**j * np.sqrt(y) for j in range(order + 1)])
    return pref * _jet_mul(gjet, sjet)


def maass_whittaker(data: MaassData, y):
    """W(y) = eps(sign y) sqrt|y| e^{pi r/2} K_ir(2 pi |y|)."""
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr == 0):
        raise ValueError("W_Psi is evaluated at y != 0 only")
    a = np.abs(y_arr)
    vals = np.sqrt(a) * math.exp(math.pi * data.r / 2) * kbessel_ir(data.r, 2 * math.pi * a)
    if data.parity == "odd":
        vals = vals * np.sign(y_arr)
    return vals.reshape(np.shape(y)) if np.ndim(y) else float(vals[0])


def maass_whittaker_jet(data: MaassData, y, order: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise ValueError("jets are taken on y > 0")
    return _w_psi_positive_jet(data, y, order)


# ---------------------------------------------------------------------- h(y)

_H_T = 48.0
_H_PANELS_PER_UNIT = 1
_H_GL = 20
H_LARGE_Y = 10.0  # sigma = 2 loses ~y^2 * eps to cancellation beyond this


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@lru_cache(maxsize=16)
def _h_contour(sigma: float, d_B: int):
    x, w = np.polynomial.legendre.leggauss(_H_GL)
    edges = np.arange(0.0, _H_T + 1e-12, 1.0 / _H_PANELS_PER_UNIT)
    t = np.concatenate([(a + b) / 2 + (b - a) / 2 * x for a, b in zip(edges[:-1], edges[1:])])
    wt = np.concatenate([(b - a) / 2 * w for a, b in zip(edges[:-1], edges[1:])])
    s = sigma + 1j * t
    R = afe_kernel(s) * sum(np.exp(s * math.log(d)) for d in _divisors(d_B))
    tail_env = float(np.abs(afe_kernel(sigma + 1j * _H_T) * sum(d**sigma for d in _divisors(d_B))))
    return s, wt * R / math.pi, tail_env


def _sigma_for(y: float) -> float:
    if y < 1:
        return 6.0
    if y <= H_LARGE_Y:
        return 2.0
    return -1.5


def h_tail_bound(y: float, d_B: int = 1) -> float:
    """Bound for the part of the contour integral with |Im s| > T (Stirling decay e^{-pi t/2})."""
    sigma = _sigma_for(y)
    _, _, env = _h_contour(sigma, d_B)
    return y**sigma * env * (2 / math.pi) * (2 / math.pi) * 4


def h_jet(y, d_B: int = 1, order: int = 0) -> np.ndarray:
    """Rows D^j h(y), j <= order, from the Mellin contour (D = y d/dy)."""
    if d_B < 1:
        raise ValueError("d_B must be a positive squarefree integer")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr <= 0):
        raise ValueError("h is defined for y > 0")
    out = np.zeros((order + 1,) + y_arr.shape)
    flat = y_arr.ravel()
    res = np.zeros((order + 1, flat.size))
    sig = np.array([_sigma_for(v) for v in flat]) if flat.size < 64 else np.where(
        flat < 1, 6.0, np.where(flat <= H_LARGE_Y, 2.0, -1.5))
    for sigma in (6.0, 2.0, -1.5):
        sel = np.nonzero(sig == sigma)[0]
        if sel.size == 0:
            continue
        s, cw, _ = _h_contour(sigma, d_B)
        chunk = max(1, (1 << 21) // s.size)
        for a in range(0, sel.size, chunk):
            idx = sel[a : a + chunk]
            E = np.exp(np.multiply.outer(np.log(flat[idx]), s))
            for j in range(order + 1):
                res[j, idx] = (E @ (cw * s**j)).real
        if sigma < 0:
            res[0, sel] += len(_divisors(d_B))  # residue at s = 0
    out[:] = res.reshape((order + 1,) + y_arr.shape)
    return out


def h_eval(y, d_B: int = 1):
    """h(y) = int_(sigma) (2s-1) 2 xi(2s) (sum_{d | d_B} d^s) y^s ds/(2 pi i)."""
    vals = h_jet(y, d_B, 0)[0]
    return vals if np.ndim(y) else float(vals.ravel()[0])


def h_ell(ell: int, y, data: MaassData, d_B: int = 1):
    """h(y) W_Psi(ell y) / y."""
    if ell == 0:
        raise ValueError("ell must be nonzero")
    y_arr = np.asarray(y, dtype=float)
    vals = h_eval(y_arr, d_B) * maass_whittaker(data, ell * y_arr) / y_arr
    return vals if np.ndim(y) else float(vals)


def h_ell_jet(ell: int, y, data: MaassData, order: int, d_B: int = 1) -> np.ndarray:
    if ell == 0:
        raise ValueError("ell must be nonzero")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    hj = h_jet(y, d_B, order)
    wj = maass_whittaker_jet(data, abs(ell) * y, order)
    if ell < 0 and data.parity == "odd":
        wj = -wj
    inv = np.array([(-1.0) ** j / y for j in range(order + 1)])
    return _jet_mul(_jet_mul(hj, wj), inv)


# --------------------------------------------------------------- V_k and J

@lru_cache(maxsize=64)
def _gl_panels(lo: float, hi: float, panels: int, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    pts = np.concatenate([(a + b) / 2 + (b - a) / 2 * x for a, b in zip(edges[:-1], edges[1:])])
    wts = np.concatenate([(b - a) / 2 * w for a, b in zip(edges[:-1], edges[1:])])
    return pts, wts


def _gamma_weight_nodes(k: float):
    lo = max(k - 30 * math.sqrt(k), 1e-12)
    hi = k + 30 * math.sqrt(k)
    y, w = _gl_panels(lo, hi, 16, 24)
    logw = (k - 1) * np.log(y) - y - math.lgamma(k)
    return y, w * np.exp(logw)


def v_k_batch(k: int, D: int, ell: int, ns, data: MaassData, d_B: int = 1) -> np.ndarray:
    """V_k(ell, n) for an array of n (zero where n^2 <= D ell^2)."""
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    out = np.zeros(ns.shape)
    ok = ns * ns > D * ell * ell
    if not np.any(ok):
        return out
    y, w = _gamma_weight_nodes(float(k))
    n_ok = ns[ok]
    arg = np.multiply.outer(math.sqrt(D) / (2 * math.pi * n_ok), y)
    vals = h_ell(ell, arg.ravel(), data, d_B).reshape(arg.shape)
    integral = vals @ w
    base = 1.0 - D * ell * ell / (n_ok * n_ok)
    out[ok] = np.exp(0.5 * k * np.log(base)) * integral
    return out


def v_k(k: int, D: int, ell: int, n: int, data: MaassData, d_B: int = 1) -> float:
    return float(v_k_batch(k, D, ell, [n], data, d_B)[0])


def iwaniec_j(f: TestFunction, s: float) -> tuple[float, float]:
    """(J(s), (s/2) sup|f''|) with J(s) = Gamma(s)^-1 int f(y) y^s e^-y dy/y."""
    if s <= 0:
        raise ValueError("s must be positive")
    lo, hi = f.support
    y, w = _gl_panels(float(lo), float(hi), 32, 24)
    logw = (s - 1) * np.log(y) - y - math.lgamma(s)
    J = float(np.sum(w * np.exp(logw) * f(y)))
    return J, 0.5 * s * sup_second_derivative(f)


def f_ell(ell: int, u, data: MaassData, D: int, d_B: int = 1):
    """(rho(|ell|)/|ell|^(1/2)) (2/u) h_ell(sqrt(D)/(2 pi u))."""
    if ell == 0:
        raise ValueError("ell must be nonzero")
    c = data.coeff(ell) / math.sqrt(abs(ell))
    u_arr = np.asarray(u, dtype=float)
    vals = c * (2.0 / u_arr) * h_ell(ell, math.sqrt(D) / (2 * math.pi * u_arr), data, d_B)
    return vals if np.ndim(u) else float(vals)


def f_ell_function(ell: int, data: MaassData, D: int, d_B: int = 1, window=(0.05, 20.0)) -> JetFunction:
    """f_ell as a TestFunction (jets exact); ``window`` bounds the Sobolev sup."""
    c = data.coeff(ell) / math.sqrt(abs(ell))
    a = math.sqrt(D) / (2 * math.pi)

    def jet(u, order):
        hj = _jet_reflect(h_ell_jet(ell, a / u, data, order, d_B))
        inv = np.array([2.0 * (-1.0) ** j / u for j in range(order + 1)])
        return c * _jet_mul(inv, hj)

    return JetFunction(jet, window, None, name=f"f_ell[{ell}]")


# ------------------------------------------------------ h_ell interpolation

class LogChebTable:
    """Piecewise Chebyshev interpolant of a smooth function on [ymin, ymax] in log y.

    Each panel holds a degree-``deg`` expansion, so for the analytic functions
    used here the interpolation error sits at roundoff level; points outside
    the window evaluate to 0.
    """

    def __init__(self, fn, ymin: float, ymax: float, panel: float = 0.25, deg: int = 24):
        self.lo, self.hi = math.log(ymin), math.log(ymax)
        self.npanel = max(1, int(math.ceil((self.hi - self.lo) / panel)))
        self.width = (self.hi - self.lo) / self.npanel
        x = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
        centers = self.lo + self.width * (np.arange(self.npanel) + 0.5)
        u = centers[:, None] + 0.5 * self.width * x[None, :]
        vals = np.asarray(fn(np.exp(u).ravel()), dtype=float).reshape(u.shape)
        self.coef = np.array([np.polynomial.chebyshev.chebfit(x, v, deg) for v in vals])
        self.ymin, self.ymax = ymin, ymax

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        inside = (y >= self.ymin) & (y <= self.ymax)
        ui = np.log(y[inside])
        idx = np.minimum(((ui - self.lo) / self.width).astype(int), self.npanel - 1)
        t = 2 * (ui - self.lo - (idx + 0.5) * self.width) / self.width
        c = self.coef[idx]
        b1 = np.zeros(ui.shape)
        b2 = np.zeros(ui.shape)
        for j in range(c.shape[1] - 1, 0, -1):
            b1, b2 = 2 * t * b1 - b2 + c[:, j], b1
        out[inside] = t * b1 - b2 + c[:, 0]
        return out


class WhittakerJetTable:
    """Rows D^j W_Psi(t), j <= order, tabulated for t in [tmin, tmax] (t > 0)."""

    def __init__(self, data: MaassData, tmax: float, order: int = 0, tmin: float = 1e-3):
        self.data, self.order, self.tmin, self.tmax = data, order, tmin, tmax
        cache: dict = {}

        def row(j):
            def fn(t):
                key = t.size
                if key not in cache:
                    cache[key] = maass_whittaker_jet(data, t, order)
                return cache[key][j]
            return fn

        self.rows = [LogChebTable(row(j), tmin, tmax) for j in range(order + 1)]

    def jet(self, t: np.ndarray, order: int | None = None) -> np.ndarray:
        order = self.order if order is None else order
        t = np.asarray(t, dtype=float)
        if np.any((t < self.tmin) | (t > self.tmax)):
            raise ValueError(f"W_Psi table covers [{self.tmin}, {self.tmax}]")
        return np.array([self.rows[j](t) for j in range(order + 1)])


def h_ell_jet_from(ell: int, y: np.ndarray, hjet: np.ndarray, wtab: WhittakerJetTable, order: int = 0) -> np.ndarray:
    """h_ell jet on y given the jet of h there and a W_Psi table."""
    wj = wtab.jet(abs(ell) * y, order)
    if ell < 0 and wtab.data.parity == "odd":
        wj = -wj
    inv = np.array([(-1.0) ** j / y for j in range(order + 1)])
    return _jet_mul(_jet_mul(hjet[: order + 1], wj), inv)


class HEllTable(LogChebTable):
    """h_ell tabulated on [ymin, ymax]; ``outside_bound`` is |h_ell| at the window edges.

    With ``wtab`` the Whittaker factor is read from that table instead of
    being recomputed from K_ir.
    """

    def __init__(self, ell: int, data: MaassData, d_B: int = 1, ymin: float = 1e-3, ymax: float = 60.0,
                 wtab: WhittakerJetTable | None = None):
        self.ell, self.d_B = ell, d_B
        if wtab is None:
            fn = lambda y: h_ell(ell, y, data, d_B)  # noqa: E731
        else:
            fn = lambda y: h_eval(y, d_B) * wtab.jet(abs(ell) * y, 0)[0] / y  # noqa: E731
        super().__init__(fn, ymin, ymax)
        self.outside_bound = float(np.max(np.abs(fn(np.array([ymin, ymax])))))


def v_k_batch_table(k: int, D: int, ell: int, ns, table: HEllTable) -> np.ndarray:
    """v_k_batch using a precomputed h_ell interpolant."""
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    out = np.zeros(ns.shape)
    ok = ns * ns > D * ell * ell
    if not np.any(ok):
        return out
    y, w = _gamma_weight_nodes(float(k))
    n_ok = ns[ok]
    arg = np.multiply.outer(math.sqrt(D) / (2 * math.pi * n_ok), y)
    integral = table(arg) @ w
    base = 1.0 - D * ell * ell / (n_ok * n_ok)
    out[ok] = np.exp(0.5 * k * np.log(base)) * integral
    return out
