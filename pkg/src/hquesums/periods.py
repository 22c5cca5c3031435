"""The restriction period of a base-changed eigenform against a Maass form.

Three routes:

* ``period_via_vk``: the exact double sum over (ell, n) weighted by V_k;
* ``period_asymptotic``: the truncated sum of lambda_D(x) f_ell(n/k)/k;
* ``period_direct``: quadrature of phi_D(z, z) Psi'(z) dx dy / y^2 over the
  standard fundamental domain, both factors assembled from Fourier series.

Indices: x = (n + ell sqrt D)/2 ranges over O_D, with m = x/sqrt D in the
inverse different, m_1 = (ell + n/sqrt D)/2 and m_2 = (ell - n/sqrt D)/2.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaincc

from .analysis import (
    HEllTable,
    LogChebTable,
    MaassData,
    _gamma_weight_nodes,
    _gl_panels,
    _jet_to_ordinary,
    WhittakerJetTable,
    h_ell,
    h_ell_jet_from,
    h_jet,
    maass_whittaker,
    num_divisors,
    v_k_batch_table,
)
from .basechange import BaseChangeContext, lambda_D_element
from .eigenforms import RangeError
from .quadarith import QuadInteger, split_inert_parts
from .sums import holowinsky_majorants, l_ad_value, prime_stats

__all__ = [
    "PERIOD_SCHEMA",
    "PeriodCaps",
    "SumResult",
    "PeriodReport",
    "CostGuardError",
    "admissible",
    "default_caps",
    "ell_cap_from_eps",
    "period_via_vk",
    "period_asymptotic",
    "cross_budget",
    "period_direct",
    "congruence_decomposition",
    "regroup",
    "theoremB_statistic",
    "report_to_json",
]

PERIOD_SCHEMA = "hquesums.periodreport/1"
# below this argument |h| is under 1e-24 (contour evaluation at the roundoff floor)
Y_FLOOR = 0.05


class CostGuardError(ValueError):
    pass


def admissible(D: int, n: int, ell: int) -> bool:
    """(n + ell sqrt D)/2 lies in O_D."""
    return n % 2 == 0 if D % 2 == 0 else (n - ell) % 2 == 0


@dataclass(frozen=True)
class PeriodCaps:
    Lmax: int
    Nmax: int


def _y_hi(k: int) -> float:
    return k + 12 * math.sqrt(k) + 30


def default_caps(k: int, D: int, data: MaassData) -> PeriodCaps:
    """Lmax = all stored Maass coefficients; Nmax where the argument of h_ell drops below Y_FLOOR."""
    nmax = int(math.ceil(math.sqrt(D) * _y_hi(k) / (2 * math.pi * Y_FLOOR)))
    return PeriodCaps(data.nmax, nmax)


def _index_rows(D: int, ell: int, Nmax: int, *, strict: bool) -> np.ndarray:
    """Admissible n in [1, Nmax]; with ``strict`` only n > |ell| sqrt D."""
    ns = np.arange(1, Nmax + 1)
    ok = np.array([admissible(D, int(n), ell) for n in ns], dtype=bool)
    if strict:
        ok &= ns * ns > D * ell * ell
    return ns[ok]


class _LambdaD:
    """Memoised lambda_D of (n + ell sqrt D)/2; conjugates share a value."""

    def __init__(self, ctx: BaseChangeContext):
        self.ctx = ctx
        self.cache: dict = {}

    def __call__(self, n: int, ell: int) -> float:
        key = (n, abs(ell))
        v = self.cache.get(key)
        if v is None:
            v = lambda_D_element(self.ctx, QuadInteger(self.ctx.field, n, abs(ell)))
            self.cache[key] = v
        return v

    def many(self, ns, ell: int) -> np.ndarray:
        return np.array([self(int(n), ell) for n in ns])


def _check_norms(ctx: BaseChangeContext, caps: PeriodCaps) -> None:
    D = ctx.field.D
    need = max((caps.Nmax**2) // 4, (D * caps.Lmax**2) // 4)
    ctx.table.require(need)


def _ells(Lmax: int) -> list[int]:
    return [s * l for l in range(1, Lmax + 1) for s in (1, -1)]


@dataclass(frozen=True)
class SumResult:
    value: float
    tail_bound: float
    terms: int
    caps: PeriodCaps
    per_ell: dict = field(default_factory=dict, compare=False)


def _strip_map(fn, ells, workers: int):
    if workers <= 1:
        return [fn(l) for l in ells]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, ells))


class _Profiles:
    """Shared h_ell data for ell <= 2 Lmax: a W_Psi jet table, the jet of h on a log grid, and h_ell tables."""

    Y_LO, Y_HI, GRID = 1e-3, 60.0, 1 << 12

    def __init__(self, data: MaassData, d_B: int, Lmax: int):
        self.data, self.d_B, self.Lmax = data, d_B, Lmax
        self.wtab = WhittakerJetTable(data, 2 * max(Lmax, 1) * self.Y_HI * 1.01, order=2, tmin=self.Y_LO)
        self.grid = np.exp(np.linspace(math.log(self.Y_LO), math.log(self.Y_HI), self.GRID))
        self.hjet = h_jet(self.grid, d_B, 2)
        self.tables = {l: HEllTable(l, data, d_B, self.Y_LO, self.Y_HI, wtab=self.wtab) for l in range(1, Lmax + 1)}

    def values(self, ell: int) -> np.ndarray:
        return h_ell_jet_from(ell, self.grid, self.hjet, self.wtab, 0)[0]

    def sup(self, ell: int) -> float:
        return float(np.max(np.abs(self.values(ell))))

    def sup_second(self, ell: int) -> float:
        """sup |h_ell''| on the grid, inflated by 5% for the grid spacing."""
        d2 = _jet_to_ordinary(h_ell_jet_from(ell, self.grid, self.hjet, self.wtab, 2), self.grid)[2]
        return 1.05 * float(np.max(np.abs(d2)))

    def c6(self, ell: int) -> float:
        """max |h_ell(y)| / y^6 over y <= Y_FLOOR."""
        m = self.grid <= Y_FLOOR
        return float(np.max(np.abs(self.values(ell)[m]) / self.grid[m] ** 6))


@lru_cache(maxsize=8)
def _profiles(data: MaassData, d_B: int, Lmax: int) -> _Profiles:
    return _Profiles(data, d_B, Lmax)


def _h_tables(data: MaassData, Lmax: int, d_B: int) -> dict:
    return _profiles(data, d_B, Lmax).tables


def _sign(data: MaassData, ell: int) -> int:
    return -1 if (ell < 0 and data.parity == "odd") else 1


def _vk_strip(ctx, data, caps, tables, lamD, k, ell):
    D = ctx.field.D
    ns = _index_rows(D, ell, caps.Nmax, strict=True)
    if ns.size == 0:
        return np.zeros(0), ns
    coef = data.coeff(ell) / math.sqrt(abs(ell)) * _sign(data, ell)
    lam = lamD.many(ns, ell)
    norm = (ns.astype(float) ** 2 - D * ell * ell) / 4
    vk = v_k_batch_table(k, D, abs(ell), ns, tables[abs(ell)])
    return coef * lam / np.sqrt(norm) * vk, ns


def _tail_vk(ctx, data, caps, k, d_B, strips) -> float:
    """Bound for terms outside the caps (n > Nmax, |ell| > Lmax) and the V_k window."""
    D = ctx.field.D
    prof = _profiles(data, d_B, caps.Lmax)
    a = math.sqrt(D) * _y_hi(k) / (2 * math.pi)
    total = 0.0
    gamma_tail = float(gammaincc(k, _y_hi(k)))
    for ell in range(1, caps.Lmax + 1):
        coef = abs(data.coeff(ell)) / math.sqrt(ell)
        # |lambda_D|/sqrt N <= tau(N)^2/sqrt N <= 4 sqrt N <= 2n; |V_k(n)| <= c6 (a/n)^6
        tail_n = 2 * prof.c6(ell) * a**6 * (caps.Nmax ** -4) / 4
        in_range = sum(float(np.sum(np.abs(t))) for t in strips.get(ell, ()))
        total += 2 * coef * tail_n + gamma_tail * (in_range + 2 * coef * prof.sup(ell))
    total += _ell_tail(ctx, data, caps, k, d_B)
    return float(total)


def _ell_tail(ctx, data, caps, k, d_B) -> float:
    """Terms with |ell| > Lmax: Kim-Sarnak bound for rho, sup |h_ell| and a divisor bound for lambda_D."""
    D = ctx.field.D
    prof = _profiles(data, d_B, caps.Lmax)
    ells = range(caps.Lmax + 1, 2 * caps.Lmax + 1)
    sups = [prof.sup(ell) for ell in ells]
    total = 0.0
    for ell, sup in zip(ells, sups):
        rho_bound = num_divisors(ell) * ell ** (7 / 64) / math.sqrt(ell)
        ns = np.arange(int(math.isqrt(D * ell * ell)) + 1, caps.Nmax + 1, dtype=float)
        weight = np.sum(2 * ns / np.sqrt(np.maximum(ns * ns - D * ell * ell, 1.0)))
        total += 2 * rho_bound * sup * weight
    # beyond 2 Lmax: geometric extrapolation of the last decay ratio (heuristic)
    if len(sups) >= 2 and sups[-2] > 0:
        q = min(sups[-1] / sups[-2], 0.999)
        total += 2 * sups[-1] * q / (1 - q) * caps.Nmax * (2 * caps.Lmax) ** 0.2
    return float(total)


def period_via_vk(ctx: BaseChangeContext, data: MaassData, d_B: int = 1, caps: PeriodCaps | None = None,
                  workers: int = 1, tables: dict | None = None, with_tail: bool = True) -> SumResult:
    """sum over ell != 0 and admissible n > |ell| sqrt D of
    (rho(|ell|)/|ell|^(1/2)) lambda_D(x) N(x)^(-1/2) V_k(ell, x)."""
    k = ctx.table.weight
    caps = caps or default_caps(k, ctx.field.D, data)
    if caps.Lmax == 0:
        return SumResult(0.0, 0.0, 0, caps)
    if caps.Lmax > data.nmax:
        raise RangeError(f"Lmax={caps.Lmax} exceeds the {data.nmax} stored Maass coefficients", required=caps.Lmax)
    _check_norms(ctx, caps)
    tables = tables or _h_tables(data, caps.Lmax, d_B)
    lamD = _LambdaD(ctx)
    # fill the lambda_D cache serially so threads only read it
    for ell in range(1, caps.Lmax + 1):
        lamD.many(_index_rows(ctx.field.D, ell, caps.Nmax, strict=True), ell)
    ells = _ells(caps.Lmax)
    res = _strip_map(lambda l: _vk_strip(ctx, data, caps, tables, lamD, k, l), ells, workers)
    terms = np.concatenate([r[0] for r in res])
    per_ell = {l: r for l, r in zip(ells, res)}
    value = math.fsum(terms)
    strips = {}
    for l, (t, _) in per_ell.items():
        strips.setdefault(abs(l), []).append(t)
    tail = _tail_vk(ctx, data, caps, k, d_B, strips) if with_tail else float("nan")
    return SumResult(value, tail, int(terms.size), caps, per_ell)


def ell_cap_from_eps(k: int, eps: float) -> int:
    """Largest L with L < k^eps."""
    t = k**eps
    L = int(math.floor(t))
    return L - 1 if L == t else L


def _asym_strip(ctx, data, caps, tables, lamD, k, ell):
    D = ctx.field.D
    ns = _index_rows(D, ell, caps.Nmax, strict=False)
    coef = data.coeff(ell) / math.sqrt(abs(ell)) * _sign(data, ell)
    u = ns / k
    hv = tables[abs(ell)](math.sqrt(D) / (2 * math.pi * u))
    f = coef * (2.0 / u) * hv
    lam = lamD.many(ns, ell)
    return lam * f / k, ns


def period_asymptotic(ctx: BaseChangeContext, data: MaassData, d_B: int = 1, eps: float | None = None,
                      caps: PeriodCaps | None = None, C: float = 1.0, workers: int = 1,
                      tables: dict | None = None) -> SumResult:
    """sum over 0 < |ell| < k^eps and admissible n >= 1 of lambda_D(x) f_ell(n/k)/k.

    ``tail_bound`` carries C k^(-1+eps) for the user constant C.
    """
    k = ctx.table.weight
    base = caps or default_caps(k, ctx.field.D, data)
    if eps is not None:
        base = PeriodCaps(min(ell_cap_from_eps(k, eps), data.nmax), base.Nmax)
    caps = base
    if caps.Lmax == 0:
        return SumResult(0.0, 0.0, 0, caps)
    _check_norms(ctx, caps)
    tables = tables or _h_tables(data, caps.Lmax, d_B)
    lamD = _LambdaD(ctx)
    for ell in range(1, caps.Lmax + 1):
        lamD.many(_index_rows(ctx.field.D, ell, caps.Nmax, strict=False), ell)
    ells = _ells(caps.Lmax)
    res = _strip_map(lambda l: _asym_strip(ctx, data, caps, tables, lamD, k, l), ells, workers)
    terms = np.concatenate([r[0] for r in res])
    e = eps if eps is not None else math.log(max(caps.Lmax, 1) + 1) / math.log(k)
    return SumResult(math.fsum(terms), C * k ** (-1 + e), int(terms.size), caps, dict(zip(ells, res)))


def cross_budget(ctx: BaseChangeContext, data: MaassData, vk: SumResult, asym: SumResult, d_B: int = 1) -> dict:
    """A priori bound for |vk - asym| on a shared index set.

    Per term: A (k/2)(sqrt D/(2 pi n))^2 ||h_ell''|| / sqrt N from the incomplete-Gamma
    lemma, plus |A/sqrt N - 2/n| |h_ell(k sqrt D/(2 pi n))|, with A = (1 - D ell^2/n^2)^(k/2);
    terms with n < |ell| sqrt D enter the asymptotic sum only and are added in absolute value.
    """
    if vk.caps != asym.caps:
        raise ValueError("routes must share caps")
    k, D = ctx.table.weight, ctx.field.D
    lamD = _LambdaD(ctx)
    prof = _profiles(data, d_B, vk.caps.Lmax)
    taylor, prefactor, only_asym = [], [], []
    for ell in range(1, vk.caps.Lmax + 1):
        h2 = prof.sup_second(ell)
        coef = abs(data.coeff(ell)) / math.sqrt(ell)
        ns = _index_rows(D, ell, vk.caps.Nmax, strict=True).astype(float)
        if ns.size:
            lam = np.abs(lamD.many(ns, ell))
            sqN = np.sqrt((ns * ns - D * ell * ell) / 4)
            A = np.exp(0.5 * k * np.log1p(-D * ell * ell / ns**2))
            hc = np.abs(prof.tables[ell](k * math.sqrt(D) / (2 * math.pi * ns)))
            taylor.append(2 * coef * lam * A * (k / 2) * (math.sqrt(D) / (2 * math.pi * ns)) ** 2 * h2 / sqN)
            prefactor.append(2 * coef * lam * np.abs(A / sqN - 2 / ns) * hc)
        for sgn in (1, -1):
            t, n_all = asym.per_ell[sgn * ell]
            mask = n_all.astype(float) ** 2 < D * ell * ell
            only_asym.append(np.abs(t[mask]))
    parts = {
        "taylor": math.fsum(np.concatenate(taylor)) if taylor else 0.0,
        "prefactor": math.fsum(np.concatenate(prefactor)) if prefactor else 0.0,
        "asymptotic_only": math.fsum(np.concatenate(only_asym)) if only_asym else 0.0,
    }
    scale = math.fsum(np.abs(np.concatenate([r[0] for r in vk.per_ell.values()]))) if vk.per_ell else 0.0
    parts["quadrature"] = 1e-12 * scale + 1e-14
    parts["total"] = math.fsum(parts.values())
    return parts


# ----------------------------------------------------------- direct route

def period_direct(ctx: BaseChangeContext, data: MaassData, resolution: int = 1, n_cap: int | None = None,
                  ell_cap: int | None = None) -> tuple[float, float, float]:
    """(value, refinement estimate, |Im|/|Re|) of int_F phi_D(z,z) Psi'(z) dx dy/y^2.

    F = {|x| <= 1/2, |z| >= 1}.  Both factors are summed as complex Fourier
    series over ell and -ell, with lambda_D evaluated separately on conjugate
    elements, so the size of the imaginary part tests the symmetry of the
    assembled series.  The refinement estimate compares against a grid
    with half the resolution.
    """
    k, D = ctx.table.weight, ctx.field.D
    if k > 30 or D > 13:
        raise CostGuardError(f"direct quadrature is limited to k <= 30, D <= 13 (got k={k}, D={D})")
    y_min = math.sqrt(3) / 2
    if n_cap is None:
        n_cap = int(math.ceil(math.sqrt(D) * (k + 40 * math.sqrt(k) + 40) / (2 * math.pi * y_min)))
    psi_cap = ell_cap or data.nmax
    ctx.table.require(max(n_cap * n_cap // 4, 1))
    sqD = math.sqrt(D)
    lg = math.lgamma(k)
    phi_rows = []
    L = int(n_cap / sqD)
    for ell in range(-L, L + 1):
        ns = np.array([n for n in range(1, n_cap + 1) if n * n > D * ell * ell and admissible(D, n, ell)], dtype=float)
        if ns.size == 0:
            continue
        lam = np.array([lambda_D_element(ctx, QuadInteger(ctx.field, int(n), ell)) for n in ns])
        m1 = (ell + ns / sqD) / 2
        m2 = (ns / sqD - ell) / 2  # = -m_2 > 0
        norm = (ns * ns - D * ell * ell) / 4
        phi_rows.append((ell, m1, m2, lam / np.sqrt(norm)))
    y_top = 2.5 * k / math.pi + 12
    w_tab = LogChebTable(lambda t: maass_whittaker(data, t), y_min * 0.99, psi_cap * y_top * 1.01)
    psi_coef = [(ell, data.coeff(ell) / math.sqrt(abs(ell)) * _sign(data, ell))
                for ell in range(-psi_cap, psi_cap + 1) if ell]

    def integrate(nx: int, ny_panels: int) -> complex:
        xs, wx = _gl_panels(-0.5, 0.5, nx // 20, 20)
        total = []
        for x, w_x in zip(xs, wx):
            ys, wy = _gl_panels(math.sqrt(1 - x * x), y_top, ny_panels, 20)
            phi = np.zeros(ys.shape, dtype=complex)
            for ell, m1, m2, c in phi_rows:
                logw = (0.5 * k * (np.log(4 * math.pi * np.outer(ys, m1)) + np.log(4 * math.pi * np.outer(ys, m2)))
                        - 2 * math.pi * np.outer(ys, m1 + m2) - lg)
                phi += np.exp(2j * math.pi * ell * x) * (np.exp(logw) @ c)
            psi = np.zeros(ys.shape, dtype=complex)
            for ell, c in psi_coef:
                psi += c * np.exp(2j * math.pi * ell * x) * w_tab(abs(ell) * ys)
            total.append(w_x * np.sum(wy * phi * psi / ys**2))
        return complex(math.fsum(t.real for t in total), math.fsum(t.imag for t in total))

    nx, ny = 40 * resolution, 12 * resolution
    coarse = integrate(nx, ny)
    fine = integrate(2 * nx, 2 * ny)
    return fine.real, abs(fine.real - coarse.real), abs(fine.imag) / max(abs(fine.real), 1e-300)


# ---------------------------------------------------- congruence classes

def congruence_decomposition(ctx: BaseChangeContext, data: MaassData, d_B: int = 1, eps: float | None = None,
                             caps: PeriodCaps | None = None, l_ad: float | None = None,
                             tables: dict | None = None) -> list[dict]:
    """Rows (ell, a mod 2|ell|, d1(a), d2(a), S(ell, a)) with
    S = (k L(ad,1))^-1 sum_{n = a (2|ell|)} lambda(|n^2 - D ell^2|/(4 d1 d2^2)) f_ell(n/k).

    d1, d2 are read off every representative; ``constant`` records whether
    they agree across the class.
    """
    k, D = ctx.table.weight, ctx.field.D
    caps = caps or default_caps(k, D, data)
    if eps is not None:
        caps = PeriodCaps(min(ell_cap_from_eps(k, eps), data.nmax), caps.Nmax)
    _check_norms(ctx, caps)
    tables = tables or _h_tables(data, caps.Lmax, d_B)
    if l_ad is None:
        l_ad = l_ad_value(ctx.table)[0]
    lam = ctx.table.lambdas
    rows = []
    for ell in _ells(caps.Lmax):
        mod = 2 * abs(ell)
        coef = data.coeff(ell) / math.sqrt(abs(ell)) * _sign(data, ell)
        for a in range(mod):
            if not admissible(D, a, ell):
                continue
            ns = np.arange(a if a else mod, caps.Nmax + 1, mod)
            parts, d_set = [], set()
            for n in ns:
                x = QuadInteger(ctx.field, int(n), ell)
                d1, d2, res = split_inert_parts(x)
                d_set.add((d1, d2))
                u = n / k
                f = coef * (2.0 / u) * float(tables[abs(ell)](np.array([math.sqrt(D) / (2 * math.pi * u)]))[0])
                parts.append(lam[res] * f)
            d1, d2 = min(d_set) if d_set else (1, 1)
            rows.append({
                "ell": ell, "a": a, "d1": d1, "d2": d2, "constant": len(d_set) <= 1,
                "S": math.fsum(parts) / (k * l_ad), "count": int(ns.size),
            })
    return rows


def regroup(ctx: BaseChangeContext, rows: list[dict], l_ad: float) -> float:
    """sum over rows of lambda(d1) lambda_D(d2) S(ell, a) k L(ad,1) / k."""
    from .basechange import _lambda_D_inert_natural

    t = ctx.table
    k = t.weight
    return math.fsum(t.lam(r["d1"]) * _lambda_D_inert_natural(ctx, r["d2"]) * r["S"] * (k * l_ad) / k for r in rows)


# ------------------------------------------------ normalised statistic

@dataclass(frozen=True)
class PeriodReport:
    k: int
    D: int
    d_B: int
    value_vk: float
    value_asymptotic: float
    value_direct: float | None
    error_budget: float
    tail_vk: float
    normalized_thB: float
    l_ad: float
    l_ad_twist: float
    majorants: dict
    log_k_power: float
    terms_used: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = PERIOD_SCHEMA
        return d


def report_to_json(report: PeriodReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n"


def theoremB_statistic(ctx: BaseChangeContext, data: MaassData, d_B: int = 1, caps: PeriodCaps | None = None,
                       workers: int = 1, direct: bool = False) -> PeriodReport:
    """Period by both sum routes, normalised by sqrt(L(ad,1) L(ad x chi_D,1)); constants are not tracked."""
    k, D = ctx.table.weight, ctx.field.D
    caps = caps or default_caps(k, D, data)
    tables = _h_tables(data, caps.Lmax, d_B)
    vk = period_via_vk(ctx, data, d_B, caps, workers, tables)
    asym = period_asymptotic(ctx, data, d_B, caps=caps, workers=workers, tables=tables)
    budget = cross_budget(ctx, data, vk, asym, d_B)
    lad = l_ad_value(ctx.table)[0]
    lad_t = l_ad_value(ctx.table, D)[0]
    X = min(max(k, 2), ctx.table.nmax)
    maj = holowinsky_majorants(prime_stats(ctx.table, X, D))
    value_direct = period_direct(ctx, data)[0] if direct else None
    norm = math.sqrt(lad * lad_t) if lad * lad_t > 0 else float("nan")
    return PeriodReport(
        k, D, d_B, vk.value, asym.value, value_direct, budget["total"], vk.tail_bound,
        asym.value / norm, lad, lad_t, maj, math.log(k) ** (-1 / 8),
        {"vk": vk.terms, "asymptotic": asym.terms, "Lmax": caps.Lmax, "Nmax": caps.Nmax},
    )
