import json
import math
import random

import mpmath
import numpy as np
import pytest
from scipy import integrate

from hquesums.analysis import (
    Bump,
    HEllTable,
    IngestionError,
    JetFunction,
    LinearCombination,
    LogChebTable,
    PoleError,
    Scaled,
    Shifted,
    WhittakerJetTable,
    ZeroFunction,
    afe_kernel,
    bundled_maass,
    f_ell,
    f_ell_function,
    h_ell,
    h_ell_jet,
    h_ell_jet_from,
    h_eval,
    h_jet,
    iwaniec_j,
    kbessel_ir,
    kbessel_ir_real_line,
    load_maass,
    maass_from_dict,
    maass_whittaker,
    maass_whittaker_jet,
    num_divisors,
    sobolev_norm,
    sup_second_derivative,
    v_k,
    v_k_batch,
    v_k_batch_table,
    whittaker_wk,
    xi_c,
    xi_direct,
    zeta_line,
)
from hquesums.analysis import gamma_c

R_ODD = 9.533695261353557


def _central(fn, y, h):
    fp, f0, fm = fn(y * math.exp(h)), fn(y), fn(y * math.exp(-h))
    return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def log_fd(fn, y, h=1e-3):
    """First and second invariant derivatives: central differences in u = log y, one Richardson step."""
    a1, a2 = _central(fn, y, h)
    b1, b2 = _central(fn, y, h / 2)
    return (4 * b1 - a1) / 3, (4 * b2 - a2) / 3


def mp_h(y, d_B=1, sigma=3):
    """Mellin integral for h on a contour the library never uses."""
    mpmath.mp.dps = 20

    def R(s):
        w = 2 * s
        xi = mpmath.pi ** (-w / 2) * mpmath.gamma(w / 2) * mpmath.zeta(w)
        return (w - 1) * 2 * xi * sum(mpmath.mpf(d) ** s for d in range(1, d_B + 1) if d_B % d == 0)

    val = mpmath.quad(lambda t: (R(sigma + 1j * t) * mpmath.mpf(y) ** (sigma + 1j * t)).real, [-60, -20, 0, 20, 60])
    return float(val / (2 * mpmath.pi))


# ------------------------------------------------------------ test functions

def test_bump_shape():
    b = Bump(1.0, 2.0)
    assert b(1.5) == pytest.approx(1.0, abs=1e-15)
    assert b(0.9) == 0.0 and b(2.0) == 0.0 and b(3.0) == 0.0
    assert b(1.2) == pytest.approx(math.exp(1 - 1 / (1 - 0.6**2)), rel=1e-13)
    with pytest.raises(ValueError):
        Bump(2.0, 1.0)
    with pytest.raises(ValueError):
        Bump(0.0, 1.0)


@pytest.mark.parametrize("f", [
    Bump(1.0, 2.0),
    Bump(0.3, 7.0),
    Scaled(Bump(1.0, 2.0), 3.0),
    Shifted(Bump(1.0, 2.0), 0.5),
    LinearCombination([(2.0, Bump(1.0, 3.0)), (-0.5, Bump(1.5, 2.5))]),
])
def test_jets_match_finite_differences(f):
    lo, hi = f.support
    for y in np.linspace(lo, hi, 23)[1:-1]:
        jet = f.jet(np.array([y]), 2)[:, 0]
        d1, d2 = log_fd(f, y)
        assert jet[0] == pytest.approx(f(y), abs=1e-15)
        assert jet[1] == pytest.approx(d1, abs=1e-6 * max(1, abs(d1)))
        assert jet[2] == pytest.approx(d2, abs=2e-4 * max(1, abs(d2)))


def test_ordinary_derivatives():
    f = Bump(1.0, 2.0)
    y = 1.37
    der = f.derivatives(y, 2)[:, 0]
    h = 1e-5
    assert der[1] == pytest.approx((f(y + h) - f(y - h)) / (2 * h), rel=1e-7)
    assert der[2] == pytest.approx((f(y + h) - 2 * f(y) + f(y - h)) / h**2, rel=1e-3)


def test_composites():
    b = Bump(1.0, 2.0)
    assert Scaled(b, 2.0)(0.75) == pytest.approx(b(1.5))
    assert Shifted(b, 1.0)(2.5) == pytest.approx(b(1.5))
    assert (b + b)(1.3) == pytest.approx(2 * b(1.3))
    assert (3 * b)(1.3) == pytest.approx(3 * b(1.3))
    assert Scaled(b, 2.0).support == (0.5, 1.0)
    with pytest.raises(ValueError):
        Shifted(b, -1.5)
    with pytest.raises(ValueError):
        Scaled(b, 0)
    with pytest.raises(ValueError):
        LinearCombination([])


def test_jet_function_order_limit():
    f = JetFunction(lambda y, order: np.ones((order + 1, y.size)), (1, 2), max_order=1)
    f.jet(np.array([1.5]), 1)
    with pytest.raises(ValueError):
        f.jet(np.array([1.5]), 2)
    with pytest.raises(ValueError):
        sobolev_norm(f, 2)


# ------------------------------------------------------------------ Sobolev

def test_sobolev_zero_and_sup():
    assert sobolev_norm(ZeroFunction(), 3) == 0.0
    s0 = sobolev_norm(Bump(1.0, 2.0), 0)
    assert 1.0 - 1e-9 <= s0 <= 1.05  # grid sup of a function whose sup is 1
    with pytest.raises(ValueError):
        sobolev_norm(Bump(1.0, 2.0), -1)


def test_sobolev_n0_dilation_invariant():
    b = Bump(1.0, 2.0)
    for a in (0.1, 3.0, 17.0):
        assert sobolev_norm(Scaled(b, a), 0) == pytest.approx(sobolev_norm(b, 0), rel=1e-9)


def test_sobolev_not_dilation_invariant_for_n_positive():
    b = Bump(1.0, 2.0)
    assert sobolev_norm(Scaled(b, 10.0), 2) > 3 * sobolev_norm(b, 2)


@pytest.mark.parametrize("f, N", [(Bump(1.0, 2.0), 2), (Bump(0.5, 4.0), 3), (Scaled(Bump(1.0, 2.0), 0.2), 1)])
def test_sobolev_against_finite_difference_grid(f, N):
    u = np.linspace(math.log(f.support[0]), math.log(f.support[1]), 200_001)
    rows = [f(np.exp(u))]
    for _ in range(N):
        rows.append(np.gradient(rows[-1], u))
    w = (np.exp(u) + np.exp(-u)) ** N
    oracle = max(float(np.max(np.abs(w * r))) for r in rows)
    assert sobolev_norm(f, N) == pytest.approx(oracle, rel=0.05)


def test_sup_second_derivative():
    b = Bump(1.0, 2.0)
    y = np.linspace(1.0, 2.0, 100_001)
    h = y[1] - y[0]
    v = b(y)
    fd = np.max(np.abs(np.diff(v, 2))) / h**2
    assert sup_second_derivative(b) == pytest.approx(fd, rel=1e-3)


# -------------------------------------------------------- zeta, Gamma, xi

def test_classical_values():
    assert zeta_line(2) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert gamma_c(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    with pytest.raises(PoleError):
        zeta_line(1)
    for s in (0, -1, -7):
        with pytest.raises(PoleError):
            gamma_c(s)
    with pytest.raises(PoleError):
        xi_c(1)
    with pytest.raises(PoleError):
        xi_direct(0)
    with pytest.raises(ValueError):
        xi_direct(-1.5)


def grid(re_lo, re_hi, im_hi, n=10):
    return [complex(a, b) for a in np.linspace(re_lo, re_hi, n) for b in np.linspace(0.3, im_hi, n)]


def test_zeta_against_mpmath():
    mpmath.mp.dps = 30
    pts = grid(-0.9, 4.0, 200.0) + [complex(0.5, 14.134725), complex(-0.5, 0), complex(3, 0)]
    for s in pts:
        ref = complex(mpmath.zeta(mpmath.mpc(s.real, s.imag)))
        assert abs(zeta_line(s) - ref) <= 1e-10 * abs(ref) + 1e-14, s


def test_gamma_against_mpmath():
    for s in grid(-4.7, 6.0, 30.0):
        ref = complex(mpmath.gamma(mpmath.mpc(s.real, s.imag)))
        assert abs(gamma_c(s) - ref) <= 1e-10 * abs(ref), s


def test_xi_against_mpmath():
    for s in grid(-3.0, 4.0, 40.0):
        ref = complex(mpmath.pi ** (-s / 2) * mpmath.gamma(s / 2) * mpmath.zeta(s))
        assert abs(xi_c(s) - ref) <= 1e-9 * abs(ref), s


def test_xi_functional_equation_unreflected():
    for s in grid(-0.6, 1.6, 40.0) + [complex(0.3, 5.0)]:
        a, b = xi_direct(s), xi_direct(1 - s)
        assert abs(a - b) <= 1e-9 * abs(a), s


def test_afe_kernel_regular_at_half():
    assert afe_kernel(0.5) == pytest.approx(2.0)
    for d in (1e-3, 1e-6, 1e-7):
        assert afe_kernel(0.5 + d) == pytest.approx(2.0, abs=10 * d)
    # both sides of the switch at |2s-1| = 1e-5 against high precision
    mpmath.mp.dps = 40
    for d in (0.49e-5, 0.51e-5, 1e-3, -2e-6):
        w = 1 + 2 * mpmath.mpf(d)
        ref = float((w - 1) * 2 * mpmath.pi ** (-w / 2) * mpmath.gamma(w / 2) * mpmath.zeta(w))
        assert afe_kernel(0.5 + d).real == pytest.approx(ref, abs=1e-9)


# ------------------------------------------------------------------- W_k

def test_wk_support_and_argmax():
    assert whittaker_wk(12, 0.0) == 0.0 and whittaker_wk(12, -3.0) == 0.0
    y = np.linspace(0.01, 5, 500_001)
    assert y[np.argmax(whittaker_wk(12, y))] == pytest.approx(12 / (4 * math.pi), abs=2e-5)
    assert whittaker_wk(10_000, 10_000 / (4 * math.pi)) > 0  # no overflow


@pytest.mark.parametrize("k", range(12, 202, 2))
def test_wk_l2_normalization(k):
    peak, width = k / (4 * math.pi), math.sqrt(k) / (4 * math.pi)
    pts = [max(peak - 10 * width, 1e-9), peak, peak + 10 * width]
    val, err = integrate.quad(lambda y: whittaker_wk(k, y) ** 2 / y, 0, peak + 40 * width, points=pts, limit=400,
                              epsabs=1e-13, epsrel=1e-12)
    assert val == pytest.approx(1.0, abs=1e-8)


# ------------------------------------------------------------------- K_ir

def test_kbessel_dual_routes_at_reference_point():
    a, b = kbessel_ir(R_ODD, 1.0), kbessel_ir_real_line(R_ODD, 1.0)
    assert abs(a - b) <= 1e-7 * abs(a)


@pytest.mark.parametrize("r", [0.7, R_ODD, 13.77975135189074, 25.0])
def test_kbessel_against_mpmath(r):
    mpmath.mp.dps = 30
    for x in (1e-3, 0.05, 0.5, 1.0, 3.0, r * 0.9, r, r * 1.1, 20.0, 60.0):
        ref = float(mpmath.besselk(1j * r, x).real)
        scale = math.exp(-math.pi * r / 2) / math.sqrt(max(x, r))  # size of K_ir in the oscillatory zone
        assert abs(kbessel_ir(r, x) - ref) <= 1e-8 * max(abs(ref), scale * min(1.0, math.exp(r - x))), (r, x)
        d1 = float(mpmath.diff(lambda t: mpmath.besselk(1j * r, t).real, x))
        assert abs(kbessel_ir(r, x, deriv=1) - d1) <= 1e-7 * max(abs(d1), scale * min(1.0, math.exp(r - x)) / max(x, 1e-3))


def test_kbessel_rejects_nonpositive():
    with pytest.raises(ValueError):
        kbessel_ir(1.0, 0.0)
    with pytest.raises(ValueError):
        kbessel_ir_real_line(1.0, -1.0)


# --------------------------------------------------------------- Maass data

def test_bundled_fixtures(maass_even, maass_odd):
    assert maass_even.parity == "even" and maass_even.rho[0] == 1.0
    assert maass_odd.parity == "odd" and maass_odd.r == pytest.approx(R_ODD)
    assert maass_even.sign == 1 and maass_odd.sign == -1
    rho = maass_even.rho
    assert rho[1] * rho[2] == pytest.approx(rho[5], abs=1e-6)
    assert rho[1] ** 2 == pytest.approx(rho[3] + 1, abs=1e-6)


def test_maass_parity_and_decay(maass_even, maass_odd):
    for y in (0.1, 0.7, 2.0):
        assert maass_whittaker(maass_even, -y) == maass_whittaker(maass_even, y)
        assert maass_whittaker(maass_odd, -y) == -maass_whittaker(maass_odd, y)
    assert abs(maass_whittaker(maass_odd, 10.0) / maass_whittaker(maass_odd, 1.0)) < 1e-20
    # larger r pushes the turning point out; still e^(-2 pi y) decay past it
    assert abs(maass_whittaker(maass_even, 10.0) / maass_whittaker(maass_even, 1.0)) < 1e-18
    assert abs(maass_whittaker(maass_even, 11.0) / maass_whittaker(maass_even, 10.0)) < 2 * math.exp(-2 * math.pi)
    with pytest.raises(ValueError):
        maass_whittaker(maass_even, 0.0)


def test_maass_whittaker_jet_finite_differences(maass_even):
    fn = lambda y: maass_whittaker(maass_even, y)  # noqa: E731
    for y in (0.05, 0.4, 1.3, 3.0):
        jet = maass_whittaker_jet(maass_even, y, 2)[:, 0]
        d1, d2 = log_fd(fn, y)
        assert jet[0] == pytest.approx(fn(y), rel=1e-12)
        assert jet[1] == pytest.approx(d1, rel=1e-6, abs=1e-8)
        assert jet[2] == pytest.approx(d2, rel=1e-4, abs=1e-6)
    with pytest.raises(ValueError):
        maass_whittaker_jet(maass_even, -1.0, 1)


def _doc(**over):
    src = bundled_maass("even")
    doc = {"version": 1, "r": repr(src.r), "parity": "even", "rho": [repr(v) for v in src.rho], "source": "t"}
    doc.update(over)
    return doc


@pytest.mark.parametrize("over, invariant", [
    ({"version": 2}, "schema"),
    ({"r": "-1"}, "spectral-parameter"),
    ({"parity": "both"}, "parity"),
    ({"rho": ["2.0", "0", "0", "0", "0", "0"]}, "rho(1)=1"),
    ({"rho": ["1", "0.1", "0.2", "0.3", "0.4"]}, "coefficient count"),
    ({"rho": ["1", "5.0", "0", "0", "0", "0"]}, "Kim-Sarnak bound"),
    ({"rho": ["1", "1.0", "0.5", "0.3", "0", "0.5"]}, "Hecke relation"),
    ({"rho": ["1", "abc"]}, "schema"),
])
def test_ingestion_errors(over, invariant):
    with pytest.raises(IngestionError) as info:
        maass_from_dict(_doc(**over))
    assert info.value.invariant == invariant


def test_ingestion_missing_field_and_file(tmp_path):
    doc = _doc()
    del doc["rho"]
    with pytest.raises(IngestionError):
        maass_from_dict(doc)
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    with pytest.raises(IngestionError):
        load_maass(bad)
    with pytest.raises(IngestionError):
        load_maass(tmp_path / "missing.json")
    good = tmp_path / "ok.json"
    good.write_text(json.dumps(_doc()))
    assert load_maass(good).rho == bundled_maass("even").rho


def test_coeff_range(maass_even):
    assert maass_even.coeff(-2) == maass_even.coeff(2)
    with pytest.raises(IngestionError):
        maass_even.coeff(maass_even.nmax + 1)


def test_num_divisors():
    assert [num_divisors(n) for n in (1, 2, 12, 36, 97)] == [1, 2, 6, 9, 2]


# ----------------------------------------------------------------------- h

@pytest.mark.parametrize("y, d_B", [(0.5, 1), (2.0, 1), (40.0, 1), (3.0, 6), (0.8, 6)])
def test_h_matches_independent_contour(y, d_B):
    assert h_eval(y, d_B) == pytest.approx(mp_h(y, d_B), rel=1e-10, abs=1e-12)


def test_h_limits():
    assert h_eval(1e3) == pytest.approx(1.0, abs=1e-6)
    assert h_eval(1e-2) <= 1e-10
    assert h_eval(1e3, 6) == pytest.approx(4.0, abs=1e-6)
    assert h_eval(1e6, 6) == pytest.approx(4.0, abs=1e-6)
    for d_B in (1, 6):
        y = np.geomspace(1e-3, 0.02, 40)
        assert np.all(np.abs(h_eval(y, d_B)) <= y**5)


@pytest.mark.parametrize("y", [0.999, 1.001, 9.99, 10.01, 300.0, 999.0])
def test_h_accurate_across_contour_switches(y):
    assert abs(h_eval(y) - mp_h(y)) < 1e-10


def test_h_jet_finite_differences():
    for y in (0.3, 1.7, 25.0):
        jet = h_jet(np.array([y]), 1, 2)[:, 0]
        d1, d2 = log_fd(h_eval, y)
        assert jet[1] == pytest.approx(d1, abs=1e-7)
        assert jet[2] == pytest.approx(d2, abs=1e-4)
    with pytest.raises(ValueError):
        h_jet(0.0)
    with pytest.raises(ValueError):
        h_jet(1.0, d_B=0)


def test_h_ell_definition_and_symmetry(maass_even, maass_odd):
    for y in (0.2, 1.0, 4.0):
        for ell in (1, 3):
            assert h_ell(ell, y, maass_even) * y == pytest.approx(h_eval(y) * maass_whittaker(maass_even, ell * y), rel=1e-14)
            assert h_ell(-ell, y, maass_even) == h_ell(ell, y, maass_even)
            assert h_ell(-ell, y, maass_odd) == -h_ell(ell, y, maass_odd)
    with pytest.raises(ValueError):
        h_ell(0, 1.0, maass_even)


def test_h_ell_decays_past_turning_point(maass_even, maass_odd):
    # K_ir(2 pi ell y) oscillates while 2 pi ell y < r, so decay starts once ell > r / (2 pi)
    for data in (maass_even, maass_odd):
        start = math.ceil(data.r / (2 * math.pi))
        vals = [abs(h_ell(ell, 1.0, data)) for ell in range(start, start + 5)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        for a, b in zip(vals[1:], vals[2:]):
            assert b / a < math.exp(-2 * math.pi) * 10


def test_h_ell_jet_matches_finite_differences(maass_even):
    for ell in (1, -2):
        fn = lambda y: h_ell(ell, y, maass_even)  # noqa: E731
        for y in (0.4, 1.1):
            jet = h_ell_jet(ell, y, maass_even, 2)[:, 0]
            d1, d2 = log_fd(fn, y)
            assert jet[0] == pytest.approx(fn(y), rel=1e-12)
            assert jet[1] == pytest.approx(d1, rel=1e-6, abs=1e-9)
            assert jet[2] == pytest.approx(d2, rel=1e-4, abs=1e-7)


# ------------------------------------------------------------------ tables

def test_logcheb_table():
    t = LogChebTable(lambda y: np.sin(np.log(y)) * y, 0.01, 50.0)
    y = np.geomspace(0.01, 50.0, 2001)
    assert np.max(np.abs(t(y) - np.sin(np.log(y)) * y)) < 1e-12
    assert t(np.array([0.005, 51.0])).tolist() == [0.0, 0.0]


def test_whittaker_table_matches_direct(maass_odd):
    tab = WhittakerJetTable(maass_odd, 30.0, order=2)
    t = np.geomspace(1e-3, 30.0, 997)
    direct = maass_whittaker_jet(maass_odd, t, 2)
    got = tab.jet(t)
    scale = np.max(np.abs(direct), axis=1, keepdims=True)
    assert np.max(np.abs(got - direct) / scale) < 1e-10
    with pytest.raises(ValueError):
        tab.jet(np.array([31.0]))


def test_h_ell_tables_match_direct(maass_even):
    wtab = WhittakerJetTable(maass_even, 3 * 60.0 * 1.01, order=2)
    y = np.geomspace(1e-3, 60.0, 501)
    for ell in (1, -3):
        direct = h_ell(ell, y, maass_even)
        scale = np.max(np.abs(direct))
        for tab in (HEllTable(ell, maass_even), HEllTable(ell, maass_even, wtab=wtab)):
            assert np.max(np.abs(tab(y) - direct)) < 1e-10 * scale
        jet = h_ell_jet_from(ell, y, h_jet(y, 1, 2), wtab, 2)
        ref = h_ell_jet(ell, y, maass_even, 2)
        assert np.max(np.abs(jet - ref)) < 1e-9 * np.max(np.abs(ref))


# -------------------------------------------------------------------- V_k

def vk_oracle(k, D, ell, n, data):
    c = math.sqrt(D) / (2 * math.pi * n)
    lg = math.lgamma(k)

    def integrand(y):
        return h_ell(ell, c * y, data) * math.exp((k - 1) * math.log(y) - y - lg)

    val, _ = integrate.quad(integrand, 0, k + 60 * math.sqrt(k), points=[k], limit=500, epsabs=1e-15, epsrel=1e-11)
    return (1 - D * ell * ell / n**2) ** (k / 2) * val


@pytest.mark.parametrize("k, D, ell, n", [(12, 5, 1, 30), (12, 5, 2, 9), (24, 8, 1, 40), (16, 13, -1, 12)])
def test_vk_against_quad(k, D, ell, n, maass_even):
    ref = vk_oracle(k, D, ell, n, maass_even)
    assert v_k(k, D, ell, n, maass_even) == pytest.approx(ref, rel=1e-8, abs=1e-15)


def test_vk_zero_region(maass_even):
    assert v_k(12, 5, 1, 2, maass_even) == 0.0
    assert v_k(12, 5, 2, 4, maass_even) == 0.0
    assert v_k(12, 5, 1, 3, maass_even) != 0.0
    out = v_k_batch(12, 5, 1, [1, 2, 3, 10], maass_even)
    assert out[0] == out[1] == 0.0 and out[2] != 0.0


def test_vk_truncation_large_n(maass_even):
    k = 200
    ref = max(abs(v_k(k, 5, 1, n, maass_even)) for n in (100, 150, 200, 300))
    for n in range(math.ceil(k**1.5), math.ceil(k**1.5) + 400, 37):
        assert abs(v_k(k, 5, 1, n, maass_even)) < 1e-12 * ref


def test_vk_laplace_point_budget(maass_even):
    k, D, ell = 200, 5, 1
    for n in (150, 200, 260):
        c = math.sqrt(D) / (2 * math.pi * n)
        base = (1 - D * ell * ell / n**2) ** (k / 2)
        ys = np.linspace(c * max(k - 30 * math.sqrt(k), 1.0), c * (k + 30 * math.sqrt(k)), 4001)
        jet = h_ell_jet(ell, ys, maass_even, 2)
        second = np.max(np.abs(jet[2] - jet[1]) / ys**2)  # f'' = (D^2 f - D f) / y^2
        budget = 0.5 * k * c * c * second * 1.05
        diff = abs(v_k(k, D, ell, n, maass_even) / base - h_ell(ell, c * k, maass_even))
        assert diff <= budget
        assert budget < 0.2 * np.max(np.abs(jet[0]))  # the budget is informative at this scale


def test_vk_table_route(maass_even):
    tab = HEllTable(2, maass_even)
    ns = np.arange(5, 400, 9)
    a, b = v_k_batch(24, 5, 2, ns, maass_even), v_k_batch_table(24, 5, 2, ns, tab)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


# ---------------------------------------------------------------- Iwaniec

def test_iwaniec_examples():
    J, bound = iwaniec_j(Bump(1.0, 2.0), 1.5)
    assert abs(J - Bump(1.0, 2.0)(1.5)) <= bound
    assert bound == pytest.approx(0.75 * sup_second_derivative(Bump(1.0, 2.0)))
    J, bound = iwaniec_j(Bump(1.0, 2.0), 60.0)
    assert abs(J) < 1e-15 and abs(J) <= bound
    with pytest.raises(ValueError):
        iwaniec_j(Bump(1.0, 2.0), 0.0)


def test_iwaniec_moments():
    s = 3.0
    m1, _ = integrate.quad(lambda y: (y - s) * y ** (s - 1) * math.exp(-y), 0, np.inf)
    m2, _ = integrate.quad(lambda y: (y - s) ** 2 * y ** (s - 1) * math.exp(-y), 0, np.inf)
    assert abs(m1) < 1e-9
    assert m2 == pytest.approx(s * math.gamma(s), abs=1e-9)


def test_iwaniec_inequality_random_pairs():
    rng = random.Random(20)
    for _ in range(100):
        s = rng.uniform(0.5, 150.0)
        lo = rng.uniform(max(0.05, s - 3 * math.sqrt(s) - 2), s - 0.05) if s > 0.2 else 0.05
        hi = rng.uniform(s + 0.05, s + 3 * math.sqrt(s) + 2)
        f = Bump(lo, hi) if rng.random() < 0.7 else Scaled(Bump(1.0, 2.0), rng.uniform(0.1, 3.0))
        J, bound = iwaniec_j(f, s)
        assert abs(J - f(s)) <= bound + 1e-14, (s, f.describe())


# ------------------------------------------------------------------- f_ell

def test_f_ell_linearity_and_decay(maass_even):
    D = 5
    doubled = maass_even.with_rho([2 * v for v in maass_even.rho])
    for u in (0.3, 1.0, 4.0):
        assert f_ell(2, u, doubled, D) == pytest.approx(2 * f_ell(2, u, maass_even, D), rel=1e-14)
    big = [abs(f_ell(1, u, maass_even, D)) * u**3 for u in (50.0, 100.0, 200.0)]
    assert big[2] < big[1] < big[0] < 1e-10
    with pytest.raises(ValueError):
        f_ell(0, 1.0, maass_even, D)
    with pytest.raises(IngestionError):
        f_ell(maass_even.nmax + 1, 1.0, maass_even, D)


def test_f_ell_function_matches_values(maass_even):
    fn = f_ell_function(2, maass_even, 5)
    u = np.array([0.2, 0.9, 3.0])
    assert np.allclose(fn(u), f_ell(2, u, maass_even, 5), rtol=1e-13, atol=0)
    d1, d2 = log_fd(lambda v: f_ell(2, v, maass_even, 5), 0.9)
    jet = fn.jet(np.array([0.9]), 2)[:, 0]
    assert jet[1] == pytest.approx(d1, rel=1e-6) and jet[2] == pytest.approx(d2, rel=1e-4)


def test_f_ell_sobolev_decay(maass_even):
    vals = [sobolev_norm(f_ell_function(ell, maass_even, 5, window=(0.05, 5.0)), 2) * ell**2 for ell in range(1, 6)]
    assert max(vals) <= 20 * vals[0]
    assert vals[-1] < vals[0]
