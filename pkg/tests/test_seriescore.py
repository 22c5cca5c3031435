from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hquesums import seriescore as sc
from hquesums.seriescore import (
    IntegerSeries,
    InternalError,
    cusp_dim,
    delta_qexp,
    eisenstein_qexp,
    miller_basis,
    series_mul,
)


def sigma(k, n):
    return sum(d**k for d in range(1, n + 1) if n % d == 0)


def naive_product(a, b, nmax):
    return [sum(a[i] * b[n - i] for i in range(n + 1)) for n in range(nmax + 1)]


def eta_oracle(nmax):
    """q prod (1 - q^n)^24 by repeated multiplication with plain lists."""
    poly = [1] + [0] * nmax
    for n in range(1, nmax + 1):
        for _ in range(24):
            for i in range(nmax, n - 1, -1):
                poly[i] -= poly[i - n]
    return [0] + poly[:nmax]


# ---------------------------------------------------------------- Eisenstein

def test_e4_first_terms():
    assert eisenstein_qexp(4, 3).coeffs == (1, 240, 2160, 6720)
    assert [240 * sigma(3, n) for n in (1, 2, 3)] == [240, 2160, 6720]


def test_e6_and_constant_term():
    s, c = eisenstein_qexp(6, 1, with_scale=True)
    assert s.coeffs == (1, -504) and c == 1
    assert eisenstein_qexp(4, 0).coeffs == (1,)


def test_e12_scale_clears_691():
    s, c = eisenstein_qexp(12, 4, with_scale=True)
    assert c == 691
    expected = Fraction(65520, 691)
    for n in range(1, 5):
        assert Fraction(s[n], c) == expected * sigma(11, n)


@pytest.mark.parametrize("weight", [3, 2, 0, -4])
def test_eisenstein_rejects_bad_weight(weight):
    with pytest.raises(ValueError):
        eisenstein_qexp(weight, 5)


# ------------------------------------------------------------ multiplication

def test_mul_examples():
    a = IntegerSeries((1, 1, 0))
    b = IntegerSeries((1, -1, 0))
    assert series_mul(a, b).coeffs == (1, 0, -1)
    s = IntegerSeries((3, -7, 11, 0, 5))
    one = IntegerSeries((1, 0, 0, 0, 0))
    assert series_mul(one, s) == s
    e4 = eisenstein_qexp(4, 2)
    assert series_mul(e4, e4).coeffs == (1, 480, 61920)


def test_mul_nmax_mismatch():
    with pytest.raises(ValueError):
        series_mul(IntegerSeries((1, 2)), IntegerSeries((1, 2, 3)))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=256).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(st.integers(-(2**200), 2**200), min_size=n + 1, max_size=n + 1),
            st.lists(st.integers(-(2**70), 2**70), min_size=n + 1, max_size=n + 1),
        )
    )
)
def test_ntt_matches_schoolbook(args):
    n, a, b = args
    got = series_mul(IntegerSeries(tuple(a)), IntegerSeries(tuple(b))).coeffs
    assert list(got) == naive_product(a, b, n)


def test_ntt_path_large_coefficients():
    n = 300
    a = [(-1) ** i * (7**i) for i in range(n + 1)]
    b = [3**i - 2**i for i in range(n + 1)]
    assert list(series_mul(IntegerSeries(tuple(a)), IntegerSeries(tuple(b))).coeffs) == naive_product(a, b, n)


def test_insufficient_modulus_raises(monkeypatch):
    real = sc._ntt_prime

    def only_one(log_len, i):
        return real(log_len, i) if i == 0 else None

    monkeypatch.setattr(sc, "_ntt_prime", only_one)
    a = IntegerSeries(tuple(2**100 + i for i in range(101)))
    with pytest.raises(InternalError):
        series_mul(a, a)


# --------------------------------------------------------------------- Delta

def test_tau_values():
    d = delta_qexp(6)
    assert d.coeffs[1:6] == (1, -24, 252, -1472, 4830)
    assert d[1] == 1
    assert d[6] == d[2] * d[3] == -6048


def test_delta_matches_eta_oracle():
    n = 400
    assert list(delta_qexp(n).coeffs) == eta_oracle(n)


def test_delta_eta_route_matches_eisenstein_route():
    n = 3000
    e4, e6 = eisenstein_qexp(4, n), eisenstein_qexp(6, n)
    num = series_mul(series_mul(e4, e4), e4) - series_mul(e6, e6)
    assert all(c % 1728 == 0 for c in num.coeffs)
    assert [c // 1728 for c in num.coeffs] == list(sc._delta_eta(n).coeffs)


# -------------------------------------------------------------- Miller basis

def test_miller_weight_12_is_delta():
    (b,) = miller_basis(12, 20)
    assert b == delta_qexp(20)


def test_miller_weight_24_echelon():
    basis = miller_basis(24, 6)
    assert len(basis) == 2
    assert [[b[j] for j in (1, 2)] for b in basis] == [[1, 0], [0, 1]]


def test_miller_weight_16_is_delta_e4():
    (b,) = miller_basis(16, 5)
    assert b[2] == 216
    assert b == series_mul(delta_qexp(5), eisenstein_qexp(4, 5))


@pytest.mark.parametrize("weight", range(12, 62, 2))
def test_miller_echelon_identity(weight):
    d = cusp_dim(weight)
    basis = miller_basis(weight, d + 5)
    assert len(basis) == d
    for i, b in enumerate(basis):
        assert b[0] == 0
        assert [b[j] for j in range(1, d + 1)] == [int(i + 1 == j) for j in range(1, d + 1)]


def test_cusp_dimensions():
    assert [cusp_dim(k) for k in (12, 14, 16, 22, 24, 26, 36)] == [1, 0, 1, 1, 2, 1, 3]


def test_miller_needs_nmax_at_least_dim():
    with pytest.raises(ValueError):
        miller_basis(48, 2)
