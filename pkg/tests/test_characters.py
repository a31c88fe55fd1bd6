import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phvfe.characters import (
    AddChar,
    MultChar,
    all_characters,
    check_eqsim,
    gauss,
    gauss_product,
    gauss_sum,
    gauss_table,
    hasse_davenport_residual,
    lift,
    match_collections,
    orthogonality_residual,
    quadratic_character,
    sum_tol,
)
from phvfe.ff_core import make_field

FIELDS = [(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (5, 2), (3, 3), (7, 2)]


def prime_gauss_oracle(p: int, k: int) -> complex:
    """Plain-python g(chi_k, psi_1) over F_p using the smallest primitive root."""
    g = next(r for r in range(2, p) if all(pow(r, (p - 1) // s, p) != 1
                                           for s in range(2, p) if (p - 1) % s == 0 and all(s % t for t in range(2, s))))
    total = 0j
    for j in range(p - 1):
        a = pow(g, j, p)
        total += cmath.exp(2j * math.pi * k * j / (p - 1)) * cmath.exp(2j * math.pi * a / p)
    return -total


def test_trivial_gauss_sum_is_one():
    F = make_field(5)
    assert gauss_sum(MultChar(F, 0)) == pytest.approx(1.0, abs=1e-12)


def test_quadratic_gauss_sum_f5():
    F = make_field(5)
    g = gauss_sum(quadratic_character(F), AddChar(F, 1))
    expected = -(2 * math.cos(math.radians(72)) - 2 * math.cos(math.radians(144)))
    assert expected == pytest.approx(-math.sqrt(5))
    assert g == pytest.approx(expected, abs=1e-12)


def test_reflection_over_f7():
    F = make_field(7)
    for chi in all_characters(F)[1:]:
        lhs = gauss_sum(chi) * gauss_sum(chi.inverse())
        assert lhs == pytest.approx(complex(chi(F.neg(1))) * 7, abs=1e-10)


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_gauss_matches_plain_python(p):
    F = make_field(p)
    for k in range(p - 1):
        assert gauss(F, k) == pytest.approx(prime_gauss_oracle(p, k), abs=1e-9)


@pytest.mark.parametrize("p,e", FIELDS)
def test_table_matches_direct_summation(p, e):
    F = make_field(p, e)
    direct = np.array([gauss_sum(MultChar(F, k)) for k in range(F.order)])
    assert np.max(np.abs(gauss_table(F) - direct)) < sum_tol(F.q)


@pytest.mark.parametrize("p,e", [pe for pe in FIELDS if pe[0] ** pe[1] <= 49])
def test_nontrivial_modulus_sqrt_q(p, e):
    F = make_field(p, e)
    mods = np.abs(gauss_table(F)[1:])
    assert np.max(np.abs(mods - math.sqrt(F.q))) < 1e-9


def test_trivial_additive_character_rejected():
    F = make_field(5)
    with pytest.raises(ValueError):
        gauss_sum(MultChar(F, 1), AddChar(F, 0))


@pytest.mark.parametrize("p,e", [(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (5, 2)])
def test_orthogonality(p, e):
    assert orthogonality_residual(make_field(p, e)) < 1e-10


@pytest.mark.parametrize("p,e", [(5, 1), (7, 1), (3, 2)])
def test_multiplicativity_exhaustive(p, e):
    F = make_field(p, e)
    a, b = np.meshgrid(F.nonzero(), F.nonzero())
    for chi in all_characters(F):
        assert np.allclose(chi(F.mul(a, b)), chi(a) * chi(b))
        assert chi.order == F.order // math.gcd(chi.k, F.order)


@pytest.mark.parametrize("p,e", [(5, 1), (3, 2), (7, 1)])
def test_additive_character_properties(p, e):
    F = make_field(p, e)
    x = F.elements()
    for b in range(1, F.q):
        psi = AddChar(F, b)
        assert abs(np.sum(psi(x))) < 1e-10
        a, c = np.meshgrid(x, x)
        assert np.allclose(psi(F.add(a, c)), psi(a) * psi(c))


@pytest.mark.parametrize("p,e", [(5, 1), (7, 1), (3, 2)])
def test_gauss_sum_shift_by_b(p, e):
    F = make_field(p, e)
    for chi in all_characters(F)[1:]:
        for b in range(1, F.q):
            lhs = gauss_sum(chi, AddChar(F, b))
            assert lhs == pytest.approx(complex(chi.inverse()(b)) * gauss_sum(chi), abs=1e-9)


@pytest.mark.parametrize("sub,amb", [((3, 1), (3, 2)), ((5, 1), (5, 2)), ((2, 1), (2, 3)), ((3, 1), (3, 3))])
def test_hasse_davenport(sub, amb):
    S, A = make_field(*sub), make_field(*amb)
    for chi in all_characters(S):
        assert hasse_davenport_residual(chi, A) < 1e-9


def test_lift_matches_norm_composition():
    from phvfe.ff_core import norm_to

    S, A = make_field(5), make_field(5, 2)
    for chi in all_characters(S):
        lifted = lift(chi, A)
        x = A.nonzero()
        assert np.allclose(lifted(x), chi(norm_to(S, A, x)))


def test_eqsim_trivial_lambda_f5():
    F = make_field(5)
    lam = MultChar(F, 0)
    lhs = -4 * cmath.exp(2j * math.pi / 5)
    rhs = sum(gauss_sum(MultChar(F, k)) for k in range(4))
    assert abs(lhs - rhs) < 1e-9
    assert check_eqsim(lam, 1) < 1e-9


def test_eqsim_quadratic_f7_every_a():
    F = make_field(7)
    lam = quadratic_character(F)
    assert max(check_eqsim(lam, a) for a in range(1, 7)) < 1e-9


def test_eqsim_at_one_is_plain_sum():
    F = make_field(7)
    for lam in all_characters(F):
        total = sum(gauss(F, lam.k + k) for k in range(F.order))
        assert total == pytest.approx((1 - F.q) * AddChar(F, 1)(1) * 1, abs=1e-9)


def test_eqsim_rejects_zero():
    with pytest.raises(ValueError):
        check_eqsim(MultChar(make_field(5), 1), 0)


def test_gauss_product_single_factor():
    F = make_field(7)
    triv = MultChar(F, 0)
    for chi in all_characters(F)[1:]:
        val = gauss_product(chi, [triv], [])
        assert val == pytest.approx(gauss_sum(chi) / math.sqrt(7), abs=1e-12)
        assert abs(val) == pytest.approx(1.0)
    assert gauss_product(triv, [triv], []) == pytest.approx(1 / math.sqrt(7))


def test_gauss_product_double_coincidence():
    F = make_field(5)
    chi2 = quadratic_character(F)
    val = gauss_product(chi2, [chi2, chi2], [])
    assert abs(val) == pytest.approx(1 / 5, abs=1e-12)


def test_gauss_product_with_subfield_characters():
    F5, F25 = make_field(5), make_field(5, 2)
    chi2_5 = quadratic_character(F5)
    for chi in all_characters(F25):
        lifted = lift(chi2_5, F25)
        expected = gauss_sum(chi * lifted) / 5.0
        assert gauss_product(chi, [chi2_5], []) == pytest.approx(expected, abs=1e-9)


@given(st.sampled_from([(5, 1), (7, 1), (3, 2), (11, 1)]), st.data())
def test_gauss_product_modulus_counts_coincidences(pe, data):
    F = make_field(*pe)
    n = F.order
    lam = data.draw(st.lists(st.integers(0, n - 1), max_size=3))
    mu = data.draw(st.lists(st.integers(0, n - 1), max_size=2))
    k = data.draw(st.integers(0, n - 1))
    val = gauss_product(MultChar(F, k), [MultChar(F, a) for a in lam], [MultChar(F, b) for b in mu])
    c = sum((k + a) % n == 0 for a in lam) + sum((k - b) % n == 0 for b in mu)
    assert abs(val) == pytest.approx(F.q ** (-c / 2), rel=1e-9)


def _table(name, p, rho="trivial"):
    from phvfe.catalog import get_instance
    from phvfe.func_eq import compute_table

    return compute_table(get_instance(name, make_field(p)), rho)


def test_match_collections_identical():
    t = _table("gl1_line", 5)
    assert match_collections(t, t)


def test_match_collections_scaled_by_chi_a():
    t = _table("gl1_line", 7)
    assert match_collections(t, t.scaled(3))


def test_match_collections_detects_different_lambdas():
    assert not match_collections(_table("gl1_line", 5), _table("gl1_square", 5, "sign"))


def test_match_collections_rejects_incomplete():
    t = _table("gl1_line", 5)
    t.rows = t.rows[:2]
    with pytest.raises(ValueError):
        match_collections(t, t)


def test_gauss_table_disk_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("PHVFE_CACHE_DIR", str(tmp_path))
    F = make_field(11)
    gauss_table.cache_clear()
    first = gauss_table(F)
    files = list(tmp_path.glob("gauss_p11_e1_*.npy"))
    assert len(files) == 1
    gauss_table.cache_clear()
    assert np.array_equal(gauss_table(F), first)
    gauss_table.cache_clear()
