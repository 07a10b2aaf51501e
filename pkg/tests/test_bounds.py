import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import solve_ivp

from vectro import bounds, pv
from vectro.errors import NumericError, ValidationError
from vectro.softmax import orthonormal_complement_of_ones
from vectro.text import Document

SQRT2 = math.sqrt(2)


def orthonormal_pvdbow(D=5, d=2, nu=1, alpha=10.0, scale=1.0):
    R = orthonormal_complement_of_ones(D)[:, :d] * scale
    return pv.PvModel(pv.PvConfig("pvdbow", D, d, nu, alpha), None, R, np.zeros((d, 1)))


def random_pvdm(seed=0, D=30, d=8, nu=2, scale=0.5):
    rng = np.random.default_rng(seed)
    cfg = pv.PvConfig("pvdm-mean", D, d, nu, 0.1)
    m = pv.PvModel(cfg, rng.standard_normal((d, D)) * scale,
                   rng.standard_normal((D, d)) * scale, np.zeros((d, 1)))
    return pv.normalize_R(m)


# ---------------------------------------------------------------- profile and constants

def test_profile_zero_ratio():
    p = bounds.lipschitz_profile(random_pvdm(), 0.0)
    assert p.Gamma_0 == 0.0 and p.Gamma_2 == 0.0
    assert p.gamma_0 == 0.0
    assert p.Gamma_m1 > 0 and p.Gamma_1 > 0


def test_profile_gammas_linear_in_sigma_max():
    m = random_pvdm()
    m2 = pv.PvModel(m.config, m.P, 2 * m.R, m.Q)
    p, p2 = bounds.lipschitz_profile(m, 0.1), bounds.lipschitz_profile(m2, 0.1)
    for name in ("gamma_m1", "gamma_1", "gamma_2"):
        assert getattr(p2, name) == pytest.approx(2 * getattr(p, name))
    assert p2.gamma_0 == 0.0


def test_profile_formulas_orthonormal_case():
    m = orthonormal_pvdbow(D=5, nu=1)
    p = bounds.lipschitz_profile(m, 0.2, ell=3.0)
    assert p.Gamma_m1 == pytest.approx(5.0)
    assert p.Gamma_0 == pytest.approx(4 * 3 * 1 * 0.2)
    assert p.Gamma_1 == pytest.approx(8 / 4)
    assert p.Gamma_2 == 0.0
    assert (p.gamma_m1, p.gamma_1, p.gamma_2) == pytest.approx((2 * SQRT2, 3 * SQRT2, 2 * SQRT2))


def test_profile_validation():
    with pytest.raises(ValidationError):
        bounds.lipschitz_profile(random_pvdm(), 1.5)
    R = orthonormal_complement_of_ones(5)[:, :2]
    R[:, 1] = R[:, 0]
    m = pv.PvModel(pv.PvConfig("pvdbow", 5, 2), None, R, np.zeros((2, 1)))
    with pytest.raises(NumericError, match="rank-deficient R"):
        bounds.doc2vec_constants(m)


def test_constants_orthonormal_pvdbow():
    k = bounds.doc2vec_constants(orthonormal_pvdbow(D=5, nu=1), ell=3.0)
    assert k.A == pytest.approx(4 * 3 * 1 * 5)
    assert k.B == pytest.approx(64 * 3 * 1 * 5)
    assert k.C == pytest.approx(5 * SQRT2)


def test_constants_scaling():
    m = random_pvdm(nu=2)
    base = bounds.doc2vec_constants(m, ell=3.0)
    ell2 = bounds.doc2vec_constants(m, ell=6.0)
    assert ell2.A == pytest.approx(2 * base.A) and ell2.B == pytest.approx(2 * base.B)
    assert ell2.C == base.C
    m_nu = pv.PvModel(pv.PvConfig("pvdbow", 30, 8, nu=4), None, m.R, m.Q)
    m_nu1 = pv.PvModel(pv.PvConfig("pvdbow", 30, 8, nu=2), None, m.R, m.Q)
    k4, k2 = bounds.doc2vec_constants(m_nu), bounds.doc2vec_constants(m_nu1)
    assert k4.A == pytest.approx(2 * k2.A) and k4.B == pytest.approx(2 * k2.B)
    # C only sees sigma_max
    assert k2.C == pytest.approx(5 * SQRT2 * m.sigma_max_R) == base.C


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("ratio", [0.01, 0.3, 1.0])
def test_constants_consistency(seed, ratio):
    m = random_pvdm(seed=seed)
    c = bounds.constants_consistency(m, ratio)
    assert c.a_over_A_ratio == pytest.approx(1.0, rel=1e-12)
    assert c.c_minus_C == pytest.approx(0.0, abs=1e-12)
    D = m.config.D
    assert 0 < c.b_over_B_ratio <= D / (D - 1) * (1 + 1e-12)


def test_b_slip_factor_is_exact_for_pvdbow():
    # with Pi = 0 only the first summand survives and the factor is exactly D/(D-1)
    for D in (3, 5, 12):
        m = orthonormal_pvdbow(D=D, d=2)
        assert bounds.constants_consistency(m, 0.5).b_over_B_ratio == pytest.approx(D / (D - 1))


# ---------------------------------------------------------------- admissibility

def test_admissible_ratio_toy_matches_closed_form():
    adm = bounds.admissible_ratio(orthonormal_pvdbow(), alpha=10.0, ell=3.0)
    A, B, C = 60.0, 960.0, 5 * SQRT2
    expected = -math.log(2 * B) - 2 * (A * C + 1) * math.exp(C * SQRT2 / 10.0)
    assert float(adm.log_value) == pytest.approx(expected, rel=1e-14)
    assert mpmath.exp(adm.log_value) > 0
    # below float64 range, so the float view is flagged
    assert adm.vacuous and adm.value == 0.0
    assert adm.log10_text.startswith("-1007.")


def test_admissible_ratio_representable_for_mild_scale():
    adm = bounds.admissible_ratio(orthonormal_pvdbow(D=2, d=1, scale=1e-3), alpha=10.0, ell=1.0)
    assert not adm.vacuous
    assert adm.value == pytest.approx(float(mpmath.exp(adm.log_value)))
    assert adm.admits(adm.value * 0.999)
    assert not adm.admits(adm.value * 1.001)


def test_vacuous_regime():
    adm = bounds.admissible_ratio(orthonormal_pvdbow(scale=10.0), alpha=0.01)
    assert adm.value == 0.0 and adm.vacuous
    assert mpmath.isfinite(adm.log_value) and adm.log_value < -1e100
    assert adm.admits(0.0)


@settings(max_examples=30, deadline=None)
@given(a1=st.floats(0.01, 100), a2=st.floats(0.01, 100))
def test_admissible_ratio_monotone_in_alpha(a1, a2):
    assume(a1 < a2)
    m = random_pvdm()
    assert bounds.admissible_ratio(m, a1).log_value <= bounds.admissible_ratio(m, a2).log_value


# ---------------------------------------------------------------- document bound

def test_doc2vec_bound_report(rng):
    m = orthonormal_pvdbow(D=5, d=2, alpha=10.0)
    x = Document(rng.integers(0, 5, size=20))
    zero = bounds.doc2vec_bound(m, x, 0)
    assert zero.bound == 0.0 and zero.admissible and zero.status == "admissible"
    r1, r3 = bounds.doc2vec_bound(m, x, 1), bounds.doc2vec_bound(m, x, [2, 5, 9])
    assert r3.bound == pytest.approx(3 * r1.bound)
    assert r1.status == "envelope vacuous" and not r1.admissible
    assert r1.q0_norm_worst == pytest.approx(SQRT2 / 10.0)
    assert r1.q0_norm <= r1.q0_norm_worst
    assert r1.L == pytest.approx(2 * r1.A * math.exp(r1.C * r1.q0_norm))
    assert r1.bound_worst >= r1.bound
    d = json.loads(r1.to_json())
    assert d["status"] == "envelope vacuous"
    assert d["A"] == r1.A and d["T"] == 20
    with pytest.raises(ValidationError):
        bounds.doc2vec_bound(m, x, 21)


def test_report_serializes_infinite_values(rng):
    m = random_pvdm(scale=3.0)
    x = Document(rng.integers(0, 30, size=30))
    r = bounds.doc2vec_bound(m, x, 2, alpha=1e-4)
    assert math.isinf(r.L_worst)
    assert json.loads(r.to_json())["L_worst"] == "inf"
    assert r.vacuous and not r.admissible
    huge = random_pvdm(scale=60.0)
    k = bounds.doc2vec_constants(huge)
    assert math.isinf(k.A) and math.isinf(k.B)
    assert bounds.admissible_ratio(huge).vacuous


# ---------------------------------------------------------------- Gronwall envelope

def test_envelope_basic_cases():
    p = bounds.GronwallParams(a=0.1, b=0.05, c=1.0)
    assert bounds.gronwall_envelope(p, 0.0).value == 0.0
    flat = bounds.GronwallParams(a=0.3, b=2.0, c=0.0)
    e = bounds.gronwall_envelope(flat, 0.5)
    assert e.applicable and e.value == pytest.approx(0.5 * 0.3 * math.exp(2.0))
    bad = bounds.GronwallParams(a=1.0, b=1.0, c=1.0)
    assert not bounds.gronwall_envelope(bad, 1.0).applicable
    with pytest.raises(ValidationError):
        bounds.gronwall_envelope(p, 1.1)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(1e-3, 2.0), c=st.floats(1e-3, 3.0), q0=st.floats(0.0, 1.0))
def test_envelope_dominates_scalar_closed_form(a, c, q0):
    # q' = a exp(c|q|) has |field| = a e^{c|q|} and Lipschitz factor b = a c
    params = bounds.GronwallParams(a=a, b=a * c, c=c, q0_norm=q0)
    assume(params.condition_holds())
    mu = np.linspace(0, 1, 101)
    q = -np.log(np.exp(-c * q0) - a * c * mu) / c
    for m_, qm in zip(mu, q):
        env = bounds.gronwall_envelope(params, float(m_))
        assert env.applicable
        assert qm - q0 <= env.value * (1 + 1e-12) + 1e-12


@settings(max_examples=20, deadline=None)
@given(a=st.floats(1e-3, 0.5), c=st.floats(1e-2, 2.0), angle=st.floats(0, 2 * math.pi))
def test_envelope_dominates_integrated_planar_field(a, c, angle):
    q0 = np.array([math.cos(angle), math.sin(angle)]) * 0.3
    params = bounds.GronwallParams(a=a, b=a * c, c=c, q0_norm=0.3)
    assume(params.condition_holds())

    def field(mu, q):
        return a * math.exp(c * np.linalg.norm(q)) * np.array([math.cos(3 * mu), math.sin(3 * mu)])

    sol = solve_ivp(field, (0, 1), q0, rtol=1e-10, atol=1e-12, dense_output=True)
    for mu in np.linspace(0, 1, 41):
        disp = np.linalg.norm(sol.sol(mu) - q0)
        assert disp <= bounds.gronwall_envelope(params, float(mu)).value + 1e-10


@settings(max_examples=20, deadline=None)
@given(a=st.floats(1e-3, 2.0), b=st.floats(0.0, 3.0))
def test_envelope_flat_branch_dominates(a, b):
    params = bounds.GronwallParams(a=a, b=b, c=0.0)

    def field(mu, q):
        return a * np.cos(b / a * q + mu)

    sol = solve_ivp(field, (0, 1), [0.0], rtol=1e-10, atol=1e-12, dense_output=True)
    for mu in np.linspace(0, 1, 21):
        assert abs(sol.sol(mu)[0]) <= bounds.gronwall_envelope(params, float(mu)).value + 1e-10


def test_profile_params_fail_condition_on_trained_models(toy_models):
    # the doc2vec instantiation never meets the non-explosion condition at desk scale
    for m in toy_models.values():
        g = bounds.GronwallParams.from_profile(bounds.lipschitz_profile(m, 5 / 60), 1.0)
        assert not g.condition_holds()
        assert bounds.admissible_ratio(m).vacuous
