import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import fd_grad, fd_jac, rel_err
from vectro import interp, pv
from vectro.errors import ValidationError
from vectro.optim import newton
from vectro.text import Document, random_perturbation


def random_model(kind, D=30, d=8, nu=2, alpha=0.1, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    cfg = pv.PvConfig(kind, D, d, nu, alpha)
    P = None if kind == "pvdbow" else rng.standard_normal((d, cfg.p_cols)) * scale
    R = rng.standard_normal((D, d)) * scale
    return pv.normalize_R(pv.PvModel(cfg, P, R, np.zeros((d, 1))))


def make_problem(kind, k=6, T=40, seed=0, **kw):
    rng = np.random.default_rng(seed + 100)
    m = random_model(kind, seed=seed, **kw)
    x = Document(rng.integers(0, m.config.D, size=T))
    xt, _ = random_perturbation(x, k, m.config.D, rng)
    return interp.InterpProblem(m, x, xt)


def brute_affected(model, x, xt):
    out = []
    for t in pv.valid_positions(model.config, x.T):
        if x[t] != xt[t]:
            out.append(t)
        elif model.kind != "pvdbow":
            c, ct = pv.context(x, t, model.config.nu), pv.context(xt, t, model.config.nu)
            if not np.array_equal(c.tokens, ct.tokens):
                out.append(t)
    return np.array(out, dtype=int)


@pytest.mark.parametrize("kind", pv.KINDS)
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 8))
def test_affected_positions_match_brute_force(kind, seed, k):
    rng = np.random.default_rng(seed)
    m = random_model(kind, D=6, d=2, nu=2)
    x = Document(rng.integers(0, 6, size=int(rng.integers(6, 25))))
    xt, _ = random_perturbation(x, min(k, x.T), 6, rng)
    np.testing.assert_array_equal(interp.affected_positions(m, x, xt), brute_affected(m, x, xt))


def test_affected_count_within_window_budget():
    p = make_problem("pvdm-concat", k=5)
    assert p.n_affected <= (2 * p.model.config.nu + 1) * 5


@pytest.mark.parametrize("kind", pv.KINDS)
def test_endpoints_are_the_two_inference_problems(kind, rng):
    p = make_problem(kind)
    F, G = pv.objective(p.model, p.x), pv.objective(p.model, p.xt)
    for _ in range(3):
        q = rng.standard_normal(8)
        assert p.objective(0.0).value(q) == pytest.approx(F.value(q), rel=1e-12)
        assert p.objective(1.0).value(q) == pytest.approx(G.value(q), rel=1e-12)
        mu = rng.uniform()
        expected = (1 - mu) * F.value(q) + mu * G.value(q)
        assert p.objective(mu).value(q) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("kind", pv.KINDS)
def test_gradient_and_hessian_match_finite_differences(kind, rng):
    p = make_problem(kind)
    q, mu = rng.standard_normal(8), 0.37
    obj = p.objective(mu)
    g = interp.psi_lin_grad(p, mu, q)
    assert rel_err(g, fd_grad(obj.value, q)) < 1e-6
    H = interp.psi_lin_hessian(p, mu, q)
    np.testing.assert_allclose(H, H.T, atol=1e-14)
    Hfd = fd_jac(lambda v: interp.psi_lin_grad(p, mu, v), q) - p.alpha * np.eye(8)
    assert rel_err(H, Hfd) < 1e-6
    assert np.linalg.eigvalsh(H).min() > -1e-12


@pytest.mark.parametrize("kind", pv.KINDS)
def test_dmu_grad_is_gradient_difference(kind, rng):
    p = make_problem(kind)
    F, G = pv.objective(p.model, p.x), pv.objective(p.model, p.xt)
    q = rng.standard_normal(8)
    np.testing.assert_allclose(interp.dmu_grad(p, q), G.grad(q) - F.grad(q), atol=1e-14)
    fd = (interp.psi_lin_grad(p, 0.6, q) - interp.psi_lin_grad(p, 0.4, q)) / 0.2
    np.testing.assert_allclose(interp.dmu_grad(p, q), fd, atol=1e-12)


def test_hessian_eigen_lower_bound_on_trained_models(toy_models, toy_corpus, rng):
    for m in toy_models.values():
        for doc in list(toy_corpus)[:4]:
            obj = pv.objective(m, doc)
            for scale in (0.0, 0.5, 2.0):
                q = rng.standard_normal(m.config.d)
                q *= scale / max(np.linalg.norm(q), 1e-300)
                lam = np.linalg.eigvalsh(obj.hessian(q, include_alpha=False)).min()
                assert lam >= pv.hessian_eigen_lower_bound(m, np.linalg.norm(q)) * (1 - 1e-12)


@pytest.mark.parametrize("kind", pv.KINDS)
def test_velocity_field(kind, rng):
    p = make_problem(kind)
    q, mu = rng.standard_normal(8), 0.25
    phi = interp.phi_lin(p, mu, q)
    H = interp.psi_lin_hessian(p, mu, q) + p.alpha * np.eye(8)
    dmu = interp.dmu_grad(p, q)
    np.testing.assert_allclose(H @ phi, -dmu, atol=1e-12)
    assert np.linalg.norm(phi) <= np.linalg.norm(dmu) / p.alpha * (1 + 1e-12)


def test_identical_documents_give_constant_trajectory():
    p = make_problem("pvdm-mean", k=0)
    assert p.n_affected == 0
    np.testing.assert_array_equal(p.dmu_grad(np.ones(8)), 0.0)
    tr = interp.trace(p, steps=8)
    assert tr.sup_displacement == 0.0
    assert tr.endpoint_gap < 1e-6


@pytest.mark.parametrize("kind", pv.KINDS)
def test_trace_follows_minimizers(kind):
    p = make_problem(kind, k=10)
    tr = interp.trace(p, steps=16)
    assert tr.residuals.max() <= 1e-8
    assert tr.endpoint_gap <= 1e-6
    for i in (4, 9, 16):
        ref = interp.minimize_at(p, tr.mu_grid[i], tol=1e-10)
        np.testing.assert_allclose(tr.q_points[i], ref.x, atol=1e-7)
    assert tr.displacements[0] == 0.0
    assert tr.sup_displacement == pytest.approx(interp.sup_displacement(tr))


def test_unpolished_rk4_is_fourth_order():
    p = make_problem("pvdm-mean", k=15, alpha=0.01, scale=1.0)

    def exact(mu, q):
        o = p.objective(mu)
        return newton(o.value, o.grad, o.hessian, q, tol=1e-13).x

    q0 = exact(0.0, pv.infer(p.model, p.x, alpha=p.alpha).q)
    q1 = exact(1.0, pv.infer(p.model, p.xt, alpha=p.alpha).q)
    errs = [np.linalg.norm(interp.trace(p, steps=n, polish=False, q_start=q0,
                                        compare_endpoint=False).q_points[-1] - q1)
            for n in (2, 4, 8, 16)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7), orders


def test_validation():
    p = make_problem("pvdbow")
    with pytest.raises(ValidationError):
        p.objective(1.5)
    with pytest.raises(ValidationError):
        interp.trace(p, steps=0)
    with pytest.raises(ValidationError):
        interp.InterpProblem(p.model, p.x, Document([1, 2, 3]))
    with pytest.raises(ValidationError):
        interp.InterpProblem(p.model, p.x, p.xt, alpha=0.0)
