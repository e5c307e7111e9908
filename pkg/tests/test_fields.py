"""Scalar fields: exact gradients vs the difference oracle, regularity,
and fibre-derivative inversion."""

import numpy as np
import pytest

import kcontact as kc
from kcontact import corpus
from kcontact import dual as dm

from conftest import corpus_hamiltonians, random_point

CH12 = kc.ChartSpec(1, 2)


def test_grad_linear_extra_coordinate():
    lam = 2.5
    h = kc.ScalarField(CH12, lambda pt: lam * pt.z[0], name="linear-z")
    g = kc.grad(h, kc.DarbouxPoint([0.3], [[1.0], [2.0]], [4.0, 5.0]))
    assert g.d_z == pytest.approx([lam, 0.0])
    assert np.allclose(g.d_q, 0.0) and np.allclose(g.d_p, 0.0)


def test_grad_telegrapher_hand_values():
    h = corpus.load("telegrapher").hamiltonian({"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0})
    g = kc.grad(h, kc.DarbouxPoint([1.0], [[2.0], [3.0]], [0.0, 0.0]))
    assert g.d_p.ravel() == pytest.approx([2.0, -3.0])
    assert g.d_q == pytest.approx([0.0])
    assert g.d_z == pytest.approx([1.0, 0.0])


def test_grad_matches_fd_on_random_polynomial(rng):
    chart = kc.ChartSpec(2, 2)
    coef = 2.0 * rng.random(6) - 1.0

    def fn(pt):
        return (coef[0] * pt.q[0] ** 3 + coef[1] * pt.q[1] * pt.p[0, 1]
                + coef[2] * pt.p[1, 0] ** 2 + coef[3] * pt.z[0] * pt.q[0]
                + coef[4] * pt.z[1] ** 2 + coef[5])

    h = kc.ScalarField(chart, fn)
    for _ in range(20):
        pt = random_point(chart, rng)
        g = kc.grad(h, pt).flat()
        f = kc.fd_grad(h, pt).flat()
        assert np.max(np.abs(g - f)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


@pytest.mark.parametrize("name,h", corpus_hamiltonians())
def test_grad_vs_fd_all_corpus(name, h, rng):
    for _ in range(100):
        pt = random_point(h.chart, rng)
        g = kc.grad(h, pt).flat()
        f = kc.fd_grad(h, pt).flat()
        assert np.max(np.abs(g - f)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_fd_grad_constant_and_bad_step():
    h = kc.ScalarField(CH12, lambda pt: 7.0)
    pt = kc.DarbouxPoint([0.1], [[0.2], [0.3]], [0.4, 0.5])
    assert np.max(np.abs(kc.fd_grad(h, pt).flat())) == 0.0
    with pytest.raises(kc.ContractError):
        kc.fd_grad(h, pt, step=0.0)


def test_fd_grad_domain_guard():
    h = kc.ScalarField(CH12, lambda pt: dm.sqrt(pt.q[0]), domain=lambda pt: pt.q[0] > 0)
    pt = kc.DarbouxPoint([1e-9], [[0.0], [0.0]], [0.0, 0.0])
    with pytest.raises(kc.DomainError):
        kc.fd_grad(h, pt, step=1e-5)


def test_regularity_examples():
    tel = corpus.load("telegrapher").hamiltonian({"kappa": 2.0, "lambda": 1.0, "epsilon": 0.0})
    pt = kc.DarbouxPoint([0.3], [[0.1], [0.2]], [0.0, 0.0])
    ok, smin = kc.check_regularity(tel, pt)
    assert ok and smin == pytest.approx(0.5)

    fo = corpus.load("first-order-dissipative").hamiltonian()
    ok, smin = kc.check_regularity(fo, pt)
    assert not ok and smin == pytest.approx(0.0, abs=1e-14)

    quad = kc.ScalarField(CH12, lambda pt: 0.5 * (pt.p[0, 0] ** 2 + pt.p[1, 0] ** 2))
    ok, smin = kc.check_regularity(quad, pt)
    assert ok and smin == pytest.approx(1.0)


def test_regularity_permutation_invariant(rng):
    chart = kc.ChartSpec(2, 2)

    def fn(pt):
        return (pt.p[0, 0] ** 2 + 0.5 * pt.p[1, 1] ** 2 + pt.p[0, 1] * pt.p[1, 0]
                + 0.2 * pt.p[0, 0] * pt.p[1, 1])

    def fn_swapped(pt):  # swap the two base columns of every momentum row
        q = pt.q
        swapped = kc.DarbouxPoint(q, pt.p[:, ::-1].copy(), pt.z)
        return fn(swapped)

    h1 = kc.ScalarField(chart, fn)
    h2 = kc.ScalarField(chart, fn_swapped)
    pt = random_point(chart, rng)
    pt_sw = kc.DarbouxPoint(pt.q, pt.p[:, ::-1].copy(), pt.z)
    ok1, s1 = kc.check_regularity(h1, pt)
    ok2, s2 = kc.check_regularity(h2, pt_sw)
    assert ok1 == ok2
    assert s1 == pytest.approx(s2, abs=1e-12)
    sv1 = np.linalg.svd(kc.p_hessian(h1, pt), compute_uv=False)
    sv2 = np.linalg.svd(kc.p_hessian(h2, pt_sw), compute_uv=False)
    assert np.max(np.abs(sv1 - sv2)) < 1e-12


def test_invert_fibre_telegrapher():
    for kappa in (1.0, 2.0):
        h = corpus.load("telegrapher").hamiltonian({"kappa": kappa, "lambda": 1.0, "epsilon": 0.0})
        p = kc.invert_fibre_derivative(h, [1.0], [0.0, 0.0], [[2.0], [3.0]], [[0.0], [0.0]])
        assert p.ravel() == pytest.approx([2.0, -3.0 * kappa], abs=1e-12)


def test_invert_fibre_quadratic_one_step():
    h = kc.ScalarField(CH12, lambda pt: 0.5 * (pt.p[0, 0] ** 2 + pt.p[1, 0] ** 2))
    v = [[0.37], [-1.2]]
    p = kc.invert_fibre_derivative(h, [0.0], [0.0, 0.0], v, [[0.0], [0.0]])
    assert p == pytest.approx(np.asarray(v), abs=1e-15)


def test_invert_fibre_hs_roundtrip(rng):
    h = corpus.load("hunter-saxton").hamiltonian()
    for _ in range(10):
        u = float(2.0 * rng.random() - 1.0)
        p_true = 2.0 * rng.random((2, 1)) - 1.0
        pt = kc.DarbouxPoint([u], p_true, [0.0, 0.0])
        v = kc.grad(h, pt).d_p
        p = kc.invert_fibre_derivative(h, [u], [0.0, 0.0], v, [[0.1], [0.1]])
        back = kc.grad(h, kc.DarbouxPoint([u], p, [0.0, 0.0])).d_p
        assert np.max(np.abs(back - v)) <= 1e-10
        # the model's first-order relations pin the momenta themselves
        assert p == pytest.approx(p_true, abs=1e-9)


def test_invert_fibre_singular_raises():
    fo = corpus.load("first-order-dissipative").hamiltonian()
    with pytest.raises(kc.RegularityError):
        kc.invert_fibre_derivative(fo, [0.5], [0.0, 0.0], [[0.3], [0.4]], [[0.0], [0.0]])


def test_domain_error_on_grad():
    h = kc.ScalarField(CH12, lambda pt: dm.log(pt.q[0]), domain=lambda pt: pt.q[0] > 0)
    with pytest.raises(kc.DomainError):
        kc.grad(h, kc.DarbouxPoint([-1.0], [[0.0], [0.0]], [0.0, 0.0]))
