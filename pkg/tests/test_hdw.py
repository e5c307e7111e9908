"""Canonical field construction, gauge freedom, map residuals, the
conservative-sector lift, and the induced second-order system."""

import numpy as np
import pytest

import kcontact as kc
from kcontact import corpus
from kcontact.grids import BaseMap, GridSpec, SolutionMap
from kcontact.geometry import eval_eta, pair

from conftest import corpus_hamiltonians, random_point

CH12 = kc.ChartSpec(1, 2)


# -- canonical fields --------------------------------------------------------

def test_canonical_zero_hamiltonian():
    h = kc.ScalarField(CH12, lambda pt: 0.0)
    X = kc.canonical_kvf(h, "standard")
    kt = X.at(kc.DarbouxPoint([0.3], [[0.1], [0.2]], [0.4, 0.5]))
    assert np.max(np.abs(kt.flat())) == 0.0


def test_canonical_telegrapher_components(rng):
    P = {"kappa": 1.5, "lambda": 0.7, "epsilon": 0.3}
    h = corpus.load("telegrapher").hamiltonian(P)
    X = kc.canonical_kvf(h, "standard")
    for _ in range(5):
        pt = random_point(CH12, rng)
        kt = X.at(pt)
        assert kt.comp[0].q[0] == pytest.approx(pt.p[0, 0])
        assert kt.comp[1].q[0] == pytest.approx(-pt.p[1, 0] / P["kappa"])
        trace = kt.comp[0].p[0, 0] + kt.comp[1].p[1, 0]
        assert trace == pytest.approx(-(P["epsilon"] * pt.q[0] + P["lambda"] * pt.p[0, 0]))


def test_standard_vs_evolution_z_difference(rng):
    h = corpus.load("hunter-saxton").hamiltonian()
    Xs = kc.canonical_kvf(h, "standard")
    Xe = kc.canonical_kvf(h, "evolution")
    for _ in range(10):
        pt = random_point(CH12, rng)
        ks, ke = Xs.at(pt), Xe.at(pt)
        for a in range(2):
            assert np.max(np.abs(ks.comp[a].q - ke.comp[a].q)) == 0.0
            assert np.max(np.abs(ks.comp[a].p - ke.comp[a].p)) == 0.0
        dz = sum(ke.comp[a].z[a] - ks.comp[a].z[a] for a in range(2))
        assert dz == pytest.approx(h(pt), rel=1e-12)


@pytest.mark.parametrize("name,h", corpus_hamiltonians())
@pytest.mark.parametrize("mode", ["standard", "evolution"])
def test_canonical_residual_zero_everywhere(name, h, mode, rng):
    X = kc.canonical_kvf(h, mode)
    for _ in range(100):
        pt = random_point(h.chart, rng)
        r = kc.kvf_residual(X, h, mode, pt)
        assert max(r) <= 1e-12


def test_residual_detects_perturbation(rng):
    h = corpus.load("telegrapher").hamiltonian()
    X = kc.canonical_kvf(h, "standard")

    def perturbed(pt):
        kt = X.at(pt)
        kt.comp[0].z[0] += 1e-3
        return kt

    Xp = kc.KVectorField(CH12, perturbed)
    pt = random_point(CH12, rng)
    r_q, r_p, r_z = kc.kvf_residual(Xp, h, "standard", pt)
    assert r_q == 0.0 and r_p <= 1e-12
    assert r_z == pytest.approx(1e-3, abs=1e-12)


# -- gauge freedom ------------------------------------------------------------

def test_gauge_basis_counts_and_membership(rng):
    assert kc.gauge_basis(kc.ChartSpec(2, 1)) == []
    basis = kc.gauge_basis(CH12)
    assert len(basis) == 6
    pt = random_point(CH12, rng)
    flats = []
    for g in basis:
        cov, s = kc.chi(CH12, pt, g.coeffs)
        assert cov.norm() <= 1e-12 and abs(s) <= 1e-12
        flats.append(g.coeffs.flat())
    assert np.linalg.matrix_rank(np.array(flats)) == 6


@pytest.mark.parametrize("mode", ["standard", "evolution"])
def test_gauge_shift_preserves_residual_and_projection(mode, rng):
    h = corpus.load("hunter-saxton").hamiltonian()
    X = kc.canonical_kvf(h, mode)
    for _ in range(25):
        g = kc.random_gauge(CH12, rng)
        Xg = kc.add_gauge(X, g)
        pt = random_point(CH12, rng)
        assert max(kc.kvf_residual(Xg, h, mode, pt)) <= 1e-10
        base, shifted = X.at(pt), Xg.at(pt)
        for a in range(2):
            # base projection untouched, bitwise
            assert np.array_equal(base.comp[a].q, shifted.comp[a].q)
        # z-block changes carry zero component trace
        dz = sum(shifted.comp[a].z[a] - base.comp[a].z[a] for a in range(2))
        assert abs(dz) <= 1e-12


def test_two_solutions_differ_by_kernel_direction(rng):
    h = corpus.load("telegrapher").hamiltonian()
    X = kc.add_gauge(kc.canonical_kvf(h, "standard"), kc.random_gauge(CH12, rng))
    Y = kc.add_gauge(kc.canonical_kvf(h, "standard"), kc.random_gauge(CH12, rng))
    for _ in range(10):
        pt = random_point(CH12, rng)
        diff = X.at(pt) - Y.at(pt)
        cov, s = kc.chi(CH12, pt, diff)
        assert cov.norm() <= 1e-10 and abs(s) <= 1e-10


# -- map residuals ------------------------------------------------------------

def test_map_residual_constant_map_zero_hamiltonian():
    h = kc.ScalarField(CH12, lambda pt: 0.0)
    grid = GridSpec([0.0, 0.0], [0.1, 0.1], [5, 5])
    psi = SolutionMap.from_function(
        CH12, grid, lambda t: kc.DarbouxPoint([0.4], [[0.1], [0.2]], [0.3, -0.1])
    )
    res = kc.map_residual(psi, h, "standard")
    assert res.max() <= 1e-14  # boundary stencils leave rounding dust on constants


def test_map_residual_telegrapher_fd_vs_closed():
    grid = GridSpec([0.0, 0.0], [1e-3, 1e-3], [9, 9])
    psi = corpus.analytic("telegrapher", "exponential", params={"u0": 0.1}, grid=grid)
    h = corpus.load("telegrapher").hamiltonian()
    closed = kc.map_residual(psi, h, "standard")
    assert closed.max() <= 1e-10
    # strip the exact derivatives: the difference stencils take over
    fd_psi = SolutionMap(psi.chart, psi.grid, psi.q, psi.p, psi.z)
    fd = kc.map_residual(fd_psi, h, "standard")
    assert fd.max() <= 1e-6
    assert fd.max() > closed.max()


def test_map_residual_hs_quadratic_evolution():
    psi = corpus.analytic("hunter-saxton", "quadratic")
    h = corpus.load("hunter-saxton").hamiltonian()
    assert kc.map_residual(psi, h, "evolution").max() <= 1e-10
    # the standard check must reject it: its z-balance differs by h along the map
    assert kc.map_residual(psi, h, "standard").max() > 1e-2


# -- evolution lift -----------------------------------------------------------

def _canonical_conservative(H):
    k = H.chart.k

    def at(pt):
        g = kc.grad(H, pt)
        comps = []
        for a in range(k):
            P = np.zeros((k, H.chart.n))
            P[a] = -g.d_q / k
            comps.append(kc.Tangent(g.d_p[a], P, np.zeros(k)))
        return kc.KTangent(comps)

    return kc.KVectorField(H.chart, at)


def test_evolution_lift_zero():
    H = kc.ScalarField(CH12, lambda pt: 0.0)
    E = kc.evolution_lift(H, _canonical_conservative(H))
    kt = E.at(kc.DarbouxPoint([0.1], [[0.2], [0.3]], [0.0, 0.0]))
    assert np.max(np.abs(kt.flat())) == 0.0


def test_evolution_lift_wave_energy(rng):
    H = kc.ScalarField(CH12, lambda pt: 0.5 * (pt.p[0, 0] ** 2 - pt.p[1, 0] ** 2))
    E = kc.evolution_lift(H, _canonical_conservative(H))
    pt = kc.DarbouxPoint([0.3], [[1.5], [0.7]], [0.1, -0.4])
    kt = E.at(pt)
    assert kt.comp[0].z == pytest.approx([1.5 ** 2, 0.0])
    assert kt.comp[1].z == pytest.approx([0.0, -(0.7 ** 2)])
    for _ in range(100):
        pt = random_point(CH12, rng)
        kt = E.at(pt)
        etas = eval_eta(CH12, pt)
        for a in range(2):
            assert abs(pair(etas[a], kt.comp[a])) <= 1e-12
        assert max(kc.kvf_residual(E, H, "evolution", pt)) <= 1e-10


def test_evolution_lift_rejects_bad_input():
    H = kc.ScalarField(CH12, lambda pt: 0.5 * pt.p[0, 0] ** 2 + pt.z[0])
    with pytest.raises(kc.ContractError):
        kc.evolution_lift(H, _canonical_conservative(H)).at(
            kc.DarbouxPoint([0.0], [[1.0], [0.0]], [0.0, 0.0])
        )
    H2 = kc.ScalarField(CH12, lambda pt: 0.5 * pt.p[0, 0] ** 2)
    wrong = kc.KVectorField(CH12, lambda pt: kc.KTangent.zero(CH12))
    with pytest.raises(kc.ContractError):
        kc.evolution_lift(H2, wrong).at(kc.DarbouxPoint([0.0], [[1.0], [0.0]], [0.0, 0.0]))


# -- second-order system -------------------------------------------------------

def _interior(arr):
    return arr[tuple(slice(1, -1) for _ in range(arr.ndim - 1))]


def test_second_order_telegrapher_exponential():
    P = {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "c": 2.0}
    a = corpus.telegrapher_quadratic_roots(P["kappa"], P["lambda"], P["epsilon"], P["c"])[1]
    h = corpus.load("telegrapher").hamiltonian({k: P[k] for k in ("kappa", "lambda", "epsilon")})
    grid = GridSpec([0.0, 0.0], [1e-3, 1e-3], [9, 9])
    u0, c, kappa = 0.5, P["c"], P["kappa"]
    qmap = BaseMap.from_function(grid, lambda t: [u0 * np.exp(a * (c * t[0] - t[1] / kappa))])
    res = kc.second_order_residual(h, qmap, "standard")
    assert np.max(np.abs(_interior(res))) <= 1e-6


def test_second_order_membrane_dispersion():
    ex = corpus.load("membrane")
    P = dict(ex.solutions["separable"].defaults)
    h = ex.hamiltonian()
    s = (-P["lambda"] + np.sqrt(P["lambda"] ** 2 - 4 * (P["kappa"] + P["c"] ** 2 * (P["a"] ** 2 + P["b"] ** 2)))) / 2
    assert s ** 2 + P["lambda"] * s + P["kappa"] + P["c"] ** 2 * (P["a"] ** 2 + P["b"] ** 2) == pytest.approx(0.0, abs=1e-12)
    grid = GridSpec([0.0, 0.0, 0.0], [1e-3, 1e-3, 1e-3], [7, 7, 7])
    qmap = BaseMap.from_function(
        grid, lambda t: [P["u0"] * np.exp(s * t[0]) * np.cos(P["a"] * t[1]) * np.cos(P["b"] * t[2])]
    )
    res = kc.second_order_residual(h, qmap, "standard")
    assert np.max(np.abs(_interior(res))) <= 1e-6


def test_second_order_zero_map_any_damping():
    for lam, eps in [(0.0, 0.0), (2.0, 5.0), (-1.0, 0.3)]:
        h = corpus.load("telegrapher").hamiltonian({"kappa": 1.0, "lambda": lam, "epsilon": eps})
        grid = GridSpec([0.0, 0.0], [0.01, 0.01], [5, 5])
        qmap = BaseMap.from_function(grid, lambda t: [0.0])
        res = kc.second_order_residual(h, qmap, "standard")
        assert np.max(np.abs(res)) == 0.0


def test_second_order_rejects_non_affine_and_non_regular():
    grid = GridSpec([0.0, 0.0], [0.01, 0.01], [5, 5])
    qmap = BaseMap.from_function(grid, lambda t: [0.1])
    hq = corpus.load("telegrapher-quadratic-z").hamiltonian()
    with pytest.raises(kc.ContractError):
        kc.second_order_residual(hq, qmap)
    fo = corpus.load("first-order-dissipative").hamiltonian()
    with pytest.raises(kc.RegularityError):
        kc.second_order_residual(fo, qmap)


def test_second_order_accepts_integrated_base_map():
    # maps produced by flow integration only know their own nodes; the
    # reconstruction must fall back to the unpadded grid, not crash
    ex = corpus.load("telegrapher")
    h = ex.hamiltonian()
    entry = ex.sections["classical-zind"]
    gamma = entry.build(dict(entry.defaults))
    from kcontact.hj import project_Q
    from kcontact.integrate import integral_section

    grid = GridSpec([0.0, 0.0], [1e-3, 1e-3], [7, 7])
    sigma = integral_section(project_Q(h, gamma), [1.0], grid)
    res = kc.second_order_residual(h, sigma, "standard")
    assert np.max(np.abs(_interior(res))) <= 1e-6


def test_affine_examples_standard_equals_evolution_blocks(rng):
    for name in ["telegrapher", "membrane", "hunter-saxton", "first-order-dissipative"]:
        h = corpus.load(name).hamiltonian()
        Xs = kc.canonical_kvf(h, "standard")
        Xe = kc.canonical_kvf(h, "evolution")
        for _ in range(10):
            pt = random_point(h.chart, rng)
            ks, ke = Xs.at(pt), Xe.at(pt)
            for a in range(h.chart.k):
                assert np.max(np.abs(ks.comp[a].q - ke.comp[a].q)) <= 1e-12
                assert np.max(np.abs(ks.comp[a].p - ke.comp[a].p)) <= 1e-12
