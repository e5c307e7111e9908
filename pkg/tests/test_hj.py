"""Hamilton-Jacobi checks: projections, all four residuals, the diagonal
gauge-matrix solver, and complete-solution verification."""

import numpy as np
import pytest

import kcontact as kc
from kcontact import corpus
from kcontact import dual as dm

CH12 = kc.ChartSpec(1, 2)
U_SAMPLES = np.linspace(0.5, 2.0, 25).reshape(-1, 1)


def tel(params=None):
    ex = corpus.load("telegrapher")
    return ex, ex.hamiltonian(params)


def hs(params=None):
    ex = corpus.load("hunter-saxton")
    return ex, ex.hamiltonian(params)


# -- projections ---------------------------------------------------------------

def test_project_q_telegrapher_components():
    ex, h = tel({"kappa": 2.0, "lambda": 1.0, "epsilon": 0.0})
    entry = ex.sections["classical-zind"]
    gamma = entry.build({**entry.defaults, "kappa": 2.0})
    f = kc.project_Q(h, gamma)
    for u in (0.5, 1.0, 1.7):
        gut = gamma.p_at([u])[0][0]
        gux = gamma.p_at([u])[1][0]
        assert f.eval(0, [u])[0] == pytest.approx(gut)
        assert f.eval(1, [u])[0] == pytest.approx(-gux / 2.0)


def test_project_q_ignores_momentum_free_hamiltonian():
    h = kc.ScalarField(CH12, lambda pt: pt.q[0] ** 2 + pt.z[0])
    gamma = kc.from_potentials(CH12, lambda q: [q[0], q[0] ** 2])
    f = kc.project_Q(h, gamma)
    assert f.eval(0, [0.7])[0] == 0.0
    assert f.eval(1, [0.7])[0] == 0.0


def test_project_q_hs_components():
    ex, h = hs()
    mu = 3.0
    gamma = kc.from_potentials(CH12, lambda q: [q[0] ** 2, q[0] ** 3])
    f = kc.project_Q(h, gamma)
    u = 0.6
    gut, gux = 2 * u, 3 * u * u
    assert f.eval(0, [u])[0] == pytest.approx(-2 * gux + 4 * u * gut + mu)
    assert f.eval(1, [u])[0] == pytest.approx(-2 * gut)


def test_project_q_is_representative_independent(rng):
    ex, h = tel()
    entry = ex.sections["classical-zind"]
    gamma = entry.build(dict(entry.defaults))
    f = kc.project_Q(h, gamma)
    # whichever residual-zero representative produced it, the projection
    # reads only the momentum gradient on the section
    X = kc.canonical_kvf(h, "standard")
    Xg = kc.add_gauge(X, kc.random_gauge(CH12, rng))
    for u in (0.6, 1.1):
        pt = gamma.at([u])
        for a in range(2):
            assert f.eval(a, [u])[0] == Xg.at(pt).comp[a].q[0]


# -- z-independent checks --------------------------------------------------------

def test_classical_zind_root_pass_and_fail():
    ex, h = tel()
    good = ex.sections["classical-zind"]
    rep = kc.hj_classical_zind(h, good.build(dict(good.defaults)), samples=U_SAMPLES)
    assert rep.sup_residual <= 1e-10
    assert rep.verdict(1e-10) == "PASS"
    bad = ex.sections["classical-zind-wrong-root"]
    rep2 = kc.hj_classical_zind(h, bad.build(dict(bad.defaults)), samples=U_SAMPLES)
    assert rep2.sup_residual > 0.1


def test_quadratic_root_oracle_vs_check():
    # oracle: the closed-form roots of the slope quadratic
    roots = corpus.telegrapher_quadratic_roots(1.0, 1.0, 0.0, 2.0)
    assert sorted(roots) == pytest.approx([-2.0 / 3.0, 0.0])
    ex, h = tel()
    entry = ex.sections["classical-zind"]
    rep = kc.hj_classical_zind(h, entry.build({**entry.defaults, "a": -2.0 / 3.0}),
                               samples=U_SAMPLES)
    assert rep.sup_residual <= 1e-10


def test_zero_hamiltonian_any_holonomic_section(rng):
    h = kc.ScalarField(CH12, lambda pt: 0.0)
    gamma = kc.from_potentials(CH12, lambda q: [q[0] ** 3, dm.exp(q[0])])
    rep = kc.hj_classical_zind(h, gamma, box=[(-1, 1)], count=50, seed=1)
    assert rep.sup_residual == 0.0


def test_non_holonomic_section_rejected():
    ex, h = tel()
    broken = kc.SectionZInd(CH12, gamma_p=lambda q: [[1.0], [0.0]],
                            gamma_z=lambda q: [0.0, 0.0])
    with pytest.raises(kc.ContractError):
        kc.hj_classical_zind(h, broken, samples=U_SAMPLES)


def test_evolution_zind_hs_constant_energy():
    ex, h = hs()
    entry = ex.sections["evolution-zind-K"]
    gamma = entry.build(dict(entry.defaults))
    rep = kc.hj_evolution_zind(h, gamma, samples=U_SAMPLES)
    assert rep.sup_residual <= 1e-10
    # the composite value really is the constant K (= 2 here, doubled by the model)
    vals = [h(gamma.at([u])) for u in (0.5, 1.0, 1.5)]
    assert np.ptp(vals) <= 1e-12
    assert vals[0] == pytest.approx(2.0 * entry.defaults["K"])


def test_evolution_zind_detects_non_root():
    ex, h = tel()
    entry = ex.sections["classical-zind-wrong-root"]
    rep = kc.hj_evolution_zind(h, entry.build(dict(entry.defaults)), samples=U_SAMPLES)
    assert rep.sup_residual > 1e-2


def test_both_roots_pass_evolution_only_paired_constants_pass_classical():
    # parameters giving two nonzero roots
    kappa, lam, eps, c = 1.0, 3.0, 2.0, 2.0
    ex, h = tel({"kappa": kappa, "lambda": lam, "epsilon": eps})
    entry = ex.sections["classical-zind"]
    for a in corpus.telegrapher_quadratic_roots(kappa, lam, eps, c):
        base = {**entry.defaults, "kappa": kappa, "lambda": lam, "epsilon": eps,
                "c": c, "a": a}
        gamma = entry.build({**base, "C0": 0.0, "C1": 0.0})
        assert kc.hj_evolution_zind(h, gamma, samples=U_SAMPLES).sup_residual <= 1e-10
        assert kc.hj_classical_zind(h, gamma, samples=U_SAMPLES).sup_residual <= 1e-10
        shifted = entry.build({**base, "C0": 0.5, "C1": 0.0})
        assert kc.hj_evolution_zind(h, shifted, samples=U_SAMPLES).sup_residual <= 1e-10
        assert kc.hj_classical_zind(h, shifted, samples=U_SAMPLES).sup_residual > 1e-2


# -- z-dependent pieces -----------------------------------------------------------

def test_gamma_beta_z_independent_linear_slope():
    lam = 1.3
    h = kc.ScalarField(CH12, lambda pt: lam * pt.z[0] + pt.q[0] ** 2)
    gamma = kc.SectionZDep(CH12, gamma_p=lambda q, z: [[0.2 * q[0]], [0.4]])
    out = kc.gamma_beta(h, gamma, [0.5], [0.1, 0.2])
    assert out == pytest.approx([lam, 0.0])


def test_gamma_beta_telegrapher_family():
    ex, h = tel()
    P = {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "a": 1.0, "mu": 0.3, "nu": -0.2}
    entry = ex.sections["zdep-family"]
    gamma = entry.build(P)
    q, z = [0.7], [0.4, -0.1]
    pt = gamma.at(q, z)
    out = kc.gamma_beta(h, gamma, q, z)
    assert out[0] == pytest.approx(P["a"] * pt.p[0, 0] + P["lambda"])
    assert out[1] == pytest.approx(P["a"] / P["kappa"] * pt.p[1, 0])


def test_gamma_beta_matches_fd_directional(rng):
    ex, h = hs()
    gamma = kc.SectionZDep(CH12, gamma_p=lambda q, z: [[q[0] * z[0] + 0.3 * z[1] ** 2],
                                                       [z[1] - 0.4 * q[0] * z[0]]])
    step = 1e-6
    for _ in range(10):
        q = list(2.0 * rng.random(1) - 1.0)
        z = list(2.0 * rng.random(2) - 1.0)
        out = kc.gamma_beta(h, gamma, q, z)
        for b in range(2):
            zp, zm = list(z), list(z)
            zp[b] += step
            zm[b] -= step
            hp = h(gamma.at(q, zp))
            hm = h(gamma.at(q, zm))
            fd = (hp - hm) / (2 * step)
            assert out[b] == pytest.approx(fd, rel=1e-6, abs=1e-7)


def _paper_tel_C(P, mode):
    """The displayed diagonal gauge matrices of the damped-wave family."""
    a, kappa, lam, eps = P["a"], P["kappa"], P["lambda"], P["epsilon"]

    def fn(q, z):
        u = q[0]
        gut = a * z[0] - lam * u + P["mu"]
        gux = -a * z[1] + P["nu"]
        hval = 0.5 * (gut ** 2 - gux ** 2 / kappa) + 0.5 * eps * u ** 2 + lam * z[0]
        bracket = eps * u / a + gut ** 2 + gux ** 2 / kappa
        if mode == "standard":
            A = -0.5 * (hval + bracket)
            B = -0.5 * (hval - bracket)
        else:
            A = -0.5 * bracket
            B = -A
        return [[A, 0.0], [0.0, B]]

    return kc.GaugeMatrix(fn)


@pytest.mark.parametrize("mode", ["standard", "evolution"])
def test_zdep_residual_with_displayed_matrices(mode):
    ex, h = tel()
    entry = ex.sections["zdep-family"]
    P = dict(entry.defaults)
    gamma = entry.build(P)
    rep = kc.hj_zdep_residual(h, gamma, _paper_tel_C(P, mode), mode=mode,
                              box=[(-1, 1)] * 3, count=200, seed=7)
    assert rep.sup_residual <= 1e-10


def test_zdep_residual_reduces_to_naive_when_corrections_vanish():
    # h with no momentum or z dependence on a z-independent section:
    # the only surviving term is the base gradient of (h on section)
    h = kc.ScalarField(CH12, lambda pt: pt.q[0] ** 2)
    gamma = kc.SectionZDep(CH12, gamma_p=lambda q, z: [[0.5], [-0.3]])
    C = kc.GaugeMatrix(lambda q, z: [[-q[0] ** 2, 0.0], [0.0, 0.0]])
    samples = np.array([[0.3, 0.0, 0.0], [0.8, 0.2, -0.4], [1.0, -1.0, 0.5]])
    rep = kc.hj_zdep_residual(h, gamma, C, mode="standard", samples=samples)
    # every correction term vanishes, so the sup is just max |d_q (h on section)|
    assert rep.sup_residual == pytest.approx(max(2 * abs(r[0]) for r in samples), abs=1e-12)


def test_zdep_trace_violation_rejected():
    ex, h = tel()
    entry = ex.sections["zdep-family"]
    gamma = entry.build(dict(entry.defaults))
    bad = kc.GaugeMatrix(lambda q, z: [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(kc.ContractError):
        kc.hj_zdep_residual(h, gamma, bad, mode="evolution", count=10, seed=0)
    with pytest.raises(kc.ContractError):
        kc.hj_zdep_residual(h, gamma, bad, mode="standard", count=10, seed=0)


# -- diagonal solver ---------------------------------------------------------------

def test_solve_diagonal_matches_displayed_standard_and_evolution(rng):
    ex, h = tel()
    entry = ex.sections["zdep-family"]
    P = dict(entry.defaults)
    gamma = entry.build(P)
    for mode in ("standard", "evolution"):
        paper = _paper_tel_C(P, mode)
        for _ in range(20):
            q = list(2.0 * rng.random(1) - 1.0)
            z = list(2.0 * rng.random(2) - 1.0)
            got = kc.solve_diagonal_C(h, gamma, mode, q, z)
            want = np.asarray(paper(q, z), dtype=float)
            assert np.max(np.abs(got - want)) <= 1e-12


def test_solve_diagonal_first_order_model(rng):
    ex = corpus.load("first-order-dissipative")
    h = ex.hamiltonian()
    entry = ex.sections["zdep-family"]
    P = dict(entry.defaults)
    gamma = entry.build(P)
    a, lam = P["a"], P["lambda"]
    for _ in range(20):
        q = list(2.0 * rng.random(1) - 1.0)
        z = list(2.0 * rng.random(2) - 1.0)
        T = a * z[0] + P["rho"]
        X = -a * z[1] + P["sigma"]
        xi = q[0] + lam * T - a * X ** 2
        got = kc.solve_diagonal_C(h, gamma, "evolution", q, z)
        assert got[0, 0] == pytest.approx(-xi / (2 * a), abs=1e-12)
        assert got[1, 1] == pytest.approx(xi / (2 * a), abs=1e-12)


def test_solve_diagonal_hs_family_closed_form(rng):
    ex, h = hs()
    entry = ex.sections["zdep-family"]
    P = dict(entry.defaults)
    gamma = entry.build(P)
    a, mu = P["a"], P["mu"]
    for _ in range(20):
        q = list(2.0 * rng.random(1) - 1.0)
        z = list(2.0 * rng.random(2) - 1.0)
        T = a * z[0] + P["rho"]
        X = -a * z[1] + P["sigma"]
        xi = (2.0 + 4.0 * a * q[0]) * T * T + (2.0 + a) * mu * T
        got = kc.solve_diagonal_C(h, gamma, "evolution", q, z)
        assert got[0, 0] == pytest.approx(-xi / (2 * a), abs=1e-10)
        hval = h(gamma.at(q, z))
        got_st = kc.solve_diagonal_C(h, gamma, "standard", q, z)
        assert got_st[0, 0] == pytest.approx(-0.5 * (hval + xi / a), abs=1e-10)
        assert got_st[1, 1] == pytest.approx(-0.5 * (hval - xi / a), abs=1e-10)


def test_solve_diagonal_zero_residual_zero_hamiltonian():
    h = kc.ScalarField(CH12, lambda pt: 0.0)
    gamma = kc.SectionZDep(CH12, gamma_p=lambda q, z: [[z[0]], [-z[1]]])
    for mode in ("standard", "evolution"):
        C = kc.solve_diagonal_C(h, gamma, mode, [0.4], [0.3, -0.1])
        assert np.max(np.abs(C)) <= 1e-12


def test_solve_diagonal_singular_cases():
    # both diagonal z-derivatives vanish, but the uncorrected residual does not
    h = kc.ScalarField(CH12, lambda pt: pt.q[0] ** 2)
    flat = kc.SectionZDep(CH12, gamma_p=lambda q, z: [[0.1], [0.2]])
    with pytest.raises(kc.NoSolutionError):
        kc.solve_diagonal_C(h, flat, "evolution", [0.5], [0.0, 0.0])
    # consistent degenerate system: minimum-norm split of the trace
    h0 = kc.ScalarField(CH12, lambda pt: 1.0 + 0.0 * pt.q[0])
    C = kc.solve_diagonal_C(h0, flat, "standard", [0.5], [0.0, 0.0])
    assert C[0, 0] == pytest.approx(-0.5) and C[1, 1] == pytest.approx(-0.5)


def test_solve_diagonal_needs_scalar_base():
    chart = kc.ChartSpec(2, 2)
    h = kc.ScalarField(chart, lambda pt: 0.0)
    gamma = kc.SectionZDep(chart, gamma_p=lambda q, z: [[z[0], 0.0], [0.0, z[1]]])
    with pytest.raises(kc.ContractError):
        kc.solve_diagonal_C(h, gamma, "standard", [0.1, 0.2], [0.0, 0.0])


def test_k1_reduction_matches_contact_equation(rng):
    chart = kc.ChartSpec(1, 1)
    h = kc.ScalarField(chart, lambda pt: 0.5 * pt.p[0, 0] ** 2 + pt.q[0] + 0.7 * pt.z[0])
    gamma = kc.SectionZDep(chart, gamma_p=lambda q, z: [[q[0] + 0.2 * z[0]]])
    for _ in range(20):
        q = list(2.0 * rng.random(1) - 1.0)
        z = list(2.0 * rng.random(1) - 1.0)
        C = kc.solve_diagonal_C(h, gamma, "standard", q, z)
        hval = h(gamma.at(q, z))
        assert C[0, 0] == pytest.approx(-hval, abs=1e-14)
        # independent transcription of the scalar contact identity
        w = q[0] + 0.2 * z[0]
        dq_h = w * 1.0 + 1.0          # (dh/dp) dw/dq + dh/dq
        Gamma = 0.7 + w * 0.2         # dh/dz + (dh/dp) dw/dz
        contact = dq_h + Gamma * w - hval * 0.2
        rep = kc.hj_zdep_residual(h, gamma, kc.GaugeMatrix(lambda qq, zz: [[-h(gamma.at(qq, zz))]]),
                                  mode="standard", samples=np.array([q + z]))
        assert rep.sup_residual == pytest.approx(abs(contact), abs=1e-12)


def test_zdep_residual_two_dimensional_base(rng):
    # n = 2, k = 1 with genuine z-dependence satisfying the compatibility
    # condition: gamma_1 = W'(q1) + z, gamma_2 = 0.  Residuals are checked
    # against a hand transcription of the corrected identity.
    chart = kc.ChartSpec(2, 1)
    lam = 0.7

    def W1(x):
        return 0.3 * x ** 3

    def W1p(x):
        return 0.9 * x ** 2

    def W1pp(x):
        return 1.8 * x

    gamma = kc.SectionZDep(chart, gamma_p=lambda q, z: [[W1p(q[0]) + z[0], 0.0 * q[0]]])
    samples = np.column_stack([2 * rng.random(6) - 1, 2 * rng.random(6) - 1,
                               2 * rng.random(6) - 1])
    assert kc.check_max_coisotropic(gamma, samples) <= 1e-12

    h = kc.ScalarField(chart, lambda pt: 0.5 * (pt.p[0, 0] ** 2 + pt.p[0, 1] ** 2)
                       + lam * pt.z[0])
    C = kc.GaugeMatrix(lambda q, z: [[-float(h(gamma.at(q, z)))]])
    for row in samples:
        q, z = row[:2], row[2:]
        g1 = W1p(q[0]) + z[0]
        hval = 0.5 * g1 ** 2 + lam * z[0]
        Gamma = lam + g1
        expected_r1 = abs(g1 * W1pp(q[0]) + Gamma * g1 - hval)
        rep = kc.hj_zdep_residual(h, gamma, C, mode="standard",
                                  samples=np.array([row]))
        assert rep.sup_residual == pytest.approx(expected_r1, abs=1e-12)
        out = kc.gamma_beta(h, gamma, q, z)
        assert out[0] == pytest.approx(Gamma, abs=1e-12)


# -- complete families ----------------------------------------------------------------

def _param_mesh(m=3):
    axes = [np.linspace(-1, 1, m)] * 2
    return np.array(np.meshgrid(*axes)).reshape(2, -1).T


@pytest.mark.parametrize("name", ["telegrapher", "hunter-saxton", "first-order-dissipative"])
@pytest.mark.parametrize("mode", ["standard", "evolution"])
def test_complete_families_pass(name, mode):
    ex = corpus.load(name)
    h = ex.hamiltonian()
    fam = ex.families["complete"]({**ex.defaults, "a": 1.0})
    ver = kc.verify_complete(fam, h, mode, _param_mesh(), count=40, seed=11)
    assert ver.failures == []
    assert ver.sup_residual <= 1e-10
    assert ver.sup_roundtrip <= 1e-12


def test_complete_family_broken_inverse_flagged(rng):
    ex = corpus.load("hunter-saxton")
    h = ex.hamiltonian()
    a = 1.0
    good = ex.families["complete"]({"mu": 3.0, "a": a})

    def bad_inverse(pt):
        out = good.phi_inverse(pt)
        out[1] = float(pt.p[0, 0]) + a * float(pt.z[0])  # sign flipped
        return out

    fam = kc.CompleteSolutionFamily(good.chart, good.phi, good.param_box,
                                    phi_inverse=bad_inverse)
    samples = np.array([[0.2, 0.5, -0.3], [0.1, -1.0, 0.4]])
    ver = kc.verify_complete(fam, h, "evolution", _param_mesh(), base_samples=samples)
    assert ver.failures  # round-trip errors reported per parameter
    zmax = np.max(np.abs(samples[:, 1]))
    assert ver.sup_roundtrip == pytest.approx(2 * a * zmax, abs=1e-12)


def test_verify_complete_workers_agree():
    ex = corpus.load("telegrapher")
    h = ex.hamiltonian()
    fam = ex.families["complete"]({**ex.defaults, "a": 1.0})
    v1 = kc.verify_complete(fam, h, "standard", _param_mesh(), count=20, seed=3, workers=1)
    v2 = kc.verify_complete(fam, h, "standard", _param_mesh(), count=20, seed=3, workers=4)
    assert v1.sup_residual == v2.sup_residual
    assert v1.sup_roundtrip == v2.sup_roundtrip
