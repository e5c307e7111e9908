"""Hamilton-Jacobi residual checks for sections of the phase-space bundle.

Four checks are provided, one per combination of section kind and mode:

  * sections over Q (holonomic):  sup |h on section|          (standard)
                                  sup |d_q (h on section)|    (evolution)
  * sections over Q x R^k:        the corrected one-form identity with a
                                  k x k gauge matrix whose trace is
                                  -(h on section) (standard) or 0 (evolution).

"Identically zero" is replaced by sup-norms over declared sample boxes
(default [-1, 1]^dim, 500 points).  The gauge-matrix solver implements the
diagonal two-unknown pattern: the trace fixes the sum of the two diagonal
entries and the uncorrected residual fixes their difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual as dm
from .errors import ContractError, DomainError, NoSolutionError
from .fields import ScalarField, grad
from .geometry import DarbouxPoint
from .grids import BaseField
from .sections import (
    SectionZDep,
    SectionZInd,
    _zdep_jacobians,
    check_holonomic,
    check_max_coisotropic,
    default_box,
    sample_box,
)

__all__ = [
    "HJReport",
    "GaugeMatrix",
    "CompleteSolutionFamily",
    "CompleteVerification",
    "project_Q",
    "project_zdep",
    "hj_classical_zind",
    "hj_evolution_zind",
    "gamma_beta",
    "hj_zdep_residual",
    "solve_diagonal_C",
    "diagonal_gauge_matrix",
    "verify_complete",
]

HOLONOMY_TOL = 1e-10
COISO_TOL = 1e-10
TRACE_TOL_STANDARD = 1e-10
TRACE_TOL_EVOLUTION = 1e-12
DEFAULT_SAMPLES = 500


@dataclass
class HJReport:
    """Outcome of one Hamilton-Jacobi residual sweep."""

    mode: str
    sup_residual: float
    sample_count: int
    worst: list = field(default_factory=list)  # (residual, base point) pairs, largest first
    seed: int = None

    def verdict(self, tol: float) -> str:
        return "PASS" if self.sup_residual <= tol else "FAIL"


@dataclass(frozen=True)
class GaugeMatrix:
    """A k x k matrix of functions on Q x R^k entering the z-dependent check.

    ``fn(q, z)`` returns the matrix ``C`` with ``C[a][b]`` multiplying the
    z^b-derivative of the a-th momentum coefficient row.  The mode's trace
    constraint is verified by :func:`hj_zdep_residual`, not here.
    """

    fn: callable
    label: str = ""

    def __call__(self, q, z):
        return self.fn(q, z)


def _resolve_samples(samples, box, dim, count, seed):
    if samples is not None:
        return np.atleast_2d(np.asarray(samples, dtype=float)), None
    rng = np.random.default_rng(seed)
    return sample_box(box if box is not None else default_box(dim), count, rng), seed


def _top_offenders(values, points, keep=3):
    order = np.argsort(values)[::-1][:keep]
    return [(float(values[i]), tuple(float(x) for x in points[i])) for i in order]


def _section_point_coords(gamma: SectionZInd, q):
    p = gamma.p_at(q)
    flat_p = [p[a][i] for a in range(gamma.chart.k) for i in range(gamma.chart.n)]
    return list(q) + flat_p + list(gamma.z_at(q))


def _h_on_zind(h: ScalarField, gamma: SectionZInd, q):
    from .fields import _point_from_coords

    return h.fn(_point_from_coords(h.chart, _section_point_coords(gamma, q)))


def project_Q(h: ScalarField, gamma: SectionZInd) -> BaseField:
    """The k projected component fields on Q induced by ``h`` along ``gamma``.

    Component a at q is the momentum-gradient row a of ``h`` evaluated on
    the section.  Every solution of the pointwise field equations for
    ``h`` has exactly these q-blocks, so the projection does not depend on
    the representative.
    """
    from .fields import _point_from_coords

    chart = h.chart
    n, k = chart.n, chart.k

    def make_comp(alpha):
        def comp(q):
            qs = list(q)
            if not gamma.in_domain(qs):
                raise DomainError(f"projected field evaluated outside the section domain at {qs}")
            p = gamma.p_at(qs)
            z = gamma.z_at(qs)
            flat_p = [p[a][i] for a in range(k) for i in range(n)]

            def hp(ps):
                return h.fn(_point_from_coords(chart, qs + list(ps) + z))

            _, gp = dm.derive1(hp, flat_p)
            return gp[alpha * n:(alpha + 1) * n]

        return comp

    return BaseField(dim=n, comps=[make_comp(a) for a in range(k)])


def hj_classical_zind(
    h: ScalarField,
    gamma: SectionZInd,
    samples=None,
    box=None,
    count: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> HJReport:
    """sup |h on section| over the samples (section must be holonomic)."""
    pts, seed = _resolve_samples(samples, box, h.chart.n, count, seed)
    defect = check_holonomic(gamma, pts)
    if defect > HOLONOMY_TOL:
        raise ContractError(f"section is not holonomic (defect {defect:.3e})")
    vals, used = [], []
    for q in pts:
        if not gamma.in_domain(q):
            continue
        vals.append(abs(float(_h_on_zind(h, gamma, list(q)))))
        used.append(q)
    if not used:
        raise ContractError("no admissible sample points inside the section domain")
    vals = np.asarray(vals)
    return HJReport("classical-zind", float(np.max(vals)), len(used), _top_offenders(vals, used), seed)


def hj_evolution_zind(
    h: ScalarField,
    gamma: SectionZInd,
    samples=None,
    box=None,
    count: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> HJReport:
    """sup-norm of the exact q-gradient of (h on section) over the samples."""
    pts, seed = _resolve_samples(samples, box, h.chart.n, count, seed)
    defect = check_holonomic(gamma, pts)
    if defect > HOLONOMY_TOL:
        raise ContractError(f"section is not holonomic (defect {defect:.3e})")
    vals, used = [], []
    for q in pts:
        if not gamma.in_domain(q):
            continue
        _, g = dm.derive1(lambda qs: _h_on_zind(h, gamma, qs), list(q))
        vals.append(max(abs(float(x)) for x in g))
        used.append(q)
    if not used:
        raise ContractError("no admissible sample points inside the section domain")
    vals = np.asarray(vals)
    return HJReport("evolution-zind", float(np.max(vals)), len(used), _top_offenders(vals, used), seed)


def gamma_beta(h: ScalarField, gamma: SectionZDep, q, z) -> np.ndarray:
    """Derivative of h along the section images of the z-coordinate fields.

    Component b is (dh/dz^b on the section) plus the momentum gradient of
    h contracted with the z^b-derivatives of the section coefficients.
    """
    pt = gamma.at(q, z)
    g = grad(h, pt)
    _, _, dz = _zdep_jacobians(gamma, q, z)
    k = gamma.chart.k
    return np.array([
        float(g.d_z[b]) + float(np.sum(g.d_p * dz[:, :, b])) for b in range(k)
    ])


def _zdep_ingredients(h: ScalarField, gamma: SectionZDep, q, z):
    """Shared pieces of the z-dependent identity at one base point.

    Returns (h value on section, d_q(h on section), Gamma, section
    coefficients, z-Jacobian of the coefficients); everything is
    dual-capable in (q, z).
    """
    from .fields import _point_from_coords

    chart = gamma.chart
    n, k = chart.n, chart.k
    qs, zs = list(q), list(z)

    def composite(qvars):
        p = gamma.p_at(qvars, zs)
        flat = [p[a][i] for a in range(k) for i in range(n)]
        return h.fn(_point_from_coords(chart, list(qvars) + flat + zs))

    hval, dq_h = dm.derive1(composite, qs)

    p = gamma.p_at(qs, zs)

    def flat_p(vars_):
        rows = gamma.p_at(vars_[:n], vars_[n:])
        return [rows[a][i] for a in range(k) for i in range(n)]

    _, rows = dm.jacobian(flat_p, qs + zs)
    dz_p = [[[rows[a * n + i][n + b] for b in range(k)] for i in range(n)] for a in range(k)]

    flat = [p[a][i] for a in range(k) for i in range(n)]

    def hp(ps):
        return h.fn(_point_from_coords(chart, qs + list(ps) + zs))

    _, gp = dm.derive1(hp, flat)
    U = [[gp[a * n + i] for i in range(n)] for a in range(k)]

    def hz(zvars):
        return h.fn(_point_from_coords(chart, qs + flat + list(zvars)))

    _, gz = dm.derive1(hz, zs)

    Gamma = []
    for b in range(k):
        acc = gz[b]
        for a in range(k):
            for i in range(n):
                acc = acc + U[a][i] * dz_p[a][i][b]
        Gamma.append(acc)
    return hval, dq_h, Gamma, p, dz_p


def _zdep_residual_at(h, gamma, C_entries, q, z):
    """Max over j of the z-dependent identity residual at one base point."""
    n, k = gamma.chart.n, gamma.chart.k
    hval, dq_h, Gamma, p, dz_p = _zdep_ingredients(h, gamma, q, z)
    worst = 0.0
    for j in range(n):
        acc = dq_h[j]
        for b in range(k):
            acc = acc + Gamma[b] * p[b][j]
        for a in range(k):
            for b in range(k):
                acc = acc + C_entries[a][b] * dz_p[a][j][b]
        worst = max(worst, abs(float(acc)))
    return worst, float(hval)


def hj_zdep_residual(
    h: ScalarField,
    gamma: SectionZDep,
    C: GaugeMatrix,
    mode: str = "standard",
    samples=None,
    box=None,
    count: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> HJReport:
    """sup residual of the z-dependent identity with the supplied gauge matrix.

    Preconditions: the section satisfies the symmetric compatibility
    condition, and the trace of ``C`` matches the mode (-(h on section)
    for standard, 0 for evolution) at every sample.
    """
    if mode not in ("standard", "evolution"):
        raise ContractError(f"unknown mode {mode!r}")
    chart = gamma.chart
    n, k = chart.n, chart.k
    pts, seed = _resolve_samples(samples, box, n + k, count, seed)
    defect = check_max_coisotropic(gamma, pts)
    if defect > COISO_TOL:
        raise ContractError(f"section is not maximally coisotropic (defect {defect:.3e})")
    vals, used = [], []
    for row in pts:
        q, z = row[:n], row[n:]
        if not gamma.in_domain(q, z):
            continue
        Cm = np.asarray(C(q, z), dtype=float)
        if Cm.shape != (k, k):
            raise ContractError(f"gauge matrix has shape {Cm.shape}, expected {(k, k)}")
        res, hval = _zdep_residual_at(h, gamma, Cm, q, z)
        tr = float(np.trace(Cm))
        where = tuple(round(float(x), 6) for x in row)
        if mode == "standard":
            if abs(tr + hval) > TRACE_TOL_STANDARD:
                raise ContractError(
                    f"gauge matrix trace {tr:.6e} != -(h on section) {-hval:.6e} at {where}"
                )
        else:
            if abs(tr) > TRACE_TOL_EVOLUTION:
                raise ContractError(f"gauge matrix trace {tr:.6e} != 0 at {where}")
        vals.append(res)
        used.append(row)
    if not used:
        raise ContractError("no admissible sample points inside the section domain")
    vals = np.asarray(vals)
    return HJReport(f"{'classical' if mode == 'standard' else 'evolution'}-zdep",
                    float(np.max(vals)), len(used), _top_offenders(vals, used), seed)


def _diag_C_generic(h: ScalarField, gamma: SectionZDep, mode: str, q, z):
    """Diagonal gauge-matrix entries at one base point, dual-capable for k <= 2."""
    chart = gamma.chart
    n, k = chart.n, chart.k
    if n != 1:
        raise ContractError("the diagonal gauge-matrix solver covers the n = 1 regime only")
    hval, dq_h, Gamma, p, dz_p = _zdep_ingredients(h, gamma, q, z)
    s = -hval if mode == "standard" else 0.0
    if k == 1:
        return [s]
    xi = dq_h[0]
    for b in range(k):
        xi = xi + Gamma[b] * p[b][0]
    d = [dz_p[a][0][a] for a in range(k)]
    scale = max(1.0, abs(float(xi)), max(abs(float(x)) for x in d))
    if k == 2:
        det = d[0] - d[1]
        if abs(float(det)) <= 1e-12 * scale:
            if abs(float(s * d[0] + xi)) <= 1e-9 * scale:
                return [s * 0.5, s * 0.5]
            raise NoSolutionError(
                "diagonal gauge-matrix system is singular and inconsistent at this point"
            )
        c0 = (-xi - s * d[1]) / det
        return [c0, s - c0]
    # k >= 3: underdetermined; return the minimum-norm solution numerically.
    M = np.vstack([np.array([float(x) for x in d]), np.ones(k)])
    rhs = np.array([-float(xi), float(s)])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.max(np.abs(M @ sol - rhs)) > 1e-9 * scale:
        raise NoSolutionError("diagonal gauge-matrix system has no solution at this point")
    return list(sol)


def solve_diagonal_C(h: ScalarField, gamma: SectionZDep, mode: str, q, z) -> np.ndarray:
    """Diagonal gauge matrix solving the z-dependent identity at one point.

    The mode's trace constraint fixes the sum of the diagonal entries and
    the uncorrected residual fixes the rest (a two-unknown linear solve
    for k = 2, trace-only for k = 1, minimum-norm for k >= 3).
    """
    entries = _diag_C_generic(h, gamma, mode, q, z)
    return np.diag([float(c) for c in entries])


def diagonal_gauge_matrix(h: ScalarField, gamma: SectionZDep, mode: str) -> GaugeMatrix:
    """Gauge matrix backed by the pointwise diagonal solver (dual-capable)."""

    def fn(q, z):
        entries = _diag_C_generic(h, gamma, mode, q, z)
        k = gamma.chart.k
        return [[entries[a] if a == b else 0.0 for b in range(k)] for a in range(k)]

    return GaugeMatrix(fn, label=f"diagonal-{mode}")


def project_zdep(h: ScalarField, gamma: SectionZDep, C: GaugeMatrix) -> BaseField:
    """The projected representative on Q x R^k selected by the gauge matrix.

    Component a has q-blocks equal to the momentum-gradient row a of h on
    the section and z-blocks ``sum_j gamma_j^b U_a^j + C_a^b``; integrating
    it and composing with the section reproduces candidate solutions of
    the field equations.
    """
    from .fields import _point_from_coords

    chart = gamma.chart
    n, k = chart.n, chart.k

    def make_comp(alpha):
        def comp(x):
            qs, zs = list(x[:n]), list(x[n:])
            if not gamma.in_domain(qs, zs):
                raise DomainError(
                    f"projected field evaluated outside the section domain at {qs}, {zs}"
                )
            p = gamma.p_at(qs, zs)
            flat = [p[a][i] for a in range(k) for i in range(n)]

            def hp(ps):
                return h.fn(_point_from_coords(chart, qs + list(ps) + zs))

            _, gp = dm.derive1(hp, flat)
            U = [gp[alpha * n + i] for i in range(n)]
            Cm = C(qs, zs)
            zblocks = []
            for b in range(k):
                acc = Cm[alpha][b]
                for j in range(n):
                    acc = acc + p[b][j] * U[j]
                zblocks.append(acc)
            return list(U) + zblocks

        return comp

    return BaseField(dim=n + k, comps=[make_comp(a) for a in range(k)])


@dataclass(frozen=True)
class CompleteSolutionFamily:
    """A parameterised family of z-dependent sections forming a bundle chart.

    ``phi(q, lam, z)`` returns the phase-space point; ``phi_inverse``,
    when given, maps a point back to ``(q, lam, z)`` flat coordinates.
    ``param_box`` bounds the admissible parameters (one (lo, hi) pair per
    parameter; the z-dependent definition needs k*n of them).
    """

    chart: object
    phi: callable
    param_box: tuple
    phi_inverse: callable = None
    name: str = ""

    @property
    def param_dim(self) -> int:
        return len(self.param_box)

    def section_of(self, lam) -> SectionZDep:
        lam = list(lam)

        def gamma_p(q, z):
            return self.phi(q, lam, z).p

        return SectionZDep(self.chart, gamma_p=gamma_p, name=f"{self.name}[{lam}]")


@dataclass
class CompleteVerification:
    """Aggregate of per-parameter Hamilton-Jacobi sweeps plus invertibility."""

    mode: str
    sup_residual: float
    sup_roundtrip: float
    param_count: int
    sample_count: int
    failures: list
    reports: list

    def passed(self, res_tol: float, rt_tol: float = 1e-12) -> bool:
        return not self.failures and self.sup_residual <= res_tol and self.sup_roundtrip <= rt_tol


def verify_complete(
    family: CompleteSolutionFamily,
    h: ScalarField,
    mode: str,
    params,
    base_samples=None,
    box=None,
    count: int = DEFAULT_SAMPLES,
    seed: int = 0,
    res_tol: float = 1e-10,
    rt_tol: float = 1e-12,
    workers: int = 1,
) -> CompleteVerification:
    """Check every parameter slice of a candidate complete solution.

    Each slice runs the z-dependent residual with the diagonal solver; the
    supplied inverse is round-trip-checked on the same base samples.
    ``params`` is an array of parameter tuples (one row per slice); slices
    are independent, so ``workers`` > 1 spreads them over a thread pool.
    """
    chart = family.chart
    n, k = chart.n, chart.k
    if family.param_dim != k * n:
        raise ContractError(
            f"a complete family over the extended base needs k*n = {k * n} parameters, "
            f"this one declares {family.param_dim}"
        )
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[1] != family.param_dim:
        raise ContractError(
            f"family takes {family.param_dim} parameters, got rows of length {params.shape[1]}"
        )
    pts, seed = _resolve_samples(base_samples, box, n + k, count, seed)

    def verify_one(lam):
        gamma = family.section_of(lam)
        try:
            C = diagonal_gauge_matrix(h, gamma, mode)
            rep = hj_zdep_residual(h, gamma, C, mode=mode, samples=pts)
        except (ContractError, NoSolutionError) as exc:
            return tuple(lam), None, 0.0, [(tuple(lam), str(exc))]
        bad = []
        rt = 0.0
        for row in pts:
            q, z = row[:n], row[n:]
            pt = family.phi(list(q), list(lam), list(z))
            pt = DarbouxPoint(
                np.asarray(pt.q, dtype=float),
                np.asarray(pt.p, dtype=float),
                np.asarray(pt.z, dtype=float),
            )
            sect = max(float(np.max(np.abs(pt.q - q))), float(np.max(np.abs(pt.z - z))))
            if sect > 1e-12:
                bad.append((tuple(lam), f"family is not a section at {tuple(row)}"))
                break
            if family.phi_inverse is not None:
                back = np.asarray(family.phi_inverse(pt), dtype=float)
                rt = max(rt, float(np.max(np.abs(back - np.concatenate([q, lam, z])))))
        if rep.sup_residual > res_tol:
            bad.append((tuple(lam), f"sup residual {rep.sup_residual:.3e} > {res_tol:.1e}"))
        if rt > rt_tol:
            bad.append((tuple(lam), f"inverse round-trip error {rt:.3e} > {rt_tol:.1e}"))
        return tuple(lam), rep, rt, bad

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(verify_one, params))
    else:
        results = [verify_one(lam) for lam in params]

    sup_res, sup_rt = 0.0, 0.0
    failures, reports = [], []
    for lam, rep, rt, bad in results:
        failures.extend(bad)
        if rep is not None:
            reports.append((lam, rep))
            sup_res = max(sup_res, rep.sup_residual)
            sup_rt = max(sup_rt, rt)
    return CompleteVerification(
        mode=mode,
        sup_residual=sup_res,
        sup_roundtrip=sup_rt,
        param_count=params.shape[0],
        sample_count=len(pts),
        failures=failures,
        reports=reports,
    )
