"""Canonical field-equation k-vector fields, gauge freedom, and residuals.

The pointwise field equations fix, for a scalar Hamiltonian h,

  * every q-block:        (X_b)^i        = dh/dp_i^b,
  * the momentum traces:  sum_a (X_a)_i^a = -(dh/dq^i + sum_a p_i^a dh/dz^a),
  * the z trace:          sum_a (X_a)^a   = sum p dh/dp - h      (standard)
                                            sum p dh/dp          (evolution).

All remaining components are free; the canonical representative built here
splits each trace equally over the diagonal (1/k each) and zeroes every
off-diagonal block.  The free directions form the gauge kernel, spanned by
:func:`gauge_basis`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, RegularityError, ShapeError
from .fields import ScalarField, check_regularity, grad, invert_fibre_derivative
from .geometry import ChartSpec, DarbouxPoint, KTangent, Tangent
from .grids import BaseMap, GridSpec, SolutionMap, grid_derivative
from .sections import default_box, sample_box

__all__ = [
    "KVectorField",
    "GaugeElement",
    "ResidualGrid",
    "canonical_kvf",
    "kvf_residual",
    "gauge_basis",
    "random_gauge",
    "add_gauge",
    "map_residual",
    "evolution_lift",
    "second_order_residual",
]

MODES = ("standard", "evolution")


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ContractError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass
class KVectorField:
    """A field of k-tangents over the chart.

    ``kind`` records how it was built; for the two canonical kinds the
    residual of the defining equations vanishes identically by
    construction, which the test suite asserts.
    """

    chart: ChartSpec
    at: callable
    kind: str = "custom"
    hamiltonian: ScalarField = None


@dataclass(frozen=True)
class GaugeElement:
    """A k-tangent in the kernel of the structure contraction.

    Components are vertical (zero q-blocks) with traceless diagonal
    momentum and z entries, so adding one to any solution of the field
    equations yields another solution for the same Hamiltonian.
    """

    chart: ChartSpec
    coeffs: KTangent

    def __post_init__(self):
        k, n = self.chart.k, self.chart.n
        if self.coeffs.k != k:
            raise ShapeError("gauge element has wrong number of components")
        p_trace = np.zeros(n)
        z_trace = 0.0
        for a, t in enumerate(self.coeffs.comp):
            if np.max(np.abs(t.q)) > 0.0:
                raise ContractError("gauge elements must have zero q-blocks")
            p_trace += t.p[a]
            z_trace += t.z[a]
        if np.max(np.abs(p_trace)) > 1e-12 or abs(z_trace) > 1e-12:
            raise ContractError("gauge element diagonal traces must vanish")


def canonical_kvf(h: ScalarField, mode: str = "standard") -> KVectorField:
    """Equal-split canonical solution of the pointwise field equations."""
    _check_mode(mode)
    chart = h.chart
    n, k = chart.n, chart.k

    def at(pt: DarbouxPoint) -> KTangent:
        g = grad(h, pt)
        trace_p = -(g.d_q + np.einsum("ai,a->i", pt.p, g.d_z))
        sum_pdp = float(np.sum(pt.p * g.d_p))
        trace_z = sum_pdp - (h(pt) if mode == "standard" else 0.0)
        comps = []
        for a in range(k):
            P = np.zeros((k, n))
            P[a] = trace_p / k
            Z = np.zeros(k)
            Z[a] = trace_z / k
            comps.append(Tangent(g.d_p[a], P, Z))
        return KTangent(comps)

    return KVectorField(chart, at, kind=mode, hamiltonian=h)


def kvf_residual(kvf: KVectorField, h: ScalarField, mode: str, pt: DarbouxPoint):
    """Residual triple (r_q, r_p, r_z) of the pointwise field equations."""
    _check_mode(mode)
    chart = h.chart
    chart.check_point(pt)
    X = kvf.at(pt)
    g = grad(h, pt)
    r_q = max(
        abs(float(X.comp[b].q[i] - g.d_p[b, i]))
        for b in range(chart.k)
        for i in range(chart.n)
    )
    r_p = 0.0
    for i in range(chart.n):
        s = sum(float(X.comp[a].p[a, i]) for a in range(chart.k))
        r_p = max(r_p, abs(s + float(g.d_q[i]) + float(np.dot(pt.p[:, i], g.d_z))))
    sum_pdp = float(np.sum(pt.p * g.d_p))
    rhs = sum_pdp - (h(pt) if mode == "standard" else 0.0)
    r_z = abs(sum(float(X.comp[a].z[a]) for a in range(chart.k)) - rhs)
    return r_q, r_p, r_z


def gauge_basis(chart: ChartSpec, pt: DarbouxPoint = None) -> list:
    """A basis of the gauge kernel at a point ((n+1)(k^2-1) elements).

    In these coordinates the kernel does not depend on the point, so ``pt``
    is accepted only for signature symmetry with :func:`~kcontact.geometry.chi`.
    Construction: one unit insertion per off-diagonal momentum and z slot,
    plus trace-balanced pairs of consecutive diagonal slots.
    """
    n, k = chart.n, chart.k
    out = []

    def element(build):
        kt = KTangent.zero(chart)
        build(kt)
        return GaugeElement(chart, kt)

    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            for i in range(n):
                def ins_p(kt, a=a, b=b, i=i):
                    kt.comp[a].p[b, i] = 1.0
                out.append(element(ins_p))
            def ins_z(kt, a=a, b=b):
                kt.comp[a].z[b] = 1.0
            out.append(element(ins_z))
    for a in range(k - 1):
        for i in range(n):
            def bal_p(kt, a=a, i=i):
                kt.comp[a].p[a, i] = 1.0
                kt.comp[a + 1].p[a + 1, i] = -1.0
            out.append(element(bal_p))
        def bal_z(kt, a=a):
            kt.comp[a].z[a] = 1.0
            kt.comp[a + 1].z[a + 1] = -1.0
        out.append(element(bal_z))
    assert len(out) == (n + 1) * (k * k - 1)
    return out


def random_gauge(chart: ChartSpec, rng, scale: float = 1.0) -> GaugeElement:
    """A random combination of the basis gauge elements."""
    basis = gauge_basis(chart)
    kt = KTangent.zero(chart)
    for g in basis:
        kt = kt + g.coeffs.scale(scale * (2.0 * rng.random() - 1.0))
    return GaugeElement(chart, kt)


def add_gauge(kvf: KVectorField, gauge: GaugeElement) -> KVectorField:
    """The field shifted by a constant gauge element (still a solution)."""
    def at(pt):
        return kvf.at(pt) + gauge.coeffs

    return KVectorField(kvf.chart, at, kind="custom", hamiltonian=kvf.hamiltonian)


@dataclass
class ResidualGrid:
    """Per-node residual triple of the field equations for a candidate map."""

    r_q: np.ndarray
    r_p: np.ndarray
    r_z: np.ndarray

    def max(self) -> float:
        return float(max(np.max(self.r_q), np.max(self.r_p), np.max(self.r_z)))

    def interior_max(self) -> float:
        sl = tuple(slice(1, -1) for _ in self.r_q.shape)
        return float(max(np.max(self.r_q[sl]), np.max(self.r_p[sl]), np.max(self.r_z[sl])))


def map_residual(psi: SolutionMap, h: ScalarField, mode: str = "standard") -> ResidualGrid:
    """Field-equation residuals of a candidate map on every grid node.

    Direction derivatives come from the closed form when the map carries
    one and from grid differences otherwise.
    """
    _check_mode(mode)
    chart = h.chart
    if psi.chart != chart:
        raise ShapeError("solution map chart does not match the Hamiltonian chart")
    n, k = chart.n, chart.k
    dq, dp, dz = psi.derivatives()
    r_q = np.zeros(psi.grid.shape)
    r_p = np.zeros(psi.grid.shape)
    r_z = np.zeros(psi.grid.shape)
    for idx in psi.grid.indices():
        pt = psi.point(idx)
        g = grad(h, pt)
        r_q[idx] = np.max(np.abs(dq[idx] - g.d_p))
        bal = dp[idx].diagonal(axis1=0, axis2=1).T.sum(axis=0)  # sum_a d p_i^a / d t^a
        r_p[idx] = np.max(np.abs(bal + g.d_q + np.einsum("ai,a->i", pt.p, g.d_z)))
        rhs = float(np.sum(pt.p * g.d_p)) - (h(pt) if mode == "standard" else 0.0)
        r_z[idx] = abs(float(np.trace(dz[idx])) - rhs)
    return ResidualGrid(r_q, r_p, r_z)


def evolution_lift(H: ScalarField, X: KVectorField, check_tol: float = 1e-10) -> KVectorField:
    """Canonical lift of a conservative-phase-space field to the full chart.

    ``H`` must not depend on the extra coordinates and ``X`` must solve the
    momentum-sector equations for ``H`` (both verified at every evaluated
    point).  Component a of the lift copies X_a and adds the single z-entry
    sum_i p_i^a (X_a)^i, which kills the a-th structure-form contraction;
    the result solves the evolution field equations for H.
    """
    chart = H.chart
    n, k = chart.n, chart.k

    def at(pt: DarbouxPoint) -> KTangent:
        g = grad(H, pt)
        xt = X.at(pt)
        if np.max(np.abs(g.d_z)) > check_tol:
            raise ContractError("lift input Hamiltonian depends on the extra coordinates")
        defect = 0.0
        for a in range(k):
            defect = max(defect, float(np.max(np.abs(xt.comp[a].q - g.d_p[a]))))
        for i in range(n):
            s = sum(float(xt.comp[a].p[a, i]) for a in range(k))
            defect = max(defect, abs(s + float(g.d_q[i])))
        if defect > check_tol:
            raise ContractError(
                f"input field does not solve the momentum-sector equations (defect {defect:.3e})"
            )
        comps = []
        for a in range(k):
            Z = np.zeros(k)
            Z[a] = float(np.dot(pt.p[a], xt.comp[a].q))
            comps.append(Tangent(xt.comp[a].q.copy(), xt.comp[a].p.copy(), Z))
        return KTangent(comps)

    return KVectorField(chart, at, kind="evolution", hamiltonian=H)


def _affine_z_coefficients(h: ScalarField, rng, samples: int = 50, tol: float = 1e-10):
    """The constant z-gradient of an affine-in-z Hamiltonian (probabilistic check)."""
    chart = h.chart
    box = default_box(chart.dim)
    pts = sample_box(box, samples, rng)
    A = None
    for row in pts:
        pt = DarbouxPoint.from_flat(chart, row)
        if not h.in_domain(pt):
            continue
        g = grad(h, pt)
        if A is None:
            A = g.d_z
        elif np.max(np.abs(g.d_z - A)) > tol:
            raise ContractError("Hamiltonian is not affine in the extra coordinates")
    if A is None:
        raise ContractError("no admissible sample points for the affinity check")
    return A


def second_order_residual(
    h: ScalarField,
    qmap: BaseMap,
    mode: str = "standard",
    rng=None,
    p_init=None,
) -> np.ndarray:
    """Residual of the induced second-order system on a sampled base map.

    Requires ``h`` affine in the extra coordinates (checked on random
    points) and regular.  Momenta are reconstructed from the grid
    derivatives of ``qmap`` by fibre-derivative inversion; the returned
    array has shape ``grid.shape + (n,)``.  The ``mode`` argument selects
    which canonical field supplies the balance term; for an affine
    coupling the two choices agree identically, and the test suite holds
    the implementation to that.
    """
    _check_mode(mode)
    chart = h.chart
    n, k = chart.n, chart.k
    grid = qmap.grid
    if grid.k != k:
        raise ShapeError(f"base grid has {grid.k} directions, chart has k={k}")
    if qmap.d != n:
        raise ShapeError(f"base map has dimension {qmap.d}, chart has n={n}")
    rng = np.random.default_rng(0) if rng is None else rng
    _affine_z_coefficients(h, rng)

    # A closed-form base map lets us pad the grid by two rings, so every
    # difference stencil below is central on the reported nodes; otherwise
    # the one-sided seams cost an order of accuracy near the boundary.
    # Maps that only know their own nodes (integrated flows) refuse the
    # padding evaluation, in which case we fall back to the bare grid.
    pad = 2 if qmap.closed_form is not None else 0
    work, values = grid, qmap.values
    if pad:
        try:
            work = GridSpec(grid.origin - pad * grid.spacing, grid.spacing,
                            [c + 2 * pad for c in grid.counts])
            padded = np.empty(work.shape + (n,))
            for idx in work.indices():
                padded[idx] = np.atleast_1d(np.asarray(qmap.closed_form(work.t(idx)), dtype=float))
            values = padded
        except (ContractError, ValueError, ArithmeticError):
            pad, work, values = 0, grid, qmap.values

    v = np.empty(work.shape + (k, n))
    if qmap.closed_derivative is not None:
        for idx in work.indices():
            v[idx] = np.asarray(qmap.closed_derivative(work.t(idx)), dtype=float)
    else:
        for b in range(k):
            v[..., b, :] = grid_derivative(values, work, b)

    z0 = np.zeros(k)
    P = np.empty(work.shape + (k, n))
    prev = np.zeros((k, n)) if p_init is None else np.asarray(p_init, dtype=float)
    first = next(iter(work.indices()))
    ok, smin = check_regularity(h, DarbouxPoint(values[first], prev, z0))
    if not ok:
        raise RegularityError(
            f"fibre Hessian is singular near the reconstruction start (min singular value {smin:.3e})"
        )
    for idx in work.indices():
        prev = invert_fibre_derivative(h, values[idx], z0, v[idx], prev)
        P[idx] = prev

    div_P = np.zeros(work.shape + (n,))
    for a in range(k):
        div_P += grid_derivative(P[..., a, :], work, a)

    field = canonical_kvf(h, mode)
    out = np.empty(grid.shape + (n,))
    inner = tuple(slice(pad, pad + c) for c in grid.counts)
    div_P = div_P[inner]
    values = values[inner]
    P = P[inner]
    for idx in grid.indices():
        pt = DarbouxPoint(values[idx], P[idx], z0)
        X = field.at(pt)
        balance = np.array([
            sum(float(X.comp[a].p[a, i]) for a in range(k)) for i in range(n)
        ])
        out[idx] = div_P[idx] - balance
    return out
