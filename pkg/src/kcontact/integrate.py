"""Integral sections of commuting direction fields and the solution pipeline.

Integral sections are built by composing one-parameter flows direction by
direction (classic fourth-order one-step integration).  When the component
fields commute the result does not depend on the direction order; the far
corner of every sweep is re-integrated with the directions reversed and
the two endpoints must agree, which turns integrability into a runtime
assertion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual as dm
from .errors import ContractError, DivergenceError, IntegrabilityError, KContactError
from .fields import ScalarField
from .grids import BaseField, BaseMap, GridSpec, SolutionMap
from .hdw import ResidualGrid, map_residual
from .hj import (
    GaugeMatrix,
    diagonal_gauge_matrix,
    hj_classical_zind,
    hj_evolution_zind,
    hj_zdep_residual,
    project_Q,
    project_zdep,
)
from .sections import SectionZInd

__all__ = [
    "commutator_defect",
    "integral_section",
    "lift",
    "end_to_end",
    "EndToEndReport",
    "DEFAULT_TOLERANCES",
]

BLOWUP_GUARD = 1e9
ORDER_TOL = 1e-8
COMMUTATOR_WARN = 1e-6

DEFAULT_TOLERANCES = {
    "hj": 1e-8,
    "residual": 1e-6,
    "order": ORDER_TOL,
    "commutator": COMMUTATOR_WARN,
}


def commutator_defect(f: BaseField, samples) -> float:
    """Max pairwise Lie-bracket norm of the component fields over samples.

    Brackets are assembled from exact (dual-number) Jacobians as
    J_b Z_a - J_a Z_b; a zero value on a region is the integrability
    criterion for the flow composition below.
    """
    worst = 0.0
    for x in np.atleast_2d(np.asarray(samples, dtype=float)):
        vals, jacs = [], []
        for a in range(f.k):
            v, rows = dm.jacobian(lambda y, a=a: list(f.comps[a](y)), list(x))
            vals.append(np.asarray(v, dtype=float))
            jacs.append(np.asarray(rows, dtype=float))
        for a in range(f.k):
            for b in range(a + 1, f.k):
                bracket = jacs[b] @ vals[a] - jacs[a] @ vals[b]
                worst = max(worst, float(np.max(np.abs(bracket))))
    return worst


def _rk4_line(f: BaseField, axis: int, x0: np.ndarray, h: float, cells: int, steps_per_cell: int):
    """Integrate one grid line; yields the state after every cell."""
    dt = h / steps_per_cell
    x = np.asarray(x0, dtype=float)
    for _ in range(cells):
        for _ in range(steps_per_cell):
            k1 = f.eval(axis, x)
            k2 = f.eval(axis, x + 0.5 * dt * k1)
            k3 = f.eval(axis, x + 0.5 * dt * k2)
            k4 = f.eval(axis, x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_GUARD:
                raise DivergenceError(f"flow along direction {axis} exceeded the blow-up guard")
        yield x


def _integrate_path(f: BaseField, x0, legs, steps_per_cell: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    for axis, h, cells in legs:
        if cells == 0:
            continue
        for x in _rk4_line(f, axis, x, h, cells, steps_per_cell):
            pass
    return x


def integral_section(
    f: BaseField,
    start,
    grid: GridSpec,
    steps_per_cell: int = 4,
    order_tol: float = ORDER_TOL,
) -> BaseMap:
    """Integral section of ``f`` over ``grid`` starting from ``start``.

    Directions are swept in index order; the far corner is recomputed with
    the directions reversed and both endpoints must agree within
    ``order_tol`` (:class:`IntegrabilityError` otherwise).  A commutator
    defect above the advisory threshold is recorded in the output notes,
    not fatal.
    """
    k = grid.k
    if f.k != k:
        raise ContractError(f"field has {f.k} components, grid has {k} directions")
    start = np.asarray(start, dtype=float)
    if start.shape != (f.dim,):
        raise ContractError(f"start point has shape {start.shape}, field lives on dimension {f.dim}")
    notes = []
    defect = commutator_defect(f, [start])
    if defect > COMMUTATOR_WARN:
        notes.append(f"commutator defect {defect:.3e} above {COMMUTATOR_WARN:.1e} at the start point")
    else:
        notes.append(f"commutator defect {defect:.3e} at the start point")

    values = np.empty(grid.shape + (f.dim,))
    values[(0,) * k] = start
    for axis in range(k):
        prefix_shape = grid.counts[:axis]
        h = grid.spacing[axis]
        cells = grid.counts[axis] - 1
        for pre in np.ndindex(*prefix_shape):
            base_idx = pre + (0,) * (k - axis)
            x = values[base_idx]
            for step, xn in enumerate(_rk4_line(f, axis, x, h, cells, steps_per_cell), start=1):
                values[pre + (step,) + (0,) * (k - axis - 1)] = xn

    forward_legs = [(a, grid.spacing[a], grid.counts[a] - 1) for a in range(k)]
    corner_fwd = values[tuple(c - 1 for c in grid.counts)]
    corner_rev = _integrate_path(f, start, forward_legs[::-1], steps_per_cell)
    gap = float(np.max(np.abs(corner_fwd - corner_rev)))
    if gap > order_tol:
        raise IntegrabilityError(
            f"direction-order check failed: corner endpoints differ by {gap:.3e}"
        )
    notes.append(f"direction-order corner agreement {gap:.3e}")

    # Node values satisfy the flow equations, so the field itself provides
    # the direction derivatives at grid nodes (no difference stencils).
    def node_of(t):
        idx = tuple(int(round((t[d] - grid.origin[d]) / grid.spacing[d])) for d in range(k))
        if any(i < 0 or i >= grid.counts[d] for d, i in enumerate(idx)):
            raise ContractError("integrated base map is only defined on its grid nodes")
        if float(np.max(np.abs(grid.t(idx) - np.asarray(t, dtype=float)))) > 1e-9:
            raise ContractError("integrated base map is only defined on its grid nodes")
        return idx

    def closed_form(t):
        return values[node_of(t)]

    def closed_derivative(t):
        x = values[node_of(t)]
        return np.stack([f.eval(a, x) for a in range(k)])

    return BaseMap(grid, values, closed_form=closed_form,
                   closed_derivative=closed_derivative, notes=notes)


def lift(gamma, sigma: BaseMap) -> SolutionMap:
    """Compose a base map with a section to get a phase-space candidate map.

    Works for sections over Q (base dimension n) and over Q x R^k (base
    dimension n + k).  Closed-form derivatives are chained through the
    section coefficients exactly when the base map carries them.
    """
    chart = gamma.chart
    n, k = chart.n, chart.k
    grid = sigma.grid

    zind = isinstance(gamma, SectionZInd)
    if zind and sigma.d != n:
        raise ContractError(f"base map dimension {sigma.d} does not match n={n}")
    if not zind and sigma.d != n + k:
        raise ContractError(f"base map dimension {sigma.d} does not match n+k={n + k}")

    q = np.empty(grid.shape + (n,))
    p = np.empty(grid.shape + (k, n))
    z = np.empty(grid.shape + (k,))
    for idx in grid.indices():
        x = sigma.values[idx]
        if zind:
            pt = gamma.at(x)
        else:
            pt = gamma.at(x[:n], x[n:])
        q[idx], p[idx], z[idx] = pt.q, pt.p, pt.z

    closed_form = None
    closed_derivative = None
    if sigma.closed_form is not None:
        if zind:
            def closed_form(t):
                return gamma.at(np.atleast_1d(sigma.closed_form(t)))
        else:
            def closed_form(t):
                x = np.atleast_1d(sigma.closed_form(t))
                return gamma.at(x[:n], x[n:])
        if sigma.closed_derivative is not None:
            def closed_derivative(t):
                x = np.atleast_1d(np.asarray(sigma.closed_form(t), dtype=float))
                dx = np.asarray(sigma.closed_derivative(t), dtype=float).reshape(k, sigma.d)
                if zind:
                    def flat_coeffs(qs):
                        rows = gamma.p_at(qs)
                        return [rows[a][i] for a in range(k) for i in range(n)] + list(gamma.z_at(qs))

                    _, rows = dm.jacobian(flat_coeffs, list(x))
                    J = np.asarray(rows, dtype=float)  # (k*n + k, n)
                    dq = dx
                    dp = np.einsum("ci,bi->bc", J[: k * n], dx).reshape(k, k, n)
                    dz = np.einsum("ci,bi->bc", J[k * n:], dx)
                else:
                    def flat_coeffs(xs):
                        rows = gamma.p_at(xs[:n], xs[n:])
                        return [rows[a][i] for a in range(k) for i in range(n)]

                    _, rows = dm.jacobian(flat_coeffs, list(x))
                    J = np.asarray(rows, dtype=float)  # (k*n, n+k)
                    dq = dx[:, :n]
                    dp = np.einsum("cj,bj->bc", J, dx).reshape(k, k, n)
                    dz = dx[:, n:]
                return dq, dp, dz

    return SolutionMap(chart, grid, q, p, z, closed_form=closed_form,
                       closed_derivative=closed_derivative, notes=list(sigma.notes))


@dataclass
class EndToEndReport:
    """Consolidated outcome of the check -> project -> integrate -> lift -> residual pipeline."""

    mode: str
    passed: bool
    failed_stage: str = None
    hj_report: object = None
    commutator: float = None
    residuals: ResidualGrid = None
    compare_error: float = None
    solution: SolutionMap = None
    notes: list = field(default_factory=list)

    def summary(self) -> dict:
        out = {
            "mode": self.mode,
            "passed": self.passed,
            "failed_stage": self.failed_stage,
            "commutator_defect": self.commutator,
            "notes": list(self.notes),
        }
        if self.hj_report is not None:
            out["hj_sup_residual"] = self.hj_report.sup_residual
            out["hj_samples"] = self.hj_report.sample_count
        if self.residuals is not None:
            out["max_r_q"] = float(np.max(self.residuals.r_q))
            out["max_r_p"] = float(np.max(self.residuals.r_p))
            out["max_r_z"] = float(np.max(self.residuals.r_z))
        if self.compare_error is not None:
            out["compare_error"] = self.compare_error
        return out


def _tagged(stage):
    class _Tag:
        def __enter__(self):
            return None

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, KContactError):
                exc.stage = stage
                exc.args = (f"[stage {stage}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
            return False

    return _Tag()


def end_to_end(
    h: ScalarField,
    gamma,
    mode: str,
    grid: GridSpec,
    start,
    C: GaugeMatrix = None,
    hj_samples=None,
    box=None,
    hj_count: int = 500,
    reference=None,
    tolerances: dict = None,
    steps_per_cell: int = 4,
    seed: int = 0,
) -> EndToEndReport:
    """Full pipeline for one section: residual check, projection, flow
    integration, lift, and field-equation residuals of the lifted map.

    ``reference``, when given, is a closed-form base map (t -> base point)
    compared against the integrated one.  Failures of the residual checks
    produce a FAIL report naming the stage; structural errors raise, with
    the stage recorded on the exception.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    report = EndToEndReport(mode=mode, passed=False)

    zind = isinstance(gamma, SectionZInd)
    with _tagged("hj"):
        if zind:
            if mode == "standard":
                rep = hj_classical_zind(h, gamma, samples=hj_samples, box=box,
                                        count=hj_count, seed=seed)
            else:
                rep = hj_evolution_zind(h, gamma, samples=hj_samples, box=box,
                                        count=hj_count, seed=seed)
        else:
            Cm = C if C is not None else diagonal_gauge_matrix(h, gamma, mode)
            rep = hj_zdep_residual(h, gamma, Cm, mode=mode, samples=hj_samples, box=box,
                                   count=hj_count, seed=seed)
    report.hj_report = rep
    if rep.sup_residual > tol["hj"]:
        report.failed_stage = "hj"
        report.notes.append(
            f"hj residual {rep.sup_residual:.3e} exceeds tolerance {tol['hj']:.1e}"
        )
        return report

    with _tagged("project"):
        if zind:
            base_field = project_Q(h, gamma)
        else:
            Cm = C if C is not None else diagonal_gauge_matrix(h, gamma, mode)
            base_field = project_zdep(h, gamma, Cm)

    with _tagged("integrate"):
        sigma = integral_section(f=base_field, start=start, grid=grid,
                                 steps_per_cell=steps_per_cell, order_tol=tol["order"])
    report.commutator = commutator_defect(base_field, [np.asarray(start, dtype=float)])
    report.notes.extend(sigma.notes)

    with _tagged("lift"):
        psi = lift(gamma, sigma)
    report.solution = psi

    with _tagged("residual"):
        res = map_residual(psi, h, mode=mode)
    report.residuals = res
    if res.max() > tol["residual"]:
        report.failed_stage = "residual"
        report.notes.append(f"map residual {res.max():.3e} exceeds tolerance {tol['residual']:.1e}")
        return report

    if reference is not None:
        err = 0.0
        for idx in grid.indices():
            ref = np.atleast_1d(np.asarray(reference(grid.t(idx)), dtype=float))
            err = max(err, float(np.max(np.abs(sigma.values[idx] - ref))))
        report.compare_error = err

    report.passed = True
    return report
