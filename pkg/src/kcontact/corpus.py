"""Built-in example systems: Hamiltonians, candidate sections (valid and
deliberately broken), closed-form solutions, and expected verdicts.

Closed-form solutions are written as dual-capable maps; their exact
direction derivatives are produced generically by one jacobian pass, so
no derivative formula is transcribed by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual as dm
from .errors import ConfigError, ContractError, ShapeError
from .fields import ScalarField
from .geometry import ChartSpec, DarbouxPoint
from .grids import BaseMap, GridSpec, SolutionMap, grid_derivative, grid_second_derivative
from .hj import CompleteSolutionFamily, GaugeMatrix
from .sections import SectionZDep, from_potentials

__all__ = [
    "ExampleSystem",
    "SectionEntry",
    "SolutionEntry",
    "ExpectedCase",
    "EXAMPLE_NAMES",
    "load",
    "analytic",
    "solution_modes",
    "closed_solution_map",
    "closed_base_map",
    "telegrapher_params_from_line",
    "telegrapher_quadratic_roots",
    "thermo_chart",
    "thermo_balance_residual",
    "ThermoFields",
    "ThermoResiduals",
]

EXAMPLE_NAMES = (
    "telegrapher",
    "telegrapher-quadratic-z",
    "hunter-saxton",
    "first-order-dissipative",
    "membrane",
    "thermo-eit",
)


@dataclass(frozen=True)
class SectionEntry:
    key: str
    kind: str  # "zind" | "zdep"
    build: callable  # params -> SectionZInd | SectionZDep
    defaults: dict
    modes: tuple  # modes whose HJ check the section passes with default params
    gauge: callable = None  # params -> GaugeMatrix (z-dependent sections only)
    box: tuple = None  # default sampling box for the HJ check
    sim: dict = None  # default simulate plan: origin/spacing/counts/start/reference
    note: str = ""


@dataclass(frozen=True)
class SolutionEntry:
    key: str
    build: callable  # params -> (f, df) closed-form map over the grid variables
    defaults: dict
    modes: tuple  # modes whose map residual the solution passes
    constraint: callable  # params -> None, raises ContractError naming the equation
    default_grid: callable  # params -> GridSpec
    tol: float = 1e-10
    note: str = ""


@dataclass(frozen=True)
class ExpectedCase:
    """One corpus-shipped check with its expected outcome.

    ``verdict`` is PASS, FAIL, or error:<exit code> for runs that must
    abort (3 = contract violation, 5 = failed direction-order check).
    ``simulate`` cases name either a section (pipeline run) or a solution
    (closed-form sampling run).
    """

    command: str  # "check-hj" | "simulate"
    section: str
    mode: str
    verdict: str
    solution: str = None
    note: str = ""


@dataclass(frozen=True)
class ExampleSystem:
    name: str
    chart: ChartSpec
    make_h: callable  # params -> ScalarField
    defaults: dict
    sections: dict = field(default_factory=dict)
    solutions: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)  # key -> params -> CompleteSolutionFamily
    pde_residual: callable = None  # (fields dict, grid, params) -> residual grid
    expected: tuple = ()
    note: str = ""

    def resolve(self, overrides=None) -> dict:
        params = dict(self.defaults)
        for k, v in (overrides or {}).items():
            if k not in params:
                raise ConfigError(f"unknown parameter {k!r} for example {self.name}; "
                                  f"known: {sorted(params)}")
            params[k] = v
        return params

    def hamiltonian(self, overrides=None) -> ScalarField:
        return self.make_h(self.resolve(overrides))


# --------------------------------------------------------------------------
# generic closed-form plumbing
# --------------------------------------------------------------------------

def closed_solution_map(chart: ChartSpec, grid: GridSpec, f) -> SolutionMap:
    """Sample a dual-capable closed map and attach exact derivatives.

    ``f(t)`` returns (q-list, p-rows, z-list) for ``t`` a list of the k
    grid variables (possibly dual numbers).
    """
    n, k = chart.n, chart.k

    def as_point(t):
        q, p, z = f(list(t))
        return DarbouxPoint(
            np.array([float(v) for v in q]),
            np.array([[float(v) for v in row] for row in p]),
            np.array([float(v) for v in z]),
        )

    def flat(t):
        q, p, z = f(list(t))
        return list(q) + [p[a][i] for a in range(k) for i in range(n)] + list(z)

    def derivative(t):
        _, rows = dm.jacobian(flat, [float(v) for v in t])
        J = np.array(rows, dtype=float)  # (n + k n + k, k); column = direction
        dq = J[:n].T
        dp = np.transpose(J[n:n + k * n].reshape(k, n, k), (2, 0, 1))
        dz = J[n + k * n:].T
        return dq, dp, dz

    return SolutionMap.from_function(chart, grid, as_point, derivative)


def closed_base_map(grid: GridSpec, f, d: int) -> BaseMap:
    """Sample a dual-capable closed base map with exact derivatives."""

    def func(t):
        return np.array([float(v) for v in f(list(t))], dtype=float)

    def derivative(t):
        _, rows = dm.jacobian(lambda ts: list(f(ts)), [float(v) for v in t])
        return np.array(rows, dtype=float).T  # (k, d)

    return BaseMap.from_function(grid, func, derivative, d=d)


def _default_grid(origin, spacing, counts):
    return lambda params: GridSpec(origin, spacing, counts)


def _monotone_invert(g, w, r_max: float = 1.0, tol: float = 1e-14, max_expand: int = 200):
    """Solve g(r) = w for r > 0, g strictly monotone; dual-capable in ``w``.

    First derivatives propagate through the inverse-function rule; nested
    duals are not supported here.
    """
    if isinstance(w, dm.Dual):
        if isinstance(w.a, dm.Dual):
            raise NotImplementedError("monotone inversion supports one dual level")
        r0 = _monotone_invert(g, w.a, r_max=r_max, tol=tol)
        _, slope = dm.derive1(lambda rs: g(rs[0]), [r0])
        return dm.Dual(r0, tuple(x / slope[0] for x in w.b), w.lev)
    w = float(w)
    lo, hi = 1e-300, r_max
    for _ in range(max_expand):
        glo, ghi = g(lo), g(hi)
        if (glo - w) * (ghi - w) <= 0.0:
            break
        hi *= 2.0
    else:
        raise ContractError("monotone inversion could not bracket the target value")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (g(lo) - w) * (gm - w) <= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# telegrapher
# --------------------------------------------------------------------------

CHART_12 = ChartSpec(n=1, k=2)


def telegrapher_params_from_line(R: float, L: float, G: float, C_cap: float):
    """Line constants per unit length -> (kappa, lambda, epsilon)."""
    if L <= 0.0 or C_cap <= 0.0:
        raise ContractError("series inductance and shunt capacitance must be positive")
    if R < 0.0 or G < 0.0:
        raise ContractError("series resistance and shunt conductance must be non-negative")
    kappa = 1.0 / (L * C_cap)
    lam = R / L + G / C_cap
    eps = (R * G) / (L * C_cap)
    return kappa, lam, eps


def telegrapher_quadratic_roots(kappa: float, lam: float, eps: float, c: float):
    """Both roots of (c^2 - 1/kappa) a^2 + lambda c a + eps = 0."""
    A = c * c - 1.0 / kappa
    if A == 0.0:
        raise ContractError("the slope quadratic degenerates when c^2 equals 1/kappa")
    disc = (lam * c) ** 2 - 4.0 * A * eps
    if disc < 0.0:
        raise ContractError("the slope quadratic has no real roots for these parameters")
    r = np.sqrt(disc)
    return ((-lam * c + r) / (2.0 * A), (-lam * c - r) / (2.0 * A))


def _h_telegrapher(P):
    kappa, lam, eps = P["kappa"], P["lambda"], P["epsilon"]

    def fn(pt):
        u = pt.q[0]
        pt_, px = pt.p[0, 0], pt.p[1, 0]
        return 0.5 * (pt_ * pt_ - px * px / kappa) + 0.5 * eps * u * u + lam * pt.z[0]

    return ScalarField(CHART_12, fn, params=dict(P), name="telegrapher")


def _tel_resolve_a(P):
    a = P.get("a")
    if a is None:
        a = telegrapher_quadratic_roots(P["kappa"], P["lambda"], P["epsilon"], P["c"])[1]
    return float(a)


def _tel_zind_section(P):
    a, c, C0, C1 = _tel_resolve_a(P), P["c"], P["C0"], P["C1"]

    def W(q):
        u = q[0]
        return [0.5 * c * a * u * u + c * C1 + C0, 0.5 * a * u * u + C1]

    return from_potentials(CHART_12, W, name="telegrapher-zind")


def _tel_zdep_section(P):
    a, lam, mu, nu = P["a"], P["lambda"], P["mu"], P["nu"]

    def gamma_p(q, z):
        u = q[0]
        return [[a * z[0] - lam * u + mu], [-a * z[1] + nu]]

    return SectionZDep(CHART_12, gamma_p, name="telegrapher-zdep")


def _tel_family(P):
    a, lam = P["a"], P["lambda"]

    def phi(q, par, z):
        u = q[0]
        return DarbouxPoint(
            [u], [[a * z[0] - lam * u + par[0]], [-a * z[1] + par[1]]], list(z)
        )

    def phi_inverse(pt):
        u = float(pt.q[0])
        return [u, float(pt.p[0, 0]) - a * float(pt.z[0]) + lam * u,
                float(pt.p[1, 0]) + a * float(pt.z[1]), float(pt.z[0]), float(pt.z[1])]

    return CompleteSolutionFamily(CHART_12, phi, ((-1.0, 1.0), (-1.0, 1.0)),
                                  phi_inverse=phi_inverse, name="telegrapher-complete")


def _tel_exponential(P):
    kappa, c, u0, C0, C1 = P["kappa"], P["c"], P["u0"], P["C0"], P["C1"]
    a = _tel_resolve_a(P)

    def f(t):
        u = u0 * dm.exp(a * (c * t[0] - t[1] / kappa))
        return (
            [u],
            [[c * a * u], [a * u]],
            [0.5 * c * a * u * u + c * C1 + C0, 0.5 * a * u * u + C1],
        )

    return f


def _tel_exp_constraint(P):
    a = _tel_resolve_a(P)
    kappa, lam, eps, c = P["kappa"], P["lambda"], P["epsilon"], P["c"]
    val = (c * c - 1.0 / kappa) * a * a + lam * c * a + eps
    if abs(val) > 1e-10 * max(1.0, abs(a)):
        raise ContractError(
            f"slope a={a} violates (c^2 - 1/kappa) a^2 + lambda c a + epsilon = 0 "
            f"(residual {val:.3e})"
        )
    if a == 0.0:
        raise ContractError("the exponential profile needs a nonzero slope a")


def _tel_exp_modes(P):
    lam, c, C0, C1 = P["lambda"], P["c"], P["C0"], P["C1"]
    modes = ["evolution"]
    if abs(lam * (c * C1 + C0)) <= 1e-12:
        modes.insert(0, "standard")
    return tuple(modes)


def _tel_pde(fields, grid, P):
    u = fields["u"]
    u_t = grid_derivative(u, grid, 0)
    u_tt = grid_second_derivative(u, grid, 0)
    u_xx = grid_second_derivative(u, grid, 1)
    return u_tt - P["kappa"] * u_xx + P["lambda"] * u_t + P["epsilon"] * u


def _broken_trace_gauge(P):
    return GaugeMatrix(lambda q, z: [[1.0, 0.0], [0.0, 1.0]], label="broken-trace")


TELEGRAPHER = ExampleSystem(
    name="telegrapher",
    chart=CHART_12,
    make_h=_h_telegrapher,
    defaults={"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0},
    sections={
        "classical-zind": SectionEntry(
            "classical-zind", "zind", _tel_zind_section,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "c": 2.0, "a": None, "C0": 0.0, "C1": 0.0},
            modes=("standard", "evolution"),
            box=((0.5, 2.0),),
            sim={"origin": [0.0, 0.0], "spacing": [0.02, 0.02], "counts": [50, 50],
                 "start": [1.0], "reference": "exponential"},
            note="quadratic-slope family; defaults pick the nonzero root and C0 + c*C1 = 0",
        ),
        "classical-zind-wrong-root": SectionEntry(
            "classical-zind-wrong-root", "zind", _tel_zind_section,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "c": 2.0, "a": 2.0 / 3.0, "C0": 0.0, "C1": 0.0},
            modes=(),
            box=((0.5, 2.0),),
            note="sign-flipped slope: not a root of the slope quadratic",
        ),
        "zdep-family": SectionEntry(
            "zdep-family", "zdep", _tel_zdep_section,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "a": 1.0, "mu": 0.0, "nu": 0.0},
            modes=("standard", "evolution"),
        ),
        "zdep-family-broken-trace": SectionEntry(
            "zdep-family-broken-trace", "zdep", _tel_zdep_section,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "a": 1.0, "mu": 0.0, "nu": 0.0},
            modes=(),
            gauge=_broken_trace_gauge,
            note="identity gauge matrix: violates both trace constraints",
        ),
    },
    solutions={
        "exponential": SolutionEntry(
            "exponential", _tel_exponential,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "c": 2.0, "a": None,
             "u0": 1.0, "C0": 0.0, "C1": 0.0},
            modes=("standard", "evolution"),
            constraint=_tel_exp_constraint,
            default_grid=_default_grid([0.0, 0.0], [0.02, 0.02], [50, 50]),
        ),
    },
    families={"complete": _tel_family},
    pde_residual=_tel_pde,
    expected=(
        ExpectedCase("check-hj", "classical-zind", "standard", "PASS"),
        ExpectedCase("check-hj", "classical-zind-wrong-root", "standard", "FAIL"),
        ExpectedCase("check-hj", "classical-zind", "evolution", "PASS"),
        ExpectedCase("check-hj", "zdep-family", "standard", "PASS"),
        ExpectedCase("check-hj", "zdep-family", "evolution", "PASS"),
        ExpectedCase("check-hj", "zdep-family-broken-trace", "standard", "error:3"),
        ExpectedCase("check-hj", "zdep-family-broken-trace", "evolution", "error:3"),
        ExpectedCase("simulate", "classical-zind", "standard", "PASS"),
    ),
    note="damped second-order wave model on one space dimension (k=2)",
)


# --------------------------------------------------------------------------
# telegrapher with quadratic extra-coordinate coupling
# --------------------------------------------------------------------------

def _h_telegrapher_qz(P):
    kappa, lam, eps = P["kappa"], P["lambda"], P["epsilon"]

    def fn(pt):
        u = pt.q[0]
        pt_, px = pt.p[0, 0], pt.p[1, 0]
        return 0.5 * (pt_ * pt_ - px * px / kappa) + 0.5 * eps * u * u + 0.5 * lam * pt.z[0] * pt.z[0]

    return ScalarField(CHART_12, fn, params=dict(P), name="telegrapher-quadratic-z")


def _tel_qz_effective_z(P):
    kappa, lam, eps, c, a = P["kappa"], P["lambda"], P["epsilon"], P["c"], P["a"]
    return -(a * a * (c * c - 1.0 / kappa) + eps) / (lam * a * c)


def _tel_qz_solution(P):
    kappa, lam, eps, c, a, u0 = P["kappa"], P["lambda"], P["epsilon"], P["c"], P["a"], P["u0"]
    mode = P["mode"]
    Z = _tel_qz_effective_z(P)
    drift = a * a * (c * c - 1.0 / kappa)
    if mode == "standard":
        beta = -kappa * (drift - eps) / (4.0 * a)
    else:
        beta = -kappa * drift / (2.0 * a)

    def f(t):
        u = u0 * dm.exp(a * (c * t[0] - t[1] / kappa))
        zx = beta * u * u
        if mode == "standard":
            zx = zx - 0.5 * lam * Z * Z * t[1]
        return ([u], [[a * c * u], [a * u]], [Z + 0.0 * u, zx])

    return f


def _tel_qz_constraint(P):
    if P["lambda"] == 0.0 or P["a"] == 0.0 or P["c"] == 0.0:
        raise ContractError(
            "the effective-damping exponential needs lambda, a, and c nonzero "
            "(the constant extra coordinate solves lambda*Z*a*c = -(a^2 (c^2 - 1/kappa) + epsilon))"
        )
    if P["mode"] not in ("standard", "evolution"):
        raise ContractError("mode parameter must be standard or evolution")


def _tel_qz_modes(P):
    return (P["mode"],)


def _tel_qz_pde(fields, grid, P):
    u, zt = fields["u"], fields["zt"]
    u_t = grid_derivative(u, grid, 0)
    u_tt = grid_second_derivative(u, grid, 0)
    u_xx = grid_second_derivative(u, grid, 1)
    return u_tt - P["kappa"] * u_xx + P["lambda"] * zt * u_t + P["epsilon"] * u


TELEGRAPHER_QZ = ExampleSystem(
    name="telegrapher-quadratic-z",
    chart=CHART_12,
    make_h=_h_telegrapher_qz,
    defaults={"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0},
    solutions={
        "exponential-effective-damping": SolutionEntry(
            "exponential-effective-damping", _tel_qz_solution,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "c": 2.0, "a": -2.0 / 3.0,
             "u0": 1.0, "mode": "standard"},
            modes=("standard",),
            constraint=_tel_qz_constraint,
            default_grid=_default_grid([0.0, 0.0], [0.01, 0.01], [21, 21]),
        ),
        "exponential-effective-damping-evolution": SolutionEntry(
            "exponential-effective-damping-evolution", _tel_qz_solution,
            {"kappa": 1.0, "lambda": 1.0, "epsilon": 0.0, "c": 2.0, "a": -2.0 / 3.0,
             "u0": 1.0, "mode": "evolution"},
            modes=("evolution",),
            constraint=_tel_qz_constraint,
            default_grid=_default_grid([0.0, 0.0], [0.01, 0.01], [21, 21]),
        ),
    },
    pde_residual=_tel_qz_pde,
    expected=(),
    note="quadratic extra-coordinate coupling: damping coefficient becomes a field",
)


# --------------------------------------------------------------------------
# dissipative Hunter-Saxton
# --------------------------------------------------------------------------

def _h_hs(P):
    mu = P["mu"]

    def fn(pt):
        u = pt.q[0]
        pt_, px = pt.p[0, 0], pt.p[1, 0]
        return -2.0 * pt_ * px + 2.0 * u * pt_ * pt_ + mu * pt_ + 2.0 * mu * pt.z[0]

    return ScalarField(CHART_12, fn, params=dict(P), name="hunter-saxton")


def _hs_zind_section(P):
    mu, c, C1, K = P["mu"], P["c"], P["C1"], P["K"]
    if mu == 0.0:
        raise ContractError("the explicit family needs mu != 0")

    def W(q):
        u = q[0]
        return [mu * (u + c) + K / mu,
                mu * u * u + 0.5 * (2.0 * c + 1.0) * mu * u + C1]

    return from_potentials(CHART_12, W, name="hs-zind")


def _hs_log_potentials(mu, c, C1, delta, W_extra):
    """Potentials of the square-root slope family (unit strength), plus an
    optional non-integrable admixture scaled by W_extra."""

    def W(q):
        u = q[0]
        w = delta * (u + c)
        r = dm.sqrt(w)
        Wt = mu * (u + c) + 2.0 * delta * r + delta / mu
        Wx = (mu * u * u + 0.5 * (2.0 * c + 1.0) * mu * u
              + (4.0 / 3.0) * w * r - 2.0 * c * delta * r + C1)
        if W_extra != 0.0:
            Wx = Wx + mu * W_extra * 2.0 * delta * (
                0.5 * w / mu - r / (mu * mu) + dm.log(1.0 + mu * r) / mu ** 3
            )
        return [Wt, Wx]

    return W


def _hs_log_section(P):
    mu, c, C1, delta = P["mu"], P["c"], P["C1"], P["delta"]
    if mu <= 0.0:
        raise ContractError("the square-root slope family needs mu > 0")

    def domain(q):
        return delta * (q[0] + c) > 1e-12

    return from_potentials(CHART_12, _hs_log_potentials(mu, c, C1, delta, 0.0),
                           domain=domain, name="hs-log-zind")


def _hs_noncommuting_section(P):
    mu, c, C1, delta, W_extra = P["mu"], P["c"], P["C1"], P["delta"], P["W"]
    if mu <= 0.0 or W_extra == 0.0:
        raise ContractError("the non-commuting admixture needs mu > 0 and W != 0")

    def domain(q):
        return delta * (q[0] + c) > 1e-12

    return from_potentials(CHART_12, _hs_log_potentials(mu, c, C1, delta, W_extra),
                           domain=domain, name="hs-noncommuting")


def _hs_zdep_section(P):
    a, rho, sigma = P["a"], P["rho"], P["sigma"]

    def gamma_p(q, z):
        return [[a * z[0] + rho], [-a * z[1] + sigma]]

    return SectionZDep(CHART_12, gamma_p, name="hs-zdep")


def _hs_quadratic_section(P):
    mu = P["mu"]

    def gamma_p(q, z):
        return [[0.0 * z[0]], [0.5 * mu - z[0]]]

    return SectionZDep(CHART_12, gamma_p, name="hs-zdep-quadratic")


def _hs_quadratic_gauge(P):
    mu = P["mu"]

    def fn(q, z):
        return [[1.0, -2.0 * z[0] * (0.5 * mu - z[0])], [0.0, -1.0]]

    return GaugeMatrix(fn, label="hs-quadratic-commuting")


def _hs_family(P):
    a = P["a"]

    def phi(q, par, z):
        return DarbouxPoint([q[0]], [[a * z[0] + par[0]], [-a * z[1] + par[1]]], list(z))

    def phi_inverse(pt):
        return [float(pt.q[0]), float(pt.p[0, 0]) - a * float(pt.z[0]),
                float(pt.p[1, 0]) + a * float(pt.z[1]), float(pt.z[0]), float(pt.z[1])]

    return CompleteSolutionFamily(CHART_12, phi, ((-1.0, 1.0), (-1.0, 1.0)),
                                  phi_inverse=phi_inverse, name="hs-complete")


def _hs_linear(P):
    mu, c, C1, K, u0 = P["mu"], P["c"], P["C1"], P["K"], P["u0"]

    def f(t):
        u = u0 - 2.0 * mu * (t[1] + c * t[0])
        return (
            [u],
            [[mu + 0.0 * u], [mu * (2.0 * u + c) + 0.5 * mu]],
            [mu * (u + c) + K / mu, mu * u * u + 0.5 * (2.0 * c + 1.0) * mu * u + C1],
        )

    return f


def _hs_linear_constraint(P):
    if P["mu"] == 0.0:
        raise ContractError("the travelling linear profile needs mu != 0")


def _hs_linear_modes(P):
    return ("standard", "evolution") if P["K"] == 0.0 else ("evolution",)


def _hs_quadratic(P):
    mu, c0, c1, c2 = P["mu"], P["c0"], P["c1"], P["c2"]

    def f(t):
        tt, x = t[0], t[1]
        u = (tt + c1) ** 2 + c0
        return ([u], [[0.0 * u], [0.5 * mu - tt - c1]], [tt + c1, -x + c2])

    return f


def _hs_logarithmic(P):
    mu, c, C1, C, delta = P["mu"], P["c"], P["C1"], P["C"], P["delta"]
    if mu <= 0.0:
        raise ContractError("the logarithmic branch needs mu > 0")

    def G(r):
        return delta * (-0.5 * r * r / mu + r / (mu * mu) - dm.log(1.0 + mu * r) / mu ** 3)

    section = _hs_log_section({"mu": mu, "c": c, "C1": C1, "delta": delta})

    def base(t):
        w = t[1] + c * t[0] + C
        r = _monotone_invert(G, w)
        return [delta * r * r - c]

    return base, section


def _hs_log_constraint(P):
    if P["mu"] <= 0.0:
        raise ContractError("the logarithmic branch needs mu > 0")
    if P["delta"] not in (1.0, -1.0):
        raise ContractError("branch selector delta must be +1 or -1")


def _hs_pde(fields, grid, P):
    u = fields["u"]
    u_t = grid_derivative(u, grid, 0)
    u_x = grid_derivative(u, grid, 1)
    u_tx = grid_derivative(u_t, grid, 1)
    u_xx = grid_second_derivative(u, grid, 1)
    return u_tx + u * u_xx + 0.5 * u_x * u_x + P["mu"] * u_x


HUNTER_SAXTON = ExampleSystem(
    name="hunter-saxton",
    chart=CHART_12,
    make_h=_h_hs,
    defaults={"mu": 3.0},
    sections={
        "standard-zind": SectionEntry(
            "standard-zind", "zind", _hs_zind_section,
            {"mu": 3.0, "c": 0.5, "C1": 0.0, "K": 0.0},
            modes=("standard", "evolution"),
            sim={"origin": [0.0, 0.0], "spacing": [0.05, 0.05], "counts": [9, 9],
                 "start": [0.0], "reference": "linear"},
        ),
        "evolution-zind-K": SectionEntry(
            "evolution-zind-K", "zind", _hs_zind_section,
            {"mu": 3.0, "c": 0.5, "C1": 0.0, "K": 2.0},
            modes=("evolution",),
            sim={"origin": [0.0, 0.0], "spacing": [0.05, 0.05], "counts": [9, 9],
                 "start": [0.0], "reference": "linear"},
            note="nonzero energy offset K: passes the evolution check, fails the standard one",
        ),
        "log-zind": SectionEntry(
            "log-zind", "zind", _hs_log_section,
            {"mu": 3.0, "c": 0.5, "C1": 0.0, "delta": 1.0},
            modes=("standard", "evolution"),
            box=((0.2, 1.8),),
        ),
        "noncommuting-zind": SectionEntry(
            "noncommuting-zind", "zind", _hs_noncommuting_section,
            {"mu": 3.0, "c": 0.5, "C1": 0.0, "delta": 1.0, "W": 1.0},
            modes=("evolution",),
            box=((0.8, 1.6),),
            sim={"origin": [0.0, 0.0], "spacing": [0.01, 0.01], "counts": [9, 9],
                 "start": [1.0]},
            note="passes the evolution check but projects onto non-commuting directions",
        ),
        "zdep-family": SectionEntry(
            "zdep-family", "zdep", _hs_zdep_section,
            {"mu": 3.0, "a": 1.0, "rho": 0.0, "sigma": 0.0},
            modes=("standard", "evolution"),
        ),
        "zdep-quadratic": SectionEntry(
            "zdep-quadratic", "zdep", _hs_quadratic_section,
            {"mu": 3.0},
            modes=("evolution",),
            gauge=_hs_quadratic_gauge,
            sim={"origin": [0.0, 0.0], "spacing": [0.05, 0.05], "counts": [9, 9],
                 "start": [0.0, 0.0, 0.0], "reference": "quadratic"},
            note="z-level section whose commuting representative integrates to a quadratic profile",
        ),
    },
    solutions={
        "linear": SolutionEntry(
            "linear", _hs_linear,
            {"mu": 3.0, "c": 0.5, "C1": 0.0, "K": 0.0, "u0": 0.0},
            modes=("standard", "evolution"),
            constraint=_hs_linear_constraint,
            default_grid=_default_grid([0.0, 0.0], [0.05, 0.05], [9, 9]),
            tol=1e-12,
        ),
        "quadratic": SolutionEntry(
            "quadratic", _hs_quadratic,
            {"mu": 3.0, "c0": 0.0, "c1": 0.0, "c2": 0.0},
            modes=("evolution",),
            constraint=lambda P: None,
            default_grid=_default_grid([0.0, 0.0], [0.05, 0.05], [9, 9]),
            tol=1e-12,
        ),
    },
    families={"complete": _hs_family},
    pde_residual=_hs_pde,
    expected=(
        ExpectedCase("check-hj", "standard-zind", "standard", "PASS"),
        ExpectedCase("check-hj", "evolution-zind-K", "evolution", "PASS"),
        ExpectedCase("check-hj", "evolution-zind-K", "standard", "FAIL"),
        ExpectedCase("check-hj", "log-zind", "evolution", "PASS"),
        ExpectedCase("check-hj", "zdep-family", "standard", "PASS"),
        ExpectedCase("check-hj", "zdep-family", "evolution", "PASS"),
        ExpectedCase("check-hj", "zdep-quadratic", "evolution", "PASS"),
        ExpectedCase("check-hj", "zdep-quadratic", "standard", "error:3"),
        ExpectedCase("check-hj", "noncommuting-zind", "evolution", "PASS"),
        ExpectedCase("simulate", "noncommuting-zind", "evolution", "error:5"),
        ExpectedCase("simulate", "standard-zind", "standard", "PASS"),
        ExpectedCase("simulate", "evolution-zind-K", "evolution", "PASS"),
        ExpectedCase("simulate", "zdep-quadratic", "evolution", "PASS"),
    ),
    note="dissipative nonlinear transport model (k=2); reduces to the classical one for mu=0",
)


# --------------------------------------------------------------------------
# first-order dissipative model
# --------------------------------------------------------------------------

def _h_first_order(P):
    lam = P["lambda"]

    def fn(pt):
        u = pt.q[0]
        px = pt.p[1, 0]
        return 0.5 * (u * u + px * px) + lam * pt.z[0]

    return ScalarField(CHART_12, fn, params=dict(P), name="first-order-dissipative")


def _fo_zdep_section(P):
    a, rho, sigma = P["a"], P["rho"], P["sigma"]

    def gamma_p(q, z):
        return [[a * z[0] + rho], [-a * z[1] + sigma]]

    return SectionZDep(CHART_12, gamma_p, name="first-order-zdep")


def _fo_family(P):
    a = P["a"]

    def phi(q, par, z):
        return DarbouxPoint([q[0]], [[a * z[0] + par[0]], [-a * z[1] + par[1]]], list(z))

    def phi_inverse(pt):
        return [float(pt.q[0]), float(pt.p[0, 0]) - a * float(pt.z[0]),
                float(pt.p[1, 0]) + a * float(pt.z[1]), float(pt.z[0]), float(pt.z[1])]

    return CompleteSolutionFamily(CHART_12, phi, ((-1.0, 1.0), (-1.0, 1.0)),
                                  phi_inverse=phi_inverse, name="first-order-complete")


def _fo_standing(P):
    lam, Z, mode = P["lambda"], P["Z"], P["mode"]

    def f(t):
        x = t[1]
        u = dm.sin(x)
        px = dm.cos(x)
        if mode == "standard":
            zx = 0.25 * dm.sin(2.0 * x) - lam * Z * x
        else:
            zx = 0.5 * x + 0.25 * dm.sin(2.0 * x)
        return ([u], [[0.0 * u], [px]], [Z + 0.0 * u, zx])

    return f


def _fo_standing_constraint(P):
    if P["mode"] not in ("standard", "evolution"):
        raise ContractError("mode parameter must be standard or evolution")


FIRST_ORDER = ExampleSystem(
    name="first-order-dissipative",
    chart=CHART_12,
    make_h=_h_first_order,
    defaults={"lambda": 1.0},
    sections={
        "zdep-family": SectionEntry(
            "zdep-family", "zdep", _fo_zdep_section,
            {"lambda": 1.0, "a": 1.0, "rho": 0.0, "sigma": 0.0},
            modes=("standard", "evolution"),
        ),
    },
    solutions={
        "standing-standard": SolutionEntry(
            "standing-standard", _fo_standing,
            {"lambda": 1.0, "Z": 0.0, "mode": "standard"},
            modes=("standard",),
            constraint=_fo_standing_constraint,
            default_grid=_default_grid([0.0, 0.0], [0.05, 0.05], [9, 9]),
            tol=1e-12,
        ),
        "standing-evolution": SolutionEntry(
            "standing-evolution", _fo_standing,
            {"lambda": 1.0, "Z": 0.0, "mode": "evolution"},
            modes=("evolution",),
            constraint=_fo_standing_constraint,
            default_grid=_default_grid([0.0, 0.0], [0.05, 0.05], [9, 9]),
            tol=1e-12,
        ),
    },
    families={"complete": _fo_family},
    expected=(
        ExpectedCase("check-hj", "zdep-family", "standard", "PASS"),
        ExpectedCase("check-hj", "zdep-family", "evolution", "PASS"),
    ),
    note="momentum p^t never enters the dynamics: the fibre Hessian is singular by design",
)


# --------------------------------------------------------------------------
# damped membrane on an elastic foundation (k = 3)
# --------------------------------------------------------------------------

CHART_13 = ChartSpec(n=1, k=3)


def _h_membrane(P):
    c, kappa, lam = P["c"], P["kappa"], P["lambda"]

    def fn(pt):
        u = pt.q[0]
        pt_, px, py = pt.p[0, 0], pt.p[1, 0], pt.p[2, 0]
        return (0.5 * (pt_ * pt_ - (px * px + py * py) / (c * c))
                + 0.5 * kappa * u * u + lam * pt.z[0])

    return ScalarField(CHART_13, fn, params=dict(P), name="membrane")


def _membrane_growth(P):
    c, kappa, lam, a, b = P["c"], P["kappa"], P["lambda"], P["a"], P["b"]
    disc = lam * lam - 4.0 * (kappa + c * c * (a * a + b * b))
    if disc < 0.0:
        raise ContractError(
            "no real separable growth rate: lambda^2 - 4 (kappa + c^2 (a^2 + b^2)) < 0"
        )
    r = np.sqrt(disc)
    return (-lam + r) / 2.0 if P["branch"] >= 0 else (-lam - r) / 2.0


def _membrane_solution(P):
    c, kappa, lam, a, b, u0 = P["c"], P["kappa"], P["lambda"], P["a"], P["b"], P["u0"]
    mode = P["mode"]
    s = _membrane_growth(P)
    denom = 2.0 * s + lam if mode == "standard" else 2.0 * s
    if denom == 0.0:
        raise ContractError("separable profile needs 2s + lambda != 0 (standard) or s != 0 (evolution)")

    def f(t):
        tt, x, y = t
        Ca, Cb = dm.cos(a * x), dm.cos(b * y)
        Sa, Sb = dm.sin(a * x), dm.sin(b * y)
        E = dm.exp(s * tt)
        u = u0 * E * Ca * Cb
        p_t = s * u
        p_x = c * c * a * u0 * E * Sa * Cb
        p_y = c * c * b * u0 * E * Ca * Sb
        if mode == "standard":
            G = u0 * u0 * (0.5 * (s * s - kappa) * (Ca * Cb) ** 2
                           - 0.5 * c * c * a * a * (Sa * Cb) ** 2
                           - 0.5 * c * c * b * b * (Ca * Sb) ** 2)
        else:
            G = u0 * u0 * (s * s * (Ca * Cb) ** 2
                           - c * c * a * a * (Sa * Cb) ** 2
                           - c * c * b * b * (Ca * Sb) ** 2)
        zt = E * E * G / denom
        zero = 0.0 * u
        return ([u], [[p_t], [p_x], [p_y]], [zt, zero, zero])

    return f


def _membrane_constraint(P):
    s = _membrane_growth(P)
    val = s * s + P["lambda"] * s + P["kappa"] + P["c"] ** 2 * (P["a"] ** 2 + P["b"] ** 2)
    if abs(val) > 1e-10:
        raise ContractError(
            f"growth rate s={s} violates s^2 + lambda s + kappa + c^2 (a^2 + b^2) = 0 "
            f"(residual {val:.3e})"
        )


def _membrane_pde(fields, grid, P):
    u = fields["u"]
    u_t = grid_derivative(u, grid, 0)
    u_tt = grid_second_derivative(u, grid, 0)
    u_xx = grid_second_derivative(u, grid, 1)
    u_yy = grid_second_derivative(u, grid, 2)
    return u_tt - P["c"] ** 2 * (u_xx + u_yy) + P["lambda"] * u_t + P["kappa"] * u


MEMBRANE = ExampleSystem(
    name="membrane",
    chart=CHART_13,
    make_h=_h_membrane,
    defaults={"c": 1.0, "kappa": 1.0, "lambda": 4.0},
    solutions={
        "separable": SolutionEntry(
            "separable", _membrane_solution,
            {"c": 1.0, "kappa": 1.0, "lambda": 4.0, "a": 1.0, "b": 1.0,
             "u0": 0.5, "branch": 1.0, "mode": "standard"},
            modes=("standard",),
            constraint=_membrane_constraint,
            default_grid=_default_grid([0.0, 0.0, 0.0], [0.0005, 0.0005, 0.0005], [9, 9, 9]),
        ),
        "separable-evolution": SolutionEntry(
            "separable-evolution", _membrane_solution,
            {"c": 1.0, "kappa": 1.0, "lambda": 4.0, "a": 1.0, "b": 1.0,
             "u0": 0.5, "branch": 1.0, "mode": "evolution"},
            modes=("evolution",),
            constraint=_membrane_constraint,
            default_grid=_default_grid([0.0, 0.0, 0.0], [0.0005, 0.0005, 0.0005], [9, 9, 9]),
        ),
    },
    pde_residual=_membrane_pde,
    expected=(
        ExpectedCase("simulate", None, "standard", "PASS", solution="separable"),
    ),
    note="overdamped separable mode of a damped membrane on an elastic foundation (k=3)",
)


# --------------------------------------------------------------------------
# covariant balance-law thermodynamic model
# --------------------------------------------------------------------------

def thermo_chart(k: int) -> ChartSpec:
    """Chart packing: q = (xi, beta_1..beta_k, V), p[mu] = (N, -T[., mu], P), z = entropy fluxes."""
    return ChartSpec(n=k + 2, k=k)


def _h_thermo(P):
    k = int(P["k"])
    chart = thermo_chart(k)
    cu, cn, ct, cp = P["u_quad"], P["n_quad"], P["t_quad"], P["p_quad"]

    def fn(pt):
        U = cu * 0.5 * sum(pt.q[i] * pt.q[i] for i in range(k + 2))
        N = [pt.p[m, 0] for m in range(k)]
        T = [[-pt.p[m, 1 + l] for l in range(k)] for m in range(k)]
        Pfl = [pt.p[m, k + 1] for m in range(k)]
        Phi = (cn * 0.5 * sum(x * x for x in N)
               + ct * 0.5 * sum(T[m][l] * T[m][l] for m in range(k) for l in range(k))
               + cp * 0.5 * sum(x * x for x in Pfl))
        return U + Phi

    return ScalarField(chart, fn, params=dict(P), name="thermo-eit")


THERMO = ExampleSystem(
    name="thermo-eit",
    chart=thermo_chart(2),
    make_h=_h_thermo,
    defaults={"k": 2, "u_quad": 0.0, "n_quad": 1.0, "t_quad": 1.0, "p_quad": 1.0},
    expected=(),
    note="balance-law field theory: intensives, fluxes, and entropy fluxes on a k-grid "
         "(verification only; no closed solution family is shipped)",
)


@dataclass
class ThermoFields:
    """Field arrays on a k-dimensional grid for the thermodynamic model.

    Shapes: ``xi``: grid; ``beta``: grid + (k,); ``V``: grid; ``N``: grid + (k,);
    ``T``: grid + (k, k) (first index lambda, second mu); ``P``: grid + (k,);
    ``S``: grid + (k,).
    """

    xi: np.ndarray
    beta: np.ndarray
    V: np.ndarray
    N: np.ndarray
    T: np.ndarray
    P: np.ndarray
    S: np.ndarray


@dataclass
class ThermoResiduals:
    """Finite-difference residual blocks of the thermodynamic field equations."""

    constitutive_xi: np.ndarray  # grid + (k,)
    constitutive_beta: np.ndarray  # grid + (k, k)
    constitutive_V: np.ndarray  # grid + (k,)
    balance_N: np.ndarray  # grid
    balance_T: np.ndarray  # grid + (k,)
    balance_P: np.ndarray  # grid
    entropy_standard: np.ndarray  # grid
    entropy_evolution: np.ndarray  # grid

    def max_constitutive(self) -> float:
        return float(max(np.max(np.abs(self.constitutive_xi)),
                         np.max(np.abs(self.constitutive_beta)),
                         np.max(np.abs(self.constitutive_V))))

    def max_balance(self) -> float:
        return float(max(np.max(np.abs(self.balance_N)),
                         np.max(np.abs(self.balance_T)),
                         np.max(np.abs(self.balance_P))))


def thermo_balance_residual(fields: ThermoFields, U, Phi, grid: GridSpec) -> ThermoResiduals:
    """Residuals of the constitutive, balance, and entropy blocks.

    ``U(xi, beta, V)`` and ``Phi(N, T, P)`` are the two halves of the
    generating Hamiltonian (``beta``, ``N``, ``P`` lists of length k, ``T``
    a k x k nested list); both must be dual-capable.  Field derivatives
    are grid finite differences; potential derivatives are exact.
    """
    k = grid.k
    shp = grid.shape
    if fields.xi.shape != shp or fields.N.shape != shp + (k,) or fields.T.shape != shp + (k, k):
        raise ShapeError("thermo field arrays do not match the grid")

    d_xi = np.stack([grid_derivative(fields.xi, grid, m) for m in range(k)], axis=-1)
    d_beta = np.stack([grid_derivative(fields.beta, grid, m) for m in range(k)], axis=-1)
    d_V = np.stack([grid_derivative(fields.V, grid, m) for m in range(k)], axis=-1)
    div_N = sum(grid_derivative(fields.N[..., m], grid, m) for m in range(k))
    div_T = sum(grid_derivative(fields.T[..., :, m], grid, m) for m in range(k))
    div_P = sum(grid_derivative(fields.P[..., m], grid, m) for m in range(k))
    div_S = sum(grid_derivative(fields.S[..., m], grid, m) for m in range(k))

    c_xi = np.empty(shp + (k,))
    c_beta = np.empty(shp + (k, k))
    c_V = np.empty(shp + (k,))
    b_N = np.empty(shp)
    b_T = np.empty(shp + (k,))
    b_P = np.empty(shp)
    e_std = np.empty(shp)
    e_ev = np.empty(shp)

    for idx in grid.indices():
        xi, V = float(fields.xi[idx]), float(fields.V[idx])
        beta = [float(x) for x in fields.beta[idx]]
        N = [float(x) for x in fields.N[idx]]
        T = [[float(x) for x in row] for row in fields.T[idx]]
        Pfl = [float(x) for x in fields.P[idx]]

        uval, du = dm.derive1(lambda v: U(v[0], v[1:1 + k], v[1 + k]), [xi] + beta + [V])
        dU_xi, dU_beta, dU_V = du[0], du[1:1 + k], du[1 + k]

        def phi_flat(v):
            Nv = v[:k]
            Tv = [[v[k + l * k + m] for m in range(k)] for l in range(k)]
            Pv = v[k + k * k:]
            return Phi(Nv, Tv, Pv)

        flat = N + [T[l][m] for l in range(k) for m in range(k)] + Pfl
        pval, dphi = dm.derive1(phi_flat, flat)
        dPhi_N = dphi[:k]
        dPhi_T = np.array(dphi[k:k + k * k], dtype=float).reshape(k, k)
        dPhi_P = dphi[k + k * k:]

        c_xi[idx] = d_xi[idx] - np.array(dPhi_N, dtype=float)
        c_beta[idx] = d_beta[idx] + dPhi_T  # d beta_l / dx^m + dPhi/dT[l][m]
        c_V[idx] = d_V[idx] - np.array(dPhi_P, dtype=float)
        b_N[idx] = div_N[idx] + dU_xi
        b_T[idx] = div_T[idx] - np.array(dU_beta, dtype=float)
        b_P[idx] = div_P[idx] + dU_V

        source = (sum(N[m] * float(dPhi_N[m]) for m in range(k))
                  + float(np.sum(np.array(T, dtype=float) * dPhi_T))
                  + sum(Pfl[m] * float(dPhi_P[m]) for m in range(k)))
        hval = float(uval) + float(pval)
        e_std[idx] = div_S[idx] - (source - hval)
        e_ev[idx] = div_S[idx] - source

    return ThermoResiduals(c_xi, c_beta, c_V, b_N, b_T, b_P, e_std, e_ev)


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------

_REGISTRY = {
    ex.name: ex
    for ex in (TELEGRAPHER, TELEGRAPHER_QZ, HUNTER_SAXTON, FIRST_ORDER, MEMBRANE, THERMO)
}


def load(name: str) -> ExampleSystem:
    """Look up a built-in example system by key."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f"unknown example {name!r}; valid keys: {', '.join(EXAMPLE_NAMES)}"
        ) from None


def analytic(name: str, solution_key: str, params=None, grid: GridSpec = None) -> SolutionMap:
    """Closed-form solution of a built-in example, sampled with exact derivatives.

    Parameter constraints are checked first; a violation names the
    offending relation.  The special key "logarithmic" of the nonlinear
    transport example goes through monotone inversion and a section lift.
    """
    ex = load(name)
    if name == "hunter-saxton" and solution_key == "logarithmic":
        return _hs_logarithmic_map(ex, params, grid)
    try:
        entry = ex.solutions[solution_key]
    except KeyError:
        raise ConfigError(
            f"unknown solution {solution_key!r} for example {name}; "
            f"known: {sorted(ex.solutions)}"
        ) from None
    P = dict(entry.defaults)
    P.update(params or {})
    entry.constraint(P)
    grid = grid if grid is not None else entry.default_grid(P)
    return closed_solution_map(ex.chart, grid, entry.build(P))


_HS_LOG_DEFAULTS = {"mu": 3.0, "c": 0.5, "C1": 0.0, "C": 1.0, "delta": -1.0}


def _hs_logarithmic_map(ex: ExampleSystem, params, grid: GridSpec) -> SolutionMap:
    from .integrate import lift

    P = dict(_HS_LOG_DEFAULTS)
    P.update(params or {})
    _hs_log_constraint(P)
    if grid is None:
        grid = GridSpec([0.0, 0.5], [0.02, 0.02], [9, 9])
    base, section = _hs_logarithmic(P)
    return lift(section, closed_base_map(grid, base, d=1))


def solution_modes(name: str, solution_key: str, params=None) -> tuple:
    """Modes whose map residual the given closed-form solution satisfies."""
    ex = load(name)
    if name == "hunter-saxton" and solution_key == "logarithmic":
        return ("standard", "evolution")
    entry = ex.solutions[solution_key]
    P = dict(entry.defaults)
    P.update(params or {})
    if name == "telegrapher" and solution_key == "exponential":
        return _tel_exp_modes(P)
    if name == "hunter-saxton" and solution_key == "linear":
        return _hs_linear_modes(P)
    return entry.modes
