"""
Invariant checks run by ``morse-kp verify``.

Each check produces one :class:`Check` record.  Informational records carry
diagnostics of formulas known to be inconsistent as printed; they never
fail a run.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import coherent as coh
from . import ladder as lad
from . import statistics as stats
from . import thermal as th
from .errors import NumericalError
from .spectrum import ThermalParams, make_space, thermal_params

SCOPES = ("coherent", "statistics", "thermal", "ladder")

DEFAULT_TOLERANCES = {
    "coherent.resolution": 1e-10,
    "coherent.normalization": 1e-12,
    "coherent.kernel": 1e-12,
    "coherent.antipodal": 1e-12,
    "coherent.temporal_stability": 1e-14,
    "statistics.g2_constant": 1e-11,
    "statistics.mandel_closed": 1e-12,
    "statistics.mandel_range": 0.0,
    "statistics.action_identity": 1e-12,
    "statistics.alpha_independence": 1e-13,
    "thermal.husimi_routes": 1e-13,
    "thermal.husimi_trace": 1e-9,
    "thermal.p_moments_harmonic": 1e-9,
    "thermal.p_moments": 1e-6,
    "thermal.p_trace": 1e-6,
    "thermal.ratio_integral": 1e-10,
    "thermal.moment_routes": 1e-12,
    "thermal.g2_routes": 1e-11,
    "thermal.mandel_routes": 1e-11,
    "thermal.heat_capacity": 1e-6,
    "thermal.free_energy_identity": 1e-12,
    "thermal.uniform_entropy": 1e-6,
    "ladder.hamiltonian": 1e-12,
    "ladder.adjoint": 0.0,
    "ladder.commutator_defect": 1e-12,
}

THERMAL_A = (0.5, 1.0, 2.0)


@dataclass
class Check:
    name: str
    scope: str
    l: int
    target: object
    value: object
    residual: float | None
    tol: float | None
    passed: bool
    informational: bool = False
    warning: str | None = None
    error: str | None = None
    params: dict = field(default_factory=dict)


@dataclass
class RunReport:
    command: str
    parameters: dict
    checks: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed and not c.informational]

    @property
    def errors(self) -> list:
        return [c for c in self.checks if c.error is not None]

    @property
    def warnings(self) -> list:
        return [c for c in self.checks if c.warning]

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 3
        return 1 if self.failures else 0

    def records(self) -> list:
        out = [asdict(c) for c in self.checks]
        out.append(
            {
                "summary": True,
                "command": self.command,
                "parameters": self.parameters,
                "checks": len(self.checks),
                "failures": len(self.failures),
                "warnings": len(self.warnings),
                "errors": len(self.errors),
                "wall_time": round(self.wall_time, 3),
                "exit_code": self.exit_code,
            }
        )
        return out


class _Recorder:
    def __init__(self, report: RunReport, tolerances: dict):
        self.report = report
        self.tol = tolerances

    def check(self, name, l, target, value, residual, warning=None, **params):
        tol = self.tol[name]
        residual = float(residual)
        passed = bool(residual <= tol)
        self.report.checks.append(
            Check(name, name.split(".")[0], l, _plain(target), _plain(value), residual, tol, passed, warning=warning, params=params)
        )

    def info(self, name, l, value, **params):
        self.report.checks.append(
            Check(name, name.split(".")[0], l, None, _plain(value), None, None, True, informational=True, params=params)
        )

    def guarded(self, name, l, fn):
        try:
            fn()
        except (NumericalError, ArithmeticError, ValueError) as exc:
            self.report.checks.append(
                Check(name, name.split(".")[0], l, None, None, None, self.tol.get(name), False, error=f"{type(exc).__name__}: {exc}")
            )


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _random_labels(rng, count, max_abs=1e4):
    mags = 10 ** rng.uniform(-3, math.log10(max_abs), count)
    return mags * np.exp(1j * rng.uniform(0, 2 * math.pi, count))


# -- scopes ------------------------------------------------------------------


def _coherent(rec: _Recorder, l: int, quad_order: int):
    space = make_space(l)
    rng = np.random.default_rng(1000 + l)

    def resolution():
        r = coh.identity_resolution_check(space, quad_order)
        rec.check("coherent.resolution", l, r.targets, r.moments, r.max_residual, quad_order=quad_order)

    def normalization():
        res = max(abs(coh.closed_form_state(space, Z, a).norm() - 1) for Z, a in zip(_random_labels(rng, 20), rng.uniform(0, 7, 20)))
        rec.check("coherent.normalization", l, 1.0, None, res, samples=20)

    def kernel():
        Z1, Z2 = _random_labels(rng, 20, 1e2), _random_labels(rng, 20, 1e2)
        res = max(
            abs(coh.overlap(coh.closed_form_state(space, a, 0.3), coh.closed_form_state(space, b, 0.3)) - coh.overlap_kernel(l, a, b))
            for a, b in zip(Z1, Z2)
        )
        rec.check("coherent.kernel", l, None, None, res, samples=20)

    def antipodal():
        Z = complex(0.7, -0.4)
        val = coh.overlap(coh.closed_form_state(space, Z), coh.closed_form_state(space, -1 / Z.conjugate()))
        rec.check("coherent.antipodal", l, 0.0, val, abs(val))

    def temporal():
        # dyadic phases keep alpha + t exact, isolating the evolution itself
        res = 0.0
        for _ in range(20):
            Z = _random_labels(rng, 1, 10)[0]
            alpha, t = rng.integers(-4096, 4096, 2) / 1024.0
            a = coh.evolve(coh.closed_form_state(space, Z, alpha), t).coeffs
            b = coh.closed_form_state(space, Z, alpha + t).coeffs
            res = max(res, float(np.max(np.abs(a - b))))
        rec.check("coherent.temporal_stability", l, 0.0, None, res, samples=20)

    def displacement():
        for z in (0.3, math.pi / (4 * math.sqrt(3)), 0.3 + 0.2j):
            _, d = coh.displaced_state(space, z)
            rec.info(
                "coherent.displacement",
                l,
                {"fidelity_at_tan_label": d.fidelity, "best_fit_Z": _plain(d.best_fit_Z), "best_fit_fidelity": d.best_fit_fidelity, "rate": d.rate},
                z=_plain(complex(z)),
            )

    for name, fn in [
        ("coherent.resolution", resolution),
        ("coherent.normalization", normalization),
        ("coherent.kernel", kernel),
        ("coherent.antipodal", antipodal),
        ("coherent.temporal_stability", temporal),
    ]:
        rec.guarded(name, l, fn)
    if l <= 4:
        rec.guarded("coherent.displacement", l, displacement)


def _statistics(rec: _Recorder, l: int):
    space = make_space(l)
    xs = np.logspace(-2, 2, 50)

    def g2_constant():
        vals = [stats.g2(coh.closed_form_state(space, math.sqrt(x))) for x in xs]
        rec.check("statistics.g2_constant", l, (l - 1) / l, [min(vals), max(vals)], max(vals) - min(vals))

    def mandel():
        qs = np.array([stats.mandel_q(coh.closed_form_state(space, math.sqrt(x))) for x in xs])
        rec.check("statistics.mandel_closed", l, None, None, float(np.max(np.abs(qs + xs / (1 + xs)))))
        violation = max(0.0, float(qs.max()), float(-1 - qs.min()))
        if qs.max() >= 0 or qs.min() <= -1:
            violation = max(violation, 1.0)
        rec.check("statistics.mandel_range", l, "(-1, 0)", [float(qs.min()), float(qs.max())], violation)

    def action():
        res = 0.0
        for x in xs:
            e, f = stats.action_identity(coh.closed_form_state(space, math.sqrt(x)))
            res = max(res, abs(e - f) / max(1.0, abs(f)))
        rec.check("statistics.action_identity", l, None, None, res)

    def alpha_independence():
        res = 0.0
        for x in xs[::10]:
            ref = None
            for alpha in (0.0, 1.0, math.pi):
                st = coh.closed_form_state(space, math.sqrt(x) * (0.6 + 0.8j), alpha)
                cur = np.array([stats.moment_n(st, 1), stats.moment_n(st, 2), stats.g2(st), stats.mandel_q(st)])
                if ref is None:
                    ref = cur
                res = max(res, float(np.max(np.abs(cur - ref))))
        rec.check("statistics.alpha_independence", l, 0.0, None, res)

    for name, fn in [
        ("statistics.g2_constant", g2_constant),
        ("statistics.mandel_closed", mandel),
        ("statistics.action_identity", action),
        ("statistics.alpha_independence", alpha_independence),
    ]:
        rec.guarded(name, l, fn)


def _thermal(rec: _Recorder, l: int, quad_order: int, tol: float, k_max: int):
    space = make_space(l)

    for A in THERMAL_A:
        params = thermal_params(space, A)
        state = th.thermal_state(params)
        harmonic = th.thermal_state(ThermalParams(A, 0.0, l))
        ratio = params.B / A

        def husimi_routes():
            res = 0.0
            for x in (0.0, 0.1, 1.0, 10.0, 1e3):
                h = th.husimi(state, x)
                res = max(res, abs(h.direct - h.operator_form) / h.direct)
            rec.check("thermal.husimi_routes", l, None, None, res, A=A)

        def husimi_trace():
            rec.check("thermal.husimi_trace", l, 1.0, None, th.husimi_trace_check(state, quad_order), A=A)

        def p_harmonic():
            checks = th.p_moment_checks(harmonic, quad_order, tol, k_max)
            rec.check("thermal.p_moments_harmonic", l, None, None, max(c.residual for c in checks), A=A, B=0.0)

        def p_moments():
            checks = th.p_moment_checks(state, quad_order, tol, k_max)
            conv = all(c.converged for c in checks)
            nk = checks[0].kernel_nodes
            warn = None
            if nk:
                warn = f"P series did not converge at {nk}/{quad_order} nodes; Gaussian-kernel route used there"
            res = max(c.residual for c in checks) if conv else math.inf
            rec.check("thermal.p_moments", l, None, None, res, warning=warn, A=A, B=params.B, converged=conv)

        def p_trace():
            t = th.p_trace_check(state, quad_order, tol, k_max)
            rec.check("thermal.p_trace", l, 1.0, t.trace, t.residual, A=A, B=params.B)
            th0 = th.p_trace_check(harmonic, quad_order, tol, k_max)
            rec.check(
                "thermal.ratio_integral",
                l,
                th0.inner_closed,
                th0.inner_quadrature,
                abs(th0.inner_quadrature / th0.inner_closed - 1),
                A=A,
                B=0.0,
            )

        def moment_routes():
            res = 0.0
            Zs = th.partition_expsum(params)
            for s in range(5):
                direct = th.thermal_moment(state, s)
                deriv = (-1) ** s * Zs.derivative(s)(A) / Zs(A)
                res = max(res, abs(direct - deriv) / abs(direct))
            rec.check("thermal.moment_routes", l, None, None, res, A=A, s_max=4)

        def stat_routes():
            L1, L2 = th._log_derivatives(params)
            g = th.thermal_g2(state)
            q = th.thermal_mandel(state)
            rec.check("thermal.g2_routes", l, 1 + 1 / L1 + L2 / L1**2, g, abs(g - (1 + 1 / L1 + L2 / L1**2)), A=A)
            rec.check("thermal.mandel_routes", l, -1 - L2 / L1, q, abs(q - (-1 - L2 / L1)), A=A)

        def thermo():
            td = th.thermodynamics(params)
            h = 1e-4 * td.temperature
            up = th.thermodynamics(ThermalParams(1 / (td.temperature + h), ratio / (td.temperature + h), l)).internal_energy
            dn = th.thermodynamics(ThermalParams(1 / (td.temperature - h), ratio / (td.temperature - h), l)).internal_energy
            dudt = (up - dn) / (2 * h)
            rec.check("thermal.heat_capacity", l, dudt, td.heat_capacity, abs(td.heat_capacity / dudt - 1), A=A)
            rec.check(
                "thermal.free_energy_identity",
                l,
                td.free_energy,
                td.internal_energy - td.temperature * td.entropy,
                abs(td.free_energy - (td.internal_energy - td.temperature * td.entropy)) / max(1.0, abs(td.free_energy)),
                A=A,
            )

        for name, fn in [
            ("thermal.husimi_routes", husimi_routes),
            ("thermal.husimi_trace", husimi_trace),
            ("thermal.p_moments_harmonic", p_harmonic),
            ("thermal.p_moments", p_moments),
            ("thermal.p_trace", p_trace),
            ("thermal.moment_routes", moment_routes),
            ("thermal.g2_routes", stat_routes),
            ("thermal.heat_capacity", thermo),
        ]:
            rec.guarded(name, l, fn)

    def uniform():
        S = th.entropy(thermal_params(space, 1e-6))
        rec.check("thermal.uniform_entropy", l, math.log(l + 1), S, abs(S - math.log(l + 1)), A=1e-6)

    rec.guarded("thermal.uniform_entropy", l, uniform)


def _ladder(rec: _Recorder, l: int):
    space = make_space(l)

    def algebra():
        L0 = lad.build_ladder(space, 0.0)
        prod = L0.a_plus @ L0.a_minus
        rec.check("ladder.hamiltonian", l, None, None, float(np.max(np.abs(prod - L0.hamiltonian))))
        rec.check("ladder.adjoint", l, None, None, float(np.max(np.abs(L0.a_plus - L0.a_minus.conj().T))))
        defect = lad.commutator_defect(L0)
        expected = np.zeros((l + 1, l + 1))
        expected[l, l] = -((l + 1) ** 2)
        rec.check("ladder.commutator_defect", l, -((l + 1) ** 2), defect[l, l], float(np.max(np.abs(defect - expected))))

    def diagnostics():
        if l <= 4:
            rec.info(
                "ladder.recurrence_residual",
                l,
                {f"n={n},j={j}": lad.delta_recurrence_residual(l, n, j) for n in range(l) for j in range(4)},
            )
            ode = {}
            for n in range(l + 1):
                ode[f"n={n}"] = max(abs(lad.j_ode_residual(l, n, z)) for z in np.linspace(0.05, 1.0, 20))
            rec.info("ladder.ode_residual", l, ode, abs_z_range=[0.05, 1.0])
            cmp_ = {}
            for n in range(l + 1):
                for z in (0.2, 0.5):
                    i_val = lad.i_series(l, n, z)
                    cmp_[f"n={n},|z|={z}"] = {"I_series": i_val.value, "J_closed": lad.j_closed(l, n, z), "converged": i_val.converged}
            rec.info("ladder.i_vs_j", l, cmp_)

    rec.guarded("ladder.hamiltonian", l, algebra)
    rec.guarded("ladder.recurrence_residual", l, diagnostics)


def run_checks(
    scope: str = "all",
    ls=(1, 2, 3, 4),
    tolerances: dict | None = None,
    quad_order: int = 200,
    tol: float = 1e-10,
    k_max: int = 60,
    command: str = "",
) -> RunReport:
    scopes = SCOPES if scope == "all" else (scope,)
    for s in scopes:
        if s not in SCOPES:
            raise ValueError(f"unknown scope {s!r}")
    tols = dict(DEFAULT_TOLERANCES)
    for key, value in (tolerances or {}).items():
        if key not in tols:
            raise ValueError(f"unknown check name {key!r}")
        tols[key] = float(value)
    report = RunReport(command, {"scope": scope, "l": list(ls), "quad_order": quad_order, "tol": tol, "k_max": k_max})
    rec = _Recorder(report, tols)
    start = time.perf_counter()
    for l in ls:
        if "ladder" in scopes:
            _ladder(rec, l)
        if "coherent" in scopes:
            _coherent(rec, l, quad_order)
        if "statistics" in scopes:
            _statistics(rec, l)
        if "thermal" in scopes:
            _thermal(rec, l, quad_order, tol, k_max)
    report.wall_time = time.perf_counter() - start
    return report
