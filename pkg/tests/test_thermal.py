import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morse_kp.errors import DomainError, NumericalError
from morse_kp.heat import ExpSum
from morse_kp.spectrum import ThermalParams, make_space, thermal_params
from morse_kp.statistics import DiagonalObservable, energy_observable, number_observable
from morse_kp.thermal import (
    entropy,
    heat_apply,
    heat_capacity,
    husimi,
    husimi_trace_check,
    husimi_values,
    p_function,
    p_moment_check,
    p_moment_checks,
    p_trace_check,
    p_values,
    partition,
    partition_expsum,
    thermal_average,
    thermal_g2,
    thermal_mandel,
    thermal_moment,
    thermal_state,
    thermodynamics,
)

# oracle values for l = 2, beta hbar omega = 1, from the three-level direct sums
Z_L2 = 1.6981953466228048
MEAN_N_L2 = 0.5663615123261556
G2_L2 = 0.9678221881128343
Q_L2 = -0.018224274203761742
U_L2 = 0.42022728774758283
F_L2 = -0.5295661263972994
S_L2 = 0.9497934141448823
CV_L2 = 0.2770797114703897


def ts(l, A, B=None):
    params = thermal_params(make_space(l), A) if B is None else ThermalParams(A, B, l)
    return thermal_state(params)


class TestPartition:
    def test_uniform(self):
        assert partition(thermal_params(make_space(5), 0.0)) == 6

    def test_l2(self):
        p = thermal_params(make_space(2), 1.0)
        assert partition(p) == pytest.approx(1 + math.exp(-5 / 6) + math.exp(-4 / 3), rel=1e-15)
        assert partition(p) == pytest.approx(Z_L2, rel=1e-15)

    def test_cold(self):
        assert partition(thermal_params(make_space(3), 60.0)) == pytest.approx(1.0, abs=1e-15)

    @given(st.integers(1, 40), st.floats(0, 20), st.floats(0, 1))
    def test_expsum_route(self, l, A, frac):
        # B <= A/(2l) keeps the exponent non-decreasing in n
        p = ThermalParams(A, frac * A / (2 * l), l)
        assert partition_expsum(p)(A) == pytest.approx(partition(p), rel=1e-13)

    def test_heat_apply(self):
        f = ExpSum([(1.0, 3.0)])
        assert heat_apply(f, 0.0)(0.5) == f(0.5)
        assert heat_apply(f, 0.2)(0.5) == pytest.approx(math.exp(-1.5 + 1.8), rel=1e-15)


class TestHusimi:
    def test_origin(self):
        t = ts(4, 1.3)
        assert husimi(t, 0.0).direct == pytest.approx(1 / t.partition, rel=1e-15)

    @pytest.mark.parametrize("A,B", [(0.5, 0.1), (2.0, 0.0), (1.0, 0.25)])
    def test_l1_unit_label(self, A, B):
        assert husimi(ts(1, A, B), 1.0).direct == pytest.approx(0.5, rel=1e-15)

    def test_harmonic_bracket(self):
        t = ts(3, 1.0, 0.0)
        h = husimi(t, 2.0)
        assert h.direct * t.partition == pytest.approx(((1 + 2 * math.exp(-1)) / 3) ** 3, rel=1e-14)

    @settings(max_examples=50)
    @given(st.integers(1, 12), st.floats(0, 6), st.floats(0, 1e4))
    def test_dual_route(self, l, A, x):
        h = husimi(ts(l, A), x)
        assert h.direct == pytest.approx(h.operator_form, rel=1e-13)

    def test_negative_x(self):
        with pytest.raises(DomainError):
            husimi(ts(2, 1.0), -1.0)

    @pytest.mark.parametrize("l,A,B,order,tol", [(1, 1.0, 0.0, 100, 1e-10), (2, 1.0, 1 / 6, 200, 1e-9), (4, 0.0, 0.0, 200, 1e-10)])
    def test_trace(self, l, A, B, order, tol):
        assert husimi_trace_check(ts(l, A, B), order) < tol

    def test_vectorized(self):
        t = ts(3, 0.8)
        xs = [0.0, 0.5, 7.0]
        assert husimi_values(t, xs) == pytest.approx([husimi(t, x).direct for x in xs], rel=1e-15)


def _p_oracle(l, A, B, x):
    """exp[B d^2/dA^2] of the harmonic bracket as a high-precision Gaussian average."""
    mpmath.mp.dps = 30
    try:
        g = lambda a: mpmath.exp(a) * ((1 + x) / (1 + mpmath.exp(a) * x)) ** (l + 2)
        w = lambda y: mpmath.exp(-y * y / (4 * B)) / mpmath.sqrt(4 * mpmath.pi * B)
        s = 12 * mpmath.sqrt(B)
        return float(mpmath.quad(lambda y: g(A - y) * w(y), mpmath.linspace(-s, s, 9)))
    finally:
        mpmath.mp.dps = 15


class TestPFunction:
    @pytest.mark.parametrize("l,A,x", [(2, 1.0, 1.0), (5, 0.3, 4.0), (10, 2.0, 0.01)])
    def test_harmonic_closed_form(self, l, A, x):
        p = p_function(ts(l, A, 0.0), x)
        assert p.k_used == 0 and p.converged
        assert p.value == pytest.approx(math.exp(A) * ((1 + x) / (1 + math.exp(A) * x)) ** (l + 2), rel=1e-14)

    def test_harmonic_origin(self):
        assert p_function(ts(3, 1.7, 0.0), 0.0).value == pytest.approx(math.exp(1.7), rel=1e-15)

    def test_anharmonic_l2(self):
        p = p_function(ts(2, 1.0), 1.0)
        assert p.converged
        assert p.value == pytest.approx(0.32245047543351424, rel=1e-10)
        assert p.value == pytest.approx(_p_oracle(2, 1.0, 1 / 6, 1.0), rel=1e-10)

    @pytest.mark.parametrize("l,A,x", [(2, 0.5, 0.2), (5, 1.0, 3.0), (10, 2.0, 0.05)])
    def test_against_gaussian_average(self, l, A, x):
        B = A / (2 * (l + 1))
        p = p_function(ts(l, A), x)
        assert p.converged
        assert p.value == pytest.approx(_p_oracle(l, A, B, x), rel=1e-9)

    def test_series_route_is_only_asymptotic(self):
        p = p_function(ts(2, 1.0), 1.0, method="series")
        assert not p.converged
        assert p.value == pytest.approx(0.32245047543351424, rel=1e-3)

    def test_converging_series_agrees_with_kernel(self):
        t = ts(2, 1.0, 0.002)
        s = p_function(t, 1.0, method="series")
        k = p_function(t, 1.0, method="kernel")
        assert s.converged and s.method == "series"
        assert s.value == pytest.approx(k.value, rel=1e-9)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            p_function(ts(2, 1.0), -0.5)
        with pytest.raises(DomainError):
            p_function(ts(2, 1.0), 1.0, method="magic")
        with pytest.raises(DomainError):
            p_function(ts(2, 1.0), 1.0, tol=0)

    def test_vector_flags(self):
        vals, k, conv, methods = p_values(ts(2, 1.0), [0.0, 1.0, 100.0])
        assert vals.shape == (3,) and conv.all()
        assert set(methods) <= {"series", "kernel"}


class TestPMoments:
    def test_harmonic_n0(self):
        c = p_moment_check(ts(3, 1.2, 0.0), 0)
        assert c.target == pytest.approx(1 / 4)
        assert c.residual < 1e-9

    @pytest.mark.parametrize("l", [1, 3, 6])
    def test_uniform_targets(self, l):
        for n in range(l + 1):
            c = p_moment_check(ts(l, 0.0, 0.0), n)
            exact = Fraction(math.factorial(n) * math.factorial(l - n), math.factorial(l + 1))
            assert c.target == pytest.approx(float(exact), rel=1e-14)
            assert c.residual < 1e-10

    def test_anharmonic_l2_n1(self):
        c = p_moment_check(ts(2, 1.0), 1, tol=1e-10)
        assert c.residual < 1e-6 and c.converged

    def test_all_moments(self):
        checks = p_moment_checks(ts(5, 1.0))
        assert len(checks) == 6
        assert max(c.residual for c in checks) < 1e-9

    def test_index_checked(self):
        with pytest.raises(DomainError):
            p_moment_check(ts(2, 1.0), 3)


class TestPTrace:
    def test_harmonic_l1(self):
        t = p_trace_check(ts(1, math.log(2), 0.0))
        assert t.inner_closed == pytest.approx(3 / 8, rel=1e-14)
        assert t.inner_quadrature == pytest.approx(3 / 8, rel=1e-10)
        assert t.residual < 1e-10
        assert (1 + 1) * 2 * t.inner_closed == pytest.approx(t.geometric_sum, rel=1e-14)

    def test_uniform(self):
        assert p_trace_check(ts(3, 0.0, 0.0)).residual < 1e-10

    def test_anharmonic(self):
        t = p_trace_check(ts(2, 1.0))
        assert t.residual < 1e-6 and t.converged
        assert t.inner_closed is None


class TestThermalMoments:
    def test_normalization(self):
        assert thermal_moment(ts(4, 0.9), 0) == pytest.approx(1.0, abs=1e-15)

    def test_l2(self):
        assert thermal_moment(ts(2, 1.0), 1) == pytest.approx(MEAN_N_L2, rel=1e-14)

    def test_cold(self):
        for s in (1, 2, 3):
            assert thermal_moment(ts(3, 60.0), s) < 1e-20

    @given(st.integers(1, 20), st.floats(0, 8), st.integers(0, 4))
    def test_routes(self, l, A, s):
        # thermal_moment raises if the direct and derivative routes differ
        thermal_moment(ts(l, A), s)

    def test_rational_oracle(self):
        # at B = 0 and e^-A = 1/2 the weights are rational
        t = ts(3, math.log(2), 0.0)
        w = [Fraction(1, 2**n) for n in range(4)]
        exact = sum(n * n * wn for n, wn in enumerate(w)) / sum(w)
        assert thermal_moment(t, 2) == pytest.approx(float(exact), rel=1e-14)


class TestThermalCorrelations:
    def test_l2(self):
        t = ts(2, 1.0)
        assert thermal_g2(t) == pytest.approx(G2_L2, rel=1e-13)
        assert thermal_mandel(t) == pytest.approx(Q_L2, rel=1e-12)

    @pytest.mark.parametrize("l", [1, 2, 7])
    def test_uniform(self, l):
        t = ts(l, 0.0)
        assert thermal_g2(t) == pytest.approx(4 / 3 * (l - 1) / l, abs=1e-14)

    def test_cold_routes_agree(self):
        # the internal route check is the assertion here; values stay finite
        for A in (10.0, 20.0):
            t = ts(2, A)
            assert -1 < thermal_mandel(t) < 1
            assert math.isfinite(thermal_g2(t))

    def test_overflow_flagged(self):
        with pytest.raises(NumericalError):
            partition(ThermalParams(1.0, 30.0, 40))

    def test_ground_state_limit_rejected(self):
        with pytest.raises(DomainError):
            thermal_g2(ts(2, 800.0))

    @given(st.integers(1, 12), st.floats(0.01, 6))
    def test_mandel_relation(self, l, A):
        t = ts(l, A)
        assert thermal_mandel(t) == pytest.approx(thermal_moment(t, 1) * (thermal_g2(t) - 1), abs=1e-12)


class TestThermalAverage:
    def test_identity(self):
        t = ts(3, 0.7)
        r = thermal_average(t, DiagonalObservable(make_space(3), np.ones(4)))
        assert r.value == pytest.approx(1.0, abs=1e-9)

    def test_number_harmonic(self):
        t = ts(4, 1.1, 0.0)
        r = thermal_average(t, number_observable(make_space(4)))
        assert r.value == pytest.approx(thermal_moment(t, 1), abs=1e-8)

    def test_energy_l2(self):
        t = ts(2, 1.0)
        r = thermal_average(t, energy_observable(make_space(2)))
        assert r.converged
        assert r.value == pytest.approx(r.basis_sum, abs=1e-6)

    def test_space_mismatch(self):
        with pytest.raises(DomainError):
            thermal_average(ts(2, 1.0), number_observable(make_space(3)))


class TestThermodynamics:
    def test_l2(self):
        td = thermodynamics(thermal_params(make_space(2), 1.0))
        assert td.temperature == 1.0
        assert td.internal_energy == pytest.approx(U_L2, rel=1e-14)
        assert td.free_energy == pytest.approx(F_L2, rel=1e-14)
        assert td.entropy == pytest.approx(S_L2, rel=1e-14)
        assert td.heat_capacity == pytest.approx(CV_L2, rel=1e-13)

    def test_internal_energy_direct_sum(self):
        eps = np.array([0, 5 / 6, 4 / 3])
        w = np.exp(-eps)
        assert thermodynamics(thermal_params(make_space(2), 1.0)).internal_energy == pytest.approx(
            float(np.dot(w, eps) / w.sum()), rel=1e-14
        )

    def test_free_energy_identity(self):
        for l, A in [(2, 1.0), (7, 0.3), (15, 4.0)]:
            td = thermodynamics(thermal_params(make_space(l), A))
            assert td.free_energy == pytest.approx(td.internal_energy - td.temperature * td.entropy, rel=1e-14, abs=1e-15)

    def test_cold(self):
        td = thermodynamics(thermal_params(make_space(3), 50.0))
        assert td.internal_energy < 1e-15 and td.entropy < 1e-15

    @pytest.mark.parametrize("l", [1, 2, 10])
    def test_hot_entropy(self, l):
        assert entropy(thermal_params(make_space(l), 1e-9)) == pytest.approx(math.log(l + 1), abs=1e-8)
        assert entropy(thermal_params(make_space(l), 0.0)) == pytest.approx(math.log(l + 1), abs=1e-15)
        assert heat_capacity(thermal_params(make_space(l), 0.0)) == 0

    @pytest.mark.parametrize("l,A", [(2, 1.0), (5, 0.4), (12, 3.0)])
    def test_heat_capacity_is_dU_dT(self, l, A):
        ratio = 1 / (2 * (l + 1))
        T = 1 / A
        U = lambda T_: thermodynamics(ThermalParams(1 / T_, ratio / T_, l)).internal_energy
        h = 1e-4 * T
        dudt = (U(T + h) - U(T - h)) / (2 * h)
        assert thermodynamics(thermal_params(make_space(l), A)).heat_capacity == pytest.approx(dudt, rel=1e-6)

    def test_hbar_omega_scales_energies(self):
        p = thermal_params(make_space(3), 1.5)
        a, b = thermodynamics(p), thermodynamics(p, hbar_omega=2.0)
        assert b.internal_energy == pytest.approx(2 * a.internal_energy, rel=1e-14)
        assert b.entropy == pytest.approx(a.entropy, rel=1e-14)

    def test_infinite_temperature_rejected(self):
        with pytest.raises(DomainError):
            thermodynamics(thermal_params(make_space(2), 0.0))
