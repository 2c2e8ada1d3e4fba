import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg

from morse_kp.coherent import (
    MeasureDensity,
    binomial_weights,
    closed_form_state,
    displaced_state,
    evolve,
    identity_resolution_check,
    overlap,
    overlap_kernel,
)
from morse_kp.errors import DomainError
from morse_kp.ladder import build_ladder
from morse_kp.spectrum import make_space

labels = st.builds(
    lambda r, t: cmath.rect(r, t),
    st.floats(0, 1e4),
    st.floats(0, 2 * math.pi),
)
depths = st.integers(1, 100)
phases = st.floats(-50, 50)


class TestClosedForm:
    def test_ground_state(self):
        st_ = closed_form_state(make_space(4), 0)
        assert np.array_equal(st_.coeffs, [1, 0, 0, 0, 0])

    def test_l1_unit_label(self):
        assert closed_form_state(make_space(1), 1).coeffs == pytest.approx([2**-0.5, 2**-0.5], abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.0, 0.7, 3.0])
    def test_l2_imaginary_label(self, alpha):
        c = closed_form_state(make_space(2), 1j, alpha).coeffs
        assert np.abs(c) == pytest.approx([0.5, math.sqrt(2) / 2, 0.5], abs=1e-15)

    def test_explicit_coefficients(self):
        l, Z, alpha = 3, 0.4 - 1.1j, 0.25
        c = closed_form_state(make_space(l), Z, alpha).coeffs
        E = make_space(l).energy_array()
        ref = [(1 + abs(Z) ** 2) ** (-l / 2) * math.sqrt(math.comb(l, n)) * Z**n * cmath.exp(-1j * alpha * E[n]) for n in range(l + 1)]
        assert c == pytest.approx(ref, abs=1e-15)

    def test_infinite_label_rejected(self):
        with pytest.raises(DomainError):
            closed_form_state(make_space(2), complex(math.inf, 0))

    def test_binomial_weight_limits(self):
        assert binomial_weights(3, math.inf).tolist() == [0, 0, 0, 1]
        assert binomial_weights(3, 1.0) == pytest.approx([1 / 8, 3 / 8, 3 / 8, 1 / 8], abs=1e-15)

    @given(depths, labels, phases)
    def test_normalized(self, l, Z, alpha):
        assert closed_form_state(make_space(l), Z, alpha).norm() == pytest.approx(1.0, abs=1e-12)


class TestOverlap:
    def test_self_overlap(self):
        s = closed_form_state(make_space(3), 0.3 + 0.9j, 1.0)
        assert overlap(s, s) == pytest.approx(1.0, abs=1e-15)

    def test_l2_example(self):
        s1, s2 = closed_form_state(make_space(2), 1), closed_form_state(make_space(2), 1j)
        assert overlap(s1, s2) == pytest.approx(0.5j, abs=1e-15)

    def test_antipodal(self):
        Z = 0.6 + 0.3j
        s1 = closed_form_state(make_space(5), Z)
        s2 = closed_form_state(make_space(5), -1 / Z.conjugate())
        assert abs(overlap(s1, s2)) < 1e-14

    def test_mismatch_rejected(self):
        with pytest.raises(DomainError):
            overlap(closed_form_state(make_space(2), 1), closed_form_state(make_space(3), 1))
        with pytest.raises(DomainError):
            overlap(closed_form_state(make_space(2), 1, 0.0), closed_form_state(make_space(2), 1, 0.5))

    @given(depths, st.floats(0, 100), st.floats(0, 100), st.floats(0, 7), st.floats(0, 7), phases)
    def test_kernel(self, l, r1, r2, t1, t2, alpha):
        Z1, Z2 = cmath.rect(r1, t1), cmath.rect(r2, t2)
        sp = make_space(l)
        direct = overlap(closed_form_state(sp, Z1, alpha), closed_form_state(sp, Z2, alpha))
        assert direct == pytest.approx(overlap_kernel(l, Z1, Z2), abs=1e-12)


class TestMeasure:
    def test_h_formula(self):
        m = MeasureDensity(3)
        assert m.h(1.0) == pytest.approx(4 / 32)
        assert m.radial_weight(0.0) == 4

    @pytest.mark.parametrize("l", [1, 4, 9])
    def test_moments_against_scipy(self, l):
        m = MeasureDensity(l)
        for n in range(l + 1):
            ref, _ = integrate.quad(lambda x: x**n * m.h(x), 0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
            assert m.moment(n) == pytest.approx(ref, rel=1e-9)

    def test_resolution_report(self):
        r = identity_resolution_check(make_space(2))
        assert r.targets[1] == pytest.approx(0.5)
        assert r.targets[0] == 1.0
        r5 = identity_resolution_check(make_space(5), 200)
        assert r5.max_residual < 1e-10

    def test_resolution_order_too_low(self):
        with pytest.raises(DomainError):
            identity_resolution_check(make_space(10), 10)

    @pytest.mark.parametrize("l", [1, 3, 6])
    def test_projector_sum_is_identity(self, l):
        # integrate |Z><Z| over the plane: radial quadrature times an exact angular average
        sp = make_space(l)
        m = MeasureDensity(l)
        total = np.zeros((l + 1, l + 1), dtype=complex)
        thetas = np.linspace(0, 2 * math.pi, 2 * l + 3, endpoint=False)
        from morse_kp.numerics import halfline_rule

        rule = halfline_rule(200)
        for x, w in zip(rule.nodes, rule.weights):
            for th in thetas:
                c = closed_form_state(sp, cmath.rect(math.sqrt(x), th), 0.4).coeffs
                total += w * m.radial_weight(x) * np.outer(c, c.conj()) / len(thetas)
        assert np.allclose(total, np.eye(l + 1), atol=1e-10)

    def test_isotropic_integral(self):
        m = MeasureDensity(2)
        # |c_0|^2 integrated against the measure is 1/(l+1) * (l+1) = 1
        assert m.integrate(lambda x: (1 + x) ** -2) == pytest.approx(1.0, abs=1e-12)


class TestEvolution:
    def test_identity_at_zero(self):
        s = closed_form_state(make_space(3), 0.2 + 0.1j, 0.4)
        assert np.array_equal(evolve(s, 0.0).coeffs, s.coeffs)

    def test_example(self):
        sp = make_space(3)
        a = evolve(closed_form_state(sp, 0.7 + 0.2j, 0.1), 2.5).coeffs
        b = closed_form_state(sp, 0.7 + 0.2j, 2.6).coeffs
        assert np.max(np.abs(a - b)) < 1e-13

    def test_matches_propagator(self):
        sp = make_space(4)
        s = closed_form_state(sp, 1.3j, 0.0)
        U = linalg.expm(-1j * 0.77 * build_ladder(sp).hamiltonian)
        assert evolve(s, 0.77).coeffs == pytest.approx(U @ s.coeffs, abs=1e-13)

    @settings(max_examples=60)
    @given(depths, labels, st.integers(-4096, 4096), st.integers(-4096, 4096))
    def test_dyadic_phases_exact(self, l, Z, ia, it):
        alpha, t = ia / 1024, it / 1024
        sp = make_space(l)
        a = evolve(closed_form_state(sp, Z, alpha), t).coeffs
        b = closed_form_state(sp, Z, alpha + t).coeffs
        assert np.max(np.abs(a - b)) <= 1e-14

    @given(st.integers(1, 30), labels, phases, phases)
    def test_general_phases(self, l, Z, alpha, t):
        # alpha + t rounds; the phase error is bounded by E_max times a few ulps of the phase
        sp = make_space(l)
        a = evolve(closed_form_state(sp, Z, alpha), t).coeffs
        b = closed_form_state(sp, Z, alpha + t).coeffs
        bound = 8 * np.finfo(float).eps * (l * (l + 2)) * (abs(alpha) + abs(t) + 1)
        assert np.max(np.abs(a - b)) <= bound


class TestDisplacement:
    def test_zero_is_ground_state(self):
        vec, d = displaced_state(make_space(3), 0)
        assert vec == pytest.approx([1, 0, 0, 0], abs=1e-15)
        assert d.fidelity == pytest.approx(1.0)

    def test_l1_rate_is_sqrt3(self):
        z = math.pi / (4 * math.sqrt(3))
        vec, d = displaced_state(make_space(1), z)
        assert vec == pytest.approx([math.cos(math.pi / 4), math.sin(math.pi / 4)], abs=1e-14)
        assert d.best_fit_Z == pytest.approx(1.0, abs=1e-8)
        assert d.best_fit_fidelity == pytest.approx(1.0, abs=1e-12)
        assert d.rate == pytest.approx(math.sqrt(3), rel=1e-8)
        # the label tan|z| does not reproduce the displaced state
        assert d.fidelity < 0.99

    @pytest.mark.parametrize("z", [0.1, 0.3 + 0.2j, -0.4j])
    def test_l1_best_fit_is_tan_sqrt3(self, z):
        _, d = displaced_state(make_space(1), z)
        expected = cmath.rect(math.tan(math.sqrt(3) * abs(z)), cmath.phase(z))
        assert d.best_fit_Z == pytest.approx(expected, abs=1e-8)

    def test_l2_is_not_exactly_coherent(self):
        _, d = displaced_state(make_space(2), 0.3)
        assert d.fidelity < 1
        assert d.best_fit_fidelity < 1 - 1e-8
        assert d.antihermitian

    def test_vector_matches_scipy(self):
        sp, z = make_space(3), 0.25 - 0.1j
        lad = build_ladder(sp)
        ref = linalg.expm(z * lad.a_plus - z.conjugate() * lad.a_minus)[:, 0]
        vec, _ = displaced_state(sp, z)
        assert vec == pytest.approx(ref, abs=1e-13)
