from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from rotfield import oracle
from rotfield.core import ALGEBRA, PhysicalParams
from rotfield.dirac import (
    DiracParams,
    DiracReduced,
    amplitude_scan,
    build_branch,
    cubic_residual,
    evaluate_lab_wavefunction,
    mixing_cos2theta,
    oscillation_frequency,
    positive_roots,
    reduce_dirac,
    reduced_only,
    rotation_operator,
    solve_cubic,
    spin_amplitude,
    spin_amplitude_printed,
    spin_constant,
    spin_oscillation,
    two_branch_state,
)
from rotfield.errors import NoTwoPositiveRoots, SpectralPole, ZeroFrequency

GENERIC = (0.8, 0.1, 0.05)  # (E0, nu, h)


def case2_params(H=0.1, Omega=0.5, p=0.3) -> DiracParams:
    return DiracParams(PhysicalParams(H_z=-1.0, H=H, Omega=Omega, p=p), 1)


class TestReduce:
    def test_case1_constants(self):
        dr = reduce_dirac(DiracParams(PhysicalParams(H_z=1.0, Omega=0.5), 1))
        assert dr.case == 1
        assert dr.d == 0.5
        assert dr.E0 == 2.0

    def test_zero_nu(self):
        dr = reduce_dirac(DiracParams(PhysicalParams(H_z=1.0, Omega=0.5, p=0.25), 1))
        assert dr.nu == 0.0

    def test_zero_h(self):
        assert reduce_dirac(DiracParams(PhysicalParams(H_z=1.0, Omega=0.5, H=0.0), 1)).h == 0.0

    def test_case2_widths(self):
        dp = case2_params()
        assert reduce_dirac(dp).case == 2
        assert reduce_dirac(dp).d == 0.5
        assert reduce_dirac(dp, "printed").d == 0.25

    def test_zero_frequency(self):
        with pytest.raises(ZeroFrequency):
            reduce_dirac(DiracParams(PhysicalParams(H_z=1.0, Omega=0.0), 1))

    def test_round_trip(self):
        dr = reduced_only(*GENERIC)
        assert (dr.E0, dr.h, dr.d) == pytest.approx((0.8, 0.05, 0.5), abs=1e-15)
        assert dr.nu == pytest.approx(0.1, abs=1e-14)


class TestCubic:
    def test_free_limit(self):
        roots = solve_cubic(reduced_only(0.5, 0.0, 0.0))
        assert np.allclose(roots, [1.0, 0.5, -1.0], rtol=0, atol=1e-12)

    def test_double_root(self):
        roots = solve_cubic(reduced_only(1.0, 0.0, 0.0))
        # a double root is only determined to about sqrt(machine epsilon)
        assert np.allclose(roots.real, [1.0, 1.0, -1.0], atol=1e-7)
        assert np.all(np.abs(roots.imag) < 1e-7)

    def test_generic_against_high_precision(self):
        dr = reduced_only(*GENERIC)
        roots = solve_cubic(dr)
        for r in roots:
            assert cubic_residual(dr, r) < 1e-12
        assert np.allclose(roots, oracle.cubic_roots_mp(dr), rtol=1e-13, atol=0)
        assert np.allclose(
            roots.real, [0.9587604254938064, 0.7931976943891468, -1.0519581198829532], atol=1e-12
        )

    def test_two_positive_roots_sorted(self):
        pos = positive_roots(solve_cubic(reduced_only(*GENERIC)))
        assert len(pos) == 2 and pos[0] > pos[1] > 0

    def test_root_continuity(self):
        prev = solve_cubic(reduced_only(0.8, 0.1, 0.0))
        for h in np.linspace(0.0, 0.3, 31)[1:]:
            cur = solve_cubic(reduced_only(0.8, 0.1, float(h)))
            assert np.max(np.abs(cur - prev)) < 0.05
            prev = cur

    def test_no_two_positive_roots(self):
        with pytest.raises(NoTwoPositiveRoots):
            two_branch_state(DiracReduced(d=0.5, h=0.0, E0=-0.5, nu=0.0, case=1))


class TestBranch:
    @pytest.mark.parametrize("E0", [0.5, 2.0])
    def test_single_component_at_unit_root(self, E0):
        dr = reduced_only(E0, 0.0, 0.0)
        br = build_branch(dr, 1.0)
        eps = dr.epsilon_dir
        length = np.linalg.norm(br.raw_spinor)
        expected = np.array([0, 0, 0, -np.sign(eps * (1 - E0))])
        assert np.allclose(br.raw_spinor / length, expected, atol=1e-15)
        assert br.N * length == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_pole(self):
        with pytest.raises(SpectralPole):
            build_branch(reduced_only(0.5, 0.0, 0.0), 0.5)

    def test_normalization_identity(self):
        for args in (GENERIC, (1.3, -0.2, 0.4), (0.6, 0.05, -0.3)):
            dr = reduced_only(*args)
            for r in solve_cubic(dr):
                assert abs(build_branch(dr, r.real).normalization_identity()) < 1e-14

    def test_branch_norm_by_quadrature(self):
        dr = reduced_only(*GENERIC)
        for E in positive_roots(solve_cubic(dr)):
            assert oracle.dirac_branch_norm(build_branch(dr, E)) == pytest.approx(1.0, rel=1e-10)


class TestMixing:
    def test_quarter_angle_without_transverse_field(self):
        # the second root sits on the d2 pole at h = 0, so use the roots directly
        dr = reduced_only(0.5, 0.0, 0.0)
        assert mixing_cos2theta(1.0, 0.5, dr) == 0.0
        st = two_branch_state(reduced_only(0.5, 0.0, 1e-3))
        assert st.theta == pytest.approx(math.pi / 4, abs=1e-6)

    def test_zero_product(self):
        dr = reduced_only(*GENERIC)
        assert mixing_cos2theta(0.7, 0.0, dr) == 0.0

    def test_generic_matches_zeroed_constant(self):
        st = two_branch_state(reduced_only(*GENERIC))
        assert st.theta == pytest.approx(0.7856087207007337, abs=1e-13)
        assert oracle.mixing_angle_by_quadrature(st) == pytest.approx(st.theta, abs=1e-10)
        assert abs(spin_constant(st)) < 1e-14


class TestRotation:
    def test_identity_and_double_valued(self):
        assert np.array_equal(rotation_operator(0.0), np.ones(4))
        assert np.allclose(rotation_operator(2 * math.pi), -np.ones(4), atol=1e-15)

    def test_against_matrix_exponential(self):
        a12 = ALGEBRA.alpha[0] @ ALGEBRA.alpha[1]
        for phase in (0.3, -1.7, 4.0):
            ref = expm(-0.5 * phase * a12)
            assert np.allclose(np.diag(rotation_operator(phase)), ref, atol=1e-13)
        assert oracle.rotation_operator_error(np.linspace(-7, 7, 29)) < 1e-13

    def test_field_at_origin(self):
        st = two_branch_state(reduced_only(*GENERIC))
        psi = evaluate_lab_wavefunction(st.branch1, 0.0, 0.0, 0.0, 0.0)
        b = st.branch1
        expected = b.bispinor * np.exp(-(b.d2**2) / (2 * b.reduced.d))
        assert np.allclose(psi, expected, atol=1e-15)


class TestResiduals:
    def test_case1_printed_variant_annihilates(self):
        dp = DiracParams.from_reduced(*GENERIC)
        st = two_branch_state(reduce_dirac(dp))
        table = oracle.dirac_sign_sweep(st, dp)
        assert [v for v, r in table.items() if r.converged] == ["printed"]
        assert table["printed"].relative_residual < 1e-12

    def test_case2_derived_convention(self):
        dp = case2_params()
        dr = reduce_dirac(dp)
        br = build_branch(dr, positive_roots(solve_cubic(dr))[0])
        rep = oracle.dirac_residual(br, dp, sign_variant="printed")
        assert rep.converged and rep.relative_residual < 1e-12

    def test_case2_printed_convention_fails(self):
        dp = case2_params()
        dr = reduce_dirac(dp, "printed")
        br = build_branch(dr, positive_roots(solve_cubic(dr))[0])
        reports = {v: oracle.dirac_residual(br, dp, sign_variant=v) for v in oracle.SIGN_VARIANTS}
        assert not any(r.converged for r in reports.values())


class TestSpinOscillation:
    def test_starts_at_amplitude(self):
        st = two_branch_state(reduced_only(*GENERIC))
        tr = spin_oscillation(st, [0.0])
        assert tr.values[0] == tr.amplitude

    def test_vanishes_without_transverse_field(self):
        # as h -> 0 the second root approaches the d2 pole and the overlap factor kills A
        amps = [abs(spin_amplitude(two_branch_state(reduced_only(0.5, 0.0, h)))) for h in (0.2, 0.1, 0.05, 0.01)]
        assert all(x > y for x, y in zip(amps, amps[1:]))
        assert amps[-1] < 1e-100

    def test_frequency(self):
        st = two_branch_state(reduced_only(*GENERIC))
        w = oscillation_frequency(st)
        assert w == pytest.approx(st.E_diff, rel=1e-15)
        assert oscillation_frequency(st, literal=True) == st.E_diff
        times = np.linspace(0, 4 * 2 * math.pi / w, 81)
        tr = spin_oscillation(st, times, "quadrature")
        wf, amp, const = oracle.fitted_frequency(times, tr.values)
        assert wf == pytest.approx(w, rel=1e-3)
        assert abs(tr.constant) < 1e-6

    @pytest.mark.parametrize("h", [-0.2, 0.1, 0.2])
    def test_amplitude_against_quadrature(self, h):
        st = two_branch_state(reduced_only(0.8, 0.1, h))
        quad = spin_oscillation(st, [0.0], "quadrature").values[0]
        assert quad == pytest.approx(spin_amplitude(st), rel=1e-4)

    def test_printed_amplitude_differs(self):
        st = two_branch_state(reduced_only(0.8, 0.1, 0.2))
        quad = spin_oscillation(st, [0.0], "quadrature").values[0]
        assert abs(spin_amplitude_printed(st) / quad - 1) > 0.5

    def test_case2_quadrature(self):
        # the flipped cubic needs Omega < 0 for two positive roots
        dr = reduce_dirac(case2_params(H=0.2, Omega=-0.45, p=-0.6))
        st = two_branch_state(dr)
        quad = spin_oscillation(st, [0.0, 1.3], "quadrature").values
        closed = spin_oscillation(st, [0.0, 1.3]).values
        assert np.allclose(quad, closed, rtol=1e-4, atol=1e-12)

    def test_amplitude_peak_near_unit_E0(self):
        grid = np.linspace(0.8, 1.2, 401)
        scan = amplitude_scan(0.01, 0.01, grid)
        assert abs(grid[np.nanargmax(scan)] - 1.0) < 0.05
