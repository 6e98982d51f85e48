from __future__ import annotations

import math

import numpy as np
import pytest

from rotfield import oracle
from rotfield.core import PhysicalParams, ReducedPauliParams, reduce_pauli
from rotfield.dirac import DiracParams, reduce_dirac, two_branch_state
from rotfield.errors import NoAnnihilatingVariant
from rotfield.pauli import (
    PauliState,
    QuadraticForm,
    delta_zero_frequency,
    energy_levels,
    normalization_constraint,
    pauli_ground_state,
    solve_quadratic_system,
)


def rp_of(g1, g2, b, f):
    return ReducedPauliParams(g1=g1, g2=g2, b=b, f=f, Delta=0.0, gamma=0.0, rho=0.0)


GENERIC_RP = rp_of(1.0, 2.0, 0.5, 3.0)


def landau_state(H_z: float = 1.0, p: float = 0.4) -> PauliState:
    """Static axial field only; this sits on a band edge, so the Gaussian is
    written down directly."""
    prm = PhysicalParams(H_z=H_z, p=p)
    rp = reduce_pauli(prm)
    half = -abs(prm.charge * H_z) / (2 * prm.hbar * prm.light_speed)
    qf = QuadraticForm(half, 0.0, half, 0.0, 0.0)
    E = {lv.sigma: lv.E for lv in energy_levels(rp, qf, p, 0)}
    scale = math.sqrt(normalization_constraint(qf))
    return PauliState(qf, 0.6 * scale, 0.8j * scale, rp.gamma, E[1], E[-1], prm)


class TestStationaryResidual:
    def test_exact_state(self):
        qf = solve_quadratic_system(GENERIC_RP)
        rep = oracle.pauli_stationary_residual(qf, GENERIC_RP, oracle.stationary_epsilon(qf))
        assert rep.relative_residual < 1e-10
        assert rep.converged
        assert rep.convergence_order == pytest.approx(2.0, abs=0.3)

    def test_perturbed_coefficient(self):
        qf = solve_quadratic_system(GENERIC_RP)
        eps = oracle.stationary_epsilon(qf)
        bad = QuadraticForm(qf.d11 + 0.1, qf.d12, qf.d22, qf.d1, qf.d2)
        rep = oracle.pauli_stationary_residual(bad, GENERIC_RP, eps)
        assert 0.01 < rep.relative_residual < 1.0
        assert not rep.converged

    def test_fd_orders(self):
        qf = QuadraticForm(-1.0, 0.0, -1.0, 0.0, 0.0)
        rep = oracle.pauli_stationary_residual(qf, rp_of(1.0, 1.0, 0.0, 0.0), 2.0)
        assert rep.fd_relative_fine < rep.fd_relative_coarse
        assert rep.convergence_order == pytest.approx(2.0, abs=0.3)


class TestTimeDependentResidual:
    def test_resonant_state(self):
        prm = PhysicalParams(H_z=1.0, H=0.5, p=0.2)
        prm = prm.replace(Omega=delta_zero_frequency(prm))
        rep = oracle.pauli_time_dependent_residual(pauli_ground_state(prm, 1.0, 1.0))
        assert rep.converged
        assert rep.convergence_order == pytest.approx(2.0, abs=0.3)

    def test_generic_rotating_state(self):
        prm = PhysicalParams(H_z=1.0, H=0.7, Omega=3.1, p=-0.3, g_factor=2.3)
        rep = oracle.pauli_time_dependent_residual(pauli_ground_state(prm, 0.4, -0.9j))
        assert rep.converged

    def test_landau_state(self):
        rep = oracle.pauli_time_dependent_residual(landau_state())
        assert rep.converged

    def test_detects_perturbed_energy(self):
        st = pauli_ground_state(PhysicalParams(H_z=1.0, H=0.5, Omega=2.0, p=0.2), 1.0, 0.0)
        bad = PauliState(st.quadratic_form, st.C_plus, st.C_minus, st.gamma, st.E_plus * 1.01, st.E_minus, st.params)
        rep = oracle.pauli_time_dependent_residual(bad)
        assert not rep.converged
        assert rep.fd_relative_fine > 1e-4


class TestDiracResidual:
    def test_plane_wave_standard_variant(self):
        prm = PhysicalParams(H_z=0.0, H=0.0, Omega=1.0)
        field, omega, k = oracle.free_plane_wave(0.7, prm)
        ev = oracle.sample_disk((0.0, 0.0), 2.0, extra_dims=2)
        hints = dict(width=1.0, omega_max=omega, k_max=max(k, 1.0))
        dp = DiracParams(prm, 1)
        good = oracle.dirac_residual(field, dp, ev, "standard", **hints)
        assert good.converged
        others = [oracle.dirac_residual(field, dp, ev, v, **hints) for v in ("printed", "alpha-minus", "beta-minus")]
        assert not any(r.converged for r in others)

    def test_plane_wave_wrong_energy(self):
        prm = PhysicalParams(H_z=0.0, H=0.0, Omega=1.0)
        field, omega, k = oracle.free_plane_wave(0.7, prm, energy=1.1)
        ev = oracle.sample_disk((0.0, 0.0), 2.0, extra_dims=2)
        hints = dict(width=1.0, omega_max=omega, k_max=max(k, 1.0))
        with pytest.raises(NoAnnihilatingVariant):
            oracle.dirac_sign_sweep(field, DiracParams(prm, 1), ev, **hints)

    def test_variant_table_rows(self):
        dp = DiracParams.from_reduced(0.8, 0.1, 0.05)
        rows = oracle.sign_variant_table(two_branch_state(reduce_dirac(dp)), dp)
        assert [r["variant"] for r in rows] == list(oracle.SIGN_VARIANTS)
        assert [r["variant"] for r in rows if r["converged"]] == ["printed"]


class TestNormQuadrature:
    def test_unit_gaussian(self):
        res = oracle.gaussian_norm_quadrature(QuadraticForm(-1.0, 0.0, -1.0, 0.0, 0.0))
        assert res.value == pytest.approx(math.pi, rel=1e-12)

    def test_linear_terms(self):
        qf = QuadraticForm(-1.0, 0.0, -1.0, 0.3, -0.2)
        expected = math.pi * math.exp(0.3**2 + 0.2**2)
        assert oracle.completed_square_norm(qf) == pytest.approx(expected, rel=1e-14)
        assert oracle.gaussian_norm_quadrature(qf).value == pytest.approx(expected, rel=1e-12)

    def test_indefinite(self):
        with pytest.raises(ValueError):
            oracle.gaussian_norm_quadrature(QuadraticForm(-1.0, 0.0, 0.5, 0.0, 0.0))

    def test_solver_form(self):
        qf = solve_quadratic_system(GENERIC_RP)
        quad = oracle.gaussian_norm_quadrature(qf).value
        assert quad == pytest.approx(oracle.completed_square_norm(qf), rel=1e-10)
        assert quad == pytest.approx(1 / normalization_constraint(qf), rel=1e-10)


class TestBruteForce:
    def test_oscillator_root(self):
        roots = oracle.brute_force_d_system(rp_of(1.0, 1.0, 0.0, 0.0), 32)
        assert any(np.allclose([q.d11, q.d12, q.d22, q.d1, q.d2], [-1, 0, -1, 0, 0], atol=1e-9) for q in roots)

    def test_forbidden_band_filtered(self):
        rp = rp_of(1.0, 2.0, 0.0, math.sqrt(6.0))
        roots = oracle.brute_force_d_system(rp, 64)
        assert roots
        assert oracle.physical_roots(roots, rp) == []

    def test_minimum_starts(self):
        with pytest.raises(ValueError):
            oracle.brute_force_d_system(GENERIC_RP, 16)

    def test_solver_root_in_oracle_set(self):
        qf = solve_quadratic_system(GENERIC_RP)
        phys = oracle.physical_roots(oracle.brute_force_d_system(GENERIC_RP, 64), GENERIC_RP)
        assert len(phys) == 1
        q = phys[0]
        assert np.allclose([q.d11, q.d12, q.d22, q.d1, q.d2], [qf.d11, qf.d12, qf.d22, qf.d1, qf.d2], atol=1e-9)


def test_sample_disk_deterministic():
    a = oracle.sample_disk((1.0, -1.0), 2.0, seed=3)
    b = oracle.sample_disk((1.0, -1.0), 2.0, seed=3)
    assert np.array_equal(a, b)
    assert np.all(np.hypot(a[:, 0] - 1.0, a[:, 1] + 1.0) <= 2.0)


def test_fitted_frequency():
    t = np.linspace(0, 20, 401)
    w, a, c = oracle.fitted_frequency(t, 0.1 + 0.3 * np.cos(1.7 * t + 0.4))
    assert (w, a, c) == pytest.approx((1.7, 0.3, 0.1), rel=1e-9)
