from __future__ import annotations

import math

import numpy as np
import pytest

from rotfield.core import PhysicalParams
from rotfield.evolve import (
    Grid2D,
    Propagator,
    SpinorField,
    fidelity_run,
    resonance_demo,
    resonance_params,
    sample_state,
    step,
)
from rotfield.pauli import PauliState, pauli_ground_state

DRIVEN = PhysicalParams(H_z=1.0, H=0.5, Omega=2.0, p=0.3)
SMALL = 32


def small_grid(state, n=SMALL):
    return Grid2D.for_state(state, n, extent=5.0)


def driven_field(n=SMALL):
    state = pauli_ground_state(DRIVEN, 1.0, 0.5)
    return state, sample_state(state, small_grid(state, n))


def distance(a: SpinorField, b: SpinorField) -> float:
    return math.sqrt(np.sum(np.abs(a.values - b.values) ** 2) * a.grid.cell_area)


class TestGrid:
    def test_spacing_excludes_boundary(self):
        g = Grid2D(9, 9, 5.0, 1.0)
        x, _ = g.axes()
        assert g.dx == pytest.approx(1.0)
        assert x[0] == pytest.approx(-4.0) and x[-1] == pytest.approx(4.0)

    def test_sampled_state_normalized(self):
        state = pauli_ground_state(DRIVEN, 1.0, 0.5)
        fld = sample_state(state, Grid2D.for_state(state, 96))
        assert fld.norm == pytest.approx(1.0, abs=1e-8)

    def test_bad_stencil(self):
        _, fld = driven_field()
        with pytest.raises(ValueError):
            Propagator(fld.grid, DRIVEN, 0.01, order=3)

    def test_bad_step(self):
        _, fld = driven_field()
        with pytest.raises(ValueError):
            Propagator(fld.grid, DRIVEN, 0.0)


class TestStep:
    def test_small_step_near_identity(self):
        _, fld = driven_field()
        for dt in (1e-4, 1e-5):
            assert distance(step(fld, DRIVEN, dt), fld) < 50 * dt

    def test_local_error_third_order(self):
        _, fld = driven_field(24)
        errors = []
        for dt in (0.04, 0.02):
            one = Propagator(fld.grid, DRIVEN, dt).advance(fld, 1)
            two = Propagator(fld.grid, DRIVEN, dt / 2).advance(fld, 2)
            errors.append(distance(one, two))
        assert math.log2(errors[0] / errors[1]) == pytest.approx(3.0, abs=0.3)

    def test_global_second_order(self):
        _, fld = driven_field(24)
        t = 0.4
        runs = {dt: Propagator(fld.grid, DRIVEN, dt).advance(fld, round(t / dt)) for dt in (0.04, 0.02, 0.01)}
        ratio = distance(runs[0.04], runs[0.02]) / distance(runs[0.02], runs[0.01])
        assert math.log2(ratio) == pytest.approx(2.0, abs=0.3)

    def test_norm_per_step(self):
        _, fld = driven_field()
        prop = Propagator(fld.grid, DRIVEN, 0.05)
        for _ in range(10):
            nxt = prop.advance(fld, 1)
            assert abs(nxt.norm / fld.norm - 1) < 1e-10
            fld = nxt

    def test_scalar_potential_is_global_phase(self):
        # the Cayley map shifts phases only up to O(dt**2), so the gap must shrink at that rate
        _, fld = driven_field()
        gaps = []
        for dt in (0.05, 0.025):
            n = round(0.3 / dt)
            a = Propagator(fld.grid, DRIVEN, dt).advance(fld, n)
            b = Propagator(fld.grid, DRIVEN, dt, scalar_potential=0.7).advance(fld, n)
            gaps.append(np.max(np.abs(np.abs(a.values) - np.abs(b.values))))
            assert a.s3() == pytest.approx(b.s3(), abs=1e-4)
        assert gaps[0] < 1e-3
        assert math.log2(gaps[0] / gaps[1]) == pytest.approx(2.0, abs=0.3)

    def test_free_gaussian_spreading(self):
        prm = PhysicalParams(H_z=0.0, H=0.0, Omega=0.0)
        grid = Grid2D(128, 128, 8.0, 1.0)
        X, Y = grid.mesh()

        def exact(t):
            return np.exp(-(X**2 + Y**2) / (2 * (1 + 1j * t))) / (1 + 1j * t)

        fld = SpinorField(np.stack([exact(0.0), np.zeros_like(X, dtype=complex)]), 0.0, grid)
        out = Propagator(grid, prm, 0.002, order=6).advance(fld, 500)
        assert out.time == pytest.approx(1.0)
        assert np.max(np.abs(out.values[0] - exact(out.time))) < 1e-6


class TestFidelity:
    def test_zero_duration(self):
        state, fld = driven_field()
        marks = fidelity_run(state, t_final=0.0, grid=fld.grid)
        assert len(marks) == 1
        assert marks[0].overlap == pytest.approx(1.0, abs=1e-14)

    def test_short_tracking(self):
        state = pauli_ground_state(DRIVEN, 1.0, 0.5)
        marks = fidelity_run(state, t_final=0.5, grid=Grid2D.for_state(state, 64), dt=0.01, n_checkpoints=4)
        assert min(m.overlap for m in marks) > 0.999

    def test_detuned_energy_drifts(self):
        state = pauli_ground_state(DRIVEN, 1.0, 1.0)
        bad = PauliState(
            state.quadratic_form, state.C_plus, state.C_minus, state.gamma, state.E_plus * 1.01, state.E_minus, state.params
        )
        grid = Grid2D.for_state(state, 48)
        good = fidelity_run(state, t_final=3.0, grid=grid, dt=0.02, n_checkpoints=3)
        drift = fidelity_run(state, t_final=3.0, grid=grid, dt=0.02, n_checkpoints=3, reference=bad)
        # a 1% energy error costs a small relative phase, so compare the infidelities
        assert 1 - drift[-1].overlap > 10 * (1 - good[-1].overlap)


class TestResonance:
    def test_params_remove_longitudinal_term(self):
        prm = resonance_params()
        assert prm.Omega == 2.0

    def test_without_drive_s3_constant(self):
        prm = PhysicalParams(H_z=1.0, H=0.0, Omega=0.0)
        state = PauliState(*_landau(prm))
        grid = Grid2D.for_state(state, SMALL)
        marks = fidelity_run(state, t_final=1.0, grid=grid, dt=0.05, n_checkpoints=4)
        assert np.ptp([m.s3 for m in marks]) < 1e-12

    def test_off_resonance_small_amplitude(self):
        prm = resonance_params().replace(Omega=8.0)
        tr = resonance_demo(prm, grid=Grid2D.for_state(pauli_ground_state(prm, 1, 1), SMALL), t_final=2.0, dt=0.02, n_samples=20)
        ref = np.array(tr.meta["reference"])
        assert tr.amplitude < 0.1
        assert np.max(np.abs(tr.values - ref)) < 1e-2

    def test_short_resonant_segment(self):
        prm = resonance_params()
        grid = Grid2D.for_state(pauli_ground_state(prm, 1, 1), 48)
        tr = resonance_demo(prm, grid=grid, t_final=1.0, dt=0.02, n_samples=10)
        assert np.max(np.abs(tr.values - np.array(tr.meta["reference"]))) < 1e-3
        assert tr.values[0] == pytest.approx(0.5, abs=1e-12)


def _landau(prm: PhysicalParams):
    from rotfield.core import reduce_pauli
    from rotfield.pauli import QuadraticForm, energy_levels, normalization_constraint

    rp = reduce_pauli(prm)
    half = -abs(prm.charge * prm.H_z) / (2 * prm.hbar * prm.light_speed)
    qf = QuadraticForm(half, 0.0, half, 0.0, 0.0)
    E = {lv.sigma: lv.E for lv in energy_levels(rp, qf, prm.p, 0)}
    s = math.sqrt(normalization_constraint(qf) / 2)
    return qf, s, s, rp.gamma, E[1], E[-1], prm
