import math

import numpy as np
import pytest

from qcalab import _kernels
from qcalab.dirac import (
    ConvergenceResult,
    DiracParams,
    WalkField,
    convergence_study,
    dirac_plane_wave,
    dirac_scattering_unitary,
    gaussian_field,
    walk_evolve,
    walk_step,
    walk_vs_engine_crosscheck,
)
from qcalab.pqca import Pqca, check_quiescence, pqca_evolve
from qcalab.state import Alphabet, Configuration, SparseState


def delta_field(grid, site, component="plus"):
    pp = np.zeros(grid, dtype=complex)
    pm = np.zeros(grid, dtype=complex)
    (pp if component == "plus" else pm)[site] = 1.0
    return WalkField(pp, pm)


class TestScatteringUnitary:
    def test_massless_middle_block_crosses_wires(self):
        u = dirac_scattering_unitary(0.0, 0.7).matrix
        assert np.array_equal(u[1:3, 1:3], [[0, 1], [1, 0]])

    def test_quarter_turn_middle_block(self):
        # m*eps = pi/2: c = 0, s = 1
        u = dirac_scattering_unitary(np.pi / 2, 1.0).matrix
        assert np.allclose(u[1:3, 1:3], [[-1j, 0], [0, -1j]], atol=1e-15)

    def test_empty_and_full_blocks_fixed(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            u = dirac_scattering_unitary(rng.uniform(0, 3), rng.uniform(0.01, 2)).matrix
            assert u[0, 0] == 1 and u[3, 3] == 1
            assert np.linalg.norm(u[:, 0] - np.eye(4)[:, 0]) == 0.0
            assert np.linalg.norm(u[:, 3] - np.eye(4)[:, 3]) == 0.0

    def test_parameter_validation(self):
        with pytest.raises(ValueError, match="eps"):
            dirac_scattering_unitary(1.0, 0.0)
        with pytest.raises(ValueError, match="mass"):
            dirac_scattering_unitary(-1.0, 0.5)


class TestWalkStep:
    def test_massless_delta_advances_one_site(self):
        f = walk_step(delta_field(16, 5), 0.0, 0.1)
        assert f.psi_plus[6] == 1.0 and np.count_nonzero(f.psi_plus) == 1
        assert np.count_nonzero(f.psi_minus) == 0

    def test_quarter_turn_flips_component_in_place(self):
        # cos(pi/2) is ~6e-17 in floating point, not exactly zero
        f = walk_step(delta_field(16, 5), np.pi / 2, 1.0)
        assert np.max(np.abs(f.psi_plus)) < 1e-15
        assert f.psi_minus[5] == pytest.approx(-1j)

    def test_probability_conserved(self):
        rng = np.random.default_rng(1)
        f = WalkField(
            rng.normal(size=32) + 1j * rng.normal(size=32),
            rng.normal(size=32) + 1j * rng.normal(size=32),
        ).normalized()
        for _ in range(5):
            f = walk_step(f, 0.9, 0.4)
            assert f.norm() == pytest.approx(1.0, abs=1e-12)

    def test_long_run_probability_drift(self):
        f = gaussian_field(256, 128.0, 8.0, mode=3)
        out = walk_evolve(f, 0.5, 0.1, 1000)
        assert abs(out.norm() - 1.0) < 1e-9

    def test_zero_mass_components_decouple(self):
        rng = np.random.default_rng(2)
        pp = rng.normal(size=16) + 1j * rng.normal(size=16)
        f = WalkField(pp, np.zeros(16, dtype=complex)).normalized()
        out = walk_evolve(f, 0.0, 0.3, 7)
        assert np.max(np.abs(out.psi_minus)) < 1e-14


class TestPlaneWave:
    def test_massless_right_mover_spinor(self):
        k = 2 * math.pi * 2 / (32 * 0.1)
        w = dirac_plane_wave(k, 0.0, 0.0, 32, 0.1)
        assert np.max(np.abs(w.psi_minus)) == 0.0
        assert abs(w.psi_plus[0]) == pytest.approx(1 / math.sqrt(32))

    def test_zero_momentum_mixes_equally(self):
        w = dirac_plane_wave(0.0, 1.3, 0.0, 16, 0.1)
        assert np.allclose(w.psi_plus, w.psi_minus)
        assert abs(w.psi_plus[0]) == pytest.approx(1 / math.sqrt(32))

    def test_dispersion_relation(self):
        for j, m in ((1, 0.5), (3, 0.0), (-2, 1.7)):
            k = 2 * math.pi * j / (64 * 0.25)
            omega = math.sqrt(k * k + m * m)
            assert omega * omega - k * k - m * m == pytest.approx(0.0, abs=1e-12)
            # one time unit of phase advance matches the sampled wave
            w0 = dirac_plane_wave(k, m, 0.0, 64, 0.25)
            w1 = dirac_plane_wave(k, m, 1.0, 64, 0.25)
            assert np.allclose(w1.psi_plus, w0.psi_plus * np.exp(-1j * omega), atol=1e-12)

    def test_noncommensurate_momentum_names_nearest_mode(self):
        with pytest.raises(ValueError, match="j=2"):
            dirac_plane_wave(0.4, 0.5, 0.0, 32, 1.0)

    def test_walk_eigenmode_phase(self):
        # the walk advances a commensurate mode by a pure phase per step
        k = 2 * math.pi * 3 / (64 * 0.2)
        w0 = dirac_plane_wave(k, 0.8, 0.0, 64, 0.2)
        w1 = walk_step(w0, 0.8, 0.2)
        overlap = np.vdot(
            np.concatenate([w0.psi_plus, w0.psi_minus]),
            np.concatenate([w1.psi_plus, w1.psi_minus]),
        )
        assert abs(abs(overlap) - 1.0) < 5e-3  # continuum spinor, not the exact eigenvector


class TestMasslessExactness:
    @pytest.mark.parametrize("eps", [0.1, 0.05, 0.025, 0.0125])
    def test_plane_wave_error_is_roundoff(self, eps):
        grid = 64
        k = 2 * math.pi * 1 / (grid * eps)
        w0 = dirac_plane_wave(k, 0.0, 0.0, grid, eps)
        steps = round(1.0 / eps)
        evolved = walk_evolve(w0, 0.0, eps, steps)
        ref = dirac_plane_wave(k, 0.0, steps * eps, grid, eps)
        assert evolved.l2_distance(ref) < 1e-12


class TestConvergenceStudy:
    def test_first_order_in_the_fixed_grid_family(self):
        res = convergence_study(0.5, 1, 1.0, [0.1, 0.05, 0.025, 0.0125], 64)
        assert isinstance(res, ConvergenceResult)
        assert not res.skipped
        assert 0.7 <= res.fitted_order <= 1.3
        assert all(r.l2_error > 0 for r in res.rows)

    def test_second_order_at_fixed_physical_momentum(self):
        # same scheme, fixed k and circumference: errors scale as eps^2
        k = 2 * math.pi / 3.2
        errs = []
        for eps in (0.1, 0.05, 0.025):
            grid = round(3.2 / eps)
            w0 = dirac_plane_wave(k, 0.5, 0.0, grid, eps)
            ref = dirac_plane_wave(k, 0.5, 1.0, grid, eps)
            errs.append(walk_evolve(w0, 0.5, eps, round(1.0 / eps)).l2_distance(ref))
        for a, b in zip(errs, errs[1:]):
            assert 0.2 < b / a < 0.3

    def test_massless_errors_vanish(self):
        res = convergence_study(0.0, 1, 1.0, [0.1, 0.05], 64)
        assert all(r.l2_error < 1e-12 for r in res.rows)

    def test_noninteger_step_count_skipped(self):
        res = convergence_study(0.5, 1, 1.0, [0.1, 0.03], 64)
        assert [e for e, _ in res.skipped] == [0.03]
        assert len(res.rows) == 1

    def test_requires_strictly_decreasing_eps(self):
        with pytest.raises(ValueError, match="decreasing"):
            convergence_study(0.5, 1, 1.0, [0.05, 0.1], 64)

    def test_error_near_linear_in_time(self):
        # dispersion-phase regime: interpolating T/2 and 3T/2 predicts T
        def err(total):
            k = 2 * math.pi / (64 * 0.025)
            w0 = dirac_plane_wave(k, 0.5, 0.0, 64, 0.025)
            ref = dirac_plane_wave(k, 0.5, total, 64, 0.025)
            return walk_evolve(w0, 0.5, 0.025, round(total / 0.025)).l2_distance(ref)

        mid, lo, hi = err(1.0), err(0.5), err(1.5)
        assert abs(mid - (lo + hi) / 2) <= 0.1 * mid


class TestEngineCrosscheck:
    def test_massless_delta(self):
        assert walk_vs_engine_crosscheck(0.0, 0.1, 10, delta_field(64, 32)) < 1e-12

    def test_quarter_mass_two_steps_match_hand_trace(self):
        f = delta_field(64, 32)
        assert walk_vs_engine_crosscheck(np.pi / 4, 1.0, 2, f) < 1e-12
        w = walk_evolve(f, np.pi / 4, 1.0, 2)
        # branches: transmit-transmit 1/2 at +2, scatter-scatter -1/2 in
        # place, single scatters -i/2 at the two odd neighbours
        assert w.psi_plus[34] == pytest.approx(0.5, abs=1e-15)
        assert w.psi_plus[32] == pytest.approx(-0.5, abs=1e-15)
        assert w.psi_minus[31] == pytest.approx(-0.5j, abs=1e-15)
        assert w.psi_minus[33] == pytest.approx(-0.5j, abs=1e-15)

    def test_left_mover_delta(self):
        assert walk_vs_engine_crosscheck(0.3, 0.5, 6, delta_field(64, 33, "minus")) < 1e-12

    def test_gaussian_packet_hundred_steps(self):
        init = gaussian_field(512, 256.0, 10.0)
        assert walk_vs_engine_crosscheck(0.35, 0.2, 100, init) < 1e-9


class TestOneParticleSector:
    def test_sector_closure_under_engine_evolution(self):
        pq = Pqca(dirac_scattering_unitary(0.8, 0.5))
        rng = np.random.default_rng(3)
        terms = {
            Configuration(1, {(int(2 * i),): 1}): complex(rng.normal(), rng.normal())
            for i in range(8)
        }
        s = SparseState(Alphabet(2), 1, terms).normalized()
        out = pqca_evolve(s, pq, 20)
        for config, amp in out.terms.items():
            assert len(config.cells) == 1, f"sector leak {config} amp {amp}"


class TestKernels:
    def test_numba_and_numpy_paths_agree(self):
        rng = np.random.default_rng(4)
        pp = rng.normal(size=48) + 1j * rng.normal(size=48)
        pm = rng.normal(size=48) + 1j * rng.normal(size=48)
        ref = _kernels.evolve_numpy(pp, pm, math.cos(0.2), math.sin(0.2), 31)
        if _kernels.HAVE_NUMBA:
            jit = _kernels.evolve_numba(pp, pm, math.cos(0.2), math.sin(0.2), 31)
            assert np.max(np.abs(ref[0] - jit[0])) < 1e-13
            assert np.max(np.abs(ref[1] - jit[1])) < 1e-13

    def test_env_flag_selects_numpy(self, monkeypatch):
        monkeypatch.setenv("QCALAB_NO_NUMBA", "1")
        assert _kernels.active_backend() == "numpy"
        monkeypatch.delenv("QCALAB_NO_NUMBA")
        if _kernels.HAVE_NUMBA:
            assert _kernels.active_backend() == "numba"


class TestDiracParams:
    def test_step_count(self):
        p = DiracParams(0.5, 0.1, 64, 1.0)
        assert p.step_count() == 10

    def test_rejects_fractional_step_count(self):
        with pytest.raises(ValueError, match="integer multiple"):
            DiracParams(0.5, 0.3, 64, 1.0).step_count()

    def test_rejects_odd_grid(self):
        with pytest.raises(ValueError, match="even"):
            DiracParams(0.5, 0.1, 63)
