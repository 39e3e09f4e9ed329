import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import K1
from roundtrip import materials, roundtrip
from springbench import life
from springbench.analysis import (MODULUS_NOTE, analyze_fatigue, analyze_monotonic, direction_flags, fit_modulus,
                                  fit_sn, offset_yield, plastic_strain_range, reduce, uts)
from springbench.curve import StressStrainCurve
from springbench.errors import InvalidInputError, NoYieldError, OpenLoopError, RecordError, UnderdeterminedError
from springbench.model import BilinearMaterial, MaterialState, SpecimenGeometry, monotonic_curve, stress_update
from springbench.protocol import FatigueProtocol, MonotonicProtocol
from springbench.simulator import CycleStats, FatigueOutcome, run_fatigue, run_monotonic

UM = 1e-6


def _record(bench, dx, dy):
    n = len(dx)
    rec = run_monotonic(bench, MonotonicProtocol(1 * UM))
    return dataclasses.replace(rec, t=np.arange(n, dtype=float), u_act=np.linspace(0, 1e-6, n),
                               dx=np.asarray(dx, float), dy=np.asarray(dy, float), force=K1 * np.asarray(dx))


def _line(e, n=50, eps_max=0.003):
    eps = np.linspace(0, eps_max, n)
    return StressStrainCurve(eps, e * eps, np.ones(n, bool))


class TestReduce:
    def test_equal_markers_zero_strain(self, cu300_bench):
        x = np.linspace(0, 1e-7, 10)
        curve = reduce(_record(cu300_bench, x, x), cu300_bench.geometry, K1)
        assert np.all(curve.strain == 0)

    def test_force_to_stress(self, cu300_bench):
        curve = reduce(_record(cu300_bench, [0, 0.2e-6], [0, 0.5e-6]), cu300_bench.geometry, K1)
        assert K1 * 0.2e-6 == pytest.approx(3e-3, rel=1e-12)
        assert curve.stress[1] == pytest.approx(100e6, rel=1e-12)
        assert curve.strain[1] == pytest.approx(0.3e-6 / 600e-6, rel=1e-12)

    def test_raw_channels_bit_exact(self, cu300_bench):
        rec = run_monotonic(cu300_bench, MonotonicProtocol(5 * UM))
        g = cu300_bench.geometry
        curve = reduce(rec, g, K1)
        assert np.array_equal(curve.strain, (rec.dy - rec.dx) / g.gauge_length)
        assert np.array_equal(curve.stress, K1 * rec.dx / (g.width * g.thickness))

    def test_metadata_mismatch(self, cu300_bench):
        rec = run_monotonic(cu300_bench, MonotonicProtocol(1 * UM))
        with pytest.raises(RecordError, match="geometry"):
            reduce(rec, SpecimenGeometry(400e-9), K1)
        with pytest.raises(RecordError, match="k1"):
            reduce(rec, cu300_bench.geometry, 2 * K1)

    def test_single_sample(self, cu300_bench):
        rec = _record(cu300_bench, [0.0], [0.0])
        with pytest.raises(RecordError, match="2 samples"):
            reduce(rec, cu300_bench.geometry, K1)

    def test_direction_from_command(self):
        assert direction_flags([0, 1, 2, 2, 1, 0, 0, 1]).tolist() == [True, True, True, True, False, False, False,
                                                                      True]


class TestModulus:
    def test_exact_line(self):
        e, r2 = fit_modulus(_line(100e9), (0, 1))
        assert e == pytest.approx(100e9, rel=1e-12) and r2 == pytest.approx(1.0)

    def test_too_few_points(self):
        with pytest.raises(InvalidInputError, match=r"window \[0, 0.0001\] holds 2 points"):
            fit_modulus(_line(100e9), (0, 1e-4))

    def test_default_window_skips_knee(self):
        curve = monotonic_curve(BilinearMaterial(103e9, 474.2e6, 575e6), 0.02, 400)
        e, _ = fit_modulus(curve)
        assert e == pytest.approx(103e9, rel=1e-9)

    def test_bad_direction(self):
        with pytest.raises(InvalidInputError):
            fit_modulus(_line(1e9), direction="sideways")

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e9, 500e9), st.floats(-1e6, 1e6))
    def test_r2_in_unit_interval(self, e, jitter):
        curve = _line(e, 20)
        noisy = StressStrainCurve(curve.strain, curve.stress + jitter * np.cos(np.arange(20)), curve.loading)
        _, r2 = fit_modulus(noisy, (0, 1))
        assert 0.0 <= r2 <= 1.0


class TestOffsetYield:
    def test_perfectly_plastic(self):
        m = BilinearMaterial(103e9, 474.2e6, 575e6, tangent_modulus=0.0)
        curve = monotonic_curve(m, 0.01, 101)
        assert offset_yield(curve, 103e9) == pytest.approx(474.2e6, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(50e9, 300e9), st.floats(100e6, 800e6), st.floats(1.1, 1.5), st.integers(30, 300))
    def test_closed_form_and_resampling(self, e, sy, ratio, n):
        m = BilinearMaterial(e, sy, sy * ratio)
        coarse = offset_yield(monotonic_curve(m, 0.03, n), e)
        fine = offset_yield(monotonic_curve(m, 0.03, 10 * n), e)
        # the curve is piecewise linear with the knee sampled, so interpolation is exact
        assert coarse == pytest.approx(m.offset_yield_exact(), rel=1e-9)
        assert abs(fine / coarse - 1) < 1e-3

    def test_elastic_curve(self):
        with pytest.raises(NoYieldError):
            offset_yield(_line(100e9), 100e9)

    def test_bad_modulus(self):
        with pytest.raises(InvalidInputError):
            offset_yield(_line(100e9), 0.0)


class TestUTS:
    def test_single_point(self):
        assert uts(StressStrainCurve(np.array([0.01]), np.array([5e6]), np.array([True]))) == 5e6

    def test_elastic_ramp(self):
        assert uts(_line(100e9, eps_max=0.004)) == pytest.approx(400e6)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            uts(StressStrainCurve(np.array([]), np.array([]), np.array([], bool)))


def _loop(material, eps_max, eps_min, n=2001):
    """Drive the virgin material to eps_max, then record one cycle eps_max -> eps_min -> eps_max."""
    _, state = stress_update(material, MaterialState(), eps_max)
    path = np.concatenate([np.linspace(eps_max, eps_min, n), np.linspace(eps_min, eps_max, n)[1:]])
    sig = np.empty_like(path)
    for i, e in enumerate(path):
        sig[i], state = stress_update(material, state, e)
    return StressStrainCurve(path, sig, direction_flags(path))


class TestPlasticStrainRange:
    def test_elastic_loop(self):
        m = BilinearMaterial(100e9, 500e6, 600e6)
        assert plastic_strain_range(_loop(m, 0.004, 0.001)) == 0.0

    @pytest.mark.parametrize("eps_max, eps_min", [(0.01, -0.01), (0.012, 0.0), (0.02, 0.005)])
    def test_kinematic_closed_form(self, eps_max, eps_min):
        m = BilinearMaterial(100e9, 300e6, 400e6, tangent_modulus=2e9)
        loop = _loop(m, eps_max, eps_min)
        d_sigma = loop.stress.max() - loop.stress.min()
        expected = (eps_max - eps_min) - d_sigma / 100e9
        assert expected > 0
        assert plastic_strain_range(loop) == pytest.approx(expected, rel=1e-9)

    def test_open_loop(self):
        eps = np.array([0.0, 0.01, 0.02, 0.01, 0.008])
        loop = StressStrainCurve(eps, 1e9 * eps, direction_flags(eps))
        with pytest.raises(OpenLoopError) as err:
            plastic_strain_range(loop)
        assert err.value.gap == pytest.approx(0.008)

    @pytest.mark.xfail(strict=True, reason="loop at 300 MPa mean stays elastic below the 410 MPa yield; "
                                           "the bilinear model cannot produce a plastic loop there")
    def test_cu300_fatigue_loop_width(self, cu300_bench):
        _, rec = run_fatigue(cu300_bench, FatigueProtocol(2.7 * UM, 0.36 * UM))
        assert analyze_fatigue(rec).delta_eps_pl == pytest.approx(0.00317, rel=0.10)


def _outcome(sm, sa, cycles, failed):
    return FatigueOutcome(FatigueProtocol(UM, UM), cycles, failed, CycleStats(sm + sa, sm - sa, 0.0), 1.0)


def _sn_set(sf=64.9e6, b=-0.05, uts_=575e6):
    levels = [(100e6, 30e6), (200e6, 25e6), (300e6, 20e6), (250e6, 30e6)]
    return [_outcome(sm, sa, life.basquin_cycles(life.goodman(sa, sm, uts_), sf, b), True) for sm, sa in levels]


class TestFitSN:
    def test_exact_recovery(self):
        model = fit_sn(_sn_set(), 575e6)
        assert model.sigma_f == pytest.approx(64.9e6, rel=1e-9)
        assert model.b == pytest.approx(-0.05, rel=1e-9)
        assert np.max(np.abs(model.residuals)) < 1e-9

    def test_consistent_runout(self):
        model = fit_sn(_sn_set() + [_outcome(100e6, 5e6, 1e5, False)], 575e6)
        assert len(model.runouts) == 1 and model.flagged == []

    def test_inconsistent_runout(self):
        bad = _outcome(300e6, 30e6, 1e6, False)
        model = fit_sn(_sn_set() + [bad], 575e6)
        assert model.flagged == [bad]

    def test_runouts_excluded(self):
        a = fit_sn(_sn_set(), 575e6)
        b = fit_sn(_sn_set() + [_outcome(300e6, 30e6, 1e6, False)], 575e6)
        assert (a.sigma_f, a.b) == (b.sigma_f, b.b)

    def test_underdetermined(self):
        with pytest.raises(UnderdeterminedError):
            fit_sn(_sn_set()[:1] + [_outcome(100e6, 5e6, 1e5, False)], 575e6)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e6, 500e6), st.floats(1e6, 500e6))
    def test_prediction_decreasing(self, s1, s2):
        model = fit_sn(_sn_set(), 575e6)
        if s1 < s2:
            assert model.predict_cycles(s1) > model.predict_cycles(s2)


class TestReports:
    def test_cu_zero_noise_modulus(self, cu300_geometry, calibrated_train):
        from springbench.simulator import Bench
        from springbench.model import SensorSpec
        m = BilinearMaterial(103e9, 474.2e6, 575e6, unloading_modulus=107e9)
        rec = run_monotonic(Bench(cu300_geometry, m, calibrated_train, SensorSpec()),
                            MonotonicProtocol(8 * UM, unload=True, n_cycles=2, final_displacement=40 * UM))
        rep = analyze_monotonic(rec)
        assert rep.E_loading == pytest.approx(103e9, rel=1e-3)
        assert rep.E_unloading == pytest.approx(107e9, rel=1e-3)
        assert rep.uts >= rep.sigma_y_offset02
        assert rep.elongation_at_failure > 0
        assert MODULUS_NOTE in rep.notes
        assert 0 <= rep.diagnostics["loading_fit"]["r_squared"] <= 1

    def test_no_yield(self, cu300_bench):
        rep = analyze_monotonic(run_monotonic(cu300_bench, MonotonicProtocol(2 * UM)))
        assert rep.sigma_y_offset02 is None and rep.diagnostics["yield"] == "not reached"

    def test_fatigue_report(self, cu300_bench):
        out, rec = run_fatigue(cu300_bench, FatigueProtocol(2.7 * UM, 0.36 * UM))
        rep = analyze_fatigue(rec)
        assert rep.sigma_mean == pytest.approx(300e6, rel=1e-3)
        assert rep.sigma_amp == pytest.approx(20e6, rel=1e-2)
        assert rep.outcome["cycles"] == out.cycles


@pytest.mark.parametrize("noisy, tol", [(False, (1e-3,) * 3), (True, (0.02, 0.03, 0.02))],
                         ids=["zero-noise", "bench-noise"])
def test_roundtrip_random_materials(noisy, tol):
    for i, m in enumerate(materials()):
        errs = roundtrip(m, noisy, seed=i)
        assert all(e < t for e, t in zip(errs, tol)), (m, errs)
