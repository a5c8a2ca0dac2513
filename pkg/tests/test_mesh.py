import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonic_vqa.errors import CalibrationError, InvalidArgument
from photonic_vqa.mesh import (
    CalibrationCurve, PhaseVector, Stage, amplitudes_from_phases, embed, fit_calibration,
    is_unitary, mzi_unitary, phase_distance, phases_for_projector, projection_vector,
    stage_four_matrix, stage_four_product, stage_one_matrix, stage_one_product, wrap_angle,
)
from photonic_vqa.tables import phase_row

angle = st.floats(-np.pi, np.pi, allow_nan=False)
angles3 = st.tuples(angle, angle, angle)
angles4 = st.tuples(angle, angle, angle, angle)
PI = np.pi


def random_unit(rng, n=4):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def alpha_oracle(theta, phi):
    # column 2 of the pump mesh, written out by hand
    t1, t2, t3 = theta
    return np.exp(1j * np.asarray(phi)) * np.array([
        np.sin(t1) * np.cos(t2), -np.sin(t1) * np.sin(t2),
        np.cos(t1) * np.sin(t3), np.cos(t1) * np.cos(t3)])


class TestMZI:
    def test_balanced_point(self):
        u = mzi_unitary(np.pi / 2, 1)
        assert np.allclose(np.abs(u) ** 2, 0.5)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_bar_and_cross(self, sign):
        assert np.allclose(np.abs(mzi_unitary(0.0, sign)), [[0, 1], [1, 0]])
        assert np.allclose(np.abs(mzi_unitary(np.pi, sign)), [[1, 0], [0, 1]])

    @given(angle, st.sampled_from([1, -1]))
    def test_unitary(self, theta, sign):
        assert is_unitary(mzi_unitary(theta, sign))

    def test_bad_sign(self):
        with pytest.raises(InvalidArgument):
            mzi_unitary(0.1, 0)

    def test_embed(self):
        u = mzi_unitary(0.3)
        e = embed(u, 2)
        assert np.allclose(e[1:3, 1:3], u)
        assert e[0, 0] == 1 and e[3, 3] == 1
        with pytest.raises(IndexError):
            embed(u, 4)
        with pytest.raises(IndexError):
            embed(u, 0)


class TestPhaseVector:
    def test_canonical_range(self):
        pv = PhaseVector((3 * PI, -PI, 2 * PI), (PI, -3 * PI, 0.5, 7.0))
        assert all(-PI < t <= PI for t in pv.theta + pv.phi)
        assert pv.theta[0] == pytest.approx(PI)

    def test_wrap(self):
        assert wrap_angle(-PI) == pytest.approx(PI)
        assert wrap_angle(2 * PI + 0.1) == pytest.approx(0.1)

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            PhaseVector((0.0, 0.0))
        with pytest.raises(InvalidArgument):
            PhaseVector((0.0, np.nan, 0.0))

    def test_dict_round_trip(self):
        pv = PhaseVector((0.1, 0.2, 0.3), (0.4, 0.5, 0.6, 0.7), Stage.SIGNAL)
        assert PhaseVector.from_dict(pv.to_dict()) == pv


class TestStageMatrices:
    @given(angles3, angles4)
    def test_unitarity(self, th, ph):
        assert is_unitary(stage_one_matrix(PhaseVector(th, ph, Stage.PUMP)))
        assert is_unitary(stage_four_matrix(PhaseVector(th, ph, Stage.IDLER)))

    @given(angles3, angles4)
    def test_alpha_closed_form(self, th, ph):
        a = amplitudes_from_phases(PhaseVector(th, ph, Stage.PUMP))
        assert np.allclose(a, alpha_oracle(th, ph), atol=1e-14)

    @given(angles3, angles4)
    def test_projector_row_has_alpha_form(self, th, ph):
        # row 2 of the projection stage has the same functional form as alpha
        row = stage_four_matrix(PhaseVector(th, ph, Stage.SIGNAL))[1]
        assert np.allclose(row, alpha_oracle(th, ph), atol=1e-14)

    @given(angles3, angles4)
    @settings(max_examples=50)
    def test_factor_product_matches_up_to_diagonal_phases(self, th, ph):
        for stage, closed, prod in ((Stage.PUMP, stage_one_matrix, stage_one_product),
                                    (Stage.IDLER, stage_four_matrix, stage_four_product)):
            pv = PhaseVector(th, ph, stage)
            a, b = closed(pv), prod(pv)
            assert is_unitary(b)
            assert np.allclose(np.abs(a), np.abs(b), atol=1e-12)
            # a = D1 b D2: the phase ratio on the support is rank one
            mask = np.abs(b) > 1e-6
            r = np.where(mask, a / np.where(mask, b, 1), 0)
            for j, k in zip(*np.nonzero(mask)):
                for l, m in zip(*np.nonzero(mask)):
                    if mask[j, m] and mask[l, k]:
                        assert abs(r[j, k] * r[l, m] - r[j, m] * r[l, k]) < 1e-9

    def test_stage_tags_enforced(self):
        with pytest.raises(InvalidArgument):
            stage_one_matrix(PhaseVector((0, 0, 0), stage=Stage.IDLER))
        with pytest.raises(InvalidArgument):
            stage_four_matrix(PhaseVector((0, 0, 0), stage=Stage.PUMP))

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_single_source_routing(self, m):
        a = amplitudes_from_phases(phase_row("A1", f"source {m}", Stage.PUMP))
        assert np.allclose(np.abs(a) ** 2, np.eye(4)[m - 1], atol=1e-12)
        for stage in (Stage.IDLER, Stage.SIGNAL):
            xi = projection_vector(phase_row("A1", f"source {m}", stage))
            assert abs(abs(xi[m - 1]) ** 2 - 1) < 1e-12

    def test_democratic_state(self):
        a = amplitudes_from_phases(phase_row("A2b", "all", Stage.PUMP))
        assert np.allclose(a, 0.5)


class TestInverseMap:
    def test_round_trip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            beta = random_unit(rng)
            for stage in Stage:
                pv = phases_for_projector(beta, stage)
                got = projection_vector(pv) if stage.is_projector else amplitudes_from_phases(pv)
                assert abs(np.vdot(beta, got)) ** 2 > 1 - 1e-12

    @given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False),
                    min_size=4, max_size=4))
    def test_round_trip_property(self, vals):
        v = np.array(vals)
        if np.linalg.norm(v) < 1e-3:
            return
        v = v / np.linalg.norm(v)
        pv = phases_for_projector(v, Stage.IDLER)
        assert phase_distance(projection_vector(pv), v) < 1e-9

    @pytest.mark.parametrize("m", [0, 1, 2, 3])
    def test_basis_vectors(self, m):
        pv = phases_for_projector(np.eye(4)[m], "SIGNAL")
        assert abs(projection_vector(pv)[m]) == pytest.approx(1, abs=1e-12)

    def test_minimal_phases_for_real_targets(self):
        # real non-negative targets need no output phase except the sign on mode 2
        pv = phases_for_projector(np.array([1, 0, 1, 0]) / np.sqrt(2), Stage.PUMP)
        assert np.allclose(pv.phi, 0)

    def test_rotated_settings_magnitudes(self):
        # the tabulated theta of the rotated rows reach |xi| of the XY eigenbasis
        s = 1 / np.sqrt(2)
        targets = {1: [1, 0, 0, 0], 2: [0, s, -1j * s, 0], 3: [0, s, 1j * s, 0], 4: [0, 0, 0, 1]}
        for m, t in targets.items():
            pv = phase_row("A4", f"P{m}.UR2")
            assert np.allclose(np.abs(projection_vector(pv)), np.abs(t), atol=1e-12)
            solved = phases_for_projector(np.array(t), Stage.IDLER)
            assert abs(np.sin(solved.theta[0])) == pytest.approx(abs(np.sin(pv.theta[0])), abs=1e-12)
            assert phase_distance(projection_vector(solved), np.array(t)) < 1e-12

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidArgument):
            phases_for_projector(np.ones(4))


class TestCalibration:
    def test_round_trip(self):
        truth = CalibrationCurve(w_ps=0.137, theta0=0.3, sign=1)
        i = np.linspace(0, 8, 60)
        fit = fit_calibration(i, truth.intensity(i), sign=1)
        assert fit.w_ps == pytest.approx(truth.w_ps, abs=1e-9)
        assert np.allclose(fit.current_to_phase(i), truth.current_to_phase(i), atol=1e-6)
        assert fit.rms_residual < 1e-9

    @pytest.mark.parametrize("sign", [1, -1])
    def test_negative_port(self, sign):
        truth = CalibrationCurve(0.05, -0.7, sign)
        i = np.linspace(1, 12, 80)
        fit = fit_calibration(i, truth.intensity(i), sign)
        assert np.allclose(fit.intensity(i), truth.intensity(i), atol=1e-9)

    def test_too_few_samples(self):
        with pytest.raises(CalibrationError):
            fit_calibration([1, 2, 3], [0.1, 0.2, 0.3])

    def test_degenerate_currents(self):
        with pytest.raises(CalibrationError):
            fit_calibration([2.0] * 6, [0.5] * 6)

    def test_less_than_half_fringe(self):
        truth = CalibrationCurve(0.01, 0.2)
        i = np.linspace(0, 2, 20)
        with pytest.raises(CalibrationError):
            fit_calibration(i, truth.intensity(i))
