import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonic_vqa.errors import InvalidArgument
from photonic_vqa.mesh import (
    PhaseVector, Stage, phases_for_projector, projection_vector, stage_four_matrix,
)
from photonic_vqa.state import (
    MeasurementSetting, ProjectorPair, TwoQuquartState, coincidence_probability,
    detected_probability, prepare_state, probability_tensor,
)
from photonic_vqa.tables import phase_row

angle = st.floats(-np.pi, np.pi, allow_nan=False)


def random_state(rng, eps=1.0):
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    return TwoQuquartState(a / np.linalg.norm(a), rng.uniform(-np.pi, np.pi, 4), eps)


def random_basis(rng):
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    return q.T


def test_normalization_enforced():
    with pytest.raises(InvalidArgument):
        TwoQuquartState(np.ones(4), np.zeros(4))
    with pytest.raises(InvalidArgument):
        TwoQuquartState(np.eye(4)[0], np.zeros(4), 1.5)


def test_prepare_needs_pump_stage():
    with pytest.raises(InvalidArgument):
        prepare_state(PhaseVector((0, 0, 0), stage=Stage.IDLER))


def test_density_matrix_trace_and_purity():
    rng = np.random.default_rng(0)
    for eps in (0.0, 0.4, 1.0):
        rho = random_state(rng, eps).density_matrix()
        assert np.trace(rho).real == pytest.approx(1)
        assert np.allclose(rho, rho.conj().T)
    rho = random_state(rng, 1.0).density_matrix()
    assert np.trace(rho @ rho).real == pytest.approx(1)


@given(st.tuples(angle, angle, angle), st.tuples(angle, angle, angle, angle),
       st.tuples(angle, angle, angle), st.tuples(angle, angle, angle, angle),
       st.floats(0, 1))
@settings(max_examples=60)
def test_projector_vector_matches_unitary_evolution(ti, pi_, ts, ps, eps):
    rng = np.random.default_rng(abs(hash((ti, ts))) % 2**32)
    state = random_state(rng, eps)
    idler, signal = PhaseVector(ti, pi_, Stage.IDLER), PhaseVector(ts, ps, Stage.SIGNAL)
    p = coincidence_probability(state, ProjectorPair.from_phases(idler, signal))
    assert p == pytest.approx(detected_probability(state, idler, signal), abs=1e-12)


def test_tensor_matches_dense_projection():
    rng = np.random.default_rng(1)
    for eps in (1.0, 0.7):
        state = random_state(rng, eps)
        bi, bs = random_basis(rng), random_basis(rng)
        p = probability_tensor(state, MeasurementSetting.from_bases(bi, bs))
        rho = state.density_matrix()
        for a in range(4):
            for b in range(4):
                v = np.kron(bi[a], bs[b])
                assert p[a, b] == pytest.approx(np.vdot(v, rho @ v).real, abs=1e-12)
        assert p.sum() == pytest.approx(1, abs=1e-12)


def test_tensor_matches_cellwise_probability():
    rng = np.random.default_rng(2)
    state = random_state(rng, 0.8)
    setting = MeasurementSetting.from_bases(random_basis(rng), random_basis(rng))
    p = probability_tensor(state, setting)
    for a in range(1, 5):
        for b in range(1, 5):
            assert p[a - 1, b - 1] == pytest.approx(coincidence_probability(state, setting.pair(a, b)))


def test_no_interference_when_fully_mixed():
    s = 1 / np.sqrt(2)
    state = TwoQuquartState([0, s, s, 0], [0, 0.4, 0, 0], epsilon=0.0)
    xi = np.array([0, s, s, 0])
    assert coincidence_probability(state, ProjectorPair(xi, xi)) == pytest.approx(0.25)


@given(st.floats(-np.pi, np.pi), st.floats(0, 1))
def test_two_source_fringe(delta, eps):
    # |amp|^2 = (1 + cos delta) / 4 for the pair of sources 2 and 3
    s = 1 / np.sqrt(2)
    state = TwoQuquartState([0, s, s, 0], [0, delta, 0, 0], eps)
    xi = np.array([0, s, s, 0])
    p = coincidence_probability(state, ProjectorPair(xi, xi))
    assert p == pytest.approx(0.25 * eps * (1 + np.cos(delta)) + 0.25 * (1 - eps), abs=1e-14)


def test_phase_and_vector_paths_agree():
    rng = np.random.default_rng(3)
    state = random_state(rng)
    # phase-level computational setting from the single-source rows
    gi = [[phase_row("A4", f"P{a}") for _ in range(4)] for a in range(1, 5)]
    gs = [[PhaseVector(phase_row("A4", f"P{b}").theta, stage=Stage.SIGNAL) for b in range(1, 5)]
          for _ in range(4)]
    p_phase = probability_tensor(state, MeasurementSetting.from_phase_grid(gi, gs))
    p_vec = probability_tensor(state, MeasurementSetting.computational())
    assert np.allclose(p_phase, p_vec, atol=1e-12)
    # rotated basis realized by solved phases
    basis = random_basis(rng)
    pv = [phases_for_projector(v, Stage.IDLER) for v in basis]
    pv_s = [phases_for_projector(v, Stage.SIGNAL) for v in basis]
    p_phase = probability_tensor(state, MeasurementSetting.from_phase_grid(
        [[pv[a]] * 4 for a in range(4)], [pv_s for _ in range(4)]))
    p_vec = probability_tensor(state, MeasurementSetting.from_bases(basis, basis))
    assert np.allclose(p_phase, p_vec, atol=1e-12)


def test_setting_product_basis_flag():
    assert MeasurementSetting.computational().is_product_basis()
    xi = np.tile(np.eye(4, dtype=complex)[0], (4, 4, 1))
    assert not MeasurementSetting(xi, xi).is_product_basis()


def test_state_dict_round_trip():
    s = random_state(np.random.default_rng(4), 0.9)
    t = TwoQuquartState.from_dict(s.to_dict())
    assert np.allclose(s.alpha, t.alpha) and np.allclose(s.delta, t.delta) and t.epsilon == 0.9


@given(st.tuples(angle, angle, angle), st.tuples(angle, angle, angle, angle))
def test_projection_vector_exits_on_detector_mode(th, ph):
    pv = PhaseVector(th, ph, Stage.IDLER)
    out = stage_four_matrix(pv) @ projection_vector(pv)
    assert abs(out[1]) ** 2 == pytest.approx(1, abs=1e-12)
