"""Two-photon states generated by the four coherently pumped sources.

Source m emits a photon pair in mode m of the idler and of the signal
path, so the generated state is sum_m alpha_m e^{i delta_m} |m>_i |m>_s.
Imperfect indistinguishability between sources is modelled by a purity
``epsilon``: the state is epsilon |psi><psi| plus (1 - epsilon) times the
dephased mixture sum_m |alpha_m|^2 |m,m><m,m|.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .mesh import PhaseVector, Stage, amplitudes_from_phases, projection_vector, stage_four_matrix

NORM_TOL = 1e-12


def _vec4(v, name):
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape != (4,) or not np.all(np.isfinite(v)):
        raise InvalidArgument(f"{name} must be a finite 4-vector")
    return v


@dataclass(frozen=True, eq=False)
class TwoQuquartState:
    alpha: np.ndarray
    delta: np.ndarray
    epsilon: float = 1.0

    def __post_init__(self):
        a = _vec4(self.alpha, "alpha")
        d = np.asarray(self.delta, dtype=float).reshape(-1)
        if d.shape != (4,) or not np.all(np.isfinite(d)):
            raise InvalidArgument("delta must be 4 finite phases")
        if abs(np.sum(np.abs(a) ** 2) - 1) > NORM_TOL:
            raise InvalidArgument("source amplitudes must be normalized")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidArgument("epsilon must lie in [0, 1]")
        a.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def amplitudes(self) -> np.ndarray:
        """alpha_m e^{i delta_m}: coefficients of |m,m>."""
        return self.alpha * np.exp(1j * self.delta)

    def state_vector(self) -> np.ndarray:
        """Pure 16-dim vector, index (m_i - 1) * 4 + (m_s - 1)."""
        psi = np.zeros(16, dtype=complex)
        psi[np.arange(4) * 5] = self.amplitudes
        return psi

    def density_matrix(self) -> np.ndarray:
        psi = self.state_vector()
        mixed = np.diag(np.abs(psi) ** 2).astype(complex)
        return self.epsilon * np.outer(psi, psi.conj()) + (1 - self.epsilon) * mixed

    def to_dict(self) -> dict:
        return {"alpha_re": self.alpha.real.tolist(), "alpha_im": self.alpha.imag.tolist(),
                "delta": self.delta.tolist(), "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d) -> "TwoQuquartState":
        alpha = np.asarray(d["alpha_re"]) + 1j * np.asarray(d["alpha_im"])
        return cls(alpha, np.asarray(d["delta"]), d["epsilon"])


def prepare_state(pump: PhaseVector, delta=None, epsilon: float = 1.0) -> TwoQuquartState:
    """State generated when the pump mesh is set to ``pump``."""
    if pump.stage is not Stage.PUMP:
        raise InvalidArgument("prepare_state needs a PUMP phase vector")
    delta = np.zeros(4) if delta is None else delta
    return TwoQuquartState(amplitudes_from_phases(pump), delta, epsilon)


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    """Idler and signal states the two detectors project onto."""

    xi_i: np.ndarray
    xi_s: np.ndarray

    def __post_init__(self):
        for name in ("xi_i", "xi_s"):
            v = _vec4(getattr(self, name), name)
            if abs(np.linalg.norm(v) - 1) > 1e-9:
                raise InvalidArgument(f"{name} must be normalized")
            object.__setattr__(self, name, v)

    @classmethod
    def from_phases(cls, idler: PhaseVector, signal: PhaseVector) -> "ProjectorPair":
        if idler.stage is not Stage.IDLER or signal.stage is not Stage.SIGNAL:
            raise InvalidArgument("need an IDLER and a SIGNAL phase vector")
        return cls(projection_vector(idler), projection_vector(signal))


class MeasurementSetting:
    """A 4x4 grid of projector pairs, one per outcome cell (m_i, m_s).

    In the usual case the cells come from two orthonormal bases
    (:meth:`from_bases`), but arbitrary grids are allowed so that
    relabelled encodings can be expressed.
    """

    def __init__(self, xi_i, xi_s, label: str = ""):
        xi_i = np.asarray(xi_i, dtype=complex)
        xi_s = np.asarray(xi_s, dtype=complex)
        if xi_i.shape != (4, 4, 4) or xi_s.shape != (4, 4, 4):
            raise InvalidArgument("grids must have shape (4, 4, 4)")
        for g in (xi_i, xi_s):
            if np.max(np.abs(np.linalg.norm(g, axis=-1) - 1)) > 1e-9:
                raise InvalidArgument("projection vectors must be normalized")
        self.xi_i, self.xi_s, self.label = xi_i, xi_s, label

    @classmethod
    def from_bases(cls, idler_basis, signal_basis, label: str = "") -> "MeasurementSetting":
        """``basis[m]`` is the vector projected onto for outcome m + 1."""
        bi = np.asarray(idler_basis, dtype=complex)
        bs = np.asarray(signal_basis, dtype=complex)
        return cls(np.repeat(bi[:, None, :], 4, axis=1), np.repeat(bs[None, :, :], 4, axis=0), label)

    @classmethod
    def from_phase_grid(cls, idler, signal, label: str = "") -> "MeasurementSetting":
        """Grids of PhaseVectors, ``idler[m1][m2]`` and ``signal[m1][m2]``."""
        gi = np.array([[projection_vector(p) for p in row] for row in idler])
        gs = np.array([[projection_vector(p) for p in row] for row in signal])
        return cls(gi, gs, label)

    @classmethod
    def computational(cls) -> "MeasurementSetting":
        return cls.from_bases(np.eye(4), np.eye(4), "computational")

    def pair(self, m1: int, m2: int) -> ProjectorPair:
        """Projector pair of outcome cell (m1, m2), 1-based."""
        return ProjectorPair(self.xi_i[m1 - 1, m2 - 1], self.xi_s[m1 - 1, m2 - 1])

    def is_product_basis(self, tol: float = 1e-12) -> bool:
        bi, bs = self.xi_i[:, 0], self.xi_s[0]
        ok = (np.allclose(self.xi_i, bi[:, None], atol=tol)
              and np.allclose(self.xi_s, bs[None], atol=tol))
        return bool(ok and np.allclose(bi @ bi.conj().T, np.eye(4), atol=tol)
                    and np.allclose(bs @ bs.conj().T, np.eye(4), atol=tol))


def coincidence_probability(state: TwoQuquartState, proj: ProjectorPair) -> float:
    """Probability that both detectors click for one projector pair."""
    amp = np.sum(state.amplitudes * np.conj(proj.xi_i) * np.conj(proj.xi_s))
    incoherent = np.sum(np.abs(state.alpha) ** 2 * np.abs(proj.xi_i) ** 2 * np.abs(proj.xi_s) ** 2)
    return float(state.epsilon * abs(amp) ** 2 + (1 - state.epsilon) * incoherent)


def probability_tensor(state: TwoQuquartState, setting: MeasurementSetting) -> np.ndarray:
    """P[m1, m2] for every outcome cell of a setting (0-based array)."""
    gi, gs = np.conj(setting.xi_i), np.conj(setting.xi_s)
    amp = np.einsum("m,abm,abm->ab", state.amplitudes, gi, gs)
    inc = np.einsum("m,abm,abm->ab", np.abs(state.alpha) ** 2, np.abs(gi) ** 2, np.abs(gs) ** 2)
    return state.epsilon * np.abs(amp) ** 2 + (1 - state.epsilon) * inc


def detected_probability(state: TwoQuquartState, idler: PhaseVector, signal: PhaseVector) -> float:
    """Coincidence probability computed through the full stage-IV unitaries.

    Evolves the density matrix with U_i (x) U_s and reads the population of
    |2>_i |2>_s.  Used as an independent cross-check of
    :func:`coincidence_probability`.
    """
    u = np.kron(stage_four_matrix(idler), stage_four_matrix(signal))
    rho = u @ state.density_matrix() @ u.conj().T
    return float(rho[5, 5].real)
