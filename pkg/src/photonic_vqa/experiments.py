"""Scripted reproductions: interference, certified dimension, fidelity, H2 and VQF runs."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cost import CostFunction, PlannedSetting, measurement_plan
from .counts import NoiseConfig, estimate_probabilities, sample_counts
from .errors import InvalidArgument
from .mesh import PhaseVector, Stage, projection_vector, stage_four_matrix
from .observables import (build_vqf_hamiltonian, group_commuting, h2_hamiltonian,
                          matrix_element, ququart_to_qubits, register_value)
from .optimizers import GdConfig, GpConfig, OptRun, bayesian_optimize, gradient_descent
from .state import MeasurementSetting, TwoQuquartState, prepare_state, probability_tensor
from .tables import h2_row, phase_row, table

# which input-array phase is swept for each source pair: (stage, mode index)
SWEPT_PHASE = {"2-3": (Stage.IDLER, 1), "1-3": (Stage.SIGNAL, 0), "3-4": (Stage.SIGNAL, 3)}
HF_BITS, EXCITED_BITS = "1010", "0101"


def _map(fn, items, threads: int = 1):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --------------------------------------------------------------------- fringes

@dataclass
class FringeScan:
    phase_grid: np.ndarray
    normalized_cc: np.ndarray
    visibility: float | None
    fit_params: tuple[float, float, float] | None  # (amplitude A, visibility V, phase0)
    residual_rms: float | None = None

    def to_dict(self) -> dict:
        return {"phase_grid": self.phase_grid.tolist(), "normalized_cc": self.normalized_cc.tolist(),
                "visibility": self.visibility, "fit_params": self.fit_params,
                "residual_rms": self.residual_rms}


def fit_fringe(phases, y):
    """Least-squares fit of y = A/2 (1 + V cos(phi + phi0)).

    Returns (A, V, phi0, visibility, rms), where visibility is
    (max - min)/(max + min) of the fitted curve with the minimum clipped at 0.
    """
    phases, y = np.asarray(phases, float), np.asarray(y, float)
    a = np.column_stack([np.ones_like(phases), np.cos(phases), -np.sin(phases)])
    (c0, c1, c2), *_ = np.linalg.lstsq(a, y, rcond=None)
    if not c0 > 0:
        return None
    amp = np.hypot(c1, c2)
    hi, lo = c0 + amp, max(c0 - amp, 0.0)
    rms = float(np.sqrt(np.mean((a @ [c0, c1, c2] - y) ** 2)))
    return 2 * c0, amp / c0, float(np.arctan2(c2, c1)), (hi - lo) / (hi + lo), rms


def heralded_interference(pair: str = "2-3", epsilon: float = 1.0, grid=None,
                          cfg: NoiseConfig | None = None, delta=None,
                          pump: PhaseVector | None = None) -> FringeScan:
    """Two-source interference fringe while sweeping one output-array phase.

    The plotted quantity is 2 CC(2,2) / CC_total over a full setting whose
    slot 2 is the swept projector; for the balanced tabulated pump it equals
    1/2 + (epsilon/2) cos(phi + delta).  ``pump`` replaces the tabulated
    pump setting, e.g. to study unbalanced sources.
    """
    if pair not in SWEPT_PHASE:
        raise InvalidArgument(f"pair must be one of {sorted(SWEPT_PHASE)}")
    grid = np.linspace(0, 2 * np.pi, 41) if grid is None else np.asarray(grid, float)
    state = prepare_state(pump or phase_row("A3", pair, Stage.PUMP), delta, epsilon)
    base_i, base_s = phase_row("A3", pair, Stage.IDLER), phase_row("A3", pair, Stage.SIGNAL)
    swept_stage, k = SWEPT_PHASE[pair]
    ys = []
    for j, phi in enumerate(grid):
        pv = base_i if swept_stage is Stage.IDLER else base_s
        ph = list(pv.phi)
        ph[k] = phi
        pv = PhaseVector(pv.theta, tuple(ph), swept_stage)
        pi_, ps_ = (pv, base_s) if swept_stage is Stage.IDLER else (base_i, pv)
        setting = MeasurementSetting.from_bases(np.conj(stage_four_matrix(pi_)),
                                                np.conj(stage_four_matrix(ps_)), f"fringe{j}")
        p = probability_tensor(state, setting)
        if cfg is None:
            ys.append(2 * p[1, 1] / p.sum())
        else:
            rec = sample_counts(p, cfg, setting.label, (j, 0))
            ys.append(2 * estimate_probabilities(rec, cfg.subtract_accidentals, cfg.car)[1, 1])
    ys = np.array(ys)
    fit = fit_fringe(grid, ys)
    if fit is None:
        return FringeScan(grid, ys, None, None)
    a, v, p0, vis, rms = fit
    return FringeScan(grid, ys, float(vis), (float(a), float(v), p0), rms)


def purity_from_visibility(visibility: float, weights=(0.5, 0.5)) -> float:
    """Indistinguishability epsilon implied by a fringe visibility.

    With pump weights |alpha_j|^2, |alpha_k|^2 on the two sources the model
    gives V = 2 eps |alpha_j| |alpha_k| / (|alpha_j|^2 + |alpha_k|^2), so the
    balanced case reduces to eps = V.
    """
    wj, wk = map(float, weights)
    if wj <= 0 or wk <= 0:
        raise InvalidArgument("both sources must be pumped")
    eps = visibility * (wj + wk) / (2 * np.sqrt(wj * wk))
    if not 0 <= eps <= 1 + 1e-12:
        raise InvalidArgument(f"visibility {visibility} is not reachable with weights {weights}")
    return float(min(eps, 1.0))


# --------------------------------------------------------- certified dimension

@dataclass
class DimCertResult:
    d: int
    sources: str
    P1: np.ndarray
    P2: np.ndarray
    certified_dimension: float

    def to_dict(self) -> dict:
        return {"d": self.d, "sources": self.sources, "P1": self.P1.tolist(),
                "P2": self.P2.tolist(), "certified_dimension": self.certified_dimension}


def dimension_witness(p1, p2) -> float:
    """D from two correlation matrices: 1/D = sum_{b1,b2} (sum_a sqrt(P1[a,b1] P2[a,b2]))^2."""
    p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
    inner = np.sqrt(p1).T @ np.sqrt(p2)  # [b1, b2]
    return float(1.0 / np.sum(inner ** 2))


def _projectors(sources: str, party: str, d: int) -> list[np.ndarray]:
    stage = Stage.IDLER if party == "alice" else Stage.SIGNAL
    return [projection_vector(phase_row("A2c", f"{sources}/{party}/{j}", stage)) for j in range(1, d + 1)]


def certified_dimension(d: int, sources: str, epsilon: float = 1.0,
                        cfg: NoiseConfig | None = None) -> DimCertResult:
    """Certify the entanglement dimension of a maximally entangled source combination."""
    n_src = len(sources.split("-")) if sources != "all" else 4
    if d not in (2, 3, 4) or n_src != d:
        raise InvalidArgument(f"sources {sources!r} do not form a {d}-dimensional state")
    state = prepare_state(phase_row("A2b", sources, Stage.PUMP), epsilon=epsilon)
    alice = _projectors(sources, "alice", d)
    mats = []
    for y, bob in enumerate(("bob1", "bob2")):
        bobs = _projectors(sources, bob, d)
        # d x d projector pairs padded to the 16-cell grid; unused cells get p = 0
        gi = np.tile(np.eye(4, dtype=complex)[None, None, 0], (4, 4, 1))
        gs = gi.copy()
        for a in range(d):
            for b in range(d):
                gi[a, b], gs[a, b] = alice[a], bobs[b]
        setting = MeasurementSetting(gi, gs, f"{sources}/{bob}")
        p = probability_tensor(state, setting)
        mask = np.zeros((4, 4), bool)
        mask[:d, :d] = True
        p = np.where(mask, p, 0.0)
        if cfg is not None:
            rec = sample_counts(p, cfg, setting.label, (0, y))
            p = rec.cc.astype(float)
        block = p[:d, :d]
        mats.append(block / block.sum())
    return DimCertResult(d, sources, mats[0], mats[1], dimension_witness(*mats))


def entangled_sources() -> list[str]:
    return [r["label"] for r in table("A2b")["rows"]]


# -------------------------------------------------------------------- fidelity

def routing_matrix(m: int, cfg: NoiseConfig | None = None) -> np.ndarray:
    """Normalized coincidences over the computational setting with only source m pumped."""
    if not 1 <= m <= 4:
        raise InvalidArgument("source index must be in 1..4")
    label = f"source {m}"
    state = prepare_state(phase_row("A1", label, Stage.PUMP))
    gi = [[phase_row("A1", f"source {a}", Stage.IDLER) for _ in range(4)] for a in range(1, 5)]
    gs = [[phase_row("A1", f"source {b}", Stage.SIGNAL) for b in range(1, 5)] for _ in range(4)]
    p = probability_tensor(state, MeasurementSetting.from_phase_grid(gi, gs, label))
    if cfg is not None:
        p = sample_counts(p, cfg, label, (0, m)).cc.astype(float)
    return p / p.sum()


def matrix_fidelity(m_exp, m: int) -> float:
    """|Tr(M_ideal^T M_exp)|^2 / Tr(M_exp^T M_exp) with M_ideal = |m><m|."""
    m_exp = np.asarray(m_exp, float)
    return float(m_exp[m - 1, m - 1] ** 2 / np.sum(m_exp ** 2))


def projector_fidelity(m: int, cfg: NoiseConfig | None = None) -> float:
    return matrix_fidelity(routing_matrix(m, cfg), m)


# -------------------------------------------------------------------------- H2

def ucc_pump(theta: float) -> PhaseVector:
    """Pump setting for cos(theta)|3,3> - sin(theta)|2,2>."""
    return PhaseVector((float(theta), np.pi / 2, np.pi / 2), stage=Stage.PUMP)


def ucc_state(params, epsilon: float = 1.0) -> TwoQuquartState:
    return prepare_state(ucc_pump(np.atleast_1d(params)[0]), epsilon=epsilon)


def h2_coefficients(r: float) -> tuple[float, float, float]:
    """(g0, g1, g2) with E(theta) = g0 + g1 cos 2theta + g2 sin 2theta.

    Computed directly from the table row via Pauli matrix elements between
    the Hartree-Fock and doubly excited determinants.
    """
    strings, h = h2_row(r)

    def elem(bra, ket):
        return sum(w * matrix_element(s, bra, ket) for w, s in zip(h, strings))

    e_hf, e_ex = elem(HF_BITS, HF_BITS).real, elem(EXCITED_BITS, EXCITED_BITS).real
    return float(0.5 * (e_hf + e_ex)), float(0.5 * (e_hf - e_ex)), float(-elem(HF_BITS, EXCITED_BITS).real)


def h2_cost_function(r: float, cfg: NoiseConfig | None = None, epsilon: float = 1.0) -> CostFunction:
    return CostFunction(h2_hamiltonian(r), lambda p: ucc_state(p, epsilon), cfg)


def h2_theta_scan(r: float, grid=None, cfg: NoiseConfig | None = None, threads: int = 1):
    """List of (theta, E, sigma) along the single UCC parameter."""
    grid = np.linspace(-np.pi / 4, np.pi / 2, 31) if grid is None else np.asarray(grid, float)
    obs = h2_hamiltonian(r)
    plan = measurement_plan(obs)

    def one(item):
        j, th = item
        f = CostFunction(obs, ucc_state, cfg, plan)
        f.n_calls = j  # independent seed stream per grid point
        ev = f([th])
        return float(th), ev.value, ev.std_err

    return _map(one, list(enumerate(grid)), threads)


@dataclass
class DissociationPoint:
    R: float
    E_min: float
    theta_min: float
    fit: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def to_dict(self) -> dict:
        return {"R": self.R, "E_min": self.E_min, "theta_min": self.theta_min, "fit": list(self.fit)}


def fit_ucc_curve(thetas, energies, sigmas=None):
    """Weighted least squares for E = A + B cos 2theta + C sin 2theta."""
    th, e = np.asarray(thetas, float), np.asarray(energies, float)
    a = np.column_stack([np.ones_like(th), np.cos(2 * th), np.sin(2 * th)])
    w = np.ones_like(th) if sigmas is None or np.all(np.asarray(sigmas) == 0) else 1 / np.asarray(sigmas)
    coef, *_ = np.linalg.lstsq(a * w[:, None], e * w, rcond=None)
    return tuple(float(c) for c in coef)


def ucc_minimum(coef) -> tuple[float, float]:
    """Analytic minimum (E_min, theta_min) of A + B cos 2theta + C sin 2theta."""
    a, b, c = coef
    return a - float(np.hypot(b, c)), 0.5 * float(np.arctan2(-c, -b))


def h2_dissociation(rs=None, cfg: NoiseConfig | None = None, grid=None, threads: int = 1):
    from .tables import h2_distances
    rs = h2_distances() if rs is None else rs
    out = []
    for r in rs:
        scan = h2_theta_scan(r, grid, cfg, threads)
        coef = fit_ucc_curve(*zip(*scan))
        e, th = ucc_minimum(coef)
        out.append(DissociationPoint(float(r), e, th, coef))
    return out


def run_vqe_bayesian(r: float = 0.736, cfg: NoiseConfig | None = None, gp: GpConfig = GpConfig(),
                     init: float = 0.0) -> OptRun:
    return bayesian_optimize(h2_cost_function(r, cfg), init, gp)


def run_vqe_gradient(r: float = 0.736, cfg: NoiseConfig | None = None,
                     gd: GdConfig = GdConfig(eta=0.3, epsilon_fd=1e-3), init: float = 0.0) -> OptRun:
    return gradient_descent(h2_cost_function(r, cfg), [init], gd)


# ------------------------------------------------------------------------- VQF

VQF_GD = GdConfig(eta=1e-3, epsilon_fd=0.05, max_iters=200, tol_param=1e-3, tol_cost=1e-3)


def vqf_setting() -> MeasurementSetting:
    """Computational projectors composed with the trial-state relabeling."""
    gi = [[phase_row("A7", f"P{a}xP{b}/idler") for b in range(1, 5)] for a in range(1, 5)]
    gs = [[phase_row("A7", f"P{a}xP{b}/signal") for b in range(1, 5)] for a in range(1, 5)]
    return MeasurementSetting.from_phase_grid(gi, gs, "vqf")


def vqf_admissible() -> list[str]:
    """Logical register state reached by each source, read off the relabeling.

    Source m contributes to the logical cell whose projector pair is
    (|m>, |m>); the result has one entry per source.
    """
    s = vqf_setting()
    out = []
    for m in range(4):
        hits = [(a, b) for a in range(4) for b in range(4)
                if abs(s.xi_i[a, b, m]) > 1 - 1e-9 and abs(s.xi_s[a, b, m]) > 1 - 1e-9]
        if len(hits) != 1:
            raise InvalidArgument("relabeling does not single out one cell per source")
        a, b = hits[0]
        out.append("".join(map(str, ququart_to_qubits(a + 1) + ququart_to_qubits(b + 1))))
    return out


def vqf_plan(obs) -> list[PlannedSetting]:
    groups = group_commuting(obs)
    if len(groups) != 1 or not groups[0].is_computational:
        raise InvalidArgument("factoring cost must be diagonal")
    g = groups[0]
    return [PlannedSetting("vqf", vqf_setting(), g.members, g.eig)]


def vqf_pump(params) -> PhaseVector:
    return PhaseVector(tuple(np.asarray(params, float)), stage=Stage.PUMP)


def vqf_cost_function(n: int, cfg: NoiseConfig | None = None, epsilon: float = 1.0) -> CostFunction:
    obs = build_vqf_hamiltonian(n)
    return CostFunction(obs, lambda p: prepare_state(vqf_pump(p), epsilon=epsilon), cfg, vqf_plan(obs))


def decode_factors(params) -> tuple[str, tuple[int, int]]:
    """Most probable admissible register state and the factors it encodes."""
    alpha = prepare_state(vqf_pump(params)).alpha
    bits = vqf_admissible()[int(np.argmax(np.abs(alpha) ** 2))]
    return bits, register_value(bits)


def run_vqf(n: int, cfg: NoiseConfig | None = None, gd: GdConfig = VQF_GD, init=None):
    """Gradient-descent factoring from the democratic superposition.

    Returns (OptRun, bits, (p, q)).
    """
    init = phase_row("A2b", "all", Stage.PUMP).theta if init is None else init
    run = gradient_descent(vqf_cost_function(n, cfg), list(init), gd)
    bits, factors = decode_factors(run.trajectory[-1].params)
    return run, bits, factors
