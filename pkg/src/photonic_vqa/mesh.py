"""Interferometer stages of the two-ququart processor.

Each photon path goes through a four-mode mesh built from three
Mach-Zehnder interferometers (MZIs) and four output phase shifters.  The
pump mesh (stage I) splits the pump over the four sources; the idler and
signal meshes (stage IV) perform a rank-1 projection onto mode 2, where
the detector sits.

Modes are labelled 1..4 in docstrings and 0..3 in arrays.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import CalibrationError, InvalidArgument

TWO_PI = 2.0 * np.pi


class Stage(enum.Enum):
    PUMP = "PUMP"
    IDLER = "IDLER"
    SIGNAL = "SIGNAL"

    @property
    def is_projector(self) -> bool:
        return self is not Stage.PUMP


def wrap_angle(x):
    """Map angles into (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    out = x - TWO_PI * np.ceil((x - np.pi) / TWO_PI)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PhaseVector:
    """Phase settings of one stage: three MZI angles and four output phases."""

    theta: tuple[float, float, float]
    phi: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    stage: Stage = Stage.PUMP

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).reshape(-1)
        ph = np.asarray(self.phi, dtype=float).reshape(-1)
        if th.shape != (3,) or ph.shape != (4,):
            raise InvalidArgument("PhaseVector needs 3 theta and 4 phi values")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(ph))):
            raise InvalidArgument("phases must be finite")
        object.__setattr__(self, "theta", tuple(float(v) for v in wrap_angle(th)))
        object.__setattr__(self, "phi", tuple(float(v) for v in wrap_angle(ph)))
        object.__setattr__(self, "stage", Stage(self.stage))

    def to_dict(self) -> dict:
        return {"theta": list(self.theta), "phi": list(self.phi), "stage": self.stage.value}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseVector":
        return cls(tuple(d["theta"]), tuple(d.get("phi", (0.0,) * 4)), Stage(d.get("stage", "PUMP")))


def mzi_unitary(theta: float, sign: int = 1) -> np.ndarray:
    """2x2 transfer matrix of an MZI with internal phase ``theta``.

    ``sign`` selects which of the two output ports is taken as the upper
    mode (+1 or -1).
    """
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    if not np.isfinite(theta):
        raise InvalidArgument("theta must be finite")
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return 1j * np.exp(1j * sign * theta / 2) * np.array([[sign * s, c], [c, -sign * s]])


def phase_shifter(phi) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phi, dtype=float)))


def embed(u: np.ndarray, k: int, m: int = 4) -> np.ndarray:
    """Place a 2x2 block on modes (k, k+1), 1-based, of an m-mode identity."""
    if not 1 <= k <= m - 1:
        raise IndexError(f"mode pair ({k}, {k + 1}) outside 1..{m}")
    out = np.eye(m, dtype=complex)
    out[k - 1:k + 1, k - 1:k + 1] = u
    return out


def _check_stage(pv: PhaseVector, projector: bool):
    if pv.stage.is_projector != projector:
        want = "IDLER or SIGNAL" if projector else "PUMP"
        raise InvalidArgument(f"expected a {want} phase vector, got {pv.stage.value}")


def _trig(pv):
    t = np.asarray(pv.theta)
    return np.sin(t), np.cos(t)


def stage_one_matrix(pv: PhaseVector) -> np.ndarray:
    """Closed-form 4x4 pump-splitting matrix.

    Column 2 carries the pump amplitudes onto the four sources.
    """
    _check_stage(pv, projector=False)
    (s1, s2, s3), (c1, c2, c3) = _trig(pv)
    u = np.array([
        [s2, s1 * c2, c1 * c2, 0],
        [c2, -s1 * s2, -c1 * s2, 0],
        [0, c1 * s3, -s1 * s3, c3],
        [0, c1 * c3, -s1 * c3, -s3],
    ], dtype=complex)
    return phase_shifter(pv.phi) @ u


def stage_four_matrix(pv: PhaseVector) -> np.ndarray:
    """Closed-form 4x4 projection matrix; row 2 routes onto the detector."""
    _check_stage(pv, projector=True)
    (s1, s2, s3), (c1, c2, c3) = _trig(pv)
    u = np.array([
        [s2, c2, 0, 0],
        [s1 * c2, -s1 * s2, c1 * s3, c1 * c3],
        [c1 * c2, -c1 * s2, -s1 * s3, -s1 * c3],
        [0, 0, c3, -s3],
    ], dtype=complex)
    return u @ phase_shifter(pv.phi)


def stage_one_product(pv: PhaseVector) -> np.ndarray:
    """Stage I as an explicit product of embedded MZIs.

    The closed form above uses full-angle trigonometry, which corresponds
    to driving each MZI at ``2*theta``.  The product agrees with
    :func:`stage_one_matrix` entry by entry in magnitude; the two differ
    by diagonal phase matrices on either side.
    """
    _check_stage(pv, projector=False)
    t1, t2, t3 = (2 * t for t in pv.theta)
    return (phase_shifter(pv.phi) @ embed(mzi_unitary(t3, -1), 3)
            @ embed(mzi_unitary(t2, -1), 1) @ embed(mzi_unitary(t1, -1), 2))


def stage_four_product(pv: PhaseVector) -> np.ndarray:
    """Stage IV as an explicit product of embedded MZIs (see stage_one_product)."""
    _check_stage(pv, projector=True)
    t1, t2, t3 = (2 * t for t in pv.theta)
    return (embed(mzi_unitary(t1, 1), 2) @ embed(mzi_unitary(t2, 1), 1)
            @ embed(mzi_unitary(t3, 1), 3) @ phase_shifter(pv.phi))


def amplitudes_from_phases(pv: PhaseVector) -> np.ndarray:
    """Pump amplitudes alpha_m on the four sources (column 2 of stage I)."""
    return stage_one_matrix(pv)[:, 1]


def projection_vector(pv: PhaseVector) -> np.ndarray:
    """The state xi onto which a stage-IV setting projects.

    Row 2 of the stage matrix is ``conj(xi)``; a photon in ``xi`` reaches the
    detector with unit probability.
    """
    return np.conj(stage_four_matrix(pv)[1])


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def phase_distance(a, b) -> float:
    """max_m |a_m - e^{i g} b_m| with g set to the least-squares phase."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    ov = np.vdot(b, a)
    g = np.angle(ov) if abs(ov) > 0 else 0.0
    return float(np.max(np.abs(a - np.exp(1j * g) * b)))


def _angles_from_target(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # g has the functional form (e^{i p1} s1 c2, -e^{i p2} s1 s2, e^{i p3} c1 s3, e^{i p4} c1 c3)
    a = np.abs(g)
    top, bot = np.hypot(a[0], a[1]), np.hypot(a[2], a[3])
    th = np.array([
        np.arctan2(top, bot),
        np.arctan2(a[1], a[0]) if top > 0 else 0.0,
        np.arctan2(a[2], a[3]) if bot > 0 else 0.0,
    ])
    sgn = np.array([1.0, -1.0, 1.0, 1.0])
    ph = np.where(a > 1e-15, np.angle(g * sgn), 0.0)
    return th, ph


def _form(th, ph):
    s1, s2, s3 = np.sin(th)
    c1, c2, c3 = np.cos(th)
    return np.exp(1j * ph) * np.array([s1 * c2, -s1 * s2, c1 * s3, c1 * c3])


def phases_for_projector(beta, stage: Stage | str = Stage.IDLER) -> PhaseVector:
    """Invert the stage map for a normalized 4-vector.

    For ``PUMP`` the result prepares amplitudes ``beta`` (up to a global
    phase); for ``IDLER``/``SIGNAL`` it projects onto ``beta``.  Among
    equivalent solutions, the one with the smallest total |phi| is chosen.
    """
    stage = Stage(stage)
    beta = np.asarray(beta, dtype=complex).reshape(-1)
    if beta.shape != (4,) or not np.all(np.isfinite(beta)):
        raise InvalidArgument("target must be a finite 4-vector")
    if abs(np.linalg.norm(beta) - 1.0) > 1e-9:
        raise InvalidArgument("target must be normalized")
    target = np.conj(beta) if stage.is_projector else beta
    # fix the global phase on the first significant component
    lead = int(np.argmax(np.abs(target) > 1e-12))
    target = target * np.exp(-1j * np.angle(target[lead]))
    th, ph = _angles_from_target(target)
    best, best_cost = None, np.inf
    # sign flips of the angles give equivalent settings with different phases
    for flips in np.ndindex(2, 2, 2):
        t = th * np.where(np.array(flips) == 1, -1.0, 1.0)
        f = _form(t, np.zeros(4))
        p = np.where(np.abs(f) > 1e-15, np.angle(target) - np.angle(f), 0.0)
        p = wrap_angle(p)
        if np.max(np.abs(_form(t, p) - target)) > 1e-9:
            continue
        cost = float(np.sum(np.abs(p))) + 1e-9 * sum(flips)
        if cost < best_cost:
            best, best_cost = (t, p), cost
    t, p = best
    return PhaseVector(tuple(t), tuple(p), stage)


@dataclass(frozen=True)
class CalibrationCurve:
    """Thermo-optic phase response theta(I) = w_ps * I**2 + theta0."""

    w_ps: float
    theta0: float
    sign: int = 1
    rms_residual: float = field(default=0.0, compare=False)

    def current_to_phase(self, current):
        return self.w_ps * np.asarray(current, dtype=float) ** 2 + self.theta0

    def intensity(self, current):
        """Normalized MZI output intensity at the given drive current."""
        return 0.5 * (1 + self.sign * np.cos(2 * self.current_to_phase(current)))


def fit_calibration(currents, intensities, sign: int = 1) -> CalibrationCurve:
    """Fit w_ps and theta0 from a current scan of one MZI.

    The output-port ``sign`` is a property of the test configuration and
    is taken as known.  w_ps is reported positive and theta0 in
    (-pi/2, pi/2], which removes the symmetries of cos(2 theta).
    """
    x = np.asarray(currents, dtype=float) ** 2
    y = np.asarray(intensities, dtype=float)
    if x.shape != y.shape or x.size < 4:
        raise CalibrationError("need at least 4 (current, intensity) samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise CalibrationError("non-finite calibration samples")
    span = np.ptp(x)
    if span <= 0:
        raise CalibrationError("calibration currents are degenerate")
    xs = np.unique(x)
    step = np.min(np.diff(xs)) if xs.size > 1 else span

    def resid_for(w):
        a = np.column_stack([np.ones_like(x), np.cos(2 * w * x), np.sin(2 * w * x)])
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        return a @ coef - y, coef

    w_lo, w_hi = 0.25 * np.pi / span, np.pi / (2 * step)
    grid = np.linspace(w_lo, w_hi, 4000)
    sse = np.array([np.sum(resid_for(w)[0] ** 2) for w in grid])
    i = int(np.argmin(sse))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    w0 = minimize_scalar(lambda w: np.sum(resid_for(w)[0] ** 2), bounds=(lo, hi),
                         method="bounded", options={"xatol": 1e-14}).x
    _, (_, ca, cb) = resid_for(w0)
    t0 = 0.5 * np.arctan2(-sign * cb, sign * ca)

    def model(p):
        return 0.5 * (1 + sign * np.cos(2 * (p[0] * x + p[1]))) - y

    sol = least_squares(model, [w0, t0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    w, t0 = sol.x
    if w < 0:
        w, t0 = -w, -t0
    t0 = float(wrap_angle(2 * t0) / 2)
    if w * span < np.pi / 2:
        raise CalibrationError("scan covers less than half a fringe")
    rms = float(np.sqrt(np.mean(model([w, t0]) ** 2)))
    return CalibrationCurve(float(w), t0, sign, rms)
