"""Pauli observables on the four-qubit register and their photonic measurement.

Qubits (x1, x2) live on the idler photon and (x3, x4) on the signal
photon; mode m of a photon encodes the qubit pair (b1, b2) with
m = 1 + 2 b1 + b2.  With this ordering the 16-dim two-photon basis index
coincides with the usual Kronecker order of the four qubits.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

from .errors import GroupingError, InvalidArgument
from .state import MeasurementSetting
from .tables import h2_row

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
IDENTITY = "IIII"
_PRIMES = np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47], float)


def qubit_to_ququart(b1: int, b2: int) -> int:
    return 1 + 2 * int(b1) + int(b2)


def ququart_to_qubits(m: int) -> tuple[int, int]:
    if not 1 <= m <= 4:
        raise InvalidArgument("mode must be in 1..4")
    return (m - 1) >> 1, (m - 1) & 1


def check_pauli(s: str) -> str:
    s = s.upper()
    if len(s) != 4 or any(c not in PAULI for c in s):
        raise InvalidArgument(f"not a 4-qubit Pauli string: {s!r}")
    return s


def pauli_matrix(s: str) -> np.ndarray:
    return reduce(np.kron, (PAULI[c] for c in check_pauli(s)))


def photon_part(s: str, photon: int) -> str:
    """Two-qubit factor acting on the idler (0) or signal (1) photon."""
    return s[2 * photon:2 * photon + 2]


def _local_matrix(two: str) -> np.ndarray:
    return np.kron(PAULI[two[0]], PAULI[two[1]])


def _paulis_commute(a: str, b: str) -> bool:
    anti = sum(1 for x, y in zip(a, b) if x != "I" and y != "I" and x != y)
    return anti % 2 == 0


def commute_photonwise(a: str, b: str) -> bool:
    """Both photon factors commute, so one local basis per photon measures both."""
    return all(_paulis_commute(photon_part(a, k), photon_part(b, k)) for k in (0, 1))


def pauli_apply(s: str, bits: tuple[int, ...]) -> tuple[complex, tuple[int, ...]]:
    """Action of a Pauli string on a computational basis state: (phase, new bits)."""
    phase, out = 1 + 0j, []
    for c, b in zip(check_pauli(s), bits):
        if c == "X":
            out.append(1 - b)
        elif c == "Y":
            phase *= 1j if b == 0 else -1j
            out.append(1 - b)
        elif c == "Z":
            phase *= -1 if b else 1
            out.append(b)
        else:
            out.append(b)
    return phase, tuple(out)


def matrix_element(s: str, bra: str, ket: str) -> complex:
    """<bra| P |ket> for bit strings such as ``"1010"``."""
    phase, out = pauli_apply(s, tuple(int(c) for c in ket))
    return phase if out == tuple(int(c) for c in bra) else 0j


@dataclass(frozen=True)
class WeightedObservable:
    """H = sum_k w_k P_k with real weights and distinct Pauli strings."""

    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        merged: dict[str, float] = {}
        for w, s in self.terms:
            s = check_pauli(s)
            if not np.isfinite(w):
                raise InvalidArgument("weights must be finite")
            merged[s] = merged.get(s, 0.0) + float(w)
        object.__setattr__(self, "terms", tuple((w, s) for s, w in merged.items()))

    @classmethod
    def from_lists(cls, weights, strings) -> "WeightedObservable":
        if len(weights) != len(strings):
            raise InvalidArgument("weights and strings differ in length")
        return cls(tuple(zip(map(float, weights), strings)))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    @property
    def strings(self) -> list[str]:
        return [s for _, s in self.terms]

    @property
    def identity_weight(self) -> float:
        return sum(w for w, s in self.terms if s == IDENTITY)

    def dense(self) -> np.ndarray:
        return sum(w * pauli_matrix(s) for w, s in self.terms)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "strings": self.strings}


@dataclass(frozen=True, eq=False)
class CommutingGroup:
    """Terms measured together with one product setting.

    ``eig[k, m1, m2]`` is the eigenvalue of member k on outcome cell
    (m1 + 1, m2 + 1); identity terms are excluded from ``members``.
    """

    members: tuple[int, ...]
    strings: tuple[str, ...]
    idler_basis: np.ndarray
    signal_basis: np.ndarray
    eig: np.ndarray

    def setting(self, label: str = "") -> MeasurementSetting:
        return MeasurementSetting.from_bases(self.idler_basis, self.signal_basis, label)

    @property
    def is_computational(self) -> bool:
        return all(c in "IZ" for s in self.strings for c in s)


def _sort_key(v):
    lead = int(np.argmax(np.abs(v) > 1e-9))
    rest = v[lead + 1:]
    nxt = rest[np.abs(rest) > 1e-9]
    rel = round(float(np.angle(nxt[0] / v[lead])), 9) if nxt.size else 0.0
    return lead, rel


def local_basis(locals_: list[str]) -> np.ndarray:
    """Joint eigenbasis of commuting two-qubit Paulis, rows as basis vectors.

    Vectors are phase-fixed (first significant entry real positive) and
    assigned to modes so that the overlap with the computational modes is
    largest; ties are broken deterministically.
    """
    ops = [_local_matrix(t) for t in sorted(set(locals_) - {"II"})]
    if not ops or all(np.allclose(o, np.diag(np.diag(o))) for o in ops):
        return np.eye(4, dtype=complex)
    # square roots of distinct primes: no signed sum of them cancels, so
    # distinct joint eigenvalue patterns never become degenerate
    coeffs = np.sqrt(_PRIMES[:len(ops)])
    _, vecs = np.linalg.eigh(sum(c * o for c, o in zip(coeffs, ops)))
    vecs = vecs.T
    for o in ops:
        d = vecs.conj() @ o @ vecs.T
        if np.max(np.abs(d - np.diag(np.diag(d)))) > 1e-9:
            raise GroupingError(f"operators {locals_} are not jointly diagonalizable")
    fixed = []
    for v in vecs:
        lead = int(np.argmax(np.abs(v) > 1e-9))
        v = v * np.exp(-1j * np.angle(v[lead]))
        v[np.abs(v) < 1e-15] = 0
        fixed.append(v)
    fixed.sort(key=_sort_key)
    best, best_score = None, -1.0
    for perm in itertools.permutations(range(4)):
        score = round(sum(abs(fixed[j][slot]) ** 2 for slot, j in enumerate(perm)), 9)
        if score > best_score:
            best, best_score = perm, score
    return np.array([fixed[j] for j in best])


def _eigen_table(strings, bi, bs) -> np.ndarray:
    eig = np.empty((len(strings), 4, 4))
    for k, s in enumerate(strings):
        li = np.array([np.vdot(v, _local_matrix(photon_part(s, 0)) @ v) for v in bi])
        ls = np.array([np.vdot(v, _local_matrix(photon_part(s, 1)) @ v) for v in bs])
        if np.max(np.abs(np.abs(li) - 1)) > 1e-9 or np.max(np.abs(np.abs(ls) - 1)) > 1e-9:
            raise GroupingError(f"{s} is not diagonal in the group basis")
        eig[k] = np.outer(np.sign(li.real), np.sign(ls.real))
    # spectral consistency with the dense operators
    u = np.kron(bi, bs)
    for k, s in enumerate(strings):
        d = u.conj() @ pauli_matrix(s) @ u.T
        if np.max(np.abs(d - np.diag(eig[k].ravel()))) > 1e-12:
            raise GroupingError(f"eigenvalue table for {s} is inconsistent")
    return eig


def make_group(members, strings) -> CommutingGroup:
    bases = []
    for photon in (0, 1):
        bases.append(local_basis([photon_part(s, photon) for s in strings]))
    eig = _eigen_table(strings, *bases)
    return CommutingGroup(tuple(members), tuple(strings), bases[0], bases[1], eig)


@lru_cache(maxsize=64)
def group_commuting(obs: WeightedObservable) -> tuple[CommutingGroup, ...]:
    """Greedy partition of the non-identity terms into photon-wise commuting groups."""
    buckets: list[list[int]] = []
    strings = obs.strings
    for k, s in enumerate(strings):
        if s == IDENTITY:
            continue
        for b in buckets:
            if all(commute_photonwise(s, strings[j]) for j in b):
                b.append(k)
                break
        else:
            buckets.append([k])
    return tuple(make_group(b, [strings[j] for j in b]) for b in buckets)


def build_setting(group: CommutingGroup, label: str = "") -> tuple[MeasurementSetting, np.ndarray]:
    return group.setting(label), group.eig


def h2_hamiltonian(r: float) -> WeightedObservable:
    """Four-qubit H2 Hamiltonian (minimal basis) at a tabulated bond length."""
    strings, coeffs = h2_row(r)
    return WeightedObservable.from_lists(coeffs, strings)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = ka | kb  # x**2 == x for binary variables
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def _poly_add(*ps) -> dict:
    out: dict = {}
    for p in ps:
        for k, v in p.items():
            out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def factor_register(mx: int = 2, my: int = 2):
    """Binary polynomials p(x) and q(y); odd factors with the MSB first."""
    p = {frozenset(): 1}
    for i in range(mx):
        p[frozenset([i])] = 2 ** (mx - i)
    q = {frozenset(): 1}
    for j in range(my):
        q[frozenset([mx + j])] = 2 ** (my - j)
    return p, q


def register_value(bits: str, mx: int = 2, my: int = 2) -> tuple[int, int]:
    """(p, q) encoded by a bit string such as ``"0110"``."""
    x = [int(c) for c in bits]
    p = 1 + sum(x[i] << (mx - i) for i in range(mx))
    q = 1 + sum(x[mx + j] << (my - j) for j in range(my))
    return p, q


def build_vqf_hamiltonian(n: int, mx: int = 2, my: int = 2) -> WeightedObservable:
    """Cost (N - p q)^2 over the factor register, expanded in Z strings.

    Uses exact rational arithmetic; every weight is an integer.
    """
    if isinstance(n, bool) or int(n) != n:
        raise InvalidArgument("N must be an integer")
    n = int(n)
    if n % 2 == 0 or not 3 <= n <= 49:
        raise InvalidArgument("N must be odd with 3 <= N <= 49")
    if mx < 1 or my < 1 or mx + my != 4:
        raise InvalidArgument("register must split 4 qubits as mx + my")
    p, q = factor_register(mx, my)
    resid = _poly_add({frozenset(): n}, {k: -v for k, v in _poly_mul(p, q).items()})
    cost = _poly_mul(resid, resid)
    # x_i = (1 - Z_i) / 2
    zterms: dict[frozenset, Fraction] = {}
    for mono, c in cost.items():
        for r in range(len(mono) + 1):
            for sub in itertools.combinations(sorted(mono), r):
                key = frozenset(sub)
                zterms[key] = zterms.get(key, Fraction(0)) + Fraction(c * (-1) ** r, 2 ** len(mono))
    terms = []
    for key in sorted(zterms, key=lambda k: (len(k), sorted(k))):
        w = zterms[key]
        if w.denominator != 1:
            raise ArithmeticError("non-integer Pauli weight")
        if w != 0:
            s = "".join("Z" if i in key else "I" for i in range(4))
            terms.append((float(w), s))
    return WeightedObservable(tuple(terms))
