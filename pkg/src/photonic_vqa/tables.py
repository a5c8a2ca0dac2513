"""Access to the bundled phase-setting and Hamiltonian tables."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import TableLookupError
from .mesh import PhaseVector, Stage


@lru_cache(maxsize=None)
def _load(name: str) -> dict:
    with resources.files("photonic_vqa").joinpath("data").joinpath(name).open("r") as fh:
        return json.load(fh)


def phase_tables() -> dict:
    return _load("phase_tables.json")


def table(table_id: str) -> dict:
    for t in phase_tables()["tables"]:
        if t["table_id"] == table_id:
            return t
    raise TableLookupError(table_id)


def phase_row(table_id: str, label: str, stage: Stage | str | None = None) -> PhaseVector:
    """Look up one row as a PhaseVector."""
    stage = None if stage is None else Stage(stage)
    for r in table(table_id)["rows"]:
        if r["label"] == label and (stage is None or r["stage"] == stage.value):
            return PhaseVector(tuple(r["theta"]), tuple(r["phi"]), Stage(r["stage"]))
    raise TableLookupError(f"{table_id}: {label} ({stage})")


def h2_table() -> dict:
    return _load("h2_sto3g.json")


def h2_distances() -> np.ndarray:
    return np.array([r["R"] for r in h2_table()["rows"]])


def h2_row(r: float) -> tuple[list[str], np.ndarray]:
    """Pauli strings and coefficients (Ha) at bond length ``r`` (angstrom)."""
    data = h2_table()
    for row in data["rows"]:
        if abs(row["R"] - r) < 1e-9:
            return list(data["operators"]), np.array(row["coeffs"], dtype=float)
    grid = ", ".join(f"{x:g}" for x in h2_distances())
    raise TableLookupError(f"R = {r} is not on the tabulated grid [{grid}]")
