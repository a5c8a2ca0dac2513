"""Simulator for variational quantum algorithms on a two-ququart photonic processor."""

from .mesh import PhaseVector, Stage, phases_for_projector, stage_four_matrix, stage_one_matrix
from .state import MeasurementSetting, ProjectorPair, TwoQuquartState, prepare_state
from .counts import CountsRecord, NoiseConfig
from .observables import WeightedObservable, build_vqf_hamiltonian, group_commuting, h2_hamiltonian

__version__ = "0.1.0"
