"""Circuits for Hamiltonian simulation of the 2D linearized Euler equations."""

from .circuit import Circuit, Gate, count, decompose, dense_unitary
from .diffops import BoundaryCondition, GridSpec
from .lee import (
    LeeParams,
    TrotterSchedule,
    evolve,
    lee_generator,
    prepare_point_source,
    split_generator,
    split_step,
    trotter_error_bound,
    trotter_step,
)
from .obstacles import BinaryCell, ObstacleSpec, decompose_mask
from .statevector import FieldGrid, RegisterLayout, StateVector

__version__ = "0.1.0"
