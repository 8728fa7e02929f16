"""Simulation and optimization of linear-optical Bell-state analyzers.

The package computes photo-counting statistics of the four Bell states
(optionally augmented with unentangled ancilla photons) under an arbitrary
sub-unitary mode transformation, scores analyzers by classical mutual
information, optimizes the transformation, and checks the structural
column conditions that rule out two-mode-bunched measurement outcomes.
"""

__version__ = "0.1.0"

from bellopt.errors import (
    ContractViolationError,
    InvalidMatrixError,
    MatrixFileError,
    OracleScaleError,
    UnsupportedConfigurationError,
)
from bellopt.fock import FockState, ModeLabeling, enumerate_outcomes
from bellopt.transfer import (
    BellAmplitudes,
    CircuitMatrix,
    OutcomeTable,
    amplitude,
    amplitude_oracle,
    bell_amplitudes,
    outcome_table,
)
from bellopt.unitary import (
    CircuitParams,
    haar_random_unitary,
    matrix_distance_to_unitary,
    params_to_matrix,
    read_matrix_file,
    sample_conditioned_unitary,
    write_matrix_file,
)
from bellopt.infometrics import InfoReport, conditional_information, mutual_information
from bellopt.optimizer import OptimizationResult, OptimizerConfig, optimize
from bellopt.conditions import (
    check_column_conditions,
    classify_outcome,
    conditioned_vs_unconditioned_experiment,
    scan_bunched_two_mode,
)
