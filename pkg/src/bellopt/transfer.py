"""Fock-basis amplitude engine for linear optical mode transformations.

Three routes to the same transition amplitudes live here on purpose:

* :func:`amplitude` evaluates single matrix elements through a Ryser
  permanent with Gray-code subset updates,
* :func:`amplitude_oracle` expands the transformed creation-operator
  product symbolically (desk scale only) and is kept as an independent
  cross-check of the permanent route,
* :func:`outcome_table` cascades photons through precomputed
  mode-insertion index maps, producing amplitudes for the whole outcome
  alphabet at once; this is the path the optimizer hammers on, and it is
  validated against the other two in the test suite.

A mode transformation maps creation operator ``a_r`` to
``sum_c U[r, c] a_c``, so row indices are input modes and column indices
are output modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from bellopt.errors import ContractViolationError, InvalidMatrixError, OracleScaleError
from bellopt.fock import (
    FockState,
    bosonic_factor,
    enumerate_outcomes,
    factorial,
    to_labeling,
)

#: Desk-scale caps for the symbolic expansion oracle.
ORACLE_MAX_PHOTONS = 4
ORACLE_MAX_MODES = 6

#: Default allowance on singular values beyond 1 before a matrix is rejected.
SUBUNITARY_TOL = 1e-9


@dataclass
class CircuitMatrix:
    """M x M complex mode transformation, possibly sub-unitary."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidMatrixError(f"matrix must be square, got shape {entries.shape}")
        self.entries = entries

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def subunitarity_excess(self) -> float:
        """How far the largest singular value exceeds 1 (0 if it does not)."""
        top = float(np.linalg.svd(self.entries, compute_uv=False)[0])
        return max(0.0, top - 1.0)

    def require_subunitary(self, tol: float = SUBUNITARY_TOL) -> None:
        excess = self.subunitarity_excess()
        if excess > tol:
            raise InvalidMatrixError(
                f"matrix is not sub-unitary: largest singular value exceeds 1 by {excess:.3e}"
            )


@dataclass(frozen=True)
class BellAmplitudes:
    """The four outcome amplitudes, one per Bell-branch input row set."""

    a1: complex
    a2: complex
    a3: complex
    a4: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4], dtype=np.complex128)


@dataclass
class OutcomeTable:
    """p(y|x) for every retained outcome y plus the leaked-photon probabilities.

    ``rows`` maps each outcome to the 4-vector (p(y|1), ..., p(y|4)) in
    enumeration order; ``garbage[x-1]`` is the probability that input x loses
    at least one photon to an unmeasured mode.
    """

    rows: dict[FockState, np.ndarray]
    garbage: np.ndarray
    n_a: int
    m: int

    def probability_matrix(self) -> np.ndarray:
        """All rows stacked into a (num_outcomes, 4) array."""
        if not self.rows:
            return np.zeros((0, 4))
        return np.stack(list(self.rows.values()))


def permanent(a: np.ndarray) -> complex:
    """Permanent of a square complex matrix (Ryser, Gray-code subset order)."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"permanent needs a square matrix, got {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    cols = [np.ascontiguousarray(a[:, j]) for j in range(n)]
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ prev
        j = changed.bit_length() - 1
        if gray & changed:
            row_sums += cols[j]
        else:
            row_sums -= cols[j]
        prev = gray
        prod = row_sums.prod()
        if (gray.bit_count() & 1) == (n & 1):
            total += prod
        else:
            total -= prod
    return complex(total)


def _check_pair(u: CircuitMatrix, input_state: FockState, output_state: FockState) -> None:
    if input_state.m != output_state.m or input_state.m != u.m:
        raise ContractViolationError(
            f"mode counts disagree: input {input_state.m}, output {output_state.m}, "
            f"matrix {u.m}"
        )
    if input_state.n != output_state.n:
        raise ContractViolationError(
            f"photon number not conserved: input {input_state.n}, output {output_state.n}"
        )


def amplitude(u: CircuitMatrix, input_state: FockState, output_state: FockState) -> complex:
    """Transition amplitude <output| A(U) |input> via the matrix permanent.

    Equals perm(U[m, m']) / sqrt(prod n_k! * prod n'_k!) where m, m' are the
    canonical labelings of the two states.
    """
    _check_pair(u, input_state, output_state)
    rows = [label - 1 for label in to_labeling(input_state).labels]
    cols = [label - 1 for label in to_labeling(output_state).labels]
    sub = u.entries[np.ix_(rows, cols)] if rows else np.zeros((0, 0), dtype=np.complex128)
    norm = 1.0
    for occ in input_state.occupations:
        norm *= factorial(occ)
    for occ in output_state.occupations:
        norm *= factorial(occ)
    return permanent(sub) / math.sqrt(norm)


def amplitude_oracle(u: CircuitMatrix, input_state: FockState, output_state: FockState) -> complex:
    """Independent amplitude route: expand the transformed creation-operator product.

    Tracks the polynomial in output-mode creation operators term by term and
    reads off the coefficient of the output occupation monomial. Exponential
    bookkeeping limits it to desk scale.
    """
    _check_pair(u, input_state, output_state)
    if input_state.n > ORACLE_MAX_PHOTONS or input_state.m > ORACLE_MAX_MODES:
        raise OracleScaleError(
            f"oracle caps at N <= {ORACLE_MAX_PHOTONS}, M <= {ORACLE_MAX_MODES}; "
            f"got N = {input_state.n}, M = {input_state.m}"
        )
    m = input_state.m
    poly: dict[tuple[int, ...], complex] = {(0,) * m: 1.0 + 0.0j}
    for label in to_labeling(input_state).labels:
        row = u.entries[label - 1]
        grown: dict[tuple[int, ...], complex] = {}
        for monomial, coeff in poly.items():
            for mode in range(m):
                key = monomial[:mode] + (monomial[mode] + 1,) + monomial[mode + 1:]
                grown[key] = grown.get(key, 0.0 + 0.0j) + coeff * row[mode]
        poly = grown
    coeff = poly.get(output_state.occupations, 0.0 + 0.0j)
    scale = 1.0
    for occ in output_state.occupations:
        scale *= factorial(occ)
    for occ in input_state.occupations:
        scale /= factorial(occ)
    return coeff * math.sqrt(scale)


# ---------------------------------------------------------------------------
# Bell-state inputs
# ---------------------------------------------------------------------------

def _bell_qubit_modes(x: int, n_a: int) -> tuple[tuple[int, int], tuple[int, int], int]:
    """0-based photon modes of the two Fock branches of Bell input x, plus sign."""
    if x not in (1, 2, 3, 4):
        raise ContractViolationError(f"Bell state index must be 1..4, got {x}")
    if x in (1, 2):
        branch_a, branch_b = (n_a, n_a + 2), (n_a + 1, n_a + 3)
    else:
        branch_a, branch_b = (n_a, n_a + 3), (n_a + 1, n_a + 2)
    sign = 1 if x in (1, 3) else -1
    return branch_a, branch_b, sign


def bell_input_branches(x: int, n_a: int) -> tuple[FockState, FockState, int]:
    """The two Fock components of Bell input x with n_a single-photon ancillas.

    The input state is (branch_a + sign * branch_b) / sqrt(2).
    """
    branch_a, branch_b, sign = _bell_qubit_modes(x, n_a)
    m = n_a + 4

    def branch(modes: tuple[int, int]) -> FockState:
        occ = [1] * n_a + [0] * 4
        for mode in modes:
            occ[mode] += 1
        return FockState(tuple(occ))

    return branch(branch_a), branch(branch_b), sign


def _bell_row_sets(n_a: int) -> tuple[tuple[int, ...], ...]:
    """0-based input-row selections behind the four branch amplitudes."""
    anc = tuple(range(n_a))
    return (
        anc + (n_a, n_a + 2),
        anc + (n_a + 1, n_a + 3),
        anc + (n_a, n_a + 3),
        anc + (n_a + 1, n_a + 2),
    )


def bell_amplitudes(u: CircuitMatrix, y: FockState, n_a: int) -> BellAmplitudes:
    """The four distinct-permutation sums feeding p(y|x) for one outcome y."""
    n, m = n_a + 2, n_a + 4
    if u.m != m:
        raise ContractViolationError(f"matrix is {u.m}x{u.m}, expected {m}x{m}")
    if y.m != m or y.n != n:
        raise ContractViolationError(
            f"outcome must have {n} photons over {m} modes, got {y.n} over {y.m}"
        )
    cols = [label - 1 for label in to_labeling(y).labels]
    denom = 1.0
    for occ in y.occupations:
        denom *= factorial(occ)
    values = [
        permanent(u.entries[np.ix_(rows, cols)]) / denom for rows in _bell_row_sets(n_a)
    ]
    return BellAmplitudes(*values)


def outcome_probabilities(amps: BellAmplitudes, y: FockState) -> np.ndarray:
    """(p(y|1), ..., p(y|4)) from one outcome's amplitudes."""
    c = bosonic_factor(y)
    return np.array(
        [
            c * abs(amps.a1 + amps.a2) ** 2,
            c * abs(amps.a1 - amps.a2) ** 2,
            c * abs(amps.a3 + amps.a4) ** 2,
            c * abs(amps.a3 - amps.a4) ** 2,
        ]
    )


# ---------------------------------------------------------------------------
# Whole-alphabet cascade
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _outcome_index(n_photons: int, n_modes: int) -> dict[tuple[int, ...], int]:
    return {
        state.occupations: i for i, state in enumerate(enumerate_outcomes(n_photons, n_modes))
    }


@lru_cache(maxsize=None)
def _insertion_targets(n_photons: int, n_modes: int) -> np.ndarray:
    """targets[mode, i]: index at level n+1 of state i at level n plus one photon."""
    states = enumerate_outcomes(n_photons, n_modes)
    index_up = _outcome_index(n_photons + 1, n_modes)
    targets = np.empty((n_modes, len(states)), dtype=np.intp)
    for i, state in enumerate(states):
        occ = state.occupations
        for mode in range(n_modes):
            key = occ[:mode] + (occ[mode] + 1,) + occ[mode + 1:]
            targets[mode, i] = index_up[key]
    return targets


def _apply_creation_row(vec: np.ndarray, row: np.ndarray, level: int, n_modes: int) -> np.ndarray:
    """Multiply an amplitude vector by one transformed creation operator.

    ``vec`` holds coefficients over the level-``level`` outcome basis on its
    FIRST axis, trailing batch axes pass through; ``row`` holds the M operator
    coefficients per batch element, batch axes leading. Keeping the outcome
    axis first makes the scatter-adds row-contiguous, which is what the
    optimizer's batched gradient lives on.
    """
    targets = _insertion_targets(level, n_modes)
    out_dim = len(enumerate_outcomes(level + 1, n_modes))
    out = np.zeros((out_dim,) + vec.shape[1:], dtype=np.complex128)
    for mode in range(n_modes):
        out[targets[mode]] += row[..., mode] * vec
    return out


@lru_cache(maxsize=None)
def _bosonic_factor_array(n_photons: int, n_modes: int) -> np.ndarray:
    return np.array([bosonic_factor(s) for s in enumerate_outcomes(n_photons, n_modes)])


def _cascade_amplitudes(u_flat: np.ndarray, n_a: int) -> tuple[np.ndarray, ...]:
    """Four amplitude arrays of shape (K, B) for a flat batch of matrices (B, M, M)."""
    m = n_a + 4
    vec = np.ones((1,) + u_flat.shape[:-2], dtype=np.complex128)
    for j in range(n_a):
        vec = _apply_creation_row(vec, u_flat[..., j, :], j, m)
    # The four row sets share the ancilla prefix and pair one of rows
    # {n_a, n_a+1} with one of rows {n_a+2, n_a+3}.
    q1 = _apply_creation_row(vec, u_flat[..., n_a, :], n_a, m)
    q2 = _apply_creation_row(vec, u_flat[..., n_a + 1, :], n_a, m)
    a1 = _apply_creation_row(q1, u_flat[..., n_a + 2, :], n_a + 1, m)
    a3 = _apply_creation_row(q1, u_flat[..., n_a + 3, :], n_a + 1, m)
    a2 = _apply_creation_row(q2, u_flat[..., n_a + 3, :], n_a + 1, m)
    a4 = _apply_creation_row(q2, u_flat[..., n_a + 2, :], n_a + 1, m)
    return a1, a2, a3, a4


def bell_amplitude_arrays(u_entries: np.ndarray, n_a: int) -> tuple[np.ndarray, ...]:
    """All four branch amplitudes for every outcome at once.

    ``u_entries`` may carry leading batch axes: shape (..., M, M) in, four
    arrays of shape (..., K) out, K the size of the outcome alphabet, ordered
    as in :func:`bellopt.fock.enumerate_outcomes`.
    """
    u = np.asarray(u_entries, dtype=np.complex128)
    m = n_a + 4
    if u.shape[-2:] != (m, m):
        raise ContractViolationError(f"matrix block must be {m}x{m}, got {u.shape[-2:]}")
    batch_shape = u.shape[:-2]
    amps = _cascade_amplitudes(u.reshape((-1, m, m)), n_a)
    return tuple(
        np.ascontiguousarray(np.moveaxis(a, 0, -1)).reshape(batch_shape + a.shape[:1])
        for a in amps
    )


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real**2 + z.imag**2


def bell_probability_parts(u_flat: np.ndarray, n_a: int) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities in batch-major layout: p (4, K, B), garbage (4, B).

    The first axis runs over the four Bell inputs; ``u_flat`` must be a flat
    batch (B, M, M). This is the allocation-lean path the optimizer uses;
    :func:`bell_probability_arrays` rearranges it into table layout.
    """
    a1, a2, a3, a4 = _cascade_amplitudes(u_flat, n_a)
    c = _bosonic_factor_array(n_a + 2, n_a + 4)[:, None]
    p = np.empty((4,) + a1.shape, dtype=np.float64)
    np.multiply(c, _abs2(a1 + a2), out=p[0])
    np.multiply(c, _abs2(a1 - a2), out=p[1])
    np.multiply(c, _abs2(a3 + a4), out=p[2])
    np.multiply(c, _abs2(a3 - a4), out=p[3])
    garbage = np.maximum(1.0 - p.sum(axis=1), 0.0)
    return p, garbage


def bell_probability_arrays(u_entries: np.ndarray, n_a: int) -> tuple[np.ndarray, np.ndarray]:
    """p(y|x) for the whole alphabet plus garbage mass, batch-friendly.

    Returns ``(p, garbage)`` with shapes (..., K, 4) and (..., 4).
    """
    u = np.asarray(u_entries, dtype=np.complex128)
    m = n_a + 4
    if u.shape[-2:] != (m, m):
        raise ContractViolationError(f"matrix block must be {m}x{m}, got {u.shape[-2:]}")
    batch_shape = u.shape[:-2]
    p, garbage = bell_probability_parts(u.reshape((-1, m, m)), n_a)
    k = p.shape[1]
    p_table = np.ascontiguousarray(p.transpose(2, 1, 0)).reshape(batch_shape + (k, 4))
    g_table = np.ascontiguousarray(garbage.T).reshape(batch_shape + (4,))
    return p_table, g_table


def outcome_table(u: CircuitMatrix, n_a: int) -> OutcomeTable:
    """Measurement statistics of all four Bell inputs under ``u``.

    Keeps every outcome, including all-zero rows; the conditions checker needs
    the full alphabet.
    """
    m = n_a + 4
    if u.m != m:
        raise ContractViolationError(f"matrix is {u.m}x{u.m}, expected {m}x{m} for n_a={n_a}")
    u.require_subunitary()
    p, garbage = bell_probability_arrays(u.entries, n_a)
    states = enumerate_outcomes(n_a + 2, m)
    rows = {state: p[i] for i, state in enumerate(states)}
    return OutcomeTable(rows=rows, garbage=garbage, n_a=n_a, m=m)
