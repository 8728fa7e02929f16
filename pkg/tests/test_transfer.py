import itertools
import math

import numpy as np
import pytest

from bellopt.errors import ContractViolationError, InvalidMatrixError, OracleScaleError
from bellopt.fock import FockState, enumerate_outcomes
from bellopt.transfer import (
    CircuitMatrix,
    amplitude,
    amplitude_oracle,
    bell_amplitudes,
    bell_input_branches,
    bell_probability_arrays,
    outcome_probabilities,
    outcome_table,
    permanent,
)
from bellopt.unitary import CircuitParams, haar_random_unitary, params_to_matrix


def naive_permanent(a: np.ndarray) -> complex:
    n = a.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        prod = 1.0 + 0.0j
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += prod
    return total


def random_subunitary(m: int, seed: int) -> CircuitMatrix:
    rng = np.random.default_rng(seed)
    params = CircuitParams(
        rng.uniform(-0.7, 0.7, m * m),
        rng.uniform(-0.7, 0.7, m * m),
        rng.uniform(0.0, 0.8, m),
    )
    return params_to_matrix(params)


def splitter_50_50() -> CircuitMatrix:
    return CircuitMatrix(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0))


def test_permanent_small_cases():
    assert permanent(np.zeros((0, 0))) == 1.0 + 0.0j
    assert permanent(np.array([[3.5]])) == pytest.approx(3.5)
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert permanent(a) == pytest.approx(1 * 4 + 2 * 3)


def test_permanent_matches_naive_sum():
    rng = np.random.default_rng(5)
    for n in (3, 4, 5):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert permanent(a) == pytest.approx(naive_permanent(a), abs=1e-10)


def test_amplitude_identity():
    u = CircuitMatrix(np.eye(4))
    state = FockState((1, 1, 0, 0))
    assert amplitude(u, state, state) == pytest.approx(1.0)


def test_hong_ou_mandel_suppression():
    bs = splitter_50_50()
    assert amplitude(bs, FockState((1, 1)), FockState((1, 1))) == pytest.approx(0.0, abs=1e-15)
    a20 = amplitude(bs, FockState((1, 1)), FockState((2, 0)))
    assert a20 == pytest.approx(1 / math.sqrt(2))
    assert abs(a20) ** 2 == pytest.approx(0.5)


def test_amplitude_photon_mismatch_is_contract_violation():
    u = CircuitMatrix(np.eye(3))
    with pytest.raises(ContractViolationError):
        amplitude(u, FockState((1, 0, 0)), FockState((1, 1, 0)))
    with pytest.raises(ContractViolationError):
        amplitude(u, FockState((1, 0)), FockState((1, 0, 0)))


def test_oracle_identity_and_splitter():
    assert amplitude_oracle(
        CircuitMatrix(np.eye(3)), FockState((1, 1, 0)), FockState((1, 1, 0))
    ) == pytest.approx(1.0)
    assert amplitude_oracle(
        splitter_50_50(), FockState((1, 1)), FockState((2, 0))
    ) == pytest.approx(1 / math.sqrt(2))


def test_oracle_refuses_beyond_desk_scale():
    u = CircuitMatrix(np.eye(6))
    with pytest.raises(OracleScaleError):
        amplitude_oracle(u, FockState((1, 1, 1, 1, 1, 0)), FockState((1, 1, 1, 1, 1, 0)))
    with pytest.raises(OracleScaleError):
        amplitude_oracle(
            CircuitMatrix(np.eye(7)),
            FockState((1, 0, 0, 0, 0, 0, 0)),
            FockState((1, 0, 0, 0, 0, 0, 0)),
        )


def test_amplitude_matches_oracle_on_random_subunitaries():
    rng = np.random.default_rng(99)
    for seed in range(25):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(1, min(4, m) + 1))
        u = random_subunitary(m, 1000 + seed)
        states = enumerate_outcomes(n, m)
        for _ in range(3):
            src = states[rng.integers(len(states))]
            dst = states[rng.integers(len(states))]
            assert amplitude(u, src, dst) == pytest.approx(
                amplitude_oracle(u, src, dst), abs=1e-10
            )


def test_unitary_norm_preservation():
    rng = np.random.default_rng(11)
    for m, n in ((4, 2), (5, 3), (6, 4)):
        u = haar_random_unitary(m, int(rng.integers(1 << 31)))
        src = enumerate_outcomes(n, m)[0]
        total = sum(
            abs(amplitude(u, src, dst)) ** 2 for dst in enumerate_outcomes(n, m)
        )
        assert total == pytest.approx(1.0, abs=1e-9)


def test_bell_amplitudes_identity_examples():
    ident = CircuitMatrix(np.eye(4))
    amps = bell_amplitudes(ident, FockState((1, 0, 1, 0)), 0)
    assert amps.as_array() == pytest.approx([1, 0, 0, 0])
    amps = bell_amplitudes(ident, FockState((2, 0, 0, 0)), 0)
    assert amps.as_array() == pytest.approx([0, 0, 0, 0])
    amps = bell_amplitudes(ident, FockState((1, 0, 0, 1)), 0)
    assert amps.as_array() == pytest.approx([0, 0, 1, 0])


def test_bell_amplitudes_dimension_checks():
    with pytest.raises(ContractViolationError):
        bell_amplitudes(CircuitMatrix(np.eye(4)), FockState((1, 0, 1, 0)), 2)
    with pytest.raises(ContractViolationError):
        bell_amplitudes(CircuitMatrix(np.eye(4)), FockState((2, 0, 1, 0)), 0)


def test_outcome_table_identity():
    table = outcome_table(CircuitMatrix(np.eye(4)), 0)
    assert table.rows[FockState((1, 0, 1, 0))] == pytest.approx([0.5, 0.5, 0, 0])
    assert table.rows[FockState((0, 1, 0, 1))] == pytest.approx([0.5, 0.5, 0, 0])
    assert table.rows[FockState((1, 0, 0, 1))] == pytest.approx([0, 0, 0.5, 0.5])
    assert table.rows[FockState((0, 1, 1, 0))] == pytest.approx([0, 0, 0.5, 0.5])
    assert table.garbage == pytest.approx([0, 0, 0, 0])
    # every other outcome carries nothing for x = 1
    for state, row in table.rows.items():
        if state.occupations not in {(1, 0, 1, 0), (0, 1, 0, 1)}:
            assert row[0] == 0.0


def test_outcome_table_zero_matrix_leaks_everything():
    table = outcome_table(CircuitMatrix(np.zeros((4, 4))), 0)
    assert table.probability_matrix() == pytest.approx(np.zeros((10, 4)))
    assert table.garbage == pytest.approx([1, 1, 1, 1])


def test_outcome_table_identity_bunching_is_exact_zero():
    table = outcome_table(CircuitMatrix(np.eye(6)), 2)
    for state, row in table.rows.items():
        if max(state.occupations) >= 2:
            assert all(p == 0.0 for p in row)


def test_outcome_table_columns_normalized_haar():
    u = haar_random_unitary(6, 123)
    table = outcome_table(u, 2)
    sums = table.probability_matrix().sum(axis=0) + table.garbage
    assert sums == pytest.approx([1, 1, 1, 1], abs=1e-9)


def test_outcome_table_rejects_super_unitary():
    with pytest.raises(InvalidMatrixError):
        outcome_table(CircuitMatrix(1.5 * np.eye(4)), 0)


def test_outcome_table_rejects_wrong_size():
    with pytest.raises(ContractViolationError):
        outcome_table(CircuitMatrix(np.eye(4)), 2)


@pytest.mark.parametrize("n_a", [0, 2])
def test_bell_probabilities_consistent_with_branch_amplitudes(n_a):
    """p(y|x) from the four permanent sums equals the direct two-branch evaluation."""
    u = random_subunitary(n_a + 4, seed=7 + n_a)
    table = outcome_table(u, n_a)
    for state, row in table.rows.items():
        amps = bell_amplitudes(u, state, n_a)
        assert row == pytest.approx(outcome_probabilities(amps, state), abs=1e-10)
        for x in (1, 2, 3, 4):
            branch_a, branch_b, sign = bell_input_branches(x, n_a)
            amp = (
                amplitude(u, branch_a, state) + sign * amplitude(u, branch_b, state)
            ) / np.sqrt(2.0)
            assert row[x - 1] == pytest.approx(abs(amp) ** 2, abs=1e-10)


def test_bell_probability_arrays_batched_matches_loop():
    mats = np.stack([random_subunitary(6, 40 + i).entries for i in range(5)])
    p_batch, g_batch = bell_probability_arrays(mats, 2)
    for i in range(5):
        p_one, g_one = bell_probability_arrays(mats[i], 2)
        assert np.allclose(p_batch[i], p_one, atol=1e-14)
        assert np.allclose(g_batch[i], g_one, atol=1e-14)
