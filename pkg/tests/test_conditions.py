import numpy as np
import pytest

from bellopt.conditions import (
    Clause,
    Stage,
    bunched_two_mode_outcomes,
    check_column_conditions,
    classify_outcome,
    conditioned_vs_unconditioned_experiment,
    scan_bunched_two_mode,
)
from bellopt.errors import ContractViolationError, UnsupportedConfigurationError
from bellopt.fock import FockState
from bellopt.infometrics import mutual_information
from bellopt.transfer import CircuitMatrix, outcome_table
from bellopt.unitary import haar_random_unitary, sample_conditioned_unitary


def standard_bsm() -> CircuitMatrix:
    """The textbook Bell analyzer: 50/50 mixing of rails 1-3 and 2-4."""
    r = 1 / np.sqrt(2)
    u = np.zeros((4, 4), dtype=complex)
    for i, j in ((0, 2), (1, 3)):
        u[i, i] = r
        u[i, j] = r
        u[j, i] = r
        u[j, j] = -r
    return CircuitMatrix(u)


def dft_matrix(m: int) -> CircuitMatrix:
    w = np.exp(2j * np.pi / m)
    return CircuitMatrix(
        np.array([[w ** (a * b) for b in range(m)] for a in range(m)]) / np.sqrt(m)
    )


def test_classify_identity_bunched_is_clause_a():
    verdict = classify_outcome(CircuitMatrix(np.eye(4)), FockState((2, 0, 0, 0)), 0)
    assert verdict.clause is Clause.A
    assert not verdict.ambiguous
    assert verdict.prob_mass == pytest.approx(0.0)


def test_classify_identity_coincidence_is_ambiguous_none():
    verdict = classify_outcome(CircuitMatrix(np.eye(4)), FockState((1, 0, 1, 0)), 0)
    assert verdict.clause is Clause.NONE
    assert verdict.ambiguous
    assert abs(verdict.amplitudes.a1) > 0.5
    assert abs(verdict.amplitudes.a2) < 1e-12


def test_classify_dft_bunched_is_ambiguous_none():
    verdict = classify_outcome(dft_matrix(4), FockState((2, 0, 0, 0)), 0)
    assert verdict.clause is Clause.NONE
    assert verdict.ambiguous


def test_classify_bsm_coincidences_are_clause_c():
    # The standard analyzer pins the second Bell pair through coincidences
    # across rails; those outcomes satisfy clause C with a definite sign.
    bsm = standard_bsm()
    seen_signs = set()
    for occ in ((1, 1, 0, 0), (0, 0, 1, 1), (1, 0, 0, 1), (0, 1, 1, 0)):
        verdict = classify_outcome(bsm, FockState(occ), 0)
        assert verdict.clause is Clause.C
        assert verdict.sign in (+1, -1)
        seen_signs.add(verdict.sign)
    assert seen_signs == {+1, -1}


def test_classify_bsm_bunched_is_ambiguous():
    bsm = standard_bsm()
    for occ in ((2, 0, 0, 0), (0, 2, 0, 0), (0, 0, 2, 0), (0, 0, 0, 2)):
        verdict = classify_outcome(bsm, FockState(occ), 0)
        assert verdict.clause is Clause.NONE
        assert verdict.ambiguous


def test_clause_soundness_zero_entropy_terms():
    """Outcomes classified A/B/C contribute nothing to the conditional information."""
    for u in (standard_bsm(), CircuitMatrix(np.eye(4))):
        table = outcome_table(u, 0)
        for state, row in table.rows.items():
            verdict = classify_outcome(u, state, 0)
            if verdict.clause is Clause.NONE:
                continue
            total = row.sum()
            for p in row:
                if p > 0:
                    assert p * np.log2(total / p) < 1e-8


def test_bunched_outcome_enumeration():
    outcomes = bunched_two_mode_outcomes(0)
    occs = {o.occupations for o in outcomes}
    assert (2, 0, 0, 0) in occs
    assert (1, 1, 0, 0) in occs
    assert all(sum(1 for k in o if k > 0) <= 2 for o in occs)
    assert len(occs) == len(outcomes)
    # N=2, M=4: four single-mode outcomes plus C(4,2) balanced splits
    assert len(outcomes) == 4 + 6


def test_scan_identity_all_clause_a():
    for n_a in (0, 2):
        verdicts = scan_bunched_two_mode(CircuitMatrix(np.eye(n_a + 4)), n_a)
        bunched_only = [v for v in verdicts if max(v.outcome.occupations) >= 2]
        assert all(v.clause is Clause.A for v in bunched_only)
        assert not any(v.ambiguous for v in verdicts if max(v.outcome.occupations) >= 2)


def test_scan_conditioned_unitary_all_clause_a():
    u = sample_conditioned_unitary(6, 5)
    verdicts = scan_bunched_two_mode(u, 6)
    assert all(v.clause is Clause.A for v in verdicts)
    assert all(v.prob_mass < 1e-18 for v in verdicts)


def test_scan_haar_typically_ambiguous():
    hits = 0
    for seed in range(10):
        u = haar_random_unitary(6, 600 + seed)
        verdicts = scan_bunched_two_mode(u, 2)
        if any(v.ambiguous for v in verdicts):
            hits += 1
    assert hits >= 8


def test_no_go_witness_bounds_information():
    for seed in range(5):
        u = haar_random_unitary(6, 700 + seed)
        if any(v.ambiguous for v in scan_bunched_two_mode(u, 2)):
            h = mutual_information(outcome_table(u, 2)).h_mutual
            assert h < 2.0 - 1e-6


def test_column_conditions_identity_satisfies_iv():
    u = CircuitMatrix(np.eye(8))
    verdicts = check_column_conditions(u, 4, stage=Stage.FULL)
    # Ancilla columns have every qubit row zero plus spare ancilla zeros.
    for verdict in verdicts[:4]:
        assert "IV" in verdict.satisfied
    # Qubit columns keep their own unit entry, so only one pair vanishes.
    for verdict in verdicts[4:]:
        assert verdict.satisfied
        assert "IV" not in verdict.satisfied


def test_column_conditions_conditioned_unitary():
    for n_a in (4, 6):
        u = sample_conditioned_unitary(n_a, 77)
        verdicts = check_column_conditions(u, n_a, stage=Stage.FULL)
        assert all(verdict.satisfied for verdict in verdicts)
        assert all(verdict.satisfied <= {"I", "II", "III", "IV"} for verdict in verdicts)


def test_column_conditions_block_roles_for_documented_pattern():
    # Block columns satisfy the conditions they were designed for.
    u = sample_conditioned_unitary(6, 3)
    verdicts = {v.column: v.satisfied for v in check_column_conditions(u, 6)}
    for col in (1, 2, 3):
        assert "IV" in verdicts[col]
    for col in (4, 5, 6):
        assert "III" in verdicts[col]
    for col in (7, 8, 9, 10):
        assert "II" in verdicts[col]


def test_column_conditions_haar_fails():
    u = haar_random_unitary(8, 4)
    verdicts = check_column_conditions(u, 4, stage=Stage.FULL)
    assert all(not verdict.satisfied for verdict in verdicts)


def test_stage_monotonicity():
    mats = [sample_conditioned_unitary(6, s) for s in range(4)]
    mats.append(CircuitMatrix(np.eye(10)))
    for u in mats:
        full = check_column_conditions(u, 6, stage=Stage.FULL)
        p1 = check_column_conditions(u, 6, stage=Stage.P1)
        p0 = check_column_conditions(u, 6, stage=Stage.P0)
        for vf, v1, v0 in zip(full, p1, p0):
            if vf.satisfied:
                assert v1.satisfied, f"column {vf.column} fails P1"
                assert v0.satisfied, f"column {vf.column} fails P0"


def test_witness_entries_are_real_zeros():
    u = sample_conditioned_unitary(6, 12)
    tol = 1e-10
    for verdict in check_column_conditions(u, 6, tol=tol):
        col = verdict.column - 1
        for row in verdict.witness.ancilla_zero_rows + verdict.witness.qubit_zero_rows:
            assert abs(u.entries[row - 1, col]) < tol
        for other_col, rows in verdict.witness.cross_zero_rows.items():
            for row in rows:
                assert abs(u.entries[row - 1, other_col - 1]) < tol


def test_check_column_conditions_dimension_guard():
    with pytest.raises(ContractViolationError):
        check_column_conditions(CircuitMatrix(np.eye(4)), 2)


def test_experiment_small_run():
    comparison = conditioned_vs_unconditioned_experiment(4, trials=3, seed=9)
    assert comparison.trials == 3
    assert len(comparison.conditioned.h_mutual) == 3
    assert max(comparison.conditioned.bunched_mass) < 1e-15
    assert all(h <= 2.0 + 1e-9 for h in comparison.conditioned.h_mutual)
    assert all(h <= 2.0 + 1e-9 for h in comparison.unconditioned.h_mutual)
    again = conditioned_vs_unconditioned_experiment(4, trials=3, seed=9)
    assert again.conditioned.h_mutual == comparison.conditioned.h_mutual
    assert again.unconditioned.bunched_mass == comparison.unconditioned.bunched_mass


def test_experiment_rejects_bad_na():
    with pytest.raises(UnsupportedConfigurationError):
        conditioned_vs_unconditioned_experiment(3, trials=2, seed=0)
    with pytest.raises(ContractViolationError):
        conditioned_vs_unconditioned_experiment(4, trials=0, seed=0)
