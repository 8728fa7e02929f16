"""Circuit-matrix parametrization, random sampling, and matrix file I/O.

A sub-unitary matrix is built as U = exp(i*Hv) @ diag(exp(-lambda_k^2)) @ exp(i*Hw)
from two Hermitian generators and M real numbers, so an unconstrained real
parameter vector of length 2*M^2 + M always yields a valid circuit. Hermitian
exponentials go through an eigendecomposition, which keeps the factors unitary
to machine precision.

All randomness is driven by numpy's PCG64 generator through explicit seeds;
callers that need several independent streams split them via
``numpy.random.SeedSequence`` spawning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bellopt.errors import (
    ContractViolationError,
    MatrixFileError,
    UnsupportedConfigurationError,
)
from bellopt.transfer import CircuitMatrix

#: Generator recorded in output metadata so runs can be reproduced exactly.
RNG_ALGORITHM = "numpy-pcg64"


@dataclass(frozen=True)
class CircuitParams:
    """Unconstrained real parameters behind one sub-unitary circuit matrix.

    ``v_gen`` and ``w_gen`` hold M^2 reals each (diagonal first, then
    real/imaginary pairs of the upper triangle, row-major); ``lambdas`` holds
    the M singular-value exponents. Total real dimension 2*M^2 + M.
    """

    v_gen: np.ndarray
    w_gen: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v_gen, dtype=np.float64)
        w = np.asarray(self.w_gen, dtype=np.float64)
        lam = np.asarray(self.lambdas, dtype=np.float64)
        m = lam.shape[0] if lam.ndim == 1 else 0
        if lam.ndim != 1 or v.shape != (m * m,) or w.shape != (m * m,):
            raise ContractViolationError(
                f"inconsistent parameter shapes: v {v.shape}, w {w.shape}, lambdas {lam.shape}"
            )
        object.__setattr__(self, "v_gen", v)
        object.__setattr__(self, "w_gen", w)
        object.__setattr__(self, "lambdas", lam)

    @property
    def m(self) -> int:
        return self.lambdas.shape[0]

    @property
    def dim(self) -> int:
        return 2 * self.m * self.m + self.m

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.v_gen, self.w_gen, self.lambdas])

    @classmethod
    def from_vector(cls, vector: np.ndarray, m: int) -> "CircuitParams":
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (2 * m * m + m,):
            raise ContractViolationError(
                f"parameter vector for m={m} must have length {2 * m * m + m}, "
                f"got {vector.shape}"
            )
        mm = m * m
        return cls(vector[:mm], vector[mm : 2 * mm], vector[2 * mm :])


def hermitian_from_storage(storage: np.ndarray, m: int) -> np.ndarray:
    """Hermitian matrix from its real storage; batch axes pass through."""
    storage = np.asarray(storage, dtype=np.float64)
    if storage.shape[-1] != m * m:
        raise ContractViolationError(
            f"storage for m={m} needs {m * m} reals, got {storage.shape[-1]}"
        )
    h = np.zeros(storage.shape[:-1] + (m, m), dtype=np.complex128)
    diag = np.arange(m)
    h[..., diag, diag] = storage[..., :m]
    if m > 1:
        iu, ju = np.triu_indices(m, k=1)
        off = storage[..., m:].reshape(storage.shape[:-1] + (len(iu), 2))
        upper = off[..., 0] + 1j * off[..., 1]
        h[..., iu, ju] = upper
        h[..., ju, iu] = np.conj(upper)
    return h


def storage_from_hermitian(h: np.ndarray) -> np.ndarray:
    """Inverse of :func:`hermitian_from_storage` (single matrix)."""
    h = np.asarray(h, dtype=np.complex128)
    m = h.shape[-1]
    iu, ju = np.triu_indices(m, k=1)
    parts = [np.real(np.diagonal(h, axis1=-2, axis2=-1))]
    off = h[..., iu, ju]
    parts.append(np.stack([off.real, off.imag], axis=-1).reshape(h.shape[:-2] + (-1,)))
    return np.concatenate(parts, axis=-1)


def expm_i_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(i*H) for Hermitian H via eigendecomposition; batch axes supported."""
    eigvals, eigvecs = np.linalg.eigh(h)
    phases = np.exp(1j * eigvals)
    return (eigvecs * phases[..., None, :]) @ np.conj(eigvecs).swapaxes(-1, -2)


def matrix_entries_from_vectors(vectors: np.ndarray, m: int) -> np.ndarray:
    """Circuit matrices for a batch of parameter vectors: (..., 2M^2+M) -> (..., M, M)."""
    vectors = np.asarray(vectors, dtype=np.float64)
    mm = m * m
    if vectors.shape[-1] != 2 * mm + m:
        raise ContractViolationError(
            f"parameter vectors for m={m} must have length {2 * mm + m}, "
            f"got {vectors.shape[-1]}"
        )
    v = expm_i_hermitian(hermitian_from_storage(vectors[..., :mm], m))
    w = expm_i_hermitian(hermitian_from_storage(vectors[..., mm : 2 * mm], m))
    d = np.exp(-vectors[..., 2 * mm :] ** 2)
    return (v * d[..., None, :]) @ w


def params_to_matrix(params: CircuitParams) -> CircuitMatrix:
    """U = exp(i*Hv) @ diag(exp(-lambda^2)) @ exp(i*Hw); sub-unitary by construction."""
    return CircuitMatrix(matrix_entries_from_vectors(params.to_vector(), params.m))


def matrix_distance_to_unitary(u: CircuitMatrix) -> float:
    """Frobenius norm of U^dag U - I; zero exactly when U is an isometry."""
    gram = np.conj(u.entries.T) @ u.entries
    return float(np.linalg.norm(gram - np.eye(u.m)))


def _haar_entries(rng: np.random.Generator, m: int) -> np.ndarray:
    """Haar-distributed unitary block: QR of a complex Gaussian with phase fix."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_random_unitary(m: int, seed) -> CircuitMatrix:
    """Haar-random M x M unitary, deterministic per seed."""
    if m < 1:
        raise ContractViolationError(f"mode count must be >= 1, got {m}")
    return CircuitMatrix(_haar_entries(np.random.default_rng(seed), m))


def conditioned_block_pattern(n_a: int) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
    """Row/column partition (0-based) behind :func:`sample_conditioned_unitary`.

    Three disjoint blocks: one purely ancillary block, one block mixing a
    single ancilla with the first qubit-row pair, one mixing the remaining two
    ancillas with the second qubit-row pair. Disjoint supports make the zero
    pattern and unitarity exact simultaneously.
    """
    if n_a < 4 or n_a % 2 != 0:
        raise UnsupportedConfigurationError(
            f"conditioned construction needs even n_a >= 4, got {n_a}"
        )
    spare = n_a - 3
    rows_a = tuple(range(spare))
    rows_b1 = (spare, n_a, n_a + 1)
    rows_b2 = (spare + 1, spare + 2, n_a + 2, n_a + 3)
    cols_a = tuple(range(spare))
    cols_b1 = (spare, spare + 1, spare + 2)
    cols_b2 = tuple(range(n_a, n_a + 4))
    return ((rows_a, cols_a), (rows_b1, cols_b1), (rows_b2, cols_b2))


def sample_conditioned_unitary(n_a: int, seed) -> CircuitMatrix:
    """Random unitary whose zero pattern passes the per-column no-go conditions.

    Built block-diagonally (up to a fixed row scattering) from three
    independent Haar blocks; the checker in :mod:`bellopt.conditions` is the
    source of truth for the property, this is just one way to realize it.
    """
    blocks = conditioned_block_pattern(n_a)
    rng = np.random.default_rng(seed)
    m = n_a + 4
    entries = np.zeros((m, m), dtype=np.complex128)
    for rows, cols in blocks:
        entries[np.ix_(rows, cols)] = _haar_entries(rng, len(rows))
    return CircuitMatrix(entries)


# ---------------------------------------------------------------------------
# Matrix file format (shared with the CLI)
# ---------------------------------------------------------------------------

def write_matrix_file(path, u: CircuitMatrix) -> None:
    """Write a matrix as JSON {"m": int, "entries": [[re, im], ...]} row-major.

    Floats carry 17 significant digits so parse(write(x)) round-trips exactly.
    """
    flat = u.entries.ravel()
    lines = ["{", f'  "m": {u.m},', '  "entries": [']
    last = len(flat) - 1
    for i, z in enumerate(flat):
        comma = "," if i < last else ""
        lines.append(f"    [{z.real:.17g}, {z.imag:.17g}]{comma}")
    lines.extend(["  ]", "}"])
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_file(path) -> CircuitMatrix:
    """Parse a matrix file written by :func:`write_matrix_file`."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFileError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "m" not in doc or "entries" not in doc:
        raise MatrixFileError(f"{path}: expected an object with fields 'm' and 'entries'")
    m = doc["m"]
    if not isinstance(m, int) or m < 1:
        raise MatrixFileError(f"{path}: field 'm' must be a positive integer, got {m!r}")
    entries = doc["entries"]
    if not isinstance(entries, list) or len(entries) != m * m:
        raise MatrixFileError(
            f"{path}: expected {m * m} entries for m={m}, got "
            f"{len(entries) if isinstance(entries, list) else type(entries).__name__}"
        )
    values = []
    for i, pair in enumerate(entries):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(v, (int, float)) for v in pair)
        ):
            raise MatrixFileError(f"{path}: entry {i} must be a [re, im] pair, got {pair!r}")
        values.append(complex(pair[0], pair[1]))
    return CircuitMatrix(np.array(values, dtype=np.complex128).reshape(m, m))
