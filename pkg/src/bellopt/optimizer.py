"""Quasi-Newton maximization of Bell-analyzer mutual information.

The objective minimized is the garbage-corrected conditional information of
the four-way Bell ensemble under the circuit induced by an unconstrained
parameter vector; maximized mutual information is 2 minus its minimum.
Descent is BFGS with Armijo backtracking, gradients come from central finite
differences evaluated as one batched pass through the amplitude cascade, and
global search is seeded multi-start with a deterministic reduction.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from bellopt.errors import ContractViolationError
from bellopt.fock import outcome_count
from bellopt.infometrics import H_X_BITS, InfoReport, conditional_bits, mutual_information
from bellopt.transfer import CircuitMatrix, bell_probability_parts, outcome_table
from bellopt.unitary import CircuitParams, matrix_entries_from_vectors, params_to_matrix

#: Cap on batch-buffer size (elements) when evaluating many parameter vectors.
_BATCH_ELEMENT_BUDGET = 4_000_000

#: Armijo sufficient-decrease coefficient and backtracking shrink factor.
_ARMIJO_C1 = 1e-4
_BACKTRACK_SHRINK = 0.5
_MAX_BACKTRACKS = 50


@dataclass
class OptimizerConfig:
    """Knobs for one multi-start optimization run."""

    n_a: int
    restarts: int = 20
    max_iterations: int = 2000
    gradient_step: float = 1e-6
    convergence_tol: float = 1e-5
    init_scale: float = 0.5
    seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.n_a < 0:
            raise ContractViolationError(f"ancilla count must be >= 0, got {self.n_a}")
        if self.restarts < 1:
            raise ContractViolationError(f"restarts must be >= 1, got {self.restarts}")
        if not 1e-9 < self.gradient_step < 1e-3:
            raise ContractViolationError(
                f"gradient_step must lie in (1e-9, 1e-3), got {self.gradient_step}"
            )
        if self.convergence_tol <= 0:
            raise ContractViolationError(
                f"convergence_tol must be positive, got {self.convergence_tol}"
            )
        if self.max_iterations < 1:
            raise ContractViolationError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if self.parallelism < 1:
            raise ContractViolationError(f"parallelism must be >= 1, got {self.parallelism}")

    @property
    def m(self) -> int:
        return self.n_a + 4


@dataclass
class RestartRecord:
    """Outcome of one seeded descent."""

    restart: int
    h_mutual: float
    iterations: int
    converged: bool
    grad_norm: float
    objective_trace: list[float] = field(default_factory=list, repr=False)


@dataclass
class OptimizationResult:
    best_params: CircuitParams
    best_matrix: CircuitMatrix
    report: InfoReport
    per_restart: list[RestartRecord]
    wall_time: float

    @property
    def best_restart(self) -> RestartRecord:
        best = min(self.per_restart, key=lambda r: (-r.h_mutual, r.restart))
        return best


def _objective_vectors(vectors: np.ndarray, n_a: int) -> np.ndarray:
    """Garbage-corrected conditional information for a batch of parameter vectors."""
    vectors = np.asarray(vectors, dtype=np.float64)
    squeeze = vectors.ndim == 1
    if squeeze:
        vectors = vectors[None, :]
    m = n_a + 4
    k = outcome_count(n_a + 2, m)
    chunk = max(1, _BATCH_ELEMENT_BUDGET // max(k, 1))
    out = np.empty(vectors.shape[0])
    for start in range(0, vectors.shape[0], chunk):
        block = vectors[start : start + chunk]
        u = matrix_entries_from_vectors(block, m)
        # Batch-major parts layout; conditional_bits reads the transposed views.
        p, garbage = bell_probability_parts(u, n_a)
        out[start : start + chunk] = conditional_bits(p.transpose(2, 1, 0), garbage.T)
    return out[0] if squeeze else out


def objective(params: CircuitParams, n_a: int) -> float:
    """Garbage-corrected conditional information of the analyzer at ``params``."""
    if params.m != n_a + 4:
        raise ContractViolationError(
            f"params describe {params.m} modes but n_a={n_a} needs {n_a + 4}"
        )
    return float(_objective_vectors(params.to_vector(), n_a))


def _gradient_vector(x: np.ndarray, n_a: int, step: float) -> np.ndarray:
    dim = x.shape[0]
    points = np.repeat(x[None, :], 2 * dim, axis=0)
    idx = np.arange(dim)
    points[idx, idx] += step
    points[dim + idx, idx] -= step
    values = _objective_vectors(points, n_a)
    return (values[:dim] - values[dim:]) / (2.0 * step)


def gradient(params: CircuitParams, n_a: int, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of :func:`objective`, one value per parameter."""
    if params.m != n_a + 4:
        raise ContractViolationError(
            f"params describe {params.m} modes but n_a={n_a} needs {n_a + 4}"
        )
    return _gradient_vector(params.to_vector(), n_a, step)


def _bfgs_descent(
    x0: np.ndarray,
    n_a: int,
    max_iterations: int,
    gradient_step: float,
    convergence_tol: float,
) -> tuple[np.ndarray, float, float, int, bool, list[float]]:
    """Minimize the objective from x0; returns (x, f, |g|, iters, converged, trace)."""
    x = np.array(x0, dtype=np.float64)
    f = float(_objective_vectors(x, n_a))
    g = _gradient_vector(x, n_a, gradient_step)
    trace = [f]
    dim = x.shape[0]
    identity = np.eye(dim)
    h_inv = identity.copy()
    first_update = True
    iterations = 0
    converged = False

    def backtrack(direction: np.ndarray, slope: float) -> tuple[float, float] | None:
        step_size = 1.0
        for _ in range(_MAX_BACKTRACKS):
            f_try = float(_objective_vectors(x + step_size * direction, n_a))
            if f_try <= f + _ARMIJO_C1 * step_size * slope:
                return step_size, f_try
            step_size *= _BACKTRACK_SHRINK
        return None

    for _ in range(max_iterations):
        g_norm = float(np.linalg.norm(g))
        if g_norm < convergence_tol:
            converged = True
            break
        direction = -h_inv @ g
        slope = float(g @ direction)
        steepest = False
        if slope >= 0.0:
            # Curvature information went bad; fall back to steepest descent.
            h_inv = identity.copy()
            first_update = True
            direction = -g
            slope = -g_norm**2
            steepest = True

        accepted = backtrack(direction, slope)
        if accepted is None and not steepest:
            # A poorly scaled quasi-Newton direction gets one retry along -g.
            h_inv = identity.copy()
            first_update = True
            direction = -g
            slope = -g_norm**2
            accepted = backtrack(direction, slope)
        if accepted is None:
            # No representable decrease: objective is at its numerical floor.
            break
        step_size, f_new = accepted

        x_new = x + step_size * direction
        g_new = _gradient_vector(x_new, n_a, gradient_step)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y) + 1e-300):
            if first_update:
                h_inv = (sy / float(y @ y)) * identity
                first_update = False
            rho = 1.0 / sy
            left = identity - rho * np.outer(s, y)
            h_inv = left @ h_inv @ left.T + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        iterations += 1
        trace.append(f)

    return x, f, float(np.linalg.norm(g)), iterations, converged, trace


def initial_vector(n_a: int, init_scale: float, rng: np.random.Generator) -> np.ndarray:
    """Random start: generator entries uniform in [-scale, scale], lambdas zero."""
    m = n_a + 4
    mm = m * m
    vec = np.zeros(2 * mm + m)
    vec[: 2 * mm] = rng.uniform(-init_scale, init_scale, 2 * mm)
    return vec


def _run_restart(task) -> tuple[int, RestartRecord, np.ndarray]:
    (index, n_a, seed, restarts, max_iterations, gradient_step, convergence_tol,
     init_scale) = task
    child = np.random.SeedSequence(seed).spawn(restarts)[index]
    rng = np.random.default_rng(child)
    x0 = initial_vector(n_a, init_scale, rng)
    x, f, g_norm, iterations, converged, trace = _bfgs_descent(
        x0, n_a, max_iterations, gradient_step, convergence_tol
    )
    record = RestartRecord(
        restart=index,
        h_mutual=H_X_BITS - f,
        iterations=iterations,
        converged=converged,
        grad_norm=g_norm,
        objective_trace=trace,
    )
    return index, record, x


def optimize(cfg: OptimizerConfig, progress=None) -> OptimizationResult:
    """Multi-start quasi-Newton run; returns the best analyzer found.

    Restart i draws its start from the i-th spawn of SeedSequence(cfg.seed),
    so results do not depend on the level of parallelism, and ties between
    restarts break toward the lowest index. ``progress``, if given, is called
    with (record, done_count, total) as restarts finish.
    """
    t0 = time.perf_counter()
    tasks = [
        (
            i,
            cfg.n_a,
            cfg.seed,
            cfg.restarts,
            cfg.max_iterations,
            cfg.gradient_step,
            cfg.convergence_tol,
            cfg.init_scale,
        )
        for i in range(cfg.restarts)
    ]
    records: list[RestartRecord | None] = [None] * cfg.restarts
    vectors: list[np.ndarray | None] = [None] * cfg.restarts

    if cfg.parallelism > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.parallelism, cfg.restarts)) as pool:
            done = 0
            for index, record, x in pool.map(_run_restart, tasks):
                records[index] = record
                vectors[index] = x
                done += 1
                if progress is not None:
                    progress(record, done, cfg.restarts)
    else:
        for done, task in enumerate(tasks, start=1):
            index, record, x = _run_restart(task)
            records[index] = record
            vectors[index] = x
            if progress is not None:
                progress(record, done, cfg.restarts)

    best_index = min(range(cfg.restarts), key=lambda i: (-records[i].h_mutual, i))
    best_params = CircuitParams.from_vector(vectors[best_index], cfg.m)
    best_matrix = params_to_matrix(best_params)
    report = mutual_information(outcome_table(best_matrix, cfg.n_a))
    return OptimizationResult(
        best_params=best_params,
        best_matrix=best_matrix,
        report=report,
        per_restart=records,  # type: ignore[arg-type]
        wall_time=time.perf_counter() - t0,
    )
