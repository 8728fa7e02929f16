"""Fock-state combinatorics: outcome enumeration, photon labelings, bosonic factors.

Conventions fixed here and relied on everywhere else:

* occupation vectors index modes positionally (entry ``k`` is mode ``k + 1``),
* photon labels are 1-based mode numbers, stored sorted non-decreasing
  (the canonical labeling),
* outcome enumeration is lexicographically descending on occupations.

Both orders are arbitrary in principle but must be fixed so that amplitudes
and output files reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from bellopt.errors import ContractViolationError

#: Largest photon count supported by the precomputed factorial table.
MAX_PHOTONS = 16

_FACTORIALS = tuple(math.factorial(k) for k in range(MAX_PHOTONS + 1))


def factorial(n: int) -> int:
    """Exact integer factorial, table-backed for the supported range."""
    if n < 0:
        raise ContractViolationError(f"factorial of negative value {n}")
    return _FACTORIALS[n] if n <= MAX_PHOTONS else math.factorial(n)


@dataclass(frozen=True)
class FockState:
    """Photon occupation numbers, one entry per optical mode."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        if any(n < 0 for n in occ):
            raise ContractViolationError(f"negative occupation in {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def n(self) -> int:
        """Total photon number."""
        return sum(self.occupations)

    @property
    def m(self) -> int:
        """Number of modes."""
        return len(self.occupations)

    def __str__(self) -> str:
        return "(" + ",".join(str(k) for k in self.occupations) + ")"


@dataclass(frozen=True)
class ModeLabeling:
    """Mode location of each photon, sorted non-decreasing (canonical form)."""

    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        if any(x < 1 for x in labels):
            raise ContractViolationError(f"mode labels are 1-based, got {labels}")
        if any(a > b for a, b in zip(labels, labels[1:])):
            raise ContractViolationError(f"labeling not sorted: {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)


def _compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, m - 1):
            yield (first, *rest)


@lru_cache(maxsize=None)
def enumerate_outcomes(n_photons: int, n_modes: int) -> tuple[FockState, ...]:
    """All ways to place ``n_photons`` in ``n_modes``, lexicographically descending.

    The list has binomial(n_photons + n_modes - 1, n_modes - 1) entries and is
    the full photo-counting outcome alphabet for a fixed photon number.
    """
    if n_photons < 0 or n_modes < 1:
        raise ContractViolationError(
            f"need n_photons >= 0 and n_modes >= 1, got ({n_photons}, {n_modes})"
        )
    return tuple(FockState(occ) for occ in _compositions(n_photons, n_modes))


def outcome_count(n_photons: int, n_modes: int) -> int:
    """Size of the outcome alphabet without enumerating it."""
    return math.comb(n_photons + n_modes - 1, n_modes - 1)


def to_labeling(state: FockState) -> ModeLabeling:
    """Canonical (sorted) labeling: which mode each photon sits in, 1-based."""
    labels: list[int] = []
    for k, occ in enumerate(state.occupations):
        labels.extend([k + 1] * occ)
    return ModeLabeling(tuple(labels))


def labeling_to_state(labeling: ModeLabeling, n_modes: int) -> FockState:
    """Occupation histogram of a labeling; inverse of :func:`to_labeling`."""
    occ = [0] * n_modes
    for label in labeling.labels:
        if label > n_modes:
            raise ContractViolationError(f"label {label} exceeds mode count {n_modes}")
        occ[label - 1] += 1
    return FockState(tuple(occ))


def distinct_permutations(labeling: ModeLabeling) -> Iterator[tuple[int, ...]]:
    """Yield every distinct arrangement of the labeling exactly once.

    Ascending lexicographic order, starting from the canonical labeling;
    yields N!/prod(n_k!) arrangements in total.
    """
    a = list(labeling.labels)
    n = len(a)
    if n == 0:
        yield ()
        return
    while True:
        yield tuple(a)
        # Standard next-permutation step; terminates at the descending order.
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = reversed(a[i + 1:])


def distinct_permutation_count(labeling: ModeLabeling) -> int:
    """Multinomial count N!/prod(n_k!) of distinct arrangements."""
    labels = labeling.labels
    count = factorial(len(labels))
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            count //= factorial(i - start)
            start = i
    return count


def bosonic_factor(y: FockState) -> float:
    """Combinatoric bosonic weight (1/2) * prod(n_k!) of an outcome."""
    prod = 1
    for occ in y.occupations:
        prod *= factorial(occ)
    return 0.5 * prod
