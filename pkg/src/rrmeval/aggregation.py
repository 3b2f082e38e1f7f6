"""Aggregation operators: 2-additive Choquet integral over criteria, OWA over samples.

Capacities are stored in Möbius form. For a 2-additive capacity only the
singleton coefficients ``m_i`` and the pair coefficients ``m_ij`` are nonzero, and

    mu(S) = sum_{i in S} m_i + sum_{{i,j} subset of S} m_ij
    C(x)  = sum_i m_i x_i + sum_{i<j} m_ij min(x_i, x_j)

``choquet_general`` is the classical sort-based integral over an explicit set
function and serves as the brute-force reference for ``choquet_2add``.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rrmeval.errors import InvalidInputError, Violation

TOL = 1e-9
MAX_SET_FUNCTION_N = 20


@dataclass(frozen=True)
class MobiusCapacity2Add:
    """2-additive capacity in Möbius form.

    ``pairs`` maps ``(i, j)`` with ``i < j`` (0-based child positions) to ``m_ij``;
    missing pairs are zero.
    """

    singletons: tuple[float, ...]
    pairs: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "singletons", tuple(float(v) for v in self.singletons))
        n = len(self.singletons)
        if n < 1:
            raise InvalidInputError("capacity needs at least one criterion")
        clean: dict[tuple[int, int], float] = {}
        for (i, j), v in dict(self.pairs).items():
            i, j = int(i), int(j)
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise InvalidInputError(f"bad pair index ({i}, {j}) for n={n}")
            key = (min(i, j), max(i, j))
            clean[key] = clean.get(key, 0.0) + float(v)
        object.__setattr__(self, "pairs", dict(sorted(clean.items())))

    @property
    def n(self) -> int:
        return len(self.singletons)

    @classmethod
    def additive(cls, weights: Sequence[float]) -> MobiusCapacity2Add:
        return cls(tuple(weights), {})

    @classmethod
    def uniform(cls, n: int) -> MobiusCapacity2Add:
        return cls.additive([1.0 / n] * n)

    @classmethod
    def from_matrix(cls, singletons: Sequence[float], matrix) -> MobiusCapacity2Add:
        """Build from a symmetric ``n x n`` interaction matrix (upper triangle is read)."""
        mat = np.asarray(matrix, dtype=float)
        n = len(singletons)
        pairs = {(i, j): float(mat[i, j]) for i in range(n) for j in range(i + 1, n) if mat[i, j] != 0.0}
        return cls(tuple(singletons), pairs)

    def singleton_array(self) -> np.ndarray:
        return np.asarray(self.singletons, dtype=float)

    def pair_matrix(self) -> np.ndarray:
        """Symmetric matrix of ``m_ij`` with a zero diagonal."""
        mat = np.zeros((self.n, self.n))
        for (i, j), v in self.pairs.items():
            mat[i, j] = mat[j, i] = v
        return mat


def validate_capacity(c: MobiusCapacity2Add, tol: float = TOL) -> list[Violation]:
    """Check normalization and per-criterion monotonicity.

    For a 2-additive capacity, monotonicity of the set function is equivalent to
    ``m_i + sum_{j != i} min(0, m_ij) >= 0`` for every ``i``.
    """
    violations = []
    m = c.singleton_array()
    mat = c.pair_matrix()
    total = float(m.sum() + np.triu(mat, 1).sum())
    if abs(total - 1.0) > tol:
        violations.append(Violation(
            "normalization", "capacity",
            f"Möbius coefficients sum to {total:.12g}, expected 1", total - 1.0,
        ))
    worst = m + np.minimum(mat, 0.0).sum(axis=1)
    for i, margin in enumerate(worst):
        if margin < -tol:
            violations.append(Violation(
                "monotonicity", f"criterion {i}",
                f"m_{i} + sum of negative interactions = {margin:.12g} < 0", float(margin),
            ))
    return violations


def _as_scores(x, n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise InvalidInputError(f"expected {n} scores, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("scores must be finite")
    return arr


def choquet_2add(c: MobiusCapacity2Add, x, check: bool = True, tol: float = TOL) -> float:
    """Choquet integral of ``x`` with respect to the 2-additive capacity ``c``."""
    arr = _as_scores(x, c.n)
    if check:
        problems = validate_capacity(c, tol)
        if problems:
            raise InvalidInputError("invalid capacity: " + "; ".join(map(str, problems)))
    total = float(np.dot(c.singleton_array(), arr))
    for (i, j), v in c.pairs.items():
        total += v * min(arr[i], arr[j])
    return total


def interaction_indices(c: MobiusCapacity2Add) -> np.ndarray:
    """Pairwise interaction indices. For a 2-additive capacity they equal ``m_ij``."""
    return c.pair_matrix()


def shapley(c: MobiusCapacity2Add) -> np.ndarray:
    """Shapley importance: ``phi_i = m_i + 1/2 sum_{j != i} m_ij``."""
    return c.singleton_array() + 0.5 * c.pair_matrix().sum(axis=1)


def _subset_bits(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(float)


def capacity_from_mobius(c: MobiusCapacity2Add, max_n: int = MAX_SET_FUNCTION_N) -> np.ndarray:
    """Tabulate the induced set function.

    Returns an array of length ``2**n`` where index ``mask`` holds ``mu(S)`` for the
    subset whose members are the set bits of ``mask`` (bit ``i`` = criterion ``i``).
    """
    if c.n > max_n:
        raise InvalidInputError(f"n={c.n} too large for a set-function table (max {max_n})")
    bits = _subset_bits(c.n)
    mat = c.pair_matrix()
    return bits @ c.singleton_array() + 0.5 * np.einsum("si,ij,sj->s", bits, mat, bits)


def is_monotone(mu: np.ndarray, tol: float = TOL) -> bool:
    mu = np.asarray(mu, dtype=float)
    n = int(mu.shape[0]).bit_length() - 1
    masks = np.arange(mu.shape[0])
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        if np.any(mu[without | (1 << i)] < mu[without] - tol):
            return False
    return True


def choquet_general(mu, x, tol: float = TOL) -> float:
    """Sort-based Choquet integral over an explicit set function ``mu``.

    ``mu`` is indexed by bitmask as returned by :func:`capacity_from_mobius`.
    A non-monotone ``mu`` triggers a ``RuntimeWarning`` but is still integrated.
    """
    mu = np.asarray(mu, dtype=float)
    size = mu.shape[0]
    n = size.bit_length() - 1
    if size != 1 << n or n < 1:
        raise InvalidInputError("set function length must be 2**n with n >= 1")
    arr = _as_scores(x, n)
    if abs(mu[0]) > tol or abs(mu[-1] - 1.0) > tol:
        raise InvalidInputError("set function must satisfy mu(empty)=0 and mu(N)=1")
    if not is_monotone(mu, tol):
        warnings.warn("set function is not monotone", RuntimeWarning, stacklevel=2)
    order = np.argsort(arr, kind="stable")
    survivors = (1 << n) - 1
    total, previous = 0.0, 0.0
    for idx in order:
        total += (arr[idx] - previous) * mu[survivors]
        previous = arr[idx]
        survivors &= ~(1 << int(idx))
    return float(total)


# --- OWA -------------------------------------------------------------------------


def check_owa_weights(w, tol: float = TOL) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("OWA weights must be a nonempty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < -tol):
        raise InvalidInputError("OWA weights must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > tol:
        raise InvalidInputError(f"OWA weights sum to {arr.sum():.12g}, expected 1")
    return arr


def owa(w, samples, tol: float = TOL) -> float:
    """Ordered weighted average; ``w[0]`` applies to the smallest sample."""
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise InvalidInputError("OWA of an empty sample set")
    weights = check_owa_weights(w, tol)
    if weights.size != values.size:
        raise InvalidInputError(f"{weights.size} weights for {values.size} samples")
    return float(np.dot(weights, np.sort(values, kind="stable")))


def pessimistic_quantifier(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """``Q(p) = 1 - (1 - p)**alpha``; alpha = 1 is neutral, larger is more pessimistic."""
    if not np.isfinite(alpha) or alpha < 1.0:
        raise InvalidInputError(f"alpha must be >= 1, got {alpha}")

    def q(p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        return 1.0 - (1.0 - p) ** alpha

    return q


def weights_from_quantifier(q: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    if n < 1:
        raise InvalidInputError("need at least one weight")
    cum = q(np.arange(n + 1) / n)
    w = np.diff(cum)
    return w / cum[-1]


def owa_weights_from_quantifier(alpha: float, n: int) -> np.ndarray:
    """Weights ``w_k = Q(k/n) - Q((k-1)/n)``, nonincreasing for ``alpha >= 1``."""
    return weights_from_quantifier(pessimistic_quantifier(alpha), n)


def quantifier_from_weights(w) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear quantifier through the cumulative sums of a raw weight vector.

    Lets a fixed-length weight vector drive sample sets of any size; for a sample
    set of the same length the original weights are recovered exactly.
    """
    weights = check_owa_weights(w)
    knots = np.linspace(0.0, 1.0, weights.size + 1)
    cum = np.concatenate([[0.0], np.cumsum(weights)])
    cum[-1] = 1.0

    def q(p):
        return np.interp(np.clip(np.asarray(p, dtype=float), 0.0, 1.0), knots, cum)

    return q
