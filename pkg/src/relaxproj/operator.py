"""
The averaged relaxed-projection operator and its convergence coefficients.

For weights ``beta`` with ``beta_i >= 0`` and ``sum(beta) <= 2`` the operator is

    Q_beta(x) = x - sum_j beta_j (x - P_j(x))

where ``P_j`` is the projection onto the j-th set.  Any such ``beta`` can be
written as ``lambda_i * alpha_i`` with relaxation parameters ``alpha_i`` in
[0, 2] and averaging weights ``lambda_i`` on the simplex, see ``decompose``.

Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from relaxproj.errors import InputError
from relaxproj.geometry import as_point

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BetaVector:
    """Nonnegative weights summing to at most 2 (validated on construction)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if w.size == 0:
            raise InputError("beta must have at least one component")
        if not np.all(np.isfinite(w)):
            raise InputError("beta has non-finite components")
        if np.any(w < 0):
            raise InputError(f"beta must be nonnegative, got {w.tolist()}")
        if w.sum() > 2.0 + SUM_TOL:
            raise InputError(f"beta violates sum(beta) <= 2: sum = {w.sum():.17g}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size

    def __iter__(self):
        return iter(self.weights.tolist())

    def __getitem__(self, i):
        return self.weights[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BetaVector):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __repr__(self) -> str:
        return f"BetaVector({self.weights.tolist()})"

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def margin(self) -> float:
        """``2 - sum(beta)``, clipped at 0 to absorb rounding at the boundary."""
        return max(2.0 - self.total, 0.0)


def as_beta(beta) -> BetaVector:
    return beta if isinstance(beta, BetaVector) else BetaVector(beta)


@dataclass(frozen=True)
class AlphaLambda:
    alphas: np.ndarray
    lambdas: np.ndarray


@dataclass(frozen=True)
class CoefficientRow:
    """``s = sum(beta)``, per-index ``nu`` (sharp) and ``mu`` (classical) coefficients."""

    s: float
    nu: np.ndarray
    mu: np.ndarray


def apply_q(beta, sets: Sequence, x) -> np.ndarray:
    """Evaluate ``x - sum_j beta_j (x - P_j x)``."""
    beta = as_beta(beta)
    if len(sets) != len(beta):
        raise InputError(f"got {len(sets)} sets for {len(beta)} weights")
    x = as_point(x)
    step = np.zeros_like(x)
    for b, cset in zip(beta.weights, sets):
        if b > 0:
            step += b * (x - cset.project(x))
        else:
            # still validates dimensions
            cset._check(x)
    return x - step


def coefficients(beta) -> CoefficientRow:
    """Coefficients entering the per-step descent bound.

    nu_i = 2 beta_i (2 - s) / (beta_i + 2 - s), defined as 0 when beta_i = 0,
    and mu_i = 2 beta_i (2 - s).
    """
    beta = as_beta(beta)
    w = beta.weights
    margin = beta.margin
    mu = 2.0 * w * margin
    denom = w + margin
    nu = np.zeros_like(w)
    active = w > 0
    nu[active] = mu[active] / denom[active]
    return CoefficientRow(s=beta.total, nu=nu, mu=mu)


def active_indices(beta) -> frozenset[int]:
    beta = as_beta(beta)
    return frozenset(int(i) for i in np.flatnonzero(beta.weights > 0))


def decompose(beta) -> AlphaLambda:
    """Split ``beta`` into relaxation parameters and averaging weights."""
    beta = as_beta(beta)
    n = len(beta)
    s = beta.total
    if s > 0:
        return AlphaLambda(alphas=np.full(n, s), lambdas=beta.weights / s)
    return AlphaLambda(alphas=np.zeros(n), lambdas=np.full(n, 1.0 / n))


def recombine(al: AlphaLambda) -> BetaVector:
    return BetaVector(np.asarray(al.alphas) * np.asarray(al.lambdas))


def min_over(values: np.ndarray, indices: Iterable[int]) -> float:
    """Minimum of ``values`` over ``indices``; ``inf`` for an empty index set."""
    idx = list(indices)
    if not idx:
        return float("inf")
    return float(np.min(values[idx]))
