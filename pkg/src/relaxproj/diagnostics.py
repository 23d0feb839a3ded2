"""
Numerical checks of the descent and perturbation inequalities, plus oracles.

Each ``*_slack`` function evaluates one inequality at a concrete instance and
returns a :class:`SlackReport` whose ``slack`` is nonnegative exactly when the
inequality holds.  ``sweep`` runs all of them over seeded random instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import optimize

from relaxproj import operator as op
from relaxproj.errors import InputError
from relaxproj.geometry import Ball, Box, HalfSpace, Hyperplane, Simplex, as_point
from relaxproj.operator import as_beta

SLACK_TOL = 1e-10
KAPPA_TOL = 1e-12


@dataclass(frozen=True)
class SlackReport:
    lhs: float
    rhs: float
    slack: float
    vacuous: bool = False
    #: slack of a companion inequality, when one is evaluated alongside
    secondary: Optional[float] = None

    @classmethod
    def of(cls, lhs: float, rhs: float, secondary: Optional[float] = None) -> "SlackReport":
        return cls(lhs=lhs, rhs=rhs, slack=rhs - lhs, secondary=secondary)


def _sqdist(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(diff @ diff)


def _residuals(sets, x) -> np.ndarray:
    """Squared distances ``||x - P_j x||^2`` for every set."""
    return np.array([_sqdist(x, cset.project(x)) for cset in sets])


def _check_lengths(sets, beta) -> None:
    if len(sets) != len(beta):
        raise InputError(f"got {len(sets)} sets for {len(beta)} weights")


def prop1_slack(sets: Sequence, beta, kappa, x, c) -> SlackReport:
    """Descent inequality with arbitrary simplex weights ``kappa``.

    ||Q x - c||^2 <= ||x - c||^2 - sum_j (2 - beta_j/kappa_j) beta_j ||x - P_j x||^2

    ``beta_j / kappa_j`` is 0 when ``beta_j = 0`` and the bound is vacuous
    (``+inf`` slack) when ``beta_j > 0 = kappa_j``.
    """
    beta = as_beta(beta)
    _check_lengths(sets, beta)
    kappa = np.asarray(kappa, dtype=np.float64)
    if kappa.shape != (len(beta),) or np.any(kappa < 0) or abs(kappa.sum() - 1.0) > KAPPA_TOL:
        raise InputError("kappa must be a nonnegative vector of length N summing to 1")
    x, c = as_point(x), as_point(c)
    w = beta.weights
    lhs = _sqdist(op.apply_q(beta, sets, x), c)
    if np.any((w > 0) & (kappa == 0)):
        return SlackReport(lhs=lhs, rhs=math.inf, slack=math.inf, vacuous=True)
    ratio = np.divide(w, kappa, out=np.zeros_like(w), where=w > 0)
    rhs = _sqdist(x, c) - float(np.sum((2.0 - ratio) * w * _residuals(sets, x)))
    return SlackReport.of(lhs, rhs)


def thm1_slack(sets: Sequence, beta, indices: Iterable[int], x, c) -> SlackReport:
    """||Q x - c||^2 <= ||x - c||^2 - min_{i in I} nu_i * max_{i in I} d^2(x, C_i)."""
    beta = as_beta(beta)
    _check_lengths(sets, beta)
    idx = sorted(set(int(i) for i in indices))
    if not idx:
        raise InputError("index set must be nonempty")
    if idx[0] < 0 or idx[-1] >= len(beta):
        raise InputError("index out of range")
    x, c = as_point(x), as_point(c)
    nu = op.coefficients(beta).nu
    d2 = np.array([sets[i].distance(x) ** 2 for i in idx])
    lhs = _sqdist(op.apply_q(beta, sets, x), c)
    rhs = _sqdist(x, c) - float(nu[idx].min()) * float(d2.max())
    return SlackReport.of(lhs, rhs)


def eq3_slack(sets: Sequence, beta, x, c) -> SlackReport:
    """Classical bound with factor ``(2 - s) sum_j beta_j d_j^2``.

    ``secondary`` holds the Prop-1 slack at ``kappa = beta / s``; the two
    evaluate the same expression and must agree to rounding.
    """
    beta = as_beta(beta)
    _check_lengths(sets, beta)
    s = beta.total
    if s <= 0:
        raise InputError("sum(beta) must be positive")
    x, c = as_point(x), as_point(c)
    lhs = _sqdist(op.apply_q(beta, sets, x), c)
    rhs = _sqdist(x, c) - (2.0 - s) * float(beta.weights @ _residuals(sets, x))
    other = prop1_slack(sets, beta, beta.weights / s, x, c)
    return SlackReport.of(lhs, rhs, secondary=other.slack)


def perturb_step_gap(sets: Sequence, beta, beta_tilde, y, c=None) -> SlackReport:
    """||Q_beta y - Q_beta~ y|| <= sum_j |beta_j - beta~_j| d(y, C_j).

    With a point ``c`` of the intersection, ``secondary`` is the slack of the
    weaker bound ``sum_j |beta_j - beta~_j| ||y - c||``.
    """
    beta, beta_tilde = as_beta(beta), as_beta(beta_tilde)
    _check_lengths(sets, beta)
    _check_lengths(sets, beta_tilde)
    y = as_point(y)
    delta = np.abs(beta.weights - beta_tilde.weights)
    gap = float(np.linalg.norm(op.apply_q(beta, sets, y) - op.apply_q(beta_tilde, sets, y)))
    bound = float(delta @ np.array([cset.distance(y) for cset in sets]))
    secondary = None
    if c is not None:
        secondary = float(delta.sum()) * float(np.linalg.norm(y - as_point(c))) - gap
    return SlackReport.of(gap, bound, secondary=secondary)


def firm_nonexpansive_gap(cset, x, y) -> float:
    """``<Px - Py, x - y> - ||Px - Py||^2``; nonnegative for projections."""
    x, y = as_point(x), as_point(y)
    diff = cset.project(x) - cset.project(y)
    return float(diff @ (x - y) - diff @ diff)


def thm1_kappa(beta, i: int) -> np.ndarray:
    """Simplex weights that turn the Prop-1 bound into the single-index bound for ``i``."""
    w = as_beta(beta).weights
    kappa = w / 2.0
    kappa[i] = 1.0 - (w.sum() - w[i]) / 2.0
    return kappa


# ---------------------------------------------------------------------------
# oracles and instances


def _anchor_point(cset, d: int) -> np.ndarray:
    """Some point of the set, used to bound the search region."""
    if isinstance(cset, (HalfSpace, Hyperplane)):
        return cset.b / float(cset.a @ cset.a) * cset.a
    if isinstance(cset, Ball):
        return cset.center.copy()
    if isinstance(cset, Box):
        return cset.lo.copy()
    return np.full(d, 1.0 / d)


def _constraints(cset, d: int):
    """Constraint description for scipy: (list of constraint dicts, bounds)."""
    if isinstance(cset, HalfSpace):
        a, b = cset.a, cset.b
        return [{"type": "ineq", "fun": lambda p: b - a @ p, "jac": lambda p: -a}], None
    if isinstance(cset, Hyperplane):
        a, b = cset.a, cset.b
        return [{"type": "eq", "fun": lambda p: a @ p - b, "jac": lambda p: a}], None
    if isinstance(cset, Ball):
        c, r = cset.center, cset.radius
        return [{"type": "ineq", "fun": lambda p: r * r - (p - c) @ (p - c), "jac": lambda p: -2 * (p - c)}], None
    if isinstance(cset, Box):
        return [], list(zip(cset.lo, cset.hi))
    if isinstance(cset, Simplex):
        ones = np.ones(d)
        return [{"type": "eq", "fun": lambda p: p.sum() - 1.0, "jac": lambda p: ones}], [(0.0, None)] * d
    raise InputError(f"no oracle for {type(cset).__name__}")


def _grid_feasible(cset, pts: np.ndarray) -> np.ndarray:
    if isinstance(cset, HalfSpace):
        return pts @ cset.a <= cset.b
    if isinstance(cset, Ball):
        return np.sum((pts - cset.center) ** 2, axis=1) <= cset.radius**2
    if isinstance(cset, Box):
        return np.all((pts >= cset.lo) & (pts <= cset.hi), axis=1)
    # equality-constrained sets have no interior grid points
    return np.zeros(len(pts), dtype=bool)


def brute_force_project(cset, x, resolution: float = 1e-6, points_per_axis: int = 41) -> np.ndarray:
    """Nearest point found by search, independent of the closed-form projections.

    A grid over the box ``x +/- ||x - q||`` (``q`` any point of the set, so the
    projection lies inside) gives a starting point, which a generic
    constrained minimiser (SLSQP) then polishes to about ``resolution``.
    Limited to dimension <= 3.
    """
    x = as_point(x)
    d = x.size
    if d > 3:
        raise InputError("brute_force_project supports dimension <= 3 only")
    if cset.dim is not None and cset.dim != d:
        raise InputError(f"dimension mismatch: expected {cset.dim}, got {d}")
    if cset.contains(x, 0.0):
        return x.copy()

    q = _anchor_point(cset, d)
    radius = float(np.linalg.norm(x - q))
    axes = [np.linspace(xi - radius, xi + radius, points_per_axis) for xi in x]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    ok = _grid_feasible(cset, pts)
    start = q
    if ok.any():
        cand = pts[ok]
        start = cand[np.argmin(np.sum((cand - x) ** 2, axis=1))]

    cons, bounds = _constraints(cset, d)
    res = optimize.minimize(
        lambda p: float((p - x) @ (p - x)),
        start,
        jac=lambda p: 2.0 * (p - x),
        method="SLSQP",
        constraints=cons,
        bounds=bounds,
        options={"ftol": min(resolution**2, 1e-14), "maxiter": 500},
    )
    return np.asarray(res.x, dtype=np.float64)


def random_feasible_instance(seed: int, d: int, n_sets: int, anchor) -> list:
    """``n_sets`` random sets of mixed types, each containing ``anchor``.

    The simplex is only drawn when ``anchor`` lies on it.
    """
    if d < 1 or n_sets < 1:
        raise InputError("need d >= 1 and N >= 1")
    anchor = as_point(anchor, d)
    rng = np.random.default_rng(seed)
    kinds = ["halfspace", "hyperplane", "ball", "box"]
    if Simplex().contains(anchor):
        kinds.append("simplex")
    sets = []
    for _ in range(n_sets):
        kind = kinds[rng.integers(len(kinds))]
        if kind in ("halfspace", "hyperplane"):
            a = rng.normal(size=d)
            while np.linalg.norm(a) < 1e-3:
                a = rng.normal(size=d)
            b = float(a @ anchor)
            if kind == "halfspace":
                sets.append(HalfSpace(a, b + rng.uniform(0.0, 1.0)))
            else:
                sets.append(Hyperplane(a, b))
        elif kind == "ball":
            center = anchor + rng.normal(size=d)
            radius = float(np.linalg.norm(center - anchor)) * rng.uniform(1.0, 1.5) + 1e-3
            sets.append(Ball(center, radius))
        elif kind == "box":
            sets.append(Box(anchor - rng.uniform(0.0, 1.0, d), anchor + rng.uniform(0.0, 1.0, d)))
        else:
            sets.append(Simplex())
    return sets


# ---------------------------------------------------------------------------
# property sweeps

FAMILIES = (
    "prop1",
    "thm1",
    "eq3",
    "eq3_vs_prop1",
    "perturb",
    "firm_nonexpansive",
    "thm1_substitution",
)


def random_beta(rng: np.random.Generator, n: int) -> np.ndarray:
    """A random element of the admissible weight set, hitting zeros and the s = 2 boundary."""
    w = rng.dirichlet(np.ones(n))
    w[rng.random(n) < 0.25] = 0.0
    if not w.any():
        w[rng.integers(n)] = 1.0
    u = rng.random()
    total = 2.0 if u < 0.1 else (0.0 if u < 0.15 else rng.uniform(0.0, 2.0))
    w = w / w.sum() * total
    # keep the sum within the admissible range after rounding
    if w.sum() > 2.0:
        w *= 2.0 / w.sum()
    return w


def random_kappa(rng: np.random.Generator, beta: np.ndarray) -> np.ndarray:
    n = beta.size
    u = rng.random()
    if u < 0.3 and beta.sum() > 0:
        kappa = beta / beta.sum()
    elif u < 0.5:
        kappa = thm1_kappa(beta, int(rng.integers(n)))
    else:
        kappa = rng.dirichlet(np.ones(n))
        kappa[rng.random(n) < 0.15] = 0.0
        if not kappa.any():
            kappa[rng.integers(n)] = 1.0
    return kappa / kappa.sum()


def _random_point(rng, d, scale=10.0) -> np.ndarray:
    v = rng.normal(size=d)
    return v / max(np.linalg.norm(v), 1e-12) * rng.uniform(0.0, scale)


def sweep(trials: int, seed: int) -> dict[str, float]:
    """Minimum slack per inequality family over ``trials`` random instances.

    ``eq3_vs_prop1`` is ``-|difference|`` between the two equivalent forms.
    NaN anywhere propagates to the family's entry.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = {name: math.inf for name in FAMILIES}

    def record(name, value):
        if math.isnan(value) or math.isnan(worst[name]):
            worst[name] = math.nan
        else:
            worst[name] = min(worst[name], value)

    for _ in range(trials):
        d = int(rng.choice([1, 2, 3, 5]))
        n = int(rng.integers(1, 6))
        if rng.random() < 0.2:
            anchor = rng.dirichlet(np.ones(d))
        else:
            anchor = rng.normal(size=d)
        sets = random_feasible_instance(int(rng.integers(2**31)), d, n, anchor)
        beta = random_beta(rng, n)
        kappa = random_kappa(rng, beta)
        x = anchor + _random_point(rng, d)
        c = anchor

        record("prop1", prop1_slack(sets, beta, kappa, x, c).slack)

        subset = [i for i in range(n) if rng.random() < 0.6] or [int(rng.integers(n))]
        active = sorted(op.active_indices(beta))
        record("thm1", thm1_slack(sets, beta, subset, x, c).slack)
        if active:
            record("thm1", thm1_slack(sets, beta, active, x, c).slack)

        if beta.sum() > 0:
            rep = eq3_slack(sets, beta, x, c)
            record("eq3", rep.slack)
            record("eq3_vs_prop1", -abs(rep.slack - rep.secondary))

        beta_tilde = random_beta(rng, n)
        rep = perturb_step_gap(sets, beta, beta_tilde, x, c)
        record("perturb", min(rep.slack, rep.secondary))

        y = anchor + _random_point(rng, d)
        for cset in sets:
            record("firm_nonexpansive", firm_nonexpansive_gap(cset, x, y))

        for i in active:
            via_prop1 = prop1_slack(sets, beta, thm1_kappa(beta, i), x, c).slack
            single = thm1_slack(sets, beta, [i], x, c).slack
            record("thm1_substitution", single - via_prop1)
    return worst
