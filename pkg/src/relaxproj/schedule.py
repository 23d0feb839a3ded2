"""
Weight schedules ``n -> (beta^(n), J^(n))`` and the series built from them.

A schedule emits, for every iteration ``n >= 1``, a weight vector in the
admissible set and a control set ``J^(n)``, a subset of the active indices
``{i : beta_i^(n) > 0}``.  Without an explicit rule the control set is the
whole active set.

Block windows are ``{n : n_{k-1} < n <= n_k}`` with ``n_0 = 0``; the same
windows are used for coverage and for block minima.

The three ``Paper*`` schedules are the worked examples from the literature on
weighted relaxed projections.  Iterations before a schedule's first admissible
index emit the zero vector (an identity step with empty active set).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from relaxproj.errors import InputError
from relaxproj.operator import BetaVector, active_indices, as_beta, coefficients


class Schedule:
    """Base class; subclasses implement ``_beta`` and optionally ``_rule``."""

    kind = "abstract"
    #: closed-form knowledge about infinite series, e.g. {"cum_nu": "diverges"}
    analytic: dict[str, str] = {}

    def __init__(self, n_sets: int):
        if n_sets < 1:
            raise InputError("a schedule needs at least one set")
        self.n_sets = int(n_sets)

    @property
    def horizon(self) -> Optional[int]:
        """Last iteration index the schedule can produce, ``None`` if unbounded."""
        return None

    @property
    def has_j_rule(self) -> bool:
        return False

    def _check_n(self, n: int) -> int:
        n = int(n)
        if n < 1:
            raise InputError(f"iteration index must be >= 1, got {n}")
        if self.horizon is not None and n > self.horizon:
            raise InputError(f"iteration {n} is past the schedule horizon {self.horizon}")
        return n

    def _beta(self, n: int) -> BetaVector:  # pragma: no cover - abstract
        raise NotImplementedError

    def _rule(self, n: int) -> Optional[frozenset[int]]:
        return None

    def beta_at(self, n: int) -> BetaVector:
        return self._beta(self._check_n(n))

    def j_at(self, n: int) -> frozenset[int]:
        n = self._check_n(n)
        active = active_indices(self._beta(n))
        rule = self._rule(n)
        if rule is None:
            return active
        return frozenset(rule) & active

    def to_json(self) -> dict:
        return {"kind": self.kind}


class ConstantSchedule(Schedule):
    kind = "constant"

    def __init__(self, beta, j: Optional[Sequence[int]] = None):
        self.beta = as_beta(beta)
        super().__init__(len(self.beta))
        self.j = None if j is None else _index_set(j, self.n_sets)

    @property
    def has_j_rule(self) -> bool:
        return self.j is not None

    def _beta(self, n):
        return self.beta

    def _rule(self, n):
        return self.j

    def to_json(self):
        out = {"kind": self.kind, "beta": self.beta.weights.tolist()}
        if self.j is not None:
            out["j"] = sorted(self.j)
        return out


class CyclicSchedule(Schedule):
    """One set per iteration, in order, with a fixed relaxation weight."""

    kind = "cyclic"

    def __init__(self, n_sets: int, weight: float = 1.0):
        super().__init__(n_sets)
        weight = float(weight)
        if not 0 < weight <= 2:
            raise InputError(f"cyclic weight must lie in (0, 2], got {weight}")
        self.weight = weight

    def _beta(self, n):
        w = np.zeros(self.n_sets)
        w[(n - 1) % self.n_sets] = self.weight
        return BetaVector(w)

    def to_json(self):
        return {"kind": self.kind, "weight": self.weight, "n": self.n_sets}


class TabulatedSchedule(Schedule):
    """Explicit finite table of rows ``(beta, J or None)``; row 0 is iteration 1."""

    kind = "tabulated"

    def __init__(self, betas: Sequence, js: Optional[Sequence[Optional[Sequence[int]]]] = None):
        if len(betas) == 0:
            raise InputError("tabulated schedule needs at least one row")
        rows = [as_beta(b) for b in betas]
        super().__init__(len(rows[0]))
        for k, b in enumerate(rows):
            if len(b) != self.n_sets:
                raise InputError(f"rows[{k}].beta: expected {self.n_sets} weights, got {len(b)}")
        if js is None:
            js = [None] * len(rows)
        if len(js) != len(rows):
            raise InputError("tabulated schedule: beta and j tables differ in length")
        self.rows = rows
        self.js = [None if j is None else _index_set(j, self.n_sets) for j in js]

    @classmethod
    def from_schedule(cls, sched: Schedule, horizon: int) -> "TabulatedSchedule":
        betas = [sched.beta_at(n) for n in range(1, horizon + 1)]
        js = [sched.j_at(n) for n in range(1, horizon + 1)] if sched.has_j_rule else None
        return cls(betas, js)

    @property
    def horizon(self) -> int:
        return len(self.rows)

    @property
    def has_j_rule(self) -> bool:
        return any(j is not None for j in self.js)

    def _beta(self, n):
        return self.rows[n - 1]

    def _rule(self, n):
        return self.js[n - 1]

    def to_json(self):
        rows = []
        for b, j in zip(self.rows, self.js):
            row: dict[str, Any] = {"beta": b.weights.tolist()}
            if j is not None:
                row["j"] = sorted(j)
            rows.append(row)
        return {"kind": self.kind, "rows": rows}


class PaperN2(Schedule):
    """``beta^(n) = (1/n, 2 - 2/n)``: the nu-series diverges while the mu-series converges."""

    kind = "paper_n2"
    analytic = {"cum_nu": "diverges", "cum_mu": "converges"}

    def __init__(self):
        super().__init__(2)

    def _beta(self, n):
        return BetaVector([1.0 / n, 2.0 - 2.0 / n])


class PaperPerturb3(Schedule):
    """Three sets, alternating small coefficients; controlled through ``J`` only.

    ``beta^(2m) = (1/m^2, 1/m, 2 - 2/m)`` with ``J = {1, 2}`` and
    ``beta^(2m+1) = (1/m, 1/m^2, 2 - 2/m)`` with ``J = {0, 2}``, for ``m >= 1``.
    """

    kind = "paper_perturb3"
    first_index = 2
    analytic = {"off_control_tail": "converges", "sum_nu_j_blocks": "diverges"}

    def __init__(self):
        super().__init__(3)

    @property
    def has_j_rule(self) -> bool:
        return True

    def _beta(self, n):
        if n < self.first_index:
            return BetaVector(np.zeros(3))
        m = n // 2
        if n % 2 == 0:
            return BetaVector([1.0 / m**2, 1.0 / m, 2.0 - 2.0 / m])
        return BetaVector([1.0 / m, 1.0 / m**2, 2.0 - 2.0 / m])

    def _rule(self, n):
        if n < self.first_index:
            return frozenset()
        return frozenset({1, 2}) if n % 2 == 0 else frozenset({0, 2})


class PaperIntermittent3(Schedule):
    """Period-3 schedule with one unit coefficient per step, starting at ``m = 2``.

    ``beta^(3m) = (1, 1/m, 1/m^2)``, ``beta^(3m+1) = (1/m, 1, 1/m^2)``,
    ``beta^(3m+2) = (1/m^2, 1/m, 1)``; the control set is the index carrying
    the unit coefficient.  At ``m = 1`` the weights sum to 3, so the schedule
    starts at ``n = 6`` where the sums are at most 1.75.
    """

    kind = "paper_intermittent3"
    first_m = 2
    analytic = {"sum_beta_j_blocks": "diverges"}

    def __init__(self):
        super().__init__(3)

    @property
    def has_j_rule(self) -> bool:
        return True

    def _beta(self, n):
        m, r = divmod(n, 3)
        if m < self.first_m:
            return BetaVector(np.zeros(3))
        small, tiny = 1.0 / m, 1.0 / m**2
        if r == 0:
            return BetaVector([1.0, small, tiny])
        if r == 1:
            return BetaVector([small, 1.0, tiny])
        return BetaVector([tiny, small, 1.0])

    def _rule(self, n):
        if n // 3 < self.first_m:
            return frozenset()
        return frozenset({n % 3})


class RestrictedSchedule(Schedule):
    """Zero every coefficient outside the control set of the wrapped schedule."""

    kind = "restricted"

    def __init__(self, inner: Schedule):
        super().__init__(inner.n_sets)
        self.inner = inner

    @property
    def horizon(self):
        return self.inner.horizon

    @property
    def has_j_rule(self) -> bool:
        return self.inner.has_j_rule

    def _beta(self, n):
        beta = self.inner.beta_at(n)
        keep = np.zeros(self.n_sets, dtype=bool)
        keep[list(self.inner.j_at(n))] = True
        return BetaVector(np.where(keep, beta.weights, 0.0))

    def _rule(self, n):
        return self.inner.j_at(n)

    def to_json(self):
        return {"kind": self.kind, "inner": self.inner.to_json()}


BUILTIN_KINDS = {
    PaperN2.kind: PaperN2,
    PaperPerturb3.kind: PaperPerturb3,
    PaperIntermittent3.kind: PaperIntermittent3,
}


def _index_set(j, n_sets: int) -> frozenset[int]:
    out = frozenset(int(i) for i in j)
    bad = [i for i in out if not 0 <= i < n_sets]
    if bad:
        raise InputError(f"control indices {sorted(bad)} out of range for {n_sets} sets")
    return out


def beta_at(sched: Schedule, n: int) -> BetaVector:
    return sched.beta_at(n)


def j_at(sched: Schedule, n: int) -> frozenset[int]:
    return sched.j_at(n)


def schedule_from_json(obj: dict, n_sets: Optional[int] = None, path: str = "schedule") -> Schedule:
    """Decode a schedule; ``n_sets`` supplies N for kinds that do not carry it."""
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected an object")
    kind = obj.get("kind")
    try:
        if kind in BUILTIN_KINDS:
            sched = BUILTIN_KINDS[kind]()
        elif kind == "constant":
            sched = ConstantSchedule(obj["beta"], obj.get("j"))
        elif kind == "cyclic":
            n = obj.get("n", n_sets)
            if n is None:
                raise InputError("cyclic schedule needs 'n' or a set list to size it")
            sched = CyclicSchedule(int(n), obj.get("weight", 1.0))
        elif kind == "tabulated":
            rows = obj["rows"]
            if not isinstance(rows, list):
                raise InputError("rows must be a list")
            betas, js = [], []
            for k, row in enumerate(rows):
                try:
                    betas.append(BetaVector(row["beta"]))
                except KeyError:
                    raise InputError(f"rows[{k}]: missing field 'beta'") from None
                except InputError as exc:
                    raise InputError(f"rows[{k}].beta: {exc}") from None
                js.append(row.get("j"))
            sched = TabulatedSchedule(betas, js)
        else:
            raise InputError(f"kind: unknown schedule kind {kind!r}")
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if n_sets is not None and sched.n_sets != n_sets:
        raise InputError(f"{path}: schedule has N={sched.n_sets} but {n_sets} sets were given")
    return sched


# ---------------------------------------------------------------------------
# blocks and series


@dataclass(frozen=True)
class BlockPartition:
    """Block ends ``n_1 < n_2 < ...``; block k is ``{n : n_{k-1} < n <= n_k}``."""

    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(v) for v in self.boundaries)
        if any(v < 1 for v in b) or any(x >= y for x, y in zip(b, b[1:])):
            raise InputError("block boundaries must be positive and strictly increasing")
        object.__setattr__(self, "boundaries", b)

    def __len__(self) -> int:
        return len(self.boundaries)

    def windows(self):
        start = 0
        for end in self.boundaries:
            yield range(start + 1, end + 1)
            start = end

    @classmethod
    def fixed(cls, p: int, horizon: int) -> "BlockPartition":
        """Blocks of length ``p``: ``n_k = k p`` up to ``horizon``."""
        return cls(tuple(range(p, horizon + 1, p)))

    def covers(self, sched: Schedule) -> bool:
        full = set(range(sched.n_sets))
        return all(set().union(*(sched.j_at(n) for n in w)) >= full for w in self.windows())


def greedy_blocks(sched: Schedule, horizon: int) -> BlockPartition:
    """Shortest consecutive windows whose control sets cover every index.

    A trailing window that does not cover is dropped; an empty partition
    means no window within ``horizon`` covers all indices.
    """
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    if sched.horizon is not None:
        horizon = min(horizon, sched.horizon)
    full = frozenset(range(sched.n_sets))
    seen: set[int] = set()
    ends = []
    for n in range(1, horizon + 1):
        seen |= sched.j_at(n)
        if seen >= full:
            ends.append(n)
            seen = set()
    return BlockPartition(tuple(ends))


@dataclass
class SeriesTrace:
    """Per-iteration quantities over ``n = 1..horizon`` (index 0 is iteration 1)."""

    s: np.ndarray
    nu_min_active: np.ndarray
    mu_min_active: np.ndarray
    off_control: np.ndarray

    @property
    def cum_nu(self) -> np.ndarray:
        return np.cumsum(self.nu_min_active)

    @property
    def cum_mu(self) -> np.ndarray:
        return np.cumsum(self.mu_min_active)

    @property
    def off_control_tail(self) -> np.ndarray:
        return np.cumsum(self.off_control)


def series_trace(sched: Schedule, horizon: int) -> SeriesTrace:
    """Tabulate ``s``, the active-set minima of nu and mu, and off-control mass per step.

    Steps with an empty active set contribute 0 to the minima.
    """
    s = np.zeros(horizon)
    nu_min = np.zeros(horizon)
    mu_min = np.zeros(horizon)
    off = np.zeros(horizon)
    for k, n in enumerate(range(1, horizon + 1)):
        beta = sched.beta_at(n)
        row = coefficients(beta)
        active = sorted(active_indices(beta))
        s[k] = row.s
        if active:
            nu_min[k] = row.nu[active].min()
            mu_min[k] = row.mu[active].min()
        outside = sorted(set(active) - sched.j_at(n))
        off[k] = beta.weights[outside].sum() if outside else 0.0
    return SeriesTrace(s=s, nu_min_active=nu_min, mu_min_active=mu_min, off_control=off)


@dataclass
class SeriesReport:
    horizon: int
    boundaries: list[int]
    # per-block minima: nu over active, nu over control set, beta over control set
    nu_blocks: list[float]
    nu_j_blocks: list[float]
    beta_j_blocks: list[float]
    sum_nu_blocks: float
    sum_nu_j_blocks: float
    sum_beta_j_blocks: float
    # per-iteration sums
    cum_nu: float
    cum_mu: float
    off_control_tail: float
    max_s: float
    analytic: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "boundaries": self.boundaries,
            "nu_blocks": self.nu_blocks,
            "nu_j_blocks": self.nu_j_blocks,
            "beta_j_blocks": self.beta_j_blocks,
            "sum_nu_blocks": self.sum_nu_blocks,
            "sum_nu_j_blocks": self.sum_nu_j_blocks,
            "sum_beta_j_blocks": self.sum_beta_j_blocks,
            "cum_nu": self.cum_nu,
            "cum_mu_min": self.cum_mu,
            "off_control_tail": self.off_control_tail,
            "max_s": self.max_s,
            "analytic": dict(self.analytic),
        }


def series_report(sched: Schedule, blocks: BlockPartition, horizon: int) -> SeriesReport:
    """Direct summation of the block and per-iteration series up to ``horizon``.

    Blocks ending past ``horizon`` are ignored.  A block with no active (or no
    controlled) entry contributes 0 to the corresponding sum.
    """
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    trace = series_trace(sched, horizon)
    nu_b, nu_j_b, beta_j_b = [], [], []
    used = []
    for end, window in zip(blocks.boundaries, blocks.windows()):
        if end > horizon:
            break
        used.append(end)
        nu_all, nu_j, beta_j = np.inf, np.inf, np.inf
        for n in window:
            beta = sched.beta_at(n)
            nu = coefficients(beta).nu
            active = sorted(active_indices(beta))
            control = sorted(sched.j_at(n))
            if active:
                nu_all = min(nu_all, nu[active].min())
            if control:
                nu_j = min(nu_j, nu[control].min())
                beta_j = min(beta_j, beta.weights[control].min())
        nu_b.append(_finite_or_zero(nu_all))
        nu_j_b.append(_finite_or_zero(nu_j))
        beta_j_b.append(_finite_or_zero(beta_j))
    return SeriesReport(
        horizon=horizon,
        boundaries=used,
        nu_blocks=nu_b,
        nu_j_blocks=nu_j_b,
        beta_j_blocks=beta_j_b,
        sum_nu_blocks=float(sum(nu_b)),
        sum_nu_j_blocks=float(sum(nu_j_b)),
        sum_beta_j_blocks=float(sum(beta_j_b)),
        cum_nu=float(trace.nu_min_active.sum()),
        cum_mu=float(trace.mu_min_active.sum()),
        off_control_tail=float(trace.off_control.sum()),
        max_s=float(trace.s.max()),
        analytic=dict(sched.analytic),
    )


def _finite_or_zero(v: float) -> float:
    return float(v) if np.isfinite(v) else 0.0


# ---------------------------------------------------------------------------
# transforms


def restrict_to_j(sched: Schedule) -> Schedule:
    """Schedule that keeps ``beta_i^(n)`` for ``i`` in ``J^(n)`` and zeroes the rest.

    Without a control rule ``J = I`` and the weights are unchanged.
    """
    return RestrictedSchedule(sched)


@dataclass
class Nullification:
    schedule: TabulatedSchedule
    mass: float
    passes: int
    #: (n, i) pairs that were zeroed, in order
    nullified: list[tuple[int, int]]
    converged: bool


def nullify_offcontrol(
    sched: Schedule, p: int, horizon: int, eps: Optional[float] = None
) -> Nullification:
    """Zero off-control block minima over fixed blocks of length ``p``.

    Each pass visits the blocks ``((k-1)p, kp]``; when the smallest active
    coefficient of a block sits outside the control set it is set to 0.
    Passes repeat until none changes anything, at most ``p * N`` times.  A
    trailing partial block is left untouched.

    ``eps`` requires every sum ``s^(n) <= 2 - eps`` over the horizon; with
    ``eps=None`` only ``s^(n) < 2`` is required.
    """
    if p < 1:
        raise InputError("block length p must be >= 1")
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    table = TabulatedSchedule.from_schedule(sched, horizon)
    betas = np.array([b.weights for b in table.rows])
    sums = betas.sum(axis=1)
    limit = 2.0 if eps is None else 2.0 - eps
    bad = np.flatnonzero(sums >= 2.0) if eps is None else np.flatnonzero(sums > limit + 1e-12)
    if bad.size:
        n = int(bad[0]) + 1
        raise InputError(f"s^({n}) = {sums[bad[0]]:.17g} violates s <= 2 - eps (limit {limit})")

    control = np.zeros_like(betas, dtype=bool)
    for k in range(horizon):
        control[k, list(table.j_at(k + 1))] = True

    n_sets = sched.n_sets
    max_passes = p * n_sets
    mass = 0.0
    zeroed: list[tuple[int, int]] = []
    passes = 0
    converged = False
    while passes < max_passes:
        changed = False
        for start in range(0, (horizon // p) * p, p):
            block = betas[start:start + p]
            active = block > 0
            if not active.any():
                continue
            low = block[active].min()
            hits = np.argwhere(active & (block == low) & ~control[start:start + p])
            if hits.size == 0:
                continue
            r, i = (int(v) for v in hits[0])
            mass += float(block[r, i])
            block[r, i] = 0.0
            zeroed.append((start + r + 1, i))
            changed = True
        if not changed:
            converged = True
            break
        passes += 1
    if not converged:
        # the cap was reached; check whether a further pass would still act
        converged = not _has_offcontrol_minimum(betas, control, p, horizon)

    js = table.js if table.has_j_rule else None
    return Nullification(
        schedule=TabulatedSchedule([BetaVector(row) for row in betas], js),
        mass=mass,
        passes=passes,
        nullified=zeroed,
        converged=converged,
    )


def _has_offcontrol_minimum(betas, control, p, horizon) -> bool:
    for start in range(0, (horizon // p) * p, p):
        block = betas[start:start + p]
        active = block > 0
        if active.any():
            low = block[active].min()
            if np.any(active & (block == low) & ~control[start:start + p]):
                return True
    return False
