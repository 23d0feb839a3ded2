"""
Iteration driver ``x^(n) = Q_{beta^(n)}(x^(n-1))`` with stopping rules and traces.

Feasibility is measured by the surrogate ``max_i d(x, C_i)``; the distance to
the intersection itself is not available in closed form.  When a reference
point of the intersection is supplied its distance is traced too, which makes
Fejer monotonicity directly observable.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from relaxproj.errors import InputError
from relaxproj.geometry import as_point
from relaxproj.operator import active_indices, apply_q, coefficients
from relaxproj.schedule import Schedule

log = logging.getLogger(__name__)

REFERENCE_TOL = 1e-9


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    STEP_STALLED = "step_stalled"
    MAX_ITER = "max_iter"


@dataclass
class RunConfig:
    """Inputs of one run.

    ``tol_step = 0`` disables stall detection.  Steps whose weights are all
    zero never count as stalls.  ``trace_stride`` keeps every k-th row (the
    first and last rows are always kept).
    """

    sets: Sequence
    schedule: Schedule
    x0: np.ndarray
    max_iter: int = 10_000
    tol_feas: float = 1e-6
    tol_step: float = 0.0
    reference_point: Optional[np.ndarray] = None
    trace_stride: int = 1

    def validate(self) -> None:
        if len(self.sets) == 0:
            raise InputError("at least one set is required")
        if self.schedule.n_sets != len(self.sets):
            raise InputError(f"schedule has N={self.schedule.n_sets} but {len(self.sets)} sets were given")
        self.x0 = as_point(self.x0)
        for k, cset in enumerate(self.sets):
            if cset.dim is not None and cset.dim != self.x0.size:
                raise InputError(f"sets[{k}] has dimension {cset.dim}, x0 has {self.x0.size}")
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")
        if not self.tol_feas > 0:
            raise InputError("tol_feas must be positive")
        if self.tol_step < 0:
            raise InputError("tol_step must be nonnegative")
        if self.trace_stride < 1:
            raise InputError("trace_stride must be >= 1")
        if self.reference_point is not None:
            self.reference_point = as_point(self.reference_point, self.x0.size)
            for k, cset in enumerate(self.sets):
                if not cset.contains(self.reference_point, REFERENCE_TOL):
                    raise InputError(f"reference_point is not in sets[{k}]")


@dataclass
class TraceRow:
    n: int
    dists: list[float]
    max_dist: float
    step_norm: float
    s: float
    nu_min_active: float
    cum_nu: float
    cum_mu: float
    dist_to_ref: Optional[float] = None


@dataclass
class RunResult:
    final_point: np.ndarray
    iterations: int
    status: Status
    trace: list[TraceRow] = field(default_factory=list)

    @property
    def final_row(self) -> TraceRow:
        return self.trace[-1]


def _distances(sets, x) -> list[float]:
    return [cset.distance(x) for cset in sets]


def initial_row(config: RunConfig) -> TraceRow:
    x = config.x0
    dists = _distances(config.sets, x)
    ref = config.reference_point
    return TraceRow(
        n=0,
        dists=dists,
        max_dist=max(dists),
        step_norm=0.0,
        s=0.0,
        nu_min_active=0.0,
        cum_nu=0.0,
        cum_mu=0.0,
        dist_to_ref=None if ref is None else float(np.linalg.norm(x - ref)),
    )


def step(config: RunConfig, x: np.ndarray, n: int, prev: Optional[TraceRow] = None) -> tuple[np.ndarray, TraceRow]:
    """One iteration from ``x = x^(n-1)``; ``prev`` carries the running sums."""
    if n < 1:
        raise InputError("iteration index must be >= 1")
    beta = config.schedule.beta_at(n)
    x_new = apply_q(beta, config.sets, x)
    row = coefficients(beta)
    active = sorted(active_indices(beta))
    nu_min = float(row.nu[active].min()) if active else 0.0
    mu_min = float(row.mu[active].min()) if active else 0.0
    dists = _distances(config.sets, x_new)
    ref = config.reference_point
    return x_new, TraceRow(
        n=n,
        dists=dists,
        max_dist=max(dists),
        step_norm=float(np.linalg.norm(x_new - x)),
        s=row.s,
        nu_min_active=nu_min,
        cum_nu=(prev.cum_nu if prev else 0.0) + nu_min,
        cum_mu=(prev.cum_mu if prev else 0.0) + mu_min,
        dist_to_ref=None if ref is None else float(np.linalg.norm(x_new - ref)),
    )


def run(config: RunConfig) -> RunResult:
    """Iterate until feasible, stalled, or ``max_iter`` steps were taken."""
    config.validate()
    x = config.x0.copy()
    row = initial_row(config)
    trace = [row]
    if row.max_dist <= config.tol_feas:
        return RunResult(final_point=x, iterations=0, status=Status.FEASIBLE, trace=trace)

    status = Status.MAX_ITER
    n = 0
    for n in range(1, config.max_iter + 1):
        x, row = step(config, x, n, row)
        if row.max_dist <= config.tol_feas:
            status = Status.FEASIBLE
        elif config.tol_step > 0 and row.s > 0 and row.step_norm <= config.tol_step:
            status = Status.STEP_STALLED
        if status is not Status.MAX_ITER or n % config.trace_stride == 0 or n == config.max_iter:
            trace.append(row)
        if status is not Status.MAX_ITER:
            break
    log.info("run finished: status=%s iterations=%d max_dist=%.3e", status.value, n, row.max_dist)
    return RunResult(final_point=x, iterations=n, status=status, trace=trace)
