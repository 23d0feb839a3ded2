"""
Closed convex sets in R^d with closed-form Euclidean projections.

Every set is an immutable dataclass exposing ``project``, ``contains`` and
``distance``.  The module-level functions of the same names dispatch to them
so callers can treat sets uniformly.

Only variants with exact projection formulas are provided.  Sets that would
need an iterative projection (general polyhedra, cones, ...) can be added by
implementing the same three methods plus ``to_json``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np

from relaxproj.errors import InputError

MEMBERSHIP_TOL = 1e-12


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Convert ``x`` to a finite float64 vector, optionally checking its length."""
    arr = np.array(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"point must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("point has non-finite components")
    if dim is not None and arr.size != dim:
        raise InputError(f"dimension mismatch: expected {dim}, got {arr.size}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class _ConvexSet:
    dim: Optional[int]

    def _check(self, x) -> np.ndarray:
        return as_point(x, self.dim)

    def distance(self, x) -> float:
        x = self._check(x)
        return float(np.linalg.norm(x - self.project(x)))

    def project(self, x) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class HalfSpace(_ConvexSet):
    """``{x : <a, x> <= b}``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = as_point(self.a)
        if not np.linalg.norm(a) > 0:
            raise InputError("half-space normal must be nonzero")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.a.size

    def _excess(self, x: np.ndarray) -> float:
        return float(self.a @ x) - self.b

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        excess = self._excess(x)
        if excess <= 0.0:
            return x.copy()
        return x - (excess / float(self.a @ self.a)) * self.a

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = self._check(x)
        return self._excess(x) / float(np.linalg.norm(self.a)) <= tol

    def to_json(self) -> dict:
        return {"type": "halfspace", "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class Hyperplane(_ConvexSet):
    """``{x : <a, x> = b}``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = as_point(self.a)
        if not np.linalg.norm(a) > 0:
            raise InputError("hyperplane normal must be nonzero")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.a.size

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        residual = float(self.a @ x) - self.b
        if residual == 0.0:
            return x.copy()
        return x - (residual / float(self.a @ self.a)) * self.a

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = self._check(x)
        return abs(float(self.a @ x) - self.b) / float(np.linalg.norm(self.a)) <= tol

    def to_json(self) -> dict:
        return {"type": "hyperplane", "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class Ball(_ConvexSet):
    """Closed Euclidean ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = as_point(self.center)
        radius = float(self.radius)
        if not (np.isfinite(radius) and radius > 0):
            raise InputError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", _frozen(center))
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        offset = x - self.center
        norm = float(np.linalg.norm(offset))
        if norm <= self.radius:
            return x.copy()
        return self.center + (self.radius / norm) * offset

    def distance(self, x) -> float:
        x = self._check(x)
        return max(float(np.linalg.norm(x - self.center)) - self.radius, 0.0)

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = self._check(x)
        return float(np.linalg.norm(x - self.center)) - self.radius <= tol

    def to_json(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box(_ConvexSet):
    """Axis-aligned box ``lo <= x <= hi``; ``lo_i == hi_i`` is allowed."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lo)
        hi = as_point(self.hi, lo.size)
        if np.any(lo > hi):
            raise InputError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = self._check(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def to_json(self) -> dict:
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Simplex(_ConvexSet):
    """Probability simplex ``{x : x_i >= 0, sum(x) = 1}`` in whatever dimension ``x`` has."""

    @property
    def dim(self) -> None:
        return None

    def project(self, x) -> np.ndarray:
        # sort-and-threshold: find tau with sum(max(x - tau, 0)) = 1
        x = self._check(x)
        u = np.sort(x)[::-1]
        css = np.cumsum(u) - 1.0
        ks = np.arange(1, x.size + 1)
        rho = np.nonzero(u - css / ks > 0)[0][-1]
        tau = css[rho] / (rho + 1)
        return np.maximum(x - tau, 0.0)

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = self._check(x)
        return bool(np.all(x >= -tol) and abs(float(x.sum()) - 1.0) <= tol)

    def to_json(self) -> dict:
        return {"type": "simplex"}


ConvexSet = Union[HalfSpace, Hyperplane, Ball, Box, Simplex]


def project(cset: ConvexSet, x) -> np.ndarray:
    """Nearest point of ``cset`` to ``x``."""
    return cset.project(x)


def distance(cset: ConvexSet, x) -> float:
    return cset.distance(x)


def contains(cset: ConvexSet, x, tol: float = MEMBERSHIP_TOL) -> bool:
    if tol < 0:
        raise InputError("tol must be nonnegative")
    return cset.contains(x, tol)


def set_from_json(obj: dict[str, Any], path: str = "set") -> ConvexSet:
    """Decode one set from its JSON form; errors name the offending field path."""
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected an object")
    kind = obj.get("type")
    try:
        if kind == "halfspace":
            return HalfSpace(obj["a"], obj["b"])
        if kind == "hyperplane":
            return Hyperplane(obj["a"], obj["b"])
        if kind == "ball":
            return Ball(obj["center"], obj["radius"])
        if kind == "box":
            return Box(obj["lo"], obj["hi"])
        if kind == "simplex":
            return Simplex()
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc.args[0]!r}") from None
    except (InputError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}.type: unknown set type {kind!r}")


def set_to_json(cset: ConvexSet) -> dict:
    return cset.to_json()
