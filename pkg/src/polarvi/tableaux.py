"""Butcher tableaux used by the integrators, plus a linear-space symplectic
partitioned Runge-Kutta step used to validate them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoConvergence, ZeroWeight
from .tangent import FixedPointConfig


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s = b.shape[0]
        if a.shape != (s, s) or c.shape != (s,):
            raise ValueError(f"inconsistent tableau shapes a={a.shape} b={b.shape} c={c.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return self.b.shape[0]

    def check(self, tol: float = 1e-15) -> None:
        """Raise ValueError unless sum(b) = 1 and c = row sums of a."""
        if abs(self.b.sum() - 1.0) > tol:
            raise ValueError(f"weights sum to {self.b.sum()!r}, not 1")
        if np.max(np.abs(self.a.sum(axis=1) - self.c)) > tol:
            raise ValueError("nodes do not match the row sums of a")

    def to_strings(self) -> dict:
        """Decimal-string form for scenario files (17 significant digits)."""
        fmt = lambda x: format(float(x), ".17g")  # noqa: E731
        return {
            "a": [[fmt(x) for x in row] for row in self.a],
            "b": [fmt(x) for x in self.b],
            "c": [fmt(x) for x in self.c],
        }

    @classmethod
    def from_strings(cls, data: dict, name: str = "custom") -> "ButcherTableau":
        a = np.array([[float(x) for x in row] for row in data["a"]])
        b = np.array([float(x) for x in data["b"]])
        if "c" in data:
            c = np.array([float(x) for x in data["c"]])
        else:
            c = a.sum(axis=1)
        return cls(a, b, c, name)


def _gl1() -> ButcherTableau:
    return ButcherTableau(np.array([[0.5]]), np.array([1.0]), np.array([0.5]), "gl1")


def _rk3() -> ButcherTableau:
    a = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [-1.0, 2.0, 0.0]])
    return ButcherTableau(a, np.array([1 / 6, 2 / 3, 1 / 6]), np.array([0.0, 0.5, 1.0]), "rk3")


def _gl2() -> ButcherTableau:
    r3 = math.sqrt(3.0)
    a = np.array([[0.25, 0.25 - r3 / 6], [0.25 + r3 / 6, 0.25]])
    c = np.array([0.5 - r3 / 6, 0.5 + r3 / 6])
    return ButcherTableau(a, np.array([0.5, 0.5]), c, "gl2")


def _gl3() -> ButcherTableau:
    r15 = math.sqrt(15.0)
    a = np.array(
        [
            [5 / 36, 2 / 9 - r15 / 15, 5 / 36 - r15 / 30],
            [5 / 36 + r15 / 24, 2 / 9, 5 / 36 - r15 / 24],
            [5 / 36 + r15 / 30, 2 / 9 + r15 / 15, 5 / 36],
        ]
    )
    b = np.array([5 / 18, 4 / 9, 5 / 18])
    c = np.array([0.5 - r15 / 10, 0.5, 0.5 + r15 / 10])
    return ButcherTableau(a, b, c, "gl3")


_BUILTINS = {"gl1": _gl1, "rk3": _rk3, "gl2": _gl2, "gl3": _gl3}

#: theoretical order of each built-in method
ORDERS = {"gl1": 2, "rk3": 3, "gl2": 4, "gl3": 6}


def builtin(name: str) -> ButcherTableau:
    """One of ``gl1``, ``rk3``, ``gl2``, ``gl3``."""
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown tableau {name!r}; choose from {sorted(_BUILTINS)}") from None


def builtin_names() -> list[str]:
    return list(_BUILTINS)


def sprk_partner(t: ButcherTableau) -> ButcherTableau:
    """Momentum tableau ``a~_ij = b_j (1 - a_ji / b_i)`` of the partitioned pair."""
    b = t.b
    if np.any(b == 0.0):
        raise ZeroWeight("partner tableau needs all weights nonzero")
    at = b[None, :] * (1.0 - t.a.T / b[:, None])
    return ButcherTableau(at, b.copy(), at.sum(axis=1), f"{t.name}~")


def sprk_step(
    t: ButcherTableau,
    dl_dq: Callable,
    velocity: Callable,
    q0,
    p0,
    h: float,
    cfg: FixedPointConfig = FixedPointConfig(),
):
    """One step of the partitioned Runge-Kutta scheme for a Lagrangian on R^d.

    ``dl_dq(q, qdot)`` is the force ``dL/dq``; ``velocity(q, p)`` inverts the
    Legendre map ``p = dL/dqdot(q, qdot)``.  The stage velocities are found by
    fixed-point iteration.
    """
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    at = sprk_partner(t).a
    s = t.s
    qdot = np.array([velocity(q0, p0) for _ in range(s)])
    diff = np.inf
    for it in range(1, cfg.max_iter + 1):
        q_st = q0 + h * (t.a @ qdot)
        pdot = np.array([dl_dq(q_st[i], qdot[i]) for i in range(s)])
        p_st = p0 + h * (at @ pdot)
        new = np.array([velocity(q_st[i], p_st[i]) for i in range(s)])
        diff = float(np.max(np.abs(new - qdot)))
        qdot = new
        if diff < cfg.tol * (1.0 + float(np.max(np.abs(qdot)))):
            break
    else:
        raise NoConvergence("partitioned Runge-Kutta stage iteration did not converge", cfg.max_iter, diff)
    q_st = q0 + h * (t.a @ qdot)
    pdot = np.array([dl_dq(q_st[i], qdot[i]) for i in range(s)])
    q1 = q0 + h * (t.b @ qdot)
    p1 = p0 + h * (t.b @ pdot)
    return q1, p1
