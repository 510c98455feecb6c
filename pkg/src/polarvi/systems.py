"""Mechanical systems on SO(3) in left-trivialized Hamiltonian form.

Momenta are skew matrices throughout; ``vee`` turns them into the usual
body-frame angular momentum vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PoleSingularity
from .integrators import CotangentState, legendre_convert
from .linalg import asym, hat, vee

POLE_EPS = 1e-9


@dataclass(frozen=True)
class LeftTrivHamiltonian:
    """``H(g, mu)`` together with its left-trivialized partial derivatives.

    ``d_g(g, mu)`` is ``asym(g^T grad_g H)`` and ``d_mu(g, mu)`` the
    velocity ``dH/dmu``; both are skew matrices.
    """

    energy: Callable[[np.ndarray, np.ndarray], float]
    d_g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    d_mu: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ReducedHamiltonian:
    energy: Callable[[np.ndarray], float]
    d_mu: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class DipoleParams:
    """Dipole on a stick: a heavy rigid body carrying two opposite charges
    that interact with a fixed charge at ``z``."""

    m: float = 1.0
    alpha: float = 0.1
    q: float = 1.0
    beta: float = 1.0
    z: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.5]))

    @property
    def y_plus(self) -> np.ndarray:
        return np.array([0.0, self.alpha, -1.0])

    @property
    def y_minus(self) -> np.ndarray:
        return np.array([0.0, -self.alpha, -1.0])

    @property
    def inertia(self) -> np.ndarray:
        return self.m * np.diag([1.0 + self.alpha**2, 1.0, self.alpha**2])


def _charge_offsets(g, params: DipoleParams):
    d_plus = g @ params.y_plus - params.z
    d_minus = g @ params.y_minus - params.z
    r_plus = np.linalg.norm(d_plus)
    r_minus = np.linalg.norm(d_minus)
    if min(r_plus, r_minus) < POLE_EPS:
        raise PoleSingularity("a dipole charge coincides with the fixed charge")
    return d_plus, r_plus, d_minus, r_minus


def dipole_potential(g, params: DipoleParams = DipoleParams()) -> float:
    g = np.asarray(g, dtype=float)
    _, r_plus, _, r_minus = _charge_offsets(g, params)
    return params.m * g[2, 2] + params.q * params.beta * (1.0 / r_plus - 1.0 / r_minus)


def dipole_potential_grad(g, params: DipoleParams = DipoleParams()) -> np.ndarray:
    """Matrix gradient of the potential with respect to the entries of ``g``."""
    g = np.asarray(g, dtype=float)
    d_plus, r_plus, d_minus, r_minus = _charge_offsets(g, params)
    grad = np.zeros((3, 3))
    grad[2, 2] = params.m
    qb = params.q * params.beta
    grad -= qb * np.outer(d_plus, params.y_plus) / r_plus**3
    grad += qb * np.outer(d_minus, params.y_minus) / r_minus**3
    return grad


def dipole_energy(g, mu, params: DipoleParams = DipoleParams()) -> float:
    pt = vee(mu)
    kinetic = 0.5 * pt @ np.linalg.solve(params.inertia, pt)
    return float(kinetic + dipole_potential(g, params))


def dipole_energy_right(g, p, params: DipoleParams = DipoleParams()) -> float:
    """Energy with the spatial (right-trivialized) momentum vector ``p``."""
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    w = g.T @ p
    return float(0.5 * w @ np.linalg.solve(params.inertia, w) + dipole_potential(g, params))


def dipole_d_g(g, mu, params: DipoleParams = DipoleParams()) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    return asym(g.T @ dipole_potential_grad(g, params))


def dipole_d_mu(g, mu, params: DipoleParams = DipoleParams()) -> np.ndarray:
    return hat(np.linalg.solve(params.inertia, vee(mu)))


def dipole(params: DipoleParams = DipoleParams()) -> LeftTrivHamiltonian:
    return LeftTrivHamiltonian(
        energy=lambda g, mu: dipole_energy(g, mu, params),
        d_g=lambda g, mu: dipole_d_g(g, mu, params),
        d_mu=lambda g, mu: dipole_d_mu(g, mu, params),
    )


def dipole_initial_state(params: DipoleParams = DipoleParams()) -> CotangentState:
    g0 = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    p_right = g0 @ params.inertia @ g0.T @ np.array([0.0, 1.0, 0.0])
    return CotangentState(g0, legendre_convert(g0, p_right))


def rigid_body(inertia) -> LeftTrivHamiltonian:
    """Free rigid body lifted to T*SO(3); invariant under left translation."""
    inertia = np.asarray(inertia, dtype=float)
    red = rigid_body_reduced(inertia)
    zero = np.zeros((3, 3))
    return LeftTrivHamiltonian(
        energy=lambda g, mu: red.energy(mu),
        d_g=lambda g, mu: zero,
        d_mu=lambda g, mu: red.d_mu(mu),
    )


def rigid_body_reduced(inertia) -> ReducedHamiltonian:
    inertia = np.asarray(inertia, dtype=float)
    inv = np.linalg.inv(inertia)

    def energy(mu):
        m = vee(mu)
        return float(0.5 * m @ inv @ m)

    return ReducedHamiltonian(energy=energy, d_mu=lambda mu: hat(inv @ vee(mu)))


def zero_hamiltonian(n: int = 3) -> LeftTrivHamiltonian:
    zero = np.zeros((n, n))
    return LeftTrivHamiltonian(
        energy=lambda g, mu: 0.0,
        d_g=lambda g, mu: zero,
        d_mu=lambda g, mu: zero,
    )
