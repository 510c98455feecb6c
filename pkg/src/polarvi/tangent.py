"""Tangent map of the polar projection, its adjoint, and the stage-coupled
adjoint systems solved inside every integrator step.

For ``A = U P`` the tangent map ``dP_A(B)`` is the skew ``W`` solving

    P W + W P + B^T U - U^T B = 0,

and its adjoint with respect to ``tr(X Y^T)`` on R^{n x n} and the sk(n)
pairing is ``dP_A^*(W) = U Lyap(P, W^T)``.

Inside a step the stage points are coupled through the Runge-Kutta matrix,
so the adjoint of the stage-to-velocity map requires solving

    S_j - asym(h U_j^T sum_l a_lj dP_{A_l}^*(S_l) Omega_j^T) = rhs_j

for ``S_1..S_s``.  Only the products ``U_j^T U_l`` and ``g0^T U_l`` enter,
so :class:`StageGeometry` stores those and one code path serves both the
full and the reduced (Lie-Poisson) integrator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NearSingular, NoConvergence
from .linalg import PolarFactors


@dataclass(frozen=True)
class FixedPointConfig:
    """Termination rule shared by all fixed-point loops."""

    tol: float = 1e-15
    max_iter: int = 100

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def dpol(factors: PolarFactors, b: np.ndarray) -> np.ndarray:
    """Tangent map of the polar projection at ``A = U P`` applied to ``b``."""
    u = factors.u
    return factors.lyap(b.T @ u - u.T @ b)


def dpol_star(factors: PolarFactors, w: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`dpol`: ``U Lyap(P, w^T)``."""
    return factors.u @ factors.lyap(np.asarray(w).T)


def _batched_asym(x: np.ndarray) -> np.ndarray:
    return x - np.swapaxes(x, -1, -2)


class StageGeometry:
    """Per-step data needed by the stage-coupled adjoint systems.

    Parameters
    ----------
    rel : (s, s, n, n) array
        ``rel[j, l] = U_j^T U_l`` (full) or ``Theta_j Theta_l^T`` (reduced).
    factors : sequence of PolarFactors
        Polar factors of the stage arguments ``A_l``.
    omegas : (s, n, n) array
        Stage velocities ``Omega_j``.
    base : (s, n, n) array
        ``g0^T U_l`` (full) or ``f0 Theta_l^T`` (reduced).
    a : (s, s) array
        Runge-Kutta matrix.
    h : float
        Step size.
    """

    def __init__(self, rel, factors: Sequence[PolarFactors], omegas, base, a, h: float):
        self.rel = np.asarray(rel, dtype=float)
        self.factors = list(factors)
        self.omegas = np.asarray(omegas, dtype=float)
        self.base = np.asarray(base, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.h = float(h)
        self.s = self.a.shape[0]
        eigs = [f.eig for f in self.factors]
        w = np.array([e[0] for e in eigs])
        self._q = np.array([e[1] for e in eigs])
        self._qt = np.swapaxes(self._q, 1, 2)
        self._denom = w[:, :, None] + w[:, None, :]
        if self._denom.min() <= 0:
            raise NearSingular("stage polar factor is not positive definite")
        # rel[j, l] weighted by a[l, j], used by the coupling term
        self._rel_a = self.rel * self.a.T[:, :, None, None]

    @classmethod
    def full(cls, g0, stage_rots, factors, omegas, a, h):
        u = np.asarray(stage_rots, dtype=float)
        ut = np.swapaxes(u, 1, 2)
        rel = np.einsum("jab,lbc->jlac", ut, u)
        base = np.asarray(g0, dtype=float).T @ u
        return cls(rel, factors, omegas, base, a, h)

    @classmethod
    def reduced(cls, f0, thetas, factors, omegas, a, h):
        th = np.asarray(thetas, dtype=float)
        tht = np.swapaxes(th, 1, 2)
        rel = np.einsum("jab,lbc->jlac", th, tht)
        base = np.asarray(f0, dtype=float) @ tht
        return cls(rel, factors, omegas, base, a, h)

    def lyap_all(self, sols: np.ndarray) -> np.ndarray:
        """``Lyap(P_l, S_l^T)`` for every stage at once."""
        ct = -sols  # S^T for skew S
        x = self._q @ (-(self._qt @ ct @ self._q) / self._denom) @ self._qt
        return 0.5 * (x - np.swapaxes(x, 1, 2))

    def coupling(self, sols: np.ndarray) -> np.ndarray:
        lyaps = self.lyap_all(sols)
        t = np.einsum("jlab,lbc->jac", self._rel_a, lyaps)
        return self.h * _batched_asym(t @ np.swapaxes(self.omegas, 1, 2))

    def validate(self, tol: float = 1e-12) -> None:
        n = self.rel.shape[-1]
        eye = np.eye(n)
        for j in range(self.s):
            if np.linalg.norm(self.rel[j, j] - eye, 2) > tol:
                raise ValueError(f"rel[{j},{j}] is not the identity")
            for l in range(self.s):
                if np.linalg.norm(self.rel[j, l] - self.rel[l, j].T, 2) > tol:
                    raise ValueError(f"rel[{j},{l}] != rel[{l},{j}]^T")


def _max_skew_norm(x: np.ndarray) -> float:
    return float(np.sqrt(0.5 * np.max(np.sum(x * x, axis=(-2, -1)))))


def chain_solve(geom: StageGeometry, rhs, cfg: FixedPointConfig = FixedPointConfig(), init=None):
    """Fixed-point solve of the stage-coupled adjoint system.

    Returns the stacked solution ``S`` of shape ``(s, n, n)``.  ``init`` is an
    optional starting guess (defaults to ``rhs``).
    """
    rhs = np.asarray(rhs, dtype=float)
    sols = rhs.copy() if init is None else np.asarray(init, dtype=float)
    thresh = cfg.tol * (1.0 + _max_skew_norm(rhs))
    diff = np.inf
    for it in range(1, cfg.max_iter + 1):
        new = rhs + geom.coupling(sols)
        diff = _max_skew_norm(new - sols)
        sols = new
        if diff < thresh:
            return sols
    raise NoConvergence("adjoint chain fixed-point iteration did not converge", cfg.max_iter, diff)


def apply_psi_star_all(geom: StageGeometry, sols: np.ndarray) -> np.ndarray:
    """``asym(sum_l a_lk rel(k,l) Lyap(P_l, S_l^T))`` for every k, stacked."""
    lyaps = geom.lyap_all(sols)
    t = np.einsum("klab,lbc->kac", geom._rel_a, lyaps)
    return _batched_asym(t)


def apply_psi_star(geom: StageGeometry, sols: np.ndarray, k: int) -> np.ndarray:
    return apply_psi_star_all(geom, sols)[k]


def apply_varphi_star(geom: StageGeometry, sols: np.ndarray) -> np.ndarray:
    """``asym(sum_l base(l) Lyap(P_l, S_l^T))``."""
    lyaps = geom.lyap_all(sols)
    t = np.einsum("lab,lbc->ac", geom.base, lyaps)
    return t - t.T
