"""Variational polar decomposition (VPD) integrators on SO(n).

The full step maps a left-trivialized cotangent state ``(g0, p0)`` to
``(g1, p1)``.  Internal stages are

    U_i = P(g0 + h sum_j a_ij U_j Omega_j),   g1 = P(g0 + h sum_i b_i U_i Omega_i),

where ``P`` is the orthogonal polar factor, and the stage momenta ``mu_i``
and the multiplier ``Lambda`` enforcing the endpoint constraint are found
together with them by one fixed-point iteration.  For left-invariant
Hamiltonians the reduced step works on ``f0 = g0^T g1`` and
``Theta_i = U_i^T g1`` only and advances the body momentum alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NoConvergence
from .linalg import PolarFactors, asym, hat, polar_decompose, skew_norm, spectral_norm_upto, sylvester_rot
from .tableaux import ButcherTableau
from .tangent import (
    FixedPointConfig,
    StageGeometry,
    apply_psi_star_all,
    apply_varphi_star,
    chain_solve,
)

__all__ = [
    "CotangentState",
    "FixedPointConfig",
    "ReducedState",
    "StageCache",
    "Trajectory",
    "integrate",
    "legendre_convert",
    "lie_poisson_step",
    "make_stepper",
    "vpd_residuals",
    "vpd_step",
]


@dataclass(frozen=True, eq=False)
class CotangentState:
    g: np.ndarray
    p: np.ndarray


@dataclass(frozen=True, eq=False)
class ReducedState:
    mu: np.ndarray


@dataclass(eq=False)
class StageCache:
    """Converged internal quantities of one step."""

    mus: np.ndarray
    omegas: np.ndarray
    stage_rots: np.ndarray
    lam: np.ndarray
    end_rot: np.ndarray
    factors: list
    iterations_used: int
    end_arg: np.ndarray | None = None
    thetas: np.ndarray | None = None


def legendre_convert(g, p_right) -> np.ndarray:
    """Body momentum ``hat(g^T p)`` from the spatial momentum vector ``p``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (3, 3):
        raise DimensionError("legendre_convert is defined on SO(3) only")
    return hat(g.T @ np.asarray(p_right, dtype=float))


def _batched_skew_norms(x: np.ndarray) -> float:
    return float(np.sqrt(0.5 * np.max(np.sum(x * x, axis=(-2, -1)))))


def _stage_sum(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_j coeffs[j] * x[j]`` for a stack of matrices."""
    return (coeffs @ x.reshape(x.shape[0], -1)).reshape(x.shape[1:])


def _not_converged(what: str, cfg: FixedPointConfig, diffs: dict) -> NoConvergence:
    worst = max(diffs, key=diffs.get)
    return NoConvergence(
        f"{what} fixed-point iteration did not converge (slowest variable: {worst})",
        cfg.max_iter,
        diffs[worst],
    )


def _check_step(h: float) -> None:
    if not (np.isfinite(h) and h > 0):
        raise ValueError(f"step size must be positive and finite, got {h!r}")


def vpd_step(sys, t: ButcherTableau, h: float, st: CotangentState, cfg: FixedPointConfig = FixedPointConfig()):
    """One step of the full VPD method; returns ``(CotangentState, StageCache)``.

    ``sys`` provides ``d_g(g, mu)`` and ``d_mu(g, mu)``.  Each sweep updates, in
    order, the stage velocities, the stage rotations, ``g1``, the shared
    adjoint-chain solution, ``Lambda`` and the stage momenta.
    """
    _check_step(h)
    g0 = np.asarray(st.g, dtype=float)
    p0 = np.asarray(st.p, dtype=float)
    s, a, b = t.s, t.a, t.b
    g0t = g0.T

    mus = np.repeat(p0[None], s, axis=0)
    rots = np.repeat(g0[None], s, axis=0)
    g1 = g0.copy()
    lam = -0.5 * p0
    sols = None
    factors: list[PolarFactors] = [None] * s
    diffs: dict = {}

    for it in range(1, cfg.max_iter + 1):
        omegas = np.array([sys.d_mu(rots[i], mus[i]) for i in range(s)])

        new_rots = rots.copy()
        for i in range(s):
            vel = new_rots @ omegas
            arg = g0 + h * _stage_sum(a[i], vel)
            factors[i] = polar_decompose(arg)
            new_rots[i] = factors[i].u
        vel = new_rots @ omegas
        end_arg = g0 + h * _stage_sum(b, vel)
        new_g1 = polar_decompose(end_arg).u

        forces = np.array([sys.d_g(new_rots[j], mus[j]) for j in range(s)])
        lam_term = np.swapaxes(new_rots, 1, 2) @ (new_g1 @ lam)
        w = forces - asym_batched(lam_term @ np.swapaxes(omegas, 1, 2))
        geom = StageGeometry.full(g0, new_rots, factors, omegas, a, h)
        sols = chain_solve(geom, b[:, None, None] * w, cfg, init=sols)

        rhs = -p0 + h * apply_varphi_star(geom, sols)
        new_lam = sylvester_rot(g0t @ new_g1, rhs)

        psi = apply_psi_star_all(geom, sols)
        lam_term = np.swapaxes(new_rots, 1, 2) @ (new_g1 @ new_lam)
        new_mus = -asym_batched(lam_term) + (h / b)[:, None, None] * psi

        diffs = {
            "mu": _batched_skew_norms(new_mus - mus),
            "U": spectral_norm_upto(new_rots - rots, cfg.tol),
            "g1": spectral_norm_upto(new_g1 - g1, cfg.tol),
            "Lambda": skew_norm(new_lam - lam),
        }
        mus, rots, g1, lam = new_mus, new_rots, new_g1, new_lam
        if max(diffs.values()) < cfg.tol:
            break
    else:
        raise _not_converged("VPD", cfg, diffs)

    omegas = np.array([sys.d_mu(rots[i], mus[i]) for i in range(s)])
    end_arg = g0 + h * _stage_sum(b, rots @ omegas)
    p1 = asym(g1.T @ end_arg @ lam.T)
    cache = StageCache(
        mus=mus,
        omegas=omegas,
        stage_rots=rots,
        lam=lam,
        end_rot=g1,
        factors=list(factors),
        iterations_used=it,
        end_arg=end_arg,
    )
    return CotangentState(g1, p1), cache


def asym_batched(x: np.ndarray) -> np.ndarray:
    return x - np.swapaxes(x, -1, -2)


def lie_poisson_step(sys, t: ButcherTableau, h: float, st: ReducedState, cfg: FixedPointConfig = FixedPointConfig()):
    """One step of the reduced (Lie-Poisson) VPD method on sk(n)*.

    ``sys`` provides ``d_mu(mu)``.  The unknowns are the stage momenta, the
    relative rotation ``f0 = g0^T g1``, ``Theta_i = U_i^T g1`` and ``Lambda``;
    ``f0`` is updated through ``f0 = P(I + h f0 sum_i b_i Theta_i^T Omega_i)``.
    """
    _check_step(h)
    mu0 = np.asarray(st.mu, dtype=float)
    n = mu0.shape[0]
    s, a, b = t.s, t.a, t.b
    eye = np.eye(n)

    mus = np.repeat(mu0[None], s, axis=0)
    thetas = np.repeat(eye[None], s, axis=0)
    f0 = eye.copy()
    lam = -0.5 * mu0
    sols = None
    factors: list[PolarFactors] = [None] * s
    diffs: dict = {}

    for it in range(1, cfg.max_iter + 1):
        omegas = np.array([sys.d_mu(mus[i]) for i in range(s)])

        new_thetas = thetas.copy()
        for i in range(s):
            vel = np.swapaxes(new_thetas, 1, 2) @ omegas
            arg = f0.T + h * _stage_sum(a[i], vel)
            factors[i] = polar_decompose(arg)
            new_thetas[i] = factors[i].u.T
        vel = np.swapaxes(new_thetas, 1, 2) @ omegas
        new_f0 = polar_decompose(eye + h * f0 @ _stage_sum(b, vel)).u

        w = -asym_batched(new_thetas @ lam @ np.swapaxes(omegas, 1, 2))
        geom = StageGeometry.reduced(new_f0, new_thetas, factors, omegas, a, h)
        sols = chain_solve(geom, b[:, None, None] * w, cfg, init=sols)

        rhs = -mu0 + h * apply_varphi_star(geom, sols)
        new_lam = sylvester_rot(new_f0, rhs)

        psi = apply_psi_star_all(geom, sols)
        new_mus = -asym_batched(new_thetas @ new_lam) + (h / b)[:, None, None] * psi

        diffs = {
            "mu": _batched_skew_norms(new_mus - mus),
            "Theta": spectral_norm_upto(new_thetas - thetas, cfg.tol),
            "f0": spectral_norm_upto(new_f0 - f0, cfg.tol),
            "Lambda": skew_norm(new_lam - lam),
        }
        mus, thetas, f0, lam = new_mus, new_thetas, new_f0, new_lam
        if max(diffs.values()) < cfg.tol:
            break
    else:
        raise _not_converged("Lie-Poisson", cfg, diffs)

    omegas = np.array([sys.d_mu(mus[i]) for i in range(s)])
    end_arg = f0.T + h * _stage_sum(b, np.swapaxes(thetas, 1, 2) @ omegas)
    mu1 = asym(end_arg @ lam.T)
    cache = StageCache(
        mus=mus,
        omegas=omegas,
        stage_rots=f0 @ np.swapaxes(thetas, 1, 2),
        lam=lam,
        end_rot=f0,
        factors=list(factors),
        iterations_used=it,
        end_arg=end_arg,
        thetas=thetas,
    )
    return ReducedState(mu1), cache


def vpd_residuals(sys, t: ButcherTableau, h: float, st: CotangentState, new: CotangentState, cache: StageCache,
                  cfg: FixedPointConfig = FixedPointConfig(tol=1e-16, max_iter=500)) -> dict:
    """Re-evaluate every defining equation of the VPD step at the converged
    values and return the norm of each residual."""
    g0, p0 = st.g, st.p
    g1, p1 = new.g, new.p
    s, a, b = t.s, t.a, t.b
    rots, mus, lam = cache.stage_rots, cache.mus, cache.lam
    omegas = np.array([sys.d_mu(rots[i], mus[i]) for i in range(s)])
    vel = rots @ omegas

    factors = [polar_decompose(g0 + h * _stage_sum(a[i], vel)) for i in range(s)]
    end = polar_decompose(g0 + h * _stage_sum(b, vel))
    geom = StageGeometry.full(g0, rots, factors, omegas, a, h)
    forces = np.array([sys.d_g(rots[j], mus[j]) for j in range(s)])
    rt = np.swapaxes(rots, 1, 2)
    w = forces - asym_batched(rt @ g1 @ lam @ np.swapaxes(omegas, 1, 2))
    sols = chain_solve(geom, b[:, None, None] * w, cfg)
    psi = apply_psi_star_all(geom, sols)

    r_mu = mus - (-asym_batched(rt @ g1 @ lam) + (h / b)[:, None, None] * psi)
    r_stage = np.array([factors[i].u - rots[i] for i in range(s)])
    r_lam = asym(g0.T @ g1 @ lam) - (-p0 + h * apply_varphi_star(geom, sols))
    r_p1 = p1 - asym(g1.T @ (g0 + h * _stage_sum(b, vel)) @ lam.T)
    r_omega = omegas - cache.omegas
    return {
        "mu": _batched_skew_norms(r_mu),
        "g1": float(np.linalg.norm(end.u - g1, 2)),
        "U": float(np.max(np.linalg.norm(r_stage, 2, axis=(-2, -1)))),
        "Lambda": skew_norm(r_lam),
        "p1": skew_norm(r_p1),
        "Omega": _batched_skew_norms(r_omega),
    }


def make_stepper(sys, t: ButcherTableau, h: float, cfg: FixedPointConfig = FixedPointConfig(), reduced: bool = False):
    """Bind a system, tableau and step size into ``state -> (state, cache)``."""
    if reduced:
        return lambda state: lie_poisson_step(sys, t, h, state, cfg)
    return lambda state: vpd_step(sys, t, h, state, cfg)


@dataclass(eq=False)
class Trajectory:
    initial: object
    final: object
    steps: int
    records: list = field(default_factory=list)
    iterations: list = field(default_factory=list)


def integrate(
    stepper: Callable,
    state,
    steps: int,
    observers: Iterable[Callable] = (),
    record: Callable | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Apply ``stepper`` ``steps`` times.

    Every observer is called as ``obs(k, state, cache)`` after step ``k``
    (1-based).  If ``record`` is given, ``record(k, state, cache)`` is stored
    every ``record_every`` steps and after the last one; ``record(0, state,
    None)`` is stored first.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    observers: Sequence[Callable] = list(observers)
    traj = Trajectory(initial=state, final=state, steps=steps)
    if record is not None:
        traj.records.append(record(0, state, None))
    for k in range(1, steps + 1):
        try:
            state, cache = stepper(state)
        except NoConvergence as exc:
            exc.step = k
            raise
        traj.iterations.append(cache.iterations_used)
        for obs in observers:
            obs(k, state, cache)
        if record is not None and (k % record_every == 0 or k == steps):
            traj.records.append(record(k, state, cache))
    traj.final = state
    return traj
