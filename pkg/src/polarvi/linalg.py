"""Dense matrix kernels for SO(n) and its Lie algebra sk(n).

Skew-symmetric matrices are plain ``ndarray`` objects; functions that
produce them re-antisymmetrize the result so that ``x == -x.T`` holds
exactly in storage.  The inner product on sk(n) is

    <X, Y> = sum_{i<j} X_ij Y_ij = tr(X Y^T) / 2,

and under the hat convention ``hat(v) @ w == cross(v, w)`` it coincides
with the Euclidean dot product on R^3.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    DimensionError,
    IllConditioned,
    NearSingular,
    NegativeDeterminant,
    NoConvergence,
    SingularInput,
)

POLAR_TOL = 1e-15
POLAR_MAX_ITER = 50
SYLVESTER_MAX_DIM = 16


def _square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise DimensionError(f"expected an n x n matrix with n >= 2, got shape {a.shape}")
    return a


def asym(a: np.ndarray) -> np.ndarray:
    """Return ``a - a.T``."""
    a = np.asarray(a, dtype=float)
    return a - a.T


def symmetrize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def skew_part(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a - a.T)


def skew_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Inner product on sk(n): the sum of ``x[i, j] * y[i, j]`` over i < j."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {y.shape}")
    iu = np.triu_indices(x.shape[0], 1)
    return float(np.dot(x[iu], y[iu]))


def skew_norm(x: np.ndarray) -> float:
    """Norm induced by :func:`skew_inner`; equals ``|vee(x)|`` for n = 3."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x) / np.sqrt(2.0))


def hat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise DimensionError(f"hat expects a 3-vector, got shape {v.shape}")
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3, 3):
        raise DimensionError(f"vee expects a 3 x 3 matrix, got shape {x.shape}")
    return np.array([x[2, 1], x[0, 2], x[1, 0]])


def spectral_norm(a: np.ndarray) -> float:
    """Induced 2-norm (largest singular value)."""
    return float(np.linalg.norm(a, 2))


def spectral_norm_upto(x: np.ndarray, tol: float) -> float:
    """Spectral norm of ``x`` (max over a stack) as far as needed to compare
    it with ``tol``.

    Uses ``|x|_F / sqrt(n) <= |x|_2 <= |x|_F``: when the Frobenius bounds
    already decide the comparison one of them is returned, otherwise the
    exact value.  ``spectral_norm_upto(x, tol) < tol`` is therefore exact.
    """
    fro = float(np.sqrt(np.max(np.sum(x * x, axis=(-2, -1)))))
    if fro < tol:
        return fro
    lower = fro / np.sqrt(x.shape[-1])
    if lower >= tol:
        return lower
    return float(np.max(np.linalg.norm(x, 2, axis=(-2, -1))))


def orthogonality_error(g: np.ndarray) -> float:
    """``||g g^T - I||_2``."""
    g = np.asarray(g, dtype=float)
    return spectral_norm(g @ g.T - np.eye(g.shape[0]))


@dataclass(frozen=True, eq=False)
class PolarFactors:
    """Polar factors ``a = u @ p`` with ``u`` in SO(n) and ``p`` SPD.

    The eigendecomposition of ``p`` is computed lazily and cached, because
    every tangent-map evaluation at the same point reuses it.
    """

    u: np.ndarray
    p: np.ndarray
    iterations: int = 0

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        w, q = np.linalg.eigh(self.p)
        return w, q

    def lyap(self, c: np.ndarray) -> np.ndarray:
        """Solve ``p X + X p + c = 0`` for skew ``c``."""
        w, q = self.eig
        return _lyap_eig(w, q, c)


def _newton_polar(a: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int]:
    u = a
    prev = np.inf
    for k in range(1, max_iter + 1):
        u_next = 0.5 * (u + np.linalg.inv(u).T)
        diff = spectral_norm_upto(u_next - u, tol)
        u = u_next
        if diff < tol:
            return u, k
        # round-off floor: the update stopped shrinking at machine-precision size
        if diff < 1e-12 and diff >= prev:
            return u, k
        prev = diff
    raise NoConvergence("polar Newton iteration did not converge", max_iter, diff)


def polar_decompose(a: np.ndarray, tol: float = POLAR_TOL, max_iter: int = POLAR_MAX_ITER) -> PolarFactors:
    """Polar decomposition of ``a`` in GL+(n) by the Newton iteration
    ``U <- (U + U^{-T}) / 2`` started at ``U = a``.

    Raises
    ------
    SingularInput
        If ``a`` is numerically singular.
    NegativeDeterminant
        If ``det(a) < 0``; the orthogonal factor would not lie in SO(n).
    NoConvergence
        If the iteration cap is reached.
    """
    a = _square(a)
    n = a.shape[0]
    if not np.all(np.isfinite(a)):
        raise SingularInput("matrix has non-finite entries")
    det = np.linalg.det(a)
    scale = np.linalg.norm(a) ** n
    if scale == 0.0 or abs(det) <= 1e-14 * scale:
        raise SingularInput(f"matrix is numerically singular (det={det:.3e})")
    if det < 0:
        raise NegativeDeterminant(f"det(a) = {det:.3e} < 0")
    u, iters = _newton_polar(a, tol, max_iter)
    p = symmetrize(u.T @ a)
    return PolarFactors(u, p, iters)


def polar_project(a: np.ndarray) -> np.ndarray:
    """Orthogonal polar factor of ``a``."""
    return polar_decompose(a).u


def _lyap_eig(w: np.ndarray, q: np.ndarray, c: np.ndarray) -> np.ndarray:
    denom = w[:, None] + w[None, :]
    if denom.min() <= 1e-14 * max(abs(w).max(), 1.0):
        raise NearSingular(f"eigenvalue pair sum {denom.min():.3e} is too small")
    ct = q.T @ c @ q
    x = q @ (-ct / denom) @ q.T
    return 0.5 * (x - x.T)


def lyap_spd(p: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Solve ``p X + X p + c = 0`` for SPD ``p`` and skew ``c``.

    Solved in the eigenbasis of ``p``, where the equation decouples into
    ``X_ij = -C_ij / (lambda_i + lambda_j)``.
    """
    p = _square(p)
    c = np.asarray(c, dtype=float)
    if c.shape != p.shape:
        raise DimensionError(f"dimension mismatch: {p.shape} vs {c.shape}")
    w, q = np.linalg.eigh(symmetrize(p))
    return _lyap_eig(w, q, c)


@lru_cache(maxsize=None)
def _skew_basis(n: int) -> np.ndarray:
    iu = np.triu_indices(n, 1)
    basis = np.zeros((len(iu[0]), n, n))
    for k, (i, j) in enumerate(zip(*iu)):
        basis[k, i, j] = 1.0
        basis[k, j, i] = -1.0
    return basis


def sylvester_rot(m: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Solve ``asym(m @ L) = m @ L + L @ m.T = r`` for skew ``L``.

    ``m`` is a rotation close to the identity, so the spectra of ``m`` and
    ``m.T`` never sum to zero.  The operator is assembled densely on the
    strict upper-triangle coordinates of sk(n).
    """
    m = _square(m)
    n = m.shape[0]
    if n > SYLVESTER_MAX_DIM:
        raise DimensionError(f"sylvester_rot supports n <= {SYLVESTER_MAX_DIM}, got {n}")
    if spectral_norm_upto(m - np.eye(n), 1.0) >= 1.0:
        raise IllConditioned("rotation coefficient is too far from the identity")
    basis = _skew_basis(n)
    iu = np.triu_indices(n, 1)
    images = m @ basis + basis @ m.T
    op = images[:, iu[0], iu[1]].T
    coords = np.linalg.solve(op, np.asarray(r, dtype=float)[iu])
    x = np.zeros((n, n))
    x[iu] = coords
    return x - x.T


def polar_fixes_identity(s: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff ``polar_project(I + s) == I``: ``s`` symmetric with spectrum above -1."""
    s = _square(s)
    if np.max(np.abs(s - s.T)) > tol * max(1.0, np.max(np.abs(s))):
        return False
    return bool(np.linalg.eigvalsh(symmetrize(s)).min() > -1.0)
