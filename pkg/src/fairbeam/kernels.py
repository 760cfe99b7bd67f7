"""Dense complex-matrix primitives shared by both solvers."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

__all__ = [
    "KernelError",
    "SingularMatrixError",
    "DegenerateInputError",
    "ConvergenceError",
    "hermitian_solve",
    "dominant_eigenvalue",
    "project_per_antenna",
    "trace_quadratic_bound",
]


class KernelError(Exception):
    """Base class for kernel failures."""


class SingularMatrixError(KernelError):
    """A factorization found the matrix singular or indefinite."""


class DegenerateInputError(KernelError):
    """An input left the operation without a well-defined result."""


class ConvergenceError(KernelError):
    """An iterative kernel failed its residual guard."""


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian positive-definite ``a`` via Cholesky."""
    try:
        factor = scipy.linalg.cho_factor(a, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Cholesky factorization failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def dominant_eigenvalue(
    a: np.ndarray, tol: float = 1e-8, max_iter: int = 500
) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix.

    Power iteration from a fixed pseudo-random start runs until the
    Rayleigh quotient changes by less than ``tol`` relatively, then the
    eigenpair residual ``||a v - lam v|| <= 1e-5 * lam`` certifies the
    estimate. When two leading eigenvalues are too close for the residual
    to certify within the iteration cap, the value is recomputed exactly
    with a dense symmetric eigensolver. The zero matrix returns 0.
    """
    n = a.shape[0]
    scale = np.linalg.norm(a, "fro")
    if scale == 0.0:
        return 0.0
    # fixed seed keeps solves bit-reproducible while avoiding structured
    # starts that could be orthogonal to the dominant eigenspace
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = float(np.real(v.conj() @ (a @ v)))
    for _ in range(max_iter):
        av = a @ v
        nrm = np.linalg.norm(av)
        if nrm == 0.0:
            # start vector fell in the null space; re-randomize
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v /= np.linalg.norm(v)
            lam = float(np.real(v.conj() @ (a @ v)))
            continue
        v = av / nrm
        lam_new = float(np.real(v.conj() @ (a @ v)))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            lam = lam_new
            break
        lam = lam_new
    residual = np.linalg.norm(a @ v - lam * v)
    if residual <= 1e-5 * max(lam, 1e-300):
        return max(lam, 0.0)
    try:
        exact = scipy.linalg.eigh(
            a, eigvals_only=True, subset_by_index=[n - 1, n - 1], check_finite=False
        )
    except scipy.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"power iteration residual {residual:.3e} exceeds 1e-5 * {lam:.3e} "
            f"and the dense fallback failed: {exc}"
        ) from exc
    return max(float(exact[0]), 0.0)


def _row_norms(s: np.ndarray) -> np.ndarray:
    # scale before squaring: |entries| near 1e-200 would otherwise underflow
    # to exact zero norms and masquerade as degenerate rows
    peak = np.max(np.abs(s))
    if peak == 0.0 or not np.isfinite(peak):
        return np.linalg.norm(s, axis=1)
    return peak * np.linalg.norm(s / peak, axis=1)


def project_per_antenna(s: np.ndarray, p_tx: float, mode: str = "euclidean") -> np.ndarray:
    """Map a precoder onto the per-antenna power set ``sum_k |w[i,k]|^2 <= p_tx/n_tx``.

    ``euclidean``
        True Euclidean projection: rows above the cap are shrunk onto it,
        feasible rows pass through unchanged (idempotent).
    ``boundary``
        Every row is rescaled to sit exactly on the cap; this is the
        maximizer of a row-separable linear objective over the set, which
        is what the precoder ascent step needs. Zero rows are rejected.
    ``literal``
        Compatibility variant scaling row i by ``r / ||s_i||^2`` instead of
        ``r / ||s_i||``; it reaches the power boundary only for unit-norm
        rows and exists purely for A/B experiments.
    """
    if not p_tx > 0.0:
        raise ValueError(f"p_tx must be strictly positive, got {p_tx!r}")
    n_tx = s.shape[0]
    r = math.sqrt(p_tx / n_tx)
    norms = _row_norms(s)
    if mode == "euclidean":
        safe = np.where(norms > 0.0, norms, 1.0)
        scale = np.minimum(1.0, r / safe)
    elif mode in ("boundary", "literal"):
        if np.any(norms == 0.0):
            raise DegenerateInputError(f"{mode} projection is undefined for zero rows")
        scale = r / norms if mode == "boundary" else r / norms**2
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    return s * scale[:, None]


def trace_quadratic_bound(
    w: np.ndarray, p: np.ndarray, a: np.ndarray
) -> tuple[float, float]:
    """Exact value and linear minorizer of ``tr(W W^H A)`` around ``P``.

    For Hermitian PSD ``a`` the quadratic trace dominates its
    linearization, ``2 Re tr(P W^H A) - tr(P P^H A)``, with equality
    exactly at ``W = P``. Returns ``(exact, minorizer)``.
    """
    aw = a @ w
    ap = a @ p
    exact = float(np.real(np.sum(w.conj() * aw)))
    minorizer = float(2.0 * np.real(np.sum(w.conj() * ap)) - np.real(np.sum(p.conj() * ap)))
    return exact, minorizer
