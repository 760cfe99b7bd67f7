"""Fractional-programming baseline with an internal epigraph solver.

Alternating optimization over the quadratic-transform auxiliaries, the
receive combiner, and the precoder. The auxiliary and combiner blocks are
closed forms; the precoder block (a max of minima of concave quadratics
over the per-antenna power set) is solved by projected supergradient
ascent with best-iterate averaging, warm-started from the previous
precoder so every full round is non-decreasing in the true objective.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import hermitian_solve, project_per_antenna
from .metrics import Beamformers, _comm_products, _sensing_products, evaluate
from .scene import Scene, SystemConfig
from .smooth_solver import initial_beamformers
from .trace import RunTrace

__all__ = [
    "BetaState",
    "EpigraphOptions",
    "FPOptions",
    "update_beta",
    "update_combiner_fp",
    "solve_w_epigraph",
    "solve_fp",
]


@dataclass
class BetaState:
    """Quadratic-transform auxiliaries: one scalar per user, one length-K
    row per target."""

    beta_c: np.ndarray
    beta_s: np.ndarray


@dataclass
class EpigraphOptions:
    """Projected supergradient settings for the precoder block.

    The step at iteration t is ``step0 * sqrt(p_tx/n_tx) / ||g_1|| / sqrt(t)``
    where ``g_1`` is the supergradient at the warm start.
    """

    step0: float = 0.1
    iters: int = 300
    averaging: str = "best-iterate"

    def __post_init__(self) -> None:
        if not self.step0 > 0.0:
            raise ValueError("step0 must be strictly positive")
        if self.iters < 1:
            raise ValueError("iters must be at least 1")
        if self.averaging != "best-iterate":
            raise ValueError(f"unknown averaging rule {self.averaging!r}")


@dataclass
class FPOptions:
    """Outer alternating-optimization settings."""

    outer_max: int = 100
    tol: float = 1e-5
    epigraph: EpigraphOptions = field(default_factory=EpigraphOptions)
    w_init: str = "matched"
    f_init: str = "steering"


def update_beta(scene: Scene, bf: Beamformers) -> BetaState:
    """Closed-form auxiliaries; substituting them back reproduces the
    SINR/SCNR values exactly (the transform is tight at its optimum)."""
    hw, t_c = _comm_products(scene, bf.w)
    direct = np.diagonal(hw)
    beta_c = direct / (t_c - np.abs(direct) ** 2)

    v, t_s = _sensing_products(scene, bf.f, bf.w)
    m_idx = np.arange(bf.f.shape[1])
    own = v[m_idx, m_idx, :]
    own_power = np.sum(np.abs(own) ** 2, axis=1)
    beta_s = own / (t_s - own_power)[:, None]
    return BetaState(beta_c=beta_c, beta_s=beta_s)


def update_combiner_fp(scene: Scene, w: np.ndarray, beta: BetaState) -> np.ndarray:
    """Per-target MMSE-style combiner maximizing the quadratic-transform
    surrogate (and therefore the SCNR) for fixed auxiliaries."""
    gw = scene.g_stack @ w  # (J, n_rx, K)
    cov_all = np.einsum("jrk,jsk->rs", gw, gw.conj())
    noise = scene.n_rx * scene.sigma2_s * np.eye(scene.n_rx)
    m = beta.beta_s.shape[0]
    f = np.empty((scene.n_rx, m), dtype=complex)
    for i in range(m):
        own_cov = gw[i] @ gw[i].conj().T
        rhs = gw[i] @ beta.beta_s[i].conj()
        norm2 = float(np.sum(np.abs(beta.beta_s[i]) ** 2))
        scale = 1.0 / norm2 if norm2 > 0.0 else 0.0
        f[:, i] = scale * hermitian_solve(cov_all - own_cov + noise, rhs)
    return f


class _WObjective:
    """Evaluates the per-user/per-target concave quadratics and their
    supergradient for fixed auxiliaries and combiner."""

    def __init__(self, scene: Scene, beta: BetaState, f: np.ndarray, delta: float):
        self.h = scene.h
        self.sigma2_c = scene.sigma2_c
        self.delta = delta
        self.beta_c = beta.beta_c
        self.beta_s = beta.beta_s
        self.beta_s_norm2 = np.sum(np.abs(beta.beta_s) ** 2, axis=1)
        # fg[m, j, :] = f_m^H G_j, fixed for the whole block solve
        self.fg = np.einsum("rm,jrt->mjt", f.conj(), scene.g_stack)
        self.noise_s = scene.n_rx * scene.sigma2_s * np.sum(np.abs(f) ** 2, axis=0)
        self.m_idx = np.arange(f.shape[1])

    def values(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
        hw = self.h.conj().T @ w
        direct = np.diagonal(hw)
        interf = np.sum(np.abs(hw) ** 2, axis=1) - np.abs(direct) ** 2 + self.sigma2_c
        q_c = 2.0 * np.real(self.beta_c.conj() * direct) - np.abs(self.beta_c) ** 2 * interf

        v = self.fg @ w  # (M, J, K)
        p = np.sum(np.abs(v) ** 2, axis=2)
        own = v[self.m_idx, self.m_idx, :]
        own_p = p[self.m_idx, self.m_idx]
        cross = np.real(np.sum(own * self.beta_s.conj(), axis=1))
        q_s = 2.0 * cross - self.beta_s_norm2 * (p.sum(axis=1) - own_p + self.noise_s)
        return q_c, q_s, {"hw": hw, "v": v}

    def objective(self, q_c: np.ndarray, q_s: np.ndarray) -> float:
        value = float(np.min(q_c))
        if self.delta > 0.0:
            value += self.delta * float(np.min(q_s))
        return value

    def supergradient(
        self, q_c: np.ndarray, q_s: np.ndarray, cache: dict
    ) -> np.ndarray:
        k = int(np.argmin(q_c))
        h_k = self.h[:, k]
        grad = -np.abs(self.beta_c[k]) ** 2 * np.outer(h_k, cache["hw"][k, :])
        grad[:, k] = self.beta_c[k] * h_k
        if self.delta > 0.0:
            m = int(np.argmin(q_s))
            fg_m = self.fg[m]
            v_m = cache["v"][m]
            quad = np.einsum("jt,jk->tk", fg_m.conj(), v_m)
            quad -= np.outer(fg_m[m].conj(), v_m[m])
            grad_s = np.outer(fg_m[m].conj(), self.beta_s[m]) - self.beta_s_norm2[m] * quad
            grad = grad + self.delta * grad_s
        return grad


def solve_w_epigraph(
    scene: Scene,
    beta: BetaState,
    f: np.ndarray,
    delta: float,
    opts: EpigraphOptions,
    w_start: np.ndarray,
    p_tx: float,
) -> np.ndarray:
    """Projected supergradient ascent on ``min_k q_ck + delta * min_m q_sm``.

    The active user/target picks the supergradient (lowest index on ties,
    via argmin), steps decay as ``1/sqrt(t)``, and the best iterate under
    the block objective is returned, so the result never falls below the
    warm start.
    """
    obj = _WObjective(scene, beta, f, delta)
    w = w_start
    q_c, q_s, cache = obj.values(w)
    best_value = obj.objective(q_c, q_s)
    best_w = w
    grad = obj.supergradient(q_c, q_s, cache)
    grad_norm = np.linalg.norm(grad)
    if grad_norm == 0.0:
        return best_w
    base_step = opts.step0 * math.sqrt(p_tx / scene.n_tx) / grad_norm
    for t in range(1, opts.iters + 1):
        w = project_per_antenna(w + (base_step / math.sqrt(t)) * grad, p_tx, mode="euclidean")
        q_c, q_s, cache = obj.values(w)
        value = obj.objective(q_c, q_s)
        if value > best_value:
            best_value = value
            best_w = w
        if t < opts.iters:
            grad = obj.supergradient(q_c, q_s, cache)
    return best_w


def solve_fp(
    scene: Scene, config: SystemConfig, options: FPOptions | None = None
) -> tuple[Beamformers, RunTrace]:
    """Run the alternating-optimization baseline on one scene.

    The trace's surrogate column equals the true objective (the transform
    is evaluated at tight auxiliaries once per round). Stops on relative
    objective change below ``tol`` or at the round cap.
    """
    opts = options or FPOptions()
    delta = config.delta
    bf = initial_beamformers(scene, config.p_tx, opts.w_init, opts.f_init)
    trace = RunTrace(solver="fp")
    best_obj = -math.inf
    best_bf = bf
    prev = None

    for _ in range(opts.outer_max):
        t0 = time.perf_counter()
        beta = update_beta(scene, bf)
        f_new = update_combiner_fp(scene, bf.w, beta)
        w_new = solve_w_epigraph(
            scene, beta, f_new, delta, opts.epigraph, bf.w, config.p_tx
        )
        bf = Beamformers(w=w_new, f=f_new)

        report = evaluate(scene, bf, delta)
        obj = report.objective_linear
        trace.append(obj, report, time.perf_counter() - t0)

        if obj > best_obj:
            best_obj = obj
            best_bf = Beamformers(w=bf.w.copy(), f=bf.f.copy())
            trace.best_iteration = len(trace) - 1
        if prev is not None and abs(obj - prev) <= opts.tol * max(abs(prev), 1e-12):
            trace.converged = True
            break
        prev = obj

    return best_bf, trace
