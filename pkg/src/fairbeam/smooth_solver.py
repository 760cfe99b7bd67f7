"""Low-complexity smoothed max-min solver.

The solver maximizes ``min_k log(1+SINR_k) + delta * min_m log(1+SCNR_m)``
over the per-antenna power set by alternating closed-form blocks:

1. softmin weights over users/targets (log-sum-exp smoothing of the min),
2. auxiliary ratio/beam variables that make a concave surrogate tight,
3. an MMSE-style receive combiner,
4. a few minorize-maximize ascent steps on the precoder, each one a
   boundary projection of a linearized objective.

Every block is a dense-linear-algebra closed form, so one outer iteration
costs O(M L_r^3 + I_w K L_t^2).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .kernels import (
    DegenerateInputError,
    dominant_eigenvalue,
    hermitian_solve,
    project_per_antenna,
)
from .metrics import (
    Beamformers,
    _comm_products,
    _sensing_products,
    evaluate,
    scnr_vector,
    sinr_vector,
)
from .scene import Scene, SystemConfig, steering_vector
from .trace import RunTrace

__all__ = [
    "SolverOptions",
    "AuxState",
    "WSubproblem",
    "initial_beamformers",
    "surrogate_terms",
    "softmin_weights",
    "update_aux",
    "update_combiner",
    "build_w_subproblem",
    "update_precoder",
    "solve_smooth",
]


@dataclass
class SolverOptions:
    """Knobs of the smoothed solver.

    ``mu`` controls how sharply the softmin concentrates on the worst
    user/target; ``mu_growth > 1`` enables a geometric warm-up capped at
    ``mu_max``. ``inner_w`` is the number of precoder ascent steps per
    outer iteration. ``z_damping`` averages each softmin update with the
    previous weights (1 = undamped); the default 0.5 suppresses the
    period-two weight/beam limit cycle that pure softmin updates can
    settle into near user ties.
    """

    mu: float = 10.0
    outer_max: int = 500
    inner_w: int = 5
    tol: float = 1e-5
    w_init: str = "matched"
    f_init: str = "steering"
    mu_growth: float = 1.0
    mu_max: float = 1e6
    z_damping: float = 0.5

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ValueError("mu must be strictly positive")
        if self.inner_w < 1:
            raise ValueError("inner_w must be at least 1")
        if self.outer_max < 1:
            raise ValueError("outer_max must be at least 1")
        if not 0.0 < self.z_damping <= 1.0:
            raise ValueError("z_damping must lie in (0, 1]")

    def mu_at(self, iteration: int) -> float:
        """Smoothing parameter for a given 0-based outer iteration."""
        if self.mu_growth == 1.0:
            return self.mu
        return min(self.mu_max, self.mu * self.mu_growth**iteration)


@dataclass
class AuxState:
    """Softmin weights plus the auxiliary variables of the surrogate.

    ``z_c``/``z_s`` live on the probability simplex; ``xi`` holds the
    current ratio estimates and ``theta`` the beam-alignment variables
    (one scalar per user, one length-K row per target).
    """

    z_c: np.ndarray
    z_s: np.ndarray
    xi_c: np.ndarray
    xi_s: np.ndarray
    theta_c: np.ndarray
    theta_s: np.ndarray


class StalledAuxiliaryError(RuntimeError):
    """Raised when every beam-alignment variable of a target vanished
    (only reachable from an all-zero precoder)."""


def initial_beamformers(
    scene: Scene, p_tx: float, w_init: str = "matched", f_init: str = "steering"
) -> Beamformers:
    """Feasible nonzero starting point shared by both solvers.

    The precoder starts from the conjugate user channels pushed onto the
    per-antenna power boundary; the combiner points one receive beam at
    each target.
    """
    if w_init != "matched":
        raise ValueError(f"unknown precoder initialization {w_init!r}")
    if f_init != "steering":
        raise ValueError(f"unknown combiner initialization {f_init!r}")
    w = project_per_antenna(scene.h.copy(), p_tx, mode="boundary")
    f = np.empty((scene.n_rx, scene.n_targets), dtype=complex)
    for m, resp in enumerate(r for r in scene.responses if not r.is_clutter):
        f[:, m] = steering_vector(resp.angle, scene.n_rx)
    return Beamformers(w=w, f=f)


def update_aux(
    scene: Scene,
    bf: Beamformers,
    z_c: np.ndarray | None = None,
    z_s: np.ndarray | None = None,
) -> AuxState:
    """Closed-form auxiliary update that makes the surrogate tight.

    The ratio estimates become the current SINR/SCNR values and the beam
    variables their optimally aligned first-order solutions. Softmin
    weights are carried through unchanged (uniform when not supplied).
    """
    hw, t_c = _comm_products(scene, bf.w)
    direct = np.diagonal(hw)
    sig_c = np.abs(direct) ** 2
    xi_c = sig_c / (t_c - sig_c)
    theta_c = np.sqrt(1.0 + xi_c) * direct / t_c

    v, t_s = _sensing_products(scene, bf.f, bf.w)
    m_idx = np.arange(bf.f.shape[1])
    own = v[m_idx, m_idx, :]
    sig_s = np.sum(np.abs(own) ** 2, axis=1)
    xi_s = sig_s / (t_s - sig_s)
    theta_s = np.sqrt(1.0 + xi_s)[:, None] * own / t_s[:, None]

    k, m = scene.n_users, bf.f.shape[1]
    return AuxState(
        z_c=np.full(k, 1.0 / k) if z_c is None else z_c,
        z_s=np.full(m, 1.0 / m) if z_s is None else z_s,
        xi_c=xi_c,
        xi_s=xi_s,
        theta_c=theta_c,
        theta_s=theta_s,
    )


def surrogate_terms(
    scene: Scene, bf: Beamformers, aux: AuxState
) -> tuple[np.ndarray, np.ndarray]:
    """Per-user and per-target values of the concave surrogate.

    Immediately after :func:`update_aux` these equal ``log(1+SINR_k)`` and
    ``log(1+SCNR_m)``; for other auxiliaries they lower-bound those rates.
    """
    hw, t_c = _comm_products(scene, bf.w)
    direct = np.diagonal(hw)
    f_c = (
        np.log1p(aux.xi_c)
        + 2.0 * np.sqrt(1.0 + aux.xi_c) * np.real(direct * aux.theta_c.conj())
        - np.abs(aux.theta_c) ** 2 * t_c
        - aux.xi_c
    )

    v, t_s = _sensing_products(scene, bf.f, bf.w)
    m_idx = np.arange(bf.f.shape[1])
    own = v[m_idx, m_idx, :]
    cross = np.real(np.sum(own * aux.theta_s.conj(), axis=1))
    f_s = (
        np.log1p(aux.xi_s)
        + 2.0 * np.sqrt(1.0 + aux.xi_s) * cross
        - np.sum(np.abs(aux.theta_s) ** 2, axis=1) * t_s
        - aux.xi_s
    )
    return f_c, f_s


def softmin_weights(
    f_c: np.ndarray, f_s: np.ndarray, mu: float
) -> tuple[np.ndarray, np.ndarray]:
    """Softmin simplex weights ``exp(-mu f) / sum exp(-mu f)``.

    Computed with max-subtraction so arbitrarily large ``mu`` saturates to
    a one-hot argmin instead of overflowing.
    """
    if not mu > 0.0:
        raise ValueError("mu must be strictly positive")

    def _softmin(f: np.ndarray) -> np.ndarray:
        logits = -mu * np.asarray(f, dtype=float)
        logits -= np.max(logits)
        e = np.exp(logits)
        return e / np.sum(e)

    return _softmin(f_c), _softmin(f_s)


def weighted_surrogate(
    scene: Scene, bf: Beamformers, aux: AuxState, delta: float
) -> float:
    """Softmin-weighted surrogate value used for convergence checks."""
    f_c, f_s = surrogate_terms(scene, bf, aux)
    return float(aux.z_c @ f_c + delta * (aux.z_s @ f_s))


def update_combiner(scene: Scene, bf: Beamformers, aux: AuxState) -> np.ndarray:
    """Closed-form receive combiner given the auxiliary variables.

    Each column solves the same whitened system (all echo covariances plus
    receiver noise), so a single Cholesky factorization serves every
    target.
    """
    theta_norm2 = np.sum(np.abs(aux.theta_s) ** 2, axis=1)
    if np.any(theta_norm2 == 0.0):
        raise StalledAuxiliaryError(
            "beam-alignment variables vanished; combiner update undefined"
        )
    gw = scene.g_stack @ bf.w  # (J, n_rx, K)
    cov = np.einsum("jrk,jsk->rs", gw, gw.conj())
    cov += scene.n_rx * scene.sigma2_s * np.eye(scene.n_rx)
    m = bf.f.shape[1]
    rhs = np.empty((scene.n_rx, m), dtype=complex)
    for i in range(m):
        rhs[:, i] = gw[i] @ aux.theta_s[i].conj()
    scale = np.sqrt(1.0 + aux.xi_s) / theta_norm2
    return hermitian_solve(cov, rhs) * scale[None, :]


@dataclass
class WSubproblem:
    """Quadratic precoder subproblem ``max 2 Re tr(W C) - tr(W W^H A)``.

    The communications side enters through per-user diagonal weights, the
    sensing side through an assembled linear block and a PSD quadratic
    block; ``linear()`` and ``quad()`` give the combined C and A.
    """

    comm_lin: np.ndarray    # (K,) per-user linear weights
    comm_quad: np.ndarray   # (K,) per-user quadratic weights, real >= 0
    sens_lin: np.ndarray    # (K, n_tx)
    sens_quad: np.ndarray   # (n_tx, n_tx) Hermitian PSD
    h: np.ndarray           # (n_tx, K) user channels

    def linear(self) -> np.ndarray:
        return self.comm_lin.conj()[:, None] * self.h.conj().T + self.sens_lin

    def quad(self) -> np.ndarray:
        a = (self.h * self.comm_quad[None, :]) @ self.h.conj().T + self.sens_quad
        return 0.5 * (a + a.conj().T)

    def objective(self, w: np.ndarray) -> float:
        c = self.linear()
        a = self.quad()
        lin = 2.0 * np.real(np.sum(w * c.T))
        quad = np.real(np.sum(w.conj() * (a @ w)))
        return float(lin - quad)


def build_w_subproblem(
    scene: Scene, aux: AuxState, f: np.ndarray, delta: float
) -> WSubproblem:
    """Assemble the precoder subproblem for fixed weights and auxiliaries."""
    k, n_tx = scene.n_users, scene.n_tx
    comm_lin = aux.z_c * np.sqrt(1.0 + aux.xi_c) * aux.theta_c
    comm_quad = aux.z_c * np.abs(aux.theta_c) ** 2

    if delta == 0.0:
        sens_lin = np.zeros((k, n_tx), dtype=complex)
        sens_quad = np.zeros((n_tx, n_tx), dtype=complex)
    else:
        fg = np.einsum("rm,jrt->mjt", f.conj(), scene.g_stack)  # (M, J, n_tx)
        m_idx = np.arange(f.shape[1])
        own_rows = fg[m_idx, m_idx, :]  # (M, n_tx), rows f_m^H G_m
        c_lin = delta * aux.z_s * np.sqrt(1.0 + aux.xi_s)
        sens_lin = np.einsum("m,mk,mt->kt", c_lin, aux.theta_s.conj(), own_rows)
        c_quad = delta * aux.z_s * np.sum(np.abs(aux.theta_s) ** 2, axis=1)
        sens_quad = np.einsum("m,mjt,mju->tu", c_quad, fg.conj(), fg)

    return WSubproblem(
        comm_lin=comm_lin,
        comm_quad=comm_quad,
        sens_lin=sens_lin,
        sens_quad=sens_quad,
        h=scene.h,
    )


def update_precoder(
    scene: Scene,
    aux: AuxState,
    bf: Beamformers,
    delta: float,
    inner_w: int,
    p_tx: float,
) -> np.ndarray:
    """Minorize-maximize ascent on the precoder subproblem.

    Each step linearizes the quadratic term around the current point with
    the dominant-eigenvalue shift and lands the maximizer of the resulting
    linear objective on the per-antenna power boundary. The subproblem
    objective is non-decreasing along the steps for boundary iterates.
    """
    sub = build_w_subproblem(scene, aux, bf.f, delta)
    c_h = sub.linear().conj().T  # (n_tx, K)
    a = sub.quad()
    # tiny inflation keeps the shifted quadratic PSD against estimator error,
    # so the ascent property survives a marginal eigenvalue underestimate
    lam = dominant_eigenvalue(a) * (1.0 + 1e-6)  # fixed within the outer iteration
    w = bf.w
    for _ in range(inner_w):
        b = c_h + lam * w - a @ w
        try:
            w = project_per_antenna(b, p_tx, mode="boundary")
        except DegenerateInputError as exc:
            raise DegenerateInputError(
                "precoder ascent produced a zero antenna row"
            ) from exc
    return w


def solve_smooth(
    scene: Scene, config: SystemConfig, options: SolverOptions | None = None
) -> tuple[Beamformers, RunTrace]:
    """Run the smoothed max-min solver on one scene.

    Stops when the softmin-weighted surrogate changes by less than ``tol``
    relatively, or at ``outer_max`` iterations (reported via
    ``trace.converged``). The returned beamformers are the best iterate
    under the true weighted min-SINR/min-SCNR objective, which guards
    against softmin oscillation near ties.
    """
    opts = options or SolverOptions()
    delta = config.delta
    bf = initial_beamformers(scene, config.p_tx, opts.w_init, opts.f_init)
    aux = update_aux(scene, bf)  # tight start: first softmin sees log(1+ratio)
    trace = RunTrace(solver="smooth")
    best_obj = -math.inf
    best_bf = bf
    z_c = aux.z_c
    z_s = aux.z_s
    rho = opts.z_damping
    prev = None

    for it in range(opts.outer_max):
        t0 = time.perf_counter()
        # weight the currently worst user/target: evaluate the softmin on
        # the tight surrogate values log(1+ratio) at the current iterate
        # (the stale-auxiliary values can gap by hundreds of nats and
        # collapse the weights to an oscillating vertex)
        f_c = np.log1p(sinr_vector(scene, bf))
        f_s = np.log1p(scnr_vector(scene, bf))
        z_c_new, z_s_new = softmin_weights(f_c, f_s, opts.mu_at(it))
        z_c = (1.0 - rho) * z_c + rho * z_c_new
        z_s = (1.0 - rho) * z_s + rho * z_s_new
        aux = update_aux(scene, bf, z_c, z_s)
        bf = Beamformers(w=bf.w, f=update_combiner(scene, bf, aux))
        w = update_precoder(scene, aux, bf, delta, opts.inner_w, config.p_tx)
        bf = Beamformers(w=w, f=bf.f)

        surr = weighted_surrogate(scene, bf, aux, delta)
        report = evaluate(scene, bf, delta)
        trace.append(surr, report, time.perf_counter() - t0)

        if report.objective_linear > best_obj:
            best_obj = report.objective_linear
            best_bf = Beamformers(w=bf.w.copy(), f=bf.f.copy())
            trace.best_iteration = it
        if prev is not None and abs(surr - prev) <= opts.tol * max(abs(prev), 1e-12):
            trace.converged = True
            break
        prev = surr

    return best_bf, trace
