"""SINR/SCNR evaluation and objective bookkeeping for given beamformers.

All ratios are kept in linear scale internally; dB conversion happens only
at the reporting boundary via :func:`to_db`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import Scene

__all__ = [
    "Beamformers",
    "MetricsReport",
    "sinr",
    "sinr_vector",
    "scnr",
    "scnr_vector",
    "evaluate",
    "precoder_feasible",
    "to_db",
]


@dataclass
class Beamformers:
    """Transmit precoder ``w`` (n_tx x n_users) and receive combiner ``f``
    (n_rx x n_targets), one column per user / target."""

    w: np.ndarray
    f: np.ndarray


def precoder_feasible(w: np.ndarray, p_tx: float, tol: float = 1e-9) -> bool:
    """True when every antenna's power ``sum_k |w[i,k]|^2`` is within budget."""
    n_tx = w.shape[0]
    row_power = np.sum(np.abs(w) ** 2, axis=1)
    return bool(np.all(row_power <= p_tx / n_tx + tol))


def to_db(x) -> np.ndarray | float:
    """10*log10 with -inf for zero entries (reporting boundary only)."""
    arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def _comm_products(scene: Scene, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-user beam products and total received power.

    Returns ``hw`` with ``hw[k, j] = h_k^H w_j`` and the totals
    ``t[k] = sum_j |h_k^H w_j|^2 + sigma2_c``.
    """
    hw = scene.h.conj().T @ w
    t = np.sum(np.abs(hw) ** 2, axis=1) + scene.sigma2_c
    return hw, t


def _sensing_products(scene: Scene, f: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Combined echo products and total received power per target.

    Returns ``v`` with ``v[m, j, :] = f_m^H G_j W`` (a length-K row per
    echo source j) and ``t[m] = sum_j ||f_m^H G_j W||^2
    + n_rx * sigma2_s * ||f_m||^2``.
    """
    fg = np.einsum("rm,jrt->mjt", f.conj(), scene.g_stack)
    v = fg @ w
    noise = scene.n_rx * scene.sigma2_s * np.sum(np.abs(f) ** 2, axis=0)
    t = np.sum(np.abs(v) ** 2, axis=(1, 2)) + noise
    return v, t


def sinr_vector(scene: Scene, bf: Beamformers) -> np.ndarray:
    """Linear SINR of every user."""
    hw, t = _comm_products(scene, bf.w)
    signal = np.abs(np.diagonal(hw)) ** 2
    return signal / (t - signal)


def sinr(scene: Scene, bf: Beamformers, k: int) -> float:
    """Linear SINR of user ``k``: desired beam power over interference
    from the other beams plus noise."""
    if not 0 <= k < scene.n_users:
        raise IndexError(f"user index {k} out of range for {scene.n_users} users")
    return float(sinr_vector(scene, bf)[k])


def scnr_vector(scene: Scene, bf: Beamformers) -> np.ndarray:
    """Linear SCNR of every target."""
    v, t = _sensing_products(scene, bf.f, bf.w)
    m = np.arange(bf.f.shape[1])
    signal = np.sum(np.abs(v[m, m, :]) ** 2, axis=1)
    return signal / (t - signal)


def scnr(scene: Scene, bf: Beamformers, m: int) -> float:
    """Linear SCNR of target ``m``: own echo power over the echoes of all
    other sources (targets and clutter) plus receiver noise."""
    if not 0 <= m < scene.n_targets:
        raise IndexError(f"target index {m} out of range for {scene.n_targets} targets")
    return float(scnr_vector(scene, bf)[m])


@dataclass
class MetricsReport:
    """Per-user/per-target ratios plus both objective flavours."""

    sinr: np.ndarray
    scnr: np.ndarray
    min_sinr: float
    min_scnr: float
    objective_linear: float   # min SINR + delta * min SCNR
    objective_log: float      # min ln(1+SINR) + delta * min ln(1+SCNR)
    spread_sinr_db: float
    spread_scnr_db: float

    def csv_header(self) -> list[str]:
        k, m = len(self.sinr), len(self.scnr)
        return (
            [f"sinr_{i + 1}" for i in range(k)]
            + [f"scnr_{i + 1}" for i in range(m)]
            + ["min_sinr_db", "min_scnr_db", "obj_linear", "obj_log"]
        )

    def csv_row(self) -> list[float]:
        return (
            [float(x) for x in self.sinr]
            + [float(x) for x in self.scnr]
            + [to_db(self.min_sinr), to_db(self.min_scnr), self.objective_linear, self.objective_log]
        )


def _spread_db(values: np.ndarray) -> float:
    lo = float(np.min(values))
    if lo == 0.0:
        return math.inf
    return float(to_db(np.max(values)) - to_db(lo))


def evaluate(scene: Scene, bf: Beamformers, delta: float) -> MetricsReport:
    """Evaluate all fairness metrics and objectives for one beamformer pair."""
    s_c = sinr_vector(scene, bf)
    s_s = scnr_vector(scene, bf)
    min_c = float(np.min(s_c))
    min_s = float(np.min(s_s))
    return MetricsReport(
        sinr=s_c,
        scnr=s_s,
        min_sinr=min_c,
        min_scnr=min_s,
        objective_linear=min_c + delta * min_s,
        objective_log=float(np.min(np.log1p(s_c)) + delta * np.min(np.log1p(s_s))),
        spread_sinr_db=_spread_db(s_c),
        spread_scnr_db=_spread_db(s_s),
    )
