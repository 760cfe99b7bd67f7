"""Benchmark experiments: convergence traces, tradeoff region, user sweep,
fairness table, and timing comparison, emitted as CSV plus plot scripts.

Realization r of every experiment draws its scene from the derived seed
``derive_seed(master, r)``, so the experiments are paired across solvers,
sweep points, and experiment kinds. Realizations may run in parallel
(``FAIRBEAM_WORKERS`` processes); aggregation is always in realization
order, so serial and parallel runs emit identical results.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .fp_solver import FPOptions, solve_fp
from .metrics import evaluate, to_db
from .scene import SystemConfig, config_digest, derive_seed, generate_scene
from .smooth_solver import SolverOptions, solve_smooth

__all__ = [
    "ExperimentSpec",
    "run_convergence",
    "run_tradeoff",
    "run_user_sweep",
    "run_fairness_table",
    "run_timing",
    "run_experiment",
    "worker_count",
]

SOLVER_TOKENS = ("smooth", "fp")
DEFAULT_MU_VALUES = (1.0, 10.0, 100.0)
DEFAULT_DELTA_GRID = (0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e6)
DEFAULT_K_VALUES = (2, 4, 6, 8, 10, 12)
TIMING_DELTAS = (0.0, 1.0)
EXPERIMENT_KINDS = ("convergence", "tradeoff", "user_sweep", "fairness_table", "timing")


@dataclass
class ExperimentSpec:
    """One experiment request: the kind, the base configuration, the sweep
    values relevant to that kind, and the solver selection."""

    kind: str
    config: SystemConfig = field(default_factory=SystemConfig)
    mu_values: tuple = DEFAULT_MU_VALUES
    delta_values: tuple = DEFAULT_DELTA_GRID
    k_values: tuple = DEFAULT_K_VALUES
    n_realizations: int = 100
    solvers: str = "both"
    out_dir: Path = Path("results")
    smooth_options: SolverOptions | None = None
    fp_options: FPOptions | None = None

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if self.solvers not in ("smooth", "fp", "both"):
            raise ValueError(f"unknown solver selection {self.solvers!r}")
        if self.kind == "convergence" and self.solvers != "fp" and not self.mu_values:
            raise ValueError("convergence experiment needs a non-empty mu list")
        if self.kind == "tradeoff" and not self.delta_values:
            raise ValueError("tradeoff experiment needs a non-empty delta list")
        if self.kind in ("user_sweep", "timing") and not self.k_values:
            raise ValueError(f"{self.kind} experiment needs a non-empty user-count list")
        self.out_dir = Path(self.out_dir)

    @property
    def solver_list(self) -> tuple:
        return SOLVER_TOKENS if self.solvers == "both" else (self.solvers,)


def worker_count() -> int:
    """Process count for realization-level parallelism (env override)."""
    raw = os.environ.get("FAIRBEAM_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"FAIRBEAM_WORKERS must be an integer, got {raw!r}") from None


def _solve_task(task: tuple) -> dict:
    """Worker: generate the scene, run one solver, report metrics.

    Lives at module level so process pools can pickle it.
    """
    config, solver, smooth_opts, fp_opts, want_trace = task
    scene = generate_scene(config)
    t0 = time.perf_counter()
    if solver == "smooth":
        bf, trace = solve_smooth(scene, config, smooth_opts)
    else:
        bf, trace = solve_fp(scene, config, fp_opts)
    seconds = time.perf_counter() - t0
    report = evaluate(scene, bf, config.delta)
    out = {
        "min_sinr": report.min_sinr,
        "min_scnr": report.min_scnr,
        "sinr": np.asarray(report.sinr),
        "scnr": np.asarray(report.scnr),
        "seconds": seconds,
    }
    if want_trace:
        out["trace"] = {
            "surrogate": np.asarray(trace.surrogate),
            "obj_linear": np.asarray(trace.objective_linear),
            "min_sinr": trace.min_sinr(),
            "min_scnr": trace.min_scnr(),
        }
    return out


def _pmap(tasks: list) -> list:
    workers = worker_count()
    if workers <= 1 or len(tasks) <= 1:
        return [_solve_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        chunk = max(1, len(tasks) // (4 * workers))
        return list(ex.map(_solve_task, tasks, chunksize=chunk))


def _realization_configs(spec: ExperimentSpec, **overrides) -> list:
    master = spec.config.seed
    base = replace(spec.config, **overrides) if overrides else spec.config
    return [
        replace(base, seed=derive_seed(master, r)) for r in range(spec.n_realizations)
    ]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(spec: ExperimentSpec, name: str, header: list, rows: list) -> Path:
    path = spec.out_dir / name
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(x) for x in row])
            fh.write(
                f"# config={config_digest(spec.config)} "
                f"seed={spec.config.seed} version=fairbeam-{__version__}\n"
            )
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc
    return path


def _hold_last(arr: np.ndarray, n: int) -> np.ndarray:
    if len(arr) >= n:
        return arr[:n]
    return np.concatenate([arr, np.full(n - len(arr), arr[-1])])


def _conv_options(spec: ExperimentSpec, mu: float | None) -> tuple:
    """Fixed-length runs for averaging: early stopping disabled."""
    smooth = spec.smooth_options or SolverOptions(outer_max=200)
    if mu is not None:
        smooth = replace(smooth, mu=mu)
    smooth = replace(smooth, tol=0.0)
    fp = spec.fp_options or FPOptions()
    fp = replace(fp, tol=0.0)
    return smooth, fp


def run_convergence(spec: ExperimentSpec) -> list:
    """Iteration-vs-objective traces averaged over realizations, one CSV
    per (solver, mu) pair (the baseline has no smoothing parameter)."""
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    cells = []
    for solver in spec.solver_list:
        if solver == "smooth":
            cells.extend(("smooth", mu) for mu in spec.mu_values)
        else:
            cells.append(("fp", None))
    for solver, mu in cells:
        smooth_opts, fp_opts = _conv_options(spec, mu)
        tasks = [
            (cfg, solver, smooth_opts, fp_opts, True)
            for cfg in _realization_configs(spec)
        ]
        results = _pmap(tasks)
        n_iter = max(len(res["trace"]["surrogate"]) for res in results)
        cols = {key: [] for key in ("surrogate", "obj_linear", "min_sinr", "min_scnr")}
        for res in results:
            for key in cols:
                cols[key].append(_hold_last(res["trace"][key], n_iter))
        means = {key: np.mean(np.stack(vals), axis=0) for key, vals in cols.items()}
        rows = [
            [
                i + 1,
                means["surrogate"][i],
                means["obj_linear"][i],
                to_db(means["min_sinr"][i]),
                to_db(means["min_scnr"][i]),
            ]
            for i in range(n_iter)
        ]
        name = f"convergence_{solver}.csv" if mu is None else f"convergence_{solver}_mu{mu:g}.csv"
        written.append(
            _write_csv(
                spec,
                name,
                ["iteration", "surrogate", "obj_linear", "min_sinr_db", "min_scnr_db"],
                rows,
            )
        )
    written.append(_emit_plot_script(spec, "convergence", [p.name for p in written]))
    return written


def run_tradeoff(spec: ExperimentSpec) -> list:
    """Mean minimum SINR/SCNR per tradeoff weight, both solvers."""
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for solver in spec.solver_list:
        for delta in spec.delta_values:
            tasks = [
                (cfg, solver, spec.smooth_options, spec.fp_options, False)
                for cfg in _realization_configs(spec, delta=float(delta))
            ]
            results = _pmap(tasks)
            rows.append(
                [
                    solver,
                    float(delta),
                    to_db(float(np.mean([r["min_sinr"] for r in results]))),
                    to_db(float(np.mean([r["min_scnr"] for r in results]))),
                ]
            )
    path = _write_csv(
        spec, "tradeoff.csv", ["solver", "delta", "min_sinr_db", "min_scnr_db"], rows
    )
    return [path, _emit_plot_script(spec, "tradeoff", [path.name])]


def run_user_sweep(spec: ExperimentSpec) -> list:
    """Mean minimum SINR/SCNR and solve time versus the number of users."""
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    deltas = spec.delta_values if spec.delta_values else (1.0,)
    rows = []
    for solver in spec.solver_list:
        for delta in deltas:
            for k in spec.k_values:
                tasks = [
                    (cfg, solver, spec.smooth_options, spec.fp_options, False)
                    for cfg in _realization_configs(
                        spec, n_users=int(k), delta=float(delta)
                    )
                ]
                results = _pmap(tasks)
                rows.append(
                    [
                        solver,
                        int(k),
                        float(delta),
                        to_db(float(np.mean([r["min_sinr"] for r in results]))),
                        to_db(float(np.mean([r["min_scnr"] for r in results]))),
                        float(np.mean([r["seconds"] for r in results])),
                    ]
                )
    path = _write_csv(
        spec,
        "usersweep.csv",
        ["solver", "n_users", "delta", "min_sinr_db", "min_scnr_db", "mean_solve_s"],
        rows,
    )
    return [path, _emit_plot_script(spec, "user_sweep", [path.name])]


def run_fairness_table(spec: ExperimentSpec) -> list:
    """Per-user SINRs and per-target SCNRs (dB), averaged over realizations."""
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    k, m = spec.config.n_users, spec.config.n_targets
    header = (
        ["solver"]
        + [f"sinr_user_{i + 1}_db" for i in range(k)]
        + [f"scnr_target_{j + 1}_db" for j in range(m)]
        + ["min_sinr_db", "min_scnr_db", "spread_sinr_db"]
    )
    rows = []
    for solver in spec.solver_list:
        tasks = [
            (cfg, solver, spec.smooth_options, spec.fp_options, False)
            for cfg in _realization_configs(spec)
        ]
        results = _pmap(tasks)
        user_db = to_db(np.mean(np.stack([r["sinr"] for r in results]), axis=0))
        target_db = to_db(np.mean(np.stack([r["scnr"] for r in results]), axis=0))
        rows.append(
            [solver]
            + [float(x) for x in user_db]
            + [float(x) for x in target_db]
            + [
                to_db(float(np.mean([r["min_sinr"] for r in results]))),
                to_db(float(np.mean([r["min_scnr"] for r in results]))),
                float(np.max(user_db) - np.min(user_db)),
            ]
        )
    path = _write_csv(spec, "fairness.csv", header, rows)
    return [path, _emit_plot_script(spec, "fairness_table", [path.name])]


def run_timing(spec: ExperimentSpec) -> list:
    """Mean wall-clock per solve for the user sweep at both tradeoff
    weights. One warm-up solve per solver is run first and excluded."""
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    warm_cfg = replace(
        spec.config, n_users=int(min(spec.k_values)), seed=derive_seed(spec.config.seed, 0)
    )
    for solver in spec.solver_list:
        _solve_task((warm_cfg, solver, spec.smooth_options, spec.fp_options, False))
    rows = []
    for solver in spec.solver_list:
        for delta in TIMING_DELTAS:
            for k in spec.k_values:
                tasks = [
                    (cfg, solver, spec.smooth_options, spec.fp_options, False)
                    for cfg in _realization_configs(
                        spec, n_users=int(k), delta=float(delta)
                    )
                ]
                results = _pmap(tasks)
                rows.append(
                    [
                        solver,
                        int(k),
                        float(delta),
                        float(np.mean([r["seconds"] for r in results])),
                        spec.n_realizations,
                    ]
                )
    path = _write_csv(
        spec,
        "timing.csv",
        ["solver", "n_users", "delta", "mean_solve_s", "realizations"],
        rows,
    )
    return [path, _emit_plot_script(spec, "timing", [path.name])]


_RUNNERS = {
    "convergence": run_convergence,
    "tradeoff": run_tradeoff,
    "user_sweep": run_user_sweep,
    "fairness_table": run_fairness_table,
    "timing": run_timing,
}


def run_experiment(spec: ExperimentSpec) -> list:
    """Dispatch an experiment spec to its runner; returns written paths."""
    return _RUNNERS[spec.kind](spec)


_PLOT_HEADER = '''\
#!/usr/bin/env python3
"""Standalone plot script emitted alongside the CSV results."""
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read_csv(name):
    rows = []
    with open(HERE / name) as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        for row in reader:
            rows.append(dict(zip(header, row)))
    return rows


'''

_PLOT_BODIES = {
    "convergence": '''\
plt.figure(figsize=(6, 4))
for name in CSV_FILES:
    rows = read_csv(name)
    label = name.replace("convergence_", "").replace(".csv", "")
    plt.plot([int(r["iteration"]) for r in rows],
             [float(r["surrogate"]) for r in rows], label=label)
plt.xlabel("iteration")
plt.ylabel("surrogate objective")
plt.legend()
plt.grid(True)
plt.tight_layout()
plt.savefig(HERE / "convergence.png", dpi=150)
''',
    "tradeoff": '''\
rows = read_csv(CSV_FILES[0])
plt.figure(figsize=(6, 4))
for solver in sorted({r["solver"] for r in rows}):
    pts = [r for r in rows if r["solver"] == solver]
    plt.plot([float(r["min_scnr_db"]) for r in pts],
             [float(r["min_sinr_db"]) for r in pts], "o-", label=solver)
plt.xlabel("min SCNR [dB]")
plt.ylabel("min SINR [dB]")
plt.legend()
plt.grid(True)
plt.tight_layout()
plt.savefig(HERE / "tradeoff.png", dpi=150)
''',
    "user_sweep": '''\
rows = read_csv(CSV_FILES[0])
plt.figure(figsize=(6, 4))
for solver in sorted({r["solver"] for r in rows}):
    for delta in sorted({r["delta"] for r in rows}, key=float):
        pts = [r for r in rows if r["solver"] == solver and r["delta"] == delta]
        if not pts:
            continue
        ks = [int(r["n_users"]) for r in pts]
        plt.plot(ks, [float(r["min_sinr_db"]) for r in pts], "o-",
                 label=f"{solver} SINR, delta={delta}")
        plt.plot(ks, [float(r["min_scnr_db"]) for r in pts], "s--",
                 label=f"{solver} SCNR, delta={delta}")
plt.xlabel("number of users")
plt.ylabel("min SINR / SCNR [dB]")
plt.legend(fontsize=7)
plt.grid(True)
plt.tight_layout()
plt.savefig(HERE / "usersweep.png", dpi=150)
''',
    "fairness_table": '''\
rows = read_csv(CSV_FILES[0])
plt.figure(figsize=(6, 4))
labels = [c for c in rows[0] if c.endswith("_db") and ("user" in c or "target" in c)]
x = range(len(labels))
width = 0.8 / max(1, len(rows))
for i, row in enumerate(rows):
    plt.bar([xi + i * width for xi in x], [float(row[c]) for c in labels],
            width=width, label=row["solver"])
plt.xticks([xi + width / 2 for xi in x], labels, rotation=45, fontsize=7)
plt.ylabel("dB")
plt.legend()
plt.tight_layout()
plt.savefig(HERE / "fairness.png", dpi=150)
''',
    "timing": '''\
rows = read_csv(CSV_FILES[0])
plt.figure(figsize=(6, 4))
for solver in sorted({r["solver"] for r in rows}):
    for delta in sorted({r["delta"] for r in rows}, key=float):
        pts = [r for r in rows if r["solver"] == solver and r["delta"] == delta]
        if not pts:
            continue
        plt.semilogy([int(r["n_users"]) for r in pts],
                     [float(r["mean_solve_s"]) for r in pts], "o-",
                     label=f"{solver}, delta={delta}")
plt.xlabel("number of users")
plt.ylabel("mean solve time [s]")
plt.legend()
plt.grid(True)
plt.tight_layout()
plt.savefig(HERE / "timing.png", dpi=150)
''',
}

_PLOT_NAMES = {
    "convergence": "plot_convergence.py",
    "tradeoff": "plot_tradeoff.py",
    "user_sweep": "plot_usersweep.py",
    "fairness_table": "plot_fairness.py",
    "timing": "plot_timing.py",
}


def _emit_plot_script(spec: ExperimentSpec, kind: str, csv_names: list) -> Path:
    path = spec.out_dir / _PLOT_NAMES[kind]
    files = ", ".join(repr(n) for n in csv_names)
    body = _PLOT_HEADER + f"CSV_FILES = [{files}]\n\n" + _PLOT_BODIES[kind]
    try:
        path.write_text(body)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc
    return path
