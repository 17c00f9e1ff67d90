"""Benchmark experiments: capacity sweeps, noise-basin profiles, timing.

Three experiments share one configuration type and one row schema:

* ``capacity`` -- fraction of stored patterns recalled perfectly from clean
  starts, as the storage load beta = P/N sweeps a grid.
* ``noise``    -- mean final overlap as a function of the initial overlap
  m0, probing the basin of attraction at a fixed load.
* ``timing``   -- wall-clock training time per rule and load, measured with
  the BLAS thread pool capped so rules compete on equal footing.

Every cell derives its own sub-seed from the root seed, so a run is fully
reproducible from its configuration alone, and rows always come out in the
same deterministic order (rule, then load, then m0 or trial).
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .learning import RULES, TrainConfig, train_rule
from .patterns import _atomic_write_text, corrupt, derive_seed, generate_patterns
from .recall import is_success, run

__all__ = [
    "SweepConfig",
    "ExperimentRow",
    "DEFAULT_BETA_GRID",
    "DEFAULT_NOISE_GRID",
    "DEFAULT_TIMING_GRID",
    "capacity_sweep",
    "noise_sweep",
    "timing_benchmark",
    "write_rows",
    "read_rows",
    "render_plot",
]

#: Load grid for capacity sweeps: 0.05 to 1.50 in steps of 0.05.
DEFAULT_BETA_GRID = tuple(round(0.05 * k, 10) for k in range(1, 31))

#: Initial-overlap grid for noise sweeps: 0.0 to 1.0 in steps of 0.05.
DEFAULT_NOISE_GRID = tuple(round(0.05 * k, 10) for k in range(0, 21))

#: Load grid for the timing benchmark.
DEFAULT_TIMING_GRID = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class SweepConfig:
    """Shared experiment configuration.

    ``trials`` means independent pattern-set draws per cell for capacity
    sweeps and repeated timed runs per cell for the timing benchmark; noise
    sweeps instead use ``noise_trials_per_pattern`` corrupted starts per
    stored pattern.  ``threads`` caps the BLAS thread pool (timing defaults
    to 1 when unset; other experiments leave the pool alone).  With
    ``shared_patterns=True`` every rule sees identical pattern draws per
    cell, trading independence for lower comparison variance.
    """

    n: int = 500
    rules: tuple = RULES
    beta_grid: tuple = DEFAULT_BETA_GRID
    trials: int = 1
    noise_grid: tuple = DEFAULT_NOISE_GRID
    noise_trials_per_pattern: int = 10
    t_max: int = 25
    success_threshold: float = 0.95
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    threads: int | None = None
    shared_patterns: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.rules:
            raise ValueError("rules must be non-empty")
        for rule in self.rules:
            if rule not in RULES:
                raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
        if not self.beta_grid:
            raise ValueError("beta_grid must be non-empty")
        for beta in self.beta_grid:
            if not beta > 0.0:
                raise ValueError(f"beta values must be > 0, got {beta}")
            if math.floor(beta * self.n) < 1:
                raise ValueError(
                    f"beta={beta} gives floor(beta*n)=0 patterns at n={self.n}"
                )
        for m0 in self.noise_grid:
            if not 0.0 <= m0 <= 1.0:
                raise ValueError(f"noise grid values must be in [0, 1], got {m0}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.noise_trials_per_pattern < 1:
            raise ValueError(
                f"noise_trials_per_pattern must be >= 1, got {self.noise_trials_per_pattern}"
            )
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if not 0.0 < self.success_threshold <= 1.0:
            raise ValueError(
                f"success_threshold must be in (0, 1], got {self.success_threshold}"
            )
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be >= 1 when set, got {self.threads}")


@dataclass(frozen=True)
class ExperimentRow:
    """One output row; which optional fields are set depends on the experiment."""

    experiment: str
    rule: str
    n: int
    beta: float
    seed: int
    p: int | None = None
    success_rate: float | None = None
    m0: float | None = None
    mean_final_overlap: float | None = None
    std_final_overlap: float | None = None
    trials: int | None = None
    trial: str | None = None
    learn_seconds: float | None = None
    threads: int | None = None


def _ordered_rules(rules):
    """Requested rules in canonical order, deduplicated."""
    seen = []
    for rule in RULES:
        if rule in rules and rule not in seen:
            seen.append(rule)
    return tuple(seen)


def _pattern_tag(cfg, rule):
    return "shared" if cfg.shared_patterns else rule


def capacity_sweep(cfg):
    """Recall success rate from clean starts across the load grid.

    For each (rule, beta) cell and each draw, stores P = floor(beta*n) fresh
    patterns, starts recall at every stored pattern, and reports the fraction
    whose final overlap exceeds the success threshold.  Returns one row per
    (rule, beta, draw) with the cell's derived seed.
    """
    rows = []
    for rule in _ordered_rules(cfg.rules):
        for beta in sorted(cfg.beta_grid):
            p = math.floor(beta * cfg.n)
            for draw in range(cfg.trials):
                sub = derive_seed(cfg.seed, "capacity", _pattern_tag(cfg, rule), p, draw)
                pats = generate_patterns(cfg.n, p, sub)
                model = train_rule(rule, pats, cfg.train)
                wins = 0
                for mu in range(p):
                    trace = run(model, pats.data[mu], pats.data[mu], cfg.t_max)
                    if is_success(trace, cfg.success_threshold):
                        wins += 1
                rows.append(
                    ExperimentRow(
                        experiment="capacity",
                        rule=rule,
                        n=cfg.n,
                        beta=beta,
                        p=p,
                        success_rate=wins / p,
                        seed=sub,
                    )
                )
    return rows


def noise_sweep(cfg):
    """Mean final overlap versus initial overlap at one fixed load.

    Requires a single-entry ``beta_grid``.  Each rule trains once on its
    pattern draw; every (m0, pattern, trial) triple then gets an
    independently corrupted start with exactly round(n*(1-m0)/2) flipped
    coordinates.  Rows report mean and population standard deviation of the
    final overlap over all P * noise_trials_per_pattern runs.
    """
    if len(cfg.beta_grid) != 1:
        raise ValueError(
            f"noise_sweep needs exactly one beta, got {len(cfg.beta_grid)}"
        )
    beta = cfg.beta_grid[0]
    p = math.floor(beta * cfg.n)
    rows = []
    for rule in _ordered_rules(cfg.rules):
        tag = _pattern_tag(cfg, rule)
        train_seed = derive_seed(cfg.seed, "noise", tag, p)
        pats = generate_patterns(cfg.n, p, train_seed)
        model = train_rule(rule, pats, cfg.train)
        for j, m0 in enumerate(sorted(cfg.noise_grid)):
            finals = []
            for mu in range(p):
                for trial in range(cfg.noise_trials_per_pattern):
                    flip_seed = derive_seed(cfg.seed, "noise", tag, p, j, mu, trial)
                    start = corrupt(pats.data[mu], m0, flip_seed)
                    trace = run(model, start, pats.data[mu], cfg.t_max)
                    finals.append(trace.final_overlap)
            rows.append(
                ExperimentRow(
                    experiment="noise",
                    rule=rule,
                    n=cfg.n,
                    beta=beta,
                    m0=m0,
                    mean_final_overlap=float(np.mean(finals)),
                    std_final_overlap=float(np.std(finals)),
                    trials=len(finals),
                    seed=train_seed,
                )
            )
    return rows


def timing_benchmark(cfg):
    """Wall-clock training time per rule across the load grid.

    Only the iterative and closed-form regression rules are meaningful here;
    the Hebbian rule is rejected.  The BLAS pool is capped at ``threads``
    (default 1) for the whole benchmark so measurements are comparable across
    machines.  Each rule gets one untimed warm-up call; each cell then times
    ``trials`` complete training calls on fresh patterns with
    ``time.perf_counter``.  Per-trial rows are followed by mean and std
    summary rows (trial column ``mean`` / ``std``).
    """
    timeable = tuple(r for r in RULES if r != "hebbian")
    for rule in cfg.rules:
        if rule not in timeable:
            raise ValueError(
                f"timing_benchmark supports rules {timeable}, got {rule!r}"
            )
    threads = cfg.threads if cfg.threads is not None else 1
    grid = sorted(cfg.beta_grid)
    rows = []
    with threadpool_limits(limits=threads):
        for rule in _ordered_rules(cfg.rules):
            warm_p = math.floor(grid[0] * cfg.n)
            warm_seed = derive_seed(cfg.seed, "timing", rule, "warmup")
            train_rule(rule, generate_patterns(cfg.n, warm_p, warm_seed), cfg.train)
            for beta in grid:
                p = math.floor(beta * cfg.n)
                cell_seed = derive_seed(cfg.seed, "timing", rule, p)
                durations = []
                for trial in range(cfg.trials):
                    sub = derive_seed(cfg.seed, "timing", rule, p, trial)
                    pats = generate_patterns(cfg.n, p, sub)
                    t0 = time.perf_counter()
                    train_rule(rule, pats, cfg.train)
                    elapsed = time.perf_counter() - t0
                    durations.append(elapsed)
                    rows.append(
                        ExperimentRow(
                            experiment="timing",
                            rule=rule,
                            n=cfg.n,
                            beta=beta,
                            p=p,
                            trial=str(trial),
                            learn_seconds=elapsed,
                            threads=threads,
                            seed=sub,
                        )
                    )
                for label, value in (
                    ("mean", float(np.mean(durations))),
                    ("std", float(np.std(durations))),
                ):
                    rows.append(
                        ExperimentRow(
                            experiment="timing",
                            rule=rule,
                            n=cfg.n,
                            beta=beta,
                            p=p,
                            trial=label,
                            learn_seconds=value,
                            threads=threads,
                            seed=cell_seed,
                        )
                    )
    return rows


_SCHEMAS = {
    "capacity": ("experiment", "rule", "n", "beta", "p", "success_rate", "seed"),
    "noise": (
        "experiment",
        "rule",
        "n",
        "beta",
        "m0",
        "mean_final_overlap",
        "std_final_overlap",
        "trials",
        "seed",
    ),
    "timing": (
        "experiment",
        "rule",
        "n",
        "beta",
        "p",
        "trial",
        "learn_seconds",
        "threads",
        "seed",
    ),
}

_INT_COLUMNS = {"n", "p", "trials", "threads", "seed"}
_FLOAT_COLUMNS = {
    "beta",
    "success_rate",
    "m0",
    "mean_final_overlap",
    "std_final_overlap",
    "learn_seconds",
}


def _trial_order(trial):
    if trial == "mean":
        return (1, 0)
    if trial == "std":
        return (2, 0)
    return (0, int(trial))


def _row_sort_key(row):
    third = 0.0
    fourth = (0, 0)
    if row.experiment == "noise":
        third = row.m0
    elif row.experiment == "timing":
        fourth = _trial_order(row.trial)
    return (RULES.index(row.rule), row.beta, third, fourth)


def _cell_text(value):
    if value is None:
        raise ValueError("row is missing a value required by its schema")
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(rows, path, experiment=None):
    """Write rows as CSV with the fixed per-experiment schema.

    All rows must belong to one experiment; pass ``experiment`` explicitly to
    write a header-only file for an empty row list.  Output is deterministic:
    rows are sorted by (rule, beta, m0-or-trial), floats use the shortest
    round-trip repr, and the file is written atomically with LF line endings.
    """
    kinds = {row.experiment for row in rows}
    if len(kinds) > 1:
        raise ValueError(f"rows mix experiments: {sorted(kinds)}")
    if kinds:
        experiment = kinds.pop()
    if experiment not in _SCHEMAS:
        raise ValueError(f"unknown experiment {experiment!r}")
    header = _SCHEMAS[experiment]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in sorted(rows, key=_row_sort_key):
        writer.writerow([_cell_text(getattr(row, col)) for col in header])
    _atomic_write_text(path, buffer.getvalue())


def read_rows(path):
    """Parse a CSV written by :func:`write_rows` back into rows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError("empty CSV file") from None
        experiment = next(
            (name for name, schema in _SCHEMAS.items() if schema == header), None
        )
        if experiment is None:
            raise ValueError(f"unrecognized CSV header {header}")
        rows = []
        for record in reader:
            if not record:
                continue
            kwargs = {}
            for col, text in zip(header, record):
                if col in _INT_COLUMNS:
                    kwargs[col] = int(text)
                elif col in _FLOAT_COLUMNS:
                    kwargs[col] = float(text)
                else:
                    kwargs[col] = text
            rows.append(ExperimentRow(**kwargs))
    return rows


def render_plot(rows, path):
    """Render one experiment's rows as a static plot (format from the suffix).

    Capacity: success rate vs load, y fixed to [0, 1].  Noise: mean final
    overlap vs initial overlap.  Timing: mean learning time vs load on a log
    scale (summary rows only).  Raises ValueError for empty or mixed input.
    """
    kinds = {row.experiment for row in rows}
    if not kinds:
        raise ValueError("no rows to plot")
    if len(kinds) > 1:
        raise ValueError(f"rows mix experiments: {sorted(kinds)}")
    experiment = kinds.pop()

    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for rule in _ordered_rules({row.rule for row in rows}):
        if experiment == "capacity":
            cells = {}
            for row in rows:
                if row.rule == rule:
                    cells.setdefault(row.beta, []).append(row.success_rate)
            xs = sorted(cells)
            ax.plot(xs, [float(np.mean(cells[b])) for b in xs], marker="o", label=rule)
        elif experiment == "noise":
            pts = sorted(
                (row.m0, row.mean_final_overlap) for row in rows if row.rule == rule
            )
            ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o", label=rule)
        else:
            pts = sorted(
                (row.beta, row.learn_seconds)
                for row in rows
                if row.rule == rule and row.trial == "mean"
            )
            ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o", label=rule)

    if experiment == "capacity":
        ax.set_xlabel("storage load beta = P/N")
        ax.set_ylabel("recall success rate")
        ax.set_ylim(-0.02, 1.02)
    elif experiment == "noise":
        ax.set_xlabel("initial overlap m0")
        ax.set_ylabel("mean final overlap")
        ax.set_ylim(-0.05, 1.05)
    else:
        ax.set_xlabel("storage load beta = P/N")
        ax.set_ylabel("training time (s)")
        ax.set_yscale("log")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()

    suffix = os.path.splitext(path)[1].lstrip(".").lower() or "svg"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fig.savefig(fh, format=suffix)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)
