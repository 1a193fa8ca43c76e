"""Experiment grid runner: tables, results CSV, and location dumps.

A grid cell is one (n, p, pi, decay) combination.  Cells are solved with
the multistart optimizer and collected into ResultRecords; the records
render as one proportion table per (n, decay) with rows p and columns pi,
plus a machine-readable CSV.  Desk-scale defaults (n up to 2000, 20
starts) keep a full default grid in the minutes range on one core.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .instance import Instance, generate_instance, read_instance
from .market import (
    ChainLayout,
    DecayModel,
    EXPONENTIAL,
    POWER,
    TripMix,
    competitor_constants,
)
from .optimizer import OptimizerConfig, multistart_optimize

RESULTS_HEADER = ("n", "p", "pi", "decay", "lambda", "proportion", "total_share", "starts", "minutes")
LOCATIONS_HEADER = ("class", "x", "y", "weight")

DEFAULT_N_VALUES = (100, 200, 500, 1000, 2000)
DEFAULT_P_VALUES = (1, 2, 3, 4, 5, 10, 15, 20)
DEFAULT_PI_VALUES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class ExperimentGrid:
    """The experiment design: which cells to run and how."""

    n_values: tuple[int, ...] = DEFAULT_N_VALUES
    p_values: tuple[int, ...] = DEFAULT_P_VALUES
    pi_values: tuple[float, ...] = DEFAULT_PI_VALUES
    decay_kinds: tuple[str, ...] = (POWER, EXPONENTIAL)
    exp_lambda: float = 1.0
    attractiveness: float = 1.0
    optimizer: OptimizerConfig = field(default_factory=lambda: OptimizerConfig(starts=20))
    instance_dir: str | None = None  # load n<k>.csv from here instead of generating

    def __post_init__(self) -> None:
        if not (self.n_values and self.p_values and self.pi_values and self.decay_kinds):
            raise ValueError("grid axes must be non-empty")
        if any(pi < 0 or pi > 1 for pi in self.pi_values):
            raise ValueError("pi values must lie in [0, 1]")
        for kind in self.decay_kinds:
            if kind not in (POWER, EXPONENTIAL):
                raise ValueError(f"unknown decay kind {kind!r}")


@dataclass
class ResultRecord:
    n: int
    p: int
    pi: float
    decay: str
    lam: float
    proportion: float
    total_share: float
    starts: int
    minutes: float
    layout: ChainLayout | None = None


@dataclass
class CellFailure:
    n: int
    p: int
    pi: float
    decay: str
    error: str


def grid_instance(grid: ExperimentGrid, n: int) -> Instance:
    if grid.instance_dir is not None:
        return read_instance(Path(grid.instance_dir) / f"n{n}.csv")
    return generate_instance(n)


def _decay_for(grid: ExperimentGrid, kind: str, instance: Instance) -> DecayModel:
    if kind == POWER:
        return DecayModel.power(instance)
    return DecayModel.exponential(grid.exp_lambda)


def run_cell(
    grid: ExperimentGrid,
    n: int,
    p: int,
    pi: float,
    kind: str,
    instance: Instance | None = None,
    constants=None,
) -> ResultRecord:
    """Solve one grid cell and record the result with wall-clock timing."""
    if instance is None:
        instance = grid_instance(grid, n)
    decay = _decay_for(grid, kind, instance)
    if constants is None:
        constants = competitor_constants(instance, decay)
    started = time.perf_counter()
    solution = multistart_optimize(
        instance,
        p,
        decay,
        TripMix(pi),
        config=grid.optimizer,
        constants=constants,
        attractiveness=grid.attractiveness,
    )
    minutes = (time.perf_counter() - started) / 60.0
    return ResultRecord(
        n=n,
        p=p,
        pi=pi,
        decay=kind,
        lam=decay.lam,
        proportion=solution.value / instance.total_buying_power,
        total_share=solution.value,
        starts=grid.optimizer.starts,
        minutes=minutes,
        layout=solution.layout,
    )


def _cell_task(grid: ExperimentGrid, n: int, p: int, pi: float, kind: str):
    try:
        return run_cell(grid, n, p, pi, kind)
    except (OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        return CellFailure(n, p, pi, kind, str(exc))


def run_grid(
    grid: ExperimentGrid,
    progress=None,
    parallel_cells: int = 1,
) -> tuple[list[ResultRecord], list[CellFailure]]:
    """Run every cell of the grid in a fixed (n, decay, p, pi) order.

    A cell whose instance cannot be obtained or whose solve fails is
    recorded as a CellFailure and the run continues.  With
    ``parallel_cells > 1`` cells run in worker processes; each cell is
    deterministic on its own and results are collected in grid order, so
    the records are identical to a sequential run (timings aside).
    """
    cells = [
        (n, kind, p, pi)
        for n in grid.n_values
        for kind in grid.decay_kinds
        for p in grid.p_values
        for pi in grid.pi_values
    ]
    records: list[ResultRecord] = []
    failures: list[CellFailure] = []

    if parallel_cells > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=parallel_cells) as pool:
            futures = [
                pool.submit(_cell_task, grid, n, p, pi, kind)
                for (n, kind, p, pi) in cells
            ]
            for future in futures:
                result = future.result()
                if isinstance(result, CellFailure):
                    failures.append(result)
                else:
                    records.append(result)
                    if progress is not None:
                        progress(result)
        return records, failures

    instance = None
    instance_n = None
    instance_error = None
    constants_cache: dict[str, object] = {}
    for (n, kind, p, pi) in cells:
        if n != instance_n:
            instance_n = n
            constants_cache.clear()
            instance_error = None
            try:
                instance = grid_instance(grid, n)
            except (OSError, ValueError) as exc:
                instance = None
                instance_error = str(exc)
        if instance is None:
            failures.append(CellFailure(n, p, pi, kind, instance_error))
            continue
        constants = constants_cache.get(kind)
        if constants is None:
            constants = competitor_constants(instance, _decay_for(grid, kind, instance))
            constants_cache[kind] = constants
        try:
            record = run_cell(grid, n, p, pi, kind, instance, constants)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            failures.append(CellFailure(n, p, pi, kind, str(exc)))
            continue
        records.append(record)
        if progress is not None:
            progress(record)
    return records, failures


# -- emission ----------------------------------------------------------------


def render_tables(records: list[ResultRecord]) -> str:
    """One table per (n, decay): proportions rounded to 5 decimals, then the
    wall-clock minutes for all starts.  Pure function of the record list."""
    groups: dict[tuple[int, str], list[ResultRecord]] = {}
    for rec in records:
        groups.setdefault((rec.n, rec.decay), []).append(rec)

    out = io.StringIO()
    for (n, kind) in sorted(groups, key=lambda key: (key[0], key[1])):
        recs = groups[(n, kind)]
        pis = sorted({rec.pi for rec in recs})
        ps = sorted({rec.p for rec in recs})
        starts = recs[0].starts
        cells = {(rec.p, rec.pi): rec for rec in recs}
        header = "p".ljust(4) + "".join(f"pi={pi:g}".rjust(10) for pi in pis)

        out.write(f"n={n}, {kind} decay: proportion of market share captured\n")
        out.write(header + "\n")
        for p in ps:
            row = str(p).ljust(4)
            for pi in pis:
                rec = cells.get((p, pi))
                row += (f"{rec.proportion:.5f}" if rec else "-").rjust(10)
            out.write(row + "\n")
        out.write(f"n={n}, {kind} decay: minutes for all {starts} starts\n")
        out.write(header + "\n")
        for p in ps:
            row = str(p).ljust(4)
            for pi in pis:
                rec = cells.get((p, pi))
                row += (f"{rec.minutes:.2f}" if rec else "-").rjust(10)
            out.write(row + "\n")
        out.write("\n")
    return out.getvalue()


def render_failures(failures: list[CellFailure]) -> str:
    if not failures:
        return ""
    out = io.StringIO()
    out.write(f"{len(failures)} cell(s) failed:\n")
    for f in failures:
        out.write(f"  n={f.n} p={f.p} pi={f.pi:g} decay={f.decay}: {f.error}\n")
    return out.getvalue()


def records_csv_text(records: list[ResultRecord]) -> str:
    """Machine-readable results; floats are written with full round-trip
    precision so re-ingestion reproduces the printed tables exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for rec in records:
        writer.writerow(
            [
                rec.n,
                rec.p,
                repr(rec.pi),
                rec.decay,
                repr(rec.lam),
                repr(rec.proportion),
                repr(rec.total_share),
                rec.starts,
                f"{rec.minutes:.6f}",
            ]
        )
    return buf.getvalue()


def write_records_csv(records: list[ResultRecord], path: str | Path) -> None:
    Path(path).write_text(records_csv_text(records), encoding="utf-8")


def read_records_csv(path: str | Path) -> list[ResultRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != RESULTS_HEADER:
            raise ValueError(f"unexpected results header: {header}")
        for row in reader:
            records.append(
                ResultRecord(
                    n=int(row[0]),
                    p=int(row[1]),
                    pi=float(row[2]),
                    decay=row[3],
                    lam=float(row[4]),
                    proportion=float(row[5]),
                    total_share=float(row[6]),
                    starts=int(row[7]),
                    minutes=float(row[8]),
                )
            )
    return records


def location_rows(instance: Instance, layout: ChainLayout) -> list[tuple[str, float, float, float]]:
    """Rows (entity class, x, y, weight) for external plotting."""
    rows = [("demand", d.x, d.y, d.b) for d in instance.demand]
    rows += [("competitor", c.x, c.y, c.a) for c in instance.competitors]
    rows += [("cluster", c.x, c.y, c.a) for c in instance.clusters]
    rows += [("new_facility", f.x, f.y, f.a) for f in layout.fixed + layout.variable]
    return rows


def write_locations_csv(instance: Instance, layout: ChainLayout, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOCATIONS_HEADER)
        for cls, x, y, w in location_rows(instance, layout):
            writer.writerow([cls, repr(x), repr(y), repr(w)])


def cluster_coincidences(instance: Instance, layout: ChainLayout, tol: float = 1e-3) -> int:
    """How many new facilities sit on a cluster (distance below ``tol``)."""
    count = 0
    for f in layout.variable:
        if any(math.hypot(f.x - c.x, f.y - c.y) < tol for c in instance.clusters):
            count += 1
    return count
