"""Problem instances: reproducible generation, validation, and file I/O.

An instance of the competitive location problem consists of demand points
(each with a buying power), existing competitor facilities, cluster
facilities (selling a different product, visited on multipurpose trips),
and optionally some pre-existing facilities that already belong to the
chain being expanded.

All randomness comes from a multiplicative congruential generator with
modulus 1,000,000, so instances are reproducible from small integer seeds
on any platform.  Each entity class (demand coordinates, buying powers,
competitor coordinates, ...) consumes its own independent stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

LCG_MODULUS = 1_000_000
DEFAULT_MULTIPLIER = 314_227

# Documented default seeds, one stream per entity class.  Any run that does
# not override them is reproducible end to end.
DEFAULT_SEED = 97_531


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""


@dataclass(frozen=True)
class LcgState:
    """State of the multiplicative congruential generator r' = theta*r mod 10^6.

    The state is a value: advancing it returns a new ``LcgState`` and never
    mutates the old one, so states can be shared freely across threads.
    """

    r: int
    theta: int = DEFAULT_MULTIPLIER

    def __post_init__(self) -> None:
        if not isinstance(self.r, int) or not isinstance(self.theta, int):
            raise ValueError("LCG state requires integer r and theta")
        if not 1 <= self.r <= LCG_MODULUS - 1:
            raise ValueError(f"seed r={self.r} outside [1, {LCG_MODULUS - 1}]")
        if self.r % 5 == 0:
            raise ValueError(f"seed r={self.r} must not be divisible by 5")
        if self.theta % 2 == 0:
            raise ValueError(f"multiplier theta={self.theta} must be odd")
        if self.theta % 5 == 0:
            raise ValueError(f"multiplier theta={self.theta} must not be divisible by 5")


def lcg_next(state: LcgState) -> LcgState:
    """Advance the generator one step.

    Exact integer arithmetic: the intermediate product theta*r is a Python
    int, so it cannot overflow.  The successor of a valid state is always
    valid (theta and r stay coprime to 5 and the residue never hits 0).
    """
    return LcgState(r=(state.theta * state.r) % LCG_MODULUS, theta=state.theta)


def lcg_uniform(state: LcgState, a: float, b: float) -> tuple[float, LcgState]:
    """Draw one number in (a, b) using the current r, then advance the state.

    Returns ``(x, next_state)`` with x = a + (b - a) * r / 10^6.
    """
    if not a < b:
        raise ValueError(f"invalid range: a={a} must be < b={b}")
    x = a + (b - a) * (state.r / LCG_MODULUS)
    return x, lcg_next(state)


class LcgStream:
    """Small stateful wrapper around the pure LCG operations."""

    def __init__(self, seed: int | LcgState, theta: int = DEFAULT_MULTIPLIER):
        self.state = seed if isinstance(seed, LcgState) else LcgState(r=seed, theta=theta)

    def uniform(self, a: float, b: float) -> float:
        x, self.state = lcg_uniform(self.state, a, b)
        return x


@dataclass(frozen=True)
class DemandPoint:
    x: float
    y: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("demand point coordinates must be finite")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError(f"buying power must be positive, got b={self.b}")


@dataclass(frozen=True)
class CompetitorFacility:
    x: float
    y: float
    a: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("competitor coordinates must be finite")
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"competitor attractiveness must be positive, got a={self.a}")


@dataclass(frozen=True)
class ClusterFacility:
    x: float
    y: float
    a: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("cluster coordinates must be finite")
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"cluster attractiveness must be positive, got a={self.a}")


@dataclass(frozen=True)
class ChainFacility:
    """A facility of the chain: either pre-existing (fixed) or newly placed."""

    x: float
    y: float
    a: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("chain facility coordinates must be finite")
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"chain facility attractiveness must be positive, got a={self.a}")


@dataclass
class Instance:
    """A problem instance.

    Immutable after construction (treat it as read-only; the cached numpy
    views are created lazily and shared).  Equality is field-for-field and
    exact, which is what the file round-trip guarantee is stated against.
    """

    demand: tuple[DemandPoint, ...]
    competitors: tuple[CompetitorFacility, ...]
    clusters: tuple[ClusterFacility, ...]
    fixed_chain: tuple[ChainFacility, ...] = ()

    def __post_init__(self) -> None:
        self.demand = tuple(self.demand)
        self.competitors = tuple(self.competitors)
        self.clusters = tuple(self.clusters)
        self.fixed_chain = tuple(self.fixed_chain)
        if not self.demand:
            raise ValueError("instance needs at least one demand point")
        if not self.competitors and not self.fixed_chain:
            raise ValueError(
                "instance needs at least one competitor when there are no "
                "fixed chain facilities (market shares are degenerate otherwise)"
            )

    @property
    def n(self) -> int:
        return len(self.demand)

    @cached_property
    def total_buying_power(self) -> float:
        return math.fsum(d.b for d in self.demand)

    @cached_property
    def demand_xy(self) -> np.ndarray:
        return _freeze(np.array([(d.x, d.y) for d in self.demand], dtype=float))

    @cached_property
    def buying_power(self) -> np.ndarray:
        return _freeze(np.array([d.b for d in self.demand], dtype=float))

    @cached_property
    def competitor_xy(self) -> np.ndarray:
        return _freeze(np.array([(c.x, c.y) for c in self.competitors], dtype=float).reshape(-1, 2))

    @cached_property
    def competitor_a(self) -> np.ndarray:
        return _freeze(np.array([c.a for c in self.competitors], dtype=float))

    @cached_property
    def cluster_xy(self) -> np.ndarray:
        return _freeze(np.array([(c.x, c.y) for c in self.clusters], dtype=float).reshape(-1, 2))

    @cached_property
    def cluster_a(self) -> np.ndarray:
        return _freeze(np.array([c.a for c in self.clusters], dtype=float))

    @cached_property
    def fixed_chain_xy(self) -> np.ndarray:
        return _freeze(np.array([(c.x, c.y) for c in self.fixed_chain], dtype=float).reshape(-1, 2))

    @cached_property
    def fixed_chain_a(self) -> np.ndarray:
        return _freeze(np.array([c.a for c in self.fixed_chain], dtype=float))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SeedSet:
    """One LCG seed per generated entity class."""

    demand_xy: int = 97_531
    demand_b: int = 86_421
    competitor_xy: int = 13_579
    competitor_a: int = 24_681
    cluster_xy: int = 36_913
    cluster_a: int = 47_291

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            LcgState(r=value)  # validates range / divisibility

    @classmethod
    def derive(cls, base: int) -> "SeedSet":
        """Derive the six class seeds deterministically from one base seed."""
        state = LcgState(r=base)
        values = []
        for _ in range(6):
            state = lcg_next(state)
            values.append(state.r)
        return cls(*values)


DEFAULT_SEEDS = SeedSet()


@dataclass(frozen=True)
class GeneratorConfig:
    """Ranges and counts for the built-in instance family.

    Coordinates are uniform on the square, matching the convention of
    dividing the raw LCG value by 100,000 to land in [0, 10].  Buying power
    and attractiveness ranges are this artifact's documented choices; the
    original benchmark values can be reproduced exactly only by loading
    externally supplied instance files.
    """

    n_competitors: int = 10
    n_clusters: int = 10
    coord_range: tuple[float, float] = (0.0, 10.0)
    b_range: tuple[float, float] = (0.0, 2.0)
    attractiveness_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self) -> None:
        if self.n_competitors < 1:
            raise ValueError("need at least one competitor")
        if self.n_clusters < 0:
            raise ValueError("cluster count cannot be negative")
        for name in ("coord_range", "b_range", "attractiveness_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy lo < hi, got ({lo}, {hi})")
        if self.b_range[0] < 0:
            raise ValueError("buying power range must be non-negative")
        if self.attractiveness_range[0] < 0:
            raise ValueError("attractiveness range must be non-negative")


def _draw_points(stream: LcgStream, count: int, coord_range: tuple[float, float]) -> list[tuple[float, float]]:
    # x then y per point, consuming the stream pairwise
    lo, hi = coord_range
    points = []
    for _ in range(count):
        x = stream.uniform(lo, hi)
        y = stream.uniform(lo, hi)
        points.append((x, y))
    return points


def generate_instance(
    n: int,
    seeds: SeedSet = DEFAULT_SEEDS,
    config: GeneratorConfig = GeneratorConfig(),
) -> Instance:
    """Generate a reproducible instance with ``n`` demand points.

    Pure function of its arguments: the same (n, seeds, config) always
    yields the identical instance, field for field.
    """
    if n < 1:
        raise ValueError("n must be at least 1")

    demand_pts = _draw_points(LcgStream(seeds.demand_xy), n, config.coord_range)
    b_stream = LcgStream(seeds.demand_b)
    demand = tuple(
        DemandPoint(x, y, b_stream.uniform(*config.b_range)) for (x, y) in demand_pts
    )

    comp_pts = _draw_points(LcgStream(seeds.competitor_xy), config.n_competitors, config.coord_range)
    comp_a = LcgStream(seeds.competitor_a)
    competitors = tuple(
        CompetitorFacility(x, y, comp_a.uniform(*config.attractiveness_range)) for (x, y) in comp_pts
    )

    clus_pts = _draw_points(LcgStream(seeds.cluster_xy), config.n_clusters, config.coord_range)
    clus_a = LcgStream(seeds.cluster_a)
    clusters = tuple(
        ClusterFacility(x, y, clus_a.uniform(*config.attractiveness_range)) for (x, y) in clus_pts
    )

    return Instance(demand=demand, competitors=competitors, clusters=clusters)


# ---------------------------------------------------------------------------
# File format: sectioned CSV.
#
#   DEMAND        -> records x,y,b
#   COMPETITORS   -> records x,y,a
#   CLUSTERS      -> records x,y,a
#   FIXED_CHAIN   -> records x,y,a
#
# Floats are written with repr(), which round-trips exactly, so
# read_instance(write_instance(I)) == I holds bitwise.

_SECTIONS = ("DEMAND", "COMPETITORS", "CLUSTERS", "FIXED_CHAIN")
_HEADERS = {"DEMAND": "x,y,b", "COMPETITORS": "x,y,a", "CLUSTERS": "x,y,a", "FIXED_CHAIN": "x,y,a"}


def write_instance(instance: Instance, path: str | Path) -> None:
    lines = []
    for section, rows in (
        ("DEMAND", [(d.x, d.y, d.b) for d in instance.demand]),
        ("COMPETITORS", [(c.x, c.y, c.a) for c in instance.competitors]),
        ("CLUSTERS", [(c.x, c.y, c.a) for c in instance.clusters]),
        ("FIXED_CHAIN", [(c.x, c.y, c.a) for c in instance.fixed_chain]),
    ):
        lines.append(section)
        lines.append(_HEADERS[section])
        for row in rows:
            lines.append(",".join(repr(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_instance(path: str | Path) -> Instance:
    """Read an instance file, raising errors that name the offending line."""
    path = Path(path)
    sections: dict[str, list[tuple[float, float, float]]] = {s: [] for s in _SECTIONS}
    current: str | None = None
    expect_header = False

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in _SECTIONS:
            current = line
            expect_header = True
            continue
        if current is None:
            raise InstanceFormatError(f"{path}:{lineno}: expected a section header, got {line!r}")
        if expect_header:
            expect_header = False
            if line == _HEADERS[current]:
                continue
            # header row is optional; fall through and parse as a record
        fields = line.split(",")
        if len(fields) != 3:
            raise InstanceFormatError(
                f"{path}:{lineno}: expected 3 comma-separated fields in {current}, got {len(fields)}"
            )
        names = _HEADERS[current].split(",")
        values = []
        for name, text in zip(names, fields):
            try:
                values.append(float(text))
            except ValueError:
                raise InstanceFormatError(
                    f"{path}:{lineno}: field {name!r} of {current} is not a number: {text!r}"
                ) from None
        sections[current].append(tuple(values))

    if current is None:
        raise InstanceFormatError(f"{path}: file contains no sections")

    def build(section, cls):
        out = []
        for i, row in enumerate(sections[section]):
            try:
                out.append(cls(*row))
            except ValueError as exc:
                raise ValueError(f"{path}: {section} record {i + 1}: {exc}") from None
        return tuple(out)

    return Instance(
        demand=build("DEMAND", DemandPoint),
        competitors=build("COMPETITORS", CompetitorFacility),
        clusters=build("CLUSTERS", ClusterFacility),
        fixed_chain=build("FIXED_CHAIN", ChainFacility),
    )
