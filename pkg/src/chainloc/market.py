"""Gravity-model market share captured by a chain of facilities.

A customer at demand point i splits between facilities in proportion to
attractiveness times a decreasing function of travel distance.  A fraction
``pi`` of trips are multipurpose: the customer also visits one cluster
facility (selling a different product) on the same tour, so the relevant
distance is the whole tour home -> facility -> cluster -> home.  The
remaining ``1 - pi`` of trips are single-purpose round trips.

Two decay families are supported:

* power decay with exponent 2, smoothed by an additive correction
  ``alpha * b_i`` inside the squared distances (alpha = 24 / total buying
  power), which removes the singularity at zero distance;
* exponential decay ``exp(-lam * d)`` applied to the tour length (the
  single-purpose round trip contributes ``exp(-2 lam d)``).

The competitor side of every denominator is independent of the chain
layout, so it is precomputed once per (instance, decay) as the constants
``c1`` (single-purpose) and ``c2`` (multipurpose) and reused across all
objective evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import exp_cols, power_cols, share_value
from .instance import ChainFacility, Instance

POWER = "power"
EXPONENTIAL = "exponential"

ALPHA_NUMERATOR = 24.0  # alpha = 24 / total buying power, power decay only


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Euclidean distance between two points (x, y)."""
    return math.dist(p, q)


@dataclass(frozen=True)
class DecayModel:
    """Distance decay specification.

    ``kind`` is "power" or "exponential".  Power decay is defined for
    ``lam == 2`` (the weights use squared distances directly) and requires
    the smoothing constant ``alpha``; exponential decay takes any
    ``lam > 0`` and no alpha.
    """

    kind: str
    lam: float
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (POWER, EXPONENTIAL):
            raise ValueError(f"unknown decay kind {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("decay parameter lam must be positive")
        if self.kind == POWER:
            if self.lam != 2.0:
                raise ValueError("power decay is implemented for lam=2 only")
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("power decay requires a positive alpha correction")
        elif self.alpha is not None:
            raise ValueError("alpha applies to power decay only")

    @classmethod
    def power(cls, instance: Instance) -> "DecayModel":
        """Power decay bound to ``instance``: alpha = 24 / total buying power."""
        total = instance.total_buying_power
        if not total > 0:
            raise ValueError("total buying power must be positive")
        return cls(kind=POWER, lam=2.0, alpha=ALPHA_NUMERATOR / total)

    @classmethod
    def exponential(cls, lam: float = 1.0) -> "DecayModel":
        return cls(kind=EXPONENTIAL, lam=lam)


@dataclass(frozen=True)
class TripMix:
    """Proportion of multipurpose trips, in [0, 1]."""

    pi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.pi <= 1.0:
            raise ValueError(f"pi must lie in [0, 1], got {self.pi}")


@dataclass(frozen=True)
class ChainLayout:
    """The chain's facilities: ``variable`` new ones plus ``fixed`` existing ones.

    Only the variable facilities move during optimization; fixed ones are the
    instance's pre-existing same-chain facilities and enter the chain weight
    identically.
    """

    variable: tuple[ChainFacility, ...]
    fixed: tuple[ChainFacility, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "variable", tuple(self.variable))
        object.__setattr__(self, "fixed", tuple(self.fixed))
        if not self.variable and not self.fixed:
            raise ValueError("chain layout must contain at least one facility")

    @classmethod
    def from_coords(
        cls,
        coords,
        attractiveness: float = 1.0,
        fixed: tuple[ChainFacility, ...] = (),
    ) -> "ChainLayout":
        """Build a layout from coordinates, one shared attractiveness value.

        ``coords`` is an (p, 2) array or a flat (x1, y1, x2, y2, ...) sequence.
        """
        pts = np.asarray(coords, dtype=float).reshape(-1, 2)
        return cls(
            variable=tuple(ChainFacility(float(x), float(y), attractiveness) for x, y in pts),
            fixed=fixed,
        )

    @property
    def p(self) -> int:
        return len(self.variable)

    def coords_flat(self) -> np.ndarray:
        return np.array([c for f in self.variable for c in (f.x, f.y)], dtype=float)

    def chain_xy(self) -> np.ndarray:
        return np.array(
            [(f.x, f.y) for f in self.variable + self.fixed], dtype=float
        ).reshape(-1, 2)

    def chain_a(self) -> np.ndarray:
        return np.array([f.a for f in self.variable + self.fixed], dtype=float)


@dataclass
class CompetitorConstants:
    """Per-demand-point competitor denominator mass, plus cached geometry.

    ``c1[i]`` is the competitors' single-purpose weight at demand point i and
    ``c2[i]`` their multipurpose weight (None when the instance has no
    clusters).  Both depend only on (instance, decay), never on the chain
    layout.  The private fields cache demand/cluster geometry so repeated
    share evaluations do not recompute it.
    """

    c1: np.ndarray
    c2: np.ndarray | None
    instance: Instance = field(repr=False)
    decay: DecayModel = field(repr=False)
    _alpha_b: np.ndarray | None = field(default=None, repr=False)
    _cluster_leg: np.ndarray | None = field(default=None, repr=False)

    def matches(self, instance: Instance, decay: DecayModel) -> bool:
        same_instance = self.instance is instance or self.instance == instance
        return same_instance and self.decay == decay


def _pairwise_d2(xy: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    dx = xy[:, 0][:, None] - px[None, :]
    dy = xy[:, 1][:, None] - py[None, :]
    return dx * dx + dy * dy


def competitor_constants(instance: Instance, decay: DecayModel) -> CompetitorConstants:
    """Precompute c1, c2 and cached geometry for one (instance, decay) pair."""
    n = instance.n
    comp_xy = instance.competitor_xy
    comp_a = instance.competitor_a
    clus_xy = instance.cluster_xy
    clus_a = instance.cluster_a
    has_clusters = len(instance.clusters) > 0

    if decay.kind == POWER:
        total_b = instance.total_buying_power
        if not total_b > 0:
            raise ValueError("power decay needs positive total buying power")
        expected = ALPHA_NUMERATOR / total_b
        if not math.isclose(decay.alpha, expected, rel_tol=1e-9):
            raise ValueError(
                f"decay alpha={decay.alpha} is not bound to this instance "
                f"(expected {expected})"
            )
        alpha_b = decay.alpha * instance.buying_power  # (n,)

        d2_comp = _pairwise_d2(instance.demand_xy, comp_xy[:, 0], comp_xy[:, 1])
        c1 = (comp_a[None, :] / (d2_comp + alpha_b[:, None])).sum(axis=1)

        cluster_leg = None
        c2 = None
        if has_clusters:
            d2_clus = _pairwise_d2(instance.demand_xy, clus_xy[:, 0], clus_xy[:, 1])
            cluster_leg = np.sqrt(alpha_b[:, None] + d2_clus)  # (n, p')
            if comp_xy.shape[0] > 0:
                comp_leg = np.sqrt(d2_comp + alpha_b[:, None])  # (n, p^)
                q_km = np.sqrt(_pairwise_d2(comp_xy, clus_xy[:, 0], clus_xy[:, 1]))  # (p^, p')
                den = comp_leg[:, :, None] + q_km[None, :, :] + cluster_leg[:, None, :]
                c2 = (
                    (comp_a[None, :, None] * clus_a[None, None, :]) / (den * den)
                ).sum(axis=(1, 2))
            else:
                c2 = np.zeros(n)
        return CompetitorConstants(
            c1=c1, c2=c2, instance=instance, decay=decay,
            _alpha_b=alpha_b, _cluster_leg=cluster_leg,
        )

    lam = decay.lam
    d_comp = np.sqrt(_pairwise_d2(instance.demand_xy, comp_xy[:, 0], comp_xy[:, 1]))
    c1 = (comp_a[None, :] * np.exp(-2.0 * lam * d_comp)).sum(axis=1)

    cluster_leg = None
    c2 = None
    if has_clusters:
        d_clus = np.sqrt(_pairwise_d2(instance.demand_xy, clus_xy[:, 0], clus_xy[:, 1]))
        cluster_leg = np.exp(-lam * d_clus)  # (n, p')
        if comp_xy.shape[0] > 0:
            q_km = np.sqrt(_pairwise_d2(comp_xy, clus_xy[:, 0], clus_xy[:, 1]))
            t_km = comp_a[:, None] * np.exp(-lam * q_km)  # (p^, p')
            inner = np.exp(-lam * d_comp) @ t_km  # (n, p')
            c2 = (inner * cluster_leg * clus_a[None, :]).sum(axis=1)
        else:
            c2 = np.zeros(n)
    return CompetitorConstants(
        c1=c1, c2=c2, instance=instance, decay=decay, _cluster_leg=cluster_leg,
    )


class _Evaluator:
    """Per-(instance, decay) evaluation engine.

    Produces the chain weight column of a single facility so that layouts
    can be evaluated facility by facility; the optimizer exploits this to
    move one facility at a time.  Computation order is fixed, so results
    are bit-stable run to run.
    """

    def __init__(self, constants: CompetitorConstants):
        inst = constants.instance
        decay = constants.decay
        self.kind = decay.kind
        self.lam = decay.lam
        self.b = inst.buying_power
        self.dx = inst.demand_xy[:, 0]
        self.dy = inst.demand_xy[:, 1]
        self.c1 = constants.c1
        self.c2 = constants.c2
        self.alpha_b = constants._alpha_b
        self.cluster_leg = constants._cluster_leg
        self.cluster_leg_t = None
        if self.kind == POWER and self.cluster_leg is not None:
            self.cluster_leg_t = np.ascontiguousarray(self.cluster_leg.T)
        self.cluster_x = inst.cluster_xy[:, 0] if len(inst.clusters) else None
        self.cluster_y = inst.cluster_xy[:, 1] if len(inst.clusters) else None
        self.cluster_a = inst.cluster_a if len(inst.clusters) else None
        self.total_b = inst.total_buying_power
        self._no_mp = np.empty(0)
        self._no_leg = np.empty((0, 0))

    def cols(self, x: float, y: float, a: float, want_mp: bool):
        """Weight columns (single-purpose, multipurpose) of one facility."""
        n = self.b.shape[0]
        sp = np.empty(n)
        mp = np.empty(n) if want_mp else None
        if self.kind == POWER:
            if want_mp:
                qx = self.cluster_x - x
                qy = self.cluster_y - y
                q = np.sqrt(qx * qx + qy * qy)
                power_cols(self.dx, self.dy, self.alpha_b, self.cluster_leg_t,
                           q, self.cluster_a, x, y, a, True, sp, mp)
            else:
                power_cols(self.dx, self.dy, self.alpha_b, self._no_leg,
                           self._no_mp, self._no_mp, x, y, a, False, sp, self._no_mp)
        else:
            if want_mp:
                qx = self.cluster_x - x
                qy = self.cluster_y - y
                q = np.sqrt(qx * qx + qy * qy)
                t = self.cluster_a * np.exp(-self.lam * q)
                exp_cols(self.dx, self.dy, self.lam, self.cluster_leg,
                         t, x, y, a, True, sp, mp)
            else:
                exp_cols(self.dx, self.dy, self.lam, self._no_leg,
                         self._no_mp, x, y, a, False, sp, self._no_mp)
        return sp, mp

    def layout_cols(self, xy: np.ndarray, a: np.ndarray, want_mp: bool):
        """Stacked weight rows for several facilities ((k, n) arrays)."""
        k = xy.shape[0]
        n = self.b.shape[0]
        sp = np.empty((k, n))
        mp = np.empty((k, n)) if want_mp else None
        for j in range(k):
            sp_j, mp_j = self.cols(xy[j, 0], xy[j, 1], a[j], want_mp)
            sp[j] = sp_j
            if want_mp:
                mp[j] = mp_j
        return sp, mp

    # -- reductions ---------------------------------------------------------

    def sp_value(self, w_sp: np.ndarray) -> float:
        """Fast single-purpose share (fixed-order loop; optimizer inner path)."""
        return float(share_value(self.b, w_sp, self.c1))

    def mp_value(self, w_mp: np.ndarray) -> float:
        return float(share_value(self.b, w_mp, self.c2))

    def sp_total(self, w_sp: np.ndarray) -> float:
        """Compensated single-purpose share (exact summation, platform stable)."""
        return math.fsum(self.b * (w_sp / (w_sp + self.c1)))

    def mp_total(self, w_mp: np.ndarray) -> float:
        return math.fsum(self.b * (w_mp / (w_mp + self.c2)))

    def mix_value(self, pi: float, sp_val: float, mp_val: float | None) -> float:
        if pi == 0.0:
            return sp_val
        if pi == 1.0:
            return mp_val
        return pi * mp_val + (1.0 - pi) * sp_val


def _evaluator(constants: CompetitorConstants) -> _Evaluator:
    ev = getattr(constants, "_ev", None)
    if ev is None:
        ev = _Evaluator(constants)
        constants._ev = ev
    return ev


@dataclass
class PerDemandShare:
    """Per-demand-point chain weights and capture fractions by trip type."""

    sp_weight: np.ndarray
    sp_fraction: np.ndarray
    mp_weight: np.ndarray | None
    mp_fraction: np.ndarray | None


@dataclass
class ShareReport:
    """Market share captured by the chain.

    ``total`` is in buying-power units, ``proportion`` = total / sum(b_i).
    ``sp_total`` and ``mp_total`` are the pure single-purpose (pi=0) and
    multipurpose (pi=1) shares; ``total`` is their pi-weighted mix.
    """

    total: float
    proportion: float
    sp_total: float
    mp_total: float | None
    per_demand: PerDemandShare | None = None


def captured_market_share(
    instance: Instance,
    layout: ChainLayout,
    decay: DecayModel,
    mix: TripMix,
    constants: CompetitorConstants,
    per_demand: bool = False,
) -> ShareReport:
    """Evaluate the chain's captured market share M for one layout.

    M = pi * (multipurpose share) + (1 - pi) * (single-purpose share), each
    share summing b_i * chain_weight / (chain_weight + C_i) over demand
    points, with the chain weight running over variable and fixed chain
    facilities alike.
    """
    if not constants.matches(instance, decay):
        raise ValueError("constants were computed for a different instance or decay")
    if layout.fixed != instance.fixed_chain:
        raise ValueError("layout fixed facilities do not match the instance's fixed chain")
    pi = mix.pi
    want_mp = pi > 0.0 or per_demand
    if want_mp and not instance.clusters:
        if pi > 0.0:
            raise ValueError("multipurpose trips (pi > 0) need at least one cluster")
        want_mp = False

    ev = _evaluator(constants)
    xy = layout.chain_xy()
    a = layout.chain_a()
    sp_cols, mp_cols = ev.layout_cols(xy, a, want_mp)
    w_sp = sp_cols.sum(axis=0)
    sp_total = ev.sp_total(w_sp)

    w_mp = None
    mp_total = None
    if want_mp:
        w_mp = mp_cols.sum(axis=0)
        mp_total = ev.mp_total(w_mp)

    total = ev.mix_value(pi, sp_total, mp_total)
    report = ShareReport(
        total=total,
        proportion=total / ev.total_b,
        sp_total=sp_total,
        mp_total=mp_total,
    )
    if per_demand:
        sp_fraction = w_sp / (w_sp + ev.c1)
        mp_fraction = w_mp / (w_mp + ev.c2) if w_mp is not None else None
        report.per_demand = PerDemandShare(
            sp_weight=w_sp, sp_fraction=sp_fraction,
            mp_weight=w_mp, mp_fraction=mp_fraction,
        )
    return report


def share_proportion(report: ShareReport) -> float:
    """Proportion of the total buying power captured, in (0, 1)."""
    return report.proportion
