"""Independent oracles and diagnostics.

``grid_oracle_p1`` brute-forces the single-facility problem on a dense
two-level grid, which is a search-method-independent check on the
multistart optimizer.  ``conservation_audit`` verifies the algebraic
identity that chain and competitor capture fractions sum to one at every
demand point.  ``random_baseline`` estimates the share a randomly placed
chain would capture, the yardstick the optimizer has to beat.
"""

from __future__ import annotations

import math

import numpy as np

from .instance import Instance, LcgStream
from .market import (
    ChainLayout,
    CompetitorConstants,
    DecayModel,
    TripMix,
    _evaluator,
    captured_market_share,
    competitor_constants,
)
from .optimizer import Box, random_start_coords


def _batch_values(ev, pi, node_x, node_y, attractiveness):
    """Objective value of a single new facility at each node.

    Every node's value is reduced column-independently, so a node gets the
    identical value whatever batch it lands in; together with the x-major
    scan order this makes np.argmax's first-occurrence rule pick the
    lexicographically smallest node among exact ties.
    """
    want_mp = pi > 0.0
    a = attractiveness
    ddx = ev.dx[:, None] - node_x[None, :]
    ddy = ev.dy[:, None] - node_y[None, :]
    d2 = ddx * ddx + ddy * ddy  # (n, k)
    if ev.kind == "power":
        w_sp = a / (ev.alpha_b[:, None] + d2)
    else:
        u = np.exp(-ev.lam * np.sqrt(d2))
        w_sp = a * (u * u)
    frac = w_sp / (w_sp + ev.c1[:, None])
    vals_sp = (frac * ev.b[:, None]).sum(axis=0)
    if not want_mp:
        return vals_sp

    if ev.kind == "power":
        leg = np.sqrt(ev.alpha_b[:, None] + d2)
        acc = np.zeros_like(leg)
        for m in range(ev.cluster_a.size):
            qm = np.hypot(node_x - ev.cluster_x[m], node_y - ev.cluster_y[m])
            den = leg + ev.cluster_leg[:, m][:, None] + qm[None, :]
            acc += ev.cluster_a[m] / (den * den)
        w_mp = a * acc
    else:
        qx = node_x[:, None] - ev.cluster_x[None, :]
        qy = node_y[:, None] - ev.cluster_y[None, :]
        q = np.sqrt(qx * qx + qy * qy)  # (k, p')
        t = ev.cluster_a[None, :] * np.exp(-ev.lam * q)
        w_mp = (a * u) * (ev.cluster_leg @ t.T)
    frac_mp = w_mp / (w_mp + ev.c2[:, None])
    vals_mp = (frac_mp * ev.b[:, None]).sum(axis=0)
    if pi == 1.0:
        return vals_mp
    return pi * vals_mp + (1.0 - pi) * vals_sp


_CHUNK = 2048


def _node_values(ev, pi, xs, ys, attractiveness):
    """Values over the full xs-by-ys grid, scanned x-major, in fixed chunks."""
    node_x = np.repeat(xs, ys.size)
    node_y = np.tile(ys, xs.size)
    values = np.empty(node_x.size)
    for start in range(0, node_x.size, _CHUNK):
        stop = min(start + _CHUNK, node_x.size)
        values[start:stop] = _batch_values(
            ev, pi, node_x[start:stop], node_y[start:stop], attractiveness
        )
    return values


def _axis(lo: float, hi: float, count: int) -> np.ndarray:
    # lo + i*step keeps node sets nested when the resolution is doubled
    step = (hi - lo) / (count - 1)
    return lo + step * np.arange(count)


def grid_oracle_p1(
    instance: Instance,
    decay: DecayModel,
    mix: TripMix,
    resolution: int = 201,
    box: Box | None = None,
    attractiveness: float = 1.0,
    constants: CompetitorConstants | None = None,
) -> tuple[tuple[float, float], float]:
    """Dense grid search for the best single new facility.

    Evaluates every node of a resolution x resolution grid over the box,
    then refines once around the best node with a 10x finer local grid.
    Returns ``((x, y), value)``; ties go to the lexicographically smallest
    node.
    """
    if resolution < 101:
        raise ValueError("resolution must be at least 101 per axis")
    if mix.pi > 0.0 and not instance.clusters:
        raise ValueError("multipurpose trips (pi > 0) need at least one cluster")
    if constants is None:
        constants = competitor_constants(instance, decay)
    elif not constants.matches(instance, decay):
        raise ValueError("constants were computed for a different instance or decay")
    if box is None:
        box = Box.default_for(instance)
    ev = _evaluator(constants)
    pi = mix.pi

    xs = _axis(box.x_min, box.x_max, resolution)
    ys = _axis(box.y_min, box.y_max, resolution)
    values = _node_values(ev, pi, xs, ys, attractiveness)
    best_flat = int(np.argmax(values))
    best_x = xs[best_flat // ys.size]
    best_y = ys[best_flat % ys.size]
    best_value = float(values[best_flat])

    # one refinement pass: +-1 coarse mesh around the best node, 10x finer
    mesh_x = (box.x_max - box.x_min) / (resolution - 1)
    mesh_y = (box.y_max - box.y_min) / (resolution - 1)
    fine_x = np.clip(best_x + (mesh_x / 10.0) * np.arange(-10, 11), box.x_min, box.x_max)
    fine_y = np.clip(best_y + (mesh_y / 10.0) * np.arange(-10, 11), box.y_min, box.y_max)
    fine_values = _node_values(ev, pi, fine_x, fine_y, attractiveness)
    fine_flat = int(np.argmax(fine_values))
    if fine_values[fine_flat] > best_value:
        best_value = float(fine_values[fine_flat])
        best_x = fine_x[fine_flat // fine_y.size]
        best_y = fine_y[fine_flat % fine_y.size]

    return (float(best_x), float(best_y)), best_value


def conservation_audit(
    instance: Instance,
    layout: ChainLayout,
    decay: DecayModel,
    mix: TripMix,
    constants: CompetitorConstants | None = None,
) -> float:
    """Max |chain fraction + competitor fraction - 1| over demand points.

    The chain fractions come from the share evaluation (using ``constants``
    if given); the competitor fractions are recomputed here from fresh
    constants, so a perturbed or stale ``constants`` argument shows up as a
    nonzero residual instead of cancelling out.
    """
    if constants is None:
        constants = competitor_constants(instance, decay)
    reference = competitor_constants(instance, decay)
    report = captured_market_share(
        instance, layout, decay, mix, constants, per_demand=True
    )
    per = report.per_demand
    comp_sp = reference.c1 / (per.sp_weight + reference.c1)
    residual = float(np.max(np.abs(per.sp_fraction + comp_sp - 1.0)))
    if per.mp_fraction is not None:
        comp_mp = reference.c2 / (per.mp_weight + reference.c2)
        residual = max(
            residual, float(np.max(np.abs(per.mp_fraction + comp_mp - 1.0)))
        )
    return residual


def random_baseline(
    instance: Instance,
    p: int,
    decay: DecayModel,
    mix: TripMix,
    trials: int,
    seed: int = 86_419,
    attractiveness: float = 1.0,
    box: Box | None = None,
    constants: CompetitorConstants | None = None,
) -> float:
    """Mean captured proportion over ``trials`` uniformly random layouts.

    With 10 incumbents and p equally matched new facilities the heuristic
    expectation is about p / (10 + p); the simulated mean is the honest
    version of that yardstick for arbitrary instances.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if p < 1:
        raise ValueError("p must be at least 1")
    if constants is None:
        constants = competitor_constants(instance, decay)
    if box is None:
        box = Box.default_for(instance)
    stream = LcgStream(seed)
    proportions = []
    for _ in range(trials):
        coords = random_start_coords(stream, p, box)
        layout = ChainLayout.from_coords(coords, attractiveness, fixed=instance.fixed_chain)
        report = captured_market_share(instance, layout, decay, mix, constants)
        proportions.append(report.proportion)
    return math.fsum(proportions) / trials
