"""Multistart maximization of the captured market share.

The objective is smooth in the 2p coordinates of the new facilities, so
each start runs a projected quasi-Newton ascent (BFGS-style inverse
Hessian, backtracking line search) with central finite-difference
gradients, constrained to a search box.  The best of all starts wins;
exact value ties break toward the smallest start index, which makes the
result deterministic however the starts are scheduled.

Gradient evaluations move one facility at a time: the weight columns of
the unperturbed facilities are reused, which cuts the cost of a gradient
from 4p full evaluations to roughly four.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import moved_share_value
from .instance import ChainFacility, Instance, LcgState, LcgStream
from .market import (
    ChainLayout,
    CompetitorConstants,
    DecayModel,
    TripMix,
    _evaluator,
    captured_market_share,
    competitor_constants,
)

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 60
_UNIT_SQUARE = (0.0, 10.0)


@dataclass(frozen=True)
class Box:
    """Axis-aligned search rectangle."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("box must be non-degenerate")

    @classmethod
    def default_for(cls, instance: Instance, margin: float = 0.05) -> "Box":
        """Default search box: the unit square [0,10]^2 when the demand fits
        inside it, otherwise the demand bounding box expanded by ``margin``
        of its width per side."""
        xy = instance.demand_xy
        lo_x, lo_y = xy.min(axis=0)
        hi_x, hi_y = xy.max(axis=0)
        u0, u1 = _UNIT_SQUARE
        if u0 <= lo_x and hi_x <= u1 and u0 <= lo_y and hi_y <= u1:
            return cls(u0, u1, u0, u1)
        pad_x = margin * max(hi_x - lo_x, 1e-9)
        pad_y = margin * max(hi_y - lo_y, 1e-9)
        return cls(lo_x - pad_x, hi_x + pad_x, lo_y - pad_y, hi_y + pad_y)

    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.y_max - self.y_min)

    def bounds(self, n_coords: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.tile([self.x_min, self.y_min], n_coords // 2)
        hi = np.tile([self.x_max, self.y_max], n_coords // 2)
        return lo, hi

    def contains(self, coords: np.ndarray) -> bool:
        lo, hi = self.bounds(coords.size)
        return bool(np.all(coords >= lo) and np.all(coords <= hi))


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 100
    box: Box | None = None
    gradient_step: float | None = None  # default: 1e-6 of the box diagonal
    tol_grad: float = 1e-6
    tol_obj: float = 1e-9
    max_iters: int = 2000
    seed: int | LcgState = 54_321  # start-generation stream

    def __post_init__(self) -> None:
        if not isinstance(self.seed, LcgState):
            LcgState(r=self.seed)  # validates range / divisibility
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        if self.gradient_step is not None and not self.gradient_step > 0:
            raise ValueError("gradient_step must be positive")
        if not (self.tol_grad > 0 and self.tol_obj > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class Solution:
    """Best layout found, with its re-verified objective value."""

    layout: ChainLayout
    value: float
    start_index: int
    iterations: int
    converged: bool


def objective(
    instance: Instance,
    layout: ChainLayout,
    decay: DecayModel,
    mix: TripMix,
    constants: CompetitorConstants,
) -> float:
    """Captured market share in buying-power units (not the proportion)."""
    return captured_market_share(instance, layout, decay, mix, constants).total


class _LayoutContext:
    """Incremental objective evaluation over per-facility weight columns."""

    def __init__(self, constants, instance, mix, var_a, fixed=()):
        self.ev = _evaluator(constants)
        self.pi = mix.pi
        self.want_mp = self.pi > 0.0
        if self.want_mp and self.ev.cluster_a is None:
            raise ValueError("multipurpose trips (pi > 0) need at least one cluster")
        self.var_a = np.asarray(var_a, dtype=float)
        n = instance.n
        self.w_fixed_sp = np.zeros(n)
        self.w_fixed_mp = np.zeros(n) if self.want_mp else None
        if fixed:
            fxy = np.array([(f.x, f.y) for f in fixed], dtype=float)
            fa = np.array([f.a for f in fixed], dtype=float)
            sp, mp = self.ev.layout_cols(fxy, fa, self.want_mp)
            self.w_fixed_sp = sp.sum(axis=0)
            if self.want_mp:
                self.w_fixed_mp = mp.sum(axis=0)
        self.sp_cols = None
        self.mp_cols = None
        self.w_sp = None
        self.w_mp = None
        self.value = None

    def _mix(self, w_sp, w_mp) -> float:
        sp_val = self.ev.sp_value(w_sp)
        mp_val = self.ev.mp_value(w_mp) if self.want_mp else None
        return self.ev.mix_value(self.pi, sp_val, mp_val)

    def eval_full(self, coords: np.ndarray):
        """Evaluate a complete coordinate vector; returns an uncommitted state."""
        xy = coords.reshape(-1, 2)
        sp_cols, mp_cols = self.ev.layout_cols(xy, self.var_a, self.want_mp)
        w_sp = self.w_fixed_sp + sp_cols.sum(axis=0)
        w_mp = None
        if self.want_mp:
            w_mp = self.w_fixed_mp + mp_cols.sum(axis=0)
        return self._mix(w_sp, w_mp), (sp_cols, mp_cols, w_sp, w_mp)

    def commit(self, value: float, state) -> None:
        self.sp_cols, self.mp_cols, self.w_sp, self.w_mp = state
        self.value = value

    def moved_value(self, j: int, x: float, y: float) -> float:
        """Objective with facility j moved to (x, y), all others frozen."""
        ev = self.ev
        sp_j, mp_j = ev.cols(x, y, self.var_a[j], self.want_mp)
        sp_val = float(moved_share_value(ev.b, self.w_sp, self.sp_cols[j], sp_j, ev.c1))
        mp_val = None
        if self.want_mp:
            mp_val = float(moved_share_value(ev.b, self.w_mp, self.mp_cols[j], mp_j, ev.c2))
        return ev.mix_value(self.pi, sp_val, mp_val)


def _fd_gradient(ctx: _LayoutContext, coords: np.ndarray, step: float, lo, hi):
    """Central-difference gradient; one-sided at box boundaries (flagged)."""
    m = coords.size
    grad = np.zeros(m)
    one_sided = np.zeros(m, dtype=bool)
    f0 = ctx.value
    moved = ctx.moved_value
    for c in range(m):
        j, axis = divmod(c, 2)
        v = coords[c]
        xj, yj = coords[2 * j], coords[2 * j + 1]
        if axis == 0:
            def at(vv, _j=j, _y=yj):
                return moved(_j, vv, _y)
        else:
            def at(vv, _j=j, _x=xj):
                return moved(_j, _x, vv)
        can_plus = lo is None or v + step <= hi[c]
        can_minus = lo is None or v - step >= lo[c]
        if can_plus and can_minus:
            grad[c] = (at(v + step) - at(v - step)) / (2.0 * step)
        elif can_plus:
            grad[c] = (at(v + step) - f0) / step
            one_sided[c] = True
        elif can_minus:
            grad[c] = (f0 - at(v - step)) / step
            one_sided[c] = True
        else:
            one_sided[c] = True  # box thinner than the step; leave 0
    return grad, one_sided


def gradient_fd(
    instance: Instance,
    layout: ChainLayout,
    decay: DecayModel,
    mix: TripMix,
    constants: CompetitorConstants,
    step: float | None = None,
    box: Box | None = None,
    return_flags: bool = False,
):
    """Finite-difference gradient of the objective w.r.t. the 2p variable
    coordinates.  Central differences everywhere except within ``step`` of a
    box bound, where a one-sided difference is used and flagged."""
    if not constants.matches(instance, decay):
        raise ValueError("constants were computed for a different instance or decay")
    if step is None:
        ref_box = box if box is not None else Box.default_for(instance)
        step = 1e-6 * ref_box.diagonal()
    if not step > 0:
        raise ValueError("step must be positive")
    coords = layout.coords_flat()
    if coords.size == 0:
        raise ValueError("layout has no variable facilities")
    var_a = [f.a for f in layout.variable]
    ctx = _LayoutContext(constants, instance, mix, var_a, fixed=layout.fixed)
    value, state = ctx.eval_full(coords)
    ctx.commit(value, state)
    lo, hi = box.bounds(coords.size) if box is not None else (None, None)
    grad, flags = _fd_gradient(ctx, coords, step, lo, hi)
    return (grad, flags) if return_flags else grad


def _projected_gradient_norm(grad, coords, lo, hi) -> float:
    pg = grad.copy()
    pg[(coords <= lo) & (grad < 0)] = 0.0
    pg[(coords >= hi) & (grad > 0)] = 0.0
    return float(np.linalg.norm(pg))


def _bfgs_update(h_inv, s, y_hat):
    rho = 1.0 / float(s @ y_hat)
    if h_inv is None:
        h_inv = (float(s @ y_hat) / float(y_hat @ y_hat)) * np.eye(s.size)
    v = np.eye(s.size) - rho * np.outer(s, y_hat)
    return v @ h_inv @ v.T + rho * np.outer(s, s)


def local_optimize(
    instance: Instance,
    start_layout: ChainLayout,
    decay: DecayModel,
    mix: TripMix,
    constants: CompetitorConstants,
    config: OptimizerConfig | None = None,
    start_index: int = 0,
) -> Solution:
    """Projected quasi-Newton ascent from one starting layout.

    The returned value is re-verified against a fresh share evaluation of
    the final layout; the objective sequence over accepted steps is
    non-decreasing, so the result is never worse than the start.
    """
    config = config or OptimizerConfig()
    if not constants.matches(instance, decay):
        raise ValueError("constants were computed for a different instance or decay")
    box = config.box if config.box is not None else Box.default_for(instance)
    coords = start_layout.coords_flat()
    if coords.size == 0:
        raise ValueError("start layout has no variable facilities")
    if not box.contains(coords):
        raise ValueError("start layout lies outside the search box")
    step = config.gradient_step if config.gradient_step is not None else 1e-6 * box.diagonal()
    lo, hi = box.bounds(coords.size)
    var_a = [f.a for f in start_layout.variable]

    ctx = _LayoutContext(constants, instance, mix, var_a, fixed=start_layout.fixed)
    f, state = ctx.eval_full(coords)
    if not math.isfinite(f):
        raise ValueError(f"objective is not finite at the start layout ({f})")
    ctx.commit(f, state)

    grad, _ = _fd_gradient(ctx, coords, step, lo, hi)
    iterations = 0
    converged = _projected_gradient_norm(grad, coords, lo, hi) <= config.tol_grad
    h_inv = None
    t_init = 1.0

    while not converged and iterations < config.max_iters:
        direction = grad if h_inv is None else h_inv @ grad
        if float(direction @ grad) <= 0.0:
            direction = grad
            h_inv = None

        t = t_init
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            raw = coords + t * direction
            cand = np.clip(raw, lo, hi)
            s = cand - coords
            if not s.any():
                break
            gs = float(grad @ s)
            if gs > 0.0:
                fc, state = ctx.eval_full(cand)
                if math.isfinite(fc) and fc >= f + _ARMIJO * gs:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            converged = _projected_gradient_norm(grad, coords, lo, hi) <= config.tol_grad
            break

        iterations += 1
        t_init = min(1.0, 2.0 * t)  # warm-start the next line search
        clipped = bool(np.any(cand != raw))
        prev_f = f
        f = fc
        ctx.commit(f, state)
        new_grad, _ = _fd_gradient(ctx, cand, step, lo, hi)
        s = cand - coords
        y_hat = grad - new_grad  # gradient change of -M
        coords = cand
        grad = new_grad

        if _projected_gradient_norm(grad, coords, lo, hi) <= config.tol_grad:
            converged = True
            break
        if f - prev_f <= config.tol_obj * max(1.0, abs(f)):
            converged = True
            break

        if clipped:
            h_inv = None  # active set changed; restart the curvature model
        else:
            sy = float(s @ y_hat)
            if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y_hat)):
                h_inv = _bfgs_update(h_inv, s, y_hat)

    layout = ChainLayout(
        variable=tuple(
            ChainFacility(float(coords[2 * j]), float(coords[2 * j + 1]), var_a[j])
            for j in range(coords.size // 2)
        ),
        fixed=start_layout.fixed,
    )
    report = captured_market_share(instance, layout, decay, mix, constants)
    if not math.isclose(report.total, f, rel_tol=1e-9, abs_tol=1e-12):
        raise RuntimeError(
            f"internal inconsistency: optimizer value {f} vs re-evaluated {report.total}"
        )
    return Solution(
        layout=layout,
        value=report.total,
        start_index=start_index,
        iterations=iterations,
        converged=converged,
    )


def random_start_coords(stream: LcgStream, p: int, box: Box) -> np.ndarray:
    """2p draws per start in (x1, y1, ..., xp, yp) order, uniform in the box."""
    coords = np.empty(2 * p)
    for j in range(p):
        coords[2 * j] = stream.uniform(box.x_min, box.x_max)
        coords[2 * j + 1] = stream.uniform(box.y_min, box.y_max)
    return coords


def multistart_optimize(
    instance: Instance,
    p: int,
    decay: DecayModel,
    mix: TripMix,
    config: OptimizerConfig | None = None,
    constants: CompetitorConstants | None = None,
    attractiveness: float = 1.0,
) -> Solution:
    """Best of ``config.starts`` local ascents from LCG-generated starts.

    Deterministic: the same arguments always return the identical Solution,
    including ``start_index`` (ties go to the smallest index).  A start that
    fails is skipped; only all starts failing is fatal.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    config = config or OptimizerConfig()
    if constants is None:
        constants = competitor_constants(instance, decay)
    box = config.box if config.box is not None else Box.default_for(instance)
    run_config = OptimizerConfig(
        starts=config.starts,
        box=box,
        gradient_step=config.gradient_step,
        tol_grad=config.tol_grad,
        tol_obj=config.tol_obj,
        max_iters=config.max_iters,
        seed=config.seed,
    )
    stream = LcgStream(config.seed)
    best: Solution | None = None
    failures: list[tuple[int, Exception]] = []
    for index in range(config.starts):
        coords = random_start_coords(stream, p, box)
        start = ChainLayout.from_coords(coords, attractiveness, fixed=instance.fixed_chain)
        try:
            sol = local_optimize(
                instance, start, decay, mix, constants, run_config, start_index=index
            )
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            failures.append((index, exc))
            continue
        if best is None or sol.value > best.value:
            best = sol
    if best is None:
        raise RuntimeError(
            f"all {config.starts} starts failed; first failure: {failures[0][1]}"
        )
    return best
