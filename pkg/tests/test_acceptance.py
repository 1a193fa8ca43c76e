"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Criterion 5 reruns the
full default experiment grid twice and dominates the runtime (roughly half
an hour on one core); criteria 1-4 finish in a few minutes.

Criterion 3 compares against the published optima for the original
benchmark instances and therefore needs those instance files, converted to
this package's format, in a directory named by the environment variable
``CHAINLOC_BENCHMARK_DIR`` (file ``n100.csv``).  Without it the criterion
is skipped and its role is covered by the qualitative checks of
criterion 4, which run on the built-in generator's instances.
"""

import os
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

import chainloc as cl
from chainloc import (
    ChainLayout,
    ClusterFacility,
    CompetitorFacility,
    DecayModel,
    DemandPoint,
    Instance,
    LcgState,
    OptimizerConfig,
    TripMix,
    captured_market_share,
    competitor_constants,
    conservation_audit,
    generate_instance,
    grid_oracle_p1,
    lcg_next,
    multistart_optimize,
    random_baseline,
    read_instance,
)
from chainloc.bench import ExperimentGrid, records_csv_text, run_grid


def _verdict(name: str, ok: bool, detail: str = "") -> None:
    state = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] {name}: {state}{suffix}")
    assert ok, f"{name}: {detail}"


def _decays(instance):
    return (DecayModel.power(instance), DecayModel.exponential(1.0))


def test_criterion_1_property_suite():
    started = time.perf_counter()
    checks = []

    # LCG first values, expectation computed right here
    s1 = lcg_next(LcgState(r=1))
    s2 = lcg_next(s1)
    checks.append(s1.r == 314_227)
    checks.append(s2.r == (314_227 * 314_227) % 1_000_000)

    for n, seed in ((30, 97_531), (45, 13_577)):
        inst = generate_instance(n, seeds=cl.SeedSet.derive(seed))
        layout = ChainLayout.from_coords([[2.0, 3.0], [7.0, 6.5]], attractiveness=1.2)
        sb = inst.total_buying_power
        for decay in _decays(inst):
            cons = competitor_constants(inst, decay)

            # conservation at every demand point, both trip types
            for pi in (0.0, 0.5, 1.0):
                checks.append(conservation_audit(inst, layout, decay, TripMix(pi)) < 1e-9)

            # affinity in pi
            m0 = captured_market_share(inst, layout, decay, TripMix(0.0), cons).total
            m1 = captured_market_share(inst, layout, decay, TripMix(1.0), cons).total
            for pi in (0.25, 0.5, 0.75):
                m = captured_market_share(inst, layout, decay, TripMix(pi), cons).total
                blend = (1.0 - pi) * m0 + pi * m1
                checks.append(abs(m - blend) < 1e-12 * abs(blend))

            # attractiveness scale invariance of all capture fractions
            base = captured_market_share(
                inst, layout, decay, TripMix(0.5), cons, per_demand=True
            )
            for c in (0.5, 3.0):
                scaled_inst = Instance(
                    demand=inst.demand,
                    competitors=tuple(
                        CompetitorFacility(k.x, k.y, c * k.a) for k in inst.competitors
                    ),
                    clusters=tuple(
                        ClusterFacility(k.x, k.y, c * k.a) for k in inst.clusters
                    ),
                )
                decay_s = (
                    DecayModel.power(scaled_inst) if decay.kind == "power" else decay
                )
                cons_s = competitor_constants(scaled_inst, decay_s)
                layout_s = ChainLayout.from_coords(
                    [[2.0, 3.0], [7.0, 6.5]], attractiveness=1.2 * c
                )
                scaled = captured_market_share(
                    scaled_inst, layout_s, decay_s, TripMix(0.5), cons_s, per_demand=True
                )
                rel_sp = np.max(
                    np.abs(scaled.per_demand.sp_fraction - base.per_demand.sp_fraction)
                    / base.per_demand.sp_fraction
                )
                rel_mp = np.max(
                    np.abs(scaled.per_demand.mp_fraction - base.per_demand.mp_fraction)
                    / base.per_demand.mp_fraction
                )
                checks.append(rel_sp < 1e-12 and rel_mp < 1e-12)

            # strict monotonicity in chain size
            grown = ChainLayout(
                variable=layout.variable + (cl.ChainFacility(5.0, 5.0, 0.7),)
            )
            for pi in (0.0, 1.0):
                a = captured_market_share(inst, layout, decay, TripMix(pi), cons).total
                b = captured_market_share(inst, grown, decay, TripMix(pi), cons).total
                checks.append(b > a)

            # translation invariance
            shift = (57.0, -31.5)
            moved = Instance(
                demand=tuple(
                    DemandPoint(d.x + shift[0], d.y + shift[1], d.b) for d in inst.demand
                ),
                competitors=tuple(
                    CompetitorFacility(k.x + shift[0], k.y + shift[1], k.a)
                    for k in inst.competitors
                ),
                clusters=tuple(
                    ClusterFacility(k.x + shift[0], k.y + shift[1], k.a)
                    for k in inst.clusters
                ),
            )
            decay_m = DecayModel.power(moved) if decay.kind == "power" else decay
            cons_m = competitor_constants(moved, decay_m)
            layout_m = ChainLayout.from_coords(
                [[2.0 + shift[0], 3.0 + shift[1]], [7.0 + shift[0], 6.5 + shift[1]]],
                attractiveness=1.2,
            )
            m = captured_market_share(inst, layout, decay, TripMix(0.5), cons).total
            mm = captured_market_share(moved, layout_m, decay_m, TripMix(0.5), cons_m).total
            checks.append(abs(m - mm) < 1e-10 * max(1.0, abs(m)))

    _verdict(
        "criterion 1 (property suite)",
        all(checks),
        f"{sum(checks)}/{len(checks)} checks, {time.perf_counter() - started:.1f}s",
    )


def test_criterion_2_oracle_equivalence():
    started = time.perf_counter()
    worst = 0.0
    ok = True
    for n in (50, 100):
        inst = generate_instance(n)
        sb = inst.total_buying_power
        for decay in _decays(inst):
            cons = competitor_constants(inst, decay)
            for pi in (0.0, 0.5, 1.0):
                mix = TripMix(pi)
                sol = multistart_optimize(
                    inst, 1, decay, mix, OptimizerConfig(starts=40), constants=cons
                )
                _, oracle_value = grid_oracle_p1(
                    inst, decay, mix, resolution=1001, constants=cons
                )
                dev = abs(sol.value - oracle_value) / sb
                worst = max(worst, dev)
                if dev > 1e-4:
                    ok = False
    _verdict(
        "criterion 2 (p=1 oracle equivalence)",
        ok,
        f"max |multistart - oracle| = {worst:.2e} proportion, "
        f"{time.perf_counter() - started:.1f}s",
    )


# Published optima for the original n=100 benchmark instance (proportions,
# one row per p over pi = 0.0, 0.2, 0.4, 0.6, 0.8, 1.0).  The p=1 rows are
# certified optimal; p >= 2 rows are best-known multistart results.
_REFERENCE_N100 = {
    "power": {
        1: (0.12407, 0.11856, 0.12073, 0.12874, 0.13734, 0.14739),
        2: (0.22052, 0.21495, 0.21736, 0.22653, 0.23767, 0.25286),
        3: (0.30230, 0.29850, 0.29748, 0.30469, 0.31851, 0.33431),
        4: (0.37155, 0.36315, 0.35791, 0.36412, 0.38171, 0.40002),
        5: (0.42093, 0.41405, 0.41002, 0.41388, 0.43309, 0.45335),
    },
    "exponential": {
        1: (0.14471, 0.13564, 0.12804, 0.15121, 0.17893, 0.20665),
        2: (0.24657, 0.24338, 0.24376, 0.27880, 0.31616, 0.35360),
        3: (0.33396, 0.33774, 0.35617, 0.38301, 0.42683, 0.47588),
        4: (0.41590, 0.41760, 0.42758, 0.46184, 0.51326, 0.57338),
        5: (0.46944, 0.46846, 0.48230, 0.51094, 0.56957, 0.63149),
    },
}
_PI_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def test_criterion_3_reference_table_reproduction():
    bench_dir = os.environ.get("CHAINLOC_BENCHMARK_DIR")
    if not bench_dir:
        print(
            "[acceptance] criterion 3 (reference tables): SKIP "
            "(CHAINLOC_BENCHMARK_DIR not set; original benchmark instances "
            "unavailable, covered by criterion 4 instead)"
        )
        pytest.skip("original benchmark instances not supplied")
    path = Path(bench_dir) / "n100.csv"
    inst = read_instance(path)
    sb = inst.total_buying_power
    started = time.perf_counter()
    failures = []
    for kind, rows in _REFERENCE_N100.items():
        decay = DecayModel.power(inst) if kind == "power" else DecayModel.exponential(1.0)
        cons = competitor_constants(inst, decay)
        for p, refs in rows.items():
            for pi, ref in zip(_PI_GRID, refs):
                sol = multistart_optimize(
                    inst, p, decay, TripMix(pi),
                    OptimizerConfig(starts=100), constants=cons,
                )
                prop = sol.value / sb
                if p == 1:
                    good = abs(prop - ref) <= 1e-4
                else:
                    good = (prop >= ref - 0.005) and (prop <= ref + 1e-4)
                if not good:
                    failures.append((kind, p, pi, prop, ref))
    _verdict(
        "criterion 3 (reference tables)",
        not failures,
        f"{len(failures)} mismatches, {time.perf_counter() - started:.1f}s"
        + (f"; first: {failures[0]}" if failures else ""),
    )


def test_criterion_4_qualitative_trends():
    started = time.perf_counter()
    grid = ExperimentGrid(n_values=(100,))
    records, failures = run_grid(grid)
    assert not failures

    by = {(r.decay, r.p, r.pi): r.proportion for r in records}
    p_values = grid.p_values
    pi_values = grid.pi_values
    problems = []

    # (a) optimized proportion strictly increases in p for fixed pi
    for decay in grid.decay_kinds:
        for pi in pi_values:
            seq = [by[(decay, p, pi)] for p in p_values]
            if not all(b > a for a, b in zip(seq, seq[1:])):
                problems.append(f"(a) not increasing: {decay} pi={pi}")

    # (b) exponential beats power on average across the grid
    power_mean = statistics.mean(v for (d, _, _), v in by.items() if d == "power")
    exp_mean = statistics.mean(v for (d, _, _), v in by.items() if d == "exponential")
    if not exp_mean > power_mean:
        problems.append(f"(b) exp mean {exp_mean} <= power mean {power_mean}")

    # (c) optimized/baseline ratio >= 1 everywhere and decreasing in p on average
    inst = generate_instance(100)
    ratio_means = {}
    for decay_kind in grid.decay_kinds:
        decay = (
            DecayModel.power(inst) if decay_kind == "power" else DecayModel.exponential(1.0)
        )
        cons = competitor_constants(inst, decay)
        means = []
        for p in p_values:
            ratios = []
            for pi in pi_values:
                base = random_baseline(
                    inst, p, decay, TripMix(pi), trials=64, constants=cons
                )
                ratio = by[(decay_kind, p, pi)] / base
                if ratio < 1.0:
                    problems.append(f"(c) ratio < 1: {decay_kind} p={p} pi={pi}: {ratio}")
                ratios.append(ratio)
            means.append(statistics.mean(ratios))
        ratio_means[decay_kind] = means
        if not means[0] > means[-1]:
            problems.append(f"(c) ratio not decreasing overall for {decay_kind}: {means}")
        if any(b > a + 0.02 for a, b in zip(means, means[1:])):
            problems.append(f"(c) ratio not decreasing on average for {decay_kind}: {means}")

    detail = (
        f"exp mean {exp_mean:.3f} vs power mean {power_mean:.3f}; ratio p=1 -> p=20: "
        + ", ".join(
            f"{k} {v[0]:.2f}->{v[-1]:.2f}" for k, v in ratio_means.items()
        )
        + f"; {time.perf_counter() - started:.1f}s"
    )
    _verdict("criterion 4 (qualitative trends)", not problems,
             detail + ("; " + "; ".join(problems[:3]) if problems else ""))


def test_criterion_5_default_grid_determinism():
    started = time.perf_counter()
    grid = ExperimentGrid()

    def csv_without_minutes(records):
        lines = records_csv_text(records).splitlines()
        return "\n".join(",".join(line.split(",")[:-1]) for line in lines)

    records_a, failures_a = run_grid(grid)
    records_b, failures_b = run_grid(grid)
    ok = (
        not failures_a
        and not failures_b
        and csv_without_minutes(records_a) == csv_without_minutes(records_b)
    )
    _verdict(
        "criterion 5 (default-grid determinism)",
        ok,
        f"{len(records_a)} cells x 2 runs, {(time.perf_counter() - started) / 60:.1f} min",
    )
