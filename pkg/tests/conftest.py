"""Shared fixtures and the naive reference implementation of the share model.

``naive_share`` is a direct, loop-based transcription of the capture
formulas with no vectorization and no precomputation.  The fast engine is
checked against it to full precision, so every other test can trust the
engine.
"""

from __future__ import annotations

import math

import pytest

import chainloc as cl


def naive_share(instance, layout, decay, pi) -> float:
    """Loop transcription of the captured market share, O(n * p' * (p + p^))."""
    facilities = list(layout.variable) + list(layout.fixed)
    total_sp = 0.0
    total_mp = 0.0
    for d in instance.demand:
        if decay.kind == "power":
            ab = decay.alpha * d.b
            num1 = sum(f.a / (ab + (d.x - f.x) ** 2 + (d.y - f.y) ** 2) for f in facilities)
            c1 = sum(c.a / ((d.x - c.x) ** 2 + (d.y - c.y) ** 2 + ab) for c in instance.competitors)
            num2 = 0.0
            c2 = 0.0
            for m in instance.clusters:
                leg_m = math.sqrt(ab + (d.x - m.x) ** 2 + (d.y - m.y) ** 2)
                for f in facilities:
                    leg_f = math.sqrt(ab + (d.x - f.x) ** 2 + (d.y - f.y) ** 2)
                    tour = math.hypot(f.x - m.x, f.y - m.y) + leg_f + leg_m
                    num2 += m.a * f.a / tour**2
                for k in instance.competitors:
                    leg_k = math.sqrt((d.x - k.x) ** 2 + (d.y - k.y) ** 2 + ab)
                    tour = leg_k + math.hypot(k.x - m.x, k.y - m.y) + leg_m
                    c2 += k.a * m.a / tour**2
        else:
            lam = decay.lam
            num1 = sum(
                f.a * math.exp(-2.0 * lam * math.hypot(d.x - f.x, d.y - f.y))
                for f in facilities
            )
            c1 = sum(
                c.a * math.exp(-2.0 * lam * math.hypot(d.x - c.x, d.y - c.y))
                for c in instance.competitors
            )
            num2 = 0.0
            c2 = 0.0
            for m in instance.clusters:
                d_m = math.hypot(d.x - m.x, d.y - m.y)
                for f in facilities:
                    tour = math.hypot(f.x - m.x, f.y - m.y) + math.hypot(d.x - f.x, d.y - f.y) + d_m
                    num2 += m.a * f.a * math.exp(-lam * tour)
                for k in instance.competitors:
                    tour = math.hypot(d.x - k.x, d.y - k.y) + math.hypot(k.x - m.x, k.y - m.y) + d_m
                    c2 += k.a * m.a * math.exp(-lam * tour)
        total_sp += d.b * num1 / (num1 + c1)
        if instance.clusters:
            total_mp += d.b * num2 / (num2 + c2)
    return pi * total_mp + (1.0 - pi) * total_sp


def decays_for(instance):
    return {
        "power": cl.DecayModel.power(instance),
        "exponential": cl.DecayModel.exponential(1.0),
    }


@pytest.fixture(scope="session")
def tiny_instance():
    return cl.generate_instance(12)


@pytest.fixture(scope="session")
def small_instance():
    return cl.generate_instance(40)


@pytest.fixture(scope="session")
def bench_instance():
    """Benchmark-style instance: 100 demand points, 10 competitors, 10 clusters."""
    return cl.generate_instance(100)
