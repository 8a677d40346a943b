"""Closed-form solution family of the parameter-free rod subsystem.

The family is parametrized by three functions of one variable: an amplitude
``A(u)``, a direction angle ``C(u)`` and a time reparametrization ``F`` (with
the fourth function normalized to the identity). All three state vectors share
the direction (cos C, sin C), which makes the collinearity constraints hold
identically. The module evaluates the family on grids, matches it to boundary
(Cauchy) traces, and measures the residuals of the compatibility subsystem on
sampled data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegeneracyError, InputError, OutOfRangeError
from .grid_fields import (
    Grid1D,
    SampledFn,
    central_diff,
    find_root,
    integrate_ode_rk4,
)
from .rod_model import RodState, adiag, cross2

__all__ = [
    "SolutionFamily",
    "CauchyTrace",
    "evaluate_family",
    "invert_time",
    "sample_state",
    "parameter_free_residuals",
    "match_boundary_trace",
    "verify_trace_match",
    "family_to_json",
    "family_from_json",
    "random_family",
    "random_trace",
]

_DEGEN = 1e-12


@dataclass(frozen=True)
class SolutionFamily:
    """Solution-family data: amplitude, direction angle and time map.

    ``amp`` and ``angle`` are functions of the family parameter u; ``time_map``
    maps w = amp(u)*s + u to physical time. Each must be callable and provide
    a ``derivative`` method (``SampledFn`` qualifies).
    """

    amp: SampledFn
    angle: SampledFn
    time_map: SampledFn
    u_range: tuple

    def __post_init__(self):
        lo, hi = self.u_range
        if not hi > lo:
            raise InputError(f"empty u range {self.u_range}")


def _check_denominator(name, value, scale, where):
    bad = np.abs(value) <= _DEGEN * scale
    if np.any(bad):
        raise DegeneracyError(f"{name} degenerate at {where}")


def evaluate_family(fam: SolutionFamily, s, u):
    """Evaluate curvature, angular velocity, linear velocity and time at (s, u).

    Accepts scalars or broadcastable arrays; vectors are returned with the
    component axis last.
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    a = np.asarray(fam.amp(u))
    da = np.asarray(fam.amp.derivative(u))
    c = np.asarray(fam.angle(u))
    dc = np.asarray(fam.angle.derivative(u))
    w = a * s + u
    den = da * s + 1.0
    fp = np.asarray(fam.time_map.derivative(w))
    _check_denominator("A'(u)s + 1", den, np.maximum(1.0, np.abs(da * s)), f"(s={s}, u={u})")
    _check_denominator("F'(A(u)s + u)", fp, 1.0, f"(s={s}, u={u})")
    direction = np.stack([np.cos(c), np.sin(c)], axis=-1)
    kappa = (-(a**2) * dc / den)[..., None] * direction
    omega = (a * dc / (fp * den))[..., None] * direction
    vel = (1.0 / fp)[..., None] * direction
    t = np.asarray(fam.time_map(w))
    return kappa, omega, vel, t


def _invert_monotone(fn, lo, hi, target, n_scan=64):
    """Bracket-scan then root-polish fn(u) = target on [lo, hi]."""
    us = np.linspace(lo, hi, n_scan + 1)
    vals = np.asarray(fn(us), dtype=float) - target
    if vals[0] == 0.0:
        return float(us[0])
    sign = np.sign(vals)
    hits = np.nonzero(sign[:-1] * sign[1:] <= 0.0)[0]
    if hits.size == 0:
        raise OutOfRangeError(
            f"target {target} not reachable on [{lo}, {hi}]"
        )
    i = hits[0]
    return find_root(lambda x: fn(x) - target, us[i], us[i + 1])


def invert_time(fam: SolutionFamily, s: float, t: float) -> float:
    """Find the family parameter u with time_map(amp(u)*s + u) = t."""
    lo, hi = fam.u_range

    def g(u):
        return fam.time_map(fam.amp(u) * s + u)

    return _invert_monotone(g, lo, hi, t)


def sample_state(fam: SolutionFamily, grid: Grid1D, t: float) -> RodState:
    """Evaluate the family on a grid at fixed physical time.

    At fixed t the time-map argument w is the same at every node, so w is
    inverted once and only u is solved per node.
    """
    lo, hi = fam.u_range
    # At s = 0 the time-map argument equals u, so the reachable span of the
    # argument over the whole strip bounds the scan for the shared value.
    w_star = _invert_monotone(fam.time_map, *_w_span(fam, grid), t)
    s_nodes = grid.nodes
    us = np.empty_like(s_nodes)
    for i, s in enumerate(s_nodes):
        us[i] = _invert_monotone(lambda u: fam.amp(u) * s + u, lo, hi, w_star)
    kappa, omega, vel, _ = evaluate_family(fam, s_nodes, us)
    return RodState(grid, kappa, omega, vel)


def _w_span(fam: SolutionFamily, grid: Grid1D):
    lo, hi = fam.u_range
    us = np.linspace(lo, hi, 17)
    a = np.asarray(fam.amp(us))
    w = np.concatenate([a * 0.0 + us, a * grid.length + us])
    f_lo, f_hi = fam.time_map.domain
    return max(w.min(), f_lo), min(w.max(), f_hi)


def parameter_free_residuals(prev: RodState, mid: RodState, nxt: RodState, dt: float):
    """Max-norm residuals of the four parameter-free relations.

    Time derivatives are central across the three states; spatial derivatives
    are central on the shared grid. Returns {"R3", "R4", "R5", "R6"}.
    """
    if prev.grid != mid.grid or nxt.grid != mid.grid:
        raise InputError("states must share one grid")
    ds = mid.grid.spacing
    r3 = (nxt.curvature - prev.curvature) / (2.0 * dt) - central_diff(mid.ang_vel, ds)
    r4 = central_diff(mid.lin_vel, ds) - adiag(mid.ang_vel)
    r5 = cross2(mid.ang_vel, mid.curvature)
    r6 = cross2(mid.lin_vel, mid.curvature)
    return {
        "R3": float(np.abs(r3).max()),
        "R4": float(np.abs(r4).max()),
        "R5": float(np.abs(r5).max()),
        "R6": float(np.abs(r6).max()),
    }


@dataclass(frozen=True)
class CauchyTrace:
    """Boundary data at s = 0: three time traces and one corner value.

    ``v1_trace``, ``w1_trace``, ``k1_trace`` are the first components of the
    linear velocity, angular velocity and curvature along the base line;
    ``v2_origin`` is the second linear-velocity component at (0, 0). All four
    must be nonzero where evaluated.
    """

    v1_trace: Callable
    w1_trace: Callable
    k1_trace: Callable
    v2_origin: float

    def __post_init__(self):
        for name in ("v1_trace", "w1_trace", "k1_trace"):
            if getattr(self, name)(0.0) == 0.0:
                raise InputError(f"{name}(0) must be nonzero")
        if self.v2_origin == 0.0:
            raise InputError("v2_origin must be nonzero")


def match_boundary_trace(
    data: CauchyTrace, u_max: float, steps: int = 1000
) -> SolutionFamily:
    """Fit the family functions to boundary-trace data by an RK4 march.

    Integrates the angle and time-map profile from their corner values, then
    sets the amplitude pointwise; the resulting family reproduces the traces
    along s = 0.
    """
    v1, w1, k1 = data.v1_trace, data.w1_trace, data.k1_trace

    def rhs(u, y):
        c, f = y
        fv1, fw1, fk1 = v1(f), w1(f), k1(f)
        cos_c = np.cos(c)
        if abs(cos_c) < 1e-9:
            raise DegeneracyError(f"cos(angle) vanished near u = {u}")
        if min(abs(fv1), abs(fw1), abs(fk1)) < 1e-9:
            raise DegeneracyError(f"trace datum vanished near u = {u}")
        dc = -(fw1**2) * cos_c / (fk1 * fv1**2)
        df = cos_c / fv1
        return np.array([dc, df])

    c0 = np.arctan2(data.v2_origin, v1(0.0))
    if abs(np.cos(c0)) < 1e-9:
        raise DegeneracyError("initial angle too close to pi/2")
    us, ys = integrate_ode_rk4(rhs, np.array([c0, 0.0]), (0.0, u_max), steps)
    c_vals, f_vals = ys[:, 0], ys[:, 1]
    fv1 = np.asarray([v1(f) for f in f_vals])
    fw1 = np.asarray([w1(f) for f in f_vals])
    fk1 = np.asarray([k1(f) for f in f_vals])
    a_vals = -fk1 * fv1 / (fw1 * np.cos(c_vals))
    # The march knows the exact endpoint slopes; clamping the splines there
    # keeps the corner relations accurate to the RK4 error, not the natural
    # boundary-condition error.
    slope0 = rhs(us[0], ys[0])
    slope1 = rhs(us[-1], ys[-1])
    return SolutionFamily(
        amp=SampledFn(us, a_vals),
        angle=SampledFn(us, c_vals, end_slopes=(slope0[0], slope1[0])),
        time_map=SampledFn(us, f_vals, end_slopes=(slope0[1], slope1[1])),
        u_range=(0.0, u_max),
    )


def verify_trace_match(fam: SolutionFamily, data: CauchyTrace, u_samples) -> float:
    """Worst absolute residual of the five trace-matching relations."""
    u = np.asarray(u_samples, dtype=float)
    c = np.asarray(fam.angle(u))
    dc = np.asarray(fam.angle.derivative(u))
    a = np.asarray(fam.amp(u))
    f = np.asarray(fam.time_map(u))
    df = np.asarray(fam.time_map.derivative(u))
    cos_c = np.cos(c)
    v1 = np.asarray([data.v1_trace(x) for x in np.atleast_1d(f)])
    w1 = np.asarray([data.w1_trace(x) for x in np.atleast_1d(f)])
    k1 = np.asarray([data.k1_trace(x) for x in np.atleast_1d(f)])
    res = [
        np.abs(cos_c / df - v1).max(),
        np.abs(dc * a * cos_c / df - w1).max(),
        np.abs(-dc * a**2 * cos_c - k1).max(),
        abs(np.sin(fam.angle(0.0)) / fam.time_map.derivative(0.0) - data.v2_origin),
        abs(fam.time_map(0.0)),
    ]
    return float(max(res))


def family_to_json(fam: SolutionFamily) -> str:
    """Serialize the family samples as JSON (reproducible fixtures)."""
    return json.dumps(
        {
            "u_knots": fam.amp.knots.tolist(),
            "A": fam.amp.values.tolist(),
            "C": fam.angle.values.tolist(),
            "F_knots": fam.time_map.knots.tolist(),
            "F": fam.time_map.values.tolist(),
        }
    )


def family_from_json(text: str) -> SolutionFamily:
    try:
        doc = json.loads(text)
        u_knots = np.asarray(doc["u_knots"], dtype=float)
        fam = SolutionFamily(
            amp=SampledFn(u_knots, doc["A"]),
            angle=SampledFn(u_knots, doc["C"]),
            time_map=SampledFn(doc["F_knots"], doc["F"]),
            u_range=(float(u_knots[0]), float(u_knots[-1])),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
        raise InputError(f"malformed family document: {err}") from err
    return fam


def random_family(rng: np.random.Generator, u_range=(-3.0, 3.0)) -> SolutionFamily:
    """Draw a family from smooth trigonometric/polynomial coefficient pools.

    Coefficient ranges keep the invariants valid on the standard test strip
    s in [0, 1]: the time map is strictly increasing, the amplitude slope is
    small enough that A'(u)s + 1 stays away from zero, and the angle slope is
    bounded away from zero.
    """
    a = rng.uniform(0.8, 1.2)
    b = rng.uniform(0.05, 0.15)
    c = rng.uniform(0.5, 1.2)
    d = rng.uniform(0.0, 1.0)
    e = rng.uniform(0.7, 1.1) * rng.choice([-1.0, 1.0])
    g = rng.uniform(1.0, 1.5)
    h = rng.uniform(0.05, 0.3) * g
    k = rng.uniform(0.5, 1.2)
    lo, hi = u_range
    u_knots = np.linspace(lo, hi, 1201)
    w_lo, w_hi = lo - 1.6, hi + 1.6
    w_knots = np.linspace(w_lo, w_hi, 1601)
    return SolutionFamily(
        amp=SampledFn(u_knots, a + b * np.sin(c * u_knots)),
        angle=SampledFn(u_knots, d + e * u_knots),
        time_map=SampledFn(w_knots, g * w_knots + (h / k) * np.sin(k * w_knots)),
        u_range=u_range,
    )


def random_trace(rng: np.random.Generator) -> CauchyTrace:
    """Draw nonvanishing boundary-trace data for round-trip checks."""

    def draw():
        base = rng.uniform(0.7, 1.3) * rng.choice([-1.0, 1.0])
        amp = rng.uniform(0.1, 0.4) * abs(base)
        freq = rng.uniform(0.3, 1.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        return lambda t, b=base, a=amp, f=freq, p=phase: b + a * np.cos(f * t + p)

    return CauchyTrace(
        v1_trace=draw(),
        w1_trace=draw(),
        k1_trace=draw(),
        v2_origin=rng.uniform(0.2, 0.9) * rng.choice([-1.0, 1.0]),
    )
