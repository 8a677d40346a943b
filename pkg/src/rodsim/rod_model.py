"""Physical rod description: parameters, state, internal-force closures, output.

The planar Kirchhoff state consists of three 2-vector fields on a uniform
arclength grid: curvature, angular velocity and linear velocity, all expressed
in the director frame. The internal couple follows a linear isotropic bending
law; the internal (contact) force is a constraint reaction recovered each step
from a linear boundary-value problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InputError, SingularSystemError
from .grid_fields import Grid1D, central_diff, cumtrapz, solve_block_tridiag

__all__ = [
    "MaterialParams",
    "RodState",
    "Loads",
    "BoundaryConditions",
    "adiag",
    "cross2",
    "bending_couple",
    "solve_contact_force",
    "energy",
    "reconstruct_centerline",
]

_I2 = np.eye(2)


def adiag(v: np.ndarray) -> np.ndarray:
    """Apply the antidiagonal matrix [[0, 1], [-1, 0]] to 2-vectors (last axis)."""
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Planar cross product a1*b2 - a2*b1 (last axis)."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class MaterialParams:
    """Material and discretization constants of a single rod."""

    rho: float          # mass density
    area: float         # cross-section area
    moment: float       # second moment of area
    EI: float           # bending stiffness per curvature component
    length: float
    nodes: int

    def __post_init__(self):
        for name in ("rho", "area", "moment", "EI", "length"):
            if not getattr(self, name) > 0.0:
                raise InputError(f"{name} must be strictly positive")
        if self.nodes < 3:
            raise InputError(f"need at least 3 nodes, got {self.nodes}")

    @property
    def rho_A(self) -> float:
        return self.rho * self.area

    @property
    def rho_I(self) -> float:
        return self.rho * self.moment

    def grid(self) -> Grid1D:
        return Grid1D(self.length, self.nodes)


@dataclass
class RodState:
    """Per-node curvature, angular velocity and linear velocity 2-vector fields."""

    grid: Grid1D
    curvature: np.ndarray
    ang_vel: np.ndarray
    lin_vel: np.ndarray

    def __post_init__(self):
        n = self.grid.node_count
        for name in ("curvature", "ang_vel", "lin_vel"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, 2):
                raise InputError(f"{name} must have shape ({n}, 2), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} contains non-finite entries")
            setattr(self, name, arr)

    @classmethod
    def zero(cls, grid: Grid1D) -> "RodState":
        n = grid.node_count
        return cls(grid, np.zeros((n, 2)), np.zeros((n, 2)), np.zeros((n, 2)))

    def copy(self) -> "RodState":
        return RodState(
            self.grid, self.curvature.copy(), self.ang_vel.copy(), self.lin_vel.copy()
        )


def _zero_load(s, t):
    return np.zeros((np.shape(s)[0], 2))


@dataclass
class Loads:
    """Distributed force and couple per unit length, as callables (s_array, t)."""

    force: Callable = _zero_load
    couple: Callable = _zero_load

    def force_at(self, s: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.force(s, t), float), (s.shape[0], 2)).copy()

    def couple_at(self, s: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.couple(s, t), float), (s.shape[0], 2)).copy()


def _zero_signal(t):
    return np.zeros(2)


@dataclass
class BoundaryConditions:
    """End conditions: each end is either clamped (velocities prescribed) or free.

    For clamped ends the prescribed linear/angular velocity time signals and
    the time derivative of the linear velocity are required (zero for a static
    clamp).
    """

    base: str = "clamped"
    tip: str = "free"
    base_lin_vel: Callable = _zero_signal
    base_ang_vel: Callable = _zero_signal
    base_lin_acc: Callable = _zero_signal
    tip_lin_vel: Callable = _zero_signal
    tip_ang_vel: Callable = _zero_signal
    tip_lin_acc: Callable = _zero_signal

    def __post_init__(self):
        for end, kind in (("base", self.base), ("tip", self.tip)):
            if kind not in ("clamped", "free"):
                raise ConfigurationError(f"{end} kind must be 'clamped' or 'free'")

    @classmethod
    def free_free(cls) -> "BoundaryConditions":
        return cls(base="free", tip="free")

    @classmethod
    def clamped_base(cls) -> "BoundaryConditions":
        return cls(base="clamped", tip="free")


def bending_couple(state: RodState, params: MaterialParams) -> np.ndarray:
    """Linear isotropic bending law: couple = EI * curvature, componentwise."""
    return params.EI * state.curvature


def solve_contact_force(
    state: RodState,
    params: MaterialParams,
    loads: Loads,
    bc: BoundaryConditions,
    t: float,
) -> np.ndarray:
    """Recover the internal contact force as a constraint reaction.

    Time-differentiating the velocity compatibility relation and substituting
    the momentum balances yields a linear two-point boundary-value problem for
    the force field:

        (1/rho A) n'' + (1/rho I) n = (1/rho I) adiag(m' + l) - (1/rho A) f',

    discretized with central differences and solved as a 2x2-block tridiagonal
    system. Free ends impose n = 0; clamped ends impose
    n' = -f + rho A * (d/dt prescribed linear velocity).
    """
    grid = state.grid
    n_nodes = grid.node_count
    ds = grid.spacing
    s = grid.nodes
    m = bending_couple(state, params)
    f = loads.force_at(s, t)
    l = loads.couple_at(s, t)
    dm = central_diff(m, ds)
    df = central_diff(f, ds)
    rhs = adiag(dm + l) / params.rho_I - df / params.rho_A

    a_off = 1.0 / (params.rho_A * ds**2)
    lower = np.tile(a_off * _I2, (n_nodes, 1, 1))
    upper = np.tile(a_off * _I2, (n_nodes, 1, 1))
    diag = np.tile((-2.0 * a_off + 1.0 / params.rho_I) * _I2, (n_nodes, 1, 1))

    # Base row.
    if bc.base == "free":
        diag[0], upper[0], rhs[0] = _I2, 0.0, 0.0
    else:
        diag[0] = -_I2 / ds
        upper[0] = _I2 / ds
        rhs[0] = -f[0] + params.rho_A * np.asarray(bc.base_lin_acc(t), float)
    # Tip row.
    if bc.tip == "free":
        diag[-1], lower[-1], rhs[-1] = _I2, 0.0, 0.0
    else:
        diag[-1] = _I2 / ds
        lower[-1] = -_I2 / ds
        rhs[-1] = -f[-1] + params.rho_A * np.asarray(bc.tip_lin_acc(t), float)

    try:
        return solve_block_tridiag(lower, diag, upper, rhs)
    except SingularSystemError as err:
        if bc.base == "free" and bc.tip == "free":
            raise ConfigurationError(
                "contact-force system singular with both ends free "
                f"(incompatible loads); pivot row {err.row}"
            ) from err
        raise


def energy(state: RodState, params: MaterialParams) -> float:
    """Kinetic plus bending energy, integrated with the trapezoid rule."""
    density = 0.5 * (
        params.rho_A * np.sum(state.lin_vel**2, axis=1)
        + params.rho_I * np.sum(state.ang_vel**2, axis=1)
        + params.EI * np.sum(state.curvature**2, axis=1)
    )
    return float(cumtrapz(density, state.grid.spacing)[-1])


def _skew(kappa3: np.ndarray) -> np.ndarray:
    k1, k2, k3 = kappa3
    return np.array([[0.0, -k3, k2], [k3, 0.0, -k1], [-k2, k1, 0.0]])


def _interval_update(kappa3: np.ndarray, ds: float):
    """Rotation and tangent-displacement operators for one constant-curvature interval.

    Returns (exp(ds*K), V) with V = integral_0^ds exp(sigma*K) dsigma, both in
    closed form (Rodrigues), so constant-curvature segments are exact.
    """
    k = _skew(kappa3)
    theta = float(np.linalg.norm(kappa3))
    ang = theta * ds
    if ang < 1e-8:
        rot = np.eye(3) + ds * k + 0.5 * ds**2 * (k @ k)
        v = ds * np.eye(3) + 0.5 * ds**2 * k + (ds**3 / 6.0) * (k @ k)
        return rot, v
    ku = k / theta
    ku2 = ku @ ku
    rot = np.eye(3) + np.sin(ang) * ku + (1.0 - np.cos(ang)) * ku2
    v = ds * np.eye(3) + ((1.0 - np.cos(ang)) / theta) * ku + (
        ds - np.sin(ang) / theta
    ) * ku2
    return rot, v


def reconstruct_centerline(
    curvature: np.ndarray,
    spacing: float,
    base_position=(0.0, 0.0, 0.0),
    base_frame=None,
):
    """Integrate the director frame and centerline from the curvature field.

    The frame satisfies dR/ds = R * skew(k1, k2, 0); each interval uses the
    matrix exponential of the midpoint curvature, and the position update uses
    the exact tangent integral of that constant-curvature rotation. Returns
    (positions (N, 3), frames (N, 3, 3)); frame columns are the directors, the
    third column being the centerline tangent.
    """
    kappa = np.asarray(curvature, dtype=float)
    n = kappa.shape[0]
    frame0 = np.eye(3) if base_frame is None else np.asarray(base_frame, dtype=float)
    if frame0.shape != (3, 3) or np.abs(frame0.T @ frame0 - np.eye(3)).max() > 1e-8:
        raise InputError("base frame must be a 3x3 orthonormal matrix")
    frames = np.empty((n, 3, 3))
    positions = np.empty((n, 3))
    frames[0] = frame0
    positions[0] = np.asarray(base_position, dtype=float)
    e3 = np.array([0.0, 0.0, 1.0])
    for i in range(n - 1):
        mid = 0.5 * (kappa[i] + kappa[i + 1])
        rot, v = _interval_update(np.array([mid[0], mid[1], 0.0]), spacing)
        positions[i + 1] = positions[i] + frames[i] @ (v @ e3)
        frames[i + 1] = frames[i] @ rot
    return positions, frames
