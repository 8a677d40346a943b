"""Uniform-grid numerics: stencils, quadrature, ODE marching, linear solves, roots.

Fields are plain numpy arrays with node values along axis 0; a scalar field has
shape (N,), a planar 2-vector field shape (N, 2). ``Grid1D`` carries the
geometry. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded as _lapack_banded
from scipy.optimize import brentq

from .errors import (
    BracketError,
    DivergenceError,
    DomainError,
    SingularSystemError,
    SizeError,
)

__all__ = [
    "Grid1D",
    "SampledFn",
    "central_diff",
    "cumtrapz",
    "integrate_ode_rk4",
    "solve_block_tridiag",
    "find_root",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid on [0, L] with nodes s_i = i * spacing."""

    length: float
    node_count: int

    def __post_init__(self):
        if self.node_count < 3:
            raise SizeError(f"need at least 3 nodes, got {self.node_count}")
        if not self.length > 0.0:
            raise SizeError(f"grid length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / (self.node_count - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.node_count) * self.spacing


def central_diff(values: np.ndarray, spacing: float, order: int = 1) -> np.ndarray:
    """Second-order finite differences along axis 0.

    Interior nodes use central stencils; boundary nodes use one-sided
    second-order stencils (no ghost nodes).
    """
    f = np.asarray(values, dtype=float)
    n = f.shape[0]
    if n < 3:
        raise SizeError(f"need at least 3 nodes to differentiate, got {n}")
    out = np.empty_like(f)
    h = spacing
    if order == 1:
        out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
        return out
    if order == 2:
        out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
        if n >= 4:
            out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
            out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
        else:
            # N == 3: the 3-point stencil is all we have (exact on quadratics).
            out[0] = out[1]
            out[-1] = out[1]
        return out
    raise ValueError(f"order must be 1 or 2, got {order}")


def cumtrapz(values: np.ndarray, spacing: float) -> np.ndarray:
    """Trapezoidal cumulative integral from node 0 along axis 0; result[0] = 0."""
    f = np.asarray(values, dtype=float)
    out = np.zeros_like(f)
    increments = 0.5 * spacing * (f[1:] + f[:-1])
    np.cumsum(increments, axis=0, out=out[1:])
    return out


def integrate_ode_rk4(rhs, y0, u_range, steps: int):
    """Classical fixed-step RK4 march.

    Returns ``(us, ys)`` with all intermediate states including both endpoints;
    ``ys`` has shape (steps + 1,) + shape(y0).
    """
    if steps < 1:
        raise SizeError(f"steps must be >= 1, got {steps}")
    u0, u1 = float(u_range[0]), float(u_range[1])
    h = (u1 - u0) / steps
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    us = u0 + h * np.arange(steps + 1)
    ys = np.empty((steps + 1,) + y.shape)
    ys[0] = y
    for i in range(steps):
        u = us[i]
        k1 = np.asarray(rhs(u, y))
        k2 = np.asarray(rhs(u + 0.5 * h, y + 0.5 * h * k1))
        k3 = np.asarray(rhs(u + 0.5 * h, y + 0.5 * h * k2))
        k4 = np.asarray(rhs(u + h, y + h * k3))
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"RK4 state became non-finite near u = {u + h}")
        ys[i + 1] = y
    return us, ys


def _band_from_blocks(lower, diag, upper):
    """Interleave 2x2 block-tridiagonal data into LAPACK band storage (l=u=3)."""
    n = diag.shape[0]
    m = 2 * n
    ab = np.zeros((7, m))
    for d, blocks in ((-1, lower), (0, diag), (1, upper)):
        i0 = max(0, -d)
        i1 = n - max(0, d)
        for p in range(2):
            for q in range(2):
                rows = 2 * np.arange(i0, i1) + p
                cols = rows + 2 * d + (q - p)
                ab[3 + rows - cols, cols] = blocks[i0:i1, p, q]
    return ab


def _band_matvec(lower, diag, upper, x):
    y = np.einsum("ipq,iq->ip", diag, x)
    y[1:] += np.einsum("ipq,iq->ip", lower[1:], x[:-1])
    y[:-1] += np.einsum("ipq,iq->ip", upper[:-1], x[1:])
    return y


def _locate_singular_row(lower, diag, upper, threshold=1e-13):
    """Forward block elimination to find the first (near-)singular pivot row."""
    n = diag.shape[0]
    piv = diag[0].astype(float).copy()
    for i in range(n):
        if i > 0:
            det = piv[0, 0] * piv[1, 1] - piv[0, 1] * piv[1, 0]
            inv = np.array([[piv[1, 1], -piv[0, 1]], [-piv[1, 0], piv[0, 0]]]) / det
            piv = diag[i] - lower[i] @ inv @ upper[i - 1]
        scale = max(
            np.abs(piv).max(),
            np.abs(lower[i]).max() if i > 0 else 0.0,
            np.abs(upper[i]).max() if i < n - 1 else 0.0,
        )
        det = abs(piv[0, 0] * piv[1, 1] - piv[0, 1] * piv[1, 0])
        if det <= (threshold * max(scale, 1e-300)) ** 2:
            return i
    return None


def solve_block_tridiag(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a block-tridiagonal system with 2x2 blocks.

    ``lower[i]`` couples row i to i-1 (entry 0 unused), ``upper[i]`` to i+1
    (last entry unused). ``rhs`` has shape (N, 2). Raises
    ``SingularSystemError`` with the offending block-row index when a pivot
    falls below 1e-13 times the local row scale.
    """
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n = diag.shape[0]
    if b.shape != (n, 2):
        raise SizeError(f"rhs shape {b.shape} does not match {n} block rows")

    def _diagnose():
        row = _locate_singular_row(lower, diag, upper)
        raise SingularSystemError(
            f"singular pivot in block-tridiagonal system at row {row}", row=row
        )

    ab = _band_from_blocks(lower, diag, upper)
    try:
        x = _lapack_banded((3, 3), ab, b.reshape(-1)).reshape(n, 2)
    except np.linalg.LinAlgError:
        _diagnose()
    if not np.all(np.isfinite(x)):
        _diagnose()
    residual = np.abs(_band_matvec(lower, diag, upper, x) - b).max()
    norm_a = max(np.abs(lower).max(), np.abs(diag).max(), np.abs(upper).max())
    bound = 1e-10 * (6.0 * norm_a * np.abs(x).max() + np.abs(b).max())
    if residual > max(bound, 1e-300):
        _diagnose()
    return x


def find_root(f, a: float, b: float) -> float:
    """Bracketed root solve (Brent) to near machine precision."""
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    return brentq(f, a, b, xtol=1e-14, rtol=4.0 * np.finfo(float).eps)


class SampledFn:
    """Smooth function given by samples on strictly increasing knots.

    Natural cubic interpolation (C^2 on the knot range) with first-derivative
    access. Knot values are reproduced exactly. Evaluation outside the knot
    range raises ``DomainError``. When the endpoint slopes are known exactly,
    pass them as ``end_slopes`` to clamp the spline there instead of using the
    natural boundary condition (which perturbs the boundary derivative at
    first order in the knot spacing).
    """

    def __init__(self, knots, values, end_slopes=None):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 4:
            raise SizeError(f"need at least 4 knots, got {knots.size}")
        if values.shape != knots.shape:
            raise SizeError("knot and value counts differ")
        if not np.all(np.diff(knots) > 0.0):
            raise SizeError("knot abscissae must be strictly increasing")
        self._knots = knots
        self._values = values
        if end_slopes is None:
            bc = "natural"
        else:
            bc = ((1, float(end_slopes[0])), (1, float(end_slopes[1])))
        self._spline = CubicSpline(knots, values, bc_type=bc)
        self._dspline = self._spline.derivative()
        self._slack = 1e-12 * max(knots[-1] - knots[0], 1.0)

    @classmethod
    def from_callable(cls, fn, lo: float, hi: float, n: int = 256) -> "SampledFn":
        knots = np.linspace(lo, hi, n)
        return cls(knots, np.asarray([fn(u) for u in knots], dtype=float))

    @property
    def knots(self) -> np.ndarray:
        return self._knots

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def domain(self):
        return float(self._knots[0]), float(self._knots[-1])

    def _clip(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self._knots[0], self._knots[-1]
        if np.any(u < lo - self._slack) or np.any(u > hi + self._slack):
            raise DomainError(
                f"evaluation outside knot range [{lo}, {hi}]"
            )
        return np.clip(u, lo, hi)

    def __call__(self, u):
        clipped = self._clip(u)
        out = np.asarray(self._spline(clipped), dtype=float)
        # Knot values are reproduced exactly (spline evaluation can be off by
        # an ulp at a knot).
        idx = np.searchsorted(self._knots, clipped)
        idx = np.clip(idx, 0, self._knots.size - 1)
        on_knot = self._knots[idx] == clipped
        out = np.where(on_knot, self._values[idx], out)
        return float(out) if np.isscalar(u) else out

    def derivative(self, u):
        out = self._dspline(self._clip(u))
        return float(out) if np.isscalar(u) else out
