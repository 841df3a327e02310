"""Tip angle and contact drop for a curved sensor pushing a rigid box-like object.

The sensor is a circle of radius ``R`` whose center starts at height ``h``,
a distance ``R`` in front of the object's near face. Pushing it forward by
``x`` tips the object about its far bottom edge (``w`` behind the near face)
by ``theta``. Keeping the circle tangent to the rotated face gives

    (R + w - x) cos(theta) + h sin(theta) = R + w

and the contact point travels ``R * theta`` down the sensor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class OutOfRangeError(ValueError):
    """Push distance outside the range where the contact geometry is valid."""


@dataclass(frozen=True)
class TipScenario:
    R: float  # sensor radius of curvature, mm
    w: float  # object width along the push, mm
    h: float  # initial contact height, mm

    def __post_init__(self):
        if not (self.R > 0 and self.w > 0 and self.h > 0):
            raise ValueError(f"R, w, h must be positive: {self}")


def x_max(s: TipScenario) -> float:
    """Push distance beyond which no tangent contact exists."""
    c = s.R + s.w
    # c - sqrt(c^2 - h^2), rewritten to avoid cancellation at large R
    if s.h >= c:
        return c
    return s.h**2 / (c + math.sqrt(c * c - s.h * s.h))


def _residual(s: TipScenario, x: float, theta: float) -> float:
    return (s.R + s.w - x) * math.cos(theta) + s.h * math.sin(theta) - (s.R + s.w)


def tip_angle(s: TipScenario, x: float) -> float:
    """Smallest non-negative tip angle (rad) after pushing ``x`` mm.

    Uses the half-angle root of the contact equation,
    tan(theta/2) = x / (h + sqrt(h^2 - x (2(R+w) - x))), which equals
    atan2(h, R+w-x) - acos((R+w)/rho) without its cancellation at small x,
    then polishes with Newton steps.
    """
    xm = x_max(s)
    if x < 0 or x > xm:
        raise OutOfRangeError(f"x={x} outside [0, {xm}]")
    if x == 0:
        return 0.0
    c = s.R + s.w
    a = c - x
    disc = max(s.h * s.h - x * (2.0 * c - x), 0.0)
    theta = 2.0 * math.atan(x / (s.h + math.sqrt(disc)))
    tol = 1e-12 * c
    for _ in range(4):
        f = _residual(s, x, theta)
        if abs(f) <= tol:
            break
        df = -a * math.sin(theta) + s.h * math.cos(theta)
        if df <= 0:  # tangent root at x_max
            break
        step = theta - f / df
        if abs(_residual(s, x, step)) >= abs(f):
            break
        theta = step
    return theta


def contact_drop(s: TipScenario, theta: float) -> float:
    """Arc length (mm) the contact point travels along the sensor in the gravity direction."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    return s.R * theta


def drop_slope(s: TipScenario, x: float) -> float:
    """d(R theta)/dx by finite differences.

    Central differences in the interior; at ``x = 0`` a one-sided
    difference refined by Richardson extrapolation over halved steps.
    """
    xm = x_max(s)
    if x < 0 or x >= xm:
        raise OutOfRangeError(f"x={x} outside [0, {xm})")
    step = min(0.01, xm / 1000.0)

    def drop(u: float) -> float:
        return s.R * tip_angle(s, u)

    if x == 0:
        f0 = drop(0.0)
        table = [[(drop(step / 2**k) - f0) / (step / 2**k)] for k in range(5)]
        for k in range(1, 5):
            for j in range(1, k + 1):
                fac = 2.0**j
                table[k].append((fac * table[k][j - 1] - table[k - 1][j - 1]) / (fac - 1))
        return table[-1][-1]
    step = min(step, x, xm - x)
    return (drop(x + step) - drop(x - step)) / (2 * step)


def onset_slope(s: TipScenario) -> float:
    """Analytic drop rate at the first instant of tip, R / h."""
    return s.R / s.h


def brute_force_tip_oracle(s: TipScenario, x: float, theta_step: float = 1e-4) -> float:
    """Tip angle from explicit rectangle geometry, scan plus bisection.

    The object's near face is built by rotating its bottom and top
    near-side corners about the far bottom edge; the angle is where the
    pushed circle center sits exactly ``R`` from that face.
    """
    if theta_step > 1e-4:
        raise ValueError("theta_step must be <= 1e-4")
    pivot = np.array([s.w, 0.0])
    face = np.array([[0.0, 0.0], [0.0, 2.0 * s.h]])  # near bottom, near top corners
    center = np.array([x - s.R, s.h])

    def gap(theta):
        # clockwise rotation tips the object away from the pusher
        th = np.atleast_1d(theta)
        c, sn = np.cos(th), np.sin(th)
        rel = face - pivot
        p0 = np.stack([c * rel[0, 0] + sn * rel[0, 1], -sn * rel[0, 0] + c * rel[0, 1]], -1) + pivot
        p1 = np.stack([c * rel[1, 0] + sn * rel[1, 1], -sn * rel[1, 0] + c * rel[1, 1]], -1) + pivot
        d = p1 - p0
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        v = center - p0
        # distance on the pusher's side of the face line
        dist = d[:, 0] * v[:, 1] - d[:, 1] * v[:, 0]
        return dist - s.R

    grid = np.arange(0.0, math.pi / 2 + theta_step, theta_step)
    g = gap(grid)
    if g[0] >= 0:
        return 0.0
    hits = np.nonzero(g >= 0)[0]
    if hits.size:
        lo, hi = grid[hits[0] - 1], grid[hits[0]]
    else:
        # no sign change on the grid: the roots may be a tangent pair inside one cell
        k = int(np.argmax(g))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        for _ in range(200):
            m1, m2 = a + (b - a) / 3, b - (b - a) / 3
            if gap(m1)[0] < gap(m2)[0]:
                a = m1
            else:
                b = m2
        peak = 0.5 * (a + b)
        if gap(peak)[0] < -1e-9 * s.R:
            raise OutOfRangeError(f"no contact root for x={x}")
        if gap(peak)[0] < 0:
            return peak
        lo, hi = grid[max(k - 1, 0)], peak
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if gap(mid)[0] >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
