"""Lattice counting, critical exponent, Poincare series, discrete
Patterson-Sullivan approximants, and the conformal-density evaluators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError
from .groups import OrbitTable
from .moebius import (
    ORIGIN,
    as_ball_point,
    busemann,
    busemann_cocycle,
    dist_halfspace,
    halfspace_from_ball,
)
from .walks import BoundarySampleSet


def lattice_count(orbit: OrbitTable, r: float) -> int:
    """#{h : d(o, h.o) <= r}, exact within the table's reliable radius."""
    if r < 0:
        return 0
    rmax = orbit.reliable_radius()
    if r > rmax + 1e-12:
        raise RangeError(
            f"radius {r} beyond the reliable range; counts are complete up to {rmax:.6f}"
        )
    return int(np.searchsorted(orbit.sorted_radii(), r, side="right"))


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares growth fit log N(r) ~ deltaHat * r + intercept."""

    radii: np.ndarray
    counts: np.ndarray
    delta_hat: float
    intercept: float
    fit_window: tuple[float, float]
    residual: float


def critical_exponent_fit(orbit: OrbitTable, window: tuple[float, float] = (0.4, 0.95),
                          n_points: int = 40) -> ExponentFit:
    """Fit the orbital growth rate over [window] fractions of the reliable
    radius; the rms residual of the linear fit is reported alongside."""
    if n_points < 5:
        raise RangeError("fit needs at least 5 radii")
    rmax = orbit.reliable_radius()
    lo, hi = window[0] * rmax, window[1] * rmax
    radii = np.linspace(lo, hi, n_points)
    counts = np.searchsorted(orbit.sorted_radii(), radii, side="right")
    if counts[0] < 1:
        raise RangeError("orbit too shallow: empty counts inside the fit window")
    logc = np.log(counts.astype(float))
    design = np.vstack([radii, np.ones_like(radii)]).T
    coef, *_ = np.linalg.lstsq(design, logc, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - logc) ** 2)))
    if coef[0] <= 0:
        raise RangeError("fitted growth rate is not positive; orbit too shallow")
    return ExponentFit(radii, counts, float(coef[0]), float(coef[1]), (lo, hi), resid)


def poincare_series(orbit: OrbitTable, s: float, x=None, y=None,
                    fit: ExponentFit | None = None) -> tuple[float, float]:
    """Truncated Poincare series sum_h e^{-s d(x, h.y)} over the table plus a
    tail estimate from the fitted growth law (infinite when s <= deltaHat).

    Summation order is fixed (ascending distance) so partial sums are
    bit-reproducible. x = y = o uses the stored radii; other base points
    regenerate the table's matrices.
    """
    if s <= 0:
        raise DomainError("s must be positive")
    if x is None and y is None:
        dists = orbit.sorted_radii()
    else:
        x = ORIGIN if x is None else as_ball_point(x)
        y = ORIGIN if y is None else as_ball_point(y)
        zx, tx = halfspace_from_ball(x)
        zy, ty = halfspace_from_ball(y)
        mats = orbit.matrices()
        a, b, c, d = (mats[:, k] for k in range(4))
        den = np.abs(c * zy + d) ** 2 + np.abs(c) ** 2 * ty * ty
        z2 = ((a * zy + b) * np.conj(c * zy + d) + a * np.conj(c) * ty * ty) / den
        t2 = ty / den
        arg = 1.0 + (np.abs(zx - z2) ** 2 + (tx - t2) ** 2) / (2.0 * tx * t2)
        dists = np.sort(np.arccosh(np.maximum(arg, 1.0)))
    partial = float(np.sum(np.exp(-s * dists)))
    if fit is None:
        fit = critical_exponent_fit(orbit)
    if s <= fit.delta_hat:
        return partial, float("inf")
    # N(r) <= A e^{deltaHat r} with A read off the fit (3 residuals of slack)
    A = float(np.exp(fit.intercept + 3.0 * fit.residual))
    rmax = orbit.reliable_radius()
    tail = s * A * np.exp((fit.delta_hat - s) * rmax) / (s - fit.delta_hat)
    return partial, float(tail)


@dataclass(frozen=True)
class PSApprox:
    """Sub-probability orbital measure at inverse temperature s: atoms h.o
    with weight e^{-s d(o, h.o)} / g_s, truncation deficit reported."""

    s: float
    min_radius: float
    points: np.ndarray
    weights: np.ndarray
    normalization: float
    truncation_deficit: float


def ps_approx(orbit: OrbitTable, s: float, min_radius: float) -> PSApprox:
    radii = orbit.radii
    g_s = float(np.sum(np.exp(-s * orbit.sorted_radii())))
    mask = radii >= min_radius
    if not np.any(mask):
        raise RangeError(f"no orbit points at radius >= {min_radius}")
    w = np.exp(-s * radii[mask]) / g_s
    pts = orbit.dirs[mask].astype(float)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    total = float(w.sum())
    return PSApprox(s, min_radius, pts, w, g_s, 1.0 - total)


def ps_boundary_sample(orbit: OrbitTable, s: float, min_radius: float,
                       fit: ExponentFit | None = None) -> BoundarySampleSet:
    """Discrete Patterson-Sullivan approximant: deep orbit points projected
    radially to the sphere with weights e^{-s d}, renormalized to mass 1."""
    if fit is None:
        fit = critical_exponent_fit(orbit)
    if not (fit.delta_hat < s <= fit.delta_hat + 0.5):
        raise DomainError(
            f"s = {s} must lie in (deltaHat, deltaHat + 0.5] = "
            f"({fit.delta_hat:.4f}, {fit.delta_hat + 0.5:.4f}]"
        )
    if min_radius < 5.0:
        raise DomainError("min_radius must be >= 5")
    approx = ps_approx(orbit, s, min_radius)
    meta = {
        "preset": orbit.spec.name,
        "ambient_dim": orbit.spec.ambient_dim,
        "s": s,
        "delta_hat": fit.delta_hat,
        "min_radius": min_radius,
        "orbit_depth": orbit.max_word_length,
        "truncation_deficit": approx.truncation_deficit,
    }
    return BoundarySampleSet(
        approx.points, approx.weights / approx.weights.sum(), "patterson-sullivan", meta
    )


ANNEALING_OFFSETS = (0.3, 0.2, 0.1, 0.05)
"""Offsets above the fitted exponent for the weak-limit approximation
schedule; the last entry is the headline sample."""


def conformal_rn_derivative(x, y, eta, delta: float) -> float:
    """d rho_x / d rho_y (eta) = e^{-delta b_{x,eta}(y)}."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    return float(np.exp(-delta * busemann(x, eta, y)))


def tilde_rho_density(eta1, eta2, delta: float) -> float:
    """Pair density e^{2 delta B_o(eta1, eta2)} of the squared conformal
    measure against the product measure; always >= 1."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    return float(np.exp(2.0 * delta * busemann_cocycle(ORIGIN, eta1, eta2)))
