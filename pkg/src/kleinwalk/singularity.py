"""Singularity diagnostics: parabolic-power sequences, the proof-gap series
delta * d_H3 - d_G, local-dimension estimates, and binned overlap statistics
between boundary samples.

Equal-area binning: the sphere is split into R = sqrt(K/2) equal-height
z-rows times C = 2R azimuth columns (equal area by Archimedes' hat-box
theorem), K in {32, 128, 512, 2048}; consecutive sizes refine each bin into
four children, so binned total-variation overlap is nonincreasing across the
supported sizes by construction. Fuchsian samples live on the great circle
{x2 = 0} and use K equal arcs of the angle atan2(x3, x1), refined the same
way. Bin indexing is deterministic; overlap runs are reproducible
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError, UnsupportedGroupError
from .groups import GroupSpec
from .moebius import dist_o_halfspace_batch, orbit_halfspace_batch
from .seeding import derived_generator
from .walks import BoundarySampleSet, StepDistribution

SUPPORTED_BIN_COUNTS = (32, 128, 512, 2048)
_ENTRY_GUARD = 1e12


# ---------------------------------------------------------------------------
# parabolic power tables
# ---------------------------------------------------------------------------

def _parabolic_power_distances(spec: GroupSpec, gen_index: int, n_max: int) -> np.ndarray:
    """d(o, g^n . o) for n = 0..n_max via iterated raw products (entries of
    parabolic powers grow linearly, guarded at 1e12)."""
    g = spec.generators[gen_index]
    rows = np.empty((n_max + 1, 4), dtype=complex)
    rows[0] = (1.0, 0.0, 0.0, 1.0)
    for n in range(1, n_max + 1):
        a, b, c, d = rows[n - 1]
        rows[n] = (a * g.a + b * g.c, a * g.b + b * g.d, c * g.a + d * g.c, c * g.b + d * g.d)
        if max(abs(x) for x in rows[n]) > _ENTRY_GUARD:
            raise RangeError(f"matrix entries exceed {_ENTRY_GUARD:.0e} at power {n}")
    z, t = orbit_halfspace_batch(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3])
    return dist_o_halfspace_batch(z, t)


@dataclass(frozen=True)
class LemmaTable:
    """Columns (n, |g^n| = n, d(o, g^n.o), n - D*d): the defect column grows
    without bound for a parabolic generator, for every D > 0."""

    preset: str
    gen_index: int
    D: float
    n: np.ndarray
    word_len: np.ndarray
    hyp_dist: np.ndarray
    defect: np.ndarray

    def first_exceeding(self, target: float) -> int | None:
        idx = np.nonzero(self.defect > target)[0]
        return int(self.n[idx[0]]) if len(idx) else None


def lemma_exp_sequence(spec: GroupSpec, D: float, n_max: int) -> LemmaTable:
    """Table of |g^n| - D * d(o, g^n.o) for the first parabolic generator g."""
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError("the power table needs |g^n| = n, i.e. a free preset")
    gen_index = spec.parabolic_generator()
    n = np.arange(n_max + 1)
    dist = _parabolic_power_distances(spec, gen_index, n_max)
    return LemmaTable(spec.name, gen_index, D, n, n.copy(), dist, n - D * dist)


@dataclass(frozen=True)
class DiagnosticSeries:
    """Gap series gap(n) = deltaHat * d(o, g^-n . o) - d_G(id, g^-n) along
    inverse parabolic powers, with first-crossing records."""

    preset: str
    mu: tuple[float, ...]
    delta_hat: float
    method: str
    n: np.ndarray
    word_len: np.ndarray
    hyp_dist: np.ndarray
    d_green: np.ndarray
    gap: np.ndarray
    crossings: dict[float, int | None]


GAP_THRESHOLDS = (-1.0, -3.0, -10.0)


def proof_gap_series(spec: GroupSpec, mu: StepDistribution, delta_hat: float,
                     n_list, method: str = "tree-exact") -> DiagnosticSeries:
    """The singularity witness: under the contradicted bound the gap would
    stay above a constant, but along parabolic powers it diverges to -inf."""
    from .green import tree_first_passage_solve

    if method != "tree-exact":
        raise UnsupportedGroupError("only the tree-exact Green distance is authoritative")
    n_list = np.asarray(list(n_list), dtype=np.int64)
    if len(n_list) == 0 or np.any(np.diff(n_list) <= 0) or n_list[0] < 0:
        raise DomainError("n_list must be increasing and nonnegative")
    gen_index = spec.parabolic_generator()
    inv_index = gen_index ^ 1
    fp = tree_first_passage_solve(spec, mu)
    cost = -np.log(fp.Fs[inv_index])
    dist_all = _parabolic_power_distances(spec, inv_index, int(n_list[-1]))
    hyp = dist_all[n_list]
    d_green = cost * n_list
    gap = delta_hat * hyp - d_green
    crossings: dict[float, int | None] = {}
    for thr in GAP_THRESHOLDS:
        below = np.nonzero(gap < thr)[0]
        crossings[thr] = int(n_list[below[0]]) if len(below) else None
    return DiagnosticSeries(
        spec.name, mu.weights, delta_hat, method,
        n_list, n_list.copy(), hyp, d_green, gap, crossings,
    )


# ---------------------------------------------------------------------------
# local dimension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionReport:
    """Per-probe slopes of log nu(cap(eta, r)) against log r, with bootstrap
    confidence interval for the mean slope."""

    scales: np.ndarray
    slopes: np.ndarray
    mean: float
    median: float
    ci_low: float
    ci_high: float
    sample_size: int
    probe_count: int
    isolated_probe_fraction: float
    reliability_warning: bool


def local_dimension(sample: BoundarySampleSet, scales, probe_count: int, seed: int,
                    bootstrap: int = 1000) -> DimensionReport:
    """Local dimension diagnostic of a weighted boundary sample.

    Probes are drawn from the sample itself (by weight); cap masses use the
    chordal distance |x - eta| <= r and include the probe's own atom. Probes
    whose smallest cap holds no other point are counted, and a reliability
    warning is raised when they exceed 20%.
    """
    scales = np.sort(np.asarray(list(scales), dtype=float))[::-1]
    if len(scales) < 2 or len(np.unique(scales)) != len(scales):
        raise DomainError("need at least two distinct scales")
    if scales[0] > 0.3 + 1e-12 or scales[-1] < 1e-3 - 1e-12:
        raise DomainError("scales must lie within [1e-3, 0.3]")
    n = len(sample)
    if n < 1000:
        raise DomainError("local dimension needs sample size >= 1000")
    rng = derived_generator(seed, 0xD13)
    probe_idx = rng.choice(n, size=probe_count, replace=True, p=sample.weights)
    pts = sample.points
    w = sample.weights
    own = w[probe_idx]
    log_r = np.log(scales)
    thresholds = 2.0 - scales**2  # |x - eta|^2 <= r^2  <=>  x . eta >= 1 - r^2/2
    slopes = np.empty(probe_count)
    isolated = 0
    chunk = max(1, int(2e7 // max(n, 1)))
    design = np.vstack([log_r, np.ones_like(log_r)]).T
    for lo in range(0, probe_count, chunk):
        hi = min(lo + chunk, probe_count)
        dots = pts[probe_idx[lo:hi]] @ pts.T  # (chunk, n)
        masses = np.empty((hi - lo, len(scales)))
        for k, thr in enumerate(thresholds):
            masses[:, k] = (dots >= thr / 2.0) @ w
        isolated += int(np.sum(masses[:, -1] <= own[lo:hi] + 1e-15))
        coef, *_ = np.linalg.lstsq(design, np.log(masses).T, rcond=None)
        slopes[lo:hi] = coef[0]
    frac = isolated / probe_count
    boot_rng = derived_generator(seed, 0xB007)
    means = np.array([
        slopes[boot_rng.integers(0, probe_count, probe_count)].mean()
        for _ in range(bootstrap)
    ])
    lo_ci, hi_ci = np.percentile(means, [2.5, 97.5])
    return DimensionReport(
        scales, slopes, float(slopes.mean()), float(np.median(slopes)),
        float(lo_ci), float(hi_ci), n, probe_count, frac, frac > 0.2,
    )


# ---------------------------------------------------------------------------
# binned overlap
# ---------------------------------------------------------------------------

def _grid_shape(bin_count: int) -> tuple[int, int]:
    if bin_count not in SUPPORTED_BIN_COUNTS:
        raise DomainError(f"bin count must be one of {SUPPORTED_BIN_COUNTS}")
    rows = int(round(np.sqrt(bin_count / 2)))
    return rows, 2 * rows


def sphere_bin_index(points: np.ndarray, bin_count: int) -> np.ndarray:
    rows, cols = _grid_shape(bin_count)
    z = np.clip(points[:, 2], -1.0, 1.0)
    row = np.minimum(((z + 1.0) / 2.0 * rows).astype(np.int64), rows - 1)
    phi = np.arctan2(points[:, 1], points[:, 0])
    col = np.minimum(((phi + np.pi) / (2.0 * np.pi) * cols).astype(np.int64), cols - 1)
    return row * cols + col


def circle_bin_index(points: np.ndarray, bin_count: int) -> np.ndarray:
    if bin_count not in SUPPORTED_BIN_COUNTS:
        raise DomainError(f"bin count must be one of {SUPPORTED_BIN_COUNTS}")
    theta = np.arctan2(points[:, 2], points[:, 0])
    return np.minimum(((theta + np.pi) / (2.0 * np.pi) * bin_count).astype(np.int64),
                      bin_count - 1)


def binned_masses(sample: BoundarySampleSet, bin_count: int) -> np.ndarray:
    ambient = sample.meta.get("ambient_dim", 3)
    if ambient == 2:
        idx = circle_bin_index(sample.points, bin_count)
    else:
        idx = sphere_bin_index(sample.points, bin_count)
    return np.bincount(idx, weights=sample.weights, minlength=bin_count)


def overlap_statistic(a: BoundarySampleSet, b: BoundarySampleSet, bin_count: int) -> float:
    """Total-variation overlap sum_bins min(mass_a, mass_b) in [0, 1] on the
    fixed equal-area partition; 1 = identical binned measures."""
    if a.meta.get("ambient_dim", 3) != b.meta.get("ambient_dim", 3):
        raise DomainError("samples live in different ambient dimensions")
    ma = binned_masses(a, bin_count)
    mb = binned_masses(b, bin_count)
    return float(np.minimum(ma, mb).sum())
