"""Random walk engine: path sampling, drift and entropy estimators, and
harmonic-measure sampling on the sphere at infinity.

Walk states are raw 2x2 complex matrices rescaled by positive reals whenever
entries grow large; the orbit-point formulas are scale-invariant once the
(real) determinant of the raw matrix is tracked alongside, so walks of any
length stay inside float64 range.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .groups import GroupSpec, Word, reduce_letters
from .moebius import (
    MoebiusMap,
    ball_from_halfspace_batch,
    ball_norm_from_halfspace_batch,
    dist_o_halfspace_batch,
)
from .seeding import child_seed, derived_generator, letters_block

_RESCALE_LIMIT = 1e120
_BLOCK = 64
_BATCH = 8192


# ---------------------------------------------------------------------------
# step distribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepDistribution:
    """Symmetric nondegenerate probability weights on the generator indices."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = self.weights
        if len(w) < 2 or len(w) % 2:
            raise DomainError("weights must cover the inverse-closed generator list")
        if any(x <= 0.0 for x in w):
            raise DomainError("nondegeneracy requires a positive weight on every generator")
        if abs(sum(w) - 1.0) > 1e-12:
            raise DomainError("weights must sum to 1")
        for i in range(0, len(w), 2):
            if abs(w[i] - w[i + 1]) > 1e-12:
                raise DomainError(
                    f"symmetry requires mu(s) = mu(s^-1); violated on pair ({i}, {i + 1})"
                )

    @staticmethod
    def uniform(spec: GroupSpec) -> "StepDistribution":
        k2 = len(spec.generators)
        return StepDistribution(tuple(1.0 / k2 for _ in range(k2)))

    def cum(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.weights))

    def check_spec(self, spec: GroupSpec) -> None:
        if len(self.weights) != len(spec.generators):
            raise DomainError(
                f"distribution covers {len(self.weights)} generators, "
                f"group has {len(spec.generators)}"
            )


# ---------------------------------------------------------------------------
# matrix walk state
# ---------------------------------------------------------------------------

class _WalkState:
    """Batched walk state Y_n, rescaled by positive reals with the log of the
    (real) determinant tracked so arbitrarily long walks stay in float64."""

    def __init__(self, spec: GroupSpec, n: int):
        self.gen = np.array([(g.a, g.b, g.c, g.d) for g in spec.generators], dtype=complex)
        self.a = np.ones(n, dtype=complex)
        self.b = np.zeros(n, dtype=complex)
        self.c = np.zeros(n, dtype=complex)
        self.d = np.ones(n, dtype=complex)
        self.log_det = np.zeros(n)

    def step(self, letters: np.ndarray, rows=slice(None)) -> None:
        ga, gb, gc, gd = (self.gen[letters, k] for k in range(4))
        # copies, not views: the assignments below must not alias the reads
        a, b = self.a[rows].copy(), self.b[rows].copy()
        c, d = self.c[rows].copy(), self.d[rows].copy()
        self.a[rows] = a * ga + b * gc
        self.b[rows] = a * gb + b * gd
        self.c[rows] = c * ga + d * gc
        self.d[rows] = c * gb + d * gd
        mags = np.maximum(
            np.maximum(np.abs(self.a[rows]), np.abs(self.b[rows])),
            np.maximum(np.abs(self.c[rows]), np.abs(self.d[rows])),
        )
        big = mags > _RESCALE_LIMIT
        if np.any(big):
            idx = np.arange(len(self.a))[rows][big]
            scale = mags[big]
            for arr in (self.a, self.b, self.c, self.d):
                arr[idx] /= scale
            self.log_det[idx] -= 2.0 * np.log(scale)

    def _z_logt(self, rows=slice(None)):
        a, b, c, d = self.a[rows], self.b[rows], self.c[rows], self.d[rows]
        den = np.abs(c) ** 2 + np.abs(d) ** 2
        z = (b * np.conj(d) + a * np.conj(c)) / den
        return z, self.log_det[rows] - np.log(den)

    def dist_o(self, rows=slice(None)) -> np.ndarray:
        """d(o, Y_n . o), stable for heights t far below float range."""
        z, log_t = self._z_logt(rows)
        small = log_t < -60.0
        t = np.exp(np.where(small, 0.0, log_t))
        safe = dist_o_halfspace_batch(z, np.where(small, 1.0, t))
        asym = np.log1p(np.abs(z) ** 2) - log_t
        return np.where(small, asym, safe)

    def ball_norms(self, rows=slice(None)) -> np.ndarray:
        z, log_t = self._z_logt(rows)
        return ball_norm_from_halfspace_batch(z, np.exp(log_t))

    def ball_points(self, rows=slice(None)) -> np.ndarray:
        z, log_t = self._z_logt(rows)
        return ball_from_halfspace_batch(z, np.exp(log_t))


# ---------------------------------------------------------------------------
# path samples
# ---------------------------------------------------------------------------

@dataclass
class PathSample:
    """One realized trajectory Y_0 = id, Y_n = Y_{n-1} Z_n.

    `states` holds the prefix of determinant-normalized maps for as long as
    their entries stay small enough for float64 normalization to mean anything
    (entries <= 1e6); the orbit trace always covers the full path via the
    scale-invariant walk state.
    """

    seed: int
    increments: np.ndarray
    states: list[MoebiusMap] | None
    orbit_trace: np.ndarray

    def __len__(self) -> int:
        return len(self.increments)


_STATE_ENTRY_CAP = 1e6


def sample_path(spec: GroupSpec, mu: StepDistribution, n: int, seed: int,
                include_states: bool = True) -> PathSample:
    """Sample the walk for n steps; deterministic in (seed)."""
    mu.check_spec(spec)
    if n < 0:
        raise DomainError("n must be >= 0")
    child = child_seed(seed, 0)
    letters = letters_block(mu.cum(), child, 0, n)[0] if n else np.zeros(0, dtype=np.int8)
    state = _WalkState(spec, 1)
    trace = np.zeros((n + 1, 3))
    states = [MoebiusMap.identity()] if include_states else None
    for i, s in enumerate(letters):
        state.step(np.array([s]))
        trace[i + 1] = state.ball_points()[0]
        if states is not None and len(states) == i + 1:
            m = states[-1].compose(spec.generators[int(s)])
            if max(abs(m.a), abs(m.b), abs(m.c), abs(m.d)) <= _STATE_ENTRY_CAP:
                states.append(m)
    return PathSample(seed, letters, states, trace)


def letter_stream(mu: StepDistribution, seed: int, path_index: int, count: int) -> np.ndarray:
    """The raw increment stream of one path (for frequency checks)."""
    return letters_block(mu.cum(), child_seed(seed, path_index), 0, count)[0]


# ---------------------------------------------------------------------------
# drift and entropy
# ---------------------------------------------------------------------------

def jackknife_se(values: np.ndarray) -> float:
    """Delete-one jackknife standard error of the mean."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        return float("nan")
    total = values.sum()
    loo = (total - values) / (n - 1)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


@dataclass(frozen=True)
class DriftEstimates:
    ell_word: float
    se_word: float
    ell_hyp: float
    se_hyp: float
    n_paths: int
    length: int


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    stderr: float
    n_paths: int
    length: int


def _terminal_stats(spec: GroupSpec, mu: StepDistribution, n_paths: int, length: int,
                    seed: int, green_letter_costs: np.ndarray | None = None):
    """Per-path terminal (word length, hyperbolic distance[, green length])/n."""
    cum = mu.cum()
    word = np.empty(n_paths)
    hyp = np.empty(n_paths)
    green = np.empty(n_paths) if green_letter_costs is not None else None
    for lo in range(0, n_paths, _BATCH):
        hi = min(lo + _BATCH, n_paths)
        m = hi - lo
        children = child_seed(seed, np.arange(lo, hi))
        state = _WalkState(spec, m)
        stack = np.zeros((m, length), dtype=np.int8)
        ptr = np.zeros(m, dtype=np.int64)
        rows = np.arange(m)
        for start in range(0, length, _BLOCK):
            count = min(_BLOCK, length - start)
            letters = letters_block(cum, children, start, count)
            for j in range(count):
                col = letters[:, j]
                state.step(col)
                top = stack[rows, np.maximum(ptr - 1, 0)]
                cancel = (ptr > 0) & (top == (col ^ 1))
                ptr[cancel] -= 1
                push = ~cancel
                stack[rows[push], ptr[push]] = col[push]
                ptr[push] += 1
        word[lo:hi] = ptr / length
        hyp[lo:hi] = state.dist_o() / length
        if green is not None:
            mask = np.arange(length)[None, :] < ptr[:, None]
            green[lo:hi] = np.where(mask, green_letter_costs[stack], 0.0).sum(axis=1) / length
    return word, hyp, green


def drift_estimates(spec: GroupSpec, mu: StepDistribution, n_paths: int, length: int,
                    seed: int) -> DriftEstimates:
    """Escape rates |Y_n|/n and d(o, Y_n o)/n at n = length, with jackknife
    standard errors over paths."""
    mu.check_spec(spec)
    if not spec.is_free_ping_pong:
        raise DomainError("word drift needs a free preset")
    if length < 100:
        raise DomainError("length must be >= 100")
    word, hyp, _ = _terminal_stats(spec, mu, n_paths, length, seed)
    return DriftEstimates(
        float(word.mean()), jackknife_se(word), float(hyp.mean()), jackknife_se(hyp),
        n_paths, length,
    )


def entropy_estimate(spec: GroupSpec, mu: StepDistribution, n_paths: int, length: int,
                     seed: int) -> EntropyEstimate:
    """Asymptotic entropy via the Green-metric drift d_G(id, Y_n)/n, which the
    exact tree solver turns into a sum of per-letter costs -log F_s."""
    from .green import tree_first_passage_solve

    mu.check_spec(spec)
    if not spec.is_free_ping_pong:
        raise DomainError("entropy estimation needs a free preset")
    if length < 100:
        raise DomainError("length must be >= 100")
    fp = tree_first_passage_solve(spec, mu)
    costs = -np.log(np.asarray(fp.Fs))
    _, _, green = _terminal_stats(spec, mu, n_paths, length, seed, costs)
    return EntropyEstimate(float(green.mean()), jackknife_se(green), n_paths, length)


# ---------------------------------------------------------------------------
# boundary samples
# ---------------------------------------------------------------------------

@dataclass
class BoundarySampleSet:
    """Weighted empirical measure on the unit sphere."""

    points: np.ndarray
    weights: np.ndarray
    provenance: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.points) != len(self.weights):
            raise DomainError("points and weights must align")
        if len(self.points):
            norms = np.linalg.norm(self.points, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise DomainError("sample points must lie on the unit sphere")
            self.points = self.points / norms[:, None]
            if np.any(self.weights <= 0.0):
                raise DomainError("weights must be positive")
            if abs(self.weights.sum() - 1.0) > 1e-10:
                raise DomainError("weights must sum to 1")

    def __len__(self) -> int:
        return len(self.weights)

    def resample(self, n: int, seed: int) -> "BoundarySampleSet":
        """Equal-weight resample of n points drawn from the weighted measure
        (used to compare samples at matched sizes)."""
        rng = derived_generator(seed, 0x5E5A)
        idx = rng.choice(len(self.points), size=n, replace=True, p=self.weights)
        meta = dict(self.meta)
        meta["resampled_from"] = len(self.points)
        meta["resample_seed"] = seed
        return BoundarySampleSet(self.points[idx], np.full(n, 1.0 / n), self.provenance, meta)


def _harmonic_shard(args) -> tuple[np.ndarray, np.ndarray, int]:
    spec, mu, lo, hi, eps_stop, max_steps, seed = args
    cum = mu.cum()
    n = hi - lo
    pts = np.zeros((n, 3))
    steps = np.zeros(n, dtype=np.int64)
    capped = 0
    for base in range(0, n, _BATCH):
        top = min(base + _BATCH, n)
        m = top - base
        children = child_seed(seed, np.arange(lo + base, lo + top))
        state = _WalkState(spec, m)
        alive = np.arange(m)
        step_no = 0
        while len(alive) and step_no < max_steps:
            count = min(_BLOCK, max_steps - step_no)
            letters = letters_block(cum, children[alive], step_no, count)
            for j in range(count):
                state.step(letters[:, j], alive)
                norms = state.ball_norms(alive)
                out = norms > 1.0 - eps_stop
                if np.any(out):
                    done = alive[out]
                    x = state.ball_points(done)
                    pts[base + done] = x / np.linalg.norm(x, axis=1, keepdims=True)
                    steps[base + done] = step_no + j + 1
                    alive = alive[~out]
                    letters = letters[~out]
                if not len(alive):
                    break
            step_no += count
        if len(alive):  # hit max_steps: project the current position, flag later
            capped += len(alive)
            x = state.ball_points(alive)
            pts[base + alive] = x / np.linalg.norm(x, axis=1, keepdims=True)
            steps[base + alive] = max_steps
    return pts, steps, capped


def harmonic_sample(spec: GroupSpec, mu: StepDistribution, n_paths: int, eps_stop: float,
                    max_steps: int, seed: int, workers: int = 1) -> BoundarySampleSet:
    """Exit points of n_paths walks projected to the sphere: each path runs
    until |Y_n . o| > 1 - eps_stop in the ball model. Paths that have not
    escaped by max_steps contribute their current projection and are counted
    in the metadata (warning flag when they exceed 1% of paths)."""
    mu.check_spec(spec)
    if not (0.0 < eps_stop <= 1e-2):
        raise DomainError("eps_stop must lie in (0, 1e-2]")
    if max_steps < 1000:
        raise DomainError("max_steps must be >= 1000")
    meta = {
        "preset": spec.name,
        "ambient_dim": spec.ambient_dim,
        "mu": list(mu.weights),
        "eps_stop": eps_stop,
        "max_steps": max_steps,
        "seed": seed,
        "n_paths": n_paths,
    }
    if n_paths == 0:
        return BoundarySampleSet(np.zeros((0, 3)), np.zeros(0), "harmonic", meta)
    shards = _shard_ranges(n_paths, workers)
    jobs = [(spec, mu, lo, hi, eps_stop, max_steps, seed) for lo, hi in shards]
    if workers > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.Pool(workers) as pool:
            results = pool.map(_harmonic_shard, jobs)
    else:
        results = [_harmonic_shard(j) for j in jobs]
    pts = np.concatenate([r[0] for r in results])
    steps = np.concatenate([r[1] for r in results])
    capped = sum(r[2] for r in results)
    meta["escaped_paths"] = int(n_paths - capped)
    meta["capped_paths"] = int(capped)
    meta["maxsteps_warning"] = bool(capped > 0.01 * n_paths)
    meta["mean_exit_steps"] = float(steps.mean())
    return BoundarySampleSet(pts, np.full(n_paths, 1.0 / n_paths), "harmonic", meta)


def _shard_ranges(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, int(workers))
    size = (n + workers - 1) // workers
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def reduced_word_of_path(path: PathSample) -> Word:
    return Word(reduce_letters(path.increments), True)
