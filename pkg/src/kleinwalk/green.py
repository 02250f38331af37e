"""Green function machinery: first-passage probabilities, Green metric,
Martin kernel, Green Busemann functions, and the pair density they induce.

Three routes with a fixed precedence contract:

* tree-exact: on a free preset the Cayley graph is a tree, so the one-step
  decomposition F_s = mu(s) + sum_{t != s} mu(t) F_{t^-1} F_s closes, and the
  minimal solution (monotone iteration from 0) gives F(id, w) = prod F_letter
  exactly for reduced w. Authoritative.
* convolution: exact dynamic programming of the convolution powers mu^n on an
  enumerated word ball (a lower bound once paths can leave the ball; the leak
  is negligible at the depths used here and the partial sums stay monotone).
* montecarlo: direct simulation of the hitting event, one-sided low by
  horizon truncation; validation only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, RangeError, UnsupportedGroupError
from .groups import GroupSpec, Word, predicted_orbit_size
from .seeding import child_seed, letters_block

if TYPE_CHECKING:
    from .walks import StepDistribution


# ---------------------------------------------------------------------------
# exact tree solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeFirstPassage:
    """Per-generator first-passage probabilities F_s on the Cayley tree."""

    Fs: tuple[float, ...]
    iterations: int
    residual: float

    def F_word(self, word: Word) -> float:
        out = 1.0
        for s in word.reduce().letters:
            out *= self.Fs[s]
        return out

    def green_length(self, word: Word) -> float:
        """d_G(id, w) = -log F(id, w) = sum of per-letter costs."""
        return float(sum(-np.log(self.Fs[s]) for s in word.reduce().letters))

    def green_distance(self, g: Word, h: Word) -> float:
        return self.green_length(g.inverse().concat(h))


def _solve_fp(weights: np.ndarray, z: float, tol: float = 1e-15,
              max_iter: int = 1_000_000) -> tuple[np.ndarray, int, float] | None:
    """Minimal positive solution of F_s = z mu_s + z sum_{t != s} mu_t F_{t^-1} F_s
    by monotone iteration from 0; None when the iteration escapes (z beyond the
    radius of convergence)."""
    k2 = len(weights)
    inv = np.arange(k2) ^ 1
    F = np.zeros(k2)
    for it in range(1, max_iter + 1):
        S = float(np.dot(weights, F[inv]))
        newF = z * weights + z * F * (S - weights * F[inv])
        if np.any(newF > 1e6):
            return None
        delta = float(np.max(np.abs(newF - F)))
        F = newF
        if delta < tol:
            return F, it, delta
    return F, max_iter, delta


def tree_first_passage_solve(spec: GroupSpec, mu: "StepDistribution") -> TreeFirstPassage:
    """Exact first-passage probabilities on the Cayley tree of a free preset."""
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError("tree solver requires a free ping-pong preset")
    if spec.rank < 2:
        raise UnsupportedGroupError("tree solver requires rank >= 2")
    weights = np.asarray(mu.weights)
    if len(weights) != len(spec.generators):
        raise DomainError("step distribution does not match the generator list")
    sol = _solve_fp(weights, 1.0)
    assert sol is not None, "transient walk iteration cannot escape at z = 1"
    F, iters, _ = sol
    # residual of the fixed-point equations themselves
    inv = np.arange(len(weights)) ^ 1
    S = float(np.dot(weights, F[inv]))
    resid = float(np.max(np.abs(F - (weights + F * (S - weights * F[inv])))))
    if resid > 1e-12:
        raise RangeError(f"tree solver residual {resid:.3e} above 1e-12")
    return TreeFirstPassage(tuple(float(f) for f in F), iters, resid)


def tree_green_identity(spec: GroupSpec, mu: "StepDistribution") -> float:
    """G(e, e) = 1 / (1 - U) with return probability U = sum mu_s F_{s^-1}."""
    fp = tree_first_passage_solve(spec, mu)
    F = np.asarray(fp.Fs)
    weights = np.asarray(mu.weights)
    U = float(np.dot(weights, F[np.arange(len(F)) ^ 1]))
    return 1.0 / (1.0 - U)


def mc_truncation_bound(spec: GroupSpec, mu: "StepDistribution", target: Word,
                        horizon: int) -> float:
    """Upper bound on P(first hit of target after `horizon`): for z > 1 inside
    the radius of convergence, tail <= z^-horizon F(id, target; z)."""
    weights = np.asarray(mu.weights)
    for z in (1.2, 1.1, 1.05, 1.02, 1.01):
        sol = _solve_fp(weights, z)
        if sol is None:
            continue
        Fz = sol[0]
        val = z ** (-horizon)
        for s in target.reduce().letters:
            val *= Fz[s]
        return float(val)
    return 1.0


# ---------------------------------------------------------------------------
# Monte Carlo estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GreenEstimate:
    """First-passage estimate and the induced Green distance d_G = -log F."""

    target: Word
    F_hat: float
    stderr: float
    trials: int
    horizon: int
    method: str  # tree-exact | convolution | montecarlo
    one_sided: bool = False  # montecarlo underestimates via horizon truncation

    @property
    def dG(self) -> float:
        return float(-np.log(self.F_hat)) + 0.0


def green_estimate_tree(spec: GroupSpec, mu: "StepDistribution", target: Word) -> GreenEstimate:
    fp = tree_first_passage_solve(spec, mu)
    return GreenEstimate(target.reduce(), fp.F_word(target), 0.0, 0, 0, "tree-exact")


_MC_BATCH = 100_000


def green_F_montecarlo(spec: GroupSpec, mu: "StepDistribution", target: Word, trials: int,
                       horizon: int, seed: int) -> GreenEstimate:
    """Fraction of simulated paths hitting `target` within `horizon` steps.
    One-sided (underestimates F by the horizon truncation)."""
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError("word tracking requires a free preset")
    target = target.reduce()
    if len(target) == 0:
        return GreenEstimate(target, 1.0, 0.0, trials, horizon, "montecarlo")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if horizon < 10 * len(target):
        raise DomainError("horizon must be at least 10 * |target|")
    cum = mu.cum()
    tgt = np.asarray(target.letters, dtype=np.int8)
    L = len(tgt)
    hits = 0
    for lo in range(0, trials, _MC_BATCH):
        hi = min(lo + _MC_BATCH, trials)
        m = hi - lo
        children = child_seed(seed, np.arange(lo, hi))
        stack = np.zeros((m, horizon), dtype=np.int8)
        ptr = np.zeros(m, dtype=np.int64)
        alive = np.arange(m)
        for start in range(0, horizon, 64):
            count = min(64, horizon - start)
            letters = letters_block(cum, children[alive], start, count)
            for j in range(count):
                col = letters[:, j]
                top = stack[alive, np.maximum(ptr[alive] - 1, 0)]
                cancel = (ptr[alive] > 0) & (top == (col ^ 1))
                dec = alive[cancel]
                ptr[dec] -= 1
                inc = alive[~cancel]
                stack[inc, ptr[inc]] = col[~cancel]
                ptr[inc] += 1
                at_len = alive[ptr[alive] == L]
                if len(at_len):
                    hit = np.all(stack[at_len, :L] == tgt[None, :], axis=1)
                    if np.any(hit):
                        hits += int(hit.sum())
                        dead = set(at_len[hit].tolist())
                        keep = np.array([i not in dead for i in alive])
                        alive = alive[keep]
                        letters = letters[keep]
                if not len(alive):
                    break
            if not len(alive):
                break
    F_hat = hits / trials
    stderr = float(np.sqrt(max(F_hat * (1.0 - F_hat), 0.0) / trials))
    return GreenEstimate(target, F_hat, stderr, trials, horizon, "montecarlo", one_sided=True)


def green_F_montecarlo_all(spec: GroupSpec, mu: "StepDistribution", max_len: int,
                           trials: int, horizon: int, seed: int) -> dict[tuple, GreenEstimate]:
    """One shared simulation estimating F(id, w) for every reduced word with
    1 <= |w| <= max_len (the per-path hit indicators are read off the same
    trajectories, so a single pass covers the whole table)."""
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError("word tracking requires a free preset")
    if horizon < 10 * max_len:
        raise DomainError("horizon must be at least 10 * max_len")
    k2 = len(spec.generators)
    offsets = np.concatenate([[0], np.cumsum([k2**i for i in range(1, max_len + 1)])])
    n_codes = int(offsets[-1])
    powers = [k2 ** np.arange(ell) for ell in range(max_len + 1)]
    cum = mu.cum()
    hit_counts = np.zeros(n_codes, dtype=np.int64)
    for lo in range(0, trials, _MC_BATCH):
        hi = min(lo + _MC_BATCH, trials)
        m = hi - lo
        children = child_seed(seed, np.arange(lo, hi))
        stack = np.zeros((m, horizon), dtype=np.int8)
        ptr = np.zeros(m, dtype=np.int64)
        visited = np.zeros((m, n_codes), dtype=bool)
        rows = np.arange(m)
        for start in range(0, horizon, 64):
            count = min(64, horizon - start)
            letters = letters_block(cum, children, start, count)
            for j in range(count):
                col = letters[:, j]
                top = stack[rows, np.maximum(ptr - 1, 0)]
                cancel = (ptr > 0) & (top == (col ^ 1))
                ptr[cancel] -= 1
                push = ~cancel
                stack[rows[push], ptr[push]] = col[push]
                ptr[push] += 1
                for ell in range(1, max_len + 1):
                    at = rows[ptr == ell]
                    if len(at):
                        codes = offsets[ell - 1] + stack[at, :ell].astype(np.int64) @ powers[ell]
                        visited[at, codes] = True
        hit_counts += visited.sum(axis=0)
    out: dict[tuple, GreenEstimate] = {}
    frontier: list[tuple[int, ...]] = [()]
    for ell in range(1, max_len + 1):
        nxt = []
        for w in frontier:
            for s in range(k2):
                if w and w[-1] == (s ^ 1):
                    continue
                nw = w + (s,)
                code = int(offsets[ell - 1] + sum(c * k2**i for i, c in enumerate(nw)))
                F_hat = hit_counts[code] / trials
                stderr = float(np.sqrt(max(F_hat * (1.0 - F_hat), 0.0) / trials))
                out[nw] = GreenEstimate(Word(nw, True), F_hat, stderr, trials, horizon,
                                        "montecarlo", one_sided=True)
                nxt.append(nw)
        frontier = nxt
    return out


# ---------------------------------------------------------------------------
# convolution-power series on the word ball
# ---------------------------------------------------------------------------

def _word_ball(spec: GroupSpec, radius: int, cap: int):
    """IndexObject of all reduced words of length <= radius with the transition
    table next[i, s] (-1 where the product leaves the ball)."""
    total = predicted_orbit_size(spec.rank, radius)
    if total > cap:
        raise RangeError(f"word ball of radius {radius} has {total} entries, above cap {cap}")
    k2 = len(spec.generators)
    parent = np.empty(total, dtype=np.int64)
    letter = np.empty(total, dtype=np.int8)
    nxt = np.full((total, k2), -1, dtype=np.int64)
    parent[0], letter[0] = 0, -1
    frontier = [0]
    at = 1
    for _ in range(1, radius + 1):
        new = []
        for i in frontier:
            for s in range(k2):
                if i != 0 and letter[i] == (s ^ 1):
                    nxt[i, s] = parent[i]
                    continue
                parent[at], letter[at] = i, s
                nxt[i, s] = at
                new.append(at)
                at += 1
        frontier = new
    for i in frontier:  # deepest level: the cancelling step still stays inside
        nxt[i, letter[i] ^ 1] = parent[i]
    return parent, letter, nxt


def _word_index(parent, letter, nxt, word: Word) -> int:
    i = 0
    for s in word.reduce().letters:
        i = int(nxt[i, s])
        if i < 0:
            raise RangeError("target word lies outside the enumerated ball")
    return i


def green_series(spec: GroupSpec, mu: "StepDistribution", target: Word, n_max: int,
                 radius_cap: int = 12, entry_cap: int = 2_000_000) -> float:
    """Partial sum sum_{n <= n_max} mu^n(target) by sparse dynamic programming
    on the word ball of radius min(n_max, radius_cap).

    Exact when the ball covers radius n_max; otherwise a monotone lower bound
    (paths leaving the ball are dropped; their return mass is exponentially
    small in the radius).
    """
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError("convolution DP requires a free preset")
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    target = target.reduce()
    radius = max(min(n_max, radius_cap), len(target), 1)
    parent, letter, nxt = _word_ball(spec, radius, entry_cap)
    t_idx = _word_index(parent, letter, nxt, target)
    n = len(parent)
    rows_i, cols_i, data = [], [], []
    for s, w in enumerate(mu.weights):
        valid = nxt[:, s] >= 0
        rows_i.append(nxt[valid, s])
        cols_i.append(np.nonzero(valid)[0])
        data.append(np.full(int(valid.sum()), w))
    A = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows_i), np.concatenate(cols_i))),
        shape=(n, n),
    )
    p = np.zeros(n)
    p[0] = 1.0
    acc = p[t_idx]
    for _ in range(n_max):
        p = A @ p
        acc += p[t_idx]
    return float(acc)


# ---------------------------------------------------------------------------
# Martin kernel and Green Busemann functions
# ---------------------------------------------------------------------------

def martin_kernel(spec: GroupSpec, mu: "StepDistribution", g: Word, h: Word) -> float:
    """K(g, h) = F(g, h) / F(id, h), exact on the tree."""
    fp = tree_first_passage_solve(spec, mu)
    return float(np.exp(fp.green_length(h) - fp.green_distance(g, h)))


def _ray_letters(xi) -> tuple[int, ...]:
    """Validate a nested reduced prefix sequence and return the deepest prefix."""
    prefixes = [w.reduce().letters if isinstance(w, Word) else tuple(w) for w in xi]
    if not prefixes:
        raise DomainError("ray needs at least one prefix")
    for a, b in zip(prefixes, prefixes[1:]):
        if len(b) < len(a) or b[: len(a)] != a:
            raise DomainError("ray prefixes must be nested")
    return prefixes[-1]


def _common_prefix(u: tuple[int, ...], v: tuple[int, ...]) -> tuple[int, ...]:
    out = []
    for a, b in zip(u, v):
        if a != b:
            break
        out.append(a)
    return tuple(out)


def green_busemann(spec: GroupSpec, mu: "StepDistribution", xi, h: Word) -> float:
    """Green Busemann function b^G_{id,xi}(h): the stabilized value of
    d_G(h_n, id) - d_G(h_n, h) along the ray, which on the tree equals
    2 d_G(id, m) - d_G(id, h) with m the meet of the ray and h."""
    ray = _ray_letters(xi)
    hw = h.reduce()
    meet = _common_prefix(ray, hw.letters)
    if meet == ray and len(ray) < len(hw):
        raise DomainError("ray prefixes too short to separate from h; extend the ray")
    fp = tree_first_passage_solve(spec, mu)
    return 2.0 * fp.green_length(Word(meet, True)) - fp.green_length(hw)


def harmonic_rn_derivative(spec: GroupSpec, mu: "StepDistribution", h: Word, xi) -> float:
    """d(h^* nu) / d nu at the ray's boundary point: e^{b^G_{id,xi}(h^{-1})}."""
    return float(np.exp(green_busemann(spec, mu, xi, h.inverse())))


def green_gromov_product(spec: GroupSpec, mu: "StepDistribution", xi1, xi2) -> float:
    """(xi1 | xi2)^G_id = d_G(id, meet) for diverging rays on the tree."""
    r1, r2 = _ray_letters(xi1), _ray_letters(xi2)
    meet = _common_prefix(r1, r2)
    if meet == r1 or meet == r2:
        raise DomainError("rays do not diverge within the given prefixes")
    fp = tree_first_passage_solve(spec, mu)
    return fp.green_length(Word(meet, True))


def tilde_nu_density(spec: GroupSpec, mu: "StepDistribution", xi1, xi2) -> float:
    """Pair density e^{2 (xi1|xi2)^G_id} of the square of the harmonic measure."""
    return float(np.exp(2.0 * green_gromov_product(spec, mu, xi1, xi2)))
