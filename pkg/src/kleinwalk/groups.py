"""Group presets, ping-pong certification, words, and orbit enumeration.

Generator indexing convention: the generator list is inverse-closed and laid
out in pairs [g0, g0^-1, g1, g1^-1, ...], so the inverse of generator index i
is always i ^ 1. Words are sequences of generator indices and reduce by stack
cancellation of adjacent (i, i^1) pairs, which is the correct word length
exactly because every preset is certified free by ping-pong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError, RangeError, UnsupportedGroupError
from .moebius import (
    MoebiusMap,
    apply_boundary,
    as_sphere_point,
    ball_from_halfspace_batch,
    classify,
    dist_h3,
    dist_o_halfspace_batch,
    mul_batch,
    orbit_halfspace_batch,
    ORIGIN,
)

PRESET_NAMES = ("gamma2", "schottky2", "kleinian_pp")

ORBIT_ENTRY_CAP = 10_000_000


def inverse_index(i: int) -> int:
    return i ^ 1


# ---------------------------------------------------------------------------
# spherical caps (ping-pong disks)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalCap:
    """Closed spherical cap {eta : angle(eta, center) <= theta}."""

    center: tuple[float, float, float]
    theta: float

    @staticmethod
    def from_chart_disk(center: complex, radius: float) -> "SphericalCap":
        """Cap corresponding to the chart disk |z - center| <= radius."""
        c2 = abs(center) ** 2
        n = np.array([2 * center.real, 2 * center.imag, c2 - radius**2 - 1.0])
        p = 1.0 + c2 - radius**2
        nn = float(np.linalg.norm(n))
        return SphericalCap(tuple(n / nn), float(np.arccos(np.clip(p / nn, -1.0, 1.0))))

    @staticmethod
    def from_chart_halfplane(nx: float, ny: float, k: float) -> "SphericalCap":
        """Cap for the chart half-plane {nx Re z + ny Im z >= k}, (nx, ny) unit."""
        n = np.array([nx, ny, k])
        nn = float(np.linalg.norm(n))
        return SphericalCap(tuple(n / nn), float(np.arccos(np.clip(k / nn, -1.0, 1.0))))

    def margin(self, eta) -> float:
        """Angular depth of eta inside the cap (negative outside)."""
        c = np.asarray(self.center)
        ang = float(np.arccos(np.clip(np.dot(c, np.asarray(eta, dtype=float)), -1.0, 1.0)))
        return self.theta - ang

    def contains(self, eta, tol: float = 0.0) -> bool:
        return self.margin(eta) >= -tol

    def scaled(self, factor: float) -> "SphericalCap":
        return SphericalCap(self.center, self.theta * factor)

    def enlarged(self, delta: float) -> "SphericalCap":
        return SphericalCap(self.center, self.theta + delta)

    def boundary_points(self, count: int) -> np.ndarray:
        """Deterministic grid on the boundary circle."""
        c = np.asarray(self.center)
        seed = np.array([0.0, 0.0, 1.0]) if abs(c[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        e1 = np.cross(c, seed)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)
        phis = 2.0 * np.pi * np.arange(count) / count
        ring = np.cos(self.theta) * c + np.sin(self.theta) * (
            np.cos(phis)[:, None] * e1 + np.sin(phis)[:, None] * e2
        )
        return ring / np.linalg.norm(ring, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------

def reduce_letters(letters) -> tuple[int, ...]:
    stack: list[int] = []
    for s in letters:
        if stack and stack[-1] == (s ^ 1):
            stack.pop()
        else:
            stack.append(int(s))
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """Word in the generators; `reduced` asserts no adjacent (i, i^1) pair."""

    letters: tuple[int, ...] = ()
    reduced: bool = False

    @staticmethod
    def of(*letters: int) -> "Word":
        return Word(tuple(letters))

    def reduce(self) -> "Word":
        if self.reduced:
            return self
        return Word(reduce_letters(self.letters), True)

    def inverse(self) -> "Word":
        return Word(tuple(s ^ 1 for s in reversed(self.letters)), self.reduced)

    def concat(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __len__(self) -> int:
        return len(self.letters)


# ---------------------------------------------------------------------------
# group specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupSpec:
    """Finite symmetric generating set of Moebius maps plus structural metadata."""

    name: str
    generators: tuple[MoebiusMap, ...]
    is_free_ping_pong: bool = False
    ping_pong_disks: tuple[SphericalCap, ...] | None = None
    ambient_dim: int = 3
    tol: float = 1e-9

    def __post_init__(self):
        gens = self.generators
        if len(gens) < 2 or len(gens) % 2 != 0:
            raise ConfigError("generator list must be inverse-closed pairs")
        for i in range(0, len(gens), 2):
            if not gens[i].compose(gens[i + 1]).is_identity(1e-12):
                raise ConfigError(f"generators {i} and {i + 1} are not inverse to each other")
        for i, g in enumerate(gens):
            kind, _ = classify(g)
            if kind in ("identity", "elliptic"):
                raise ConfigError(f"generator {i} is {kind}; only parabolic/loxodromic allowed")
        if self.ambient_dim not in (2, 3):
            raise ConfigError("ambient_dim must be 2 or 3")
        if self.ping_pong_disks is not None and len(self.ping_pong_disks) != len(gens):
            raise ConfigError("need one ping-pong cap per generator")

    @property
    def rank(self) -> int:
        return len(self.generators) // 2

    def generator_kinds(self) -> tuple[str, ...]:
        return tuple(classify(g)[0] for g in self.generators)

    def generator_displacements(self) -> tuple[float, ...]:
        out = []
        for g in self.generators:
            # d(o, g.o) directly from the half-space action on (0, 1)
            z, t = orbit_halfspace_batch(
                np.array([g.a]), np.array([g.b]), np.array([g.c]), np.array([g.d])
            )
            out.append(float(dist_o_halfspace_batch(z, t)[0]))
        return tuple(out)

    def word_matrix(self, word: Word) -> MoebiusMap:
        m = MoebiusMap.identity()
        for s in word.letters:
            m = m.compose(self.generators[s])
        return m

    def parabolic_generator(self) -> int:
        """Index of the first parabolic generator."""
        for i, kind in enumerate(self.generator_kinds()):
            if kind == "parabolic":
                return i
        raise UnsupportedGroupError(f"preset {self.name} has no parabolic generator")


def word_length(spec: GroupSpec, word: Word) -> int:
    """Word length |w|_S; exact via free reduction, hence restricted to
    certified free presets."""
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError(
            "word length is only computed on free ping-pong presets"
        )
    return len(word.reduce())


# ---------------------------------------------------------------------------
# ping-pong check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PingPongReport:
    passed: bool
    margins: tuple[float, ...]
    grid_size: int
    tol: float

    def worst_margin(self) -> float:
        return min(self.margins)


def ping_pong_check(spec: GroupSpec, grid_size: int = 2000) -> PingPongReport:
    """Sampled verification that every generator g maps the complement of the
    cap of g^-1 into the cap of g with positive angular margin.

    The image of that complement is itself a cap bounded by the image of the
    shared boundary circle, so checking a boundary grid plus the center of the
    complement certifies the inclusion at grid resolution.
    """
    if spec.ping_pong_disks is None:
        raise ConfigError(f"group {spec.name} ships no ping-pong caps")
    if grid_size < 1000:
        raise DomainError("grid_size must be at least 1000")
    margins = []
    for i, g in enumerate(spec.generators):
        own = spec.ping_pong_disks[i]
        other = spec.ping_pong_disks[i ^ 1]
        pts = list(other.boundary_points(grid_size))
        pts.append(-np.asarray(other.center))  # center of the complement cap
        margin = min(own.margin(apply_boundary(g, p / np.linalg.norm(p))) for p in pts)
        margins.append(margin)
    margins = tuple(margins)
    return PingPongReport(min(margins) >= spec.tol, margins, grid_size, spec.tol)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _inverse_closed(primitives: list[MoebiusMap]) -> tuple[MoebiusMap, ...]:
    gens: list[MoebiusMap] = []
    for g in primitives:
        gens.append(g)
        gens.append(g.inverse())
    return tuple(gens)


# Parabolic strip caps are enlarged a little so the fixed point at infinity is
# strictly interior; with the exact half-plane caps the mapping margin at the
# pole is identically zero and no sampled check could pass.
_STRIP_SLACK = 0.1


def _build_gamma2() -> GroupSpec:
    a = MoebiusMap(1, 2, 0, 1)
    b = MoebiusMap(1, 0, 2, 1)
    disks = (
        SphericalCap.from_chart_halfplane(1.0, 0.0, 1.0).enlarged(_STRIP_SLACK),
        SphericalCap.from_chart_halfplane(-1.0, 0.0, 1.0).enlarged(_STRIP_SLACK),
        SphericalCap.from_chart_disk(0.5 + 0j, 0.55),
        SphericalCap.from_chart_disk(-0.5 + 0j, 0.55),
    )
    return GroupSpec("gamma2", _inverse_closed([a, b]), True, disks, ambient_dim=2)


def _build_schottky2() -> GroupSpec:
    # two loxodromics of translation length 4 with axes (-1, 1) and (3, 5)
    ch, sh = math.cosh(2.0), math.sinh(2.0)
    a = MoebiusMap(ch, sh, sh, ch)
    b = MoebiusMap(ch + 4 * sh, -15 * sh, sh, ch - 4 * sh)
    rho = 1.15 / sh
    coth = ch / sh
    disks = (
        SphericalCap.from_chart_disk(complex(coth), rho),
        SphericalCap.from_chart_disk(complex(-coth), rho),
        SphericalCap.from_chart_disk(complex(4 + coth), rho),
        SphericalCap.from_chart_disk(complex(4 - coth), rho),
    )
    return GroupSpec("schottky2", _inverse_closed([a, b]), True, disks, ambient_dim=2)


def _build_kleinian_pp() -> GroupSpec:
    # parabolic translation plus a loxodromic of translation length 4 whose
    # axis (+-i/2) keeps its isometric disks inside |Re z| < 1, in honest
    # ping-pong position with the parabolic strips
    ch, sh = math.cosh(2.0), math.sinh(2.0)
    p = MoebiusMap(1, 2, 0, 1)
    lox = MoebiusMap(ch, 0.5j * sh, -2j * sh, ch)
    coth = ch / sh
    disks = (
        SphericalCap.from_chart_halfplane(1.0, 0.0, 1.0).enlarged(_STRIP_SLACK),
        SphericalCap.from_chart_halfplane(-1.0, 0.0, 1.0).enlarged(_STRIP_SLACK),
        SphericalCap.from_chart_disk(0.5j * coth, 0.16),
        SphericalCap.from_chart_disk(-0.5j * coth, 0.16),
    )
    return GroupSpec("kleinian_pp", _inverse_closed([p, lox]), True, disks, ambient_dim=3)


@lru_cache(maxsize=None)
def load_preset(name: str) -> GroupSpec:
    builders = {
        "gamma2": _build_gamma2,
        "schottky2": _build_schottky2,
        "kleinian_pp": _build_kleinian_pp,
    }
    if name not in builders:
        raise ConfigError(f"unknown preset {name!r}; catalog: {', '.join(PRESET_NAMES)}")
    spec = builders[name]()
    report = ping_pong_check(spec, grid_size=1000)
    if not report.passed:
        raise ConfigError(f"preset {name} failed its ping-pong validation: {report}")
    return spec


def _parse_complex(token: str) -> complex:
    try:
        return complex(token.strip().replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"bad complex literal {token!r}") from exc


def load_group_file(path) -> GroupSpec:
    """Load a custom group from plain text.

    Schema (one `key = value` per line, '#' comments):
      name = mygroup
      ambient = 2 | 3
      free = true | false
      tol = 1e-9
      gen = a, b, c, d          four complex entries like 3.76 or 0+1.81i
      cap = half, nx, ny, k     chart half-plane {nx Re z + ny Im z >= k}
      cap = disk, re, im, r     chart disk |z - (re + im i)| <= r

    Inverses are appended automatically after each gen, so caps (if given)
    are listed one per generator in the order g0, g0^-1, g1, g1^-1, ...
    """
    name, ambient, free, tol = "custom", 3, False, 1e-9
    primitives: list[MoebiusMap] = []
    caps: list[SphericalCap] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "name":
                name = value
            elif key == "ambient":
                ambient = int(value)
            elif key == "free":
                free = value.lower() in ("true", "yes", "1")
            elif key == "tol":
                tol = float(value)
            elif key == "gen":
                parts = value.split(",")
                if len(parts) != 4:
                    raise ConfigError(f"{path}:{ln}: gen needs 4 entries")
                primitives.append(MoebiusMap(*(_parse_complex(p) for p in parts)))
            elif key == "cap":
                parts = [p.strip() for p in value.split(",")]
                if parts[0] == "half" and len(parts) == 4:
                    caps.append(SphericalCap.from_chart_halfplane(
                        float(parts[1]), float(parts[2]), float(parts[3])))
                elif parts[0] == "disk" and len(parts) == 4:
                    caps.append(SphericalCap.from_chart_disk(
                        complex(float(parts[1]), float(parts[2])), float(parts[3])))
                else:
                    raise ConfigError(f"{path}:{ln}: cap must be 'half,nx,ny,k' or 'disk,re,im,r'")
            else:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
    if not primitives:
        raise ConfigError(f"{path}: no generators")
    spec = GroupSpec(
        name,
        _inverse_closed(primitives),
        free,
        tuple(caps) if caps else None,
        ambient_dim=ambient,
        tol=tol,
    )
    if free:
        if spec.ping_pong_disks is None:
            raise ConfigError(f"{path}: free = true requires ping-pong caps")
        report = ping_pong_check(spec, grid_size=1000)
        if not report.passed:
            raise ConfigError(
                f"{path}: ping-pong check failed (worst margin {report.worst_margin():.3g})"
            )
    return spec


# ---------------------------------------------------------------------------
# orbit enumeration
# ---------------------------------------------------------------------------

def predicted_orbit_size(rank: int, max_len: int) -> int:
    q = 2 * rank - 1
    if q == 1:
        return 1 + 2 * max_len
    return 1 + 2 * rank * (q**max_len - 1) // (q - 1)


@dataclass
class OrbitTable:
    """Breadth-first table of all reduced words up to max_word_length.

    Entry arrays are aligned: radii[i] = d(o, h_i . o), dirs[i] the unit radial
    direction of h_i . o (zero row for the identity), and (parent, letter)
    encode the word tree: entry i extends entry parent[i] by generator
    letter[i]. Level blocks are ordered letter-major, parents in table order,
    which fixes the enumeration bytes for a given (preset, depth).
    """

    spec: GroupSpec
    max_word_length: int
    radii: np.ndarray
    parent: np.ndarray
    letter: np.ndarray
    length: np.ndarray
    dirs: np.ndarray
    _sorted_radii: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.radii)

    def sorted_radii(self) -> np.ndarray:
        if self._sorted_radii is None:
            self._sorted_radii = np.sort(self.radii)
        return self._sorted_radii

    def word(self, i: int) -> Word:
        letters = []
        while i != 0:
            letters.append(int(self.letter[i]))
            i = int(self.parent[i])
        return Word(tuple(reversed(letters)), True)

    def matrix(self, i: int) -> MoebiusMap:
        return self.spec.word_matrix(self.word(i))

    def entry(self, i: int) -> tuple[Word, MoebiusMap, float]:
        return self.word(i), self.matrix(i), float(self.radii[i])

    def matrices(self, cap: int = 4_000_000) -> np.ndarray:
        """Regenerate all matrices as an (N, 4) complex array in table order."""
        n = len(self)
        if n > cap:
            raise RangeError(f"matrix regeneration capped at {cap} entries, table has {n}")
        out = np.empty((n, 4), dtype=complex)
        out[0] = (1.0, 0.0, 0.0, 1.0)
        gen_rows = np.array(
            [(g.a, g.b, g.c, g.d) for g in self.spec.generators], dtype=complex
        )
        start = 1
        for level in range(1, self.max_word_length + 1):
            stop = start + int(np.sum(self.length == level))
            par = self.parent[start:stop]
            let = self.letter[start:stop]
            pa, pb, pc, pd = (out[par, k] for k in range(4))
            ga, gb, gc, gd = (gen_rows[let, k] for k in range(4))
            out[start:stop, 0] = pa * ga + pb * gc
            out[start:stop, 1] = pa * gb + pb * gd
            out[start:stop, 2] = pc * ga + pd * gc
            out[start:stop, 3] = pc * gb + pd * gd
            start = stop
        return out

    def reliable_radius(self) -> float:
        """Largest radius at which lattice counts are complete: the radius of
        the pure power of the minimal-displacement generator at full depth
        (any longer word is at least as far from the base point)."""
        disp = self.spec.generator_displacements()
        i = int(np.argmin(disp))
        g = self.spec.generators[i]
        m = MoebiusMap.identity()
        for _ in range(self.max_word_length):
            m = m.compose(g)
        z, t = orbit_halfspace_batch(
            np.array([m.a]), np.array([m.b]), np.array([m.c]), np.array([m.d])
        )
        return float(dist_o_halfspace_batch(z, t)[0])


_CHUNK = 400_000


def enumerate_orbit(spec: GroupSpec, max_len: int, cap: int = ORBIT_ENTRY_CAP) -> OrbitTable:
    """Enumerate all reduced words of length <= max_len with orbit radii.

    Memory guard: refuses when the free-group ball formula predicts more than
    `cap` entries. The last level is processed in chunks so the peak footprint
    stays near the previous level's matrices plus the output arrays.
    """
    if not spec.is_free_ping_pong:
        raise UnsupportedGroupError("orbit enumeration requires a free ping-pong preset")
    if max_len < 1:
        raise DomainError("max_len must be >= 1")
    total = predicted_orbit_size(spec.rank, max_len)
    if total > cap:
        raise RangeError(
            f"predicted orbit size {total} exceeds cap {cap}; "
            f"largest allowed depth is {_max_depth_under_cap(spec.rank, cap)}"
        )
    k2 = len(spec.generators)
    gen_rows = np.array([(g.a, g.b, g.c, g.d) for g in spec.generators], dtype=complex)

    radii = np.empty(total)
    parent = np.empty(total, dtype=np.int32)
    letter = np.empty(total, dtype=np.int8)
    length = np.empty(total, dtype=np.int16)
    dirs = np.zeros((total, 3), dtype=np.float32)
    radii[0], parent[0], letter[0], length[0] = 0.0, 0, -1, 0

    frontier = np.array([[1.0, 0.0, 0.0, 1.0]], dtype=complex)
    frontier_last = np.array([-1], dtype=np.int8)
    frontier_idx = np.array([0], dtype=np.int32)
    next_at = 1

    for level in range(1, max_len + 1):
        keep = level < max_len
        new_mats, new_last, new_idx = [], [], []
        for s in range(k2):
            allowed = np.nonzero(frontier_last != (s ^ 1))[0]
            for lo in range(0, len(allowed), _CHUNK):
                rows = allowed[lo : lo + _CHUNK]
                block = frontier[rows]
                prod = mul_batch(
                    (block[:, 0], block[:, 1], block[:, 2], block[:, 3]),
                    spec.generators[s],
                )
                z, t = orbit_halfspace_batch(*prod)
                n = len(rows)
                sl = slice(next_at, next_at + n)
                radii[sl] = dist_o_halfspace_batch(z, t)
                parent[sl] = frontier_idx[rows]
                letter[sl] = s
                length[sl] = level
                pts = ball_from_halfspace_batch(z, t)
                norms = np.linalg.norm(pts, axis=1, keepdims=True)
                dirs[sl] = (pts / np.maximum(norms, 1e-300)).astype(np.float32)
                if keep:
                    new_mats.append(np.stack(prod, axis=1))
                    new_last.append(np.full(n, s, dtype=np.int8))
                    new_idx.append(np.arange(next_at, next_at + n, dtype=np.int32))
                next_at += n
        if keep:
            frontier = np.concatenate(new_mats)
            frontier_last = np.concatenate(new_last)
            frontier_idx = np.concatenate(new_idx)

    assert next_at == total
    return OrbitTable(spec, max_len, radii, parent, letter, length, dirs)


def _max_depth_under_cap(rank: int, cap: int) -> int:
    depth = 0
    while predicted_orbit_size(rank, depth + 1) <= cap:
        depth += 1
    return depth
