"""Moebius transformations and the hyperbolic geometry of the Poincare ball.

Conventions used throughout the package:

* A group element is a normalized 2x2 complex matrix [[a, b], [c, d]] with
  ad - bc = 1, acting on the Riemann sphere by z -> (az + b)/(cz + d) and on
  upper half-space {(z, t) : z in C, t > 0} by the quaternionic extension.
* The boundary chart is stereographic with infinity at the NORTH pole:
  eta = (2 Re z, 2 Im z, |z|^2 - 1) / (1 + |z|^2),   z = (eta1 + i eta2)/(1 - eta3).
* The ball model is glued to half-space so that the origin o corresponds to
  the half-space point (z=0, t=1):
  ball(z, t) = (2 Re z, 2 Im z, s - 2(t+1)) / s,  s = |z|^2 + (t+1)^2.
  Real matrices therefore preserve the great circle {x2 = 0} (the Fuchsian
  slice), and z = infinity corresponds to the north pole (0, 0, 1).
* Busemann functions follow b_{x,eta}(y) = log P(x,eta) - log P(y,eta) with
  Poisson kernel P(x,eta) = (1 - |x|^2)/|x - eta|^2, so b decreases toward eta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_SIGN_TOL = 1e-12
ORIGIN = np.zeros(3)
NORTH_POLE = np.array([0.0, 0.0, 1.0])


def _canonical_sign(entries: tuple[complex, complex, complex, complex]) -> int:
    """Sign of the +/-I representative: first nonzero entry gets Re >= 0
    (Im > 0 breaking a tie at Re == 0)."""
    for e in entries:
        if abs(e) <= _SIGN_TOL:
            continue
        if abs(e.real) <= _SIGN_TOL * abs(e):
            return 1 if e.imag > 0 else -1
        return 1 if e.real > 0 else -1
    return 1


@dataclass(frozen=True)
class MoebiusMap:
    """Determinant-normalized Moebius transformation z -> (az+b)/(cz+d)."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det) < 1e-30:
            raise DomainError("matrix is not invertible")
        root = np.sqrt(complex(det))
        a, b, c, d = self.a / root, self.b / root, self.c / root, self.d / root
        sign = _canonical_sign((a, b, c, d))
        object.__setattr__(self, "a", complex(sign * a))
        object.__setattr__(self, "b", complex(sign * b))
        object.__setattr__(self, "c", complex(sign * c))
        object.__setattr__(self, "d", complex(sign * d))

    @staticmethod
    def identity() -> "MoebiusMap":
        return MoebiusMap(1, 0, 0, 1)

    @staticmethod
    def from_matrix(m) -> "MoebiusMap":
        (a, b), (c, d) = m
        return MoebiusMap(complex(a), complex(b), complex(c), complex(d))

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """Normalized product self . other (apply other first)."""
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return self.compose(other)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def trace(self) -> complex:
        return self.a + self.d

    def approx_eq(self, other: "MoebiusMap", tol: float = 1e-9) -> bool:
        """Entrywise comparison of the canonical representatives."""
        return (
            abs(self.a - other.a) <= tol
            and abs(self.b - other.b) <= tol
            and abs(self.c - other.c) <= tol
            and abs(self.d - other.d) <= tol
        )

    def is_identity(self, tol: float = 1e-9) -> bool:
        return self.approx_eq(MoebiusMap.identity(), tol)

    def apply_chart(self, z: complex) -> complex:
        """Action on the finite chart; raises on the pole (use apply_boundary
        for pole-safe sphere action)."""
        den = self.c * z + self.d
        if abs(den) == 0.0:
            raise DomainError("pole of the chart action; use apply_boundary")
        return (self.a * z + self.b) / den


def compose(m: MoebiusMap, n: MoebiusMap) -> MoebiusMap:
    return m.compose(n)


# ---------------------------------------------------------------------------
# points and chart conversions
# ---------------------------------------------------------------------------

def as_ball_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise DomainError("ball point must be a 3-vector")
    if np.dot(x, x) >= 1.0:
        raise DomainError("ball point must satisfy |x| < 1")
    return x


def as_sphere_point(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (3,):
        raise DomainError("sphere point must be a 3-vector")
    n = np.linalg.norm(eta)
    if abs(n - 1.0) > 1e-12:
        raise DomainError(f"sphere point must be unit norm, got |eta| = {n!r}")
    return eta / n


def sphere_from_chart(u: complex, v: complex = 1.0) -> np.ndarray:
    """Inverse stereographic projection of the homogeneous chart point (u : v);
    (u : 0) is infinity, i.e. the north pole."""
    uv = u * np.conj(v)
    s = abs(u) ** 2 + abs(v) ** 2
    if s == 0.0:
        raise DomainError("(0 : 0) is not a chart point")
    return np.array([2 * uv.real / s, 2 * uv.imag / s, (abs(u) ** 2 - abs(v) ** 2) / s])


def chart_from_sphere(eta) -> tuple[complex, complex]:
    """Homogeneous chart coordinates (u : v) of a sphere point; v = 0 exactly
    at the pole. Projectively (eta1 + i eta2 : 1 - eta3) = (1 + eta3 :
    eta1 - i eta2); the second form is used on the upper hemisphere where the
    first degenerates."""
    eta = as_sphere_point(eta)
    if eta[2] > 0.0:
        return complex(1.0 + eta[2]), complex(eta[0], -eta[1])
    return complex(eta[0], eta[1]), complex(1.0 - eta[2])


def ball_from_halfspace(z: complex, t: float) -> np.ndarray:
    if t <= 0.0:
        raise DomainError("half-space point needs t > 0")
    s = abs(z) ** 2 + (t + 1.0) ** 2
    return np.array([2 * z.real / s, 2 * z.imag / s, 1.0 - 2 * (t + 1.0) / s])


def halfspace_from_ball(x) -> tuple[complex, float]:
    x = as_ball_point(x)
    den = float(np.dot(x, x)) - 2.0 * x[2] + 1.0
    return complex(2 * x[0], 2 * x[1]) / den, (1.0 - float(np.dot(x, x))) / den


# ---------------------------------------------------------------------------
# group actions
# ---------------------------------------------------------------------------

def apply_boundary(m: MoebiusMap, eta) -> np.ndarray:
    """Conformal extension of m to the sphere at infinity.

    Computed in homogeneous chart coordinates, so the pole needs no special
    case: when the image is the chart's point at infinity the result is the
    north pole exactly.
    """
    u, v = chart_from_sphere(eta)
    return sphere_from_chart(m.a * u + m.b * v, m.c * u + m.d * v)


def apply_ball(m: MoebiusMap, x) -> np.ndarray:
    """Isometric action on the ball via the half-space quaternionic extension."""
    x = as_ball_point(x)
    if 1.0 - np.linalg.norm(x) < 1e-14:
        raise DomainError("point too close to the sphere for stable action")
    z, t = halfspace_from_ball(x)
    den = abs(m.c * z + m.d) ** 2 + abs(m.c) ** 2 * t * t
    z2 = ((m.a * z + m.b) * np.conj(m.c * z + m.d) + m.a * np.conj(m.c) * t * t) / den
    t2 = t / den
    return ball_from_halfspace(z2, t2)


# ---------------------------------------------------------------------------
# metric quantities
# ---------------------------------------------------------------------------

def dist_h3(x, y) -> float:
    """Hyperbolic distance, cosh d = 1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))."""
    x = as_ball_point(x)
    y = as_ball_point(y)
    diff = x - y
    arg = 1.0 + 2.0 * float(np.dot(diff, diff)) / (
        (1.0 - float(np.dot(x, x))) * (1.0 - float(np.dot(y, y)))
    )
    return float(np.arccosh(max(arg, 1.0)))


def dist_halfspace(z1: complex, t1: float, z2: complex, t2: float) -> float:
    arg = 1.0 + (abs(z1 - z2) ** 2 + (t1 - t2) ** 2) / (2.0 * t1 * t2)
    return float(np.arccosh(max(arg, 1.0)))


def gromov_product(x, y, z) -> float:
    """(y|z)_x = (d(x,y) + d(x,z) - d(y,z)) / 2."""
    return 0.5 * (dist_h3(x, y) + dist_h3(x, z) - dist_h3(y, z))


def poisson_kernel(x, eta) -> float:
    x = as_ball_point(x)
    eta = as_sphere_point(eta)
    diff = x - eta
    return (1.0 - float(np.dot(x, x))) / float(np.dot(diff, diff))


def busemann(x, eta, y) -> float:
    """b_{x,eta}(y) = log P(x,eta) - log P(y,eta); zero at y = x and
    decreasing along rays toward eta."""
    return float(np.log(poisson_kernel(x, eta)) - np.log(poisson_kernel(y, eta)))


def ideal_geodesic_closest_point(eta1, eta2) -> np.ndarray:
    """Point of the geodesic with ideal endpoints eta1, eta2 that is closest
    to the origin (the origin itself for a diameter)."""
    eta1 = as_sphere_point(eta1)
    eta2 = as_sphere_point(eta2)
    dot = float(np.dot(eta1, eta2))
    if dot >= 1.0 - 1e-14:
        raise DomainError("ideal endpoints must be distinct")
    if dot <= -1.0 + 1e-14:
        return ORIGIN.copy()
    c = (eta1 + eta2) / (1.0 + dot)
    cn = float(np.linalg.norm(c))
    r = np.sqrt(max(cn * cn - 1.0, 0.0))
    return c * (1.0 - r / cn)


def ideal_geodesic_point(eta1, eta2, phi: float) -> np.ndarray:
    """Point of the geodesic (eta1, eta2) at circle parameter phi; phi = 0 is
    the closest point to the origin and the endpoints sit at +/- phi_max."""
    eta1 = as_sphere_point(eta1)
    eta2 = as_sphere_point(eta2)
    dot = float(np.dot(eta1, eta2))
    if dot >= 1.0 - 1e-14:
        raise DomainError("ideal endpoints must be distinct")
    if dot <= -1.0 + 1e-14:
        # diameter through the origin toward eta2
        return np.tanh(phi / 2.0) * eta2
    c = (eta1 + eta2) / (1.0 + dot)
    cn = float(np.linalg.norm(c))
    r = np.sqrt(cn * cn - 1.0)
    inward = -c / cn
    e = eta2 - float(np.dot(eta2, c / cn)) * c / cn
    e /= np.linalg.norm(e)
    phi_max = np.arccos(min(1.0, r / cn))  # endpoint parameter: |c + r w| = 1
    if abs(phi) >= phi_max:
        raise DomainError("parameter beyond the ideal endpoints")
    return c + r * (np.cos(phi) * inward + np.sin(phi) * e)


def busemann_cocycle(o, eta1, eta2) -> float:
    """Overlap length on the geodesic (eta1, eta2) of the two horoballs through o.

    Evaluated as -(b_{o,eta1}(y) + b_{o,eta2}(y)) at a point y of the geodesic;
    the value does not depend on the choice of y. Nonnegative, and zero exactly
    when o lies on the geodesic. (The sign makes the horoball-overlap geometry
    and nonnegativity hold with the Busemann convention above.)
    """
    o = as_ball_point(o)
    y = ideal_geodesic_closest_point(eta1, eta2)
    return -(busemann(o, eta1, y) + busemann(o, eta2, y))


def visual_distance(eta1, eta2, params: "AnalysisParams", orbit_probe=None) -> float:
    """Visual quasi-metric e^{-eps (eta1|eta2)_o}, the boundary Gromov product
    approximated by interior points along the radii at radius 1 - 1e-6
    (or by the supplied probe points, nearest-in-angle probe per endpoint)."""
    eta1 = as_sphere_point(eta1)
    eta2 = as_sphere_point(eta2)
    if float(np.dot(eta1, eta2)) >= 1.0 - 1e-14:
        raise DomainError("visual distance needs distinct boundary points")
    if orbit_probe is None or len(orbit_probe) == 0:
        p1 = (1.0 - 1e-6) * eta1
        p2 = (1.0 - 1e-6) * eta2
    else:
        probes = [as_ball_point(p) for p in orbit_probe]
        p1 = max(probes, key=lambda p: float(np.dot(p, eta1)))
        p2 = max(probes, key=lambda p: float(np.dot(p, eta2)))
    gp = gromov_product(ORIGIN, p1, p2)
    return float(np.exp(-params.eps_visual * gp))


@dataclass(frozen=True)
class AnalysisParams:
    """Numeric analysis knobs: thin-triangle constant, visual metric epsilon,
    generic tolerance."""

    delta_hyp: float = 1.0
    eps_visual: float = 1.0
    tol: float = 1e-9

    def __post_init__(self):
        if self.delta_hyp < 0:
            raise DomainError("delta_hyp must be >= 0")
        if self.eps_visual <= 0 or self.tol <= 0:
            raise DomainError("eps_visual and tol must be positive")


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

_PARABOLIC_BAND = 1e-9


def classify(m: MoebiusMap) -> tuple[str, list[np.ndarray]]:
    """Trace classification with fixed boundary points.

    Returns (kind, fixed) where kind is one of identity / parabolic /
    elliptic / loxodromic and fixed lists the fixed sphere points
    (attracting first for loxodromics).
    """
    if m.is_identity():
        return "identity", []
    tr2 = m.trace() ** 2
    if abs(tr2 - 4.0) <= _PARABOLIC_BAND:
        # single fixed point: (a - d) / 2c, or infinity when c = 0
        if abs(m.c) <= _SIGN_TOL:
            return "parabolic", [NORTH_POLE.copy()]
        return "parabolic", [sphere_from_chart((m.a - m.d) / (2.0 * m.c))]
    kind = "elliptic" if abs(tr2.imag) <= _PARABOLIC_BAND and -_PARABOLIC_BAND <= tr2.real < 4.0 else "loxodromic"
    if abs(m.c) <= _SIGN_TOL:
        # fixed points: infinity and b/(d - a)
        finite = sphere_from_chart(m.b / (m.d - m.a))
        pts = [NORTH_POLE.copy(), finite]
        if abs(m.a) < 1.0:  # multiplier at infinity is 1/a^2
            pts.reverse()
        return kind, pts
    disc = np.sqrt(complex(tr2 - 4.0))
    z_plus = (m.a - m.d + disc) / (2.0 * m.c)
    z_minus = (m.a - m.d - disc) / (2.0 * m.c)
    # attracting fixed point has |m'(z)| = 1/|cz+d|^2 < 1
    pts = [z_plus, z_minus]
    pts.sort(key=lambda z: 1.0 / abs(m.c * z + m.d) ** 2)
    return kind, [sphere_from_chart(z) for z in pts]


# ---------------------------------------------------------------------------
# vectorized internals (orbit enumeration and walk engines)
# ---------------------------------------------------------------------------

def mul_batch(A, g):
    """Right-multiply a batch of matrices (4 arrays a,b,c,d) by one matrix."""
    a, b, c, d = A
    return (
        a * g.a + b * g.c,
        a * g.b + b * g.d,
        c * g.a + d * g.c,
        c * g.b + d * g.d,
    )


def orbit_halfspace_batch(a, b, c, d, det_real=1.0):
    """Image of the base point (z=0, t=1) for a batch of matrices whose
    determinant is the (real, positive) scalar det_real."""
    den = np.abs(c) ** 2 + np.abs(d) ** 2
    z = (b * np.conj(d) + a * np.conj(c)) / den
    t = det_real / den
    return z, t


def dist_o_halfspace_batch(z, t):
    arg = 1.0 + (np.abs(z) ** 2 + (t - 1.0) ** 2) / (2.0 * t)
    return np.arccosh(np.maximum(arg, 1.0))


def ball_from_halfspace_batch(z, t):
    s = np.abs(z) ** 2 + (t + 1.0) ** 2
    return np.stack([2 * z.real / s, 2 * z.imag / s, 1.0 - 2 * (t + 1.0) / s], axis=-1)


def ball_norm_from_halfspace_batch(z, t):
    """|ball point| computed stably: 1 - |x|^2 = 4t / (|z|^2 + (t+1)^2)."""
    s = np.abs(z) ** 2 + (t + 1.0) ** 2
    return np.sqrt(np.maximum(1.0 - 4.0 * t / s, 0.0))
