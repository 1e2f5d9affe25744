"""Exact geometry of the upper half-space model of hyperbolic 3-space.

Points are (x1, x2, xi) with xi > 0 and metric (dx1^2 + dx2^2 + dxi^2)/xi^2;
the curvature radius is 1 throughout.  Geodesics are vertical rays and
vertical semicircles centered on the boundary plane, handled in closed form
so the discrete modules can lean on this as ground truth.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class AmbientPoint:
    """A point of the upper half-space model."""

    x1: float
    x2: float
    xi: float

    def __post_init__(self):
        if not self.xi > 0:
            raise GeometryError(f"height must be positive, got {self.xi}")

    @property
    def array(self):
        return np.array([self.x1, self.x2, self.xi])

    @classmethod
    def from_array(cls, a):
        return cls(float(a[0]), float(a[1]), float(a[2]))


def hyperbolic_distance(p, q):
    """Distance between two points: cosh d = 1 + |p-q|^2 / (2 xi_p xi_q)."""
    pa, qa = _as_array(p), _as_array(q)
    if np.any(pa[..., 2] <= 0) or np.any(qa[..., 2] <= 0):
        raise GeometryError("points must have positive height")
    diff = pa - qa
    arg = 1.0 + np.sum(diff * diff, axis=-1) / (2.0 * pa[..., 2] * qa[..., 2])
    d = np.arccosh(np.maximum(arg, 1.0))
    return float(d) if np.ndim(d) == 0 else d


def normal_geodesic_flow(p, n, rho):
    """Point at signed distance rho along the geodesic with unit velocity n.

    n must have unit hyperbolic norm at p, i.e. |n|_euclidean = xi.
    """
    point, _ = geodesic_flow(p, n, rho)
    return point


def geodesic_flow(p, n, rho):
    """Closed-form geodesic flow; returns (endpoint, transported velocity)."""
    pa, na = _as_array(p), np.asarray(n, dtype=float)
    pts, vel = flow_points(pa[None, :], na[None, :], rho)
    if isinstance(p, AmbientPoint):
        return AmbientPoint.from_array(pts[0]), vel[0]
    return pts[0], vel[0]


def flow_points(points, normals, rho):
    """Vectorized geodesic flow of unit normals; returns (points, velocities).

    points, normals: (..., 3) arrays; normals hyperbolically unit at each
    point (|n|_euc = xi).
    """
    pts = np.asarray(points, dtype=float)
    nrm = np.asarray(normals, dtype=float)
    xi = pts[..., 2]
    if np.any(xi <= 0):
        raise GeometryError("points must have positive height")
    speed = np.linalg.norm(nrm, axis=-1) / xi
    if np.any(np.abs(speed - 1.0) > _UNIT_TOL):
        raise GeometryError("velocity must be a unit tangent vector")

    out = np.empty_like(pts)
    vel = np.empty_like(nrm)

    nh = np.linalg.norm(nrm[..., :2], axis=-1)
    vertical = nh <= 1e-13 * xi

    # vertical rays: xi -> xi * exp(sign * rho)
    sgn = np.sign(nrm[..., 2])
    fac = np.exp(sgn * rho)
    out[..., 0] = pts[..., 0]
    out[..., 1] = pts[..., 1]
    out[..., 2] = xi * fac
    vel[..., 0] = 0.0
    vel[..., 1] = 0.0
    vel[..., 2] = sgn * xi * fac

    if np.all(vertical):
        return out, vel

    # semicircles in the vertical plane spanned by the horizontal direction u
    m = ~vertical
    u = nrm[..., :2][m] / nh[m][..., None]
    nu = nh[m]                      # in-plane horizontal velocity component
    nxi = nrm[..., 2][m]
    h0 = xi[m]
    sc = h0 * nxi / nu              # circle center offset along u from p
    radius = h0 * h0 / nu           # = sqrt(sc^2 + h0^2) since |n|_euc = xi

    # alpha parametrizes the circle: s = sc + R cos(a), height = R sin(a);
    # unit-speed flow is tan(a/2) = tan(a0/2) exp(-rho)
    sin0 = h0 / radius
    cos0 = -sc / radius
    t0 = sin0 / (1.0 + cos0)        # tan(a0/2), a0 in (0, pi)
    t1 = t0 * np.exp(-rho)
    sin1 = 2.0 * t1 / (1.0 + t1 * t1)
    cos1 = (1.0 - t1 * t1) / (1.0 + t1 * t1)

    s1 = sc + radius * cos1
    h1 = radius * sin1
    out[..., :2][m] = pts[..., :2][m] + s1[..., None] * u
    out[..., 2][m] = h1
    # velocity of the unit-speed parametrization at the endpoint
    vs = radius * sin1 * sin1
    vh = -radius * sin1 * cos1
    vel[..., :2][m] = vs[..., None] * u
    vel[..., 2][m] = vh
    return out, vel


def unit_normalize(p, v):
    """Rescale a tangent vector at p to unit hyperbolic norm."""
    pa, va = _as_array(p), np.asarray(v, dtype=float)
    nrm = np.linalg.norm(va, axis=-1)
    if np.any(nrm == 0):
        raise GeometryError("cannot normalize a zero vector")
    return va * (pa[..., 2] / nrm)[..., None]


def _as_array(p):
    if isinstance(p, AmbientPoint):
        return p.array
    return np.asarray(p, dtype=float)
