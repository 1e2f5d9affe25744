"""Discrete parametric surfaces in hyperbolic 3-space and their invariants.

A SurfacePatch samples an embedding on an (nu, nv) grid, either a doubly
periodic cell or a bordered rectangle with a ghost margin that is excluded
from integrals.  compute_forms produces the induced metric, the shape
operator and the curvatures; analytic families provide the same data in
closed form as ground truth.

Orientation convention: the stored unit normal points in the direction the
equidistant foliation moves (toward the conformal boundary), so a horosphere
carries shape operator +E and a geodesic sphere coth(r) E with the outward
normal.
"""

from dataclasses import dataclass

import numpy as np

from . import gridops
from .errors import DiscretizationError, GeometryError
from .gridops import BORDERED, PERIODIC, det2, deriv, inv2, mat2, sym2, tr2

CLOSED_QUADRATURE = "closed-quadrature"

_MIN_GRID = 8


@dataclass
class SurfacePatch:
    """Discretized parametric surface in the upper half-space model."""

    topology: str
    embedding: np.ndarray          # (nu, nv, 3)
    u_coords: np.ndarray
    v_coords: np.ndarray
    orientation: int = 1           # normal = orientation * (F_u x F_v)
    weights: np.ndarray = None     # parameter-space quadrature weights
    margin: int = 0
    deriv_mode: str = "central"
    # secular (linear-in-parameter) part of a periodic embedding: the pair of
    # constant gradient vectors such that embedding - u*sec_u - v*sec_v wraps
    secular: tuple = None

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=float)
        nu, nv = self.embedding.shape[:2]
        if nu < _MIN_GRID or nv < _MIN_GRID:
            raise GeometryError(f"grid must be at least {_MIN_GRID}x{_MIN_GRID}")
        if np.any(self.embedding[..., 2] <= 0):
            raise GeometryError("all embedding heights must be positive")
        if self.weights is None:
            self.weights = self._default_weights()

    @property
    def shape(self):
        return self.embedding.shape[:2]

    @property
    def interior(self):
        """Mask of nodes that participate in integrals and residual maxima."""
        return self.weights > 0

    def _default_weights(self):
        nu, nv = self.embedding.shape[:2]
        hu = self.u_coords[1] - self.u_coords[0]
        hv = self.v_coords[1] - self.v_coords[0]
        w = np.full((nu, nv), hu * hv)
        if self.topology == BORDERED:
            m = max(self.margin, 2)
            w[:m, :] = 0.0
            w[-m:, :] = 0.0
            w[:, :m] = 0.0
            w[:, -m:] = 0.0
        return w

    def deriv(self, f, axis, mode=None):
        coords = self.u_coords if axis == 0 else self.v_coords
        topo = PERIODIC if self.topology == PERIODIC else BORDERED
        return deriv(f, axis, coords, topo, mode or self.deriv_mode)

    def embedding_deriv(self, axis, mode=None):
        """Derivative of the embedding, secular part handled separately."""
        if self.topology != PERIODIC or self.secular is None:
            return self.deriv(self.embedding, axis, mode)
        sec_u, sec_v = (np.asarray(s, dtype=float) for s in self.secular)
        coords = self.u_coords if axis == 0 else self.v_coords
        uu, vv = np.meshgrid(self.u_coords, self.v_coords, indexing="ij")
        wrapped = (self.embedding - uu[..., None] * sec_u - vv[..., None] * sec_v)
        d = deriv(wrapped, axis, coords, PERIODIC, mode or self.deriv_mode)
        return d + (sec_u if axis == 0 else sec_v)


@dataclass
class FormField:
    """Per-node fundamental forms and curvatures of a surface patch.

    metric/second/third are symmetric 2x2 fields, shape = metric^{-1} second,
    mean = tr(shape), ext_curv = det(shape), curv = ext_curv - 1 (Gauss),
    area_density = sqrt(det metric).
    """

    patch: SurfacePatch
    metric: np.ndarray
    second: np.ndarray
    third: np.ndarray
    shape: np.ndarray
    mean: np.ndarray
    ext_curv: np.ndarray
    curv: np.ndarray
    area_density: np.ndarray
    normal: np.ndarray = None
    selfadj_residual: float = 0.0


# ambient Christoffel correction of the half-space metric delta_ij / xi^2
def _ambient_gamma(a, b, xi):
    out = np.empty_like(a)
    out[..., 0] = -(a[..., 0] * b[..., 2] + a[..., 2] * b[..., 0]) / xi
    out[..., 1] = -(a[..., 1] * b[..., 2] + a[..., 2] * b[..., 1]) / xi
    out[..., 2] = (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
                   - a[..., 2] * b[..., 2]) / xi
    return out


def unit_normal_field(patch, fu=None, fv=None):
    """Hyperbolically unit normal field following the patch orientation."""
    if fu is None:
        fu = patch.embedding_deriv(0)
    if fv is None:
        fv = patch.embedding_deriv(1)
    cross = np.cross(fu, fv)
    norm = np.linalg.norm(cross, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DiscretizationError("degenerate tangent plane",
                                  node=_first_bad(norm[..., 0] == 0))
    xi = patch.embedding[..., 2]
    return patch.orientation * cross / norm * xi[..., None]


def compute_forms(patch, mode=None):
    """First/second/third fundamental forms and shape operator of a patch.

    The metric comes from central (or spectral) differences of the embedding
    under the ambient metric; the shape operator from the ambient covariant
    derivative of the unit normal.
    """
    if patch.topology == CLOSED_QUADRATURE:
        raise GeometryError(
            "closed quadrature patches carry exact forms; use a band patch "
            "for finite differences")
    emb = patch.embedding
    xi = emb[..., 2]
    fu = patch.embedding_deriv(0, mode)
    fv = patch.embedding_deriv(1, mode)

    def dot(a, b):
        return np.sum(a * b, axis=-1) / xi ** 2

    metric = mat2(dot(fu, fu), dot(fu, fv), dot(fv, fv))
    dets = det2(metric)
    if np.any(dets <= 0):
        raise DiscretizationError("induced metric is not positive definite",
                                  node=_first_bad(dets <= 0))

    normal = unit_normal_field(patch, fu, fv)
    dnu = patch.deriv(normal, 0, mode) + _ambient_gamma(fu, normal, xi)
    dnv = patch.deriv(normal, 1, mode) + _ambient_gamma(fv, normal, xi)

    # second_raw[i, j] = g(nabla_{e_j} nu, e_i) = I(B e_j, e_i)
    second_raw = np.empty(metric.shape)
    second_raw[..., 0, 0] = dot(dnu, fu)
    second_raw[..., 1, 0] = dot(dnu, fv)
    second_raw[..., 0, 1] = dot(dnv, fu)
    second_raw[..., 1, 1] = dot(dnv, fv)
    asym = np.abs(second_raw[..., 0, 1] - second_raw[..., 1, 0])
    second = sym2(second_raw)

    shape = inv2(metric) @ second
    third = np.swapaxes(shape, -1, -2) @ metric @ shape
    mean = tr2(shape)
    ext = det2(shape)
    forms = FormField(
        patch=patch,
        metric=metric,
        second=second,
        third=sym2(third),
        shape=shape,
        mean=mean,
        ext_curv=ext,
        curv=ext - 1.0,
        area_density=np.sqrt(dets),
        normal=normal,
        selfadj_residual=float(np.max(asym[patch.interior])),
    )
    return forms


def gauss_residual(forms):
    """max |det(shape) - (K_intrinsic + 1)| with K_intrinsic from the metric alone."""
    patch = forms.patch
    topo = PERIODIC if patch.topology == PERIODIC else BORDERED
    k_int = gridops.brioschi_curvature(
        forms.metric, patch.u_coords, patch.v_coords, topo, patch.deriv_mode)
    res = np.abs(forms.ext_curv - (k_int + 1.0))
    return float(np.max(res[patch.interior]))


def codazzi_residual(forms):
    """max-node norm of the Codazzi residual of the shape operator."""
    patch = forms.patch
    topo = PERIODIC if patch.topology == PERIODIC else BORDERED
    res = gridops.codazzi_residual_field(
        forms.metric, forms.shape, patch.u_coords, patch.v_coords,
        topo, patch.deriv_mode)
    return float(np.max(res[patch.interior]))


def integrate(forms, values=None):
    """Surface integral: sum of weights * area_density * values."""
    w = forms.patch.weights * forms.area_density
    if values is None:
        return float(np.sum(w))
    return float(np.sum(w * values))


def euler_characteristic(forms):
    """(1/2pi) * integral of the Gauss curvature; genus = 1 - chi/2."""
    return integrate(forms, forms.curv) / (2.0 * np.pi)


def measured_genus(forms, tol=0.1):
    chi = euler_characteristic(forms)
    chi_round = round(chi)
    if abs(chi - chi_round) > tol or chi_round % 2:
        raise DiscretizationError(
            f"Gauss-Bonnet integral {chi:.6f} is not close to an even integer")
    return 1 - chi_round // 2


# ---------------------------------------------------------------------------
# constructors


def periodic_coords(length, n):
    return np.arange(n) * (length / n)


def graph_patch(height, lu, lv, n, m, deriv_mode="central"):
    """Periodic patch {xi = height(x1, x2)} over the cell [0,lu) x [0,lv).

    height: (n, m) array or callable on meshgrid arrays.  The normal points
    downward (toward the boundary plane).
    """
    u = periodic_coords(lu, n)
    v = periodic_coords(lv, m)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    psi = height(uu, vv) if callable(height) else np.asarray(height, dtype=float)
    emb = np.stack([uu, vv, psi], axis=-1)
    return SurfacePatch(PERIODIC, emb, u, v, orientation=-1,
                        deriv_mode=deriv_mode,
                        secular=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)))


def random_graph_patch(rng, lu=2.0 * np.pi, lv=2.0 * np.pi, n=48, m=48,
                       amplitude=0.05, modes=2, base=1.0, deriv_mode="central"):
    """Smooth random periodic graph surface, horospherically convex for
    small amplitudes."""
    u = periodic_coords(lu, n)
    v = periodic_coords(lv, m)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    psi = np.full((n, m), float(base))
    for p in range(1, modes + 1):
        for q in range(0, modes + 1):
            a, b, c, d = rng.normal(size=4) * amplitude / (p * p + q * q)
            psi += a * np.cos(2 * np.pi * (p * uu / lu + q * vv / lv) + b)
            psi += c * np.sin(2 * np.pi * (p * uu / lu - q * vv / lv) + d)
    return graph_patch(psi, lu, lv, n, m, deriv_mode=deriv_mode)


def horosphere_patch(c, lu, lv, n, m):
    """Exact horosphere cell {xi = c}: patch plus closed-form forms."""
    if c <= 0:
        raise GeometryError("horosphere height must be positive")
    patch = graph_patch(lambda x, y: np.full_like(x, float(c)), lu, lv, n, m)
    eye = np.broadcast_to(np.eye(2), (n, m, 2, 2)).copy()
    metric = eye / c ** 2
    ones = np.ones((n, m))
    forms = FormField(
        patch=patch, metric=metric, second=metric.copy(), third=metric.copy(),
        shape=eye.copy(), mean=2.0 * ones, ext_curv=ones.copy(),
        curv=np.zeros((n, m)), area_density=ones / c ** 2,
        normal=_graph_down_normal(patch),
    )
    return patch, forms


def _graph_down_normal(patch):
    nrm = np.zeros_like(patch.embedding)
    nrm[..., 2] = -patch.embedding[..., 2]
    return nrm


def sphere_patch(r, n=48, m=96):
    """Closed geodesic sphere of radius r with Gauss-Legendre quadrature.

    Centered at (0, 0, cosh r); quadrature integrates smooth functions of the
    polar angle to machine precision.  Forms are exact (B = coth(r) E); the
    patch is not meant for finite differencing.
    """
    if r <= 0:
        raise GeometryError("sphere radius must be positive")
    mu, wgl = np.polynomial.legendre.leggauss(n)
    theta = np.arccos(mu[::-1])
    wtheta = wgl[::-1] / np.sin(theta)      # absorbs the d(cos t) substitution
    phi = periodic_coords(2.0 * np.pi, m)
    emb = _sphere_embedding(r, theta, phi)
    patch = SurfacePatch(CLOSED_QUADRATURE, emb, theta, phi, orientation=1,
                         weights=np.outer(wtheta, np.full(m, 2.0 * np.pi / m)))
    return patch, _sphere_forms(patch, r, theta, phi)


def sphere_band_patch(r, n=48, m=96, theta_lo=0.7, theta_hi=None):
    """Bordered band of a geodesic sphere, suitable for finite differences."""
    if r <= 0:
        raise GeometryError("sphere radius must be positive")
    if theta_hi is None:
        theta_hi = np.pi - theta_lo
    theta = np.linspace(theta_lo, theta_hi, n)
    phi = periodic_coords(2.0 * np.pi, m)
    emb = _sphere_embedding(r, theta, phi)
    # phi wraps but theta does not; treat as bordered and mask the margin
    patch = SurfacePatch(BORDERED, emb, theta, phi, orientation=1, margin=2)
    return patch, _sphere_forms(patch, r, theta, phi)


def _sphere_embedding(r, theta, phi):
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    st, ct = np.sin(tt), np.cos(tt)
    return np.stack([
        np.sinh(r) * st * np.cos(pp),
        np.sinh(r) * st * np.sin(pp),
        np.cosh(r) + np.sinh(r) * ct,
    ], axis=-1)


def _sphere_forms(patch, r, theta, phi):
    n, m = len(theta), len(phi)
    st = np.sin(theta)[:, None] * np.ones((1, m))
    metric = np.zeros((n, m, 2, 2))
    metric[..., 0, 0] = np.sinh(r) ** 2
    metric[..., 1, 1] = (np.sinh(r) * st) ** 2
    eye = np.broadcast_to(np.eye(2), (n, m, 2, 2)).copy()
    k = 1.0 / np.tanh(r)
    ones = np.ones((n, m))
    normal = _sphere_outward_normal(patch, r)
    return FormField(
        patch=patch, metric=metric, second=k * metric, third=k * k * metric,
        shape=k * eye, mean=2.0 * k * ones, ext_curv=k * k * ones,
        curv=(k * k - 1.0) * ones, area_density=np.sinh(r) ** 2 * st,
        normal=normal,
    )


def _sphere_outward_normal(patch, r):
    center = np.array([0.0, 0.0, np.cosh(r)])
    radial = patch.embedding - center
    radial /= np.linalg.norm(radial, axis=-1, keepdims=True)
    return radial * patch.embedding[..., 2:3]


def plane_band_patch(rho0, n=48, m=48, u_span=2.0, s_span=2.0):
    """Bordered patch of the surface at distance rho0 from a vertical plane.

    Exact forms: B = tanh(rho0) E; rho0 = 0 is the totally geodesic plane.
    """
    u = np.linspace(-u_span / 2, u_span / 2, n)
    s = np.linspace(-s_span / 2, s_span / 2, m)
    uu, ss = np.meshgrid(u, s, indexing="ij")
    t = np.tanh(rho0)
    emb = np.stack([
        uu,
        -np.exp(ss) * t,
        np.exp(ss) / np.cosh(rho0),
    ], axis=-1)
    patch = SurfacePatch(BORDERED, emb, u, s, orientation=1, margin=2)

    metric = np.zeros((n, m, 2, 2))
    metric[..., 0, 0] = np.cosh(rho0) ** 2 * np.exp(-2.0 * ss)
    metric[..., 1, 1] = np.cosh(rho0) ** 2
    eye = np.broadcast_to(np.eye(2), (n, m, 2, 2)).copy()
    ones = np.ones((n, m))
    forms = FormField(
        patch=patch, metric=metric, second=t * metric, third=t * t * metric,
        shape=t * eye, mean=2.0 * t * ones, ext_curv=t * t * ones,
        curv=(t * t - 1.0) * ones,
        area_density=np.cosh(rho0) ** 2 * np.exp(-ss),
        normal=unit_normal_field(patch),
    )
    return patch, forms


def analytic_family(kind, **params):
    """Closed-form test families: exact forms, no finite differences.

    kind: 'geodesic-sphere' (r), 'plane-equidistant' (rho), 'horosphere' (c).
    """
    if kind == "geodesic-sphere":
        return sphere_patch(params.pop("r"), **params)
    if kind == "plane-equidistant":
        return plane_band_patch(params.pop("rho"), **params)
    if kind == "horosphere":
        c = params.pop("c", 1.0)
        params.setdefault("lu", 2.0 * np.pi)
        params.setdefault("lv", 2.0 * np.pi)
        params.setdefault("n", 32)
        params.setdefault("m", 32)
        return horosphere_patch(c, **params)
    raise GeometryError(f"unknown analytic family '{kind}'")


def sphere_area(r):
    return 4.0 * np.pi * np.sinh(r) ** 2


def ball_volume(r):
    return np.pi * (np.sinh(2.0 * r) - 2.0 * r)


# ---------------------------------------------------------------------------
# mesh export


def write_obj(patch, path):
    """Export the patch to Wavefront OBJ (half-space coordinates, quad faces)."""
    nu, nv = patch.shape
    emb = patch.embedding
    lines = []
    for i in range(nu):
        for j in range(nv):
            x, y, z = emb[i, j]
            lines.append(f"v {x:.12g} {y:.12g} {z:.12g}")

    def vid(i, j):
        return i * nv + j + 1

    wrap = patch.topology in (PERIODIC, CLOSED_QUADRATURE)
    imax = nu if (wrap and patch.topology == PERIODIC) else nu - 1
    jmax = nv if wrap else nv - 1
    for i in range(imax):
        for j in range(jmax):
            i2, j2 = (i + 1) % nu, (j + 1) % nv
            lines.append(
                f"f {vid(i, j)} {vid(i2, j)} {vid(i2, j2)} {vid(i, j2)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _first_bad(mask):
    idx = np.argwhere(mask)
    return tuple(idx[0]) if len(idx) else None
