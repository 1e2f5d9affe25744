"""Grid calculus shared by the discrete-surface modules.

All fields live on an (nu, nv) grid stored in the first two array axes;
trailing axes hold vector / matrix components.  Periodic grids wrap,
bordered grids use one-sided second-order stencils at the edges (tests
only ever read the interior, outside the ghost margin).
"""

import math

import numpy as np

from .errors import GeometryError

PERIODIC = "periodic"
BORDERED = "bordered"


def deriv(field, axis, coords, topology=PERIODIC, mode="central"):
    """Differentiate `field` along grid `axis` (0 or 1).

    coords: 1d array of grid coordinates along that axis (uniform required
    for periodic/spectral).  mode: 'central' or 'spectral'.
    """
    f = np.asarray(field)
    n = f.shape[axis]
    if n < 4:
        raise GeometryError("grid too coarse to differentiate")
    if topology == PERIODIC:
        h = coords[1] - coords[0]
        if mode == "spectral":
            return _spectral_deriv(f, axis, n * h)
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)
    if mode == "spectral":
        raise GeometryError("spectral differentiation needs a periodic grid")
    # bordered: non-uniform aware, one-sided 2nd order at the edges
    moved = np.moveaxis(f, axis, 0)
    out = np.gradient(moved, coords, axis=0, edge_order=2)
    return np.moveaxis(out, 0, axis)


def _spectral_deriv(f, axis, period):
    k = 2.0 * np.pi * np.fft.fftfreq(f.shape[axis], d=period / f.shape[axis])
    shape = [1] * f.ndim
    shape[axis] = f.shape[axis]
    fk = np.fft.fft(f, axis=axis)
    df = np.fft.ifft(1j * k.reshape(shape) * fk, axis=axis)
    if np.isrealobj(f):
        return df.real
    return df


def stencil_weights(offsets, order):
    """Finite-difference weights for d^order/dx^order on integer offsets.

    Unique interpolatory stencil: solve sum_j w_j o_j^k = k! delta_{k,order}.
    """
    offsets = np.asarray(offsets, dtype=float)
    m = len(offsets)
    if order >= m:
        raise GeometryError("stencil too short for requested derivative order")
    a = np.vander(offsets, m, increasing=True).T
    b = np.zeros(m)
    b[order] = math.factorial(order)
    return np.linalg.solve(a, b)


def diff_matrix(n, h, order, points=9):
    """Dense 1d differentiation matrix of accuracy `points - order`.

    Interior rows use the centered stencil; rows near the boundary are
    shifted (same width, same formal order, larger constants).
    """
    if n < points:
        raise GeometryError(f"need at least {points} samples, got {n}")
    half = points // 2
    d = np.zeros((n, n))
    center = stencil_weights(np.arange(-half, half + 1), order)
    for i in range(n):
        lo = min(max(i - half, 0), n - points)
        d[i, lo:lo + points] = stencil_weights(np.arange(lo, lo + points) - i, order)
    # overwrite interior rows with the symmetric stencil (cheaper constants)
    for i in range(half, n - half):
        d[i, :] = 0.0
        d[i, i - half:i + half + 1] = center
    return d / h ** order


def sym2(m):
    """Symmetrize the trailing 2x2 axes."""
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def det2(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def tr2(m):
    return m[..., 0, 0] + m[..., 1, 1]


def inv2(m):
    """Inverse of a field of 2x2 matrices (vectorized adjugate)."""
    d = det2(m)
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / d[..., None, None]


def mat2(a, b, c):
    """Symmetric 2x2 field from component fields [[a, b], [b, c]]."""
    a, b, c = np.broadcast_arrays(a, b, c)
    out = np.empty(a.shape + (2, 2))
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = b
    out[..., 1, 1] = c
    return out


def christoffel(metric, coords_u, coords_v, topology=PERIODIC, mode="central"):
    """Christoffel symbols Gamma[..., k, i, j] of a 2x2 metric field."""
    dg = np.stack(
        [deriv(metric, 0, coords_u, topology, mode),
         deriv(metric, 1, coords_v, topology, mode)],
        axis=-3,
    )  # (..., 2 deriv index, 2, 2)
    ginv = inv2(metric)
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    gamma = np.empty(metric.shape[:-2] + (2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                s = 0.0
                for l in range(2):
                    s = s + ginv[..., k, l] * (
                        dg[..., i, j, l] + dg[..., j, i, l] - dg[..., l, i, j]
                    )
                gamma[..., k, i, j] = 0.5 * s
    return gamma


def codazzi_residual_field(metric, operator, coords_u, coords_v,
                           topology=PERIODIC, mode="central"):
    """Pointwise norm of (d^nabla T)(e_u, e_v) for a (1,1) tensor field T.

    nabla is the Levi-Civita connection of `metric`; the residual vector is
    measured in the metric norm.
    """
    gamma = christoffel(metric, coords_u, coords_v, topology, mode)
    du = deriv(operator, 0, coords_u, topology, mode)
    dv = deriv(operator, 1, coords_v, topology, mode)
    res = np.zeros(metric.shape[:-2] + (2,))
    for k in range(2):
        val = du[..., k, 1] - dv[..., k, 0]
        for m in range(2):
            val = val + gamma[..., k, 0, m] * operator[..., m, 1]
            val = val - gamma[..., k, 1, m] * operator[..., m, 0]
        res[..., k] = val
    # |res|_g
    sq = np.zeros(metric.shape[:-2])
    for a in range(2):
        for b in range(2):
            sq = sq + metric[..., a, b] * res[..., a] * res[..., b]
    return np.sqrt(np.maximum(sq, 0.0))


def brioschi_curvature(metric, coords_u, coords_v, topology=PERIODIC, mode="central"):
    """Gauss curvature of a 2x2 metric field from the metric alone.

    Brioschi's determinant formula in the coefficients E, F, G; derivatives
    are taken with the grid's native scheme, so the result is O(h^2) on
    discrete data and exact on (spectrally sampled) smooth periodic data.
    """
    e = metric[..., 0, 0]
    f = metric[..., 0, 1]
    g = metric[..., 1, 1]

    def du(x):
        return deriv(x, 0, coords_u, topology, mode)

    def dv(x):
        return deriv(x, 1, coords_v, topology, mode)

    eu, ev = du(e), dv(e)
    fu, fv = du(f), dv(f)
    gu, gv = du(g), dv(g)
    evv = dv(ev)
    fuv = dv(fu)
    guu = du(gu)

    m1 = np.empty(e.shape + (3, 3))
    m1[..., 0, 0] = -0.5 * evv + fuv - 0.5 * guu
    m1[..., 0, 1] = 0.5 * eu
    m1[..., 0, 2] = fu - 0.5 * ev
    m1[..., 1, 0] = fv - 0.5 * gu
    m1[..., 1, 1] = e
    m1[..., 1, 2] = f
    m1[..., 2, 0] = 0.5 * gv
    m1[..., 2, 1] = f
    m1[..., 2, 2] = g

    m2 = np.empty_like(m1)
    m2[..., 0, 0] = 0.0
    m2[..., 0, 1] = 0.5 * ev
    m2[..., 0, 2] = 0.5 * gu
    m2[..., 1, 0] = 0.5 * ev
    m2[..., 1, 1] = e
    m2[..., 1, 2] = f
    m2[..., 2, 0] = 0.5 * gu
    m2[..., 2, 1] = f
    m2[..., 2, 2] = g

    det_g = e * g - f * f
    return (np.linalg.det(m1) - np.linalg.det(m2)) / det_g ** 2


def fit_order(h_values, residuals):
    """Least-squares slope of log(residual) against log(h)."""
    h = np.log(np.asarray(h_values, dtype=float))
    r = np.log(np.asarray(residuals, dtype=float))
    return np.polyfit(h, r, 1)[0]


class GridChart:
    """Plain parameter grid: coordinates, topology and quadrature weights.

    Plays the role of a SurfacePatch for fields that live on the conformal
    boundary rather than on an embedded surface.
    """

    def __init__(self, u_coords, v_coords, topology=PERIODIC, weights=None,
                 margin=0, deriv_mode="central"):
        self.u_coords = np.asarray(u_coords, dtype=float)
        self.v_coords = np.asarray(v_coords, dtype=float)
        self.topology = topology
        self.margin = margin
        self.deriv_mode = deriv_mode
        if weights is None:
            hu = self.u_coords[1] - self.u_coords[0]
            hv = self.v_coords[1] - self.v_coords[0]
            weights = np.full((len(self.u_coords), len(self.v_coords)), hu * hv)
            if topology == BORDERED:
                m = max(margin, 2)
                weights[:m, :] = 0.0
                weights[-m:, :] = 0.0
                weights[:, :m] = 0.0
                weights[:, -m:] = 0.0
        self.weights = weights

    @property
    def shape(self):
        return (len(self.u_coords), len(self.v_coords))

    @property
    def interior(self):
        return self.weights > 0

    def deriv(self, f, axis, mode=None):
        coords = self.u_coords if axis == 0 else self.v_coords
        return deriv(f, axis, coords, self.topology, mode or self.deriv_mode)
