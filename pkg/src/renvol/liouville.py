"""Liouville fields, the Epstein foliation they generate, and the associated
quadratic differential.

A Liouville field phi describes a conformal metric e^phi |dz|^2 on either a
doubly periodic lattice (periods omega1, omega2) or a bordered rectangle of
the z-plane.  The Epstein construction turns (phi, rho) into an explicit
surface in the upper half-space whose equidistant foliation realizes that
metric at infinity.  theta = phi_zz - phi_z^2 / 2 is the quadratic
differential whose real part is the traceless part of the second fundamental
form at infinity.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import surfaces
from .errors import GeometryError
from .gridops import BORDERED, PERIODIC, GridChart, det2, diff_matrix, inv2, mat2, sym2
from .infinity import InfinityData

_SQRT2 = np.sqrt(2.0)


@dataclass
class LiouvilleField:
    """Real field phi with e^phi |dz|^2 as the metric at infinity.

    Periodic fields sample the fundamental cell z = s*omega1 + t*omega2,
    (s, t) in [0,1)^2; bordered fields sample a rectangle x + i y with a
    ghost margin.  mode picks the derivative scheme: 'spectral' (periodic
    default), 'central', or 'analytic' when closed-form derivatives are
    attached.
    """

    phi: np.ndarray
    chart: GridChart
    omega1: complex = 1.0 + 0.0j
    omega2: complex = 0.0 + 1.0j
    mode: str = "spectral"
    analytic_derivs: tuple = None   # (phi_z, phi_zz, phi_zzbar)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.chart.topology == PERIODIC:
            o1, o2 = complex(self.omega1), complex(self.omega2)
            if abs(o1.real * o2.imag - o1.imag * o2.real) < 1e-14:
                raise GeometryError("periods must be R-independent")

    @property
    def z(self):
        """Complex grid nodes."""
        if self.chart.topology == PERIODIC:
            ss, tt = np.meshgrid(self.chart.u_coords, self.chart.v_coords,
                                 indexing="ij")
            return ss * complex(self.omega1) + tt * complex(self.omega2)
        xx, yy = np.meshgrid(self.chart.u_coords, self.chart.v_coords,
                             indexing="ij")
        return xx + 1j * yy

    @property
    def jacobian(self):
        """d(x, y)/d(u, v) of the chart (columns are the period vectors)."""
        if self.chart.topology == PERIODIC:
            o1, o2 = complex(self.omega1), complex(self.omega2)
            return np.array([[o1.real, o2.real], [o1.imag, o2.imag]])
        return np.eye(2)

    def cell_measure(self):
        """Euclidean area weights dx dy per node."""
        return self.chart.weights * abs(np.linalg.det(self.jacobian))


def periodic_field(phi, omega1, omega2, mode="spectral"):
    """Periodic Liouville field from an (n, m) array or callable phi(z)."""
    if callable(phi):
        n = m = 64
        chart = GridChart(np.arange(n) / n, np.arange(m) / m, PERIODIC)
        f = LiouvilleField(np.zeros((n, m)), chart, omega1, omega2, mode)
        f.phi = np.asarray(phi(f.z), dtype=float)
        return f
    phi = np.asarray(phi, dtype=float)
    n, m = phi.shape
    chart = GridChart(np.arange(n) / n, np.arange(m) / m, PERIODIC)
    return LiouvilleField(phi, chart, omega1, omega2, mode)


def bordered_field(phi, x_coords, y_coords, mode="central",
                   analytic_derivs=None):
    chart = GridChart(x_coords, y_coords, BORDERED, margin=2)
    return LiouvilleField(np.asarray(phi, dtype=float), chart,
                          mode=mode, analytic_derivs=analytic_derivs)


def fuchsian_field(n=48, m=48, x_span=(0.0, 2.0), y_span=(0.5, 2.5),
                   mode="analytic"):
    """phi = -2 ln(Im z): the hyperbolic metric of the upper half-plane.

    Its quadratic differential vanishes and the data at infinity are
    B* = E/2 (the totally geodesic / warped-product case).
    """
    x = np.linspace(*x_span, n)
    y = np.linspace(*y_span, m)
    yy = np.broadcast_to(y, (n, m))
    phi = -2.0 * np.log(yy)
    derivs = (1j / yy, -0.5 / yy ** 2, 0.5 / yy ** 2)
    return bordered_field(phi, x, y, mode=mode,
                          analytic_derivs=derivs if mode == "analytic" else None)


def strip_field(n=48, m=48, x_span=(0.0, 2.0), y_span=(0.5, 2.5),
                mode="analytic"):
    """phi = -2 ln(sin y): hyperbolic metric on a strip, constant theta = -1/2."""
    x = np.linspace(*x_span, n)
    y = np.linspace(*y_span, m)
    if np.any(np.sin(y) <= 0):
        raise GeometryError("strip field needs 0 < y < pi")
    yy = np.broadcast_to(y, (n, m))
    phi = -2.0 * np.log(np.sin(yy))
    csc2 = 1.0 / np.sin(yy) ** 2
    derivs = (1j / np.tan(yy), -0.5 * csc2, 0.5 * csc2)
    return bordered_field(phi, x, y, mode=mode,
                          analytic_derivs=derivs if mode == "analytic" else None)


def complex_derivatives(field):
    """(phi_z, phi_zz, phi_zzbar) with the field's derivative scheme."""
    if field.mode == "analytic":
        if field.analytic_derivs is None:
            raise GeometryError("analytic mode needs attached derivatives")
        return field.analytic_derivs
    return _derivatives_of(field, field.phi)


@dataclass
class HQDField:
    """Quadratic differential theta = phi_zz - phi_z^2/2 on the field's grid."""

    theta: np.ndarray
    field: LiouvilleField


def hqd_theta(field):
    phi_z, phi_zz, _ = complex_derivatives(field)
    return HQDField(theta=phi_zz - 0.5 * phi_z ** 2, field=field)


def antiholomorphy_residual(hqd):
    """max |d theta / d zbar|; -> 0 when the curvature of e^phi|dz|^2 is constant."""
    field = hqd.field
    mode = "spectral" if field.mode == "spectral" else "central"
    jinv = np.linalg.inv(field.jacobian)
    du = field.chart.deriv(hqd.theta, 0, mode)
    dv = field.chart.deriv(hqd.theta, 1, mode)
    dx = jinv[0, 0] * du + jinv[0, 1] * dv
    dy = jinv[1, 0] * du + jinv[1, 1] * dv
    dzbar = 0.5 * (dx + 1j * dy)
    return float(np.max(np.abs(dzbar)[field.chart.interior]))


def principal_curvatures_at_infinity(field):
    """k*_1 >= k*_2, the eigenvalues e^{-phi} (phi_zzbar +- |theta|) of B*."""
    phi_z, phi_zz, phi_zzbar = complex_derivatives(field)
    theta = phi_zz - 0.5 * phi_z ** 2
    efac = np.exp(-field.phi)
    mag = np.abs(theta)
    return efac * (phi_zzbar.real + mag), efac * (phi_zzbar.real - mag)


@dataclass
class ConvexityResult:
    passed: bool
    failing_nodes: list
    min_curvature: float

    def __bool__(self):
        return self.passed


def convexity_test(field):
    """Pass iff every principal curvature at infinity is strictly positive.

    This is the condition under which the Epstein foliation is embedded for
    every rho.
    """
    _, k2 = principal_curvatures_at_infinity(field)
    interior = field.chart.interior
    bad = (k2 <= 0) & interior
    nodes = [tuple(i) for i in np.argwhere(bad)[:32]]
    return ConvexityResult(passed=not np.any(bad), failing_nodes=nodes,
                           min_curvature=float(np.min(k2[interior])))


def infinity_data(field):
    """Starred data of the field in the chart coordinates of its grid.

    I* = e^phi |dz|^2 and II* = Re(theta dz^2) + phi_zzbar |dz|^2 are pulled
    back through the lattice parametrization so they can be compared node by
    node with data computed on an Epstein patch.
    """
    phi_z, phi_zz, phi_zzbar = complex_derivatives(field)
    theta = phi_zz - 0.5 * phi_z ** 2
    j = field.jacobian

    eph = np.exp(field.phi)
    metric_xy = mat2(eph, np.zeros_like(eph), eph)
    second_xy = mat2(theta.real + phi_zzbar.real,
                     -theta.imag,
                     -theta.real + phi_zzbar.real)

    def pull(mfield):
        return sym2(np.einsum("ai,...ab,bj->...ij", j, mfield, j))

    metric = pull(metric_xy)
    second = pull(second_xy)
    ginv = inv2(metric)
    shape = ginv @ second
    third = sym2(second @ ginv @ second)
    mean = 2.0 * np.exp(-field.phi) * phi_zzbar.real
    traceless = second - 0.5 * mean[..., None, None] * metric
    return InfinityData(
        patch=field.chart, metric=metric, second=second, third=third,
        shape=shape, mean=mean, curv=-mean,
        second_traceless=traceless,
        area_density=np.sqrt(det2(metric)),
    )


def liouville_curvature(field):
    """K* = -2 e^{-phi} phi_zzbar, the curvature of e^phi |dz|^2."""
    _, _, phi_zzbar = complex_derivatives(field)
    return -2.0 * np.exp(-field.phi) * phi_zzbar.real


def liouville_variation(field, w):
    """Exact variation (dI*, dII*) of the starred data under phi -> phi + eps w.

    d theta = w_zz - phi_z w_z and d phi_zzbar = w_zzbar enter II*; I* simply
    scales by w.  Returned in the chart coordinates, like infinity_data.
    """
    phi_z, _, _ = complex_derivatives(field)
    w_z, w_zz, w_zzbar = _derivatives_of(field, np.asarray(w, dtype=float))
    dtheta = w_zz - phi_z * w_z
    j = field.jacobian
    eph = np.exp(field.phi)
    d_metric_xy = mat2(w * eph, np.zeros_like(eph), w * eph)
    d_second_xy = mat2(dtheta.real + w_zzbar.real,
                       -dtheta.imag,
                       -dtheta.real + w_zzbar.real)

    def pull(m):
        return sym2(np.einsum("ai,...ab,bj->...ij", j, m, j))

    return pull(d_metric_xy), pull(d_second_xy)


def _derivatives_of(field, f):
    """(f_z, f_zz, f_zzbar) of an auxiliary real field on the same grid."""
    mode = "spectral" if field.mode in ("spectral", "analytic") else "central"
    jinv = np.linalg.inv(field.jacobian)

    def dz_pair(g):
        du = field.chart.deriv(g, 0, mode)
        dv = field.chart.deriv(g, 1, mode)
        dx = jinv[0, 0] * du + jinv[0, 1] * dv
        dy = jinv[1, 0] * du + jinv[1, 1] * dv
        return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)

    f_z, _ = dz_pair(f)
    f_zz, f_zzbar = dz_pair(f_z)
    return f_z, f_zz, f_zzbar


def real_gradient(field, f, mode=None):
    """(f_x, f_y) of a field on the chart, in the z-plane coordinates."""
    mode = mode or ("spectral" if field.mode == "spectral" else "central")
    jinv = np.linalg.inv(field.jacobian)
    du = field.chart.deriv(f, 0, mode)
    dv = field.chart.deriv(f, 1, mode)
    return (jinv[0, 0] * du + jinv[0, 1] * dv,
            jinv[1, 0] * du + jinv[1, 1] * dv)


def euclid_laplacian(field, f, mode=None):
    """f_xx + f_yy on the chart."""
    fx, fy = real_gradient(field, f, mode)
    fxx, _ = real_gradient(field, fx, mode)
    _, fyy = real_gradient(field, fy, mode)
    return fxx + fyy


def epstein_embedding(field, rho):
    """The Epstein surface of the field at foliation parameter rho.

    xi = sqrt2 e^{-rho} e^{-phi/2} / D,  y = z + phi_zbar e^{-2 rho} e^{-phi} / D
    with D = 1 + e^{-2 rho} e^{-phi} |phi_z|^2 / 2.  The induced metric equals
    e^{2 rho} I*/2 + II* + e^{-2 rho} III*/2.
    """
    phi_z, _, _ = complex_derivatives(field)
    ephi = np.exp(-field.phi)
    f = np.exp(-2.0 * rho) * ephi
    den = 1.0 + 0.5 * f * np.abs(phi_z) ** 2
    xi = _SQRT2 * np.exp(-rho) * np.exp(-0.5 * field.phi) / den
    y = field.z + np.conj(phi_z) * f / den

    emb = np.stack([y.real, y.imag, xi], axis=-1)
    chart = field.chart
    if chart.topology == PERIODIC:
        o1, o2 = complex(field.omega1), complex(field.omega2)
        secular = ((o1.real, o1.imag, 0.0), (o2.real, o2.imag, 0.0))
        orientation = -int(np.sign(np.linalg.det(field.jacobian)))
        return surfaces.SurfacePatch(
            PERIODIC, emb, chart.u_coords.copy(), chart.v_coords.copy(),
            orientation=orientation, weights=chart.weights.copy(),
            secular=secular)
    patch = surfaces.SurfacePatch(
        BORDERED, emb, chart.u_coords.copy(), chart.v_coords.copy(),
        orientation=1, weights=chart.weights.copy(), margin=chart.margin)
    cross = np.cross(patch.embedding_deriv(0), patch.embedding_deriv(1))
    if np.median(cross[..., 2][patch.interior]) > 0:
        patch.orientation = -1
    return patch


def schwarzian(f, spacing, points=9):
    """Schwarzian derivative f'''/f' - (3/2)(f''/f')^2 of holomorphic samples.

    f: complex samples on a grid whose axis 0 walks the real direction with
    uniform `spacing`; holomorphy makes the x-derivative the complex one.
    """
    f = np.asarray(f, dtype=complex)
    n = f.shape[0]
    d1 = diff_matrix(n, spacing, 1, points)
    d2 = diff_matrix(n, spacing, 2, points)
    d3 = diff_matrix(n, spacing, 3, points)
    f1 = np.tensordot(d1, f, axes=(1, 0))
    f2 = np.tensordot(d2, f, axes=(1, 0))
    f3 = np.tensordot(d3, f, axes=(1, 0))
    if np.any(np.abs(f1) < 1e-12 * np.max(np.abs(f1))):
        raise GeometryError("f' vanishes on the patch")
    ratio = f2 / f1
    return f3 / f1 - 1.5 * ratio ** 2


# ---------------------------------------------------------------------------
# CSV interface


def save_field(field, path):
    if field.chart.topology != PERIODIC:
        raise GeometryError("CSV format stores periodic fields")
    o1, o2 = complex(field.omega1), complex(field.omega2)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega1_re", "omega1_im", "omega2_re", "omega2_im"])
        writer.writerow([o1.real, o1.imag, o2.real, o2.imag])
        for row in field.phi:
            writer.writerow([repr(v) for v in row])
    return path


def load_field(path, mode="spectral"):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0][:2] != ["omega1_re", "omega1_im"]:
        raise GeometryError(f"{path}: not a Liouville field CSV")
    o1 = complex(float(rows[1][0]), float(rows[1][1]))
    o2 = complex(float(rows[1][2]), float(rows[1][3]))
    phi = np.array([[float(v) for v in row] for row in rows[2:]])
    return periodic_field(phi, o1, o2, mode=mode)
