"""Volume functionals of convex regions and equidistant slabs.

The W-volume of a region is its hyperbolic volume minus a quarter of the
mean-curvature integral over the boundary (outward normals).  It is additive,
self-dual under the Legendre transform in (I, momentum), and for a slab
between a surface and its equidistant at distance rho equals
2 pi rho (g - 1).  Subtracting half the leaf area and the linear term from
the slab volume gives the renormalized volume, whose finite-rho defect is an
explicit e^{-2 rho} residual.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import equidistant, surfaces
from .errors import GeometryError


@dataclass
class SlabSpec:
    """Region between the equidistant leaves at rho_lo and rho_hi of a base
    surface, described by the base FormField.

    base_volume: volume of the region behind the inner leaf (closed form for
    balls / horoball cusps); genus: declared for analytic families, measured
    by Gauss-Bonnet otherwise.
    """

    forms: surfaces.FormField
    rho_hi: float
    rho_lo: float = 0.0
    genus: int = None
    base_volume: float = None

    def __post_init__(self):
        if self.rho_hi <= self.rho_lo:
            raise GeometryError("outer leaf must lie strictly outside inner")
        if self.genus is None:
            self.genus = surfaces.measured_genus(self.forms)


@dataclass
class VolumeReport:
    volume: float
    area: dict                      # per boundary component
    mean_curvature_integral: dict   # per component, outward normal
    w_volume: float
    einstein_hilbert: float
    renormalized: float = None
    residual: float = None
    chi: int = None

    def to_json(self):
        return json.dumps({
            "V": self.volume,
            "A": self.area,
            "H_integral": self.mean_curvature_integral,
            "W": self.w_volume,
            "I_EH": self.einstein_hilbert,
            "V_R": self.renormalized,
            "residual": self.residual,
            "chi": self.chi,
        }, indent=2)


def slab_volume_formula(forms, rho_lo, rho_hi):
    """Closed-form slab volume from the base-surface data:

    V(rho) = 1/2 int sinh(2r) + K (sinh(2r) - 2r)/2 + H (cosh(2r) - 1)/2 da.
    """
    def vol(rho):
        s2, c2 = np.sinh(2.0 * rho), np.cosh(2.0 * rho)
        dens = (s2 + 0.5 * forms.curv * (s2 - 2.0 * rho)
                + 0.5 * forms.mean * (c2 - 1.0))
        return 0.5 * surfaces.integrate(forms, dens)

    return vol(rho_hi) - vol(rho_lo)


def slab_volume_quadrature(forms, rho_lo, rho_hi, order=24):
    """Oracle route: integrate the leaf area over rho with Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (rho_hi + rho_lo), 0.5 * (rho_hi - rho_lo)
    return half * sum(
        wi * equidistant.area_at_distance(forms, mid + half * xi)
        for xi, wi in zip(x, w))


def slab_volume(spec, route="formula"):
    equidistant._check_factor(spec.forms, spec.rho_hi)
    if route == "formula":
        return slab_volume_formula(spec.forms, spec.rho_lo, spec.rho_hi)
    return slab_volume_quadrature(spec.forms, spec.rho_lo, spec.rho_hi)


def w_volume(spec, route="formula"):
    """W-volume report of a slab; outward normals on both boundary leaves.

    The flow normal is outward on the outer leaf and inward on the inner one,
    so W = V - (1/4) H-integral(outer) + (1/4) H-integral(inner).
    """
    v = slab_volume(spec, route)
    h_out = equidistant.mean_curvature_integral_at_distance(spec.forms, spec.rho_hi)
    h_in = equidistant.mean_curvature_integral_at_distance(spec.forms, spec.rho_lo)
    a_out = equidistant.area_at_distance(spec.forms, spec.rho_hi)
    a_in = equidistant.area_at_distance(spec.forms, spec.rho_lo)
    w = v - 0.25 * h_out + 0.25 * h_in
    i_eh = v - 0.5 * h_out + 0.5 * h_in
    return VolumeReport(
        volume=v,
        area={"inner": a_in, "outer": a_out},
        mean_curvature_integral={"inner": -h_in, "outer": h_out},
        w_volume=w,
        einstein_hilbert=i_eh,
        chi=2 - 2 * spec.genus,
    )


def sandwich_check(spec, route="formula"):
    """|W[S, S_rho] - 2 pi (rho_hi - rho_lo) (g - 1)|."""
    rep = w_volume(spec, route)
    target = 2.0 * np.pi * (spec.rho_hi - spec.rho_lo) * (spec.genus - 1)
    return abs(rep.w_volume - target)


def dual_functionals(spec, route="formula"):
    """(I_EH, *V, self-duality defect W - (V + I_EH)/2)."""
    rep = w_volume(spec, route)
    defect = rep.w_volume - 0.5 * (rep.volume + rep.einstein_hilbert)
    return rep.einstein_hilbert, rep.einstein_hilbert, defect


def momentum(forms):
    """Conjugate momentum -(II - H I / 2)/4; traceless, so the Legendre
    transform of W along I is W itself."""
    return -0.25 * (forms.second
                    - 0.5 * forms.mean[..., None, None] * forms.metric)


def momentum_trace_residual(forms):
    from .infinity import bracket
    pi = momentum(forms)
    tr = bracket(pi, forms.metric, forms.metric)
    pointwise = float(np.max(np.abs(tr[forms.patch.interior])))
    integral = abs(surfaces.integrate(forms, tr))
    return pointwise, integral


# ---------------------------------------------------------------------------
# balls


def ball_report(r, route="closed", quad_n=64):
    """Volume report of the geodesic ball of radius r.

    route 'closed' uses V = pi (sinh 2r - 2r), A = 4 pi sinh^2 r, H = 2 coth r;
    route 'quadrature' runs the discrete pipeline on a Gauss-Legendre sphere
    (leaf areas integrated over the distance from the center).
    """
    if r <= 0:
        raise GeometryError("ball radius must be positive")
    if route == "closed":
        v = surfaces.ball_volume(r)
        a = surfaces.sphere_area(r)
        h = 2.0 / np.tanh(r) * a
    else:
        _, forms = surfaces.sphere_patch(r, n=quad_n, m=2 * quad_n)
        # flow inward from the boundary sphere: the ball is the slab [-r, 0]
        v = slab_volume_quadrature(forms, -r, 0.0, order=48)
        a = equidistant.area_at_distance(forms, 0.0)
        h = equidistant.mean_curvature_integral_at_distance(forms, 0.0)
    w = v - 0.25 * h
    i_eh = v - 0.5 * h
    return VolumeReport(
        volume=v, area={"outer": a}, mean_curvature_integral={"outer": h},
        w_volume=w, einstein_hilbert=i_eh,
        renormalized=w + np.pi, chi=2,
    )


# ---------------------------------------------------------------------------
# renormalized volume


@dataclass
class RenormalizedReport:
    rho: np.ndarray
    volume: np.ndarray            # slab volume V(rho)
    area: np.ndarray              # leaf area A(rho)
    subtracted: np.ndarray        # V - A/2 - 2 pi rho (g-1)
    model: np.ndarray             # exact residual model at each rho
    identity_error: float
    decay_exponent: float
    v_r: float
    w: float
    consistency_error: float      # |V_R - (W - pi (g-1))|
    genus: int

    def rows(self):
        for i in range(len(self.rho)):
            yield (self.rho[i], self.volume[i], self.area[i],
                   self.subtracted[i], self.model[i])


def renormalized_volume(forms, rho_values, genus=None, base_volume=0.0):
    """Renormalized-volume run along the foliation of a base surface.

    For every rho the subtracted quantity V - A/2 - 2 pi rho (g-1) is checked
    against its exact finite-rho expression

        -(1/4) e^{-2 rho} int (2 - H + K) da - (1/4) int H da - pi (g-1),

    the decaying part is fitted for its exponent, and the limit is
    extrapolated with a + b e^{-2 rho} over the three largest rho.  The
    result satisfies V_R = W - pi (g-1) with W the W-volume of the region
    behind the base surface (base_volume minus a quarter of its
    mean-curvature integral).
    """
    if genus is None:
        genus = surfaces.measured_genus(forms)
    rho = np.asarray(sorted(rho_values), dtype=float)
    if len(rho) < 3:
        raise GeometryError("need at least three rho samples")
    vols = np.array([slab_volume_formula(forms, 0.0, r) for r in rho])
    areas = np.array([equidistant.area_at_distance(forms, r) for r in rho])
    lin = 2.0 * np.pi * (genus - 1) * rho
    sub = vols - 0.5 * areas - lin

    residual_int = surfaces.integrate(forms, 2.0 - forms.mean + forms.curv)
    h_int = surfaces.integrate(forms, forms.mean)
    model = (-0.25 * np.exp(-2.0 * rho) * residual_int
             - 0.25 * h_int - np.pi * (genus - 1))
    identity_error = float(np.max(np.abs(sub - model)))

    decay = sub - (-0.25 * h_int - np.pi * (genus - 1))
    nz = np.abs(decay) > 1e-13
    if np.count_nonzero(nz) >= 2:
        exponent = float(np.polyfit(rho[nz], np.log(np.abs(decay[nz])), 1)[0])
    else:
        exponent = -2.0       # decaying part vanishes identically
    # extrapolate with a + b e^{-2 rho} on the three largest samples
    basis = np.vstack([np.ones(3), np.exp(-2.0 * rho[-3:])]).T
    coef, *_ = np.linalg.lstsq(basis, sub[-3:], rcond=None)
    v_r = base_volume + float(coef[0])
    w = base_volume - 0.25 * h_int
    consistency = abs(v_r - (w - np.pi * (genus - 1)))
    return RenormalizedReport(
        rho=rho, volume=vols, area=areas, subtracted=sub, model=model,
        identity_error=identity_error, decay_exponent=exponent,
        v_r=v_r, w=w, consistency_error=consistency, genus=genus)


def horotorus_cusp_volume(c, lu, lv):
    """Volume of the cusp above the horosphere cell {xi = c}: A_cell / 2."""
    return lu * lv / (2.0 * c * c)


def epstein_w_volume(field, rho_ref):
    """W-volume carried by an Epstein leaf of a periodic Liouville field.

    Evaluated as the slab between a horospherical anchor above the leaf and
    the leaf itself; the anchor terms cancel exactly, leaving

        W = int (1/(2 xi^2)) |d(x,y)/d(s,t)| ds dt - (1/4) int H da.

    Independent of rho_ref (torus sandwich) and of the anchor height.
    """
    from . import liouville

    patch = liouville.epstein_embedding(field, rho_ref)
    patch.deriv_mode = "spectral"
    fu = patch.embedding_deriv(0)
    fv = patch.embedding_deriv(1)
    jac = fu[..., 0] * fv[..., 1] - fu[..., 1] * fv[..., 0]
    sign = np.sign(np.median(jac))
    bad = jac * sign <= 0
    if np.any(bad):
        nodes = [tuple(i) for i in np.argwhere(bad)[:16]]
        raise GeometryError(
            f"Epstein leaf at rho={rho_ref} is not embedded at nodes {nodes}")
    forms = surfaces.compute_forms(patch)
    xi = patch.embedding[..., 2]
    v_part = float(np.sum(patch.weights * 0.5 * np.abs(jac) / xi ** 2))
    h_int = surfaces.integrate(forms, forms.mean)
    return v_part - 0.25 * h_int


def write_renormalized_csv(report, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "V", "A", "V-A/2-2pi rho (g-1)", "model"])
        for row in report.rows():
            writer.writerow(row)
    return path
