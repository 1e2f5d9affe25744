"""First-variation (Schlafli-type) formulas for the volume functionals.

Given per-node variations (dI, dII) of the fundamental forms, the volume and
W-volume respond through boundary integrals:

    2 dV = int dH + <dI, II>/2 da
    dW   =  (1/4) int <dII - (H/2) dI,  I > da
         = -(1/4) int <dII* - (H*/2) dI*, I*> da*
         = -(1/4) int dH* + <dI*, II*_0> da*

The three dW routes agree pointwise (pure 2x2 algebra), which the tests
exploit; against central finite differences of the volume functionals each
route converges at second order in the step.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import liouville, surfaces, wvolume
from .errors import GeometryError
from .gridops import det2, inv2, sym2, tr2
from .infinity import to_infinity


def trace_identity_check(a, b):
    """|det(A) tr(A^{-1} B) - tr(A) tr(B) + tr(A B)| for 2x2 matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = det2(a)
    if np.any(np.abs(d) < 1e-300):
        raise GeometryError("A must be invertible")
    lhs = d * tr2(inv2(a) @ b)
    rhs = tr2(a) * tr2(b) - tr2(a @ b)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# pointwise evaluators


def delta_shape(forms, d_metric, d_second):
    """Variation of the shape operator: dB = I^{-1} (dII - dI B)."""
    return inv2(forms.metric) @ (d_second - d_metric @ forms.shape)


def push_variation_to_infinity(forms, d_metric, d_second):
    """Exact linearization of the boundary -> infinity transform.

    Returns (dI*, dII*) for given (dI, dII); used to evaluate the starred
    variational formulas on the same underlying deformation.
    """
    db = delta_shape(forms, d_metric, d_second)
    bt = np.swapaxes(forms.shape, -1, -2)
    dbt = np.swapaxes(db, -1, -2)
    d_third = (dbt @ forms.metric @ forms.shape
               + bt @ d_metric @ forms.shape
               + bt @ forms.metric @ db)
    d_third = sym2(d_third)
    d_star = 0.5 * (d_metric + 2.0 * d_second + d_third)
    dd_star = 0.5 * (d_metric - d_third)
    return d_star, dd_star


def pull_variation_from_infinity(inf, d_star, dd_star):
    """Exact linearization of the inverse transform: (dI*, dII*) -> (dI, dII).

    With S = I* + II*, T = I* - II* and G = (I*)^{-1}:
    I = S G S / 2 and II = S G T / 2, so the product rule gives the pullback.
    """
    g = inv2(inf.metric)
    s = inf.metric + inf.second
    t = inf.metric - inf.second
    ds = d_star + dd_star
    dt = d_star - dd_star
    dg = -(g @ d_star @ g)
    d_metric = 0.5 * sym2(ds @ g @ s + s @ dg @ s + s @ g @ ds)
    d_second = 0.5 * sym2(ds @ g @ t + s @ dg @ t + s @ g @ dt)
    return d_metric, d_second


def _integrate(data, values):
    return float(np.sum(data.patch.weights * data.area_density * values))


def dV_formula(forms, d_metric, d_second):
    """Schlafli variation of the enclosed volume:
    dV = (1/2) int dH + <dI, II>/2 da."""
    db = delta_shape(forms, d_metric, d_second)
    gi = inv2(forms.metric)
    pairing = tr2(gi @ d_metric @ gi @ forms.second)
    return 0.5 * _integrate(forms, tr2(db) + 0.5 * pairing)


def dW_boundary_formula(forms, d_metric, d_second):
    """dW = (1/4) int <dII - (H/2) dI, I> da on the boundary data."""
    gi = inv2(forms.metric)
    x = d_second - 0.5 * forms.mean[..., None, None] * d_metric
    return 0.25 * _integrate(forms, tr2(gi @ x))


def dW_infinity_formula(inf, d_star, dd_star):
    """dW = -(1/4) int <dII* - (H*/2) dI*, I*> da* on the data at infinity."""
    gi = inv2(inf.metric)
    x = dd_star - 0.5 * inf.mean[..., None, None] * d_star
    return -0.25 * _integrate(inf, tr2(gi @ x))


def dW_traceless_formula(inf, d_star, dd_star):
    """dW = -(1/4) int dH* + <dI*, II*_0> da*."""
    gi = inv2(inf.metric)
    db = gi @ (dd_star - d_star @ inf.shape)
    pairing = tr2(gi @ d_star @ gi @ inf.second_traceless)
    return -0.25 * _integrate(inf, tr2(db) + pairing)


# ---------------------------------------------------------------------------
# deformation families


@dataclass
class DeformationFamily:
    """A one-parameter family of surfaces with the data the variational
    checks need: forms at eps, variation fields, and the volume / W-volume
    scalars whose finite differences oracle the formulas."""

    name: str
    forms_at: callable
    volume_at: callable = None
    w_at: callable = None
    analytic_variation: callable = None     # () -> (dI, dII) exact derivative
    infinity_at: callable = None            # eps -> InfinityData
    starred_variation: callable = None      # () -> (dI*, dII*) exact derivative
    eps_schedule: tuple = (1e-2, 1e-3, 1e-4)

    def variation(self, eps=None):
        """(dI, dII) — exact when available, else central differences."""
        if self.analytic_variation is not None:
            return self.analytic_variation()
        if self.starred_variation is not None:
            return pull_variation_from_infinity(self.infinity(),
                                                *self.starred_variation())
        if eps is None:
            eps = self.eps_schedule[-1]
        fp = self.forms_at(eps)
        fm = self.forms_at(-eps)
        return ((fp.metric - fm.metric) / (2.0 * eps),
                (fp.second - fm.second) / (2.0 * eps))

    def base(self):
        return self.forms_at(0.0)

    def infinity(self):
        if self.infinity_at is not None:
            return self.infinity_at(0.0)
        return to_infinity(self.base())


def ball_family(r, n=48):
    """Geodesic spheres of radius r + eps on a fixed Gauss-Legendre grid."""
    patches = {}

    def forms_at(eps):
        if eps not in patches:
            _, f = surfaces.sphere_patch(r + eps, n=n, m=2 * n)
            patches[eps] = f
        return patches[eps]

    base = forms_at(0.0)
    ghat = base.metric / np.sinh(r) ** 2

    def analytic_variation():
        d_metric = np.sinh(2.0 * r) * ghat
        d_second = np.cosh(2.0 * r) * ghat
        return d_metric, d_second

    return DeformationFamily(
        name=f"ball(r={r})",
        forms_at=forms_at,
        volume_at=lambda eps: surfaces.ball_volume(r + eps),
        w_at=lambda eps: -2.0 * np.pi * (r + eps),
        analytic_variation=analytic_variation,
    )


def graph_family(psi, displacement, lu=2.0 * np.pi, lv=2.0 * np.pi,
                 n=48, m=48, name="graph", deriv_mode="central"):
    """Periodic graph surface moved by eps * displacement (euclidean field).

    displacement: (n, m, 3) array or callable(patch, forms) -> array.  The
    region behind the surface (above it, normal pointing down) supplies the
    volume scalar via exact coordinate quadrature.
    """
    base_patch = surfaces.graph_patch(psi, lu, lv, n, m, deriv_mode=deriv_mode)
    base_forms = surfaces.compute_forms(base_patch)
    disp = (displacement(base_patch, base_forms) if callable(displacement)
            else np.asarray(displacement, dtype=float))
    ceiling = float(2.0 * np.max(base_patch.embedding[..., 2]))

    def patch_at(eps):
        emb = base_patch.embedding + eps * disp
        return surfaces.SurfacePatch(
            base_patch.topology, emb, base_patch.u_coords, base_patch.v_coords,
            orientation=base_patch.orientation, weights=base_patch.weights,
            secular=base_patch.secular, deriv_mode=base_patch.deriv_mode)

    def forms_at(eps):
        return surfaces.compute_forms(patch_at(eps))

    def volume_at(eps):
        return region_volume_above(patch_at(eps), ceiling)

    def w_at(eps):
        f = forms_at(eps)
        return volume_at(eps) - 0.25 * surfaces.integrate(f, f.mean)

    return DeformationFamily(name=name, forms_at=forms_at,
                             volume_at=volume_at, w_at=w_at)


def normal_displacement(profile):
    """Displacement field moving along the unit normal with the given profile."""
    def make(patch, forms):
        uu, vv = np.meshgrid(patch.u_coords, patch.v_coords, indexing="ij")
        return profile(uu, vv)[..., None] * forms.normal
    return make


def tangential_displacement(profile_u, profile_v):
    def make(patch, forms):
        fu = patch.embedding_deriv(0)
        fv = patch.embedding_deriv(1)
        uu, vv = np.meshgrid(patch.u_coords, patch.v_coords, indexing="ij")
        return (profile_u(uu, vv)[..., None] * fu
                + profile_v(uu, vv)[..., None] * fv)
    return make


def region_volume_above(patch, ceiling):
    """Volume between the surface and the horosphere {xi = ceiling} above it.

    Quadrature in the horizontal projection: int (1/(2 xi^2) - 1/(2 c^2)) dxdy
    with the Jacobian of the horizontal map; exact (trapezoidal-spectral) for
    smooth periodic patches.
    """
    fu = patch.embedding_deriv(0)
    fv = patch.embedding_deriv(1)
    jac = fu[..., 0] * fv[..., 1] - fu[..., 1] * fv[..., 0]
    xi = patch.embedding[..., 2]
    if np.any(xi >= ceiling):
        raise GeometryError("surface pokes through the reference horosphere")
    dens = 0.5 * (1.0 / xi ** 2 - 1.0 / ceiling ** 2) * np.abs(jac)
    return float(np.sum(patch.weights * dens))


def epstein_family(field, direction, rho_ref=2.0, name="epstein"):
    """Liouville field moved by eps * direction; surfaces are the Epstein
    leaves at rho_ref, the W-volume comes from the anchored-slab evaluation.

    The starred data and their variation are exact (spectral derivatives of
    the field); the W oracle runs through the embedding pipeline, so the
    finite-difference comparison ties the two code paths together.
    """
    direction = np.asarray(direction, dtype=float)

    def field_at(eps):
        return liouville.LiouvilleField(
            field.phi + eps * direction, field.chart, field.omega1,
            field.omega2, field.mode)

    def infinity_at(eps):
        return liouville.infinity_data(field_at(eps))

    def forms_at(eps):
        from .infinity import from_infinity
        return from_infinity(infinity_at(eps))

    def w_at(eps):
        return wvolume.epstein_w_volume(field_at(eps), rho_ref)

    return DeformationFamily(
        name=name, forms_at=forms_at, w_at=w_at, infinity_at=infinity_at,
        starred_variation=lambda: liouville.liouville_variation(field, direction),
    )


# ---------------------------------------------------------------------------
# the operations


def schlafli_dV(family, eps=1e-3):
    """(formula value, Richardson-refined central difference of the volume)."""
    d_metric, d_second = family.variation(eps)
    formula = dV_formula(family.base(), d_metric, d_second)
    fd = richardson_difference(family.volume_at, eps)
    return formula, fd


def dW_boundary(family, eps=1e-3):
    d_metric, d_second = family.variation(eps)
    return dW_boundary_formula(family.base(), d_metric, d_second)


def _starred(family, eps):
    if family.starred_variation is not None:
        return family.infinity(), family.starred_variation()
    base = family.base()
    d_star, dd_star = push_variation_to_infinity(base, *family.variation(eps))
    return family.infinity(), (d_star, dd_star)


def dW_infinity(family, eps=1e-3):
    inf, (d_star, dd_star) = _starred(family, eps)
    return dW_infinity_formula(inf, d_star, dd_star)


def dW_traceless(family, eps=1e-3):
    inf, (d_star, dd_star) = _starred(family, eps)
    return dW_traceless_formula(inf, d_star, dd_star)


def central_difference(scalar_at, eps):
    return (scalar_at(eps) - scalar_at(-eps)) / (2.0 * eps)


def richardson_difference(scalar_at, eps):
    d1 = central_difference(scalar_at, eps)
    d2 = central_difference(scalar_at, eps / 2.0)
    return (4.0 * d2 - d1) / 3.0


def order_fit(family, formula_fn, scalar_attr, eps_values=None):
    """Fitted convergence order of |formula - central difference| in eps."""
    eps_values = eps_values or family.eps_schedule
    scalar_at = getattr(family, scalar_attr)
    gaps = []
    for eps in eps_values:
        formula = formula_fn(family, eps)
        if isinstance(formula, tuple):
            formula = formula[0]
        fd = central_difference(scalar_at, eps)
        gaps.append(abs(formula - fd))
    from .gridops import fit_order
    return fit_order(eps_values, gaps), gaps


def write_check_csv(rows, path):
    """CSV of (eps, formula, finite difference, ratio) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "formula", "finite_difference", "ratio"])
        for eps, formula, fd in rows:
            ratio = formula / fd if fd else float("nan")
            writer.writerow([eps, formula, fd, ratio])
    return path
