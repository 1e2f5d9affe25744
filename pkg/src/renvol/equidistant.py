"""Equidistant-foliation calculus: closed forms in the flow distance rho.

Everything here is exact in rho given the base-surface data; the companion
route (actually flowing the embedding and re-discretizing) lives in
flow_surface and serves as a mutual oracle.
"""

import csv

import numpy as np

from . import halfspace, surfaces
from .errors import FoliationBreakdown
from .gridops import det2, inv2, sym2, tr2


def _factor(forms, rho):
    """cosh(rho) E + sinh(rho) B per node."""
    eye = np.eye(2)
    return np.cosh(rho) * eye + np.sinh(rho) * forms.shape


def _check_factor(forms, rho):
    fac = _factor(forms, rho)
    dets = det2(fac)
    if np.any(dets[forms.patch.interior] <= 0):
        node, rc = _breakdown(forms, rho)
        raise FoliationBreakdown(
            "equidistant foliation degenerates before the requested distance",
            node=node, rho_critical=rc)
    return fac


def _breakdown(forms, rho):
    """Node and smallest |t| with sign(rho) where det(cosh t E + sinh t B) = 0.

    det vanishes when tanh(t) = -1/k for an eigenvalue k of B.
    """
    k1, k2 = principal_curvatures(forms)
    best, best_node = np.inf, None
    for k in (k1, k2):
        with np.errstate(divide="ignore"):
            arg = -1.0 / k
        valid = np.abs(arg) < 1.0
        t = np.full_like(k, np.inf)
        t[valid] = np.arctanh(arg[valid])
        t[np.sign(t) != np.sign(rho)] = np.inf if rho > 0 else -np.inf
        t = np.abs(t)
        t[~forms.patch.interior] = np.inf
        idx = np.unravel_index(np.argmin(t), t.shape)
        if t[idx] < best:
            best, best_node = t[idx], idx
    return best_node, float(np.sign(rho) * best)


def principal_curvatures(forms):
    """Eigenvalues of the shape operator, k1 >= k2."""
    h, k = forms.mean, forms.ext_curv
    disc = np.sqrt(np.maximum(h * h / 4.0 - k, 0.0))
    return h / 2.0 + disc, h / 2.0 - disc


def metric_at_distance(forms, rho):
    """Induced metric on the equidistant surface at signed distance rho."""
    fac = _check_factor(forms, rho)
    return sym2(np.swapaxes(fac, -1, -2) @ forms.metric @ fac)


def area_at_distance(forms, rho):
    """A(rho) = integral of cosh^2 + cosh sinh H + sinh^2 K_e."""
    c, s = np.cosh(rho), np.sinh(rho)
    dens = c * c + c * s * forms.mean + s * s * forms.ext_curv
    return surfaces.integrate(forms, dens)


def mean_curvature_integral_at_distance(forms, rho):
    """Integral of H over the equidistant surface; equals dA/drho."""
    dens = (np.sinh(2.0 * rho) * (1.0 + forms.ext_curv)
            + np.cosh(2.0 * rho) * forms.mean)
    return surfaces.integrate(forms, dens)


def shape_operator_at_distance(infinity, rho):
    """Shape operator of the leaf at parameter rho from the data at infinity:
    (E + e^{-2 rho} B*)^{-1} (E - e^{-2 rho} B*)."""
    bstar = infinity.shape if hasattr(infinity, "metric") else np.asarray(infinity)
    eye = np.eye(2)
    f = np.exp(-2.0 * rho)
    plus = eye + f * bstar
    dets = det2(plus)
    if np.any(dets == 0):
        raise FoliationBreakdown("E + e^{-2 rho} B* is singular")
    return inv2(plus) @ (eye - f * bstar)


def forms_at_distance(forms, rho):
    """Full form data of the equidistant surface (exact in rho)."""
    patch = forms.patch
    fac = _check_factor(forms, rho)
    metric = sym2(np.swapaxes(fac, -1, -2) @ forms.metric @ fac)
    c, s = np.cosh(rho), np.sinh(rho)
    shape_num = s * np.eye(2) + c * forms.shape
    shape = inv2(fac) @ shape_num
    second = sym2(metric @ shape)
    third = sym2(np.swapaxes(shape, -1, -2) @ metric @ shape)
    ext = det2(shape)
    out = surfaces.FormField(
        patch=patch, metric=metric, second=second, third=third, shape=shape,
        mean=tr2(shape), ext_curv=ext, curv=ext - 1.0,
        area_density=np.sqrt(det2(metric)),
    )
    return out


def flow_surface(patch, rho, forms=None):
    """Realize the equidistant surface by flowing every node along the normal.

    Cross-validates the closed-form route; raises on foliation breakdown.
    """
    if forms is None:
        forms = surfaces.compute_forms(patch)
    _check_factor(forms, rho)
    normal = forms.normal
    if normal is None:
        normal = surfaces.unit_normal_field(patch)
    pts, vel = halfspace.flow_points(
        patch.embedding.reshape(-1, 3), normal.reshape(-1, 3), rho)
    emb = pts.reshape(patch.embedding.shape)
    vel = vel.reshape(patch.embedding.shape)
    flowed = surfaces.SurfacePatch(
        patch.topology, emb, patch.u_coords.copy(), patch.v_coords.copy(),
        orientation=patch.orientation, weights=patch.weights.copy(),
        margin=patch.margin, deriv_mode=patch.deriv_mode, secular=patch.secular)
    # keep the normal pointing along the transported flow direction
    cross = np.cross(flowed.embedding_deriv(0), flowed.embedding_deriv(1))
    agree = np.sum(cross * vel, axis=-1)
    sign = 1 if np.median(agree[patch.interior]) > 0 else -1
    flowed.orientation = sign
    return flowed


def emit_flow_table(forms, rho_values, path):
    """CSV table of (rho, area, integrated mean curvature, slab volume)."""
    from .wvolume import slab_volume_formula

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "area", "mean_curvature_integral", "volume"])
        for rho in rho_values:
            writer.writerow([
                rho,
                area_at_distance(forms, rho),
                mean_curvature_integral_at_distance(forms, rho),
                slab_volume_formula(forms, 0.0, rho),
            ])
    return path
