"""The starred calculus: fundamental forms "at infinity" of an equidistant
foliation, the forward/inverse transforms, curvature and Codazzi identities.

For a surface with forms (I, II) and shape operator B the data at infinity
are

    I*  = (I + 2 II + III) / 2        II* = (I - III) / 2
    B*  = (E + B)^{-1} (E - B)        III* = (I - 2 II + III) / 2

with H* = tr B*, K* = 2 K / (1 + H + K_e) and da* = det(E + B)/2 da.  The
transform is an involution; the leaf metric at distance rho is
e^{2 rho} I*/2 + II* + e^{-2 rho} III*/2.
"""

from dataclasses import dataclass

import numpy as np

from . import gridops, surfaces
from .errors import GeometryError, TransformSingular
from .gridops import BORDERED, PERIODIC, det2, inv2, mat2, sym2, tr2


@dataclass
class InfinityData:
    """Per-node starred data of a surface / foliation.

    Fields mirror FormField; second_traceless is II* - (H*/2) I*.  `valid`
    masks nodes where E + B was invertible (B* and friends defined).
    """

    patch: surfaces.SurfacePatch
    metric: np.ndarray
    second: np.ndarray
    third: np.ndarray
    shape: np.ndarray
    mean: np.ndarray
    curv: np.ndarray
    second_traceless: np.ndarray
    area_density: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        if self.valid is None:
            self.valid = np.ones(self.metric.shape[:-2], dtype=bool)


_SINGULAR_TOL = 1e-13


def to_infinity(forms):
    """Forward transform of a FormField to its data at infinity.

    Nodes where E + B is singular are masked out in `valid` rather than
    failing globally (the transform degenerates on non-horospherically-convex
    surfaces); I*, II*, III* are still returned everywhere.
    """
    eye = np.eye(2)
    metric = 0.5 * (forms.metric + 2.0 * forms.second + forms.third)
    second = 0.5 * (forms.metric - forms.third)
    third = 0.5 * (forms.metric - 2.0 * forms.second + forms.third)

    plus = eye + forms.shape
    dets = det2(plus)
    scale = np.maximum(np.abs(tr2(plus)), 1.0)
    valid = np.abs(dets) > _SINGULAR_TOL * scale * scale

    bstar = np.full_like(forms.shape, np.nan)
    bstar[valid] = (inv2(plus[valid]) @ (eye - forms.shape[valid]))
    mean = tr2(bstar)

    denom = 1.0 + forms.mean + forms.ext_curv   # = det(E + B)
    curv = np.full_like(forms.mean, np.nan)
    curv[valid] = 2.0 * forms.curv[valid] / denom[valid]

    traceless = second - 0.5 * mean[..., None, None] * metric
    return InfinityData(
        patch=forms.patch, metric=metric, second=second, third=third,
        shape=bstar, mean=mean, curv=curv, second_traceless=traceless,
        area_density=0.5 * denom * forms.area_density, valid=valid,
    )


def from_infinity(inf):
    """Inverse transform: recover the fundamental forms from data at infinity."""
    eye = np.eye(2)
    plus = eye + inf.shape
    dets = det2(plus)
    bad = ~(np.abs(dets) > 0)
    if np.any(bad[inf.valid]):
        raise TransformSingular("E + B* is singular",
                                node=_first(bad & inf.valid))
    ginv = inv2(inf.metric)
    s = inf.metric + inf.second
    metric = sym2(0.5 * s @ ginv @ s)
    second = sym2(0.5 * s @ ginv @ (inf.metric - inf.second))
    shape = inv2(plus) @ (eye - inf.shape)
    third = sym2(np.swapaxes(shape, -1, -2) @ metric @ shape)
    ext = det2(shape)
    return surfaces.FormField(
        patch=inf.patch, metric=metric, second=second, third=third,
        shape=shape, mean=tr2(shape), ext_curv=ext, curv=ext - 1.0,
        area_density=np.sqrt(det2(metric)),
    )


def curvature_at_infinity(forms):
    """K* = 2 K / (1 + H + K_e) per node.

    Raises where the denominator det(E + B) vanishes (horospherically
    degenerate nodes).
    """
    denom = 1.0 + forms.mean + forms.ext_curv
    if np.any(np.abs(denom[forms.patch.interior]) < 1e-12):
        bad = np.abs(denom) < 1e-12
        raise TransformSingular("horospherically degenerate node",
                                node=_first(bad & forms.patch.interior))
    return 2.0 * forms.curv / denom


def intrinsic_curvature(metric, patch, mode=None):
    """Finite-difference Gauss curvature of a metric field on the patch grid."""
    topo = PERIODIC if patch.topology == PERIODIC else BORDERED
    return gridops.brioschi_curvature(metric, patch.u_coords, patch.v_coords,
                                      topo, mode or patch.deriv_mode)


def mean_curvature_at_infinity(inf):
    """H* = tr B*; the residual |H* + K*| is the twisted Gauss identity."""
    return tr2(inf.shape)


def codazzi_star_residual(inf):
    """max-node norm of the Codazzi residual of B* for the connection of I*."""
    patch = inf.patch
    topo = PERIODIC if patch.topology == PERIODIC else BORDERED
    res = gridops.codazzi_residual_field(
        inf.metric, inf.shape, patch.u_coords, patch.v_coords,
        topo, patch.deriv_mode)
    mask = patch.interior & inf.valid
    return float(np.max(res[mask]))


def metric_from_infinity_at_rho(inf, rho):
    """Leaf metric e^{2 rho} I*/2 + II* + e^{-2 rho} III*/2."""
    return (0.5 * np.exp(2.0 * rho) * inf.metric + inf.second
            + 0.5 * np.exp(-2.0 * rho) * inf.third)


def bracket(a, b, ref):
    """Pairing tr(ref^{-1} a ref^{-1} b) of two symmetric 2x2 fields."""
    ref = np.asarray(ref, dtype=float)
    d = det2(ref)
    if np.any(np.abs(d) < 1e-300):
        raise GeometryError("reference form is singular")
    ri = inv2(ref)
    return tr2(ri @ np.asarray(a, dtype=float) @ ri @ np.asarray(b, dtype=float))


def _first(mask):
    idx = np.argwhere(mask)
    return tuple(idx[0]) if len(idx) else None
