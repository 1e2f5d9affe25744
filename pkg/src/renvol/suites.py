"""Named invariant suites behind the command-line `verify` front end.

Each check returns a Check row; a suite is a list of rows.  Tolerances and
grid sizes come from the config dict (defaults below match the acceptance
values).
"""

from dataclasses import dataclass

import numpy as np

from . import equidistant, extremize, infinity, liouville, surfaces, variational, wvolume
from .gridops import fit_order

DEFAULTS = {
    "seed": 0,
    "grids": [32, 64, 128],
    "ball_radii": [0.5, 1.0, 2.0],
    "rho_values": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
    "eps_values": [1e-2, 1e-3, 1e-4],
    "extremize_n": 48,
    "extremize_tol": 1e-6,
    "extremize_amplitude": 0.1,
    "tol_ball_closed": 1e-8,
    "tol_ball_quadrature": 1e-6,
    "tol_sandwich_sphere": 1e-8,
    "tol_sandwich_torus": 1e-10,
    "tol_order": 1.8,
    "tol_eps_order": 1.95,
    "tol_involution": 1e-12,
    "tol_hk_analytic": 1e-10,
    "tol_identity": 1e-8,
    "tol_routes": 1e-9,
    "tol_selfdual": 1e-10,
}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    kind: str = "max"     # 'max': value <= tol, 'min': value >= tol


def _check(name, value, tol, kind="max"):
    ok = value <= tol if kind == "max" else value >= tol
    return Check(name, float(value), float(tol), bool(ok), kind)


def _cfg(config, key):
    return config.get(key, DEFAULTS[key])


def suite_forms(config):
    checks = []
    rng = np.random.default_rng(_cfg(config, "seed"))

    patch = surfaces.graph_patch(lambda x, y: np.ones_like(x),
                                 2 * np.pi, 2 * np.pi, 32, 32)
    forms = surfaces.compute_forms(patch)
    checks.append(_check("horosphere shape operator = E",
                         np.max(np.abs(forms.shape - np.eye(2))), 1e-12))

    bp, bf = surfaces.sphere_band_patch(1.0, 64, 128)
    cf = surfaces.compute_forms(bp)
    checks.append(_check("sphere band shape operator = coth(1) E",
                         np.max(np.abs(cf.shape - bf.shape)[bp.interior]), 5e-3))

    pp, _ = surfaces.plane_band_patch(0.0, 48, 48)
    cpf = surfaces.compute_forms(pp)
    checks.append(_check("plane shape operator = 0",
                         np.max(np.abs(cpf.shape)[pp.interior]), 1e-10))

    grids = _cfg(config, "grids")
    gauss, codazzi, selfadj = [], [], []
    for n in grids:
        r = np.random.default_rng(_cfg(config, "seed"))
        p = surfaces.random_graph_patch(r, n=n, m=n, amplitude=0.05)
        f = surfaces.compute_forms(p)
        gauss.append(surfaces.gauss_residual(f))
        codazzi.append(surfaces.codazzi_residual(f))
        selfadj.append(f.selfadj_residual)
    h = [1.0 / n for n in grids]
    tol_order = _cfg(config, "tol_order")
    checks.append(_check("gauss residual order", fit_order(h, gauss), tol_order, "min"))
    checks.append(_check("codazzi residual order", fit_order(h, codazzi), tol_order, "min"))
    checks.append(_check("self-adjointness order", fit_order(h, selfadj), tol_order, "min"))

    _, sf = surfaces.sphere_patch(1.0)
    checks.append(_check("closed sphere Gauss-Bonnet = 2",
                         abs(surfaces.euler_characteristic(sf) - 2.0), 1e-8))
    p = surfaces.random_graph_patch(rng, n=64, m=64, amplitude=0.05)
    f = surfaces.compute_forms(p)
    checks.append(_check("periodic cell Gauss-Bonnet = 0",
                         abs(surfaces.euler_characteristic(f)), 1e-3))
    return checks


def suite_infinity(config):
    checks = []
    rng = np.random.default_rng(_cfg(config, "seed"))
    tol_inv = _cfg(config, "tol_involution")

    forms = _random_admissible_forms(rng, 1000)
    back = infinity.from_infinity(infinity.to_infinity(forms))
    err = max(np.max(np.abs(back.metric - forms.metric)),
              np.max(np.abs(back.second - forms.second)))
    checks.append(_check("involution round trip", err, tol_inv))

    hk = 0.0
    for r in _cfg(config, "ball_radii"):
        _, sf = surfaces.sphere_patch(r, n=16, m=32)
        inf = infinity.to_infinity(sf)
        hk = max(hk, np.max(np.abs(inf.mean + inf.curv)))
        hk = max(hk, np.max(np.abs(inf.mean + 2.0 * np.exp(-2.0 * r))))
    checks.append(_check("H* + K* = 0 (analytic spheres)",
                         hk, _cfg(config, "tol_hk_analytic")))

    grids = _cfg(config, "grids")
    residuals = []
    for n in grids:
        fld = _test_field(n)
        inf = liouville.infinity_data(fld)
        k_int = infinity.intrinsic_curvature(inf.metric, fld.chart, "central")
        residuals.append(np.max(np.abs(inf.mean + k_int)[fld.chart.interior]))
    checks.append(_check("H* + K* order (intrinsic K*)",
                         fit_order([1.0 / n for n in grids], residuals),
                         _cfg(config, "tol_order"), "min"))

    cod = []
    for n in grids:
        fld = _test_field(n, mode="central")
        cod.append(infinity.codazzi_star_residual(liouville.infinity_data(fld)))
    checks.append(_check("Codazzi-at-infinity order",
                         fit_order([1.0 / n for n in grids], cod),
                         _cfg(config, "tol_order"), "min"))

    # leaf metric: starred route against the base-surface route
    forms = _random_admissible_forms(rng, 400)
    inf = infinity.to_infinity(forms)
    rho = 0.9
    lhs = infinity.metric_from_infinity_at_rho(inf, rho)
    rhs = equidistant.metric_at_distance(forms, rho)
    checks.append(_check("leaf metric two routes", np.max(np.abs(lhs - rhs)), 1e-11))

    da_ratio = inf.area_density / forms.area_density
    det_pb = 0.5 * (1.0 + forms.mean + forms.ext_curv)
    checks.append(_check("da*/da = det(E+B)/2",
                         np.max(np.abs(da_ratio - det_pb)), 1e-11))

    a = rng.normal(size=(100, 2, 2))
    a = a + np.swapaxes(a, -1, -2)
    b = rng.normal(size=(100, 2, 2))
    b = b + np.swapaxes(b, -1, -2)
    ref = _random_spd(rng, 100)
    sym_gap = np.max(np.abs(infinity.bracket(a, b, ref)
                            - infinity.bracket(b, a, ref)))
    checks.append(_check("bracket symmetry", sym_gap, 1e-12))
    return checks


def suite_volume(config):
    checks = []
    for r in _cfg(config, "ball_radii"):
        target = -2.0 * np.pi * r
        closed = wvolume.ball_report(r, "closed").w_volume
        quad = wvolume.ball_report(r, "quadrature").w_volume
        checks.append(_check(f"ball law W(r={r}) closed",
                             abs(closed - target), _cfg(config, "tol_ball_closed")))
        checks.append(_check(f"ball law W(r={r}) quadrature",
                             abs(quad - target), _cfg(config, "tol_ball_quadrature")))

    _, sf = surfaces.sphere_patch(1.0)
    spec = wvolume.SlabSpec(sf, rho_hi=1.2, genus=0)
    checks.append(_check("sandwich sphere slab",
                         wvolume.sandwich_check(spec),
                         _cfg(config, "tol_sandwich_sphere")))
    _, hf = surfaces.horosphere_patch(1.0, 2 * np.pi, 2 * np.pi, 32, 32)
    checks.append(_check("sandwich horotorus slab",
                         wvolume.sandwich_check(wvolume.SlabSpec(hf, rho_hi=0.8)),
                         _cfg(config, "tol_sandwich_torus")))
    grids = _cfg(config, "grids")
    res = []
    for n in grids:
        rng = np.random.default_rng(_cfg(config, "seed"))
        p = surfaces.random_graph_patch(rng, n=n, m=n, amplitude=0.05)
        f = surfaces.compute_forms(p)
        res.append(wvolume.sandwich_check(wvolume.SlabSpec(f, rho_hi=0.7)))
    checks.append(_check("sandwich discrete order",
                         fit_order([1.0 / n for n in grids], res),
                         _cfg(config, "tol_order"), "min"))

    _, sf1 = surfaces.sphere_patch(1.0)
    rep = wvolume.renormalized_volume(sf1, _cfg(config, "rho_values"),
                                      genus=0, base_volume=surfaces.ball_volume(1.0))
    checks.append(_check("renormalized identity (ball)",
                         rep.identity_error, _cfg(config, "tol_identity")))
    checks.append(_check("renormalized decay exponent +2 window",
                         abs(rep.decay_exponent + 2.0), 0.1))
    checks.append(_check("V_R = W - pi(g-1)", rep.consistency_error, 1e-6))

    spec_a = wvolume.SlabSpec(sf1, rho_hi=0.7, genus=0)
    spec_b = wvolume.SlabSpec(equidistant.forms_at_distance(sf1, 0.7),
                              rho_hi=0.5, genus=0)
    spec_ab = wvolume.SlabSpec(sf1, rho_hi=1.2, genus=0)
    gap = abs(wvolume.w_volume(spec_a).w_volume
              + wvolume.w_volume(spec_b).w_volume
              - wvolume.w_volume(spec_ab).w_volume)
    checks.append(_check("W additivity across a slicing leaf", gap, 1e-10))

    _, _, defect = wvolume.dual_functionals(spec_ab)
    checks.append(_check("self-duality W = (V + I_EH)/2", abs(defect), 1e-12))
    rng = np.random.default_rng(_cfg(config, "seed"))
    f = surfaces.compute_forms(surfaces.random_graph_patch(rng, n=48, m=48))
    point, integral = wvolume.momentum_trace_residual(f)
    checks.append(_check("momentum trace (pointwise)", point, 1e-14))
    checks.append(_check("momentum pairing integral", integral,
                         _cfg(config, "tol_selfdual")))
    return checks


def suite_schlafli(config):
    checks = []
    rng = np.random.default_rng(_cfg(config, "seed"))
    mats = rng.normal(size=(1000, 2, 2))
    mats2 = rng.normal(size=(1000, 2, 2))
    checks.append(_check("2x2 trace identity",
                         variational.trace_identity_check(mats, mats2), 1e-12))

    fam = variational.ball_family(1.0)
    formula, fd = variational.schlafli_dV(fam, 1e-3)
    checks.append(_check("ball dV = area", abs(formula - surfaces.sphere_area(1.0)),
                         1e-6))
    checks.append(_check("ball dW/dr = -2 pi",
                         abs(variational.dW_boundary(fam) + 2.0 * np.pi), 1e-6))

    routes = (variational.dW_boundary(fam), variational.dW_infinity(fam),
              variational.dW_traceless(fam))
    spread = max(routes) - min(routes)
    checks.append(_check("three-way dW agreement (ball)", spread,
                         _cfg(config, "tol_routes")))

    g = variational.graph_family(
        lambda x, y: 1.0 + 0.15 * np.cos(x) + 0.1 * np.sin(y),
        variational.normal_displacement(
            lambda u, v: 0.5 + 0.4 * np.cos(u + v) + 0.3 * np.sin(u)),
        deriv_mode="spectral")
    routes_g = (variational.dW_boundary(g), variational.dW_infinity(g),
                variational.dW_traceless(g))
    checks.append(_check("three-way dW agreement (graph)",
                         max(routes_g) - min(routes_g), _cfg(config, "tol_routes")))
    eps_values = _cfg(config, "eps_values")
    slope, _ = variational.order_fit(g, variational.dW_boundary, "w_at", eps_values)
    checks.append(_check("dW order in eps", slope,
                         _cfg(config, "tol_eps_order"), "min"))
    slope_v, _ = variational.order_fit(g, variational.schlafli_dV, "volume_at",
                                       eps_values)
    checks.append(_check("dV order in eps", slope_v,
                         _cfg(config, "tol_eps_order"), "min"))

    tang = variational.graph_family(
        lambda x, y: 1.0 + 0.05 * np.cos(x),
        variational.tangential_displacement(lambda u, v: 0.3 * np.sin(u),
                                            lambda u, v: 0.2 * np.cos(v)),
        deriv_mode="spectral")
    formula_t, _ = variational.schlafli_dV(tang, 1e-4)
    checks.append(_check("tangential dV = 0", abs(formula_t), 1e-7))
    return checks


def suite_extremize(config):
    checks = []
    n = _cfg(config, "extremize_n")
    tol = _cfg(config, "extremize_tol")
    fld = _bumped_torus(n, _cfg(config, "extremize_amplitude"))
    state, log = extremize.run_extremization(fld, tol=tol)
    k = state.curvature()
    checks.append(_check("convergence: stddev K*", float(np.std(k)), tol))
    checks.append(_check("criticality: max|K* + lambda|",
                         float(np.max(np.abs(k + state.lam))), tol))
    vals = log.objective_values()
    drops = sum(1 for i in range(len(vals) - 1)
                if vals[i + 1] < vals[i] - 1e-13 * max(1.0, abs(vals[i])))
    checks.append(_check("objective non-decreasing (drops)", drops, 0))
    checks.append(_check("Gauss-Bonnet conservation",
                         abs(extremize.gauss_bonnet_integral(state.field())
                             - extremize.gauss_bonnet_integral(fld)), 1e-8))
    rng = np.random.default_rng(_cfg(config, "seed"))
    fstate = state.field()
    da = fstate.cell_measure() * np.exp(fstate.phi)
    worst = -np.inf
    gap = 0.0
    for _ in range(20):
        v = extremize._random_direction(rng, fstate)
        v = v - np.sum(v * da) / np.sum(da)
        a, b = extremize.hessian_quadform(state, v, v)
        worst = max(worst, a)
        gap = max(gap, abs(a - b) / max(1.0, abs(a)))
    checks.append(_check("Hessian probes all negative", worst, 0.0))
    checks.append(_check("Hessian two-route relative gap", gap, 0.05))
    c, spread = extremize.calibrate_gradient(
        extremize.state_from_field(fld), rng, 5)
    checks.append(_check("gradient calibration spread", spread, 0.01))
    return checks


SUITES = {
    "forms": suite_forms,
    "infinity": suite_infinity,
    "volume": suite_volume,
    "schlafli": suite_schlafli,
    "extremize": suite_extremize,
}


def run_suite(name, config):
    if name == "all":
        checks = []
        for key in SUITES:
            checks.extend(run_suite(key, config))
        return checks
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](config)


# ---------------------------------------------------------------------------
# helpers


def _random_spd(rng, count, spread=1.0):
    """Random SPD matrices with eigenvalues in about [e^-spread, e^spread]."""
    angles = rng.uniform(0.0, np.pi, size=count)
    c, s = np.cos(angles), np.sin(angles)
    rot = np.empty((count, 2, 2))
    rot[:, 0, 0] = c
    rot[:, 0, 1] = -s
    rot[:, 1, 0] = s
    rot[:, 1, 1] = c
    eig = np.exp(rng.uniform(-spread, spread, size=(count, 2)))
    diag = np.zeros((count, 2, 2))
    diag[:, 0, 0] = eig[:, 0]
    diag[:, 1, 1] = eig[:, 1]
    return rot @ diag @ np.swapaxes(rot, -1, -2)


class _BareChart:
    """Minimal patch stand-in for synthetic node sets (no geometry)."""

    def __init__(self, shape):
        self.weights = np.ones(shape)

    @property
    def interior(self):
        return self.weights > 0


def random_admissible_forms(rng, count):
    """Random (I, II) pairs with shape-operator eigenvalues inside (-1, 1),
    packed as an (count, 1) grid of nodes."""
    from .gridops import det2, sym2, tr2

    metric = _random_spd(rng, count)
    raw = sym2(rng.normal(size=(count, 2, 2)))
    shape = np.linalg.solve(metric, raw)
    tr, dt = tr2(shape), det2(shape)
    disc = np.sqrt(np.maximum(tr * tr / 4.0 - dt, 0.0))
    radius = np.abs(tr / 2.0) + disc
    shape = shape * (0.8 / np.maximum(radius, 0.8))[..., None, None]
    second = sym2(metric @ shape)
    shape = np.linalg.solve(metric, second)
    ext = det2(shape)
    third = sym2(np.swapaxes(shape, -1, -2) @ metric @ shape)

    def grid(x):
        return x.reshape(count, 1, *x.shape[1:])

    return surfaces.FormField(
        patch=_BareChart((count, 1)), metric=grid(metric), second=grid(second),
        third=grid(third), shape=grid(shape), mean=grid(tr2(shape)),
        ext_curv=grid(ext), curv=grid(ext - 1.0),
        area_density=grid(np.sqrt(det2(metric))),
    )


_random_admissible_forms = random_admissible_forms


def _test_field(n, mode="spectral"):
    lx = 2.0 * np.pi
    chart_field = liouville.periodic_field(np.zeros((n, n)), lx, 1j * lx, mode=mode)
    z = chart_field.z
    chart_field.phi = (0.25 * np.cos(z.real) + 0.2 * np.sin(z.imag)
                       + 0.1 * np.cos(z.real + z.imag))
    return chart_field


def _bumped_torus(n, amplitude):
    lx = 2.0 * np.pi
    fld = liouville.periodic_field(np.zeros((n, n)), lx, 1j * lx)
    fld.phi = 0.3 + amplitude * np.cos(2.0 * np.pi * fld.z.real / lx)
    return fld
