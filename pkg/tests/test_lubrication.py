import numpy as np
import pytest

from lubricontact.lubrication import (
    FluidParams,
    LubricationField,
    cavitation_term,
    flow_factors,
    fluid_traction,
    reynolds_residual,
    solve_pressure,
)


def test_flow_factors_smooth_limit():
    phi_p, phi_s, phi_f = flow_factors(np.array([1e-3, 5.0]), 0.0)
    assert np.all(phi_p == 1.0)
    assert np.all(phi_s == 0.0)
    assert np.all(phi_f == 1.0)


def test_flow_factors_at_unit_ratio():
    # x = sigma / h = 1
    phi_p, phi_s, phi_f = flow_factors(2e-3, 2e-3)
    assert phi_p == pytest.approx(4.0, rel=1e-15)
    assert phi_s == pytest.approx(-33.0 / 7.0, rel=1e-15)
    assert phi_f == pytest.approx(2.0, rel=1e-15)


def test_flow_factors_trends():
    h = np.geomspace(1e-4, 1e-1, 40)
    phi_p, phi_s, phi_f = flow_factors(h, 1e-3)
    # rougher relative to the film: more pressure flow, more drag
    assert np.all(np.diff(phi_p) < 0.0)
    assert np.all(np.diff(phi_f) < 0.0)
    assert np.all(phi_s <= 0.0)
    assert phi_p[-1] == pytest.approx(1.0, abs=1e-3)


def test_flow_factors_reject_nonpositive_film():
    with pytest.raises(ValueError):
        flow_factors(np.array([1e-3, 0.0]), 1e-3)


def test_cavitation_term_values_and_slope():
    p = np.array([-2.0, -1e-9, 0.0, 3.0])
    val, der = cavitation_term(p, 1e8)
    assert val == pytest.approx([2e8, 1e-1, 0.0, 0.0])
    assert der == pytest.approx([-1e8, -1e8, 0.0, 0.0])


def _chain(n, rng):
    """Wavy open chain with uneven spacing, used for oracle comparisons."""
    s = np.sort(rng.uniform(0.0, 1.0, n - 2))
    s = np.concatenate([[0.0], s, [1.0]])
    x = 2.0 * s
    coords = np.column_stack([x, 0.1 * np.sin(3.0 * x)])
    facets = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return coords, facets


def _oracle_residual(coords, facets, h, v1, v2, dh_dt, p, eta, sigma, eps):
    """Scalar transcription of the documented weak form, dense quadrature.

    Independent of the vectorized assembly: loops facets and quad points,
    builds each term from the weak form directly.  20-point Gauss is far
    beyond the polynomial degree of any integrand.
    """
    xg, wg = np.polynomial.legendre.leggauss(20)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    n = len(coords)
    r = np.zeros(n)
    for a, b in facets:
        d = coords[b] - coords[a]
        length = float(np.hypot(d[0], d[1]))
        tau = d / length
        nodal_cav = [eps * max(0.0, -p[a]), eps * max(0.0, -p[b])]
        nodal_w = []
        for k in (a, b):
            _, phi_s, _ = flow_factors(h[k], sigma)
            nodal_w.append(sigma * phi_s * 0.5 * (v1[k] - v2[k]))
        for xi, w in zip(xg, wg):
            sh = [1.0 - xi, xi]
            dsh = [-1.0 / length, 1.0 / length]
            hq = sh[0] * h[a] + sh[1] * h[b]
            cond = (hq**3 + 3.0 * sigma**2 * hq) / (12.0 * eta)
            dpds = p[a] * dsh[0] + p[b] * dsh[1]
            vm = 0.5 * (sh[0] * (v1[a] + v2[a]) + sh[1] * (v1[b] + v2[b]))
            wq = sh[0] * nodal_w[0] + sh[1] * nodal_w[1]
            dhdtq = sh[0] * dh_dt[a] + sh[1] * dh_dt[b]
            cavq = sh[0] * nodal_cav[0] + sh[1] * nodal_cav[1]
            for loc, j in enumerate((a, b)):
                r[j] += w * length * (
                    cond * dpds * dsh[loc]
                    + dhdtq * sh[loc]
                    - (vm @ tau) * hq * dsh[loc]
                    - (wq @ tau) * dsh[loc]
                    - cavq * sh[loc]
                )
    return r


def test_residual_matches_dense_quadrature_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = 11
        coords, facets = _chain(n, rng)
        h = rng.uniform(0.5e-3, 2e-3, n)
        v1 = rng.uniform(-3.0, 3.0, (n, 2))
        v2 = rng.uniform(-3.0, 3.0, (n, 2))
        dh_dt = rng.uniform(-1e-2, 1e-2, n)
        p = rng.uniform(-2.0, 5.0, n)
        eta, sigma, eps = 4e-8, 0.8e-3, 1e3
        fld = LubricationField(h=h, v1=v1, v2=v2, dh_dt=dh_dt)
        fluid = FluidParams(viscosity=eta, sigma=sigma, penalty=eps)
        r, _ = reynolds_residual(coords, facets, fld, p, fluid)
        want = _oracle_residual(coords, facets, h, v1, v2, dh_dt, p, eta, sigma, eps)
        scale = np.abs(want).max()
        assert r == pytest.approx(want, abs=1e-12 * scale)


def test_jacobian_is_exact_between_kinks():
    # the residual is piecewise linear in p; away from sign changes the
    # Jacobian reproduces finite differences to roundoff
    rng = np.random.default_rng(21)
    n = 9
    coords, facets = _chain(n, rng)
    h = rng.uniform(0.5e-3, 2e-3, n)
    fld = LubricationField(h=h, v1=rng.uniform(-1, 1, (n, 2)), v2=rng.uniform(-1, 1, (n, 2)))
    fluid = FluidParams(viscosity=4e-8, sigma=0.5e-3, penalty=1e4)
    p = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0) * rng.uniform(0.5, 2.0, n)
    dp = rng.uniform(-1e-3, 1e-3, n)  # too small to flip any sign
    r0, jac = reynolds_residual(coords, facets, fld, p, fluid)
    r1, _ = reynolds_residual(coords, facets, fld, p + dp, fluid)
    pred = jac @ dp
    assert r1 - r0 == pytest.approx(pred, rel=1e-9, abs=1e-10 * np.abs(pred).max())


def _slider_exact(x, h1, h2, length, u_wall, eta):
    """Closed-form wedge pressure for a moving flat counterface.

    Mean surface speed u_wall / 2, film falling linearly h1 -> h2.
    """
    k = (h1 - h2) / length
    um = 0.5 * u_wall
    q = u_wall * h1 * h2 / (h1 + h2)
    h = h1 - k * x

    def f(hh):
        return um / hh - 0.5 * q / hh**2

    return (12.0 * eta / k) * (f(h) - f(h1))


def _solve_slider(n_facets, h1, h2, length, u_wall, eta):
    n = n_facets + 1
    x = np.linspace(0.0, length, n)
    coords = np.column_stack([x, np.zeros(n)])
    facets = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    h = h1 + (h2 - h1) * x / length
    fld = LubricationField(
        h=h,
        v1=np.zeros((n, 2)),
        v2=np.tile([u_wall, 0.0], (n, 1)),
    )
    fluid = FluidParams(viscosity=eta, penalty=1e8)
    p = solve_pressure(coords, facets, fld, fluid, dirichlet_ids=[0, n - 1])
    return x, p


def test_slider_bearing_convergence_and_load():
    h1, h2, length, u_wall, eta = 1e-3, 0.5e-3, 1.0, 10.0, 4e-8
    errs = {}
    for nf in (32, 64, 128):
        x, p = _solve_slider(nf, h1, h2, length, u_wall, eta)
        # elementwise L2 error of the interpolant against the closed form
        xg, wg = np.polynomial.legendre.leggauss(8)
        err2 = 0.0
        for a in range(nf):
            xa, xb = x[a], x[a + 1]
            xm = 0.5 * (xa + xb) + 0.5 * (xb - xa) * xg
            wm = 0.5 * (xb - xa) * wg
            ph = p[a] + (p[a + 1] - p[a]) * (xm - xa) / (xb - xa)
            err2 += np.sum(wm * (ph - _slider_exact(xm, h1, h2, length, u_wall, eta)) ** 2)
        errs[nf] = np.sqrt(err2)
    order_1 = np.log2(errs[32] / errs[64])
    order_2 = np.log2(errs[64] / errs[128])
    assert order_1 > 1.9
    assert order_2 > 1.9

    # load capacity per unit depth against dense quadrature of the exact p
    x, p = _solve_slider(128, h1, h2, length, u_wall, eta)
    w_num = np.trapezoid(p, x)
    xg, wg = np.polynomial.legendre.leggauss(64)
    xm = 0.5 * length * (xg + 1.0)
    w_exact = np.sum(0.5 * length * wg * _slider_exact(xm, h1, h2, length, u_wall, eta))
    assert w_exact > 0.0
    assert w_num == pytest.approx(w_exact, rel=0.02)


def test_slider_pressure_positive_and_bounded():
    x, p = _solve_slider(64, 1e-3, 0.5e-3, 1.0, 10.0, 4e-8)
    assert p.min() >= 0.0
    assert p[1:-1].max() > 0.0
    assert p[0] == 0.0 and p[-1] == 0.0


def test_cavitation_penalty_clamps_negative_pressure():
    # diverging wedge: the unpenalized problem goes negative, the penalty
    # clamps the dip in proportion to 1/eps
    h1, h2, length, u_wall, eta = 0.5e-3, 1e-3, 1.0, 10.0, 4e-8
    n = 65
    x = np.linspace(0.0, length, n)
    coords = np.column_stack([x, np.zeros(n)])
    facets = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    h = h1 + (h2 - h1) * x / length
    fld = LubricationField(h=h, v1=np.zeros((n, 2)), v2=np.tile([u_wall, 0.0], (n, 1)))
    mins = {}
    for eps in (1e8, 1e10):
        p = solve_pressure(coords, facets, fld, FluidParams(viscosity=eta, penalty=eps), [0, n - 1])
        mins[eps] = p.min()
    assert mins[1e8] < 0.0
    assert mins[1e8] >= -1e-6
    assert mins[1e10] >= mins[1e8] / 50.0  # dip shrinks with the penalty


def test_fluid_traction_pure_pressure():
    n = 4
    h = np.full(n, 1e-3)
    fld = LubricationField(h=h, v1=np.zeros((n, 2)), v2=np.zeros((n, 2)))
    normals = np.tile([0.0, -1.0], (n, 1))
    p = np.array([1.0, 2.0, 3.0, 4.0])
    t_perp, t_par = fluid_traction(p, np.zeros((n, 2)), fld, normals, FluidParams(viscosity=4e-8))
    assert np.allclose(t_par, 0.0)
    assert np.allclose(t_perp, -p[:, None] * normals)
    assert np.all(t_perp[:, 1] > 0.0)  # film below pushes the surface up


def test_fluid_traction_couette_shear_opposes_slave_motion():
    n = 3
    h = np.full(n, 2e-3)
    eta = 4e-8
    u = 6.0
    fld = LubricationField(h=h, v1=np.tile([u, 0.0], (n, 1)), v2=np.zeros((n, 2)))
    normals = np.tile([0.0, -1.0], (n, 1))
    t_perp, t_par = fluid_traction(np.zeros(n), np.zeros((n, 2)), fld, normals, FluidParams(viscosity=eta))
    assert np.allclose(t_par, 0.0)
    assert t_perp[:, 0] == pytest.approx(-eta / 2e-3 * 0.5 * u, rel=1e-12)


def test_fluid_traction_poiseuille_part_scales_with_film():
    n = 2
    fld = LubricationField(h=np.array([1e-3, 2e-3]), v1=np.zeros((n, 2)), v2=np.zeros((n, 2)))
    grad_p = np.tile([5.0, 0.0], (n, 1))
    t_perp, t_par = fluid_traction(
        np.zeros(n), grad_p, fld, np.tile([0.0, -1.0], (n, 1)), FluidParams(viscosity=4e-8)
    )
    assert t_par[0, 0] == pytest.approx(-0.5 * 1e-3 * 5.0, rel=1e-12)
    assert t_par[1, 0] == pytest.approx(-0.5 * 2e-3 * 5.0, rel=1e-12)
    assert np.allclose(t_perp, 0.0)
