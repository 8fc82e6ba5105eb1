import numpy as np
import pytest

from lubricontact.mortar import (
    MeshedMaster,
    RigidPlane,
    assemble_mortar,
    dual_coeffs,
    interface_quadrature,
    project_to_master,
    smooth_nodal_traction_gradient,
    weighted_gap,
    weighted_rel_velocity,
)


def test_dual_coeffs_straight_facet():
    rng = np.random.default_rng(3)
    for _ in range(20):
        xa = rng.uniform(-5, 5, 2)
        xb = xa + rng.uniform(0.1, 2.0) * _unit(rng)
        A = dual_coeffs(xa, xb)
        assert np.allclose(A, [[2.0, -1.0], [-1.0, 2.0]], atol=1e-12)


def _unit(rng):
    th = rng.uniform(0, 2 * np.pi)
    return np.array([np.cos(th), np.sin(th)])


def test_biorthogonality_identity():
    # int phi_i N_j = delta_ij int N_j, checked with dense quadrature
    rng = np.random.default_rng(11)
    xg, wg = np.polynomial.legendre.leggauss(20)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    for _ in range(10):
        xa = rng.uniform(-2, 2, 2)
        xb = xa + rng.uniform(0.05, 3.0) * _unit(rng)
        length = np.hypot(*(xb - xa))
        A = dual_coeffs(xa, xb)
        shapes = np.stack([1.0 - xg, xg])  # (2, nq)
        phis = A @ shapes
        gram = (phis * wg) @ shapes.T * length  # int phi_i N_j
        target = np.diag([0.5 * length, 0.5 * length])
        assert gram == pytest.approx(target, abs=1e-12 * length)


def _flat_chain(xs, y=0.0):
    xs = np.asarray(xs, dtype=float)
    coords = np.column_stack([xs, np.full(len(xs), y)])
    facets = np.column_stack([np.arange(len(xs) - 1), np.arange(1, len(xs))])
    return coords, facets


def test_rigid_plane_projection_and_miss():
    plane = RigidPlane(height=-0.3, velocity=(2.0, 0.0))
    pts = np.array([[0.0, 0.2], [1.0, -0.5], [2.0, 0.0]])
    normals = np.array([[0.0, -1.0], [0.0, -1.0], [0.0, 1.0]])
    gap, vel, hit = plane.project_points(pts, normals, 0.0)
    assert hit.tolist() == [True, True, False]
    assert gap[0] == pytest.approx(0.5)
    assert gap[1] == pytest.approx(-0.2)  # penetration
    assert np.isinf(gap[2])
    assert np.allclose(vel, [2.0, 0.0])


def test_rigid_plane_time_dependent_velocity():
    plane = RigidPlane(height=0.0, velocity=lambda t: (3.0 * t, 0.0))
    assert np.allclose(plane.velocity_at(2.0), [6.0, 0.0])


def test_weighted_gap_constant_exact():
    coords, facets = _flat_chain([0.0, 0.31, 0.5, 1.07, 2.0], y=0.0)
    gap = weighted_gap(coords, facets, RigidPlane(height=-0.25))
    assert gap == pytest.approx(np.full(5, 0.25), abs=1e-14)


def test_weighted_gap_linear_exact():
    # tilted straight chain above the plane: nodal gap is recovered exactly
    xs = np.array([0.0, 0.4, 0.9, 1.3, 2.0])
    alpha = 0.2
    coords = np.column_stack([xs, 0.1 + alpha * xs])
    facets = np.column_stack([np.arange(4), np.arange(1, 5)])
    gap = weighted_gap(coords, facets, RigidPlane(height=0.0))
    # ray along n = (alpha, -1)/s hits y=0 after gap = y * s, s = sqrt(1+a^2)
    want = (0.1 + alpha * xs) * np.sqrt(1.0 + alpha**2)
    assert gap == pytest.approx(want, rel=1e-13)


def test_weighted_gap_cap_on_miss():
    # upward-facing end of a hook-shaped chain must miss and take the cap
    coords = np.array([[0.0, 0.5], [1.0, 0.5]])
    facets = np.array([[1, 0]])  # oriented so the normal points up
    gap = weighted_gap(coords, facets, RigidPlane(height=0.0), gap_cap=7.0)
    assert gap == pytest.approx([7.0, 7.0])


def test_mortar_weights_flat_chain():
    coords, facets = _flat_chain([0.0, 0.5, 1.0, 1.5])
    mats = assemble_mortar(coords, facets, RigidPlane(height=-1.0))
    # D_kk = int N_k: half a facet at the ends, a full facet inside
    assert mats.d_diag == pytest.approx([0.25, 0.5, 0.5, 0.25], abs=1e-14)
    assert mats.w_phi == pytest.approx(mats.d_diag, abs=1e-14)
    assert mats.m is None


def test_weighted_rel_velocity_sliding_plane():
    coords, facets = _flat_chain([0.0, 0.4, 1.0])
    v_nodal = np.zeros((3, 2))
    vrel = weighted_rel_velocity(coords, facets, v_nodal, RigidPlane(height=-0.1, velocity=(4.0, 0.0)))
    assert vrel == pytest.approx(np.tile([-2.0, 0.0], (3, 1)), abs=1e-13)


def test_weighted_rel_velocity_projects_out_normal_part():
    coords, facets = _flat_chain([0.0, 0.5, 1.0])
    v_nodal = np.tile([1.0, 5.0], (3, 1))  # large normal component
    vrel = weighted_rel_velocity(coords, facets, v_nodal, RigidPlane(height=-0.1))
    assert vrel == pytest.approx(np.tile([0.5, 0.0], (3, 1)), abs=1e-13)


def test_project_to_master_hit_and_penetration():
    master = MeshedMaster(coords=[[0.0, 0.0], [1.0, 0.0]], facets=[[0, 1]])
    hit = project_to_master([0.3, 0.5], [0.0, -1.0], master)
    assert hit is not None
    k, tpar, gap = hit
    assert k == 0
    assert tpar == pytest.approx(0.3)
    assert gap == pytest.approx(0.5)
    k, tpar, gap = project_to_master([0.3, -0.1], [0.0, -1.0], master)
    assert gap == pytest.approx(-0.1)
    assert project_to_master([5.0, 0.5], [0.0, -1.0], master) is None


def test_meshed_master_linear_gap_exact():
    # straight slave over a tilted straight master: gap is linear, so the
    # weighted gap equals the pointwise ray gap at the nodes
    xs = np.array([0.0, 0.35, 0.6, 1.0])
    coords, facets = _flat_chain(xs, y=0.0)
    slope, offset = 0.15, -0.2
    mx = np.array([-0.5, 0.4, 1.5])
    master = MeshedMaster(
        coords=np.column_stack([mx, offset + slope * mx]), facets=[[0, 1], [1, 2]]
    )
    gap = weighted_gap(coords, facets, master)
    # vertical ray from (x, 0) down to the master line
    want = -(offset + slope * xs)
    assert gap == pytest.approx(want, rel=1e-12)


def test_meshed_master_coupling_matches_dense_quadrature():
    # flat parallel chains, vertical projection: M[k, m] has a closed
    # integral once split at the master node stations
    sx = np.array([0.0, 0.45, 1.0])
    coords, facets = _flat_chain(sx, y=0.2)
    mx = np.array([-0.2, 0.3, 0.7, 1.2])
    master = MeshedMaster(coords=np.column_stack([mx, np.zeros(4)]), facets=[[0, 1], [1, 2], [2, 3]])
    mats = assemble_mortar(coords, facets, master)
    m = mats.m.toarray()

    def master_shape(x):
        out = np.zeros(4)
        for f, (a, b) in enumerate([[0, 1], [1, 2], [2, 3]]):
            if mx[a] <= x <= mx[b]:
                tt = (x - mx[a]) / (mx[b] - mx[a])
                out[a] += 1.0 - tt
                out[b] += tt
                return out
        raise AssertionError("projection left the master chain")

    xg, wg = np.polynomial.legendre.leggauss(10)
    want = np.zeros_like(m)
    dual = np.array([[2.0, -1.0], [-1.0, 2.0]])
    for a, b in facets:
        xa, xb = sx[a], sx[b]
        cuts = [xa] + [x for x in mx if xa < x < xb] + [xb]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            xm = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
            wm = 0.5 * (hi - lo) * wg
            for x, w in zip(xm, wm):
                xi = (x - xa) / (xb - xa)
                sh = np.array([1.0 - xi, xi])
                phi = dual @ sh
                ms = master_shape(x)
                for loc, node in enumerate((a, b)):
                    want[node] += w * phi[loc] * ms
    assert m == pytest.approx(want, abs=1e-12)
    # constant multiplier transfers equal and opposite totals
    assert m.sum(axis=1) == pytest.approx(mats.d_diag, abs=1e-12)


def test_meshed_master_force_balance_random_multiplier():
    # wavy master fully covering the slave: row sums of M must equal D
    rng = np.random.default_rng(5)
    sx = np.linspace(0.0, 2.0, 9)
    coords, facets = _flat_chain(sx, y=0.1)
    mx = np.linspace(-0.5, 2.5, 14)
    my = -0.05 + 0.02 * np.sin(2.0 * mx)
    master = MeshedMaster(
        coords=np.column_stack([mx, my]),
        facets=np.column_stack([np.arange(13), np.arange(1, 14)]),
    )
    mats = assemble_mortar(coords, facets, master)
    lam = rng.uniform(-1.0, 3.0, 9)
    slave_total = float(np.sum(mats.d_diag * lam))
    master_total = float(np.sum(mats.m.T @ lam))
    assert master_total == pytest.approx(slave_total, rel=1e-10)
    assert np.asarray(mats.m.sum(axis=1)).ravel() == pytest.approx(mats.d_diag, rel=1e-10)


def test_interface_state_tangents_orthogonal():
    xs = np.linspace(0.0, 1.0, 6)
    coords = np.column_stack([xs, 0.05 * np.sin(4 * xs)])
    facets = np.column_stack([np.arange(5), np.arange(1, 6)])
    state = interface_quadrature(coords, facets, np.zeros((6, 2)), RigidPlane(height=-1.0), 0.0)
    dots = np.einsum("ij,ij->i", state.normals, state.tangents)
    assert np.allclose(dots, 0.0, atol=1e-14)
    assert np.allclose(np.hypot(state.tangents[:, 0], state.tangents[:, 1]), 1.0)
    # tangent is the normal rotated +90: for n ~ (0,-1) it points along +x
    assert np.all(state.tangents[:, 0] > 0.9)


def test_smooth_gradient_exact_on_linear_field():
    xs = np.array([0.0, 0.3, 0.55, 1.1])
    direction = np.array([np.cos(0.4), np.sin(0.4)])
    coords = np.column_stack([xs, 0.0 * xs]) @ np.array(
        [[direction[0], direction[1]], [-direction[1], direction[0]]]
    )
    facets = np.column_stack([np.arange(3), np.arange(1, 4)])
    g = np.array([1.3, -0.7])
    p = coords @ g + 2.0
    grad = smooth_nodal_traction_gradient(coords, facets, p)
    want = (g @ direction) * direction
    assert grad == pytest.approx(np.tile(want, (4, 1)), rel=1e-12)
