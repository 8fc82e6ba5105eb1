import numpy as np
import pytest

from lubricontact.mesh import (
    InterfaceMesh,
    Mesh,
    chain_normals,
    current_normal,
    generate_block,
    generate_half_cylinder,
    generate_pin,
    read_mesh,
    write_mesh,
)


def test_current_normal_orientation_and_unit():
    # body on the left of travel: walking +x puts the outward normal at -y
    n = current_normal((0.0, 0.0), (2.0, 0.0))
    assert np.allclose(n, (0.0, -1.0))
    n = current_normal((0.0, 0.0), (1.0, 1.0))
    assert np.hypot(*n) == pytest.approx(1.0, rel=1e-15)
    assert np.allclose(n, (1.0, -1.0) / np.sqrt(2.0))


def test_half_cylinder_counts_and_geometry():
    mesh = generate_half_cylinder(radius=4.0, wall=0.1, n_circ=8, n_thick=1)
    slave = mesh.facet_sets["slave"]
    assert len(slave) == 8
    iface = InterfaceMesh.from_mesh(mesh, "slave")
    assert iface.n_facets == 8
    assert iface.n_nodes == 9
    # outer nodes sit on the outer radius; chain spans the lower half ring
    radii = np.hypot(iface.coords0[:, 0], iface.coords0[:, 1])
    assert np.allclose(radii, 4.0, rtol=1e-12)
    assert iface.coords0[:, 1].min() == pytest.approx(-4.0, rel=1e-12)
    assert np.allclose(iface.coords0[iface.end_nodes][:, 1], 0.0, atol=1e-12)
    assert np.any(mesh.element_jacobians() > 0.0)


def test_half_cylinder_bottom_normal_points_down():
    mesh = generate_half_cylinder(radius=4.0, wall=0.1, n_circ=64, n_thick=2)
    iface = InterfaceMesh.from_mesh(mesh, "slave")
    _, nodal = chain_normals(iface.coords0, iface.facets)
    low = np.argmin(iface.coords0[:, 1])
    assert nodal[low] @ np.array([0.0, -1.0]) > 0.999
    # normals point away from the ring center everywhere
    radial = iface.coords0 / np.hypot(iface.coords0[:, 0], iface.coords0[:, 1])[:, None]
    assert np.all(np.einsum("ij,ij->i", nodal, radial) > 0.9)


def test_half_cylinder_slave_count_fine():
    mesh = generate_half_cylinder(radius=4.0, wall=0.1, n_circ=512, n_thick=1)
    assert len(mesh.facet_sets["slave"]) == 512


def test_pin_geometry():
    radius, height, length = 1.5, 1.0, 1.0
    mesh = generate_pin(radius, height, length, n_surf=40)
    assert len(mesh.facet_sets["slave"]) == 40
    iface = InterfaceMesh.from_mesh(mesh, "slave")
    sagitta = radius - np.sqrt(radius**2 - (length / 2.0) ** 2)
    assert iface.coords0[:, 1].min() == pytest.approx(-sagitta, rel=1e-12)
    # bottom corners close at y = 0
    assert np.allclose(iface.coords0[iface.end_nodes][:, 1], 0.0, atol=1e-12)
    # arc points lie on the circle through the corners
    center_y = np.sqrt(radius**2 - (length / 2.0) ** 2)
    dist = np.hypot(iface.coords0[:, 0], iface.coords0[:, 1] - center_y)
    assert np.allclose(dist, radius, rtol=1e-12)
    top = mesh.nodes_in_set("dirichlet")
    assert np.allclose(mesh.nodes[top][:, 1], height, atol=1e-12)
    assert np.all(mesh.element_jacobians() > 0.0)


def test_pin_bottom_normals_point_down():
    mesh = generate_pin(1.5, 1.0, 1.0, n_surf=16)
    iface = InterfaceMesh.from_mesh(mesh, "slave")
    _, nodal = chain_normals(iface.coords0, iface.facets)
    assert np.all(nodal[:, 1] < 0.0)


def test_interface_chain_reordering():
    mesh = generate_pin(1.5, 1.0, 1.0, n_surf=6)
    facets = mesh.facet_sets["slave"]
    shuffled = facets[::-1].copy()  # reversed facet order, same orientation
    mesh2 = Mesh(
        nodes=mesh.nodes, elems=mesh.elems, facet_sets={"slave": shuffled}
    )
    a = InterfaceMesh.from_mesh(mesh, "slave")
    b = InterfaceMesh.from_mesh(mesh2, "slave")
    assert np.array_equal(a.node_ids, b.node_ids)
    assert np.array_equal(a.facets, b.facets)


def test_block_sets():
    mesh = generate_block(2.0, 1.0, 4, 2)
    assert len(mesh.facet_sets["bottom"]) == 4
    assert len(mesh.facet_sets["top"]) == 4
    bot = InterfaceMesh.from_mesh(mesh, "bottom")
    _, nodal = chain_normals(bot.coords0, bot.facets)
    assert np.all(nodal[:, 1] < -0.999)


def test_mesh_file_round_trip(tmp_path):
    mesh = generate_pin(1.5, 1.0, 1.0, n_surf=5, n_depth=3)
    path = tmp_path / "pin.mesh"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert np.array_equal(back.elems, mesh.elems)
    assert np.allclose(back.nodes, mesh.nodes, rtol=0, atol=0)
    assert set(back.facet_sets) == set(mesh.facet_sets)
    for name in mesh.facet_sets:
        assert np.array_equal(back.facet_sets[name], mesh.facet_sets[name])


def test_mesh_file_comments_and_errors(tmp_path):
    path = tmp_path / "tiny.mesh"
    path.write_text(
        "# a square\nNODES\n0 0.0 0.0\n1 1.0 0.0\n2 1.0 1.0\n3 0.0 1.0\n"
        "ELEMS\n0 0 0 1 2 3\nFACETS\n0 bottom 0 1\n"
    )
    mesh = read_mesh(path)
    assert mesh.n_nodes == 4
    assert mesh.elem_body[0] == 0
    assert "bottom" in mesh.facet_sets
