"""Meshes for the plane-strain model: bilinear quads plus boundary chains.

A Mesh is a flat container (nodes, quad connectivity, named facet sets).
Boundary facets are 2-node segments ordered so the body lies on the left of
the travel direction; the outward normal is then the tangent rotated by
-90 degrees.  An InterfaceMesh views one facet set as an ordered chain and
carries the local numbering used by the mortar and lubrication assembly.

Text format, whitespace separated, '#' comments::

    NODES
    id x y
    ELEMS
    id body n1 n2 n3 n4
    FACETS
    id set-name n1 n2

Units: mm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mesh",
    "InterfaceMesh",
    "generate_half_cylinder",
    "generate_pin",
    "generate_block",
    "current_normal",
    "chain_normals",
    "write_mesh",
    "read_mesh",
]


@dataclass
class Mesh:
    nodes: np.ndarray
    elems: np.ndarray
    facet_sets: dict = field(default_factory=dict)
    elem_body: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.elems = np.asarray(self.elems, dtype=int).reshape(-1, 4)
        if self.elem_body is None:
            self.elem_body = np.zeros(len(self.elems), dtype=int)
        self.facet_sets = {k: np.asarray(v, dtype=int).reshape(-1, 2) for k, v in self.facet_sets.items()}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.nodes)

    def nodes_in_set(self, name: str) -> np.ndarray:
        """Unique node ids touched by a facet set, in first-appearance order."""
        facets = self.facet_sets[name]
        seen: dict[int, None] = {}
        for a, b in facets:
            seen.setdefault(int(a))
            seen.setdefault(int(b))
        return np.array(list(seen), dtype=int)

    def element_jacobians(self) -> np.ndarray:
        """Signed corner cross products, positive for proper CCW quads."""
        quads = self.nodes[self.elems]
        e1 = quads[:, 1] - quads[:, 0]
        e2 = quads[:, 3] - quads[:, 0]
        return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]


def current_normal(xa, xb) -> np.ndarray:
    """Outward unit normal of a deformed 2-node facet.

    Facets are ordered with the body on the left, so the outward normal is
    the normalized tangent rotated by -90 degrees.
    """
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    t = xb - xa
    length = np.hypot(t[..., 0], t[..., 1])
    if np.any(length <= 0.0):
        raise ValueError("degenerate facet")
    return np.stack((t[..., 1], -t[..., 0]), axis=-1) / length[..., None]


def chain_normals(coords: np.ndarray, facets: np.ndarray):
    """Facet and averaged nodal unit normals of an open chain.

    Parameters
    ----------
    coords : (n, 2) current chain node coordinates, chain order.
    facets : (nf, 2) local connectivity, consecutive along the chain.

    Returns
    -------
    facet_n : (nf, 2)
    nodal_n : (n, 2)
        Mean of the adjacent facet normals, renormalized.  End nodes carry
        their single facet normal.
    """
    a = coords[facets[:, 0]]
    b = coords[facets[:, 1]]
    facet_n = current_normal(a, b)
    nodal = np.zeros_like(coords)
    np.add.at(nodal, facets[:, 0], facet_n)
    np.add.at(nodal, facets[:, 1], facet_n)
    norm = np.hypot(nodal[:, 0], nodal[:, 1])
    if np.any(norm <= 0.0):
        raise ValueError("ill-defined nodal normal, chain folds back on itself")
    return facet_n, nodal / norm[:, None]


@dataclass
class InterfaceMesh:
    """Ordered chain view of a facet set, with local numbering.

    ``node_ids`` maps local chain nodes to mesh node ids; ``facets`` holds
    local indices, facet k running from chain node k to k+1.
    """

    node_ids: np.ndarray
    facets: np.ndarray
    coords0: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: Mesh, set_name: str) -> "InterfaceMesh":
        raw = mesh.facet_sets[set_name]
        ordered = _order_chain(raw)
        ids: dict[int, int] = {}
        for a, b in ordered:
            ids.setdefault(int(a), len(ids))
            ids.setdefault(int(b), len(ids))
        node_ids = np.array(list(ids), dtype=int)
        local = np.array([[ids[int(a)], ids[int(b)]] for a, b in ordered], dtype=int)
        return cls(node_ids=node_ids, facets=local, coords0=mesh.nodes[node_ids].copy())

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def end_nodes(self) -> np.ndarray:
        """Local ids of the two chain ends (pressure boundary)."""
        return np.array([0, self.n_nodes - 1], dtype=int)

    def dof_ids(self) -> np.ndarray:
        """Global displacement dof ids of the chain nodes, (n, 2)."""
        return np.stack((2 * self.node_ids, 2 * self.node_ids + 1), axis=1)

    def current_coords(self, displacement: np.ndarray) -> np.ndarray:
        u = np.asarray(displacement, dtype=float).reshape(-1, 2)
        return self.coords0 + u[self.node_ids]


def _order_chain(facets: np.ndarray) -> np.ndarray:
    """Order facets head to tail.  Preserves the given orientation."""
    facets = np.asarray(facets, dtype=int)
    if len(facets) == 0:
        raise ValueError("empty facet set")
    consecutive = all(facets[k, 1] == facets[k + 1, 0] for k in range(len(facets) - 1))
    if consecutive:
        return facets
    nxt = {}
    starts = set()
    ends = set()
    for a, b in facets:
        if int(a) in nxt:
            raise ValueError("facet set is not a simple chain")
        nxt[int(a)] = int(b)
        starts.add(int(a))
        ends.add(int(b))
    heads = sorted(starts - ends)
    if len(heads) != 1:
        raise ValueError("facet set is not a simple open chain")
    out = []
    a = heads[0]
    while a in nxt:
        b = nxt.pop(a)
        out.append((a, b))
        a = b
    if nxt:
        raise ValueError("facet set is disconnected")
    return np.array(out, dtype=int)


def generate_half_cylinder(radius: float, wall: float, n_circ: int, n_thick: int = 2) -> Mesh:
    """Lower half of a thin-walled cylinder, centered at the origin.

    The ring spans the angle range [180, 360] degrees, so the lowest point
    sits at (0, -radius).  The outer arc is tagged ``slave`` with exactly
    ``n_circ`` facets running left to right; the two horizontal cut faces
    are tagged ``dirichlet``.

    Parameters
    ----------
    radius : outer radius in mm.
    wall : wall thickness in mm.
    n_circ : circumferential element count (equals the slave facet count).
    n_thick : radial element count through the wall.
    """
    if wall <= 0.0 or wall >= radius:
        raise ValueError("wall thickness must lie in (0, radius)")
    if n_circ < 2 or n_thick < 1:
        raise ValueError("need at least 2 circumferential and 1 radial element")
    thetas = np.pi + np.pi * np.arange(n_circ + 1) / n_circ
    radii = radius - wall + wall * np.arange(n_thick + 1) / n_thick

    def nid(i: int, j: int) -> int:
        return i * (n_thick + 1) + j

    nodes = np.empty(((n_circ + 1) * (n_thick + 1), 2))
    for i, th in enumerate(thetas):
        for j, r in enumerate(radii):
            nodes[nid(i, j)] = (r * np.cos(th), r * np.sin(th))

    elems = []
    for i in range(n_circ):
        for j in range(n_thick):
            elems.append((nid(i, j), nid(i, j + 1), nid(i + 1, j + 1), nid(i + 1, j)))

    slave = [(nid(i, n_thick), nid(i + 1, n_thick)) for i in range(n_circ)]
    dirichlet = [(nid(0, j), nid(0, j + 1)) for j in range(n_thick)]
    dirichlet += [(nid(n_circ, j), nid(n_circ, j + 1)) for j in range(n_thick)]
    mesh = Mesh(nodes=nodes, elems=np.array(elems), facet_sets={"slave": slave, "dirichlet": dirichlet})
    if np.any(mesh.element_jacobians() <= 0.0):
        raise RuntimeError("half cylinder mesh has inverted elements")
    return mesh


def generate_pin(
    radius: float,
    height: float,
    length: float,
    n_surf: int,
    n_depth: int = 12,
    grading: float = 1.3,
) -> Mesh:
    """Rectangular pin with a circular contact arc at the bottom.

    The pin occupies x in [-length/2, length/2] with its flat top at
    y = height.  The bottom bulges downward along a circle of the given
    radius through the two bottom corners (sagitta radius - sqrt(radius^2 -
    (length/2)^2)).  Rows are graded geometrically toward the contact arc.
    The arc is tagged ``slave`` (n_surf facets, left to right), the top edge
    ``dirichlet``.
    """
    if radius < length / 2.0:
        raise ValueError("arc radius must be at least half the pin length")
    if n_surf < 2 or n_depth < 1:
        raise ValueError("need at least 2 surface and 1 depth element")
    xs = np.linspace(-0.5 * length, 0.5 * length, n_surf + 1)
    if grading == 1.0:
        ys = np.linspace(0.0, height, n_depth + 1)
    else:
        weights = (grading ** np.arange(n_depth + 1) - 1.0) / (grading**n_depth - 1.0)
        ys = height * weights
    y_center = np.sqrt(radius**2 - (0.5 * length) ** 2)
    arc = y_center - np.sqrt(radius**2 - xs**2)  # <= 0, zero at the corners

    def nid(i: int, j: int) -> int:
        return i * (n_depth + 1) + j

    nodes = np.empty(((n_surf + 1) * (n_depth + 1), 2))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            nodes[nid(i, j)] = (x, y + (1.0 - y / height) * arc[i])

    elems = []
    for i in range(n_surf):
        for j in range(n_depth):
            elems.append((nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)))

    slave = [(nid(i, 0), nid(i + 1, 0)) for i in range(n_surf)]
    dirichlet = [(nid(i, n_depth), nid(i + 1, n_depth)) for i in range(n_surf)]
    mesh = Mesh(nodes=nodes, elems=np.array(elems), facet_sets={"slave": slave, "dirichlet": dirichlet})
    if np.any(mesh.element_jacobians() <= 0.0):
        raise RuntimeError("pin mesh has inverted elements")
    return mesh


def generate_block(lx: float, ly: float, nx: int, ny: int, x0: float = 0.0, y0: float = 0.0) -> Mesh:
    """Structured rectangle with facet sets bottom/top/left/right."""

    def nid(i: int, j: int) -> int:
        return i * (ny + 1) + j

    xs = x0 + lx * np.arange(nx + 1) / nx
    ys = y0 + ly * np.arange(ny + 1) / ny
    nodes = np.array([(x, y) for x in xs for y in ys])
    elems = [
        (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1))
        for i in range(nx)
        for j in range(ny)
    ]
    sets = {
        "bottom": [(nid(i, 0), nid(i + 1, 0)) for i in range(nx)],
        "top": [(nid(i, ny), nid(i + 1, ny)) for i in range(nx)],
        "left": [(nid(0, j + 1), nid(0, j)) for j in range(ny)],
        "right": [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)],
    }
    return Mesh(nodes=nodes, elems=np.array(elems), facet_sets=sets)


def write_mesh(mesh: Mesh, path) -> None:
    lines = ["NODES"]
    for i, (x, y) in enumerate(mesh.nodes):
        lines.append(f"{i} {float(x)!r} {float(y)!r}")
    lines.append("ELEMS")
    for e, conn in enumerate(mesh.elems):
        lines.append(f"{e} {mesh.elem_body[e]} " + " ".join(str(int(n)) for n in conn))
    lines.append("FACETS")
    fid = 0
    for name, facets in mesh.facet_sets.items():
        for a, b in facets:
            lines.append(f"{fid} {name} {int(a)} {int(b)}")
            fid += 1
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    nodes: list[tuple[float, float]] = []
    elems: list[tuple[int, ...]] = []
    bodies: list[int] = []
    sets: dict[str, list[tuple[int, int]]] = {}
    section = None
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line in ("NODES", "ELEMS", "FACETS"):
                section = line
                continue
            parts = line.split()
            if section == "NODES":
                nodes.append((float(parts[1]), float(parts[2])))
            elif section == "ELEMS":
                bodies.append(int(parts[1]))
                elems.append(tuple(int(p) for p in parts[2:6]))
            elif section == "FACETS":
                sets.setdefault(parts[1], []).append((int(parts[2]), int(parts[3])))
            else:
                raise ValueError(f"content before any section header: {line!r}")
    return Mesh(
        nodes=np.array(nodes),
        elems=np.array(elems, dtype=int),
        facet_sets=sets,
        elem_body=np.array(bodies, dtype=int),
    )
