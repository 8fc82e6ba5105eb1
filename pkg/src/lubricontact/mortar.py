"""Dual mortar coupling on the slave surface chain.

The slave surface carries a dual Lagrange multiplier basis, biorthogonal
to the standard linear shape functions on each deformed facet:

    int phi_i N_j dgamma = delta_ij int N_j dgamma.

That makes the slave coupling matrix D diagonal, so multipliers can later
be condensed out algebraically.  This module computes the dual
coefficients, projects slave quadrature points onto the counterface
(an analytic rigid plane or a meshed chain), and evaluates the weighted
nodal quantities the contact and lubrication models consume: gaps,
tangentially projected surface velocities and smoothed pressure
gradients.

Meshed counterfaces are integrated segment-wise: slave facets are split
where the projection crosses master nodes, so every integrand stays
polynomial per segment and the 3-point Gauss rule is exact.

Units: mm, s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import chain_normals

__all__ = [
    "DualBasis",
    "MortarMatrices",
    "InterfaceState",
    "RigidPlane",
    "MeshedMaster",
    "dual_coeffs",
    "project_to_master",
    "assemble_mortar",
    "interface_quadrature",
    "weighted_gap",
    "weighted_rel_velocity",
    "smooth_nodal_traction_gradient",
]

_XI3 = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_W3 = 0.5 * np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def _soft_cap(gap, cap):
    """Monotone C1 cap: identity below, constant above, quadratic blend.

    A hard ``min(gap, cap)`` kinks the film in the displacement field, and
    finite-difference probes straddling that kink produce derivative
    garbage orders of magnitude off.  The blend spans ``0.1 cap`` either
    side and keeps the far-field value at exactly ``cap``.
    """
    if not np.isfinite(cap):
        return gap
    w = 0.1 * cap
    g = np.minimum(gap, cap + w)
    blend = g - (g - (cap - w)) ** 2 / (4.0 * w)
    return np.where(g <= cap - w, g, blend)


def dual_coeffs(xa, xb) -> np.ndarray:
    """Dual basis coefficients on one deformed 2-node facet.

    Returns A with ``phi_i = sum_j A[i, j] N_j``, solving the
    biorthogonality conditions with the facet's current metric.  For a
    straight facet this is [[2, -1], [-1, 2]] independent of length.
    """
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    length = np.hypot(*(xb - xa))
    if length <= 0.0:
        raise ValueError("degenerate facet")
    # Gram and first moments of the standard shapes; straight facets have
    # a constant metric so the closed forms below are the exact integrals.
    gram = length * np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
    moments = np.diag([0.5 * length, 0.5 * length])
    return moments @ np.linalg.inv(gram)


@dataclass(frozen=True)
class DualBasis:
    """Per-facet dual coefficient matrices, (nf, 2, 2)."""

    coeffs: np.ndarray

    @classmethod
    def for_chain(cls, coords: np.ndarray, facets: np.ndarray) -> "DualBasis":
        out = np.empty((len(facets), 2, 2))
        for k, (a, b) in enumerate(facets):
            out[k] = dual_coeffs(coords[a], coords[b])
        return cls(coeffs=out)


class RigidPlane:
    """Analytic horizontal counterface y = height, sliding tangentially.

    velocity may be a constant (vx, vy) pair or a callable of time.  The
    surface itself does not move; only material points slide along it.
    """

    def __init__(self, height: float, velocity=(0.0, 0.0)):
        self.height = height
        self._velocity = velocity

    def velocity_at(self, t: float) -> np.ndarray:
        v = self._velocity(t) if callable(self._velocity) else self._velocity
        return np.asarray(v, dtype=float)

    def project_points(self, points: np.ndarray, normals: np.ndarray, t: float):
        """Ray projections along nodal normals onto the plane.

        Returns (gap, velocity, hit).  The body is assumed to sit above
        the plane, so only rays with a downward normal component hit it;
        sideways or upward facing surface patches miss and get the capped
        gap.  A negative gap then genuinely means penetration.
        """
        ny = normals[:, 1]
        hit = ny < -1e-12
        gap = np.where(hit, (self.height - points[:, 1]) / np.where(hit, ny, 1.0), np.inf)
        vel = np.broadcast_to(self.velocity_at(t), points.shape)
        return gap, vel, hit


@dataclass
class MeshedMaster:
    """Counterface given as a facet chain of another mesh."""

    coords: np.ndarray
    facets: np.ndarray
    velocities: np.ndarray = None  # type: ignore[assignment]
    node_ids: np.ndarray = None  # type: ignore[assignment]  # global ids, optional

    def __post_init__(self) -> None:
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        self.facets = np.asarray(self.facets, dtype=int).reshape(-1, 2)
        if self.velocities is None:
            self.velocities = np.zeros_like(self.coords)


def project_to_master(point, normal, master: MeshedMaster, search_radius: float = np.inf):
    """Project one slave point along its normal onto a meshed master.

    Returns ``(facet_index, t_param, gap)`` for the hit with the smallest
    absolute ray parameter within the search radius, or ``None``.
    """
    x = np.asarray(point, dtype=float)
    n = np.asarray(normal, dtype=float)
    best = None
    for k, (a, b) in enumerate(master.facets):
        ya = master.coords[a]
        d = master.coords[b] - ya
        det = d[0] * (-n[1]) - (-n[0]) * d[1]
        if abs(det) < 1e-14:
            continue
        rhs = x - ya
        tpar = (rhs[0] * (-n[1]) + n[0] * rhs[1]) / det
        s = (d[0] * rhs[1] - d[1] * rhs[0]) / det
        if -1e-9 <= tpar <= 1.0 + 1e-9 and abs(s) <= search_radius:
            if best is None or abs(s) < abs(best[2]):
                best = (k, min(max(tpar, 0.0), 1.0), s)
    return best


def _segment_breaks(xa, xb, na, nb, master: MeshedMaster) -> np.ndarray:
    """Facet parameters where the projection crosses a master node."""
    dx = xb - xa
    dn = nb - na
    breaks = []
    for ym in master.coords:
        r = ym - xa
        # cross(r - xi*dx, na + xi*dn) = 0, quadratic in xi
        c0 = r[0] * na[1] - r[1] * na[0]
        c1 = (r[0] * dn[1] - r[1] * dn[0]) - (dx[0] * na[1] - dx[1] * na[0])
        c2 = -(dx[0] * dn[1] - dx[1] * dn[0])
        if abs(c2) < 1e-14:
            if abs(c1) > 1e-14:
                roots = [-c0 / c1]
            else:
                roots = []
        else:
            disc = c1 * c1 - 4.0 * c2 * c0
            if disc < 0.0:
                roots = []
            else:
                sq = np.sqrt(disc)
                roots = [(-c1 - sq) / (2.0 * c2), (-c1 + sq) / (2.0 * c2)]
        breaks.extend(x for x in roots if 1e-10 < x < 1.0 - 1e-10)
    return np.array(sorted(set(np.round(breaks, 12))))


@dataclass
class MortarMatrices:
    """Slave pairing D (diagonal entries) and master coupling M."""

    d_diag: np.ndarray
    m: sp.csr_matrix | None
    w_phi: np.ndarray


@dataclass
class InterfaceState:
    """Nodal weighted interface quantities on the slave chain."""

    normals: np.ndarray
    tangents: np.ndarray
    d_diag: np.ndarray
    w_phi: np.ndarray
    gap: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    m: sp.csr_matrix | None = None

    @property
    def mortar(self) -> MortarMatrices:
        return MortarMatrices(d_diag=self.d_diag, m=self.m, w_phi=self.w_phi)


def interface_quadrature(
    coords: np.ndarray,
    facets: np.ndarray,
    v_nodal: np.ndarray,
    master,
    t: float,
    gap_cap: float = np.inf,
    search_radius: float = np.inf,
) -> InterfaceState:
    """One integration pass over the deformed slave chain.

    Computes the dual-weighted nodal gap, the tangentially projected
    weighted surface velocities of both sides, the mortar matrices and the
    averaged nodal normals.  Rays that miss the counterface or exceed the
    cap contribute the capped gap and the counterface rigid velocity.
    """
    coords = np.asarray(coords, dtype=float)
    v_nodal = np.asarray(v_nodal, dtype=float).reshape(-1, 2)
    n = len(coords)
    a = facets[:, 0]
    b = facets[:, 1]
    xa, xb = coords[a], coords[b]
    seg = xb - xa
    length = np.hypot(seg[:, 0], seg[:, 1])
    _, nodal_n = chain_normals(coords, facets)
    tangents = np.stack((-nodal_n[:, 1], nodal_n[:, 0]), axis=1)

    d_diag = np.zeros(n)
    w_phi = np.zeros(n)
    gap_num = np.zeros(n)
    v1_num = np.zeros((n, 2))
    v2_num = np.zeros((n, 2))

    use_rigid = isinstance(master, RigidPlane)
    m_rows: list[int] = []
    m_cols: list[int] = []
    m_vals: list[float] = []

    if use_rigid:
        # fully vectorized: (nf, nq) quadrature grid in one sweep
        wq = (_W3[None, :] * length[:, None]).ravel()
        na_q = np.tile(1.0 - _XI3, len(facets))
        nb_q = np.tile(_XI3, len(facets))
        fa = np.repeat(a, 3)
        fb = np.repeat(b, 3)
        pts = coords[fa] * na_q[:, None] + coords[fb] * nb_q[:, None]
        nq = nodal_n[fa] * na_q[:, None] + nodal_n[fb] * nb_q[:, None]
        nq /= np.hypot(nq[:, 0], nq[:, 1])[:, None]
        gap_q, vel_q, hit = master.project_points(pts, nq, t)
        gap_q = np.where(hit, _soft_cap(gap_q, gap_cap), gap_cap)

        v1_q = v_nodal[fa] * na_q[:, None] + v_nodal[fb] * nb_q[:, None]
        proj = lambda v: v - nq * np.einsum("qi,qi->q", v, nq)[:, None]
        v1_q = proj(v1_q)
        v2_q = proj(np.array(vel_q))

        # dual shapes phi = A N with straight-facet coefficients
        phi_a = 2.0 * na_q - nb_q
        phi_b = 2.0 * nb_q - na_q
        for nodes, shape, dual in ((fa, na_q, phi_a), (fb, nb_q, phi_b)):
            np.add.at(d_diag, nodes, wq * shape)
            np.add.at(w_phi, nodes, wq * dual)
            np.add.at(gap_num, nodes, wq * dual * gap_q)
            np.add.at(v1_num, nodes, (wq * dual)[:, None] * v1_q)
            np.add.at(v2_num, nodes, (wq * dual)[:, None] * v2_q)
    else:
        basis = DualBasis.for_chain(coords, facets)
        for k in range(len(facets)):
            ia, ib = a[k], b[k]
            na_vec, nb_vec = nodal_n[ia], nodal_n[ib]
            breaks = _segment_breaks(coords[ia], coords[ib], na_vec, nb_vec, master)
            edges = np.concatenate(([0.0], breaks, [1.0]))
            coeff = basis.coeffs[k]
            for s0, s1 in zip(edges[:-1], edges[1:]):
                if s1 - s0 < 1e-12:
                    continue
                for xi_l, w_l in zip(_XI3, _W3):
                    xi_q = s0 + (s1 - s0) * xi_l
                    w_q = w_l * (s1 - s0) * length[k]
                    sha = 1.0 - xi_q
                    shb = xi_q
                    pt = sha * coords[ia] + shb * coords[ib]
                    nv = sha * na_vec + shb * nb_vec
                    nv = nv / np.hypot(*nv)
                    phi = coeff @ np.array([sha, shb])
                    hitd = project_to_master(pt, nv, master, search_radius)
                    if hitd is None:
                        gap_q = gap_cap
                        v2_pt = np.zeros(2)
                        mshape = None
                    else:
                        fk, tpar, gap_q = hitd
                        gap_q = float(_soft_cap(gap_q, gap_cap))
                        ma, mb = master.facets[fk]
                        v2_pt = (1.0 - tpar) * master.velocities[ma] + tpar * master.velocities[mb]
                        mshape = ((ma, 1.0 - tpar), (mb, tpar))
                    v1_pt = sha * v_nodal[ia] + shb * v_nodal[ib]
                    v1_pt = v1_pt - nv * (v1_pt @ nv)
                    v2_pt = v2_pt - nv * (v2_pt @ nv)
                    for node, sh, ph in ((ia, sha, phi[0]), (ib, shb, phi[1])):
                        d_diag[node] += w_q * sh
                        w_phi[node] += w_q * ph
                        gap_num[node] += w_q * ph * gap_q
                        v1_num[node] += w_q * ph * v1_pt
                        v2_num[node] += w_q * ph * v2_pt
                        if mshape is not None:
                            for mn, msh in mshape:
                                m_rows.append(node)
                                m_cols.append(int(mn))
                                m_vals.append(w_q * ph * msh)

    if np.any(w_phi <= 0.0):
        raise RuntimeError("nonpositive dual weight, interface chain is degenerate")
    m_mat = None
    if not use_rigid:
        m_mat = sp.csr_matrix(
            (m_vals, (m_rows, m_cols)), shape=(n, len(master.coords))
        )
    return InterfaceState(
        normals=nodal_n,
        tangents=tangents,
        d_diag=d_diag,
        w_phi=w_phi,
        gap=gap_num / w_phi,
        v1=v1_num / w_phi[:, None],
        v2=v2_num / w_phi[:, None],
        m=m_mat,
    )


def assemble_mortar(coords, facets, master, t: float = 0.0, search_radius: float = np.inf) -> MortarMatrices:
    """Mortar matrices D and M on the current slave chain."""
    state = interface_quadrature(
        coords, facets, np.zeros_like(coords), master, t, search_radius=search_radius
    )
    return state.mortar


def weighted_gap(coords, facets, master, t: float = 0.0, gap_cap: float = np.inf, search_radius: float = np.inf):
    """Dual-weighted nodal gap along the slave chain (no film shift)."""
    state = interface_quadrature(
        coords, facets, np.zeros_like(coords), master, t, gap_cap=gap_cap, search_radius=search_radius
    )
    return state.gap


def weighted_rel_velocity(coords, facets, v_nodal, master, t: float = 0.0, gap_cap: float = np.inf):
    """Dual-weighted tangential relative velocity (v1 - v2)/2, nodal."""
    state = interface_quadrature(coords, facets, v_nodal, master, t, gap_cap=gap_cap)
    return 0.5 * (state.v1 - state.v2)


def smooth_nodal_traction_gradient(coords, facets, p) -> np.ndarray:
    """Dual-weighted nodal surface gradient of a nodal field.

    Per facet the gradient of a linear field is constant; nodes average
    the adjacent facet gradients with their dual integral weights, which
    for straight facets is a length-weighted mean.  Exact for globally
    linear fields.
    """
    coords = np.asarray(coords, dtype=float)
    p = np.asarray(p, dtype=float)
    a = facets[:, 0]
    b = facets[:, 1]
    seg = coords[b] - coords[a]
    length = np.hypot(seg[:, 0], seg[:, 1])
    tau = seg / length[:, None]
    grad = ((p[b] - p[a]) / length)[:, None] * tau
    w_num = np.zeros_like(coords)
    w_den = np.zeros(len(coords))
    half = 0.5 * length
    np.add.at(w_num, a, half[:, None] * grad)
    np.add.at(w_num, b, half[:, None] * grad)
    np.add.at(w_den, a, half)
    np.add.at(w_den, b, half)
    return w_num / w_den[:, None]
