"""Plane-strain solid FEM on bilinear quads, total Lagrangian.

Assembly is vectorized over elements with 2x2 Gauss quadrature per
element.  Time integration is generalized-alpha parametrized by the
spectral radius at infinity, with a quasi-static mode that drops inertia.
Dirichlet constraints are eliminated from the solved system; the residual
restricted to the constrained dofs is the support reaction acting on the
body.

Units: mm, s, N, MPa, tonne.  Plane strain with unit thickness, so forces
are per mm of depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .material import NeoHookeanParams
from .mesh import Mesh

__all__ = [
    "DofMap",
    "TimeIntegrator",
    "SolidState",
    "SolidModel",
    "newton_dynamic_step",
]

_G = 1.0 / np.sqrt(3.0)
_GP = np.array([(-_G, -_G), (_G, -_G), (_G, _G), (-_G, _G)])
_CORNERS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])


def _shape_grads(xi: float, eta: float) -> np.ndarray:
    """d N_a / d(xi, eta) for the 4 bilinear shape functions, (4, 2)."""
    out = np.empty((4, 2))
    for a, (xa, ya) in enumerate(_CORNERS):
        out[a, 0] = 0.25 * xa * (1.0 + ya * eta)
        out[a, 1] = 0.25 * ya * (1.0 + xa * xi)
    return out


def _shape_vals(xi: float, eta: float) -> np.ndarray:
    return np.array([0.25 * (1.0 + xa * xi) * (1.0 + ya * eta) for xa, ya in _CORNERS])


class DofMap:
    """Bookkeeping of fixed displacement dofs and their prescribed motion.

    Dofs are numbered (2 * node, 2 * node + 1).  Prescribed values may be
    constants or callables of time returning a scalar or per-dof array.
    """

    def __init__(self, n_dofs: int):
        self.n_dofs = n_dofs
        self._entries: list[tuple[np.ndarray, object]] = []
        self._fixed_mask = np.zeros(n_dofs, dtype=bool)

    def fix(self, dofs, value=0.0) -> None:
        dofs = np.atleast_1d(np.asarray(dofs, dtype=int))
        if np.any(self._fixed_mask[dofs]):
            raise ValueError("dof fixed twice")
        self._fixed_mask[dofs] = True
        self._entries.append((dofs, value))

    def fix_nodes(self, node_ids, component, value=0.0) -> None:
        node_ids = np.atleast_1d(np.asarray(node_ids, dtype=int))
        self.fix(2 * node_ids + component, value)

    @property
    def fixed(self) -> np.ndarray:
        return np.flatnonzero(self._fixed_mask)

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self._fixed_mask)

    def prescribed(self, t: float) -> np.ndarray:
        """Full-length vector, prescribed values on fixed dofs, 0 elsewhere."""
        out = np.zeros(self.n_dofs)
        for dofs, value in self._entries:
            out[dofs] = value(t) if callable(value) else value
        return out

    def apply(self, d: np.ndarray, t: float) -> np.ndarray:
        out = np.array(d, dtype=float)
        out[self.fixed] = self.prescribed(t)[self.fixed]
        return out


@dataclass(frozen=True)
class TimeIntegrator:
    """Generalized-alpha parameters, or quasi-static when scheme says so.

    With spectral radius rho_inf in [0, 1]:

        alpha_m = (2 rho - 1) / (rho + 1)
        alpha_f = rho / (rho + 1)
        gamma = 1/2 - alpha_m + alpha_f
        beta = 1/4 (1 - alpha_m + alpha_f)^2

    rho_inf = 1 reproduces the trapezoidal rule, smaller values damp the
    high modes.
    """

    alpha_m: float
    alpha_f: float
    beta: float
    gamma: float
    scheme: str = "generalized_alpha"

    @classmethod
    def from_rho_inf(cls, rho_inf: float = 0.9) -> "TimeIntegrator":
        if not 0.0 <= rho_inf <= 1.0:
            raise ValueError("rho_inf must lie in [0, 1]")
        am = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0)
        af = rho_inf / (rho_inf + 1.0)
        return cls(
            alpha_m=am,
            alpha_f=af,
            gamma=0.5 - am + af,
            beta=0.25 * (1.0 - am + af) ** 2,
        )

    @classmethod
    def quasi_static(cls) -> "TimeIntegrator":
        return cls(alpha_m=0.0, alpha_f=0.0, beta=0.25, gamma=0.5, scheme="quasi_static")

    @property
    def is_dynamic(self) -> bool:
        return self.scheme == "generalized_alpha"

    def accel(self, d_new, d, v, a, dt):
        return (d_new - d - dt * v - dt * dt * (0.5 - self.beta) * a) / (self.beta * dt * dt)

    def vel(self, d_new, d, v, a, dt):
        return v + dt * ((1.0 - self.gamma) * a + self.gamma * self.accel(d_new, d, v, a, dt))

    def vel_factor(self, dt: float) -> float:
        """d v_new / d d_new, the factor tying velocity to displacement."""
        if self.is_dynamic:
            return self.gamma / (self.beta * dt)
        return 1.0 / dt


@dataclass
class SolidState:
    d: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0
    force: np.ndarray = None  # type: ignore[assignment]  # f_int - f_ext at t

    @classmethod
    def rest(cls, n_dofs: int) -> "SolidState":
        return cls(d=np.zeros(n_dofs), v=np.zeros(n_dofs), a=np.zeros(n_dofs))


class SolidModel:
    """Neo-Hookean body on a quad mesh with eliminated Dirichlet dofs."""

    def __init__(self, mesh: Mesh, material: NeoHookeanParams, dofmap: DofMap | None = None):
        self.mesh = mesh
        self.material = material
        self.dofmap = dofmap if dofmap is not None else DofMap(mesh.n_dofs)
        self._precompute()

    def _precompute(self) -> None:
        nodes = self.mesh.nodes
        conn = self.mesh.elems
        ne = len(conn)
        coords = nodes[conn]  # (ne, 4, 2)
        self._dndx = np.empty((ne, 4, 4, 2))  # elem, gp, node, comp
        self._wdet = np.empty((ne, 4))
        self._nvals = np.empty((4, 4))  # gp, node
        for g, (xi, eta) in enumerate(_GP):
            dn = _shape_grads(xi, eta)  # (4, 2) in parent coords
            self._nvals[g] = _shape_vals(xi, eta)
            jac = np.einsum("eak,al->ekl", coords, dn)  # dX/dxi
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            if np.any(det <= 0.0):
                raise ValueError("inverted element in reference mesh")
            inv = np.empty_like(jac)
            inv[:, 0, 0] = jac[:, 1, 1]
            inv[:, 1, 1] = jac[:, 0, 0]
            inv[:, 0, 1] = -jac[:, 0, 1]
            inv[:, 1, 0] = -jac[:, 1, 0]
            inv /= det[:, None, None]
            self._dndx[:, g] = np.einsum("al,elk->eak", dn, inv)  # dN/dX
            self._wdet[:, g] = det  # unit gauss weights
        # scatter index pattern for 8x8 element blocks
        edofs = np.empty((ne, 8), dtype=int)
        edofs[:, 0::2] = 2 * conn
        edofs[:, 1::2] = 2 * conn + 1
        self._edofs = edofs
        self._rows = np.repeat(edofs, 8, axis=1).ravel()
        self._cols = np.tile(edofs, (1, 8)).ravel()
        self._mass = None

    def _kinematics(self, d: np.ndarray):
        u = d.reshape(-1, 2)[self.mesh.elems]  # (ne, 4, 2)
        f = np.einsum("eai,egak->egik", u, self._dndx)
        f[:, :, 0, 0] += 1.0
        f[:, :, 1, 1] += 1.0
        det = f[:, :, 0, 0] * f[:, :, 1, 1] - f[:, :, 0, 1] * f[:, :, 1, 0]
        if np.any(det <= 0.0):
            raise FloatingPointError("element inverted during deformation")
        return f, det

    def _stress(self, f, det):
        mu, lam = self.material.lame_mu, self.material.lame_lambda
        c = np.einsum("egki,egkj->egij", f, f)
        cinv = np.empty_like(c)
        cdet = c[:, :, 0, 0] * c[:, :, 1, 1] - c[:, :, 0, 1] * c[:, :, 1, 0]
        cinv[:, :, 0, 0] = c[:, :, 1, 1]
        cinv[:, :, 1, 1] = c[:, :, 0, 0]
        cinv[:, :, 0, 1] = -c[:, :, 0, 1]
        cinv[:, :, 1, 0] = -c[:, :, 1, 0]
        cinv /= cdet[:, :, None, None]
        lnj = np.log(det)
        s = mu * (np.eye(2)[None, None] - cinv) + lam * lnj[:, :, None, None] * cinv
        return s, cinv, lnj

    def internal_force(self, d: np.ndarray) -> np.ndarray:
        """Assembled internal force vector for displacement d."""
        f, det = self._kinematics(d)
        s, _, _ = self._stress(f, det)
        # f[a,i] = w detJ0 S_kl F_ik dN_a/dX_l
        fe = np.einsum("eg,egkl,egik,egal->eai", self._wdet, s, f, self._dndx)
        out = np.zeros(self.mesh.n_dofs)
        np.add.at(out, self._edofs, fe.reshape(len(fe), 8))
        return out

    def stiffness(self, d: np.ndarray) -> sp.csr_matrix:
        """Consistent tangent d f_int / d d as a sparse matrix."""
        f, det = self._kinematics(d)
        s, cinv, lnj = self._stress(f, det)
        mu, lam = self.material.lame_mu, self.material.lame_lambda
        coef = mu - lam * lnj  # (ne, gp)

        finv = np.empty_like(f)
        finv[:, :, 0, 0] = f[:, :, 1, 1]
        finv[:, :, 1, 1] = f[:, :, 0, 0]
        finv[:, :, 0, 1] = -f[:, :, 0, 1]
        finv[:, :, 1, 0] = -f[:, :, 1, 0]
        finv /= det[:, :, None, None]

        q = np.einsum("egli,egal->egai", finv, self._dndx)  # F^-T dN
        gcg = np.einsum("egak,egkl,egbl->egab", self._dndx, cinv, self._dndx)
        gsg = np.einsum("egak,eglk,egbl->egab", self._dndx, s, self._dndx)

        w = self._wdet
        k1 = lam * np.einsum("eg,egai,egbj->eaibj", w, q, q)
        k2 = np.einsum("eg,eg,egbi,egaj->eaibj", w, coef, q, q)
        k3 = np.einsum("eg,eg,egab->eab", w, coef, gcg)
        kgeo = np.einsum("eg,egab->eab", w, gsg)

        ke = k1 + k2
        ke[:, :, 0, :, 0] += k3 + kgeo
        ke[:, :, 1, :, 1] += k3 + kgeo
        ne = len(ke)
        vals = ke.reshape(ne, 8, 8).ravel()
        return sp.csr_matrix((vals, (self._rows, self._cols)), shape=(self.mesh.n_dofs,) * 2)

    def mass(self) -> sp.csr_matrix:
        """Consistent mass matrix (cached)."""
        if self._mass is None:
            rho = self.material.density
            nn = np.einsum("ga,gb,eg->eab", self._nvals, self._nvals, self._wdet) * rho
            ne = len(nn)
            me = np.zeros((ne, 4, 2, 4, 2))
            me[:, :, 0, :, 0] = nn
            me[:, :, 1, :, 1] = nn
            self._mass = sp.csr_matrix(
                (me.reshape(ne, 8, 8).ravel(), (self._rows, self._cols)),
                shape=(self.mesh.n_dofs,) * 2,
            )
        return self._mass

    def body_force(self, accel) -> np.ndarray:
        """Equivalent nodal force of a uniform acceleration field."""
        tiled = np.tile(np.asarray(accel, dtype=float), self.mesh.n_nodes)
        return self.mass() @ tiled

    def step(
        self,
        state: SolidState,
        t_new: float,
        dt: float,
        integrator: TimeIntegrator,
        f_ext=None,
        tol: float = 1e-8,
        max_iter: int = 50,
    ) -> SolidState:
        """Advance one time step with Newton iterations.

        f_ext may be None, a vector, or a callable of time.
        """
        return newton_dynamic_step(
            mass=self.mass() if integrator.is_dynamic else None,
            f_int=self.internal_force,
            stiffness=self.stiffness,
            f_ext=f_ext,
            dofmap=self.dofmap,
            state=state,
            t_new=t_new,
            dt=dt,
            ti=integrator,
            tol=tol,
            max_iter=max_iter,
        )

    def reaction(self, state: SolidState, f_ext=None, extra_force=None) -> np.ndarray:
        """Support force on the body at the fixed dofs, full-length vector.

        extra_force is subtracted like an external load (interface forces).
        """
        r = self.internal_force(state.d)
        if f_ext is not None:
            r = r - (f_ext(state.t) if callable(f_ext) else np.asarray(f_ext))
        if extra_force is not None:
            r = r - extra_force
        if self.material.density > 0.0:
            r = r + self.mass() @ state.a
        out = np.zeros_like(r)
        out[self.dofmap.fixed] = r[self.dofmap.fixed]
        return out


def _resolve_ext(f_ext, t: float, n: int) -> np.ndarray:
    if f_ext is None:
        return np.zeros(n)
    if callable(f_ext):
        return np.asarray(f_ext(t), dtype=float)
    return np.asarray(f_ext, dtype=float)


def newton_dynamic_step(
    mass,
    f_int,
    stiffness,
    f_ext,
    dofmap: DofMap,
    state: SolidState,
    t_new: float,
    dt: float,
    ti: TimeIntegrator,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> SolidState:
    """One generalized-alpha (or quasi-static) step of M a + f_int = f_ext.

    Works on anything shaped like a solid: callables f_int(d), stiffness(d)
    and a sparse or dense mass.  The dynamic residual blends old and new
    force vectors with the alpha weights; the old vector is carried in
    state.force.
    """
    n = len(state.d)
    free = dofmap.free
    d_new = dofmap.apply(state.d, t_new)

    if ti.is_dynamic and state.force is None:
        state.force = f_int(state.d) - _resolve_ext(f_ext, state.t, n)

    ext_new = _resolve_ext(f_ext, t_new, n)
    for it in range(max_iter):
        if ti.is_dynamic:
            a_new = ti.accel(d_new, state.d, state.v, state.a, dt)
            a_mid = (1.0 - ti.alpha_m) * a_new + ti.alpha_m * state.a
            force_new = f_int(d_new) - ext_new
            r = mass @ a_mid + (1.0 - ti.alpha_f) * force_new + ti.alpha_f * state.force
        else:
            force_new = f_int(d_new) - ext_new
            r = force_new
        res = np.abs(r[free]).max() if len(free) else 0.0
        if res <= tol:
            break
        k = stiffness(d_new)
        if ti.is_dynamic:
            k = (1.0 - ti.alpha_f) * k + (1.0 - ti.alpha_m) / (ti.beta * dt * dt) * mass
        k_ff = sp.csc_matrix(k)[free][:, free] if sp.issparse(k) else np.asarray(k)[np.ix_(free, free)]
        if sp.issparse(k):
            dd = spla.spsolve(k_ff, -r[free])
        else:
            dd = np.linalg.solve(k_ff, -r[free])
        d_new[free] += dd
    else:
        raise RuntimeError("solid Newton did not converge")

    if ti.is_dynamic:
        v_new = ti.vel(d_new, state.d, state.v, state.a, dt)
        a_new = ti.accel(d_new, state.d, state.v, state.a, dt)
    else:
        v_new = (d_new - state.d) / dt
        a_new = np.zeros(n)
    return SolidState(d=d_new, v=v_new, a=a_new, t=t_new, force=force_new)
