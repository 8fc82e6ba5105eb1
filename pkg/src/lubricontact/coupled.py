"""Monolithic coupling of solid, thin film and contact on the slave chain.

Unknowns per time step: the full solid displacement vector, one film
pressure per slave chain node and one contact multiplier pair
(normal, tangential) per chain node.  A single semi-smooth Newton loop
drives all three residual blocks to zero together:

    R_d : momentum balance including the interface nodal forces,
    R_p : averaged film equation with ambient pressure at the chain ends,
    C   : complementarity rows in their frozen branch forms.

Branch decisions (inactive / stick / slip) are refreshed from the current
iterate every iteration; convergence additionally requires the branch set
to be stationary.

Jacobian strategy: the solid tangent, the pressure conduction block and
every multiplier coupling are analytic.  Derivatives of the interface
bundle (interface force, film residual, complementarity rows) with
respect to the chain displacements are colored central finite
differences: the interface quantities interact over at most three
neighbor nodes along the chain, so perturbing every eighth node at once
recovers the exact banded block in a fixed number of bundle sweeps.
This finite-difference fallback is flagged in the log once per model.

The dual multiplier basis makes the slave coupling diagonal, so the
multiplier increments can be condensed out of the Newton system through
the slave-node momentum rows; ``solve_mode`` picks the condensed path
(default) or the full saddle solve, which are equivalent to roundoff.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contact import (
    INACTIVE,
    SLIP,
    STICK,
    FrictionParams,
    NodalContactState,
    RegularizationParams,
    classify_status,
    regularized_gap,
    regularized_gap_slope,
)
from .lubrication import (
    FluidParams,
    LubricationField,
    cavitation_penalty_matrix,
    fluid_traction,
    reynolds_residual,
)
from .mesh import InterfaceMesh
from .mortar import InterfaceState, RigidPlane, interface_quadrature, smooth_nodal_traction_gradient
from .solid import SolidModel, SolidState, TimeIntegrator

__all__ = [
    "ConvergenceError",
    "CoupledState",
    "CoupledModel",
    "advance",
]

logger = logging.getLogger(__name__)

# chain interaction stencil: a node influences interface rows at most
# three nodes away (averaged normals feed the neighbor facet quadrature)
_BAND = 3
_STRIDE = 8
_FD_EPS = 1e-7


class ConvergenceError(RuntimeError):
    """Newton loop failed; callers may retry with a smaller time step."""


class _FilmCollapse(Exception):
    pass


@dataclass
class CoupledState:
    """Converged state of one time step."""

    solid: SolidState
    p: np.ndarray
    contact: NodalContactState
    h: np.ndarray
    iface: InterfaceState = None  # type: ignore[assignment]
    f_iface: np.ndarray = None  # type: ignore[assignment]  # full-length nodal force
    iterations: int = 0

    @property
    def t(self) -> float:
        return self.solid.t

    def copy(self) -> "CoupledState":
        """Independent snapshot; shares only the immutable quadrature data."""
        solid = SolidState(
            d=self.solid.d.copy(),
            v=self.solid.v.copy(),
            a=self.solid.a.copy(),
            t=self.solid.t,
            force=None if self.solid.force is None else self.solid.force.copy(),
        )
        contact = NodalContactState(
            status=self.contact.status.copy(),
            lam=self.contact.lam.copy(),
            gap=self.contact.gap.copy(),
            v_t=self.contact.v_t.copy(),
            slip_sign=self.contact.slip_sign.copy(),
        )
        return CoupledState(
            solid=solid,
            p=self.p.copy(),
            contact=contact,
            h=self.h.copy(),
            iface=self.iface,
            f_iface=None if self.f_iface is None else self.f_iface.copy(),
            iterations=self.iterations,
        )


@dataclass
class _IfaceEval:
    """All interface-derived quantities at one iterate."""

    ist: InterfaceState
    h: np.ndarray
    v_t: np.ndarray
    r_p: np.ndarray
    k_pp: sp.csr_matrix
    f_chain: np.ndarray  # (nk, 2) nodal force on the chain
    f_full: np.ndarray  # scattered to solid dofs
    t_perp: np.ndarray
    t_par: np.ndarray


@dataclass
class CoupledModel:
    """Couples a solid body, a film chain and a rigid counterface.

    ``friction`` scalings are resolved against the regularization on
    construction.  ``f_ext`` is an external solid load, vector or
    callable of time.  ``gap_cap`` bounds the film where the surface does
    not face the counterface (flooded ambient region).
    """

    solid: SolidModel
    iface: InterfaceMesh
    fluid: FluidParams
    reg: RegularizationParams
    friction: FrictionParams
    master: RigidPlane
    integrator: TimeIntegrator
    f_ext: object = None
    gap_cap: float = 0.05
    search_radius: float = np.inf
    solve_mode: str = "condensed"
    p_ambient: float = 0.0
    _fd_logged: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        if self.solve_mode not in ("condensed", "saddle"):
            raise ValueError("solve_mode must be 'condensed' or 'saddle'")
        self.friction = self.friction.resolve(self.reg)
        self._chain_dofs = self.iface.dof_ids().ravel()
        nk = self.iface.n_nodes
        free_mask = np.zeros(self.solid.mesh.n_dofs, dtype=bool)
        free_mask[self.solid.dofmap.free] = True
        both_free = free_mask[self.iface.dof_ids()].all(axis=1)
        self._cond_nodes = np.flatnonzero(both_free)
        self._keep_nodes = np.flatnonzero(~both_free)
        self._inv_free = np.full(self.solid.mesh.n_dofs, -1, dtype=int)
        self._inv_free[self.solid.dofmap.free] = np.arange(len(self.solid.dofmap.free))
        self._nk = nk

    # ------------------------------------------------------------------
    # residual pieces

    def _resolve_ext(self, t: float) -> np.ndarray:
        if self.f_ext is None:
            return np.zeros(self.solid.mesh.n_dofs)
        if callable(self.f_ext):
            return np.asarray(self.f_ext(t), dtype=float)
        return np.asarray(self.f_ext, dtype=float)

    def _velocity_rule(self, s: SolidState, dt: float):
        """Affine map d_new -> v_new: returns (const vector, factor)."""
        ti = self.integrator
        vf = ti.vel_factor(dt)
        if ti.is_dynamic:
            vc = s.v + dt * (1.0 - ti.gamma) * s.a - vf * (
                s.d + dt * s.v + dt * dt * (0.5 - ti.beta) * s.a
            )
        else:
            vc = -s.d / dt
        return vc, vf

    def _interface_terms(self, d, v_chain, p, lam, t, dt, h_old) -> _IfaceEval:
        coords = self.iface.current_coords(d)
        ist = interface_quadrature(
            coords,
            self.iface.facets,
            v_chain,
            self.master,
            t,
            gap_cap=self.gap_cap,
            search_radius=self.search_radius,
        )
        h = ist.gap + self.reg.g_max
        if np.any(h <= 0.0):
            raise _FilmCollapse
        v_t = np.einsum("ki,ki->k", ist.v1 - ist.v2, ist.tangents)
        fld = LubricationField(h=h, v1=ist.v1, v2=ist.v2, dh_dt=(h - h_old) / dt)
        r_p, k_pp = reynolds_residual(coords, self.iface.facets, fld, p, self.fluid)
        ends = self.iface.end_nodes
        r_p[ends] = p[ends] - self.p_ambient
        k_pp = _set_identity_rows(k_pp, ends)
        f_chain, t_perp, t_par = self._chain_force(coords, ist, h, p, lam)
        f_full = np.zeros(self.solid.mesh.n_dofs)
        f_full[self._chain_dofs] = f_chain.ravel()
        return _IfaceEval(
            ist=ist,
            h=h,
            v_t=v_t,
            r_p=r_p,
            k_pp=k_pp,
            f_chain=f_chain,
            f_full=f_full,
            t_perp=t_perp,
            t_par=t_par,
        )

    def _chain_force(self, coords, ist: InterfaceState, h, p, lam):
        """Nodal force on the chain: fluid tractions plus contact multiplier."""
        grad_p = smooth_nodal_traction_gradient(coords, self.iface.facets, p)
        fld = LubricationField(h=h, v1=ist.v1, v2=ist.v2)
        t_perp, t_par = fluid_traction(p, grad_p, fld, ist.normals, self.fluid)
        t_contact = -(lam[:, :1] * ist.normals + lam[:, 1:] * ist.tangents)
        f_chain = ist.d_diag[:, None] * (t_perp + t_par + t_contact)
        return f_chain, t_perp, t_par

    def _settle_pressure(self, coords, ist: InterfaceState, h, p, dt, h_old, tol):
        """Newton on the film block alone, geometry and multipliers frozen.

        The cavitation penalty switches per node, and its front moves about
        one facet per linearization.  On fine chains that takes far more
        updates than the coupled loop should spend, while each frozen-film
        solve costs almost nothing.  Run only before the first coupled
        iteration: overwriting p between monolithic updates is a
        Gauss-Seidel move that diverges once the squeeze coupling is stiff.
        """
        fld = LubricationField(h=h, v1=ist.v1, v2=ist.v2, dh_dt=(h - h_old) / dt)
        ends = self.iface.end_nodes
        pw = p.copy()
        best = pw
        best_res = np.inf
        stall = 0
        try:
            for _ in range(400):
                r_p, k_pp = reynolds_residual(coords, self.iface.facets, fld, pw, self.fluid)
                r_p[ends] = pw[ends] - self.p_ambient
                res = np.abs(r_p).max()
                if res < best_res:
                    best, best_res, stall = pw, res, 0
                else:
                    stall += 1
                if res <= tol or stall > 25:
                    break
                k_pp = _set_identity_rows(k_pp, ends)
                pw = pw - spla.spsolve(k_pp.tocsc(), r_p)
        except FloatingPointError:
            pass
        return best

    def _ncp(self, lam, gap, v_t, status, slip_sign):
        """Branch equation rows driven to zero by the Newton solve, (nk, 2).

        On each branch's own validity region these share the exact root set
        with the max-based complementarity functions, but without the
        spurious product manifolds (z = 0 on slip, lam_n = 0 on stick) those
        develop once the branch is frozen for a linear solve.  Landing on a
        spurious manifold relabels the node and cycles the active set.
        """
        fric = self.friction
        c = np.empty_like(lam)
        act = status != INACTIVE
        ghat = regularized_gap(lam[:, 0], self.reg)
        c[:, 0] = np.where(act, fric.c_n * (gap + ghat), lam[:, 0])
        c[:, 1] = lam[:, 1]
        if fric.mu > 0.0:
            stick = status == STICK
            c[stick, 1] = fric.c_t * v_t[stick]
            slip = status == SLIP
            c[slip, 1] = lam[slip, 1] - slip_sign[slip] * fric.mu * lam[slip, 0]
        return c

    def _ncp_measure(self, lam, gap, v_t):
        """Branch-free max-form complementarity residuals, (nk, 2).

        The convergence measure: zero exactly at lubricated-contact KKT
        points regardless of how the solve labeled the nodes.
        """
        fric = self.friction
        c = np.empty_like(lam)
        ghat = regularized_gap(lam[:, 0], self.reg)
        c[:, 0] = lam[:, 0] - np.maximum(0.0, lam[:, 0] - fric.c_n * (gap + ghat))
        if fric.mu > 0.0:
            z = lam[:, 1] + fric.c_t * v_t
            bound = fric.mu * lam[:, 0]
            c[:, 1] = np.maximum(bound, np.abs(z)) * lam[:, 1] - bound * z
        else:
            c[:, 1] = lam[:, 1]
        return c

    def _ncp_lambda_jac(self, lam, v_t, status, slip_sign):
        """d C / d (lam_n, lam_t) per node, (nk, 2, 2)."""
        fric = self.friction
        nk = self._nk
        jac = np.zeros((nk, 2, 2))
        act = status != INACTIVE
        jac[:, 0, 0] = np.where(
            act, fric.c_n * regularized_gap_slope(lam[:, 0], self.reg), 1.0
        )
        jac[:, 1, 1] = 1.0
        if fric.mu > 0.0:
            stick = status == STICK
            jac[stick, 1, 1] = 0.0  # row is c_t * v_t, coupled through d only
            slip = status == SLIP
            jac[slip, 1, 0] = -slip_sign[slip] * fric.mu
        return jac

    def _residual_d(self, d, f_if_full, state: CoupledState, ext_new, dt):
        ti = self.integrator
        s = state.solid
        force_new = self.solid.internal_force(d) - ext_new - f_if_full
        if ti.is_dynamic:
            a_new = ti.accel(d, s.d, s.v, s.a, dt)
            a_mid = (1.0 - ti.alpha_m) * a_new + ti.alpha_m * s.a
            r = self.solid.mass() @ a_mid + (1.0 - ti.alpha_f) * force_new + ti.alpha_f * s.force
        else:
            r = force_new
        return r, force_new

    def _bundle(self, d, p, lam, status, slip_sign, t, dt, h_old, vc, vf):
        """Interface residual bundle [f_chain, r_p, C] for differentiation."""
        v_chain = (vc + vf * d)[self._chain_dofs].reshape(-1, 2)
        ev = self._interface_terms(d, v_chain, p, lam, t, dt, h_old)
        c = self._ncp(lam, ev.ist.gap, ev.v_t, status, slip_sign)
        return np.concatenate([ev.f_chain.ravel(), ev.r_p, c.ravel()])

    # ------------------------------------------------------------------
    # Jacobian blocks

    def _fd_interface_jacobian(self, d, p, lam, status, slip_sign, t, dt, h_old, vc, vf):
        """Banded d(bundle)/d(chain displacement) by colored central FD.

        Returns a dense (5 nk, 2 nk) array; entries outside the chain band
        are exactly zero by construction.
        """
        nk = self._nk
        if not self._fd_logged:
            logger.info(
                "interface Jacobian by colored central differences "
                "(stride %d nodes, band %d, step %.1e)",
                _STRIDE,
                _BAND,
                _FD_EPS,
            )
            self._fd_logged = True
        jac = np.zeros((5 * nk, 2 * nk))
        for color in range(_STRIDE):
            nodes = np.arange(color, nk, _STRIDE)
            if len(nodes) == 0:
                continue
            for comp in (0, 1):
                dofs = self._chain_dofs[2 * nodes + comp]
                dp_vec = d.copy()
                dm_vec = d.copy()
                dp_vec[dofs] += _FD_EPS
                dm_vec[dofs] -= _FD_EPS
                bp = self._bundle(dp_vec, p, lam, status, slip_sign, t, dt, h_old, vc, vf)
                bm = self._bundle(dm_vec, p, lam, status, slip_sign, t, dt, h_old, vc, vf)
                delta = (bp - bm) / (2.0 * _FD_EPS)
                for j in nodes:
                    lo = max(0, j - _BAND)
                    hi = min(nk - 1, j + _BAND)
                    rows = np.concatenate(
                        [
                            np.arange(2 * lo, 2 * hi + 2),
                            2 * nk + np.arange(lo, hi + 1),
                            3 * nk + np.arange(2 * lo, 2 * hi + 2),
                        ]
                    )
                    jac[rows, 2 * j + comp] = delta[rows]
        return jac

    def _fd_force_pressure_jacobian(self, coords, ist, h, p, lam):
        """d f_chain / d p, colored FD at frozen geometry (linear in p)."""
        nk = self._nk
        jac = np.zeros((2 * nk, nk))
        eps = max(1e-6, 1e-6 * np.abs(p).max())
        for color in range(4):
            nodes = np.arange(color, nk, 4)
            if len(nodes) == 0:
                continue
            pp = p.copy()
            pm = p.copy()
            pp[nodes] += eps
            pm[nodes] -= eps
            fp, _, _ = self._chain_force(coords, ist, h, pp, lam)
            fm, _, _ = self._chain_force(coords, ist, h, pm, lam)
            delta = (fp.ravel() - fm.ravel()) / (2.0 * eps)
            for j in nodes:
                lo = max(0, j - 1)
                hi = min(nk - 1, j + 1)
                rows = np.arange(2 * lo, 2 * hi + 2)
                jac[rows, j] = delta[rows]
        return jac

    # ------------------------------------------------------------------
    # assembly and linear solve

    def assemble_system(self, d, p, lam, status, slip_sign, state, t_new, dt, ev=None):
        """Newton matrix and right-hand side at the given iterate.

        Row and column ordering: free solid dofs, chain pressures, then
        multiplier pairs.  Returns (A, rhs, meta) with the pieces the
        condensed solve needs.
        """
        ti = self.integrator
        free = self.solid.dofmap.free
        nf = len(free)
        nk = self._nk
        vc, vf = self._velocity_rule(state.solid, dt)
        if ev is None:
            v_chain = (vc + vf * d)[self._chain_dofs].reshape(-1, 2)
            ev = self._interface_terms(d, v_chain, p, lam, t_new, dt, state.h)
        ext_new = self._resolve_ext(t_new)
        r_d, _ = self._residual_d(d, ev.f_full, state, ext_new, dt)
        c = self._ncp(lam, ev.ist.gap, ev.v_t, status, slip_sign)

        w_f = 1.0 - ti.alpha_f if ti.is_dynamic else 1.0

        k_solid = self.solid.stiffness(d)
        if ti.is_dynamic:
            k_solid = w_f * k_solid + (1.0 - ti.alpha_m) / (ti.beta * dt * dt) * self.solid.mass()

        bundle_jac = self._fd_interface_jacobian(
            d, p, lam, status, slip_sign, t_new, dt, state.h, vc, vf
        )
        j_fd = bundle_jac[: 2 * nk]  # d f_chain / d d_chain
        j_rpd = bundle_jac[2 * nk : 3 * nk]
        j_cd = bundle_jac[3 * nk :]

        cd = self._chain_dofs
        n_dofs = self.solid.mesh.n_dofs
        a_dd = (k_solid + _scatter(-w_f * j_fd, cd, cd, (n_dofs, n_dofs))).tocsr()

        coords = self.iface.current_coords(d)
        j_fp = self._fd_force_pressure_jacobian(coords, ev.ist, ev.h, p, lam)
        a_dp = _scatter(-w_f * j_fp, cd, np.arange(nk), (n_dofs, nk))

        # multiplier columns: force on node k is -D_kk (lam_n n + lam_t tau),
        # so the residual picks up +w_f D_kk [n | tau] per node
        n_vec = ev.ist.normals
        t_vec = ev.ist.tangents
        dk = ev.ist.d_diag
        rows = np.repeat(cd.reshape(nk, 2), 2, axis=1).ravel()
        cols = np.tile(np.arange(2 * nk).reshape(nk, 2), (1, 2)).ravel()
        bvals = (w_f * dk[:, None, None] * np.stack([n_vec, t_vec], axis=2)).ravel()
        a_dl = sp.coo_matrix((bvals, (rows, cols)), shape=(n_dofs, 2 * nk)).tocsr()

        a_pd = _scatter(j_rpd, np.arange(nk), cd, (nk, n_dofs))
        a_ld = _scatter(j_cd, np.arange(2 * nk), cd, (2 * nk, n_dofs))

        cjac = self._ncp_lambda_jac(lam, ev.v_t, status, slip_sign)
        a_ll = sp.block_diag([cjac[k] for k in range(nk)], format="csr")

        a = sp.bmat(
            [
                [a_dd[free][:, free], a_dp[free], a_dl[free]],
                [a_pd[:, free], ev.k_pp, None],
                [a_ld[:, free], None, a_ll],
            ],
            format="csr",
        )
        rhs = -np.concatenate([r_d[free], ev.r_p, c.ravel()])

        b_blocks = w_f * dk[self._cond_nodes, None, None] * np.stack(
            [n_vec[self._cond_nodes], t_vec[self._cond_nodes]], axis=2
        )
        meta = {
            "nf": nf,
            "nk": nk,
            "b_blocks": b_blocks,
            "cjac": cjac,
            "residuals": (r_d, ev.r_p, c),
            "ev": ev,
        }
        return a, rhs, meta

    def solve_linear(self, a, rhs, meta, mode=None):
        """Newton increment (dd_free, dp, dlam) from the assembled system.

        The condensed path eliminates the multiplier pairs of slave nodes
        with free dofs through their momentum rows: the dual basis makes
        that block 2 x 2 block diagonal, so the elimination is exact and
        cheap.  Multipliers on constrained slave nodes stay as unknowns.
        """
        mode = mode or self.solve_mode
        nf, nk = meta["nf"], meta["nk"]
        cond = self._cond_nodes
        if mode == "saddle" or len(cond) == 0:
            x = spla.spsolve(a.tocsc(), rhs)
            return x[:nf], x[nf : nf + nk], x[nf + nk :].reshape(nk, 2)

        keep = self._keep_nodes
        pair = np.array([0, 1])
        s_rows = self._inv_free[self._chain_dofs.reshape(nk, 2)[cond]].ravel()
        lamc = nf + nk + (2 * cond[:, None] + pair).ravel()
        lamk = nf + nk + (2 * keep[:, None] + pair).ravel()
        keep_cols = np.concatenate([np.arange(nf + nk), lamk])
        other = np.setdiff1d(np.arange(nf), s_rows)

        binv = np.linalg.inv(meta["b_blocks"])  # (ncond, 2, 2)
        w = sp.block_diag(list(np.einsum("kab,kbc->kac", meta["cjac"][cond], binv)), format="csr")

        a_csr = sp.csr_matrix(a)
        a_s = a_csr[s_rows][:, keep_cols]
        t_block = a_csr[lamc][:, keep_cols] - w @ a_s
        red = sp.vstack(
            [
                a_csr[other][:, keep_cols],
                a_csr[nf : nf + nk][:, keep_cols],
                a_csr[lamk][:, keep_cols],
                t_block,
            ],
            format="csr",
        )
        rhs_red = np.concatenate(
            [rhs[other], rhs[nf : nf + nk], rhs[lamk], rhs[lamc] - w @ rhs[s_rows]]
        )
        x = spla.spsolve(red.tocsc(), rhs_red)

        sol = np.zeros(nf + 3 * nk)
        sol[keep_cols] = x
        dlam = sol[nf + nk :].reshape(nk, 2).copy()
        dlam[cond] = np.einsum("kab,kb->ka", binv, (rhs[s_rows] - a_s @ x).reshape(-1, 2))
        return sol[:nf], sol[nf : nf + nk], dlam

    def _penalty_set_solve(self, a, rhs, meta, p, coords):
        """Newton increment with the cavitation branch iterated to consistency.

        The assembled matrix gates the penalty mass by the sign pattern of
        the current pressure.  A penalized row is so stiff that its predicted
        pressure stays pinned at zero, so with a frozen pattern the cavitated
        set can grow but almost never shrink within one solve, and the
        cavitation front crawls one node per outer iteration.  Re-solving
        under the trial sign pattern until it reproduces itself makes the
        increment an exact root of the piecewise-linear model; the front can
        then move any distance per linearization.  Costs nothing when the
        pattern is already stable.
        """
        nf, nk = meta["nf"], meta["nk"]
        dd_free, dp, dlam = self.solve_linear(a, rhs, meta)
        active = p < 0.0
        ends = self.iface.end_nodes
        row_keep = np.ones(nk)
        row_keep[ends] = 0.0  # pressure Dirichlet rows stay identity
        row_gate = sp.diags(row_keep)
        for _ in range(6):
            act_try = (p + dp) < 0.0
            act_try[ends] = active[ends]
            if np.array_equal(act_try, active):
                break
            delta = cavitation_penalty_matrix(
                coords, self.iface.facets, act_try, self.fluid.penalty
            ) - cavitation_penalty_matrix(coords, self.iface.facets, active, self.fluid.penalty)
            delta = (row_gate @ delta).tocoo()
            a = a + sp.csr_matrix(
                (delta.data, (delta.row + nf, delta.col + nf)), shape=a.shape
            )
            rhs = rhs.copy()
            rhs[nf : nf + nk] -= delta.tocsr() @ p
            active = act_try
            dd_free, dp, dlam = self.solve_linear(a, rhs, meta)
        return dd_free, dp, dlam

    # ------------------------------------------------------------------
    # stepping

    def initial_state(self) -> CoupledState:
        """Rest state at t = 0 with ambient pressure and open contact."""
        n = self.solid.mesh.n_dofs
        nk = self._nk
        solid = SolidState.rest(n)
        v_chain = np.zeros((nk, 2))
        ist = interface_quadrature(
            self.iface.coords0,
            self.iface.facets,
            v_chain,
            self.master,
            0.0,
            gap_cap=self.gap_cap,
            search_radius=self.search_radius,
        )
        h = ist.gap + self.reg.g_max
        if np.any(h <= 0.0):
            raise ValueError("initial configuration already penetrates the counterface")
        contact = NodalContactState.inactive(nk)
        contact.gap = ist.gap.copy()
        return CoupledState(
            solid=solid,
            p=np.full(nk, self.p_ambient),
            contact=contact,
            h=h,
            iface=ist,
            f_iface=np.zeros(n),
        )

    def step(self, state: CoupledState, t_new: float, dt: float, tol: float = 1e-8, max_iter: int = 50) -> CoupledState:
        """One coupled time step; raises ConvergenceError on failure."""
        ti = self.integrator
        dofmap = self.solid.dofmap
        d = dofmap.apply(state.solid.d, t_new)
        p = state.p.copy()
        lam = state.contact.lam.copy()
        vc, vf = self._velocity_rule(state.solid, dt)
        ext_new = self._resolve_ext(t_new)

        if ti.is_dynamic and state.solid.force is None:
            state.solid.force = (
                self.solid.internal_force(state.solid.d)
                - self._resolve_ext(state.solid.t)
                - (state.f_iface if state.f_iface is not None else 0.0)
            )

        prev_status = state.contact.status.copy()
        prev_sign = state.contact.slip_sign.copy()
        status = state.contact.status.copy()
        slip_sign = state.contact.slip_sign.copy()
        flips = np.zeros(self._nk, dtype=int)
        pinned = np.zeros(self._nk, dtype=bool)
        merit_hist: list[float] = []
        free = dofmap.free

        try:
            v_chain = (vc + vf * d)[self._chain_dofs].reshape(-1, 2)
            ev = self._interface_terms(d, v_chain, p, lam, t_new, dt, state.h)
            if np.abs(ev.r_p).max() > tol:
                p = self._settle_pressure(
                    self.iface.current_coords(d), ev.ist, ev.h, p, dt, state.h, tol
                )
                ev = self._interface_terms(d, v_chain, p, lam, t_new, dt, state.h)
        except (_FilmCollapse, FloatingPointError) as exc:
            raise ConvergenceError("initial iterate infeasible") from exc

        for it in range(max_iter):
            if it == 0:
                # Warm start on the incoming labels.  The predictor has the
                # new boundary data but the old free dofs, so its v_t lags any
                # master velocity change by the full amount and a fresh
                # classification would flip every stick node to reversed slip.
                # After one solve the iterate carries force information and
                # classification becomes meaningful.
                status = state.contact.status.copy()
                slip_sign = state.contact.slip_sign.copy()
            else:
                status, slip_sign = classify_status(lam, ev.ist.gap, ev.v_t, self.friction, self.reg)
                # Coulomb reversal passes through v_t = 0, i.e. through the
                # stick branch.  Flipping the imposed slip force sign in one
                # go excites the tangential compliance (v_t ~ d/dt swings far
                # beyond any physical sliding speed on soft bodies) and the
                # sign chatters with growing amplitude.  Route reversals
                # through stick; a genuine reversed slip pushes lam_t past
                # the bound there and the next classification takes it over
                # with the force-derived sign.
                if self.friction.mu > 0.0:
                    reversing = (status == SLIP) & (prev_status == SLIP) & (slip_sign != prev_sign)
                    if reversing.any():
                        status[reversing] = STICK
                        slip_sign[reversing] = prev_sign[reversing]
            if pinned.any():
                # a relabeling 2-cycle (seen at symmetry nodes, where any
                # imposed slip force reverses the tangential velocity it was
                # inferred from) never settles on its own: hold the cycling
                # node on the stick branch and let the branch-free measure
                # veto the pin if the node truly violates Coulomb
                forced = pinned & (status != INACTIVE)
                status[forced] = STICK if self.friction.mu > 0.0 else SLIP
                slip_sign[pinned] = prev_sign[pinned]
            changed = (status != prev_status) | (
                (status == SLIP) & (prev_status == SLIP) & (slip_sign != prev_sign)
            )
            flips[changed] += 1
            pinned |= flips >= 4
            c = self._ncp(lam, ev.ist.gap, ev.v_t, status, slip_sign)
            cm = self._ncp_measure(lam, ev.ist.gap, ev.v_t)
            r_d, force_new = self._residual_d(d, ev.f_full, state, ext_new, dt)
            res = max(
                np.abs(r_d[free]).max() if len(free) else 0.0,
                np.abs(ev.r_p).max(),
                np.abs(c).max(),
                np.abs(cm).max(),
            )
            logger.debug(
                "it %d: r_d %.3e r_p %.3e C %.3e M %.3e act %d",
                it,
                np.abs(r_d[free]).max() if len(free) else 0.0,
                np.abs(ev.r_p).max(),
                np.abs(c).max(),
                np.abs(cm).max(),
                int((status != INACTIVE).sum()),
            )
            stationary = np.array_equal(status, prev_status) and np.array_equal(
                slip_sign[status == SLIP], prev_sign[status == SLIP]
            )
            if res <= tol and stationary:
                break
            if res <= tol:
                # A node within tolerance of a branch boundary can relabel
                # forever (stick <-> slip 2-cycles) while every residual block
                # stays converged.  If the sets that produced this iterate
                # certify it too, the relabeling is immaterial: accept, keeping
                # the fresh labels.
                c_prev = self._ncp(lam, ev.ist.gap, ev.v_t, prev_status, prev_sign)
                if np.abs(c_prev).max() <= tol:
                    break
            prev_status, prev_sign = status.copy(), slip_sign.copy()

            try:
                a, rhs, meta = self.assemble_system(d, p, lam, status, slip_sign, state, t_new, dt, ev=ev)
            except (_FilmCollapse, FloatingPointError) as exc:
                # finite-difference probes around an iterate hugging the film
                # floor can cross it; the step is not salvageable from here
                raise ConvergenceError("film collapse during jacobian assembly") from exc
            dd_free, dp, dlam = self._penalty_set_solve(
                a, rhs, meta, p, self.iface.current_coords(d)
            )
            dd = np.zeros_like(d)
            dd[free] = dd_free

            # Backtracking on a projected merit.  Each trial first re-settles
            # the film block at frozen geometry: the cavitation switch moves
            # about one node per linearization, so without the inner solve
            # every front relocation spikes the film residual and no step
            # would ever look acceptable.  What the merit then measures is
            # the part the monolithic update is actually responsible for.
            # The acceptance is nonmonotone (reference is the recent worst)
            # because steps that cross a contact or cavitation branch must
            # be allowed to raise the frozen-label residual.
            ref = max([res] + merit_hist[-4:])
            alpha = 1.0
            best = None
            for _ in range(10):
                d_try = d + alpha * dd
                p_try = p + alpha * dp
                lam_try = lam + alpha * dlam
                try:
                    v_chain = (vc + vf * d_try)[self._chain_dofs].reshape(-1, 2)
                    ev_t = self._interface_terms(d_try, v_chain, p_try, lam_try, t_new, dt, state.h)
                    if np.abs(ev_t.r_p).max() > tol:
                        p_try = self._settle_pressure(
                            self.iface.current_coords(d_try), ev_t.ist, ev_t.h, p_try, dt, state.h, tol
                        )
                        ev_t = self._interface_terms(d_try, v_chain, p_try, lam_try, t_new, dt, state.h)
                    rd_t, _ = self._residual_d(d_try, ev_t.f_full, state, ext_new, dt)
                    c_t = self._ncp(lam_try, ev_t.ist.gap, ev_t.v_t, status, slip_sign)
                    cm_t = self._ncp_measure(lam_try, ev_t.ist.gap, ev_t.v_t)
                    merit = max(
                        np.abs(rd_t[free]).max() if len(free) else 0.0,
                        np.abs(ev_t.r_p).max(),
                        np.abs(c_t).max(),
                        np.abs(cm_t).max(),
                    )
                except (_FilmCollapse, FloatingPointError):
                    alpha *= 0.5
                    continue
                if best is None or merit < best[0]:
                    best = (merit, alpha, d_try, p_try, lam_try, ev_t)
                if merit <= (1.0 - 1e-4 * alpha) * ref:
                    best = (merit, alpha, d_try, p_try, lam_try, ev_t)
                    break
                alpha *= 0.5
            if best is None:
                raise ConvergenceError("no admissible step length, film or element collapse")
            merit, alpha, d, p, lam, ev = best
            merit_hist.append(merit)
            logger.debug(
                "update: |dd| %.3e |dp| %.3e alpha %.3f merit %.3e",
                np.abs(dd).max(), np.abs(dp).max(), alpha, merit,
            )
        else:
            raise ConvergenceError(f"no convergence in {max_iter} iterations, residual {res:.3e}")

        if ti.is_dynamic:
            v_new = ti.vel(d, state.solid.d, state.solid.v, state.solid.a, dt)
            a_new = ti.accel(d, state.solid.d, state.solid.v, state.solid.a, dt)
        else:
            v_new = (d - state.solid.d) / dt
            a_new = np.zeros_like(d)
        solid_new = SolidState(d=d, v=v_new, a=a_new, t=t_new, force=force_new)
        lam[status == INACTIVE] = 0.0  # identity rows converge to <= tol, store the exact root
        contact = NodalContactState(
            status=status,
            lam=lam,
            gap=ev.ist.gap.copy(),
            v_t=ev.v_t.copy(),
            slip_sign=slip_sign,
        )
        return CoupledState(
            solid=solid_new,
            p=p,
            contact=contact,
            h=ev.h.copy(),
            iface=ev.ist,
            f_iface=ev.f_full.copy(),
            iterations=it + 1,
        )

    def full_residual(self, d, p, lam, status, slip_sign, state: CoupledState, t_new, dt):
        """Concatenated residual [R_d restricted to free dofs, R_p, C].

        Branches are frozen to the given status arrays; used by Jacobian
        verification.
        """
        vc, vf = self._velocity_rule(state.solid, dt)
        v_chain = (vc + vf * d)[self._chain_dofs].reshape(-1, 2)
        ev = self._interface_terms(d, v_chain, p, lam, t_new, dt, state.h)
        r_d, _ = self._residual_d(d, ev.f_full, state, self._resolve_ext(t_new), dt)
        c = self._ncp(lam, ev.ist.gap, ev.v_t, status, slip_sign)
        return np.concatenate([r_d[self.solid.dofmap.free], ev.r_p, c.ravel()])

    def reaction(self, state: CoupledState) -> np.ndarray:
        """Support force on the body at the fixed dofs."""
        return self.solid.reaction(
            state.solid,
            f_ext=self._resolve_ext(state.t),
            extra_force=state.f_iface,
        )


def advance(model: CoupledModel, state: CoupledState, t_end: float, dt: float, callback=None, max_halvings: int = 5, tol: float = 1e-8, max_iter: int = 50) -> CoupledState:
    """March to t_end, halving the step on failed Newton solves."""
    while state.t < t_end - 1e-12:
        dt_try = min(dt, t_end - state.t)
        target = state.t + dt_try
        for attempt in range(max_halvings + 1):
            try:
                state = model.step(state, state.t + dt_try, dt_try, tol=tol, max_iter=max_iter)
                break
            except ConvergenceError:
                if attempt == max_halvings:
                    raise
                dt_try *= 0.5
                logger.warning("step to %.6g failed, retrying with dt = %.3g", target, dt_try)
        if callback is not None:
            callback(state)
    return state


def _scatter(block: np.ndarray, row_ids, col_ids, shape) -> sp.csr_matrix:
    """Dense block into a sparse matrix at the given rows and columns."""
    m = sp.coo_matrix(
        (
            block.ravel(),
            (np.repeat(row_ids, len(col_ids)), np.tile(col_ids, len(row_ids))),
        ),
        shape=shape,
    ).tocsr()
    m.eliminate_zeros()
    return m


def _set_identity_rows(mat: sp.csr_matrix, rows) -> sp.csr_matrix:
    """Replace the given rows with identity rows (Dirichlet pressure)."""
    mat = mat.tolil()
    for r in rows:
        mat.rows[r] = [int(r)]
        mat.data[r] = [1.0]
    return mat.tocsr()
