"""Averaged Reynolds equation on a deformed surface chain.

The thin fluid film between the slave surface and its counterface is
governed by the roughness-averaged Reynolds equation with pressure and
shear flow factors and a penalty cavitation term.  Everything here works
on the interface chain: nodal film thickness, nodal surface velocities and
nodal pressures, with linear interpolation along the deformed facets.

The discrete residual for pressure dof j reads

    r_j =   int (h^3 + 3 sigma^2 h) / (12 eta) (dp/ds) (dN_j/ds) ds
          + int (dh/dt) N_j ds
          - int ((v1 + v2)/2 . tau) h (dN_j/ds) ds
          - int (w . tau) (dN_j/ds) ds ,  w = sigma Phi_s(h) (v1 - v2)/2
          - int eps <-p> N_j ds

where the shear flux w and the cavitation ramp <-p> are evaluated at the
nodes and interpolated, which keeps every integrand polynomial so the
3-point Gauss rule used here integrates exactly.

Units: mm, s, N, MPa; pressures MPa, film mm, velocities mm/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "FluidParams",
    "LubricationField",
    "flow_factors",
    "cavitation_term",
    "cavitation_penalty_matrix",
    "reynolds_residual",
    "fluid_traction",
    "solve_pressure",
]

# 3-point Gauss on [0, 1]; exact through degree 5.
_GAUSS_XI = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS_W = 0.5 * np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


@dataclass(frozen=True)
class FluidParams:
    """Lubricant parameters.

    viscosity in MPa*s, density in tonne/mm^3 (carried for bookkeeping,
    the residual is for an incompressible iso-density film), cavitation
    penalty in mm/(MPa*s), rms roughness sigma in mm.
    """

    viscosity: float
    density: float = 0.0
    penalty: float = 1e8
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.viscosity <= 0.0:
            raise ValueError("viscosity must be positive")
        if self.penalty < 0.0:
            raise ValueError("penalty must be nonnegative")


@dataclass
class LubricationField:
    """Nodal state of the film along the interface chain.

    ``v1``/``v2`` are the tangentially projected surface velocities of the
    slave and the counterface, as 2-vectors.  ``dh_dt`` is the discrete
    squeeze rate, usually (h - h_prev) / dt.  Cached flow factor arrays are
    filled by `reynolds_residual` for diagnostics.
    """

    h: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    dh_dt: np.ndarray = None  # type: ignore[assignment]
    phi_p: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    phi_s: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    phi_f: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=float)
        self.v1 = np.asarray(self.v1, dtype=float).reshape(-1, 2)
        self.v2 = np.asarray(self.v2, dtype=float).reshape(-1, 2)
        if self.dh_dt is None:
            self.dh_dt = np.zeros_like(self.h)


def flow_factors(h, sigma):
    """Pressure, shear and friction flow factors for rms roughness sigma.

    Returns ``(phi_p, phi_s, phi_f)`` with

        phi_p = 1 + 3 x^2
        phi_s = -(3 x + 30 x^3) / (1 + 6 x^2)
        phi_f = 1 + x^2,            x = sigma / h.

    A smooth film (sigma = 0) gives (1, 0, 1).
    """
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0.0):
        raise ValueError("film thickness must be positive")
    x = sigma / h
    x2 = x * x
    phi_p = 1.0 + 3.0 * x2
    phi_s = -(3.0 * x + 30.0 * x * x2) / (1.0 + 6.0 * x2)
    phi_f = 1.0 + x2
    return phi_p, phi_s, phi_f


def cavitation_term(p, penalty):
    """Penalty source ``eps * <-p>`` and its semi-smooth derivative.

    Returns ``(value, d_value_dp)`` elementwise; the derivative is
    ``-eps`` where p < 0 and zero elsewhere (0 chosen at the kink).
    """
    p = np.asarray(p, dtype=float)
    neg = p < 0.0
    value = np.where(neg, -penalty * p, 0.0)
    deriv = np.where(neg, -penalty, 0.0)
    return value, deriv


def cavitation_penalty_matrix(coords, facets, active, penalty):
    """Cavitation block of the film Jacobian for a given active set.

    Column-gated consistent mass: column j carries ``eps L/3`` diagonal
    and ``eps L/6`` cross entries iff node j is in ``active``.  Exposed
    separately so a solver can re-solve its linear model under a trial
    sign pattern without reassembling the conduction part.
    """
    coords = np.asarray(coords, dtype=float)
    a = facets[:, 0]
    b = facets[:, 1]
    d = coords[b] - coords[a]
    length = np.hypot(d[:, 0], d[:, 1])
    ga = np.where(active[a], penalty, 0.0)
    gb = np.where(active[b], penalty, 0.0)
    rows = np.concatenate([a, a, b, b])
    cols = np.concatenate([a, b, a, b])
    vals = np.concatenate(
        [ga * length / 3.0, gb * length / 6.0, ga * length / 6.0, gb * length / 3.0]
    )
    n = len(coords)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def reynolds_residual(coords, facets, fld: LubricationField, p, fluid: FluidParams):
    """Residual of the averaged Reynolds equation and its pressure Jacobian.

    Parameters
    ----------
    coords : (n, 2) current chain coordinates.
    facets : (nf, 2) local chain connectivity.
    fld : LubricationField with nodal h, v1, v2, dh_dt.
    p : (n,) nodal pressures in MPa.
    fluid : FluidParams.

    Returns
    -------
    r : (n,) residual vector (film flux rate, mm^2/s per node).
    jac : (n, n) csr matrix, derivative of r w.r.t. p including the
        semi-smooth cavitation contribution.
    """
    coords = np.asarray(coords, dtype=float)
    p = np.asarray(p, dtype=float)
    n = len(coords)
    a = facets[:, 0]
    b = facets[:, 1]
    d = coords[b] - coords[a]
    length = np.hypot(d[:, 0], d[:, 1])
    if np.any(length <= 0.0):
        raise ValueError("degenerate interface facet")
    tau = d / length[:, None]

    h = fld.h
    if np.any(h <= 0.0):
        raise ValueError("nonpositive film thickness")
    fld.phi_p, fld.phi_s, fld.phi_f = flow_factors(h, fluid.sigma)

    v_mean = 0.5 * (fld.v1 + fld.v2)
    shear_flux = fluid.sigma * fld.phi_s[:, None] * 0.5 * (fld.v1 - fld.v2)
    cav, _ = cavitation_term(p, fluid.penalty)

    dp_ds = (p[b] - p[a]) / length

    # quad point interpolation, shape (nf, nq)
    xi = _GAUSS_XI[None, :]
    na = 1.0 - xi
    nb = xi
    h_q = h[a, None] * na + h[b, None] * nb
    dh_dt_q = fld.dh_dt[a, None] * na + fld.dh_dt[b, None] * nb
    cav_q = cav[a, None] * na + cav[b, None] * nb
    vmt = np.einsum("fi,fi->f", v_mean[a], tau)[:, None] * na + np.einsum(
        "fi,fi->f", v_mean[b], tau
    )[:, None] * nb
    wst = np.einsum("fi,fi->f", shear_flux[a], tau)[:, None] * na + np.einsum(
        "fi,fi->f", shear_flux[b], tau
    )[:, None] * nb

    cond_q = (h_q**3 + 3.0 * fluid.sigma**2 * h_q) / (12.0 * fluid.viscosity)
    w_l = _GAUSS_W[None, :] * length[:, None]

    # shape function values and along-curve derivatives at quad points
    poiseuille = np.sum(w_l * cond_q, axis=1) * dp_ds / length  # times dN/ds sign below
    flux = np.sum(w_l * (vmt * h_q + wst), axis=1) / length
    squeeze_a = np.sum(w_l * dh_dt_q * na, axis=1)
    squeeze_b = np.sum(w_l * dh_dt_q * nb, axis=1)
    cav_a = np.sum(w_l * cav_q * na, axis=1)
    cav_b = np.sum(w_l * cav_q * nb, axis=1)

    r = np.zeros(n)
    # dN_a/ds = -1/length, dN_b/ds = +1/length
    np.add.at(r, a, -poiseuille + flux + squeeze_a - cav_a)
    np.add.at(r, b, poiseuille - flux + squeeze_b - cav_b)

    # Jacobian: Poiseuille conduction plus cavitation mass
    cond_f = np.sum(w_l * cond_q, axis=1) / length**2
    rows = np.concatenate([a, a, b, b])
    cols = np.concatenate([a, b, a, b])
    vals = np.concatenate([cond_f, -cond_f, -cond_f, cond_f])
    jac = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    jac = jac + cavitation_penalty_matrix(coords, facets, p < 0.0, fluid.penalty)
    return r, jac


def fluid_traction(p, grad_p, fld: LubricationField, normals, fluid: FluidParams):
    """Nodal fluid tractions on the slave surface.

    Parameters
    ----------
    p : (n,) nodal pressure.
    grad_p : (n, 2) smoothed nodal surface pressure gradient.
    fld : LubricationField (flow factors are recomputed from fld.h).
    normals : (n, 2) nodal outward unit normals of the slave surface.

    Returns
    -------
    t_perp : (n, 2) pressure plus Couette shear part, ``-p n - eta/h
        (v1 - v2)/2 (phi_f + phi_s)``.
    t_par : (n, 2) Poiseuille shear part, ``-(h/2) phi_p grad_p``.

    The counterface carries ``(t_perp - t_par)`` at the paired points.
    """
    p = np.asarray(p, dtype=float)
    phi_p, phi_s, phi_f = flow_factors(fld.h, fluid.sigma)
    t_par = -0.5 * fld.h[:, None] * phi_p[:, None] * np.asarray(grad_p, dtype=float)
    v_rel = 0.5 * (fld.v1 - fld.v2)
    t_perp = -p[:, None] * np.asarray(normals, dtype=float)
    t_perp = t_perp - (fluid.viscosity / fld.h)[:, None] * v_rel * (phi_f + phi_s)[:, None]
    return t_perp, t_par


def solve_pressure(
    coords,
    facets,
    fld: LubricationField,
    fluid: FluidParams,
    dirichlet_ids,
    dirichlet_vals=0.0,
    p0=None,
    tol: float = 1e-12,
    max_iter: int = 30,
):
    """Newton solve of the Reynolds residual at frozen geometry.

    Linear except for the cavitation ramp, so this converges in one step
    on fully pressurized films and in a handful otherwise.  Returns the
    nodal pressure vector.
    """
    n = len(np.asarray(coords))
    p = np.zeros(n) if p0 is None else np.array(p0, dtype=float)
    dirichlet_ids = np.asarray(dirichlet_ids, dtype=int)
    p[dirichlet_ids] = dirichlet_vals
    free = np.setdiff1d(np.arange(n), dirichlet_ids)
    scale = None
    for _ in range(max_iter):
        r, jac = reynolds_residual(coords, facets, fld, p, fluid)
        if scale is None:
            scale = max(1.0, np.abs(r[free]).max())
        if np.abs(r[free]).max() <= tol * scale:
            return p
        jac_ff = jac[free][:, free].tocsc()
        dp = sp.linalg.spsolve(jac_ff, -r[free])
        p[free] += dp
    raise RuntimeError("pressure solve did not converge")
