"""Compressible Neo-Hookean material in plane strain.

Strain energy per unit reference volume

    psi(C) = mu/2 (tr C - 3) - mu ln J + lambda/2 (ln J)^2

with the plane-strain embedding C_33 = 1, so the 2x2 in-plane right
Cauchy-Green tensor carries everything and tr C means the 3D trace.
Stress and tangent are exact derivatives of psi with respect to the
Green-Lagrange strain; no small-strain approximations.

Units: mm, s, N, MPa.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NeoHookeanParams", "strain_energy", "pk2_stress", "material_tangent"]

_I2 = np.eye(2)


@dataclass(frozen=True)
class NeoHookeanParams:
    """Young's modulus (MPa), Poisson ratio and density (tonne/mm^3)."""

    youngs_modulus: float
    poisson_ratio: float
    density: float = 0.0

    def __post_init__(self) -> None:
        if self.youngs_modulus <= 0.0:
            raise ValueError("youngs_modulus must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must lie in (-1, 0.5)")

    @property
    def lame_lambda(self) -> float:
        e, nu = self.youngs_modulus, self.poisson_ratio
        return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @property
    def lame_mu(self) -> float:
        e, nu = self.youngs_modulus, self.poisson_ratio
        return e / (2.0 * (1.0 + nu))


def _invariants(deformation_gradient: np.ndarray):
    f = np.asarray(deformation_gradient, dtype=float)
    c = f.T @ f
    det_f = f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0]
    if det_f <= 0.0:
        raise ValueError("deformation gradient has nonpositive determinant")
    return c, det_f


def strain_energy(deformation_gradient: np.ndarray, params: NeoHookeanParams) -> float:
    """Energy density psi(F) per unit reference volume."""
    c, det_f = _invariants(deformation_gradient)
    ln_j = np.log(det_f)
    mu, lam = params.lame_mu, params.lame_lambda
    # tr C_3D = tr C_2D + 1 in plane strain.
    return 0.5 * mu * (np.trace(c) + 1.0 - 3.0) - mu * ln_j + 0.5 * lam * ln_j**2


def pk2_stress(deformation_gradient: np.ndarray, params: NeoHookeanParams) -> np.ndarray:
    """In-plane second Piola-Kirchhoff stress, 2x2.

    S = mu (I - C^-1) + lambda ln J C^-1, the exact derivative of the
    energy with respect to the Green-Lagrange strain.
    """
    c, det_f = _invariants(deformation_gradient)
    c_inv = np.linalg.inv(c)
    mu, lam = params.lame_mu, params.lame_lambda
    return mu * (_I2 - c_inv) + lam * np.log(det_f) * c_inv


def material_tangent(deformation_gradient: np.ndarray, params: NeoHookeanParams) -> np.ndarray:
    """Material tangent dS/dE in Voigt order (11, 22, 12), 3x3.

    C_ijkl = lambda Cinv_ij Cinv_kl
           + (mu - lambda ln J) (Cinv_ik Cinv_jl + Cinv_il Cinv_jk)

    The returned matrix maps Voigt strain increments (dE11, dE22, 2 dE12)
    to Voigt stress increments (dS11, dS22, dS12).
    """
    c, det_f = _invariants(deformation_gradient)
    c_inv = np.linalg.inv(c)
    mu, lam = params.lame_mu, params.lame_lambda
    coef = mu - lam * np.log(det_f)

    idx = ((0, 0), (1, 1), (0, 1))
    tangent = np.empty((3, 3))
    for a, (i, j) in enumerate(idx):
        for b, (k, l) in enumerate(idx):
            tangent[a, b] = lam * c_inv[i, j] * c_inv[k, l] + coef * (
                c_inv[i, k] * c_inv[j, l] + c_inv[i, l] * c_inv[j, k]
            )
    return tangent
