"""Regularized normal contact law and frictional NCP functions.

The asperity layer of a rough surface pair is modelled as an exponential
spring: under contact pressure ``p_n`` the layer compresses by ``ghat(p_n)``,
saturating below the mean-plane distance ``g_max`` so a residual film
``tol * g_max`` always remains open.  Complementarity between the contact
pressure and the (weighted) gap, and Coulomb friction, are expressed as
semi-smooth nonlinear complementarity functions whose roots are exactly the
contact solutions.

Units: mm, s, N, MPa.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RegularizationParams",
    "FrictionParams",
    "NodalContactState",
    "INACTIVE",
    "STICK",
    "SLIP",
    "regularized_gap",
    "regularized_gap_slope",
    "suggest_kappa",
    "film_thickness",
    "ncp_normal",
    "ncp_tangential",
    "classify_status",
]

INACTIVE = 0
STICK = 1
SLIP = 2


@dataclass(frozen=True)
class RegularizationParams:
    """Parameters of the exponential asperity regularization.

    Parameters
    ----------
    g_max : float
        Maximum asperity interpenetration in mm, roughly three times the
        combined rms roughness of the surface pair.
    kappa : float
        Initial stiffness of the asperity layer in MPa/mm: the slope of
        contact pressure over compression at first touch.
    tol : float
        Saturation tolerance.  The compression never exceeds
        ``(1 - tol) * g_max``, keeping a residual film open.
    sigma : float
        Combined rms roughness in mm, used by the flow factors.  Zero means
        hydraulically smooth.
    """

    g_max: float
    kappa: float
    tol: float = 0.01
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.g_max <= 0.0:
            raise ValueError("g_max must be positive")
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tol must lie in (0, 1)")

    @property
    def g_eff(self) -> float:
        """Saturation value of the compression, ``(1 - tol) * g_max``."""
        return (1.0 - self.tol) * self.g_max

    @property
    def e_prime(self) -> float:
        """Stiffness-equivalent modulus ``kappa * g_max`` in MPa."""
        return self.kappa * self.g_max

    @property
    def r_q(self) -> float:
        """Combined rms roughness implied by ``g_max / 3``."""
        return self.g_max / 3.0


@dataclass(frozen=True)
class FrictionParams:
    """Coulomb friction coefficient and NCP complementarity scalings."""

    mu: float
    # c_n in MPa/mm, c_t in MPa*s/mm^2.  Zero means "use kappa" resp.
    # "use kappa * (1 s/mm)"; resolved by `resolve` against the
    # regularization parameters.
    c_n: float = 0.0
    c_t: float = 0.0

    def resolve(self, reg: RegularizationParams) -> "FrictionParams":
        c_n = self.c_n if self.c_n > 0.0 else reg.kappa
        c_t = self.c_t if self.c_t > 0.0 else reg.kappa
        return FrictionParams(mu=self.mu, c_n=c_n, c_t=c_t)


@dataclass
class NodalContactState:
    """Per-node contact unknowns along the slave surface.

    Arrays are indexed by slave surface node.  ``lam`` holds the multiplier
    in the nodal (normal, tangent) frame; it equals the negative contact
    traction acting on the slave surface, so ``lam[:, 0]`` is the asperity
    contact pressure (nonnegative).
    """

    status: np.ndarray
    lam: np.ndarray
    gap: np.ndarray
    v_t: np.ndarray
    slip_sign: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.slip_sign is None:
            self.slip_sign = np.ones(len(self.status))

    @classmethod
    def inactive(cls, n: int) -> "NodalContactState":
        return cls(
            status=np.full(n, INACTIVE, dtype=int),
            lam=np.zeros((n, 2)),
            gap=np.zeros(n),
            v_t=np.zeros(n),
        )


def regularized_gap(p_n, params: RegularizationParams):
    """Asperity compression ``ghat`` as a function of contact pressure.

    ``ghat(p) = g_eff * (1 - exp(-p / (kappa * g_eff)))`` with
    ``g_eff = (1 - tol) * g_max``.  Starts at zero with slope ``1 / kappa``
    and saturates monotonically at ``g_eff``, so the inverse relation has
    initial stiffness ``kappa`` and blows up as the asperities flatten.

    Parameters
    ----------
    p_n : float or ndarray
        Contact pressure in MPa, nonnegative in any admissible state.
    params : RegularizationParams

    Returns
    -------
    float or ndarray
        Compression in mm, same shape as ``p_n``.
    """
    g_eff = params.g_eff
    return g_eff * (-np.expm1(-np.asarray(p_n, dtype=float) / (params.kappa * g_eff)))


def regularized_gap_slope(p_n, params: RegularizationParams):
    """Derivative of :func:`regularized_gap` with respect to pressure.

    Equals ``1 / kappa`` at zero pressure and decays exponentially.
    """
    return np.exp(-np.asarray(p_n, dtype=float) / (params.kappa * params.g_eff)) / params.kappa


def suggest_kappa(youngs_modulus: float, g_max: float) -> float:
    """Default asperity stiffness, one tenth of E spread over the layer."""
    return youngs_modulus / (10.0 * g_max)


def film_thickness(gap, params: RegularizationParams):
    """Film thickness ``h = gap + g_max``.

    ``gap`` is the (weighted) geometric gap, negative in contact.  At full
    asperity saturation ``gap = -g_eff`` and ``h = tol * g_max`` exactly.
    """
    return np.asarray(gap, dtype=float) + params.g_max


def ncp_normal(lam_n, gap, friction: FrictionParams, reg: RegularizationParams):
    """Normal complementarity function.

    ``C_n = lam_n - max(0, lam_n - c_n * (gap + ghat(lam_n)))``.  Zero iff
    either the contact is open (``lam_n = 0``, ``gap >= 0``) or closed with
    the penetration matching the asperity compression
    (``gap = -ghat(lam_n)``, ``lam_n >= 0``).
    """
    lam_n = np.asarray(lam_n, dtype=float)
    arg = lam_n - friction.c_n * (np.asarray(gap, dtype=float) + regularized_gap(lam_n, reg))
    return lam_n - np.maximum(0.0, arg)


def ncp_tangential(lam_t, lam_n, v_t, friction: FrictionParams):
    """Tangential complementarity function for Coulomb friction, 2D.

    ``C_t = max(mu * lam_n, |lam_t + c_t * v_t|) * lam_t
    - mu * lam_n * (lam_t + c_t * v_t)``.

    The multiplier convention is the negative slave traction, so in the slip
    branch the root is ``lam_t = mu * lam_n * sign(v_t)``: the multiplier is
    aligned with the relative velocity and the traction opposes it.  In the
    stick branch the root has ``v_t = 0`` with ``|lam_t| <= mu * lam_n``.
    """
    lam_t = np.asarray(lam_t, dtype=float)
    trial = lam_t + friction.c_t * np.asarray(v_t, dtype=float)
    bound = friction.mu * np.asarray(lam_n, dtype=float)
    return np.maximum(bound, np.abs(trial)) * lam_t - bound * trial


def classify_status(lam, gap, v_t, friction: FrictionParams, reg: RegularizationParams):
    """Active-set decision for the next semi-smooth Newton iteration.

    Returns ``(status, slip_sign)`` arrays.  A node is active when the
    normal NCP argument ``lam_n - c_n * (gap + ghat(lam_n))`` is positive;
    an active node slips when the friction trial force leaves the Coulomb
    disc, with the frozen slip direction taken from the trial sign.
    """
    lam = np.asarray(lam, dtype=float)
    lam_n = lam[:, 0]
    lam_t = lam[:, 1]
    arg_n = lam_n - friction.c_n * (np.asarray(gap, dtype=float) + regularized_gap(lam_n, reg))
    trial = lam_t + friction.c_t * np.asarray(v_t, dtype=float)
    active = arg_n > 0.0
    slip = active & (np.abs(trial) > friction.mu * np.maximum(lam_n, 0.0))
    status = np.where(active, np.where(slip, SLIP, STICK), INACTIVE)
    slip_sign = np.where(trial >= 0.0, 1.0, -1.0)
    if friction.mu == 0.0:
        # Frictionless surfaces never stick; the tangential multiplier is
        # pinned to zero by the slip branch with bound mu*lam_n = 0.
        status = np.where(active, SLIP, INACTIVE)
    return status, slip_sign
