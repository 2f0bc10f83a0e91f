"""Pointwise SICA kinetics: parameters, reaction terms and their derivatives.

Everything here is grid-agnostic. State arguments are indexed by compartment
along the first axis, so the same functions accept a single point
``(S, I, C, A)`` or a stack of fields of shape ``(4, nx, ny)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

JACOBIAN_MODES = ("full_jacobian", "reduced")

XI_TOLERANCE = 1e-12

DEFAULT_MU = 1.0 / 74.02


class StatePoint(NamedTuple):
    """Densities of the four compartments at one point (people/km^2)."""

    S: float
    I: float
    C: float
    A: float

    @property
    def z1(self) -> float:
        return self.S

    @property
    def z2(self) -> float:
        return self.I

    @property
    def z3(self) -> float:
        return self.C

    @property
    def z4(self) -> float:
        return self.A


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological rates and diffusion coefficients.

    Defaults are the reference SICA rates (time in days, length in km). ``Lambda`` defaults to
    ``2.19 * mu`` and the composite rates ``xi1, xi2, xi3`` are derived from
    the treatment rates unless given, in which case they are checked against
    ``gamma + mu``, ``omega + mu`` and ``rho + phi + mu``.

    ``d`` (AIDS induced death rate) is accepted for completeness only; no
    term of the model uses it.
    """

    mu: float = DEFAULT_MU
    Lambda: float | None = None
    beta: float = 0.755
    eta_C: float = 1.5
    eta_A: float = 0.2
    phi: float = 1.0
    rho: float = 0.1
    gamma: float = 0.33
    omega: float = 0.09
    d_S: float = 0.9
    d_I: float = 0.1
    d_C: float = 0.1
    d_A: float = 0.1
    xi1: float | None = None
    xi2: float | None = None
    xi3: float | None = None
    d: float = 0.0

    def __post_init__(self):
        if self.Lambda is None:
            object.__setattr__(self, "Lambda", 2.19 * self.mu)
        expected = {
            "xi1": self.gamma + self.mu,
            "xi2": self.omega + self.mu,
            "xi3": self.rho + self.phi + self.mu,
        }
        for name, value in expected.items():
            given = getattr(self, name)
            if given is None:
                object.__setattr__(self, name, value)
            elif abs(given - value) > XI_TOLERANCE:
                raise ValueError(
                    f"{name}={given!r} inconsistent with derived value {value!r}"
                )
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{f.name} must be finite and >= 0, got {value!r}")
        if self.d != 0:
            warnings.warn(
                "parameter d (AIDS induced death rate) is not used by the model "
                "and will be ignored",
                stacklevel=3,
            )

    @property
    def diffusion(self) -> np.ndarray:
        """Diffusion coefficients ordered as (S, I, C, A)."""
        return np.array([self.d_S, self.d_I, self.d_C, self.d_A])

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ObjectiveConfig:
    """Weights of the treatment objective and the control box.

    ``a`` weighs the infected density, ``b`` the quadratic control cost,
    ``u_max`` caps the control and ``T`` is the horizon in days.
    """

    a: float = 1.0
    b: float = 1.0
    u_max: float = 1.0
    T: float = 25.0

    def __post_init__(self):
        if not self.a >= 0:
            raise ValueError(f"a must be >= 0, got {self.a!r}")
        if not self.b > 0:
            raise ValueError(f"b must be > 0, got {self.b!r}")
        if not 0 < self.u_max <= 1:
            raise ValueError(f"u_max must lie in (0, 1], got {self.u_max!r}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T!r}")


def _incidence_argument(I, C, A, p: ModelParams):
    return I + p.eta_C * C + p.eta_A * A


def reaction_terms(z, u, p: ModelParams) -> np.ndarray:
    """Reaction vector field g(z, u).

    Parameters
    ----------
    z : array_like, shape (4, ...)
        Compartment densities (S, I, C, A); trailing axes are broadcast.
    u : float or array_like
        Treatment control, broadcastable against ``z[0]``.
    p : ModelParams

    Returns
    -------
    np.ndarray, shape (4, ...)
        (g1, g2, g3, g4) in people km^-2 day^-1.
    """
    S, I, C, A = z
    infection = p.beta * _incidence_argument(I, C, A, p) * S
    treated = u * I
    return np.array(
        [
            -infection - p.mu * S + p.Lambda + treated,
            infection - p.xi3 * I + p.gamma * A + p.omega * C - treated,
            p.phi * I - p.xi2 * C,
            p.rho * I - p.xi1 * A,
        ]
    )


def sensitivity_matrix_F(z, u, p: ModelParams, mode: str = "full_jacobian") -> np.ndarray:
    """State sensitivity matrix of the reaction terms.

    ``mode="full_jacobian"`` gives the exact Jacobian dg/dz, including the
    ``-beta*S`` incidence couplings and the ``+-u`` treatment entries.
    ``mode="reduced"`` gives the reduced linearisation, which keeps only the
    incidence factor on the S column and drops those couplings.

    Returns an array of shape (4, 4, ...) with row index first.
    """
    if mode not in JACOBIAN_MODES:
        raise ValueError(f"mode must be one of {JACOBIAN_MODES}, got {mode!r}")
    S, I, C, A = (np.asarray(c, dtype=float) for c in z)
    shape = np.broadcast_shapes(S.shape, np.shape(u))
    zero = np.zeros(shape)
    one = np.ones(shape)
    lam = p.beta * _incidence_argument(I, C, A, p)

    if mode == "reduced":
        rows = [
            [-lam - p.mu, zero, zero, zero],
            [lam, -p.xi3 * one, p.omega * one, p.gamma * one],
        ]
    else:
        bS = p.beta * S
        rows = [
            [-lam - p.mu, -bS + u, -p.eta_C * bS, -p.eta_A * bS],
            [lam, bS - p.xi3 - u, p.eta_C * bS + p.omega, p.eta_A * bS + p.gamma],
        ]
    rows += [
        [zero, p.phi * one, -p.xi2 * one, zero],
        [zero, p.rho * one, zero, -p.xi1 * one],
    ]
    return np.array([[np.broadcast_to(e, shape) for e in row] for row in rows])


def apply_F_transpose(z, u, q, p: ModelParams, mode: str = "full_jacobian") -> np.ndarray:
    """``F(z, u)^T q`` evaluated directly, without forming the matrix.

    Equivalent to ``einsum("ji...,j...->i...", sensitivity_matrix_F(z, u, p, mode), q)``.
    """
    if mode not in JACOBIAN_MODES:
        raise ValueError(f"mode must be one of {JACOBIAN_MODES}, got {mode!r}")
    S, I, C, A = z
    q1, q2, q3, q4 = q
    lam = p.beta * _incidence_argument(I, C, A, p)
    dq = q2 - q1
    first = lam * dq - p.mu * q1
    if mode == "reduced":
        return np.array([
            first,
            -p.xi3 * q2 + p.phi * q3 + p.rho * q4,
            p.omega * q2 - p.xi2 * q3,
            p.gamma * q2 - p.xi1 * q4,
        ])
    bS_dq = p.beta * S * dq
    return np.array([
        first,
        bS_dq - u * dq - p.xi3 * q2 + p.phi * q3 + p.rho * q4,
        p.eta_C * bS_dq + p.omega * q2 - p.xi2 * q3,
        p.eta_A * bS_dq + p.gamma * q2 - p.xi1 * q4,
    ])


def control_coupling_R(z) -> np.ndarray:
    """Control coupling ``(-I, I, 0, 0)``, signed as in the optimality condition.

    This is the negative of dg/du; see :func:`control_derivative`.
    """
    I = np.asarray(z[1], dtype=float)
    zero = np.zeros_like(I)
    return np.array([-I, I, zero, zero])


def control_derivative(z) -> np.ndarray:
    """dg/du = ``(I, -I, 0, 0)``: treatment moves infected back to S."""
    return -control_coupling_R(z)


def adjoint_source(cfg: ObjectiveConfig) -> np.ndarray:
    """Source of the adjoint system, ``(0, a, 0, 0)``."""
    return np.array([0.0, float(cfg.a), 0.0, 0.0])
