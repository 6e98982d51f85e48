"""Physical inputs, reduced Pauli constants and the fixed spinor algebra.

All formulas keep hbar, m, e and c explicit. The default is the natural
unit system hbar = m = c = 1 with the electron charge e = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "PhysicalParams",
    "ReducedPauliParams",
    "SpinorAlgebra",
    "ALGEBRA",
    "SpinTrace",
    "mu_from_g",
    "reduce_pauli",
]


def mu_from_g(g: float, params: "PhysicalParams") -> float:
    """Magnetic moment mu = g e hbar / (2 m c)."""
    return g * params.charge * params.hbar / (2.0 * params.mass * params.light_speed)


@dataclass(frozen=True)
class PhysicalParams:
    """Field configuration and particle constants.

    ``H_z`` is the axial field, ``H`` the amplitude of the rotating
    transverse field, ``Omega`` its signed rotation frequency and ``p`` the
    axial momentum. The magnetic moment is derived from ``g_factor``.
    """

    H_z: float = 1.0
    H: float = 0.0
    Omega: float = 0.0
    p: float = 0.0
    g_factor: float = 2.0
    hbar: float = 1.0
    mass: float = 1.0
    charge: float = -1.0
    light_speed: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "light_speed"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.H < 0:
            raise ValueError(f"H must be non-negative, got {self.H!r}")

    @property
    def mu(self) -> float:
        return mu_from_g(self.g_factor, self)

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "H_z": self.H_z,
            "H": self.H,
            "Omega": self.Omega,
            "p": self.p,
            "g_factor": self.g_factor,
            "hbar": self.hbar,
            "mass": self.mass,
            "charge": self.charge,
            "light_speed": self.light_speed,
        }


@dataclass(frozen=True)
class ReducedPauliParams:
    """Equation-native constants of the stationary rotating-frame problem.

    ``kappa`` is the transverse spin coupling 2 m mu H / hbar**2, kept so
    that the diagonalization can be undone without the physical inputs.
    ``gamma`` comes from a two-argument arctangent and lies in (-pi, pi].
    """

    g1: float
    g2: float
    b: float
    f: float
    Delta: float
    gamma: float
    rho: float
    kappa: float = 0.0


def reduce_pauli(params: PhysicalParams) -> ReducedPauliParams:
    hbar, m, e, c = params.hbar, params.mass, params.charge, params.light_speed
    mu = params.mu
    field_scale = (e / (hbar * c)) ** 2
    g1 = field_scale * params.H_z**2 / 4.0
    g2 = g1 + field_scale * params.H**2
    b = 2.0 * params.p * e * params.H / (hbar**2 * c)
    f = 2.0 * m * params.Omega / hbar + e * params.H_z / (hbar * c)
    Delta = m * params.Omega / hbar + 2.0 * m * mu * params.H_z / hbar**2
    kappa = 2.0 * m * mu * params.H / hbar**2
    rho = math.hypot(kappa, Delta)
    gamma = math.atan2(kappa, Delta)
    if gamma <= -math.pi:
        gamma = math.pi
    return ReducedPauliParams(g1=g1, g2=g2, b=b, f=f, Delta=Delta, gamma=gamma, rho=rho, kappa=kappa)


def _block(a, b, c, d):
    return np.block([[a, b], [c, d]])


def _pauli() -> np.ndarray:
    return np.array(
        [
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=complex,
    )


def _alpha(sigma: np.ndarray) -> np.ndarray:
    zero = np.zeros((2, 2), dtype=complex)
    return np.array([_block(zero, s, s, zero) for s in sigma])


@dataclass(frozen=True)
class SpinorAlgebra:
    """Pauli matrices and Dirac matrices in the standard representation."""

    sigma: np.ndarray = field(default_factory=_pauli)
    alpha: np.ndarray = field(default=None)
    beta: np.ndarray = field(default_factory=lambda: np.diag([1, 1, -1, -1]).astype(complex))

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", _alpha(self.sigma))

    @property
    def rotation_generator(self) -> np.ndarray:
        """alpha_1 alpha_2, equal to i diag(sigma_3, sigma_3)."""
        return self.alpha[0] @ self.alpha[1]

    @property
    def spin_z(self) -> np.ndarray:
        """Sigma_3 = diag(sigma_3, sigma_3)."""
        return np.diag([1, -1, 1, -1]).astype(complex)


ALGEBRA = SpinorAlgebra()


@dataclass
class SpinTrace:
    """Spin expectation s3(t) sampled on ``times``.

    ``method`` records how the values were produced: ``"closed-form"``,
    ``"quadrature"`` or ``"grid"``.
    """

    times: np.ndarray
    values: np.ndarray
    frequency: float
    amplitude: float
    method: str
    constant: float = 0.0
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "frequency": float(self.frequency),
            "amplitude": float(self.amplitude),
            "constant": float(self.constant),
            "times": [float(t) for t in self.times],
            "s3": [float(v) for v in self.values],
            **self.meta,
        }
