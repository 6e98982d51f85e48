"""Ground states of the Dirac equation in a circularly polarized wave plus an
axial magnetic field.

Two field orientations are handled. Case 1 (e H_z < 0) uses the formulas as
they stand. Case 2 (e H_z > 0) uses the same Landau width d = |e H_z|/2hbar c
and the case-1 algebra with E0 -> -E0 and nu -> nu + 2 hbar Omega/mc**2,
followed by the spinor map -alpha_1 alpha_3 beta; this is the combination
that annihilates the Dirac operator. ``convention="printed"`` keeps the
printed case-2 recipe (width e H_z/4hbar c, unchanged cubic) so the residual
oracle can show it fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ALGEBRA, PhysicalParams, SpinTrace
from .errors import (
    DenominatorZero,
    NoTwoPositiveRoots,
    SpectralPole,
    UnphysicalMixing,
    ZeroFrequency,
)
from .quadrature import integrate_plane

ROOT_RESIDUAL_TOL = 1e-12
POLE_TOL = 1e-10
REAL_ROOT_TOL = 1e-10

# -alpha_1 alpha_3 beta, the case-2 spinor map
CASE2_MAP = -ALGEBRA.alpha[0] @ ALGEBRA.alpha[2] @ ALGEBRA.beta
SPIN_Z = ALGEBRA.spin_z


@dataclass(frozen=True)
class DiracParams:
    params: PhysicalParams
    epsilon_dir: int = 1

    def __post_init__(self):
        if self.epsilon_dir not in (1, -1):
            raise ValueError("epsilon_dir must be +1 or -1")

    @property
    def k(self) -> float:
        return self.epsilon_dir * self.params.Omega / self.params.light_speed

    @classmethod
    def from_reduced(
        cls,
        E0: float,
        nu: float,
        h: float,
        d: float = 0.5,
        *,
        hbar: float = 1.0,
        mass: float = 1.0,
        light_speed: float = 1.0,
        charge: float = -1.0,
    ) -> "DiracParams":
        """Case-1 physical parameters reproducing (E0, nu, h) at width ``d``.

        The propagation sign is chosen so that the transverse amplitude H
        comes out non-negative.
        """
        if E0 == 0:
            raise ZeroFrequency("E0 = 0 needs an infinite rotation frequency")
        c, m = light_speed, mass
        Omega = 2.0 * hbar * d / (E0 * m)
        H_z = -2.0 * hbar * c * d / charge
        eps = 1
        if h != 0:
            eps = int(np.sign(h) * np.sign(charge) * np.sign(Omega))
        k = eps * Omega / c
        H = h * k * m * c**2 / charge
        p = (nu * m * c**2 + hbar * Omega) / (2.0 * c * eps)
        prm = PhysicalParams(H_z=H_z, H=abs(H), Omega=Omega, p=p, hbar=hbar, mass=m, charge=charge, light_speed=c)
        return cls(prm, eps)


@dataclass(frozen=True)
class DiracReduced:
    """Dimensionless constants plus the physical context needed for
    wavefunctions (frequencies, momenta, unit scales)."""

    d: float
    h: float
    E0: float
    nu: float
    case: int
    convention: str = "derived"
    hbar: float = 1.0
    mass: float = 1.0
    light_speed: float = 1.0
    Omega: float = 1.0
    k: float = 1.0
    p: float = 0.0
    epsilon_dir: int = 1

    @property
    def rest_energy(self) -> float:
        return self.mass * self.light_speed**2

    @property
    def mc_over_hbar(self) -> float:
        return self.mass * self.light_speed / self.hbar

    @property
    def flipped(self) -> bool:
        """Case 2 under the derived convention."""
        return self.case == 2 and self.convention == "derived"

    @property
    def cubic_E0(self) -> float:
        return -self.E0 if self.flipped else self.E0

    @property
    def cubic_nu(self) -> float:
        if self.flipped:
            return self.nu + 2.0 * self.hbar * self.Omega / self.rest_energy
        return self.nu

    def cubic_coefficients(self, nu: float | None = None) -> np.ndarray:
        E0 = self.cubic_E0
        nu = self.cubic_nu if nu is None else nu
        return np.array([1.0, -(E0 - nu), -(1.0 + E0 * nu + self.h**2), E0])


def reduce_dirac(dp: DiracParams, convention: str = "derived") -> DiracReduced:
    prm = dp.params
    if prm.Omega == 0:
        raise ZeroFrequency("Omega = 0 leaves k and E0 undefined")
    if prm.H_z == 0:
        raise ValueError("the construction needs a nonzero axial field")
    if convention not in ("derived", "printed"):
        raise ValueError(f"unknown convention {convention!r}")
    hbar, m, c, e = prm.hbar, prm.mass, prm.light_speed, prm.charge
    eHz = e * prm.H_z
    if eHz < 0:
        case, d = 1, -eHz / (2.0 * hbar * c)
    else:
        case = 2
        d = eHz / (4.0 * hbar * c) if convention == "printed" else eHz / (2.0 * hbar * c)
    k = dp.k
    h = e * prm.H / (k * m * c**2)
    E0 = 2.0 * hbar * d / (prm.Omega * m)
    nu = (2.0 * c * prm.p * dp.epsilon_dir - hbar * prm.Omega) / (m * c**2)
    return DiracReduced(
        d=d, h=h, E0=E0, nu=nu, case=case, convention=convention,
        hbar=hbar, mass=m, light_speed=c, Omega=prm.Omega, k=k, p=prm.p, epsilon_dir=dp.epsilon_dir,
    )


def reduced_only(E0: float, nu: float, h: float, d: float = 0.5) -> DiracReduced:
    """Case-1 constants without a specific physical realization beyond the
    natural-unit one produced by :meth:`DiracParams.from_reduced`."""
    return reduce_dirac(DiracParams.from_reduced(E0, nu, h, d))


def _poly(coeffs, z):
    return ((coeffs[0] * z + coeffs[1]) * z + coeffs[2]) * z + coeffs[3]


def solve_cubic(dr: DiracReduced, nu: float | None = None) -> np.ndarray:
    """All three roots of the spectral cubic, sorted by descending real part.

    Roots are eigenvalues of the companion matrix, refined by two Newton
    steps and checked by back substitution.
    """
    a = dr.cubic_coefficients(nu)
    companion = np.array([[-a[1], -a[2], -a[3]], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    roots = np.linalg.eigvals(companion).astype(complex)
    deriv = np.array([3.0, 2.0 * a[1], a[2]])
    for _ in range(2):
        dp_ = (deriv[0] * roots + deriv[1]) * roots + deriv[2]
        ok = np.abs(dp_) > 1e-8
        step = np.zeros_like(roots)
        step[ok] = _poly(a, roots[ok]) / dp_[ok]
        roots = roots - step
    # conjugate pairs and near-real roots: drop rounding-level imaginary parts
    tiny = np.abs(roots.imag) <= REAL_ROOT_TOL * (1.0 + np.abs(roots.real))
    roots[tiny] = roots[tiny].real
    res = np.abs(_poly(a, roots))
    bound = ROOT_RESIDUAL_TOL * (1.0 + np.abs(roots) ** 3)
    if np.any(res > bound):
        raise ArithmeticError(f"cubic residual {res.max()!r} above tolerance")
    order = np.lexsort((-roots.imag, -roots.real))
    return roots[order]


def cubic_residual(dr: DiracReduced, root: complex, nu: float | None = None) -> float:
    return float(abs(_poly(dr.cubic_coefficients(nu), root)))


def positive_roots(roots: np.ndarray) -> np.ndarray:
    real = [r.real for r in roots if abs(r.imag) <= REAL_ROOT_TOL * (1 + abs(r.real)) and r.real > 0]
    return np.array(sorted(real, reverse=True))


@dataclass(frozen=True)
class DiracBranch:
    E_script: float
    d2: complex
    d1: complex
    N: float
    bispinor: np.ndarray  # N sqrt(d/2pi) times the raw spinor
    raw_spinor: np.ndarray
    reduced: DiracReduced

    @property
    def energy(self) -> float:
        dr = self.reduced
        return dr.rest_energy * self.E_script + dr.light_speed * dr.p * dr.epsilon_dir

    def normalization_identity(self) -> float:
        """N**2 ((E**2 + 1)(E - E0)**2 + h**2 E**2) - 1 with the case's E0."""
        dr = self.reduced
        E, E0 = self.E_script, _spinor_E0(dr)
        return self.N**2 * ((E * E + 1) * (E - E0) ** 2 + dr.h**2 * E * E) - 1.0


def _spinor_E0(dr: DiracReduced) -> float:
    return dr.cubic_E0


def _pole(dr: DiracReduced) -> float:
    return dr.E0 if dr.case == 1 else -dr.E0


def build_branch(dr: DiracReduced, E_script: float, epsilon_dir: int | None = None) -> DiracBranch:
    eps = dr.epsilon_dir if epsilon_dir is None else epsilon_dir
    E = float(E_script)
    pole = _pole(dr)
    if abs(E - pole) < POLE_TOL:
        raise SpectralPole(f"root {E!r} sits on the d2 pole at {pole!r}")
    h = dr.h
    d2 = dr.mc_over_hbar * h * dr.E0 / (2.0 * (E - pole))
    d1 = -1j * d2 if dr.case == 1 else 1j * d2
    E0s = _spinor_E0(dr)
    raw = np.array([-eps * h * E, (E - 1) * (E - E0s), h * E, -eps * (E + 1) * (E - E0s)], dtype=complex)
    if dr.case == 2:
        raw = CASE2_MAP @ raw
    N = 1.0 / math.sqrt((E * E + 1) * (E - E0s) ** 2 + h * h * E * E)
    spinor = N * math.sqrt(dr.d / (2 * math.pi)) * raw
    return DiracBranch(E, complex(d2), complex(d1), N, spinor, raw, dr)


@dataclass(frozen=True)
class TwoBranchState:
    branch1: DiracBranch
    branch2: DiracBranch
    theta: float
    Pi: float
    E_sum: float
    E_diff: float

    @property
    def reduced(self) -> DiracReduced:
        return self.branch1.reduced


def mixing_cos2theta(E1: float, E2: float, dr: DiracReduced) -> float:
    E0 = dr.cubic_E0
    Pi, Ep, Em = E1 * E2, E1 + E2, E1 - E2
    num = dr.h**2 * Pi**2 * Em
    den = (Pi + 1) ** 2 * ((E0**2 - Pi**2) * Ep + 2 * Pi * (Pi - 1) * E0)
    if den == 0 or abs(den) < 1e-300:
        raise DenominatorZero("mixing-angle denominator vanishes")
    return num / den


def mixing_angle(branch1: DiracBranch, branch2: DiracBranch, dr: DiracReduced) -> float:
    """theta with C1 = cos theta, C2 = sin theta that cancels the constant
    part of s3."""
    c2 = mixing_cos2theta(branch1.E_script, branch2.E_script, dr)
    if abs(c2) > 1.0:
        raise UnphysicalMixing(f"cos 2 theta = {c2!r}")
    return 0.5 * math.acos(c2)


def two_branch_state(dr: DiracReduced) -> TwoBranchState:
    pos = positive_roots(solve_cubic(dr))
    if len(pos) < 2:
        raise NoTwoPositiveRoots(f"positive roots {pos.tolist()} for {dr}")
    b1, b2 = build_branch(dr, pos[0]), build_branch(dr, pos[1])
    theta = mixing_angle(b1, b2, dr)
    E1, E2 = b1.E_script, b2.E_script
    return TwoBranchState(b1, b2, theta, E1 * E2, E1 + E2, E1 - E2)


def rotation_operator(phase) -> np.ndarray:
    """exp(-alpha_1 alpha_2 phase / 2) as its diagonal (last axis)."""
    phase = np.asarray(phase, dtype=float)
    a = np.exp(-0.5j * phase)
    b = np.exp(0.5j * phase)
    return np.stack([a, b, a, b], axis=-1)


def _branch_field(branch: DiracBranch, x, y, z, t) -> np.ndarray:
    dr = branch.reduced
    hbar = dr.hbar
    x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
    phase = dr.Omega * t - dr.k * z
    c, s = np.cos(phase), np.sin(phase)
    xt, yt = x * c + y * s, -x * s + y * c
    D = -0.5 * dr.d * (xt * xt + yt * yt) + branch.d1 * xt + branch.d2 * yt - branch.d2**2 / (2 * dr.d)
    scalar = np.exp(-1j * branch.energy * t / hbar + 1j * dr.p * z / hbar + D)
    rot = rotation_operator(phase)
    return np.moveaxis(rot * branch.bispinor, -1, 0) * scalar


def evaluate_lab_wavefunction(target, x, y, z, t) -> np.ndarray:
    """Four-component lab-frame field of a branch or a two-branch state
    (components on the leading axis)."""
    x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
    if isinstance(target, DiracBranch):
        return _branch_field(target, x, y, z, t)
    return math.cos(target.theta) * _branch_field(target.branch1, x, y, z, t) + math.sin(
        target.theta
    ) * _branch_field(target.branch2, x, y, z, t)


def oscillation_frequency(state: TwoBranchState, literal: bool = False) -> float:
    """Angular frequency m c**2 (E1 - E2)/hbar; ``literal`` drops m c**2."""
    dr = state.reduced
    scale = 1.0 if literal else dr.rest_energy
    return scale * state.E_diff / dr.hbar


def spin_amplitude(state: TwoBranchState) -> float:
    """Amplitude of the oscillating part of s3 from the Gaussian overlaps."""
    dr = state.reduced
    b1, b2 = state.branch1, state.branch2
    E1, E2, E0 = b1.E_script, b2.E_script, dr.cubic_E0
    overlap = math.exp(-((b1.d2 - b2.d2).real ** 2) / (2 * dr.d))
    bracket = dr.h**2 * state.Pi - (E1 - E0) * (E2 - E0) * (state.Pi + 1)
    sign = -1.0 if dr.case == 2 else 1.0
    return sign * 0.5 * math.sin(2 * state.theta) * b1.N * b2.N * overlap * bracket


def spin_amplitude_printed(state: TwoBranchState) -> float:
    dr = state.reduced
    b1, b2 = state.branch1, state.branch2
    overlap = math.exp(-((b1.d2 - b2.d2).real ** 2) / dr.d)
    return dr.h**2 * state.Pi * b1.N * b2.N * overlap * math.sin(2 * state.theta)


def spin_constant(state: TwoBranchState) -> float:
    """Time-independent part of s3 implied by the spinors and theta."""
    def part(b):
        s = b.raw_spinor
        return b.N**2 * float(np.real(np.conj(s) @ (SPIN_Z @ s))) / 4.0

    return math.cos(state.theta) ** 2 * part(state.branch1) + math.sin(state.theta) ** 2 * part(state.branch2)


def _quadrature_s3(state: TwoBranchState, t: float, rtol: float) -> float:
    """Integrate the two diagonal and the cross contribution separately, each
    around the centre of its own Gaussian envelope."""
    dr = state.reduced
    ang = dr.Omega * t
    weights = (math.cos(state.theta), math.sin(state.theta))
    branches = (state.branch1, state.branch2)
    ys = [b.d2.real / dr.d for b in branches]
    scale = math.sqrt(1.5 / dr.d)
    sz = np.diag(SPIN_Z).real[:, None, None]
    total = 0.0
    for i, j, mult in ((0, 0, 1.0), (1, 1, 1.0), (0, 1, 2.0)):
        yc = 0.5 * (ys[i] + ys[j])
        center = (-yc * math.sin(ang), yc * math.cos(ang))

        def integrand(X, Y, i=i, j=j):
            a = _branch_field(branches[i], X, Y, 0.0, t)
            b = _branch_field(branches[j], X, Y, 0.0, t)
            return np.sum(np.conj(a) * sz * b, axis=0).real

        res = integrate_plane(integrand, center, scale, rtol=rtol, atol=1e-15, n_start=32)
        total += mult * weights[i] * weights[j] * float(np.real(res.value))
    return 0.5 * total


def _sinusoid_offset(times: np.ndarray, values: np.ndarray, omega: float) -> float:
    """Least-squares C in C + a cos(omega t) + b sin(omega t)."""
    if len(values) < 3:
        return float("nan")
    basis = np.column_stack([np.ones_like(times), np.cos(omega * times), np.sin(omega * times)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return float(coef[0])


def spin_oscillation(
    state: TwoBranchState,
    times,
    method: str = "closed-form",
    literal_frequency: bool = False,
    rtol: float = 1e-10,
) -> SpinTrace:
    """s3(t) for the two-branch state.

    ``"closed-form"`` is A cos(omega t) with the overlap amplitude;
    ``"printed"`` uses the printed amplitude instead (diagnostic);
    ``"quadrature"`` integrates (1/2) Psi^+ Sigma_3 Psi of the lab field.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    omega = oscillation_frequency(state, literal=literal_frequency)
    if method == "closed-form":
        amp = spin_amplitude(state)
        values = amp * np.cos(omega * times)
        const = 0.0
    elif method == "printed":
        amp = spin_amplitude_printed(state)
        values = amp * np.cos(omega * times)
        const = 0.0
    elif method == "quadrature":
        values = np.array([_quadrature_s3(state, t, rtol) for t in times])
        amp = spin_amplitude(state)
        const = _sinusoid_offset(times, values, omega)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpinTrace(times, values, omega, amp, method, const, {"theta": state.theta})


def amplitude_scan(nu: float, h: float, E0_values, d: float = 0.5) -> np.ndarray:
    """Closed-form |A| across E0 at fixed nu, h and width (nan where the
    two-branch state does not exist)."""
    out = np.full(len(E0_values), np.nan)
    for i, E0 in enumerate(E0_values):
        dr = DiracReduced(d=d, h=h, E0=float(E0), nu=nu, case=1, Omega=2 * d / E0)
        try:
            out[i] = abs(spin_amplitude(two_branch_state(dr)))
        except (NoTwoPositiveRoots, SpectralPole, UnphysicalMixing, DenominatorZero):
            pass
    return out
