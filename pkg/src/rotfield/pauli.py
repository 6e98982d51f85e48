"""Exact Gaussian states of the Pauli equation in a rotating magnetic field.

In the frame co-rotating with the transverse field, and after the spin
rotation that diagonalizes the Zeeman term, each spin branch obeys

    psi_xx + psi_yy - i f (x psi_y - y psi_x)
        - (g1 x**2 + g2 y**2 - b y - eps) psi = 0

whose integrable solutions are polynomial * exp(D), with
D = d11 x**2/2 + d12 x y + d22 y**2/2 + d1 x + d2 y.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import PhysicalParams, ReducedPauliParams, SpinTrace, reduce_pauli
from .errors import (
    ComplexEnergy,
    DegenerateBoundary,
    ForbiddenBand,
    NoIntegrableBranch,
    NonPositiveNorm,
)
from .quadrature import integrate_plane

RESIDUAL_TOL = 1e-12
BAND_TOL = 1e-10
COMPLEX_ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class QuadraticForm:
    d11: complex
    d12: complex
    d22: complex
    d1: complex
    d2: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.d11, self.d12], [self.d12, self.d22]], dtype=complex)

    @property
    def linear(self) -> np.ndarray:
        return np.array([self.d1, self.d2], dtype=complex)

    def exponent(self, x, y):
        return 0.5 * self.d11 * x * x + self.d12 * x * y + 0.5 * self.d22 * y * y + self.d1 * x + self.d2 * y

    def gradient(self, x, y):
        return (self.d11 * x + self.d12 * y + self.d1, self.d12 * x + self.d22 * y + self.d2)

    def is_integrable(self) -> bool:
        """Real part of the quadratic matrix is negative definite."""
        eig = np.linalg.eigvalsh(self.matrix.real)
        return bool(np.all(eig < 0))

    def center(self) -> np.ndarray:
        """Maximum of |exp D| (completing the square on the real part)."""
        return np.linalg.solve(-self.matrix.real, self.linear.real)

    def scale(self) -> float:
        """Widest e-folding length of |exp D|**2, a safe Gauss-Hermite scale."""
        lam = np.linalg.eigvalsh(-self.matrix.real)
        return 1.0 / math.sqrt(2.0 * lam.min())

    def residuals(self, rp: ReducedPauliParams) -> np.ndarray:
        d11, d12, d22, d1, d2 = self.d11, self.d12, self.d22, self.d1, self.d2
        f = rp.f
        return np.array(
            [
                d11**2 + d12**2 - 1j * f * d12 - rp.g1,
                d22**2 + d12**2 + 1j * f * d12 - rp.g2,
                2 * d11 * d12 + 2 * d22 * d12 - 1j * f * (d22 - d11),
                2 * d11 * d1 + 2 * d12 * d2 - 1j * f * d2,
                2 * d22 * d2 + 2 * d12 * d1 + 1j * f * d1 + rp.b,
            ]
        )

    def residual_scale(self, rp: ReducedPauliParams) -> float:
        coeffs = [self.d11, self.d12, self.d22, self.d1, self.d2]
        biggest = max(abs(c) for c in coeffs)
        return 1.0 + max(biggest**2, abs(rp.f) * biggest, rp.g2, abs(rp.b))

    def as_dict(self) -> dict:
        out = {}
        for name in ("d11", "d12", "d22", "d1", "d2"):
            z = complex(getattr(self, name))
            out[name] = [z.real, z.imag]
        return out


@dataclass(frozen=True)
class EnergyLevel:
    n: int
    sigma: int
    tau_branch: str | None
    E: float

    @property
    def label(self) -> str:
        s = "+" if self.sigma > 0 else "-"
        tau = "" if self.tau_branch is None else f",tau={self.tau_branch}"
        return f"E[n={self.n},sigma={s}{tau}]"


@dataclass(frozen=True)
class PauliState:
    """Lab-frame n = 0 state: two spin branches sharing one Gaussian."""

    quadratic_form: QuadraticForm
    C_plus: complex
    C_minus: complex
    gamma: float
    E_plus: float
    E_minus: float
    params: PhysicalParams

    @property
    def p(self) -> float:
        return self.params.p


def band_edges(rp: ReducedPauliParams) -> tuple[float, float]:
    return 4.0 * rp.g1, 4.0 * rp.g2


def classify_band(rp: ReducedPauliParams, tol: float = BAND_TOL) -> str:
    """Return ``"allowed"``, ``"boundary"`` or ``"forbidden"`` for f**2."""
    lo, hi = band_edges(rp)
    f2 = rp.f**2
    if abs(f2 - lo) <= tol or abs(f2 - hi) <= tol:
        return "boundary"
    if lo < f2 < hi:
        return "forbidden"
    return "allowed"


def _solve_linear(rp, d11, d12, d22):
    f = rp.f
    A = np.array([[2 * d11, 2 * d12 - 1j * f], [2 * d12 + 1j * f, 2 * d22]], dtype=complex)
    return np.linalg.solve(A, np.array([0.0, -rp.b], dtype=complex))


def _polish(rp, d11, d12, d22, iterations=3):
    """Newton steps on the three quadratic equations."""
    f = rp.f
    z = np.array([d11, d12, d22], dtype=complex)
    for _ in range(iterations):
        a, c, e = z
        F = np.array(
            [
                a * a + c * c - 1j * f * c - rp.g1,
                e * e + c * c + 1j * f * c - rp.g2,
                2 * a * c + 2 * e * c - 1j * f * (e - a),
            ]
        )
        J = np.array(
            [
                [2 * a, 2 * c - 1j * f, 0],
                [0, 2 * c + 1j * f, 2 * e],
                [2 * c + 1j * f, 2 * a + 2 * e, 2 * c - 1j * f],
            ]
        )
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        z = z - step
    return z


def quadratic_candidates(rp: ReducedPauliParams) -> list[QuadraticForm]:
    """All roots of the coefficient system reachable by elimination.

    With u = d11 + d22 and v = d11 - d22 the xy equation gives
    d12 = -i f v / (2u); the remaining pair reduces to a quadratic in
    w = u**2 whose discriminant is (f**2 - 4 g1)(f**2 - 4 g2).
    """
    g1, g2, f = rp.g1, rp.g2, rp.f
    G = g1 + g2
    f2 = f * f
    disc = (f2 - 4 * g1) * (f2 - 4 * g2)
    sq = cmath.sqrt(disc)
    out = []
    for w in ((f2 + 2 * G + sq) / 2, (f2 + 2 * G - sq) / 2):
        for sign in (-1.0, 1.0):
            u = sign * cmath.sqrt(w)
            den = u * u - f2
            if abs(u) < 1e-300 or abs(den) <= 1e-13 * (abs(u * u) + f2):
                continue
            v = (g1 - g2) * u / den
            d12 = -1j * f * v / (2 * u)
            d11, d12, d22 = _polish(rp, (u + v) / 2, d12, (u - v) / 2)
            try:
                d1, d2 = _solve_linear(rp, d11, d12, d22)
            except np.linalg.LinAlgError:
                continue
            out.append(QuadraticForm(complex(d11), complex(d12), complex(d22), complex(d1), complex(d2)))
    return out


def solve_quadratic_system(rp: ReducedPauliParams, tol: float = RESIDUAL_TOL) -> QuadraticForm:
    """Square-integrable coefficients of the Gaussian exponent.

    Every elimination candidate is re-substituted into the raw five
    equations; only those with residuals below ``tol`` (scaled by the
    coefficient magnitudes) and a negative-definite real part survive.
    """
    band = classify_band(rp)
    if band == "boundary":
        raise DegenerateBoundary(f"f^2 = {rp.f**2!r} is on a band edge {band_edges(rp)}")
    if band == "forbidden":
        raise ForbiddenBand(f"f^2 = {rp.f**2!r} lies inside {band_edges(rp)}")
    survivors = []
    for qf in quadratic_candidates(rp):
        res = np.max(np.abs(qf.residuals(rp)))
        if res < tol * qf.residual_scale(rp) and qf.is_integrable():
            survivors.append(qf)
    if not survivors:
        raise NoIntegrableBranch(f"no integrable root for {rp}")
    # The vacuum Gaussian of a stable quadratic problem is unique; if rounding
    # lets a near-duplicate through, keep the most strongly decaying one.
    survivors.sort(key=lambda q: float(np.max(np.linalg.eigvalsh(q.matrix.real))))
    return survivors[0]


def _check_real(value: complex, what: str) -> float:
    if abs(value.imag) > COMPLEX_ENERGY_TOL * (1.0 + abs(value.real)):
        raise ComplexEnergy(f"{what} has imaginary part {value.imag!r}")
    return value.real


def tau_value(rp: ReducedPauliParams, qf: QuadraticForm, hbar=1.0, mass=1.0, literal=False) -> complex:
    """Half splitting of the two normal-mode frequencies.

    ``literal=True`` uses d12**2 under the square root as printed in the
    source; the default 4 d12**2 is what the ladder operators give.
    """
    weight = 1.0 if literal else 4.0
    arg = (qf.d11 - qf.d22) ** 2 + weight * qf.d12**2 + rp.f**2
    return hbar**2 / (2 * mass) * cmath.sqrt(arg)


def energy_levels(
    rp: ReducedPauliParams,
    qf: QuadraticForm,
    p: float,
    n: int,
    hbar: float = 1.0,
    mass: float = 1.0,
    literal: bool = False,
) -> list[EnergyLevel]:
    """Levels of quantum number ``n`` (0, 1 or 2) for both spin signs.

    The n = 2 outer pair is split by 2 tau; ``literal=True`` reproduces the
    printed +-tau (and the printed tau) for comparison.
    """
    if n not in (0, 1, 2):
        raise ValueError("only n = 0, 1, 2 are available")
    unit = hbar**2 / (2 * mass)
    eps_n = -unit * ((n + 1) * (qf.d11 + qf.d22) + qf.d1**2 + qf.d2**2)
    tau = tau_value(rp, qf, hbar, mass, literal=literal)
    if n == 0:
        shifts = [(None, 0.0)]
    elif n == 1:
        shifts = [("+", tau), ("-", -tau)]
    else:
        k = 1.0 if literal else 2.0
        shifts = [(None, 0.0), ("+", k * tau), ("-", -k * tau)]
    levels = []
    for branch, shift in shifts:
        spatial = _check_real(complex(eps_n + shift), f"level n={n} tau={branch}")
        for sigma in (1, -1):
            E = p**2 / (2 * mass) - sigma * unit * rp.rho + spatial
            levels.append(EnergyLevel(n, sigma, branch, E))
    return levels


def spectrum(params: PhysicalParams, n_max: int = 2, literal: bool = False) -> list[EnergyLevel]:
    rp = reduce_pauli(params)
    qf = solve_quadratic_system(rp)
    out = []
    for n in range(n_max + 1):
        out.extend(energy_levels(rp, qf, params.p, n, params.hbar, params.mass, literal=literal))
    return out


def forbidden_g_zone(H_over_Hz: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """g-factor intervals for which the resonant configuration is forbidden."""
    if not math.isfinite(H_over_Hz):
        raise ValueError("H/H_z must be finite")
    root = math.sqrt(1.0 + 4.0 * H_over_Hz**2)
    return (1.0 - root, 0.0), (2.0, 1.0 + root)


def resonance_condition(params: PhysicalParams) -> float:
    """Rotation frequency with hbar Omega + mu H_z = 0."""
    if params.H_z == 0:
        raise ValueError("resonance needs a nonzero axial field")
    return -params.mu * params.H_z / params.hbar


def resonance_residual(params: PhysicalParams) -> float:
    return params.hbar * params.Omega + params.mu * params.H_z


def delta_zero_frequency(params: PhysicalParams) -> float:
    """Rotation frequency at which Delta = 0, i.e. gamma = +-pi/2.

    This is hbar Omega + 2 mu H_z = 0, the frequency at which the rotating
    frame sees no longitudinal Zeeman term and the Rabi contrast is full.
    """
    if params.H_z == 0:
        raise ValueError("resonance needs a nonzero axial field")
    return -2.0 * params.mu * params.H_z / params.hbar


def normalization_constraint(qf: QuadraticForm) -> float:
    """Value of |C+|**2 + |C-|**2 that normalizes the state.

    Evaluated as sqrt(det A)/pi * exp(-a.A^-1.a) with A = -Re(matrix) and
    a = Re(linear), i.e. 1/integral(|exp D|**2). For the solver's forms
    (d11, d22, d2 real; d12, d1 imaginary) this is
    sqrt(d11 d22)/pi * exp(d2**2/d22) exactly.
    """
    if not qf.is_integrable():
        raise NonPositiveNorm("quadratic form is not square integrable")
    A = -qf.matrix.real
    a = qf.linear.real
    value = math.sqrt(np.linalg.det(A)) / math.pi * math.exp(-float(a @ np.linalg.solve(A, a)))
    if not value > 0 or not math.isfinite(value):
        raise NonPositiveNorm(f"normalization evaluated to {value!r}")
    return value


def normalization_constraint_printed(qf: QuadraticForm) -> complex:
    """sqrt(d11 d22)/pi * exp(d2**2/d22) with the principal square root."""
    return cmath.sqrt(qf.d11 * qf.d22) / math.pi * cmath.exp(qf.d2**2 / qf.d22)


def pauli_ground_state(params: PhysicalParams, c_plus: complex = 1.0, c_minus: complex = 0.0) -> PauliState:
    """Normalized n = 0 state with spin-branch amplitudes proportional to
    (``c_plus``, ``c_minus``)."""
    rp = reduce_pauli(params)
    qf = solve_quadratic_system(rp)
    levels = energy_levels(rp, qf, params.p, 0, params.hbar, params.mass)
    E = {lv.sigma: lv.E for lv in levels}
    weight = abs(c_plus) ** 2 + abs(c_minus) ** 2
    if weight == 0:
        raise ValueError("at least one spin amplitude must be nonzero")
    scale = math.sqrt(normalization_constraint(qf) / weight)
    return PauliState(qf, complex(c_plus) * scale, complex(c_minus) * scale, rp.gamma, E[1], E[-1], params)


def rotating_coordinates(x, y, angle):
    """Coordinates in the frame rotated by ``angle``."""
    c, s = np.cos(angle), np.sin(angle)
    return x * c + y * s, -x * s + y * c


def evaluate_wavefunction(state: PauliState, x, y, z, t) -> np.ndarray:
    """Lab-frame two-component spinor; leading axis holds the components."""
    prm = state.params
    hbar, Om = prm.hbar, prm.Omega
    x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
    xt, yt = rotating_coordinates(x, y, Om * t)
    common = np.exp(1j * prm.p * z / hbar + state.quadratic_form.exponent(xt, yt))
    cg, sg = math.cos(state.gamma / 2), math.sin(state.gamma / 2)
    ph_p = np.exp(-1j * state.E_plus * t / hbar)
    ph_m = np.exp(-1j * state.E_minus * t / hbar)
    up = np.exp(-0.5j * Om * t) * (cg * state.C_plus * ph_p - sg * state.C_minus * ph_m)
    down = np.exp(0.5j * Om * t) * (cg * state.C_minus * ph_m + sg * state.C_plus * ph_p)
    return np.stack([up * common, down * common])


def _resonance_sign(state: PauliState, tol: float) -> int:
    if abs(abs(math.sin(state.gamma)) - 1.0) > tol:
        raise ValueError(f"gamma = {state.gamma!r} is not +-pi/2")
    if abs(state.C_minus - state.C_plus) <= tol * abs(state.C_plus):
        return 1
    if abs(state.C_minus + state.C_plus) <= tol * abs(state.C_plus):
        return -1
    raise ValueError("resonance formula needs C- = +-C+")


def spin_trace(state: PauliState, times, method: str = "closed-form", rtol: float = 1e-6) -> SpinTrace:
    """s3(t) = (1/2) integral Psi^+ sigma_3 Psi dx dy.

    ``"closed-form"`` uses the spin algebra of the two-branch state (valid
    for any amplitudes); ``"resonance"`` is -+(1/2) cos(2 mu H t/hbar) and
    requires gamma = +-pi/2 with C- = +-C+; ``"quadrature"`` integrates the
    lab-frame spinor numerically at each time.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    prm = state.params
    hbar = prm.hbar
    weight = abs(state.C_plus) ** 2 + abs(state.C_minus) ** 2
    split = (state.E_plus - state.E_minus) / hbar
    sg = math.sin(state.gamma)
    amp = abs(sg * state.C_plus * state.C_minus) / weight
    constant = 0.5 * math.cos(state.gamma) * (abs(state.C_plus) ** 2 - abs(state.C_minus) ** 2) / weight
    if method == "closed-form":
        cross = np.conj(state.C_plus) * state.C_minus * np.exp(1j * split * times)
        values = constant - sg * cross.real / weight
    elif method == "resonance":
        s = _resonance_sign(state, 1e-9)
        sign_gamma = 1.0 if sg > 0 else -1.0
        values = -0.5 * s * sign_gamma * np.cos(2 * prm.mu * prm.H * times / hbar)
        constant = 0.0
    elif method == "quadrature":
        qf = state.quadratic_form
        c0 = qf.center()
        scale = qf.scale()
        values = np.empty_like(times)
        for i, t in enumerate(times):
            ang = prm.Omega * t
            # the density maximum rotates with the frame
            cx = c0[0] * math.cos(ang) - c0[1] * math.sin(ang)
            cy = c0[0] * math.sin(ang) + c0[1] * math.cos(ang)

            def integrand(X, Y, t=t):
                psi = evaluate_wavefunction(state, X, Y, 0.0, t)
                a2 = np.abs(psi[0]) ** 2
                b2 = np.abs(psi[1]) ** 2
                return np.stack([a2 + b2, a2 - b2])  # norm rides along for convergence

            res = integrate_plane(integrand, (cx, cy), scale, rtol=rtol * 1e-2)
            values[i] = 0.5 * res.value[1].real
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpinTrace(times, np.asarray(values, dtype=float), abs(split), amp, method, constant)
