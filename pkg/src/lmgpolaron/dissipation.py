"""Rate description of the two master equations and their stationary observables.

In the oscillator eigenbasis both master equations reduce to a damped harmonic
oscillator with emission rate ``F_e`` (jump ``d``) and absorption rate ``F_a``
(jump ``d^dag``). Populations of Fock states decouple from coherences, so the
observables here follow from the rates alone.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bosonic import coupling_factors, solve_oscillator
from .core import BathParams, bose_occupation, renormalized_coupling, spectral_density
from .errors import TruncationWarning, ValidationError

#: relative guard radius around the critical point for rate evaluation
RATE_GUARD = 1e-6

TAIL_TOL = 1e-10
MAX_FOCK = 10_000


class Frame(enum.Enum):
    BMS = "bms"
    POLARON = "polaron"


class PolaronDensity(enum.Enum):
    """How the transformed reservoir density entering the polaron rates is chosen.

    ``BARE`` takes it equal to the original density. ``DISPLACEMENT`` uses the
    identity-Bogoliubov limit of the displaced reservoir, whose coupling
    amplitudes are ``g_k/nu_k`` and hence give ``Gamma(w)/w^2``.
    """

    BARE = "bare"
    DISPLACEMENT = "displacement"


@dataclass(frozen=True)
class RatePair:
    f_emit: float
    f_absorb: float
    frame: Frame
    omega_used: float

    @property
    def gamma_eff(self) -> float:
        """Bare jump rate ``Gamma`` with ``F_e = Gamma (1+n_B)`` and ``F_a = Gamma n_B``."""
        return self.f_emit - self.f_absorb

    @property
    def n_b(self) -> float:
        return self.f_absorb / (self.f_emit - self.f_absorb)


@dataclass(frozen=True)
class FockDistribution:
    probabilities: np.ndarray
    n_max: int
    ratio: float

    @property
    def tail_mass(self) -> float:
        """Probability of ``n > n_max`` in the untruncated geometric distribution."""
        return self.ratio ** (self.n_max + 1)

    def mean(self) -> float:
        return float(np.arange(self.n_max + 1) @ self.probabilities)


def _rates(a2: float, density: float, omega: float, beta: float, frame: Frame) -> RatePair:
    n_b = bose_occupation(omega, beta)
    gamma = a2 * density
    return RatePair(f_emit=gamma * (1 + n_b), f_absorb=gamma * n_b, frame=frame, omega_used=omega)


def rates_bms(h: float, gamma_x: float, bath: BathParams, guard: float = RATE_GUARD) -> RatePair:
    """Emission and absorption rates of the untransformed master equation.

    Everything is evaluated at the renormalised coupling.
    """
    gt = renormalized_coupling(gamma_x, bath)
    sol = solve_oscillator(h, gt, guard)
    cf = coupling_factors(h, gt, guard)
    return _rates(cf.a_bms**2, spectral_density(sol.omega, bath), sol.omega, bath.beta, Frame.BMS)


def rates_polaron(h: float, gamma_x: float, bath: BathParams, guard: float = RATE_GUARD,
                  density: PolaronDensity | str = PolaronDensity.BARE) -> RatePair:
    """Emission and absorption rates of the polaron-frame master equation at bare ``gamma_x``."""
    density = PolaronDensity(density)
    sol = solve_oscillator(h, gamma_x, guard)
    cf = coupling_factors(h, gamma_x, guard)
    g = spectral_density(sol.omega, bath)
    if density is PolaronDensity.DISPLACEMENT:
        g /= sol.omega**2
    return _rates(cf.a_polaron**2, g, sol.omega, bath.beta, Frame.POLARON)


def frame_rates(frame: Frame | str, h: float, gamma_x: float, bath: BathParams, **kw) -> RatePair:
    frame = Frame(frame)
    if frame is Frame.BMS:
        return rates_bms(h, gamma_x, bath, **kw)
    return rates_polaron(h, gamma_x, bath, **kw)


def steady_occupation_diagonal(rates: RatePair, bath: BathParams) -> float:
    """Stationary ``<d^dag d>``, the Bose occupation at the transition frequency."""
    return bose_occupation(rates.omega_used, bath.beta)


def frame_coupling(h: float, gamma_x: float, frame: Frame | str, bath: BathParams | None) -> float:
    """Coupling at which the oscillator of ``frame`` is evaluated."""
    if Frame(frame) is Frame.POLARON:
        return gamma_x
    if bath is None:
        raise ValidationError("the BMS frame needs the bath to renormalise the coupling")
    return renormalized_coupling(gamma_x, bath)


def steady_occupation_mode(h: float, gamma: float, beta: float,
                           frame: Frame | str = Frame.POLARON,
                           bath: BathParams | None = None,
                           guard: float = RATE_GUARD) -> float:
    """Stationary ``<a^dag a>`` of the undiagonalised mode.

    With ``a = cosh(phi) d + sinh(phi) d^dag`` and a thermal ``d`` mode,
    ``<a^dag a> = sinh^2(phi) + cosh(2 phi) n_B``. ``gamma`` is the bare coupling;
    the BMS frame renormalises it through ``bath``.
    """
    g = frame_coupling(h, gamma, frame, bath)
    sol = solve_oscillator(h, g, guard)
    n_b = bose_occupation(sol.omega, beta)
    return math.sinh(sol.phi) ** 2 + math.cosh(2 * sol.phi) * n_b


def evolve_occupation(n0: float, t, rates: RatePair):
    """Closed-form solution of ``dn/dt = -(F_e - F_a) n + F_a``."""
    if n0 < 0:
        raise ValidationError("n0 must be >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    k = rates.f_emit - rates.f_absorb
    if k == 0:
        out = n0 + rates.f_absorb * t
    else:
        n_ss = rates.f_absorb / k
        out = n_ss + (n0 - n_ss) * np.exp(-k * t)
    return float(out) if out.ndim == 0 else out


def fock_cutoff(n_b: float, tol: float = TAIL_TOL, cap: int = MAX_FOCK) -> int:
    """Smallest ``n_max`` whose geometric tail mass ``r^(n_max+1)`` is below ``tol``."""
    if n_b <= 0:
        return 0
    r = n_b / (1 + n_b)
    n = math.floor(math.log(tol) / math.log(r))
    return int(min(max(n, 0), cap))


def thermal_fock_distribution(omega: float, beta: float, n_max: int | None = None) -> FockDistribution:
    """Geometric Fock populations ``P_n = r^n (1 - r)``, ``r = n_B/(1+n_B)``.

    ``n_max=None`` picks the adaptive cutoff of :func:`fock_cutoff`. A
    :class:`TruncationWarning` is issued if the neglected tail exceeds 1e-10.
    """
    n_b = bose_occupation(omega, beta)
    if n_max is None:
        n_max = fock_cutoff(n_b)
    if n_max < 0:
        raise ValidationError("n_max must be >= 0")
    r = n_b / (1 + n_b)
    n = np.arange(n_max + 1)
    with np.errstate(under="ignore"):
        p = r**n / (1 + n_b)
    dist = FockDistribution(probabilities=p, n_max=int(n_max), ratio=r)
    if dist.tail_mass > TAIL_TOL:
        warnings.warn(f"Fock truncation at n_max={n_max} leaves tail mass {dist.tail_mass:.3g}",
                      TruncationWarning, stacklevel=2)
    return dist
