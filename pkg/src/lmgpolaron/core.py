"""Parameter records, phase classification and reservoir functions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, CriticalPointError, ValidationError

#: relative radius around gamma == h inside which the oscillator formulas are refused
CRITICAL_TOL = 1e-9

#: upper limit of reservoir integrals in units of the cutoff frequency
QUAD_UPPER = 40.0


@dataclass(frozen=True)
class LmgParams:
    """Isolated LMG model ``H = -h Jz - (gamma_x/N) Jx^2`` in the j = N/2 sector."""

    h: float
    gamma_x: float
    n_spins: int

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValidationError(f"h must be a positive finite number, got {self.h!r}")
        if not (self.gamma_x >= 0 and math.isfinite(self.gamma_x)):
            raise ValidationError(f"gamma_x must be >= 0, got {self.gamma_x!r}")
        if isinstance(self.n_spins, bool) or int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValidationError(f"n_spins must be a positive integer, got {self.n_spins!r}")
        object.__setattr__(self, "n_spins", int(self.n_spins))

    @property
    def j(self) -> float:
        return self.n_spins / 2


@dataclass(frozen=True)
class BathParams:
    """Bosonic reservoir with the cubic spectral density.

    ``eta`` is the dimensionless coupling, ``omega_c`` the cutoff frequency and
    ``beta`` the inverse temperature.
    """

    eta: float
    omega_c: float
    beta: float

    def __post_init__(self):
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValidationError(f"eta must be >= 0, got {self.eta!r}")
        if not (self.omega_c > 0 and math.isfinite(self.omega_c)):
            raise ValidationError(f"omega_c must be > 0, got {self.omega_c!r}")
        if not (self.beta > 0):
            raise ValidationError(f"beta must be > 0, got {self.beta!r}")

    @classmethod
    def standard(cls, h: float = 1.0) -> "BathParams":
        """Standard reservoir: ``eta = 2 pi 0.1``, ``omega_c = h/2``, ``beta = 1.79/h``."""
        return cls(eta=2 * math.pi * 0.1, omega_c=0.5 * h, beta=1.79 / h)


class Phase(enum.Enum):
    NORMAL = "normal"
    SYMMETRY_BROKEN = "symmetry_broken"


def classify_phase(h: float, gamma: float, tol: float = CRITICAL_TOL) -> Phase:
    """Return the ground-state phase for field ``h`` and spin-spin coupling ``gamma``.

    Raises :class:`CriticalPointError` when ``|gamma - h| < tol * h``. Negative
    couplings (which the reservoir renormalisation can produce) are normal.
    """
    if not h > 0:
        raise ValidationError(f"h must be > 0, got {h!r}")
    if not math.isfinite(gamma):
        raise ValidationError(f"gamma must be finite, got {gamma!r}")
    if abs(gamma - h) < tol * h:
        raise CriticalPointError(h, gamma, tol * h)
    return Phase.NORMAL if gamma < h else Phase.SYMMETRY_BROKEN


def spectral_density(omega, bath: BathParams):
    """Cubic spectral density ``eta * omega^3 / omega_c^2 * exp(-omega/omega_c)``.

    Accepts scalars or arrays; negative frequencies raise.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise ValidationError("spectral density is defined for omega >= 0 only")
    out = bath.eta * w**3 / bath.omega_c**2 * np.exp(-w / bath.omega_c)
    return float(out) if out.ndim == 0 else out


def tabulated_spectral_density(omegas, values):
    """Piecewise-linear spectral density from samples, zero outside the table.

    Only meant for checking the quadrature machinery against arbitrary shapes.
    """
    omegas = np.asarray(omegas, dtype=float)
    values = np.asarray(values, dtype=float)
    if omegas.ndim != 1 or omegas.shape != values.shape or omegas.size < 2:
        raise ValidationError("need matching 1-d arrays with at least two samples")
    if np.any(np.diff(omegas) <= 0):
        raise ValidationError("omegas must be strictly increasing")
    if np.any(values < 0):
        raise ValidationError("spectral density must be non-negative")

    def density(omega):
        out = np.interp(omega, omegas, values, left=0.0, right=0.0)
        return float(out) if np.ndim(out) == 0 else out

    density.support = (float(omegas[0]), float(omegas[-1]))
    density.nodes = (omegas, values)
    return density


def bose_occupation(omega, beta: float):
    """Bose-Einstein occupation ``1/(exp(beta*omega) - 1)`` for ``omega > 0``."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise ValidationError("bose_occupation requires omega > 0")
    if not beta > 0:
        raise ValidationError("bose_occupation requires beta > 0")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(beta * w)
    return float(out) if out.ndim == 0 else out


def reservoir_integral(integrand, omega_c: float, upper: float = QUAD_UPPER,
                       tail_bound: float = 0.0, rtol: float = 1e-12) -> float:
    """Adaptive quadrature of ``integrand`` on ``[0, upper*omega_c]``.

    ``tail_bound`` is a caller-supplied bound on the neglected integral beyond the
    upper limit; it is only checked against the requested accuracy.
    """
    b = upper * omega_c
    # split at a few cutoff multiples so the exponential peak is resolved
    points = [omega_c * p for p in (0.5, 1.0, 3.0, 10.0) if omega_c * p < b]
    val, err = integrate.quad(integrand, 0.0, b, points=points, epsabs=0.0,
                              epsrel=rtol, limit=500)
    scale = max(abs(val), 1e-300)
    if err > 1e3 * rtol * scale + 1e-300:
        raise ConvergenceError(f"reservoir quadrature did not converge (err={err:.3g}, val={val:.6g})")
    if tail_bound > 1e3 * rtol * scale:
        raise ConvergenceError(f"neglected tail {tail_bound:.3g} exceeds the quadrature accuracy")
    return val


def renormalized_coupling(gamma_x: float, bath: BathParams) -> float:
    """Spin-spin coupling after absorbing the reservoir reorganisation term.

    For the cubic density the sum over ``g_k^2/nu_k`` evaluates to ``eta*omega_c/pi``.
    """
    return gamma_x - bath.eta * bath.omega_c / math.pi


def reorganization_energy(density, omega_c: float, upper: float = QUAD_UPPER) -> float:
    """``(1/2pi) * int_0^inf density(w)/w dw`` by quadrature, for arbitrary densities."""
    nodes = getattr(density, "nodes", None)
    if nodes is not None:
        # piecewise linear a + b*w on each segment integrates to a*ln(w2/w1) + b*(w2 - w1)
        w, v = nodes
        if w[0] == 0.0 and v[0] != 0.0:
            raise ValidationError("density must vanish at omega = 0 for the integral to exist")
        w1, w2, v1, v2 = w[:-1], w[1:], v[:-1], v[1:]
        b = (v2 - v1) / (w2 - w1)
        a = v1 - b * w1
        with np.errstate(divide="ignore", invalid="ignore"):
            log_part = np.where(a == 0.0, 0.0, a * np.log(w2 / w1))
        return float(np.sum(log_part + b * (w2 - w1))) / (2 * math.pi)
    return reservoir_integral(lambda w: density(w) / w if w > 0 else 0.0, omega_c, upper) / (2 * math.pi)
