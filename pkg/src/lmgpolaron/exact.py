"""Finite-size LMG model in the Dicke basis of the maximal-spin sector.

Basis states are ordered by ascending magnetic quantum number ``m = -j, ..., j``.
All Hamiltonians handled here are real symmetric with bandwidth at most two and
are stored in LAPACK lower banded form (row ``k`` holds the ``k``-th subdiagonal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .core import LmgParams
from .errors import CapacityError, ConvergenceError, ValidationError

MAX_SPINS = 5000
#: largest N for which the full spectrum is computed densely
MAX_DENSE_SPINS = 2000


@dataclass(frozen=True)
class SpinMatrix:
    """Real symmetric banded matrix in the Dicke basis.

    ``bands[k, i]`` is the element ``(i + k, i)``; entries past the end of a
    subdiagonal are zero.
    """

    bands: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bands, dtype=float)
        if b.ndim != 2 or b.shape[0] > 3:
            raise ValidationError("bands must have shape (bandwidth+1, dim) with bandwidth <= 2")
        b.setflags(write=False)
        object.__setattr__(self, "bands", b)

    @property
    def dimension(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    @property
    def j(self) -> float:
        return (self.dimension - 1) / 2

    def to_dense(self) -> np.ndarray:
        n = self.dimension
        out = np.diag(self.bands[0])
        for k in range(1, self.bands.shape[0]):
            off = np.diag(self.bands[k, : n - k], -k)
            out = out + off + off.T
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = self.bands[0] * v
        for k in range(1, self.bands.shape[0]):
            sub = self.bands[k, : self.dimension - k]
            out[k:] += sub * v[:-k]
            out[:-k] += sub * v[k:]
        return out

    def parity_blocks(self) -> tuple["SpinMatrix", "SpinMatrix"]:
        """Split a matrix without odd couplings into its even- and odd-index blocks."""
        if self.bandwidth >= 1 and np.any(self.bands[1]):
            raise ValidationError("matrix couples neighbouring m; it has no parity blocks")
        blocks = []
        for start in (0, 1):
            diag = self.bands[0, start::2]
            if self.bandwidth == 2:
                off = self.bands[2, start::2].copy()
                off[-1] = 0.0
                blocks.append(SpinMatrix(np.vstack([diag, off])))
            else:
                blocks.append(SpinMatrix(diag[None, :]))
        return blocks[0], blocks[1]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    count: int


def _magnetic_numbers(n_spins: int) -> np.ndarray:
    j = n_spins / 2
    return np.arange(n_spins + 1) - j


def _check_capacity(n_spins: int, max_spins: int):
    if n_spins > max_spins:
        raise CapacityError(f"N={n_spins} exceeds the configured maximum {max_spins}")


def jz_matrix(n_spins: int) -> SpinMatrix:
    return SpinMatrix(_magnetic_numbers(n_spins)[None, :])


def jx_matrix(n_spins: int) -> SpinMatrix:
    """``Jx = (J+ + J-)/2`` with ``J+|m> = sqrt(j(j+1) - m(m+1)) |m+1>``."""
    j = n_spins / 2
    m = _magnetic_numbers(n_spins)
    bands = np.zeros((2, n_spins + 1))
    bands[1, :-1] = 0.5 * np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    return SpinMatrix(bands)


def build_lmg_hamiltonian(params: LmgParams, max_spins: int = MAX_SPINS) -> SpinMatrix:
    """Banded matrix of ``-h Jz - (gamma_x/N) Jx^2``."""
    n = params.n_spins
    _check_capacity(n, max_spins)
    h, g, j = params.h, params.gamma_x, params.j
    m = _magnetic_numbers(n)
    jj = j * (j + 1)
    up = jj - m * (m + 1)      # |<m+1|J+|m>|^2
    down = jj - m * (m - 1)    # |<m-1|J-|m>|^2
    bands = np.zeros((3, n + 1))
    bands[0] = -h * m - g / (4 * n) * (up + down)
    if n >= 2:
        bands[2, :-2] = -g / (4 * n) * np.sqrt(up[:-2] * (jj - (m[:-2] + 1) * (m[:-2] + 2)))
    return SpinMatrix(bands)


def lowest_eigenvalues(m: SpinMatrix, k: int) -> SpectrumResult:
    """The ``k`` smallest eigenvalues, ascending, from the banded LAPACK solver."""
    if not 1 <= k <= m.dimension:
        raise ValidationError(f"k must lie in [1, {m.dimension}], got {k}")
    try:
        w = linalg.eig_banded(m.bands, lower=True, eigvals_only=True,
                              select="i", select_range=(0, k - 1))
    except (linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"banded eigensolver failed for dimension {m.dimension}: {exc}") from exc
    if w.shape != (k,) or not np.all(np.isfinite(w)):
        raise ConvergenceError(f"banded eigensolver returned {w.shape[0]} values, expected {k}")
    return SpectrumResult(eigenvalues=np.sort(w), count=k)


def full_spectrum(params: LmgParams, vectors: bool = False):
    """All eigenvalues (and optionally eigenvectors) of the finite-size Hamiltonian."""
    _check_capacity(params.n_spins, MAX_DENSE_SPINS)
    m = build_lmg_hamiltonian(params)
    try:
        if vectors:
            return linalg.eigh(m.to_dense())
        return linalg.eig_banded(m.bands, lower=True, eigvals_only=True)
    except linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc


def ground_state_jz(params: LmgParams) -> float:
    """``<Jz>`` in the ground state, from the lowest eigenvector."""
    m = build_lmg_hamiltonian(params)
    try:
        _, v = linalg.eig_banded(m.bands, lower=True, select="i", select_range=(0, 0))
    except linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    v = v[:, 0]
    return float(np.dot(v * v, _magnetic_numbers(params.n_spins)))


def log_partition(params: LmgParams, beta: float) -> float:
    energies = full_spectrum(params)
    return float(logsumexp(-beta * energies))


def thermal_expectation_jz(params: LmgParams, beta: float, method: str = "eigenvectors") -> float:
    """Gibbs-state ``<Jz>`` of the isolated model at inverse temperature ``beta``.

    ``method="eigenvectors"`` averages the eigenstate expectation values with
    log-sum-exp weights; ``method="log_partition"`` instead takes a central finite
    difference of ``ln Z`` with respect to ``h`` (step ``1e-5 h``), which needs
    eigenvalues only.
    """
    if not beta > 0:
        raise ValidationError("beta must be > 0")
    if method == "eigenvectors":
        energies, vecs = full_spectrum(params, vectors=True)
        jz_n = (vecs * vecs).T @ _magnetic_numbers(params.n_spins)
        logw = -beta * (energies - energies[0])
        weights = np.exp(logw - logsumexp(logw))
        return float(weights @ jz_n)
    if method == "log_partition":
        step = 1e-5 * params.h
        lo = LmgParams(params.h - step, params.gamma_x, params.n_spins)
        hi = LmgParams(params.h + step, params.gamma_x, params.n_spins)
        # d ln Z / dh = beta <Jz>
        return (log_partition(hi, beta) - log_partition(lo, beta)) / (2 * step * beta)
    raise ValidationError(f"unknown method {method!r}")


def thermal_jz_grid(params: LmgParams, betas) -> np.ndarray:
    """``<Jz>`` for many temperatures sharing one eigendecomposition."""
    energies, vecs = full_spectrum(params, vectors=True)
    jz_n = (vecs * vecs).T @ _magnetic_numbers(params.n_spins)
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    logw = -np.outer(betas, energies - energies[0])
    logw -= logsumexp(logw, axis=1, keepdims=True)
    return np.exp(logw) @ jz_n
