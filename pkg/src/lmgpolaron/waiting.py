"""Waiting-time distributions between emission and absorption jumps.

Three routes to the same quantity:

* :func:`wtd_analytic` evaluates the closed forms,
* :func:`wtd_numeric` sums the jump/no-jump propagation over Fock states,
* :func:`sample_trajectory` + :func:`wtd_histogram` sample the birth-death
  unravelling and histogram consecutive jump pairs.

For a stationary trajectory, the state right after a jump of type ``nu`` is the
normalised ``J_nu rho_ss``, so the interval to the *next* jump, split by that
jump's type, has exactly the density ``w_{mu nu}``.
"""

from __future__ import annotations

import csv
import enum
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import integrate

from .core import BathParams
from .dissipation import Frame, PolaronDensity, RatePair, fock_cutoff, frame_rates
from .errors import (CriticalPointError, InsufficientStatisticsError, TruncationError,
                     ValidationError)

EMISSION = 0
ABSORPTION = 1
_LETTER = {EMISSION: "e", ABSORPTION: "a"}
_CODE = {"e": EMISSION, "a": ABSORPTION}


class WtdKind(enum.Enum):
    """``w_{mu nu}``: the first letter is the later jump, the second the earlier one."""

    EE = "ee"
    AE = "ae"
    EA = "ea"
    AA = "aa"

    @property
    def later(self) -> int:
        return _CODE[self.value[0]]

    @property
    def earlier(self) -> int:
        return _CODE[self.value[1]]


def _check_wtd_args(kind: WtdKind, tau, gamma_rate: float, n_b: float):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or np.any(np.isnan(tau)):
        raise ValidationError("tau must be >= 0")
    if not gamma_rate > 0:
        raise ValidationError("gamma_rate must be > 0")
    if n_b < 0 or (n_b == 0 and kind is not WtdKind.EA):
        raise ValidationError(f"n_b must be > 0 for {kind.value} (n_b = 0 is allowed for ea only)")
    return tau


def wtd_analytic(kind: WtdKind | str, tau, gamma_rate: float, n_b: float):
    """Closed-form waiting-time density.

    Written with ``u = exp(-(1+2n) Gamma tau)`` so that nothing overflows at large
    ``tau``; algebraically identical to the exponentially growing textbook form.
    """
    kind = WtdKind(kind)
    tau = _check_wtd_args(kind, tau, gamma_rate, n_b)
    n = n_b
    x = gamma_rate * tau
    u = np.exp(-(1 + 2 * n) * x)
    den = ((1 + n) - n * u) ** 3
    if kind in (WtdKind.EE, WtdKind.AA):
        out = 2 * gamma_rate * n * (1 + n) * np.exp(-(1 + 3 * n) * x) / den
    elif kind is WtdKind.AE:
        out = gamma_rate * n * np.exp(-n * x) * (n * u + 1 + n) / den
    else:
        out = gamma_rate * (1 + n) * np.exp(-(1 + 3 * n) * x) * (n * u + 1 + n) / den
    return float(out) if out.ndim == 0 else out


def wtd_numeric(kind: WtdKind | str, tau, gamma_rate: float, n_b: float,
                n_max: int | None = None):
    """Waiting-time density by explicit summation over Fock states.

    The thermal populations are hit with the earlier jump, every ``|n><n|`` decays
    with its no-jump rate for time ``tau``, and the later jump's trace is taken.
    Normalised by the summed weight after the first jump.
    """
    kind = WtdKind(kind)
    tau = _check_wtd_args(kind, tau, gamma_rate, n_b)
    if n_b == 0:
        raise ValidationError("the Fock sum needs n_b > 0")
    if n_max is None:
        n_max = fock_cutoff(n_b) + 20
    r = n_b / (1 + n_b)
    if r ** (n_max + 1) > 1e-10:
        raise TruncationError(f"n_max={n_max} leaves tail mass {r ** (n_max + 1):.3g} > 1e-10")
    f_e = gamma_rate * (1 + n_b)
    f_a = gamma_rate * n_b
    n = np.arange(n_max + 1, dtype=float)
    p = np.exp(np.arange(n_max + 2) * math.log(r)) * (1 - r)

    if kind.earlier == EMISSION:
        after = f_e * p[1:] * (n + 1)          # d rho d^dag: |n+1> -> |n>
    else:
        after = np.zeros_like(n)
        after[1:] = f_a * p[:-2] * n[1:]       # d^dag rho d: |n-1> -> |n>
    norm = after.sum()
    later = f_e * n if kind.later == EMISSION else f_a * (n + 1)
    decay_rate = gamma_rate * ((1 + n_b) * n + n_b * (1 + n))
    t = np.atleast_1d(tau)
    out = np.exp(-np.outer(t, decay_rate)) @ (later * after) / norm
    return float(out[0]) if np.ndim(tau) == 0 else out.reshape(np.shape(tau))


# -- trajectories -----------------------------------------------------------------

@dataclass
class JumpRecord:
    """Time-ordered jumps of one birth-death trajectory.

    ``kinds`` holds 0 for emission and 1 for absorption. ``stream`` identifies the
    child generator when several chains are spawned from one ``seed``.
    """

    times: np.ndarray
    kinds: np.ndarray
    seed: int | None = None
    stream: int | None = None
    initial_occupation: int = 0
    total_time: float = field(default=0.0)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.kinds = np.asarray(self.kinds, dtype=np.int8)
        if self.times.shape != self.kinds.shape or self.times.ndim != 1:
            raise ValidationError("times and kinds must be 1-d arrays of equal length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValidationError("jump times must be strictly increasing")
        if not self.total_time and self.times.size:
            self.total_time = float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size

    @property
    def events(self) -> list[tuple[float, str]]:
        return [(float(t), _LETTER[int(k)]) for t, k in zip(self.times, self.kinds)]

    def occupations(self) -> np.ndarray:
        """Occupation right after each jump (emission lowers, absorption raises)."""
        steps = np.where(self.kinds == EMISSION, -1, 1)
        return self.initial_occupation + np.cumsum(steps)

    def mean_occupation(self, n_batches: int = 50) -> tuple[float, float]:
        """Time-averaged occupation and a batch-means standard error."""
        occ = np.concatenate([[self.initial_occupation], self.occupations()[:-1]])
        dt = np.diff(np.concatenate([[0.0], self.times]))
        mean = float(occ @ dt / dt.sum())
        # batches of equal jump count; weighted by their durations
        idx = np.array_split(np.arange(occ.size), n_batches)
        bm = np.array([occ[i] @ dt[i] / dt[i].sum() for i in idx])
        bw = np.array([dt[i].sum() for i in idx])
        var = np.sum(bw**2 * (bm - mean) ** 2) / bw.sum() ** 2 * n_batches / (n_batches - 1)
        return mean, float(math.sqrt(var))

    # serialisation -----------------------------------------------------------

    def _meta(self) -> dict:
        return {"seed": self.seed, "stream": self.stream,
                "initial_occupation": self.initial_occupation,
                "total_time": repr(self.total_time)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            for k, v in self._meta().items():
                fh.write(f"# {k}={v}\n")
            w = csv.writer(fh)
            w.writerow(["time", "type"])
            for t, k in zip(self.times, self.kinds):
                w.writerow([repr(float(t)), _LETTER[int(k)]])

    @classmethod
    def from_csv(cls, path) -> "JumpRecord":
        meta, times, kinds = {}, [], []
        with open(path, newline="") as fh:
            rows = [line for line in fh]
        body = []
        for line in rows:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            else:
                body.append(line)
        reader = csv.DictReader(body)
        for row in reader:
            times.append(float(row["time"]))
            kinds.append(_CODE[row["type"].strip()])
        return cls(times=np.array(times), kinds=np.array(kinds, dtype=np.int8),
                   seed=_opt_int(meta.get("seed")), stream=_opt_int(meta.get("stream")),
                   initial_occupation=int(meta.get("initial_occupation", 0)),
                   total_time=float(meta.get("total_time", 0.0)))

    _HEADER = struct.Struct("<4sHqqqd")
    _DTYPE = np.dtype([("time", "<f8"), ("type", "u1")])

    def to_binary(self, path) -> None:
        """Flat little-endian file: fixed header, then packed ``(f8 time, u1 type)`` records."""
        rec = np.empty(len(self), dtype=self._DTYPE)
        rec["time"] = self.times
        rec["type"] = self.kinds
        with open(path, "wb") as fh:
            fh.write(self._HEADER.pack(b"LMGJ", 1,
                                       -1 if self.seed is None else self.seed,
                                       -1 if self.stream is None else self.stream,
                                       self.initial_occupation, self.total_time))
            fh.write(rec.tobytes())

    @classmethod
    def from_binary(cls, path) -> "JumpRecord":
        with open(path, "rb") as fh:
            head = fh.read(cls._HEADER.size)
            magic, version, seed, stream, n0, total = cls._HEADER.unpack(head)
            if magic != b"LMGJ" or version != 1:
                raise ValidationError(f"{path}: not a jump record file")
            rec = np.frombuffer(fh.read(), dtype=cls._DTYPE)
        return cls(times=rec["time"].copy(), kinds=rec["type"].astype(np.int8),
                   seed=None if seed < 0 else seed, stream=None if stream < 0 else stream,
                   initial_occupation=n0, total_time=total)


def _opt_int(v):
    return None if v in (None, "", "None") else int(v)


def _rng(seed: int, stream: int | None) -> np.random.Generator:
    if stream is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def sample_trajectory(rates: RatePair, n_jumps: int, seed: int,
                      stream: int | None = None) -> JumpRecord:
    """Gillespie simulation of the oscillator's birth-death chain.

    From occupation ``n`` the chain emits at rate ``F_e n`` and absorbs at rate
    ``F_a (n+1)``. The initial occupation is drawn from the thermal distribution.
    """
    if n_jumps < 0:
        raise ValidationError("n_jumps must be >= 0")
    f_e, f_a = rates.f_emit, rates.f_absorb
    if not (f_a > 0 and f_e > f_a):
        raise ValidationError("sampling needs 0 < f_absorb < f_emit")
    rng = _rng(seed, stream)
    r = f_a / f_e
    n = int(rng.geometric(1 - r)) - 1
    n0 = n
    waits = rng.standard_exponential(n_jumps)
    u = rng.random(n_jumps)
    times = np.empty(n_jumps)
    kinds = np.empty(n_jumps, dtype=np.int8)
    t = 0.0
    for i in range(n_jumps):
        re = f_e * n
        total = re + f_a * (n + 1)
        t += waits[i] / total
        times[i] = t
        if u[i] * total < re:
            n -= 1
            kinds[i] = EMISSION
        else:
            n += 1
            kinds[i] = ABSORPTION
    return JumpRecord(times=times, kinds=kinds, seed=seed, stream=stream, initial_occupation=n0)


def _sample_stream(args):
    rates, n_jumps, seed, stream = args
    return sample_trajectory(rates, n_jumps, seed, stream)


def sample_trajectories(rates: RatePair, n_jumps: int, n_chains: int, seed: int,
                        workers: int = 1) -> list[JumpRecord]:
    """Independent chains on spawned streams ``0..n_chains-1`` of ``seed``."""
    jobs = [(rates, n_jumps, seed, k) for k in range(n_chains)]
    if workers <= 1:
        return [_sample_stream(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sample_stream, jobs))


@dataclass(frozen=True)
class WtdHistogram:
    kind: WtdKind
    edges: np.ndarray
    counts: np.ndarray
    n_conditioning: int

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def density(self) -> np.ndarray:
        """Counts per conditioning jump per unit time."""
        return self.counts / (self.n_conditioning * self.bin_width)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def wtd_histogram(record: JumpRecord | Iterable[JumpRecord], kind: WtdKind | str,
                  bin_width: float, max_tau: float, min_events: int = 10_000) -> WtdHistogram:
    """Histogram of intervals from a ``nu`` jump to the next jump, when that one is ``mu``.

    Normalised per conditioning jump, so the ``mu = e`` and ``mu = a`` histograms
    for the same ``nu`` integrate to one together (up to the ``max_tau`` cut).
    Several records are merged by summing their pair counts.
    """
    kind = WtdKind(kind)
    records = [record] if isinstance(record, JumpRecord) else list(record)
    if not bin_width > 0 or not max_tau > bin_width:
        raise ValidationError("need 0 < bin_width < max_tau")
    n_bins = int(round(max_tau / bin_width))
    edges = np.arange(n_bins + 1) * bin_width
    counts = np.zeros(n_bins, dtype=np.int64)
    n_cond = 0
    for rec in records:
        if len(rec) < 2:
            continue
        prev, nxt = rec.kinds[:-1], rec.kinds[1:]
        dt = np.diff(rec.times)
        cond = prev == kind.earlier
        n_cond += int(cond.sum())
        counts += np.histogram(dt[cond & (nxt == kind.later)], bins=edges)[0]
    if n_cond < min_events:
        raise InsufficientStatisticsError(
            f"only {n_cond} conditioning '{kind.value[1]}' jumps; need at least {min_events}")
    return WtdHistogram(kind=kind, edges=edges, counts=counts, n_conditioning=n_cond)


def bin_averaged_wtd(kind: WtdKind | str, edges, gamma_rate: float, n_b: float) -> np.ndarray:
    """Closed-form density averaged over each histogram bin."""
    kind = WtdKind(kind)
    edges = np.asarray(edges, dtype=float)
    def w(t):
        return wtd_analytic(kind, t, gamma_rate, n_b)

    vals = [integrate.quad(w, a, b, epsabs=1e-14)[0] for a, b in zip(edges[:-1], edges[1:])]
    return np.asarray(vals) / np.diff(edges)


def histogram_l1(hist: WtdHistogram, gamma_rate: float, n_b: float) -> float:
    """L1 distance between the sampled and the bin-averaged closed-form density."""
    ref = bin_averaged_wtd(hist.kind, hist.edges, gamma_rate, n_b)
    return float(np.sum(np.abs(hist.density - ref)) * hist.bin_width)


# -- scans over the coupling ------------------------------------------------------

@dataclass(frozen=True)
class PeakScan:
    frame: Frame
    tau: float
    gamma_x: np.ndarray
    values: np.ndarray
    skipped: np.ndarray


def wtd_peak_scan(frame: Frame | str, gamma_range, tau_fixed: float, h: float,
                  bath: BathParams, kind: WtdKind | str = WtdKind.EE,
                  density: PolaronDensity | str = PolaronDensity.BARE) -> PeakScan:
    """``w_{kind}(tau_fixed)`` as a function of the bare coupling.

    Points inside the critical guard radius of the frame are marked skipped and
    carry NaN.
    """
    frame = Frame(frame)
    gammas = np.asarray(gamma_range, dtype=float)
    values = np.full(gammas.shape, np.nan)
    skipped = np.zeros(gammas.shape, dtype=bool)
    kw = {"density": density} if frame is Frame.POLARON else {}
    for i, g in enumerate(gammas):
        try:
            rp = frame_rates(frame, h, float(g), bath, **kw)
        except CriticalPointError:
            skipped[i] = True
            continue
        values[i] = wtd_analytic(kind, tau_fixed, rp.gamma_eff, rp.n_b)
    return PeakScan(frame=frame, tau=tau_fixed, gamma_x=gammas, values=values, skipped=skipped)
