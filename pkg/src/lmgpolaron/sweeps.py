"""Result tables and parameter sweeps.

Output convention: energies and rates are divided by ``h``, times multiplied by
``h``. Points the oscillator formulas refuse (inside a critical guard radius)
are kept as rows with NaN values and ``skipped = 1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bosonic import magnetization_polaron, oscillator_energies, solve_oscillator
from .config import RunConfig
from .core import LmgParams, bose_occupation
from .dissipation import (Frame, frame_coupling, frame_rates, steady_occupation_mode)
from .errors import CriticalPointError, ValidationError
from .exact import build_lmg_hamiltonian, lowest_eigenvalues, thermal_jz_grid
from .waiting import (WtdKind, sample_trajectory, wtd_analytic, wtd_histogram,
                      wtd_numeric)

UNITS = "energies and rates in units of h; times in units of 1/h"


@dataclass
class ResultTable:
    columns: list[str]
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def stamped(self) -> "ResultTable":
        meta = dict(self.metadata, timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))
        return replace(self, metadata=meta)

    def payload(self) -> dict:
        """Everything except the timestamp; equal payloads mean equal results."""
        meta = {k: v for k, v in self.metadata.items() if k != "timestamp"}
        return {"metadata": meta, "columns": list(self.columns),
                "rows": [[_num(v) for v in r] for r in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.metadata.items():
            buf.write(f"# {k} = {json.dumps(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(float(v)) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        d = self.payload()
        if "timestamp" in self.metadata:
            d["metadata"]["timestamp"] = self.metadata["timestamp"]
        return json.dumps(d, indent=1)

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                meta[k.strip()] = json.loads(v)
            elif line.strip():
                body.append(line)
        rows = list(csv.reader(body))
        return cls(columns=rows[0], rows=np.array([[float(x) for x in r] for r in rows[1:]]),
                   metadata=meta)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        d = json.loads(text)
        rows = np.array([[np.nan if v is None else v for v in r] for r in d["rows"]], dtype=float)
        return cls(columns=d["columns"], rows=rows, metadata=d["metadata"])


def _num(v: float):
    return None if math.isnan(v) else float(v)


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"code_version": __version__, "units": UNITS, **cfg.as_dict(), **extra}


def _frames(frame: str) -> list[Frame]:
    return [Frame.BMS, Frame.POLARON] if frame == "both" else [Frame(frame)]


def grid(start: float, stop: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ValidationError("a range needs at least 2 steps")
    return np.linspace(start, stop, int(steps))


# -- observables vs coupling, temperature and delay -----------------------------

def run_spectrum(cfg: RunConfig, gammas, k: int = 3,
                 methods=("exact", "bosonic")) -> ResultTable:
    """Lowest ``k`` energies per spin-coupling value, exact and oscillator."""
    h, n = cfg.h, cfg.n_spins
    if k > n + 1:
        raise ValidationError(f"k={k} exceeds the Hilbert-space dimension {n + 1}")
    cols = ["gamma_x"]
    for m in methods:
        if m not in ("exact", "bosonic"):
            raise ValidationError(f"unknown spectrum method {m!r}")
        cols += [f"{m}_E{i}" for i in range(k)]
    rows = []
    for g in np.asarray(gammas, dtype=float):
        row, skipped = [g / h], 0
        for m in methods:
            if m == "exact":
                e = lowest_eigenvalues(build_lmg_hamiltonian(LmgParams(h, g, n)), k).eigenvalues
            else:
                try:
                    e = oscillator_energies(solve_oscillator(h, g), k, n)
                except CriticalPointError:
                    e, skipped = np.full(k, np.nan), 1
            row += list(e / h)
        rows.append(row + [skipped])
    return ResultTable(cols + ["skipped"], rows, _meta(cfg, observable="spectrum", k=k))


def run_magnetization_grid(cfg: RunConfig, betas, gammas,
                           methods=("exact", "bosonic")) -> ResultTable:
    """``<Jz>/N`` on a temperature x coupling grid; the exact route ignores the bath."""
    h, n = cfg.h, cfg.n_spins
    betas = np.asarray(betas, dtype=float)
    out = {m: {} for m in methods}
    for g in np.asarray(gammas, dtype=float):
        for m in methods:
            if m == "exact":
                out[m][g] = thermal_jz_grid(LmgParams(h, g, n), betas) / n
            elif m == "bosonic":
                vals = []
                for b in betas:
                    try:
                        vals.append(magnetization_polaron(h, g, b, n) / n)
                    except CriticalPointError:
                        vals.append(np.nan)
                out[m][g] = np.array(vals)
            else:
                raise ValidationError(f"unknown magnetization method {m!r}")
    rows = []
    for g in np.asarray(gammas, dtype=float):
        for i, b in enumerate(betas):
            vals = [out[m][g][i] for m in methods]
            rows.append([b * h, g / h, *vals, float(any(map(math.isnan, vals)))])
    return ResultTable(["beta", "gamma_x", *[f"{m}_jz_per_spin" for m in methods], "skipped"],
                       rows, _meta(cfg, observable="magnetization"))


def _occupation_point(cfg: RunConfig, frame: Frame, g: float) -> list[float]:
    bath = cfg.bath
    try:
        sol = solve_oscillator(cfg.h, frame_coupling(cfg.h, g, frame, bath), 1e-6)
    except CriticalPointError:
        return [np.nan] * 3
    return [sol.omega / cfg.h, bose_occupation(sol.omega, bath.beta),
            steady_occupation_mode(cfg.h, g, bath.beta, frame, bath)]


def run_occupation(cfg: RunConfig, gammas, frame: str = "both") -> ResultTable:
    """Oscillator frequency and stationary ``<d^dag d>``, ``<a^dag a>`` per frame."""
    frames = _frames(frame)
    cols = ["gamma_x"]
    for f in frames:
        cols += [f"omega_{f.value}", f"occupation_diag_{f.value}", f"occupation_mode_{f.value}"]
    rows = []
    for g in np.asarray(gammas, dtype=float):
        vals = [v for f in frames for v in _occupation_point(cfg, f, g)]
        rows.append([g / cfg.h, *vals, float(any(map(math.isnan, vals)))])
    return ResultTable(cols + ["skipped"], rows, _meta(cfg, observable="occupation", frame=frame))


def run_wtd(cfg: RunConfig, kinds=tuple(WtdKind), taus=None, gammas=None, tau: float = 0.0,
            mode: str = "analytic", frame: str = "polaron", n_jumps: int = 10**6,
            bin_width: float = 0.05, max_tau: float = 15.0) -> ResultTable:
    """Waiting-time densities along ``tau`` (at ``cfg.gamma_x``) or along the coupling.

    ``mode`` is ``analytic``, ``numeric`` or ``trajectory``. In trajectory mode the
    ``tau`` axis is the histogram grid, ``bin_width`` and ``max_tau`` being in units
    of ``1/Gamma``.
    """
    kinds = [WtdKind(k) for k in kinds]
    if frame == "both":
        raise ValidationError("waiting times are computed for one frame at a time")
    fr = Frame(frame)
    kw = {"density": cfg.density} if fr is Frame.POLARON else {}
    h = cfg.h
    meta = _meta(cfg, observable="wtd", mode=mode, frame=frame)
    names = [f"w_{k.value}" for k in kinds]

    if gammas is not None:
        if mode == "trajectory":
            raise ValidationError("trajectory mode needs a tau cut")
        rows = []
        for g in np.asarray(gammas, dtype=float):
            try:
                rp = frame_rates(fr, h, float(g), cfg.bath, **kw)
            except CriticalPointError:
                rows.append([g / h, *[np.nan] * len(kinds), 1.0])
                continue
            ev = wtd_analytic if mode == "analytic" else wtd_numeric
            rows.append([g / h, *[ev(k, tau, rp.gamma_eff, rp.n_b) / h for k in kinds], 0.0])
        return ResultTable(["gamma_x", *names, "skipped"], rows, dict(meta, tau=tau * h))

    rp = frame_rates(fr, h, cfg.gamma_x, cfg.bath, **kw)
    if mode == "trajectory":
        rec = sample_trajectory(rp, n_jumps, cfg.seed)
        hists = [wtd_histogram(rec, k, bin_width / rp.gamma_eff, max_tau / rp.gamma_eff)
                 for k in kinds]
        t = hists[0].centers
        rows = np.column_stack([t * h, *[hh.density / h for hh in hists], np.zeros_like(t)])
        return ResultTable(["tau", *names, "skipped"], rows, dict(meta, n_jumps=n_jumps))
    if taus is None:
        raise ValidationError("give either taus or gammas")
    t = np.asarray(taus, dtype=float)
    if mode == "analytic":
        cols = [wtd_analytic(k, t, rp.gamma_eff, rp.n_b) for k in kinds]
    elif mode == "numeric":
        cols = [wtd_numeric(k, t, rp.gamma_eff, rp.n_b) for k in kinds]
    else:
        raise ValidationError(f"unknown wtd mode {mode!r}")
    rows = np.column_stack([t * h, *[c / h for c in cols], np.zeros_like(t)])
    return ResultTable(["tau", *names, "skipped"], rows, meta)


# -- generic sweeps ------------------------------------------------------------

OBSERVABLES = ("omega", "occupation_diag", "occupation_mode", "magnetization",
               "w_ee", "w_ae", "w_ea", "w_aa")


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional scan of ``variable`` over ``linspace(start, stop, steps)``.

    ``temperature`` values are ``1/beta`` in units of ``h``; ``tau`` values are in
    units of ``1/h``.
    """

    variable: str
    start: float
    stop: float
    steps: int
    fixed: RunConfig
    outputs: tuple = ("omega", "occupation_diag", "occupation_mode")
    frame: str = "both"
    tau: float = 0.0

    def __post_init__(self):
        if self.variable not in ("gamma_x", "temperature", "tau"):
            raise ValidationError(f"cannot sweep {self.variable!r}")
        if self.steps < 2:
            raise ValidationError("steps must be >= 2")
        bad = [o for o in self.outputs if o not in OBSERVABLES]
        if bad:
            raise ValidationError(f"unknown observables {bad}")
        if self.frame not in ("bms", "polaron", "both"):
            raise ValidationError(f"unknown frame {self.frame!r}")

    def values(self) -> np.ndarray:
        return grid(self.start, self.stop, self.steps)

    def columns(self) -> list[str]:
        cols = [self.variable]
        for o in self.outputs:
            if o == "magnetization":
                cols.append("jz_per_spin")
            else:
                cols += [f"{o}_{f.value}" for f in _frames(self.frame)]
        return cols + ["skipped"]


def sweep_point(spec: SweepSpec, value: float) -> list[float]:
    cfg = spec.fixed
    h = cfg.h
    g, beta, tau = cfg.gamma_x, cfg.bath.beta, spec.tau / h
    if spec.variable == "gamma_x":
        g = value * h
    elif spec.variable == "temperature":
        beta = 1 / (value * h)
    else:
        tau = value / h
    bath = replace(cfg, gamma_x=g, beta=beta).bath
    row = [value]
    for o in spec.outputs:
        if o == "magnetization":
            try:
                row.append(magnetization_polaron(h, g, beta, cfg.n_spins) / cfg.n_spins)
            except CriticalPointError:
                row.append(np.nan)
            continue
        for f in _frames(spec.frame):
            try:
                if o.startswith("w_"):
                    kw = {"density": cfg.density} if f is Frame.POLARON else {}
                    rp = frame_rates(f, h, g, bath, **kw)
                    row.append(wtd_analytic(o[2:], tau, rp.gamma_eff, rp.n_b) / h)
                    continue
                sol = solve_oscillator(h, frame_coupling(h, g, f, bath), 1e-6)
                if o == "omega":
                    row.append(sol.omega / h)
                elif o == "occupation_diag":
                    row.append(bose_occupation(sol.omega, beta))
                else:
                    row.append(steady_occupation_mode(h, g, beta, f, bath))
            except CriticalPointError:
                row.append(np.nan)
    return row + [float(any(map(math.isnan, row)))]


def _point_job(args):
    return sweep_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> ResultTable:
    """Evaluate every sweep point; with ``workers > 1`` points run in a process pool.

    Row order always follows the sweep grid.
    """
    jobs = [(spec, float(v)) for v in spec.values()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_point_job, jobs))
    else:
        rows = [_point_job(j) for j in jobs]
    meta = _meta(spec.fixed, observable="sweep", variable=spec.variable,
                 range=[spec.start, spec.stop, spec.steps], outputs=list(spec.outputs),
                 frame=spec.frame, tau=spec.tau)
    return ResultTable(spec.columns(), rows, meta)
