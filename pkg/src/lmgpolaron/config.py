"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

from .core import BathParams, LmgParams
from .errors import ValidationError


class ConfigError(ValidationError):
    """Bad configuration entry; carries the offending line and field when known."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None,
                 path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class RunConfig:
    """Every parameter needed to reproduce one run.

    ``eta``, ``omega_c`` and ``beta`` default to the standard reservoir
    (``2 pi 0.1``, ``0.5 h``, ``1.79/h``) when left as ``None``.
    """

    h: float
    gamma_x: float = 0.5
    n_spins: int = 1000
    eta: float | None = None
    omega_c: float | None = None
    beta: float | None = None
    frame: str = "both"
    density: str = "bare"
    seed: int = 0

    def __post_init__(self):
        if self.frame not in ("bms", "polaron", "both"):
            raise ConfigError("must be one of bms, polaron, both", field="frame")
        if self.density not in ("bare", "displacement"):
            raise ConfigError("must be bare or displacement", field="density")
        self.lmg  # validates h, gamma_x, n_spins
        self.bath

    def resolved(self) -> "RunConfig":
        """Copy with the reservoir defaults filled in explicitly."""
        b = BathParams.standard(self.h)
        return replace(self,
                       eta=b.eta if self.eta is None else self.eta,
                       omega_c=b.omega_c if self.omega_c is None else self.omega_c,
                       beta=b.beta if self.beta is None else self.beta)

    @property
    def lmg(self) -> LmgParams:
        return LmgParams(self.h, self.gamma_x, self.n_spins)

    @property
    def bath(self) -> BathParams:
        r = self if None not in (self.eta, self.omega_c, self.beta) else self.resolved()
        return BathParams(eta=r.eta, omega_c=r.omega_c, beta=r.beta)

    def as_dict(self) -> dict:
        return asdict(self.resolved())

    def format(self) -> str:
        """Config-file text; floats use ``repr`` so parsing it back is exact."""
        return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                       for k, v in self.as_dict().items())


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str, line: int | None, path):
    kind = _TYPES[key]
    try:
        if "int" in kind:
            v = float(raw)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if "float" in kind:
            v = float(raw)
            if math.isnan(v):
                raise ValueError
            return v
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {'an integer' if 'int' in kind else 'a number'}",
                          line, key, path) from None
    return raw.strip().lower()


def parse_config_text(text: str, path=None, overrides: dict | None = None) -> RunConfig:
    """Parse config text; ``overrides`` (already typed) win over file values."""
    values: dict = {}
    lines: dict = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError("expected 'key = value'", no, None, path)
        if key not in _TYPES:
            raise ConfigError("unknown key", no, key, path)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", no, key, path)
        if not val.strip():
            raise ConfigError("missing value", no, key, path)
        values[key] = _convert(key, val.strip(), no, path)
        lines[key] = no
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    if "h" not in values:
        raise ConfigError("required field is missing", None, "h", path)
    try:
        return RunConfig(**values).resolved()
    except ConfigError:
        raise
    except ValidationError as exc:
        bad = next((k for k in values if k in str(exc)), None)
        raise ConfigError(str(exc), lines.get(bad), bad, path) from None


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return parse_config_text(text, path, overrides)
