"""Plain-text ``key = value`` job configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .capacity import AXES
from .opa import Correction

MODES = ("spectrum", "variance", "capacity", "sweep", "simulate", "figures")
UNITS = ("nats", "bits")


class ConfigError(ValueError):
    pass


def _float(v):
    return float(v)


def _int(v):
    try:
        return int(str(v).strip())
    except ValueError:
        pass
    x = float(v)
    if not x.is_integer():
        raise ValueError(f"{v!r} is not an integer")
    return int(x)


def _floats(v):
    items = [float(x) for x in str(v).split(",") if x.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(items)


def _choice(options):
    def parse(v):
        v = str(v).strip()
        if v not in options:
            raise ValueError(f"{v!r} not in {options}")
        return v
    return parse


# key: (parser, default, check, description)
SCHEMA = {
    "g": (_float, math.log(3), lambda x: x >= 0, "OPA coupling strength (or give exp_r00)"),
    "detuning_offset": (_float, 0.0, None, "collinear phase mismatch (2k - k_p) l"),
    "temporal_dispersion": (_float, 0.0, None, "coefficient of omega^2 in the mismatch"),
    "qc_convention": (_float, 8.0, lambda x: x > 0, "diffraction term per kappa^2"),
    "correction": (_choice(tuple(c.value for c in Correction)), "none", None, "phase correction mode"),
    "d_A": (_float, 1.0, lambda x: x > 0, "relative linear density of image elements"),
    "P": (_float, 1.0, lambda x: x >= 0, "dimensionless photon flux"),
    "temporal_band": (_float, 1.0, lambda x: x > 0, "signal temporal band"),
    "tol": (_float, 1e-8, lambda x: x > 0, "absolute quadrature tolerance"),
    "seed": (_int, 0, lambda x: 0 <= x < 2**64, "master seed"),
    "n_samples": (_int, 1000, lambda x: x >= 1, "Monte-Carlo samples"),
    "blocks": (_int, 10, lambda x: x >= 2, "jackknife blocks"),
    "nx": (_int, 64, lambda x: x >= 1, "lattice size along kappa_x"),
    "ny": (_int, 64, lambda x: x >= 1, "lattice size along kappa_y"),
    "nt": (_int, 16, lambda x: x >= 1, "lattice size along omega"),
    "kappa_step": (_float, 0.125, lambda x: x > 0, "lattice spacing in kappa"),
    "omega_step": (_float, 1 / 15, lambda x: x > 0, "lattice spacing in omega"),
    "kappa_max": (_float, 4.0, lambda x: x > 0, "largest tabulated kappa"),
    "n_kappa": (_int, 201, lambda x: x >= 2, "tabulated kappa points"),
    "omega": (_floats, (0.0,), None, "tabulated omega values, comma separated"),
    "axis": (_choice(AXES), "d_A", None, "sweep axis"),
    "values": (_floats, (0.25, 0.5, 1.0, 2.0, 4.0, 8.0), None, "sweep values, comma separated"),
    "units": (_choice(UNITS), "nats", None, "information units"),
    "threads": (_int, 1, lambda x: x >= 1, "worker threads (advisory)"),
}


def defaults() -> dict:
    return {k: v[1] for k, v in SCHEMA.items()}


@dataclass(frozen=True)
class JobSpec:
    mode: str = "capacity"
    params: dict = field(default_factory=defaults)

    def __getitem__(self, key):
        return self.params[key]


def _check(key, value, line=None):
    parser, _, check, _ = SCHEMA[key]
    where = f"line {line}: " if line is not None else ""
    try:
        parsed = parser(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}bad value for {key}: {exc}") from None
    if check is not None and not check(parsed):
        raise ConfigError(f"{where}{key} out of range: {parsed!r}")
    if isinstance(parsed, float) and not math.isfinite(parsed):
        raise ConfigError(f"{where}{key} must be finite")
    return parsed


def update(spec: JobSpec, **overrides) -> JobSpec:
    """New spec with validated overrides; ``None`` values are ignored."""
    params = dict(spec.params)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        params[key] = _check(key, value)
    return JobSpec(spec.mode, params)


def parse_config(text: str, mode: str | None = None) -> JobSpec:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    params = defaults()
    seen = {}
    file_mode = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        if key == "mode":
            if value not in MODES:
                raise ConfigError(f"line {lineno}: mode {value!r} not in {MODES}")
            file_mode = value
        elif key == "exp_r00":
            r = _float(value) if _is_number(value) else None
            if r is None or not r >= 1:
                raise ConfigError(f"line {lineno}: exp_r00 must be a number >= 1")
            params["g"] = math.log(r)
        elif key in SCHEMA:
            params[key] = _check(key, value, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if "g" in seen and "exp_r00" in seen:
        raise ConfigError(f"line {seen['exp_r00']}: give either g or exp_r00, not both")
    return JobSpec(mode or file_mode or "capacity", params)


def _is_number(v):
    try:
        float(v)
    except ValueError:
        return False
    return True


def _render_value(v):
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def render(spec: JobSpec) -> str:
    lines = [f"mode = {spec.mode}"]
    lines += [f"{k} = {_render_value(spec.params[k])}" for k in SCHEMA]
    return "\n".join(lines) + "\n"


def help_text() -> str:
    return "\n".join(
        f"  {k:<20} {_render_value(v[1]):<28} {v[3]}" for k, v in SCHEMA.items()
    ) + "\n  exp_r00              (sets g = ln exp_r00)"
