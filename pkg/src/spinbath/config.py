"""Run configuration: defaults, JSON config files and flag overrides.

Config files are JSON objects whose keys mirror the command-line flags
(underscores instead of dashes) plus two structured keys, ``observable`` and
``env``.  ``schema_version`` must be 1.  Complex numbers are written either
as plain numbers or as ``[re, im]`` pairs.  Example::

    {
      "schema_version": 1,
      "case": "general",
      "n": 2,
      "seed": 7,
      "observable": {
        "system": {"s_uu": 1.0, "s_dd": -1.0, "s_ud": [0.2, 0.1]},
        "particles": [
          {"e_uu": 0.5, "e_dd": -0.5, "e_ud": 0},
          {"e_uu": 1, "e_dd": 1, "e_ud": [0.3, -0.4]}
        ]
      }
    }

Precedence is built-in defaults, then the file, then flags.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .ensemble import PHASE_MODES, SamplingPolicy, sample_model
from .model import (
    EnvQubit,
    ModelConfig,
    ParticleObservable,
    SystemObservable,
    SystemQubit,
    TimeGrid,
    spin_x_block,
)

SCHEMA_VERSION = 1
OUT_ENV_VAR = "SPINBATH_OUT"
CASES = ("case1", "case2", "case3", "general")
_CASE_ALIASES = {"1": "case1", "2": "case2", "3": "case3"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending setting."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV_VAR, "spinbath_out"))


@dataclass(frozen=True)
class RunConfig:
    case: str = "case1"
    n: int = 200
    p: int | None = None  # case3; None means p = n
    j: int = 1  # case2, 1-based
    seed: int = 0
    g_min: float = 0.0
    g_max: float = 1.0
    phase_mode: str = "real_amplitudes"
    a: complex = complex(1 / math.sqrt(2))
    b: complex = complex(1 / math.sqrt(2))
    t_start: float = 0.0
    t_max: float = 80.0
    steps: int = 2000
    threshold: float | None = None  # None: per-subcommand default
    persistence: int = 5
    samples: int = 1
    out: Path = field(default_factory=default_out)
    single_branch: bool = False
    metric: str = "re"  # recurrence subcommand: "re" (Re r1) or "abs2"
    system_block: SystemObservable | None = None
    particle_blocks: tuple[ParticleObservable, ...] | None = None
    env: tuple[EnvQubit, ...] | None = None

    @property
    def policy(self) -> SamplingPolicy:
        return SamplingPolicy(self.seed, self.g_min, self.g_max, self.phase_mode)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_start, self.t_max, self.steps)

    @property
    def p_eff(self) -> int:
        return self.n if self.p is None else self.p

    @property
    def system(self) -> SystemQubit:
        return SystemQubit(self.a, self.b)

    def model(self) -> ModelConfig:
        if self.env is not None:
            return ModelConfig(self.system, self.env)
        return sample_model(self.policy, self.n, self.system)

    def sys_block(self) -> SystemObservable:
        return self.system_block or SystemObservable(0.0, 0.0, 0.5)

    def case2_block(self) -> ParticleObservable:
        return self.particle_blocks[0] if self.particle_blocks else spin_x_block()

    def case3_blocks(self) -> tuple[ParticleObservable, ...]:
        if self.particle_blocks is not None:
            return self.particle_blocks
        return (spin_x_block(),) * self.p_eff


def _complex(value: Any, name: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = value
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        re, im = value, 0.0
    elif isinstance(value, complex):
        return value
    else:
        raise ConfigError(name, f"expected a number or [re, im], got {value!r}")
    try:
        return complex(float(re), float(im))
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number or [re, im], got {value!r}") from None


def _particle_block(d: Any, name: str) -> ParticleObservable:
    if not isinstance(d, Mapping):
        raise ConfigError(name, "expected an object with e_uu, e_dd, e_ud")
    try:
        return ParticleObservable(float(d["e_uu"]), float(d["e_dd"]), _complex(d.get("e_ud", 0), f"{name}.e_ud"))
    except KeyError as exc:
        raise ConfigError(name, f"missing key {exc.args[0]!r}") from None


def _system_block(d: Any, name: str) -> SystemObservable:
    if not isinstance(d, Mapping):
        raise ConfigError(name, "expected an object with s_uu, s_dd, s_ud")
    try:
        return SystemObservable(float(d["s_uu"]), float(d["s_dd"]), _complex(d.get("s_ud", 0), f"{name}.s_ud"))
    except KeyError as exc:
        raise ConfigError(name, f"missing key {exc.args[0]!r}") from None


def _env(items: Any) -> tuple[EnvQubit, ...]:
    if not isinstance(items, list) or not items:
        raise ConfigError("env", "expected a non-empty list of {alpha, beta, g}")
    env = []
    for i, d in enumerate(items, start=1):
        name = f"env[{i}]"
        try:
            env.append(EnvQubit(_complex(d["alpha"], name + ".alpha"), _complex(d["beta"], name + ".beta"), float(d["g"])))
        except KeyError as exc:
            raise ConfigError(name, f"missing key {exc.args[0]!r}") from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(name, str(exc)) from None
    return tuple(env)


def parse_config_bytes(data: bytes) -> dict[str, Any]:
    """Decode a JSON config file into raw settings (not yet validated)."""
    try:
        raw = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    version = raw.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    return raw


_SCALARS = {
    "case": str, "n": int, "p": int, "j": int, "seed": int,
    "g_min": float, "g_max": float, "phase_mode": str,
    "t_start": float, "t_max": float, "steps": int, "threshold": float,
    "persistence": int, "samples": int, "out": Path, "single_branch": bool,
    "metric": str,
}


def build_run_config(file_settings: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Merge file settings and flag overrides over the defaults and validate."""
    merged: dict[str, Any] = dict(file_settings or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    kwargs: dict[str, Any] = {}
    for key, value in merged.items():
        if key in _SCALARS:
            kind = _SCALARS[key]
            if kind is int and (isinstance(value, bool) or (isinstance(value, float) and not value.is_integer())):
                raise ConfigError(key, f"expected an integer, got {value!r}")
            try:
                kwargs[key] = kind(value)
            except (TypeError, ValueError):
                raise ConfigError(key, f"cannot interpret {value!r}") from None
        elif key in ("a", "b"):
            kwargs[key] = _complex(value, key)
        elif key == "env":
            kwargs["env"] = _env(value)
        elif key == "observable":
            if not isinstance(value, Mapping):
                raise ConfigError("observable", "expected an object")
            if "system" in value:
                kwargs["system_block"] = _system_block(value["system"], "observable.system")
            if "particles" in value:
                parts = value["particles"]
                if not isinstance(parts, list):
                    raise ConfigError("observable.particles", "expected a list")
                kwargs["particle_blocks"] = tuple(
                    _particle_block(d, f"observable.particles[{i}]") for i, d in enumerate(parts, start=1)
                )
        else:
            raise ConfigError(key, "unknown setting")

    case = str(kwargs.get("case", "case1")).lower()
    kwargs["case"] = _CASE_ALIASES.get(case, case)
    if "env" in kwargs:
        if "n" in kwargs and kwargs["n"] != len(kwargs["env"]):
            raise ConfigError("n", f"n={kwargs['n']} but env lists {len(kwargs['env'])} particles")
        kwargs["n"] = len(kwargs["env"])
    rc = RunConfig(**kwargs)
    validate(rc)
    return rc


def validate(rc: RunConfig) -> None:
    if rc.case not in CASES:
        raise ConfigError("case", f"expected one of 1, 2, 3, general; got {rc.case!r}")
    if rc.n < 1:
        raise ConfigError("n", "N must be >= 1")
    if rc.case == "case2" and not 1 <= rc.j <= rc.n:
        raise ConfigError("j", f"j={rc.j} exceeds N={rc.n}" if rc.j > rc.n else "j must be >= 1")
    if rc.case == "case3":
        if rc.p_eff > rc.n:
            raise ConfigError("p", f"p exceeds N (p={rc.p_eff}, N={rc.n})")
        if rc.p_eff < 1:
            raise ConfigError("p", "p must be >= 1")
        if rc.particle_blocks is not None and len(rc.particle_blocks) != rc.p_eff:
            raise ConfigError("observable.particles", f"case 3 needs p={rc.p_eff} blocks, got {len(rc.particle_blocks)}")
    if rc.case == "case2" and rc.particle_blocks is not None and len(rc.particle_blocks) != 1:
        raise ConfigError("observable.particles", "case 2 takes exactly one block")
    if rc.case == "general":
        if rc.system_block is None or rc.particle_blocks is None:
            raise ConfigError("observable", "general case needs observable.system and observable.particles")
        if len(rc.particle_blocks) != rc.n:
            raise ConfigError("observable.particles", f"expected N={rc.n} blocks, got {len(rc.particle_blocks)}")
    if rc.phase_mode not in PHASE_MODES:
        raise ConfigError("phase_mode", f"expected one of {PHASE_MODES}")
    if rc.g_min < 0 or not rc.g_min < rc.g_max:
        raise ConfigError("g_min", f"need 0 <= g_min < g_max, got ({rc.g_min}, {rc.g_max})")
    if not 0 <= rc.seed < 2 ** 64:
        raise ConfigError("seed", "must fit in 64 unsigned bits")
    if not rc.t_max > rc.t_start:
        raise ConfigError("t_max", f"t_max must exceed t_start ({rc.t_start})")
    if rc.steps < 2:
        raise ConfigError("steps", "need at least 2 grid points")
    if rc.samples < 1:
        raise ConfigError("samples", "must be >= 1")
    if rc.persistence < 0:
        raise ConfigError("persistence", "must be >= 0")
    if rc.threshold is not None and not 0.0 < rc.threshold < 1.0:
        raise ConfigError("threshold", "must lie in (0, 1)")
    if rc.metric not in ("re", "abs2"):
        raise ConfigError("metric", "expected 're' or 'abs2'")
    try:
        SystemQubit(rc.a, rc.b)
    except ValueError as exc:
        raise ConfigError("a", str(exc)) from None
