# bernreach/config.py
"""
Run configuration and system-file ingestion.

System files are JSON objects:

    {
      "name": "example-1",
      "state_vars": ["x1", "x2"],
      "controls": ["u"],
      "dynamics": ["x2", "u*x2^2 - x1"],
      "control_step": 0.2,
      "steps": 35,
      "init": [[0.8, 0.9], [0.5, 0.6]],
      "goal": [[0.0, 0.2], [0.05, 0.3]],
      "params": {"degree": [3, 3], "delta_bar": 0.001}
    }

"params" may carry any VerifyParams field; command-line flags override them.
"""
from __future__ import annotations

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from bernreach import ReachError, settings
from bernreach.dynamics import ExprSyntaxError, SystemSpec, parse_expr, print_expr
from bernreach.interval import Box

logger = logging.getLogger(__name__)


class ConfigError(ReachError):
    """Raised on invalid system files or run parameters."""


class Mode(str, Enum):
    BERNSTEIN = "bernstein"
    INTERVAL = "interval"


class VerifyParams(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    degree: Optional[list[int]] = None
    delta_bar: float = Field(default=0.01, gt=0.0)
    tm_order: int = Field(default_factory=lambda: settings.TM_ORDER, ge=1)
    substeps: int = Field(default=10, ge=1)
    mode: Mode = Mode.BERNSTEIN
    width_cap: float = Field(default_factory=lambda: settings.WIDTH_CAP, gt=0.0)
    check_every_step: bool = False
    rebox_every: int = Field(default=0, ge=0)
    min_step_ratio: float = Field(default=1e-3, gt=0.0, le=1.0)
    thicken: float = Field(default=1e-9, gt=0.0)
    per_output: bool = False
    max_samples: int = Field(default_factory=lambda: settings.MAX_SAMPLES, ge=1)
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    extra_eps: float = Field(default=0.0, ge=0.0)

    @field_validator("degree")
    @classmethod
    def _positive_degree(cls, v: Optional[list[int]]) -> Optional[list[int]]:
        if v is not None and (not v or any(d < 1 for d in v)):
            raise ValueError("degree entries must be positive integers")
        return v

    def degree_for(self, dim: int) -> list[int]:
        """Degree vector for a dim-dimensional state; defaults to 3 per dimension."""
        if self.degree is None:
            return [3] * dim
        if len(self.degree) != dim:
            raise ConfigError(f"degree has {len(self.degree)} entries but the state has {dim} dimensions")
        return list(self.degree)


class RunConfig(VerifyParams):
    model_path: Path
    system_path: Path
    flowpipes_out: Optional[Path] = None
    trajectories_out: Optional[Path] = None
    svg_out: Optional[Path] = None
    trajectories: int = Field(default=100, ge=0)
    sim_dt: Optional[float] = Field(default=None, gt=0.0)
    seed: int = 0
    plot_dims: tuple[int, int] = (0, 1)


class SystemFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "system"
    state_vars: list[str] = Field(min_length=1)
    controls: list[str] = Field(default_factory=lambda: ["u"])
    dynamics: list[str]
    control_step: float = Field(gt=0.0)
    steps: int = Field(ge=1)
    init: list[tuple[float, float]]
    goal: list[tuple[float, float]]
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("init", "goal")
    @classmethod
    def _ordered(cls, v: list[tuple[float, float]]) -> list[tuple[float, float]]:
        for i, (lo, hi) in enumerate(v):
            if lo > hi:
                raise ValueError(f"interval {i} has lower bound {lo} above upper bound {hi}")
        return v

    @model_validator(mode="after")
    def _dimensions(self) -> "SystemFile":
        n = len(self.state_vars)
        if len(self.dynamics) != n:
            raise ValueError(f"dynamics has {len(self.dynamics)} entries but state_vars has {n}")
        if len(self.init) != len(self.goal):
            raise ValueError(f"init has {len(self.init)} dimensions but goal has {len(self.goal)}")
        if len(self.init) != n:
            raise ValueError(f"init has {len(self.init)} dimensions but state_vars has {n}")
        return self


def json_path(loc: tuple) -> str:
    path = "$"
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        parts.append(f"{json_path(tuple(err['loc']))}: {err['msg']}")
    return "; ".join(parts)


def load_system(source: Mapping[str, Any] | str | Path) -> SystemSpec:
    """Build a SystemSpec from a parsed JSON object, JSON text or a file path."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    elif isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON ({exc})") from exc
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ConfigError("$: system file must be a JSON object")
    try:
        spec = SystemFile.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_validation_message(exc)) from exc

    names = spec.state_vars + spec.controls
    rhs = []
    for i, text in enumerate(spec.dynamics):
        try:
            rhs.append(parse_expr(text, names))
        except ExprSyntaxError as exc:
            raise ConfigError(f"$.dynamics[{i}]: {exc}") from exc
    try:
        VerifyParams.model_validate(spec.params)
    except ValidationError as exc:
        raise ConfigError(_validation_message(exc).replace("$", "$.params", 1)) from exc
    try:
        system = SystemSpec(
            state_vars=tuple(spec.state_vars),
            rhs=tuple(rhs),
            control_step=spec.control_step,
            steps=spec.steps,
            init=Box.from_pairs(spec.init),
            goal=Box.from_pairs(spec.goal),
            control_vars=tuple(spec.controls),
            name=spec.name,
            params=dict(spec.params),
        )
    except ReachError as exc:
        raise ConfigError(str(exc)) from exc
    logger.info(f"[CONFIG] loaded system '{system.name}' with {system.dim} states, {system.steps} steps")
    return system


def dump_system(system: SystemSpec) -> dict[str, Any]:
    """JSON-ready object that load_system accepts."""
    return {
        "name": system.name,
        "state_vars": list(system.state_vars),
        "controls": list(system.control_vars),
        "dynamics": [print_expr(e) for e in system.rhs],
        "control_step": system.control_step,
        "steps": system.steps,
        "init": system.init.to_pairs(),
        "goal": system.goal.to_pairs(),
        "params": dict(system.params),
    }


def resolve_params(system: SystemSpec, overrides: Mapping[str, Any] | None = None, base: type[VerifyParams] = VerifyParams, **extra: Any) -> VerifyParams:
    """Merge defaults, the system's params and explicit overrides (None values are skipped)."""
    merged: dict[str, Any] = dict(system.params)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    merged.update(extra)
    try:
        params = base.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(_validation_message(exc)) from exc
    params.degree_for(system.dim)
    return params
