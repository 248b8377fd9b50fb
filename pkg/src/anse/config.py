"""
JSON run and audit configuration.

Unknown keys are rejected. Syntax problems raise ParseError with the line
and column; schema and invariant problems raise ValidationError listing
every violation at once.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Literal, Optional, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .audit import INEQUALITIES
from .diagnostics import MONITORS

SCENARIOS = ("taylor_green", "pure_shear", "free_decay", "shear_stability", "forced_h2", "custom")


class ParseError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None,
                 column: int | None = None, key: str | None = None):
        where = ", ".join(
            p for p in (
                path,
                f"line {line}" if line is not None else None,
                f"column {column}" if column is not None else None,
                f"key {key!r}" if key is not None else None,
            ) if p
        )
        super().__init__(f"{where}: {message}" if where else message)
        self.path, self.line, self.column, self.key = path, line, column, key


class ValidationError(ValueError):
    def __init__(self, violations: list[tuple[str, str]], path: str | None = None):
        self.violations = violations
        head = f"{path}: " if path else ""
        lines = [f"{loc or '<root>'}: {msg}" for loc, msg in violations]
        super().__init__(head + f"{len(violations)} invalid setting(s)\n  " + "\n  ".join(lines))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    nx: int = 64
    ny: int = 64
    dealias_fraction: str = "2/3"

    @field_validator("nx")
    @classmethod
    def _even(cls, v: int) -> int:
        if v < 4 or v % 2:
            raise ValueError("nx must be an even integer >= 4")
        return v

    @field_validator("ny")
    @classmethod
    def _ny(cls, v: int) -> int:
        if v < 2:
            raise ValueError("ny must be >= 2")
        return v

    @field_validator("dealias_fraction")
    @classmethod
    def _fraction(cls, v: str) -> str:
        try:
            frac = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ValueError("dealias_fraction must be a fraction such as '2/3'") from None
        if not 0 < frac <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        return v

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.dealias_fraction)


class StepperSection(_Strict):
    t_end: float = Field(1.0, ge=0)
    dt: Union[Literal["auto"], float] = "auto"
    cfl: float = Field(0.5, gt=0)
    dt_max: float = Field(1e-2, gt=0)
    scheme: Literal["rk3"] = "rk3"

    @field_validator("dt")
    @classmethod
    def _dt(cls, v):
        if v != "auto" and not v > 0:
            raise ValueError("dt must be positive or 'auto'")
        return v


class InitialConfig(_Strict):
    """Scenario parameters; each scenario reads the fields it needs."""

    amplitude: float = Field(1.0, ge=0)
    mean_amplitude: Optional[float] = Field(None, ge=0)
    seed: int = 0
    kmax: int = Field(4, ge=1)
    shear_slope: float = 1.0
    epsilon: float = Field(1e-3, ge=0)
    snapshot: Optional[str] = None


class ForcingConfig(_Strict):
    amplitude: float = Field(0.0, ge=0)
    mean_amplitude: float = Field(0.0, ge=0)
    seed: int = 1
    kmax: int = Field(2, ge=1)
    envelope: Literal["constant", "exponential-decay", "ramp-off"] = "constant"
    envelope_param: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _param(self):
        if self.envelope != "constant" and self.envelope_param is None:
            raise ValueError(f"envelope {self.envelope!r} needs envelope_param")
        return self


class MonitorConfig(_Strict):
    enabled: Optional[tuple[str, ...]] = None
    bound_rtol: float = Field(1e-8, ge=0)
    identity_rtol: float = Field(1e-12, ge=0)
    asymptotic_threshold: float = Field(1e-6, gt=0)
    cauchy_constant: float = Field(10.0, gt=0)
    decay_r2_min: float = Field(0.999, ge=0, le=1)
    twin_delta: Optional[float] = Field(None, gt=0)
    twin_factor: float = Field(100.0, gt=0)
    analytic_rtol: float = Field(1e-5, gt=0)

    @field_validator("enabled")
    @classmethod
    def _known(cls, v):
        if v is None:
            return v
        unknown = [m for m in v if m not in MONITORS]
        if unknown:
            raise ValueError(f"unknown monitors {unknown}")
        return tuple(v)


class OutputConfig(_Strict):
    run_dir: str = "runs/run"
    snapshot_every: int = Field(0, ge=0)
    diagnostics_every: int = Field(1, ge=1)


class RunConfig(_Strict):
    scenario: Literal["taylor_green", "pure_shear", "free_decay", "shear_stability", "forced_h2", "custom"]
    grid: GridConfig = GridConfig()
    stepper: StepperSection = StepperSection()
    initial: InitialConfig = InitialConfig()
    forcing: ForcingConfig = ForcingConfig()
    monitors: MonitorConfig = MonitorConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _scenario_rules(self):
        problems = []
        if self.scenario == "forced_h2":
            if self.forcing.mean_amplitude != 0:
                problems.append("forced_h2 requires forcing.mean_amplitude = 0")
            if self.forcing.envelope != "exponential-decay":
                problems.append("forced_h2 requires an exponential-decay forcing envelope")
        if self.scenario == "custom":
            if self.initial.snapshot is None:
                problems.append("custom scenario needs initial.snapshot")
            elif not Path(self.initial.snapshot).is_file():
                problems.append(f"initial.snapshot {self.initial.snapshot!r} does not exist")
        kmax_limit = min(self.grid.nx // 2, self.grid.ny) * self.grid.fraction
        for name, k in (("initial.kmax", self.initial.kmax), ("forcing.kmax", self.forcing.kmax)):
            if k > kmax_limit:
                problems.append(f"{name}={k} exceeds the dealiased band ({float(kmax_limit):g})")
        if problems:
            raise ValueError("; ".join(problems))
        return self


class AuditEntry(_Strict):
    inequality: Literal["triple_product", "linfty_l1", "poincare_wall", "poincare_mean", "transport_orthogonality"]
    n: int = Field(1000, ge=1)
    kmax: int = Field(8, ge=1)
    seed: int = 0
    adversarial_iters: int = Field(0, ge=0)


class AuditConfig(_Strict):
    audits: tuple[AuditEntry, ...] = tuple(AuditEntry(inequality=i) for i in INEQUALITIES)
    output: OutputConfig = OutputConfig(run_dir="runs/audit")


def _load_json(path: Path):
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("top level must be a JSON object", str(path), 1, 1)
    return data, text


def _key_line(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _validate(model, data: dict, path: str | None, text: str | None):
    try:
        return model.model_validate(data)
    except pydantic.ValidationError as exc:
        violations = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"])
            msg = err["msg"]
            if err["type"] == "extra_forbidden":
                msg = "unknown key"
                line = _key_line(text, str(err["loc"][-1])) if text else None
                if line is not None:
                    msg += f" (line {line})"
            violations.append((loc, msg))
        raise ValidationError(violations, path) from None


def parse_config(path) -> RunConfig:
    path = Path(path)
    data, text = _load_json(path)
    return _validate(RunConfig, data, str(path), text)


def parse_audit_config(path) -> AuditConfig:
    path = Path(path)
    data, text = _load_json(path)
    return _validate(AuditConfig, data, str(path), text)


def config_from_dict(data: dict) -> RunConfig:
    return _validate(RunConfig, data, None, None)


def emit_config(cfg: BaseModel) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=False) + "\n"
