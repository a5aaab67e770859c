"""Experiment configuration: a flat key = value text format.

The format is deliberately trivial (one ``key = value`` pair per line,
``#`` comments, no nesting) so any tool can parse or generate it.  One
canonical example per scheme ships in ``configs/``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .constants import DEFAULT_CONSTANTS, SchemeConstants
from .errors import ValidationError
from .model import MODEL_KINDS

__all__ = ["ExperimentConfig", "SCHEMES", "parse_config", "parse_config_text"]

SCHEMES = ("one_channel", "adaptive", "many_channel")

_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}


@dataclass(frozen=True)
class ExperimentConfig:
    model_kind: str
    d: int
    scheme: str
    delta: float
    e_radius: float
    trials: int
    master_seed: int
    constants: SchemeConstants = DEFAULT_CONSTANTS
    worst_case_grid: bool = False
    out_csv: str | None = None
    out_json: str | None = None

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValidationError(
                f"unknown model {self.model_kind!r}; valid kinds: {MODEL_KINDS}")
        if self.scheme not in SCHEMES:
            raise ValidationError(
                f"unknown scheme {self.scheme!r}; valid schemes: {', '.join(SCHEMES)}")
        if self.d < 2:
            raise ValidationError(f"d must be >= 2, got {self.d}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if not (0 < self.delta <= self.e_radius / 5 * (1 + 1e-12)):
            raise ValidationError(
                f"delta/E must lie in (0, 1/5], got delta={self.delta}, E={self.e_radius}")
        if not (0 <= self.master_seed < 2 ** 64):
            raise ValidationError("master_seed must be a 64-bit unsigned integer")


_CONFIG_KEYS = {
    "model": str, "d": int, "scheme": str, "delta": float, "e": float,
    "trials": int, "seed": int, "kappa": float, "alpha": float, "beta": float,
    "p_crit": float, "r_max": int, "refine": bool, "trotter_slices": int,
    "worst_case_grid": bool, "out_csv": str, "out_json": str,
}


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip().lower(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ValidationError(
                f"{source}:{lineno}: unknown key {key!r}; valid keys: "
                f"{', '.join(sorted(_CONFIG_KEYS))}")
        caster = _CONFIG_KEYS[key]
        try:
            if caster is bool:
                values[key] = _BOOL_STRINGS[val.lower()]
            else:
                values[key] = caster(val)
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{source}:{lineno}: bad value for {key}: {val!r}") from exc

    missing = [k for k in ("model", "d", "scheme", "delta", "e", "trials") if k not in values]
    if missing:
        raise ValidationError(f"{source}: missing required keys: {', '.join(missing)}")
    constants = DEFAULT_CONSTANTS.with_overrides(
        kappa=values.get("kappa"), alpha=values.get("alpha"),
        beta=values.get("beta"), p_crit=values.get("p_crit"),
        r_max=values.get("r_max"), refine=values.get("refine"),
        trotter_slices=values.get("trotter_slices"))
    return ExperimentConfig(
        model_kind=values["model"], d=values["d"], scheme=values["scheme"],
        delta=values["delta"], e_radius=values["e"], trials=values["trials"],
        master_seed=values.get("seed", 0), constants=constants,
        worst_case_grid=values.get("worst_case_grid", False),
        out_csv=values.get("out_csv"), out_json=values.get("out_json"))


def parse_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), source=str(p))
