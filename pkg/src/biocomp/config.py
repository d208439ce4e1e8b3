"""Run configuration: one TOML or JSON file, overridable by CLI flags."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .cvxeda import CvxEdaParams
from .errors import ConfigError
from .features import ALL_SIGNAL_CONFIGS, PeakParams, SignalConfig
from .learn.classifiers import FAMILIES

DEFAULT_CONFIG_NAMES = tuple(c.name for c in ALL_SIGNAL_CONFIGS)
PROTOCOLS = ("loro", "holdout", "both")


@dataclass(frozen=True)
class SynthSettings:
    n_participants: int = 28
    profile_set: str = "separable"  # "separable" or "null"
    gpa_link: bool = False
    unanswered_prob: float = 0.0
    n_runs: int = 3
    code_per_run: int = 3
    prose_per_run: int = 6
    channels: tuple[str, ...] = ("EDA", "BVP", "EEG_RAW", "ATTENTION", "MEDITATION")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthSettings":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown synth key(s): {sorted(unknown)}")
        clean = dict(raw)
        if "channels" in clean:
            clean["channels"] = tuple(clean["channels"])
        return cls(**clean)


@dataclass(frozen=True)
class PipelineConfig:
    corpus_root: str = "corpus"
    output_dir: str = "out"
    configs: tuple[str, ...] = DEFAULT_CONFIG_NAMES
    families: tuple[str, ...] = FAMILIES
    protocol: str = "loro"
    seed: int = 0
    jobs: int = 1
    holdout_repeats: int = 10
    cvxeda: CvxEdaParams = field(default_factory=CvxEdaParams)
    peaks: PeakParams = field(default_factory=PeakParams)
    synth: SynthSettings = field(default_factory=SynthSettings)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        bad = [f for f in self.families if f not in FAMILIES]
        if bad:
            raise ConfigError(f"unknown classifier families: {bad}")
        try:
            object.__setattr__(
                self, "configs", tuple(SignalConfig.parse(c).name for c in self.configs)
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.holdout_repeats < 1:
            raise ConfigError("holdout_repeats must be >= 1")

    def signal_configs(self) -> list[SignalConfig]:
        return [SignalConfig.parse(name) for name in self.configs]

    def protocols(self) -> tuple[str, ...]:
        return ("loro", "holdout") if self.protocol == "both" else (self.protocol,)


def _read_config_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ImportError:
            import tomli as tomllib  # type: ignore[no-redef]
        return tomllib.loads(text)
    raise ConfigError(f"{path}: config must be .json or .toml")


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build the effective configuration: flags > file > defaults."""
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = _read_config_file(path)
        except (json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}

    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    clean = dict(raw)
    if "cvxeda" in clean and isinstance(clean["cvxeda"], dict):
        clean["cvxeda"] = CvxEdaParams.from_dict(clean["cvxeda"])
    if "peaks" in clean and isinstance(clean["peaks"], dict):
        clean["peaks"] = PeakParams.from_dict(clean["peaks"])
    if "synth" in clean and isinstance(clean["synth"], dict):
        clean["synth"] = SynthSettings.from_dict(clean["synth"])
    for key in ("configs", "families"):
        if key in clean and not isinstance(clean[key], tuple):
            clean[key] = tuple(clean[key])
    try:
        return PipelineConfig(**clean)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
