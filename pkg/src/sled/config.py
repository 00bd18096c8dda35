"""Pipeline configuration and its flat ``key=value`` file format."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

MODES = ("ss", "ms")


def _default_scales() -> tuple[int, ...]:
    return tuple(range(200, 701, 50))


@dataclass(frozen=True)
class PipelineConfig:
    """All tunables of a segmentation run.

    ``ght_nu`` / ``ght_kappa`` of ``None`` mean 10% of the pixel count.
    ``forest_subsample`` of ``None`` trains every tree on all healthy points.
    """

    target_w: int = 768
    target_h: int = 560
    r: float = 0.3
    sigma_k: int = 30
    knn_k: int = 50
    ss_scale: int = 400
    ms_scales: tuple[int, ...] = field(default_factory=_default_scales)
    n_trees: int = 100
    seed: int = 0
    ght_nu: float | None = None
    ght_tau: float = 0.1
    ght_kappa: float | None = None
    ght_omega: float = 0.5
    mode: str = "ms"
    fixed_sigma: bool = False
    exhaustive_refine: bool = False
    forest_subsample: int | None = 256
    refine_max_iters: int = 100

    def __post_init__(self):
        object.__setattr__(self, "ms_scales", tuple(int(s) for s in self.ms_scales))
        object.__setattr__(self, "mode", str(self.mode).lower())
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        counts = {"target_w": self.target_w, "target_h": self.target_h, "sigma_k": self.sigma_k,
                  "knn_k": self.knn_k, "ss_scale": self.ss_scale, "n_trees": self.n_trees,
                  "refine_max_iters": self.refine_max_iters}
        for name, value in counts.items():
            if value < 1:
                raise ConfigError(f"{name} must be positive")
        if self.mode == "ms" and not self.ms_scales:
            raise ConfigError("ms_scales must not be empty in ms mode")
        if any(s < 2 for s in self.ms_scales):
            raise ConfigError("every scale must be >= 2")
        if not 0 < self.r <= 1:
            raise ConfigError("r must lie in (0, 1]")
        if self.forest_subsample is not None and self.forest_subsample < 2:
            raise ConfigError("forest_subsample must be >= 2")
        if not 0 <= self.ght_omega <= 1 or self.ght_tau < 0:
            raise ConfigError("invalid GHT prior")
        for name in ("ght_nu", "ght_kappa"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} must be non-negative")

    def with_overrides(self, **changes) -> "PipelineConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **changes)


def _parse_optional(kind):
    def parse(text: str):
        return None if text.lower() in ("none", "") else kind(text)
    return parse


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_scales(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.replace(",", " ").split())


_PARSERS = {
    "target_w": int, "target_h": int, "r": float, "sigma_k": int, "knn_k": int,
    "ss_scale": int, "ms_scales": _parse_scales, "n_trees": int, "seed": int,
    "ght_nu": _parse_optional(float), "ght_tau": float,
    "ght_kappa": _parse_optional(float), "ght_omega": float, "mode": str,
    "fixed_sigma": _parse_bool, "exhaustive_refine": _parse_bool,
    "forest_subsample": _parse_optional(int), "refine_max_iters": int,
}


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return replace(base or PipelineConfig(), **values)


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def format_config(cfg: PipelineConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "ms_scales":
            value = ",".join(map(str, value))
        lines.append(f"{f.name}={'none' if value is None else value}")
    return "\n".join(lines) + "\n"
