"""Experiment configuration: flat `key = value` text with comma-separated
lists, '#' comments, and every default documented here in one place."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .groups import GroupSpec, PRESET_NAMES, load_group_file, load_preset
from .walks import StepDistribution


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "gamma2"
    group_file: str = ""
    mu: tuple[float, ...] = ()  # empty: uniform over the generators
    seed: int = 20240601
    workers: int = 1
    out: str = "out"
    strict: bool = False
    # orbit / exponent fit
    orbit_depth: int = 12
    orbit_cap: int = 10_000_000
    orbit_csv_max_rows: int = 1_000_000
    fit_window: tuple[float, float] = (0.4, 0.95)
    fit_points: int = 40
    # random walk / harmonic sampling
    walk_paths: int = 10_000
    walk_length: int = 400
    eps_stop: float = 1e-3
    max_steps: int = 100_000
    # Patterson-Sullivan sampling
    ps_offsets: tuple[float, ...] = (0.3, 0.2, 0.1, 0.05)
    ps_min_radius: float = 5.0
    ps_resample: int = 10_000
    # Green estimates
    green_words_max_len: int = 2
    green_trials: int = 100_000
    green_horizon: int = 200
    green_series_n_max: int = 60
    # diagnostics
    gap_n_max: int = 256
    lemma_D: float = 1.0
    lemma_n_max: int = 1_000
    scales: tuple[float, ...] = (0.01, 0.0178, 0.0316, 0.0562, 0.1)
    probe_count: int = 400
    bootstrap: int = 1000
    bin_counts: tuple[int, ...] = (32, 128, 512, 2048)


_INT_KEYS = {
    "seed", "workers", "orbit_depth", "orbit_cap", "orbit_csv_max_rows", "fit_points",
    "walk_paths", "walk_length", "max_steps", "ps_resample", "green_words_max_len",
    "green_trials", "green_horizon", "green_series_n_max", "gap_n_max", "lemma_n_max",
    "probe_count", "bootstrap",
}
_FLOAT_KEYS = {"eps_stop", "ps_min_radius", "lemma_D"}
_STR_KEYS = {"preset", "group_file", "out"}
_BOOL_KEYS = {"strict"}
_FLOAT_LIST_KEYS = {"mu", "fit_window", "ps_offsets", "scales"}
_INT_LIST_KEYS = {"bin_counts"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS | _FLOAT_LIST_KEYS | _INT_LIST_KEYS


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; errors name the offending line."""
    values: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _BOOL_KEYS:
                values[key] = value.lower() in ("true", "yes", "1")
            elif key in _FLOAT_LIST_KEYS:
                values[key] = tuple(float(v) for v in value.split(",")) if value else ()
            elif key in _INT_LIST_KEYS:
                values[key] = tuple(int(v) for v in value.split(",")) if value else ()
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {ln}: malformed value for {key!r}: {value!r}") from exc
        _check_invariant(key, values[key], ln)
    cfg = ExperimentConfig(**values)
    if len(cfg.fit_window) != 2 or not 0 < cfg.fit_window[0] < cfg.fit_window[1] <= 1:
        raise ConfigError("fit_window must be two increasing fractions in (0, 1]")
    return cfg


def _check_invariant(key: str, value, ln: int) -> None:
    if key == "preset" and value not in PRESET_NAMES:
        raise ConfigError(
            f"line {ln}: unknown preset {value!r}; catalog: {', '.join(PRESET_NAMES)}"
        )
    if key == "mu" and value:
        try:
            StepDistribution(value)
        except Exception as exc:
            raise ConfigError(f"line {ln}: mu invalid: {exc}") from exc
    if key in ("walk_paths", "orbit_depth", "workers") and value < 0:
        raise ConfigError(f"line {ln}: {key} must be nonnegative")


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def resolve_group(cfg: ExperimentConfig) -> tuple[GroupSpec, StepDistribution]:
    spec = load_group_file(cfg.group_file) if cfg.group_file else load_preset(cfg.preset)
    mu = StepDistribution(cfg.mu) if cfg.mu else StepDistribution.uniform(spec)
    mu.check_spec(spec)
    return spec, mu


_EXECUTION_KEYS = ("out", "workers")  # affect where/how, never which bytes


def resolved_text(cfg: ExperimentConfig) -> str:
    """Echo of the fully resolved configuration, loadable by parse_config and
    sufficient to reproduce every output byte-for-byte (choose any output
    directory and worker count at reproduction time)."""
    lines = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        if f.name in _EXECUTION_KEYS:
            continue
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            rendered = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg
