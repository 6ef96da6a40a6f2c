"""Flat ``key = value`` run configuration.

Lines starting with ``#`` and trailing ``# ...`` are comments. Unknown keys are
rejected. Defaults reproduce the two-mode example: alpha=30, beta=0.3,
gammas=(15, 20), u0 = 5 x e^x.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .gains import FeedbackLaw, GainConfig, GainSet, assemble_gains, default_gammas
from .simulate import SimConfig
from .spectral import ModelParams, SpectralData
from .validation import check_finite

OUT_ENV = "FISHER_STAB_OUT"
PRESETS = ("5xexp", "zero")

_FLOAT_KEYS = ("alpha", "beta", "rho", "dt", "t_end", "window_a", "window_b")
_INT_KEYS = ("grid_m", "snapshot_every")


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 30.0
    beta: float = 0.3
    rho: float = 12.0
    gammas: tuple | None = None
    grid_m: int = 200
    dt: float = 1e-4
    t_end: float = 2.0
    u0: str = "5xexp"
    window_a: float = 0.0
    window_b: float = 1.0
    snapshot_every: int = 0
    out_dir: str = "out"
    base_dir: str = field(default=".", compare=False)

    @property
    def spectral(self) -> SpectralData:
        return SpectralData.compute(self.alpha, self.rho)

    def resolved_gammas(self, spectral: SpectralData | None = None) -> tuple:
        """Explicit gammas, else (15, 20) when two modes are unstable, else rho + 5k."""
        if self.gammas is not None:
            return tuple(self.gammas)
        spectral = spectral or self.spectral
        if spectral.n_unstable == 2 and self.rho < 15.0:
            return (15.0, 20.0)
        return tuple(default_gammas(self.rho, spectral.n_unstable))

    def gains(self) -> GainSet:
        spectral = self.spectral
        return assemble_gains(GainConfig(self.resolved_gammas(spectral), self.rho), spectral)

    def law(self, gains: GainSet | None = None) -> FeedbackLaw:
        gains = gains or self.gains()
        return FeedbackLaw.from_gains(gains, (self.window_a, self.window_b))

    def u0_spec(self):
        name = self.u0.strip()
        low = name.lower()
        if low in PRESETS or low.startswith("sine("):
            return low
        path = Path(name)
        if not path.is_absolute():
            path = Path(self.base_dir) / path
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read initial profile {name!r}: {exc}") from exc
        try:
            values = np.array(text.replace(",", " ").split(), dtype=float)
        except ValueError as exc:
            raise ConfigError(f"initial profile {name!r} is not numeric") from exc
        if values.size != self.grid_m + 1:
            raise ConfigError(
                f"initial profile {name!r} has {values.size} values, expected {self.grid_m + 1}"
            )
        return values

    def sim_config(self, closed_loop: bool = True, linearized: bool = False, law=None) -> SimConfig:
        params = ModelParams(self.alpha, 0.0 if linearized else self.beta)
        if closed_loop and law is None:
            spectral = self.spectral
            law = self.law() if spectral.n_unstable else FeedbackLaw.zero(spectral)
        return SimConfig(
            params,
            grid_m=self.grid_m,
            dt=self.dt,
            t_end=self.t_end,
            law=law if closed_loop else None,
            u0_spec=self.u0_spec(),
            snapshot_every=self.snapshot_every,
        )

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUT_ENV) or self.out_dir)


def _parse_value(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return check_finite(key, raw)
    if key in _INT_KEYS:
        value = check_finite(key, raw)
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {raw!r}")
        return int(value)
    if key == "gammas":
        items = [s for s in raw.strip().strip("[]()").replace(",", " ").split() if s]
        if not items:
            return None
        return tuple(check_finite("gammas", s) for s in items)
    return raw.strip()


def parse_config(text: str, base_dir: str = ".", overrides=None) -> RunConfig:
    known = {f.name for f in fields(RunConfig)} - {"base_dir"}
    values = {}
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        pairs.append((key, raw, f"line {lineno}"))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        pairs.append((key, raw, "override"))
    for key, raw, where in pairs:
        if key not in known:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    cfg = RunConfig(base_dir=base_dir, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.alpha <= 0:
        raise ConfigError("alpha must be positive")
    if cfg.beta < 0:
        raise ConfigError("beta must be non-negative")
    if cfg.rho <= 0:
        raise ConfigError("rho must be positive")
    if cfg.grid_m < 2:
        raise ConfigError("grid_m must be >= 2")
    if cfg.dt <= 0 or cfg.t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    if cfg.snapshot_every < 0:
        raise ConfigError("snapshot_every must be >= 0")
    if not (0.0 <= cfg.window_a < cfg.window_b <= 1.0):
        raise ConfigError("window must satisfy 0 <= window_a < window_b <= 1")


def load_config(path=None, overrides=None) -> RunConfig:
    if path is None:
        return parse_config("", overrides=overrides)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=str(path.parent), overrides=overrides)


def with_values(cfg: RunConfig, **kwargs) -> RunConfig:
    out = replace(cfg, **kwargs)
    _validate(out)
    return out
