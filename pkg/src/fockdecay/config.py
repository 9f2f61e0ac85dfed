"""Run configuration: flat `key = value` files, defaults, validation.

The config format is deliberately primitive: one `key = value` per line,
`#` comments, no sections, no nesting.  A run manifest is written in the
same format with every policy key resolved, so re-running from a manifest
reproduces the outputs byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .absorber import DEFAULT_E_MIN
from .potentials import depth_from_capacity


class ConfigError(ValueError):
    """One or more invalid configuration entries (all reported at once)."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(problems))
        self.problems = problems


# dt reference: 2e-5 at the C=8 depth, scaled like 1/v0 for other depths.
DT_REFERENCE = 2e-5
V0_REFERENCE = 64 * np.pi**2
TARGET_SAMPLES = 2400


@dataclass
class RunConfig:
    """Fully resolved run parameters (defaults follow the standard trap)."""

    # trap
    capacity: int = 8
    v0: float = 0.0                 # 0 -> capacity^2 pi^2
    well_width: float = 1.0
    barrier_width: float = 0.08
    sigma: float = 0.01
    sigma1: float = 0.01
    cut: float = 0.55
    # grid
    x_min: float = -20.0
    x_max: float = 30.0
    n_points: int = 20001
    # absorber
    cap_width: float = 5.0
    cap_emin: float = DEFAULT_E_MIN
    # schedule (0 -> resolved by the subcommand policy)
    dt: float = 0.0
    t_end: float = 0.0
    sample_every: int = 0
    max_steps: int = 400_000
    energy_shift: str = "auto"      # "auto" (band center), or a number as text
    rate_horizon: float = 1.6       # ln units of decay targeted by rate runs
    rate_dt_max: float = 5e-3
    # run
    n_particles: str = "8"          # single "4" or range "1..8"
    alpha: str = "fermion"
    channels: str = "P,S,FCS"
    epsilon_tq: float = 0.05
    out_dir: str = "runs"
    workers: int = 1
    verbose: bool = False

    # --- resolved views -------------------------------------------------
    def resolved_v0(self) -> float:
        return self.v0 if self.v0 > 0 else depth_from_capacity(self.capacity)

    def resolved_dt(self) -> float:
        return self.dt if self.dt > 0 else DT_REFERENCE * V0_REFERENCE / self.resolved_v0()

    def particle_range(self) -> list[int]:
        token = self.n_particles.replace(" ", "")
        if ".." in token:
            lo, hi = token.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(token)]

    def channel_set(self) -> set[str]:
        return {c.strip().upper() for c in self.channels.split(",") if c.strip()}

    def resolved_energy_shift(self, energies: np.ndarray) -> float:
        if self.energy_shift.strip().lower() == "auto":
            return float(0.5 * (energies[0] + energies[-1]))
        return float(self.energy_shift)


_BOOL_TOKENS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines into a string dict; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected 'key = value', got {raw!r}"])
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def validate(raw: dict[str, str]) -> RunConfig:
    """Resolve defaults and check every cross-field constraint, reporting all
    violations together."""
    problems: list[str] = []
    cfg = RunConfig()
    known = {f.name: f.type for f in fields(RunConfig)}
    for key, value in raw.items():
        if key not in known:
            problems.append(f"unknown key {key!r}")
            continue
        current = getattr(cfg, key)
        try:
            if isinstance(current, bool):
                setattr(cfg, key, _BOOL_TOKENS[value.lower()])
            elif isinstance(current, int):
                setattr(cfg, key, int(value))
            elif isinstance(current, float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        except (ValueError, KeyError):
            problems.append(f"{key}: cannot parse {value!r}")
    if problems:
        raise ConfigError(problems)

    if cfg.capacity < 1:
        problems.append(f"capacity must be >= 1, got {cfg.capacity}")
    if cfg.v0 < 0:
        problems.append(f"v0 must be positive (or 0 for capacity rule), got {cfg.v0}")
    for name in ("well_width", "barrier_width", "sigma", "sigma1"):
        if getattr(cfg, name) <= 0:
            problems.append(f"{name} must be positive")
    if cfg.cut <= cfg.well_width / 2:
        problems.append(
            f"cut {cfg.cut} must exceed half the well width {cfg.well_width / 2}"
        )
    if cfg.x_min >= cfg.x_max:
        problems.append(f"x_min {cfg.x_min} must be < x_max {cfg.x_max}")
    if cfg.n_points < 3:
        problems.append(f"n_points must be >= 3, got {cfg.n_points}")
    if cfg.cap_width <= 0 or 2 * cfg.cap_width >= cfg.x_max - cfg.x_min:
        problems.append(
            f"cap_width {cfg.cap_width} must be positive and below half the grid span"
        )
    else:
        if cfg.cut >= cfg.x_max - cfg.cap_width:
            problems.append(
                f"region cut {cfg.cut} overlaps the right absorber "
                f"(starts at {cfg.x_max - cfg.cap_width})"
            )
        if cfg.cut <= cfg.x_min + cfg.cap_width:
            problems.append(
                f"region cut {cfg.cut} overlaps the left absorber "
                f"(ends at {cfg.x_min + cfg.cap_width})"
            )
    if cfg.cap_emin <= 0:
        problems.append(f"cap_emin must be positive, got {cfg.cap_emin}")
    if cfg.dt < 0:
        problems.append(f"dt must be positive (or 0 for the default), got {cfg.dt}")
    if cfg.t_end < 0:
        problems.append(f"t_end must be >= 0, got {cfg.t_end}")
    if cfg.sample_every < 0:
        problems.append(f"sample_every must be >= 1 (or 0 for auto), got {cfg.sample_every}")
    if cfg.max_steps < 100:
        problems.append(f"max_steps must be >= 100, got {cfg.max_steps}")
    if cfg.rate_horizon <= 0:
        problems.append("rate_horizon must be positive")
    if cfg.rate_dt_max <= 0:
        problems.append("rate_dt_max must be positive")
    if cfg.epsilon_tq <= 0:
        problems.append(f"epsilon_tq must be positive, got {cfg.epsilon_tq}")
    if cfg.workers < 1:
        problems.append(f"workers must be >= 1, got {cfg.workers}")

    try:
        particles = cfg.particle_range()
        if not particles or particles[0] < 1:
            problems.append(f"n_particles must start at >= 1, got {cfg.n_particles!r}")
        elif particles[-1] > cfg.capacity:
            problems.append(
                f"particle number {particles[-1]} exceeds capacity {cfg.capacity}"
            )
        elif len(particles) > 1 and particles[0] > particles[-1]:
            problems.append(f"empty particle range {cfg.n_particles!r}")
    except ValueError:
        problems.append(f"n_particles: cannot parse {cfg.n_particles!r}")

    if cfg.energy_shift.strip().lower() != "auto":
        try:
            float(cfg.energy_shift)
        except ValueError:
            problems.append(f"energy_shift must be 'auto' or a number, got {cfg.energy_shift!r}")

    bad = cfg.channel_set() - {"P", "S", "FCS"}
    if bad:
        problems.append(f"unknown channels: {sorted(bad)}")
    if not cfg.channel_set():
        problems.append("channels must name at least one of P, S, FCS")

    try:
        from .zeno import Statistics
        Statistics.parse(cfg.alpha)
    except ValueError as exc:
        problems.append(str(exc))

    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read a config file (missing path -> all defaults) and apply overrides."""
    raw: dict[str, str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = parse_config_text(fh.read())
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate(raw)


def manifest_text(cfg: RunConfig, resolved: dict[str, object] | None = None) -> str:
    """Render the fully-resolved config in config-file form.

    Floats are written with repr so a rerun parses bit-identical values.
    """
    entries: dict[str, object] = {}
    for f in fields(RunConfig):
        entries[f.name] = getattr(cfg, f.name)
    if resolved:
        entries.update(resolved)
    lines = ["# fockdecay run manifest (re-runnable as --config)"]
    for key, value in entries.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
