"""Experiment configuration: flat TOML files plus command-line overrides.

Every key is a scalar or a flat list; nested tables are rejected.  Values are
normalized into an :class:`ExperimentConfig` and validated before any
numerical work starts, so a bad config never produces a partial run.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from .jacobi import JacobiParameters, catalog
from .perturbation import DISTRIBUTIONS, Diagonal, RandomDiagonal, RankOne, power_law

__all__ = [
    "COMMANDS",
    "ConfigError",
    "ExperimentConfig",
    "STANDARD_GRID",
    "load_toml",
    "parse_complex",
    "parse_grid",
    "parse_ladder",
    "validate",
]

COMMANDS = (
    "universality",
    "second-kind",
    "perturb",
    "random-perturb",
    "stieltjes",
    "eigenvalue",
    "identity-check",
    "varpar",
)
MODES = ("by_n", "by_diag")
FORMATS = ("csv", "json")
STANDARD_GRID = tuple((complex(a), complex(b)) for a in range(-2, 3) for b in range(-2, 3))


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the offending key path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    experiment_id: str = ""
    measure: str = "free"
    head_a: tuple[float, ...] = ()
    head_b: tuple[float, ...] = ()
    tail_a: float = 0.5
    tail_b: float = 0.0
    x0: tuple[float, ...] = (0.0,)
    n: tuple[int, ...] = (512, 1024, 2048, 4096)
    grid: tuple[tuple[complex, complex], ...] = STANDARD_GRID
    mode: str = "by_n"
    beta1: float | None = None
    betas: tuple[float, ...] | None = None
    amplitude: float | None = None
    exponent: float | None = None
    dist: str = "rademacher"
    seeds: tuple[int, ...] = (0,)
    horizon: int | None = None
    l2_N: int = 10_000
    rho: float | None = None
    a: complex | None = None
    b: complex | None = None
    quad_tol: float = 1e-6
    bracket: tuple[float, float] | None = None
    tol: float = 1e-6
    out: str | None = None
    format: str = "csv"
    threads: int = field(default_factory=lambda: _env_threads())

    def parameters(self) -> JacobiParameters:
        if self.measure == "custom":
            return catalog("custom", head_a=self.head_a, head_b=self.head_b,
                           tail_a=self.tail_a, tail_b=self.tail_b)
        return catalog(self.measure)

    def perturbation(self, seed: int | None = None):
        """Deterministic perturbation (rank-one or diagonal), or a random one for ``seed``."""
        if self.command == "random-perturb":
            return RandomDiagonal(self.amplitude, self.exponent, self.dist,
                                  int(seed if seed is not None else self.seeds[0]),
                                  self.effective_horizon)
        if self.betas is not None:
            return Diagonal(self.betas)
        if self.beta1 is not None:
            return RankOne(self.beta1)
        return None

    @property
    def effective_horizon(self) -> int:
        # The point-mass trace reads K_{2n}, so the default covers 2 max(n).
        return self.horizon if self.horizon is not None else 2 * max(self.n)


def _env_threads() -> int:
    raw = os.environ.get("CDKLAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError("CDKLAB_THREADS", f"expected an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("CDKLAB_THREADS", "must be at least 1")
    return value


def parse_complex(text: Any, name: str) -> complex:
    """Accepts numbers and strings such as ``0.5+1i``, ``-0.3-0.8j`` or ``2``."""
    if isinstance(text, (int, float, complex)) and not isinstance(text, bool):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise ConfigError(name, f"not a complex number: {text!r}") from None


def _split(text: str) -> list[str]:
    return [t for t in re.split(r"[,\s]+", text.strip()) if t]


def parse_ladder(value: Any, name: str = "n") -> tuple[int, ...]:
    """``[512, 1024]``, ``"512,1024"`` or the doubling rule ``"512:4096"``."""
    if isinstance(value, str) and ":" in value:
        lo_s, hi_s = value.split(":", 1)
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError:
            raise ConfigError(name, f"bad doubling rule {value!r}") from None
        if lo < 1 or hi < lo:
            raise ConfigError(name, f"bad doubling rule {value!r}")
        out = []
        while lo <= hi:
            out.append(lo)
            lo *= 2
        return tuple(out)
    items = _split(value) if isinstance(value, str) else list(value)
    try:
        return tuple(int(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected integers, got {value!r}") from None


def parse_grid(value: Any) -> tuple[tuple[complex, complex], ...]:
    """Offset pairs.

    ``"standard"`` is ``{-2..2} x {-2..2}``; ``"lo:hi"`` the integer square on
    ``[lo, hi]``; ``"a:b;a:b"`` explicit pairs; a list of two-element lists
    is taken as given.
    """
    if isinstance(value, str):
        s = value.strip()
        if s == "standard":
            return STANDARD_GRID
        if ";" not in s and s.count(":") == 1 and "j" not in s and "i" not in s:
            lo, hi = (int(float(t)) for t in s.split(":"))
            r = range(lo, hi + 1)
            return tuple((complex(a), complex(b)) for a in r for b in r)
        pairs = []
        for chunk in filter(None, (c.strip() for c in s.split(";"))):
            parts = chunk.split(":")
            if len(parts) != 2:
                raise ConfigError("grid", f"expected 'a:b', got {chunk!r}")
            pairs.append((parse_complex(parts[0], "grid"), parse_complex(parts[1], "grid")))
        return tuple(pairs)
    pairs = []
    for i, item in enumerate(value):
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"grid[{i}]", "expected a pair [a, b]")
        pairs.append((parse_complex(item[0], f"grid[{i}]"), parse_complex(item[1], f"grid[{i}]")))
    return tuple(pairs)


def _parse_betas(value: Any, ladder: tuple[int, ...]) -> tuple[float, ...]:
    # "C/k^P" expands to the power law over the longest ladder entry.
    if isinstance(value, str):
        m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*/\s*k\s*\^\s*([-+0-9.eE]+)\s*(?:@\s*(\d+))?\s*", value)
        if m:
            length = int(m.group(3)) if m.group(3) else 2 * max(ladder)
            return power_law(float(m.group(1)), float(m.group(2)), length).betas
        value = _split(value)
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError("betas", f"expected numbers or 'C/k^P', got {value!r}") from None


def _floats(value: Any, name: str) -> tuple[float, ...]:
    items = _split(value) if isinstance(value, str) else (
        list(value) if isinstance(value, (list, tuple)) else [value])
    try:
        return tuple(float(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected numbers, got {value!r}") from None


def _ints(value: Any, name: str) -> tuple[int, ...]:
    items = _split(value) if isinstance(value, str) else (
        list(value) if isinstance(value, (list, tuple)) else [value])
    try:
        return tuple(int(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected integers, got {value!r}") from None


_KNOWN = {f.name for f in fields(ExperimentConfig)} | {"seed"}


def load_toml(path: str | os.PathLike) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(key, "nested tables are not supported; keep the file flat")
        if key not in _KNOWN:
            raise ConfigError(key, "unknown key")
    raw.setdefault("experiment_id", Path(path).stem)
    return raw


def build(command: str | None, raw: dict[str, Any]) -> ExperimentConfig:
    """Normalize raw values (from TOML and flags, flags winning) and validate."""
    raw = {k: v for k, v in raw.items() if v is not None}
    cmd = command or raw.pop("command", None)
    raw.pop("command", None)
    if cmd not in COMMANDS:
        raise ConfigError("command", f"expected one of {COMMANDS}, got {cmd!r}")
    kw: dict[str, Any] = {"command": cmd}
    if "n" in raw:
        kw["n"] = parse_ladder(raw["n"])
    ladder = kw.get("n", ExperimentConfig.n)
    for key, value in raw.items():
        if key == "n":
            continue
        if key not in _KNOWN:
            raise ConfigError(key, "unknown key")
        if key in ("x0",):
            kw[key] = _floats(value, key)
        elif key in ("head_a", "head_b"):
            kw[key] = _floats(value, key)
        elif key in ("seed", "seeds"):
            kw["seeds"] = _ints(value, key)
        elif key == "grid":
            kw[key] = parse_grid(value)
        elif key == "betas":
            kw[key] = _parse_betas(value, ladder)
        elif key in ("a", "b"):
            kw[key] = parse_complex(value, key)
        elif key == "bracket":
            pair = _floats(value, key)
            if len(pair) != 2:
                raise ConfigError(key, "expected two numbers")
            kw[key] = pair
        elif key in ("horizon", "l2_N", "threads"):
            ints = _ints(value, key)
            if len(ints) != 1:
                raise ConfigError(key, "expected one integer")
            kw[key] = ints[0]
        elif key in ("tail_a", "tail_b", "beta1", "amplitude", "exponent", "rho",
                     "quad_tol", "tol"):
            nums = _floats(value, key)
            if len(nums) != 1:
                raise ConfigError(key, "expected one number")
            kw[key] = nums[0]
        else:
            kw[key] = str(value)
    cfg = ExperimentConfig(**kw)
    if not cfg.experiment_id:
        cfg = replace(cfg, experiment_id=cmd)
    validate(cfg)
    return cfg


def _finite(name: str, value: float | None, positive: bool = False):
    if value is None:
        return
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    if positive and not value > 0:
        raise ConfigError(name, "must be positive")


def validate(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` naming the first offending field."""
    if not cfg.n:
        raise ConfigError("n", "ladder is empty")
    if any(v < 1 for v in cfg.n):
        raise ConfigError("n", "entries must be positive")
    if any(b <= a for a, b in zip(cfg.n, cfg.n[1:])):
        raise ConfigError("n", "ladder must be strictly increasing")
    if not cfg.x0:
        raise ConfigError("x0", "list is empty")
    for v in cfg.x0:
        _finite("x0", v)
    if not cfg.grid:
        raise ConfigError("grid", "grid is empty")
    if cfg.mode not in MODES:
        raise ConfigError("mode", f"expected one of {MODES}, got {cfg.mode!r}")
    if cfg.format not in FORMATS:
        raise ConfigError("format", f"expected one of {FORMATS}, got {cfg.format!r}")
    if cfg.threads < 1:
        raise ConfigError("threads", "must be at least 1")
    if not cfg.seeds:
        raise ConfigError("seeds", "list is empty")
    if cfg.measure not in ("free", "chebyshev1", "custom"):
        raise ConfigError("measure", f"unknown measure {cfg.measure!r}")
    try:
        cfg.parameters()
    except ValueError as exc:
        raise ConfigError("measure", str(exc)) from None
    _finite("beta1", cfg.beta1)
    _finite("quad_tol", cfg.quad_tol, positive=True)
    _finite("tol", cfg.tol, positive=True)
    if cfg.betas is not None:
        if not cfg.betas:
            raise ConfigError("betas", "list is empty")
        if not all(math.isfinite(v) for v in cfg.betas):
            raise ConfigError("betas", "entries must be finite")
        if cfg.beta1 is not None:
            raise ConfigError("betas", "give either beta1 or betas, not both")

    c = cfg.command
    if c == "perturb" and cfg.beta1 is None and cfg.betas is None:
        raise ConfigError("beta1", "perturb needs beta1 or betas")
    if c == "varpar" and cfg.beta1 is None and cfg.betas is None:
        raise ConfigError("beta1", "varpar needs beta1 or betas")
    if c == "eigenvalue":
        if cfg.beta1 is None:
            raise ConfigError("beta1", "eigenvalue needs beta1")
        if cfg.bracket is None:
            raise ConfigError("bracket", "eigenvalue needs a bracket lo,hi")
    if c == "random-perturb":
        if cfg.amplitude is None:
            raise ConfigError("amplitude", "random-perturb needs amplitude")
        if cfg.exponent is None:
            raise ConfigError("exponent", "random-perturb needs exponent")
        _finite("amplitude", cfg.amplitude, positive=True)
        _finite("exponent", cfg.exponent, positive=True)
        if cfg.dist not in DISTRIBUTIONS:
            raise ConfigError("dist", f"expected one of {DISTRIBUTIONS}, got {cfg.dist!r}")
        if cfg.effective_horizon < max(cfg.n):
            raise ConfigError("horizon", f"must be at least max(n) = {max(cfg.n)}")
        if cfg.l2_N < 1:
            raise ConfigError("l2_N", "must be positive")
    if c == "identity-check":
        if cfg.rho is None:
            raise ConfigError("rho", "identity-check needs rho")
        _finite("rho", cfg.rho, positive=True)
        if cfg.a is None or not cfg.a.imag > 0:
            raise ConfigError("a", "identity-check needs a with Im a > 0")
        if cfg.b is None or not cfg.b.imag < 0:
            raise ConfigError("b", "identity-check needs b with Im b < 0")
