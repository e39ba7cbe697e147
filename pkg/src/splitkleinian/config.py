"""Experiment configuration.

A config file is INI text with a single ``[experiment]`` section; values
are Python literals (numbers, lists, complex numbers such as ``1j``) or
bare words.  Example::

    [experiment]
    command = orbit
    preset = cat2
    x0 = generic
    n = 100000
    eps = 0.03125
    output = orbit.json
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .dynamics import check_hyperbolic_toral
from .errors import ConfigError
from .linalg import IntMatrix, SpectrumReport

__all__ = ["COMMANDS", "PRESETS", "ExperimentConfig", "load_config", "load_preset"]

COMMANDS = (
    "split",
    "classify-grid",
    "orbit",
    "fixed-points",
    "lattice-check",
    "norm-scan",
    "psi-check",
    "witness",
)

# cat3 is a det-1 hyperbolic matrix with one contracting and two expanding directions
PRESETS = {
    "cat2": ((2, 1), (1, 1)),
    "cat3": ((1, 1, 0), (1, 2, 1), (0, 1, 2)),
}

_NEEDS_B = {"orbit", "fixed-points", "norm-scan"}


def load_preset(name: str, tol: float = 1e-9) -> IntMatrix:
    """Integer matrix of a named preset, certified hyperbolic in SL(N, Z)."""
    try:
        B = IntMatrix(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    check_hyperbolic_toral(B, tol)
    return B


@dataclass
class ExperimentConfig:
    """One experiment: a matrix source, tolerances and command parameters.

    Exactly one of ``preset``, ``B`` (integer matrix) or ``M`` (real
    generator) must be given.  ``params`` holds the command-specific
    settings (``n``, ``eps``, ``plane``, ``res``, ``x0``, ...).
    """

    command: str
    preset: Optional[str] = None
    B: Optional[list] = None
    M: Optional[list] = None
    mode: str = "auto"
    tol: float = 1e-9
    hyp_tol: float = 1e-9
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None
    format: str = "json"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        sources = [s for s in ("preset", "B", "M") if getattr(self, s) is not None]
        if len(sources) != 1:
            raise ConfigError(f"exactly one matrix source required (preset, B or M), got {sources or 'none'}")
        for name in ("tol", "hyp_tol"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{name} must be a positive number")
        if self.mode not in ("auto", "connected", "disconnected"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.command in _NEEDS_B and self.M is not None:
            raise ConfigError(f"{self.command} needs an integer matrix (preset or B)")
        if self.B is not None:
            try:
                arr = np.array(self.B)
            except ValueError:
                arr = np.empty(0)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.dtype.kind not in "iu":
                raise ConfigError("B must be a square matrix of integers")
        if self.M is not None:
            try:
                arr = np.array(self.M, dtype=float)
            except (ValueError, TypeError):
                arr = np.empty(0)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or not np.all(np.isfinite(arr)):
                raise ConfigError("M must be a square matrix of finite reals")

    def integer_matrix(self) -> Optional[IntMatrix]:
        """The integer matrix, certified hyperbolic before any heavy work."""
        if self.preset is not None:
            return load_preset(self.preset, self.hyp_tol)
        if self.B is not None:
            B = IntMatrix(tuple(tuple(int(v) for v in row) for row in self.B))
            check_hyperbolic_toral(B, self.hyp_tol)
            return B
        return None

    def generator(self) -> np.ndarray:
        """Real generator ``M`` when given inline; spectrum checked for hyperbolicity."""
        M = np.array(self.M, dtype=float)
        SpectrumReport.from_eigenvalues(np.linalg.eigvals(M), "continuous", self.hyp_tol)
        return M

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        params = d.pop("params")
        d.update(params)
        return {k: v for k, v in d.items() if v is not None}


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"params"}


def _literal(text: str) -> Any:
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def load_config(path) -> ExperimentConfig:
    """Read an INI experiment file."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if parser.sections() != ["experiment"]:
        raise ConfigError("config must contain exactly one [experiment] section")
    raw = {k: _literal(v) for k, v in parser["experiment"].items()}
    return from_mapping(raw)


def from_mapping(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    if "command" not in raw:
        raise ConfigError("config is missing 'command'")
    for key in ("tol", "hyp_tol"):
        if isinstance(raw.get(key), int):
            raw[key] = float(raw[key])
    known = {k: raw.pop(k) for k in list(raw) if k in _FIELDS}
    return ExperimentConfig(**known, params=raw)
