"""Experiment configuration: dataclasses plus a strict TOML loader."""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..adversary import STRATEGY_NAMES, Strategy, choose_faulty, max_faults


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class FaultSection:
    f: int = 0
    placement: str = "last"            # first | last | random
    strategy: str = "silent"
    strategy_seed: int | None = None   # defaults to the run seed
    delta: int = 1
    split: int = 50
    allow_excess: bool = False


@dataclass
class InitSection:
    mode: str = "random"               # defaults | random | adversarial
    seed: int | None = None            # defaults to the run seed
    spec: dict = field(default_factory=dict)


@dataclass
class CheckerSection:
    min_window: int | None = None      # clean suffix required; default max(4X, 10(f+1), 100)


@dataclass
class OutputSection:
    dir: str | None = None
    trace: bool = True
    csv: bool = True
    per_node_csv: bool = False


@dataclass
class ExperimentConfig:
    n: int = 4
    C: int = 1024
    H: int | None = None               # default max(20n, 5000)
    seed: int = 0
    stack: str = "efficient"           # efficient | naive
    engine: str = "auto"               # auto | compiled | python
    R: int = 8
    epsilon: str = "1/4"
    faults: FaultSection = field(default_factory=FaultSection)
    init: InitSection = field(default_factory=InitSection)
    checker: CheckerSection = field(default_factory=CheckerSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        self.validate()

    @property
    def horizon(self) -> int:
        return self.H if self.H is not None else max(20 * self.n, 5000)

    @property
    def eps(self) -> Fraction:
        return Fraction(self.epsilon)

    def strategy(self) -> Strategy:
        fs = self.faults
        seed = self.seed if fs.strategy_seed is None else fs.strategy_seed
        return Strategy(fs.strategy, seed, fs.delta, fs.split)

    def faulty(self) -> tuple[int, ...]:
        return choose_faulty(self.n, self.faults.f, self.faults.placement, self.seed)

    def init_seed(self) -> int:
        return self.seed if self.init.seed is None else self.init.seed

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)
        need(isinstance(self.n, int) and self.n >= 1, "n must be an integer >= 1")
        need(isinstance(self.C, int) and self.C >= 2, "C must be an integer >= 2")
        need(self.H is None or (isinstance(self.H, int) and self.H >= 1), "H must be >= 1")
        need(self.stack in ("efficient", "naive"), "stack must be 'efficient' or 'naive'")
        need(self.engine in ("auto", "compiled", "python"), "engine must be auto, compiled or python")
        need(isinstance(self.R, int) and self.R >= 8, "R must be an integer >= 8 (the longest subroutine)")
        try:
            eps = Fraction(self.epsilon)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"epsilon: {exc}") from None
        need(0 < eps < 1, "epsilon must lie in (0, 1)")
        fs = self.faults
        need(isinstance(fs.f, int) and 0 <= fs.f <= self.n, "faults.f must lie in [0, n]")
        need(fs.f <= max_faults(self.n) or fs.allow_excess,
             f"faults.f={fs.f} exceeds t={max_faults(self.n)} (set allow_excess to override)")
        need(fs.placement in ("first", "last", "random"), "faults.placement must be first, last or random")
        need(fs.strategy in STRATEGY_NAMES, f"faults.strategy must be one of {STRATEGY_NAMES}")
        need(0 <= fs.split <= 100, "faults.split is a percentage")
        need(self.init.mode in ("defaults", "random", "adversarial"),
             "init.mode must be defaults, random or adversarial")
        need(self.checker.min_window is None or self.checker.min_window >= 1, "checker.min_window must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {"faults": FaultSection, "init": InitSection, "checker": CheckerSection,
             "output": OutputSection}


def _build(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for k, v in data.items():
        if k in _SECTIONS and cls is ExperimentConfig:
            if not isinstance(v, dict):
                raise ConfigError(f"[{k}] must be a table")
            kwargs[k] = _build(_SECTIONS[k], v, f"[{k}]")
        else:
            kwargs[k] = v
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    proto = data.pop("protocol", None)
    if proto is not None:
        if not isinstance(proto, dict) or set(proto) - {"R", "epsilon"}:
            raise ConfigError("[protocol] accepts only R and epsilon")
        data.update(proto)
    return _build(ExperimentConfig, data, "top level")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


EXAMPLE_CONFIG = """\
# earlycount experiment configuration
n = 16              # number of nodes
C = 1024            # output modulus
H = 5000            # rounds (default max(20n, 5000))
seed = 1
stack = "efficient" # or "naive" (broadcast filter + 3-round king everywhere)
engine = "auto"     # auto | compiled | python

[protocol]
R = 8
epsilon = "1/4"

[faults]
f = 2
placement = "last"  # first | last | random
strategy = "equivocate"  # silent | random | equivocate | clockjump | leaderspoof | minoritysplit
delta = 1           # clockjump shift
split = 50          # equivocate: percentage of receivers in the first group

[init]
mode = "random"     # defaults | random | adversarial
# [init.spec]       # adversarial only
# clocks = "distinct"
# pipelines = "max"

[checker]
# min_window = 1112

[output]
dir = "out"
trace = true
csv = true
per_node_csv = false
"""
