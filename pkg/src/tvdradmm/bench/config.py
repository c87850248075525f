"""
Run configuration: INI-style ``[section]`` headers with ``key = value``.

Every key has a default except ``[output] dir``. Unknown sections and keys
are rejected, so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields

ALGORITHMS = ("dradmm", "pc_gradient", "dual_decomp")


class ConfigError(ValueError):
    """Malformed, incomplete or inconsistent configuration."""


@dataclass(frozen=True)
class GraphConfig:
    n_nodes: int = 25
    radius: float = 0.35
    seed: int = 1
    edge_file: str = ""


@dataclass(frozen=True)
class CostConfig:
    kind: str = "logistic"
    amp: float = 2.5
    nu: float = math.pi / 80
    seed: int = 1
    # only for kind = quadratic: curvatures drawn from U[1, ell]
    ell: float = 1.25


@dataclass(frozen=True)
class AlgoConfig:
    algorithm: tuple = ALGORITHMS
    epsilon: float = 1e-3
    rho: float = 1.06e4
    n_pred: int = 5
    n_corr: int = 5
    t_s: float = 0.1
    horizon: int = 1000
    # None means grid-tuned
    alpha: float | None = None
    step: float | None = None
    inner_tol: float = 1e-10
    inner_max_iter: int = 50


@dataclass(frozen=True)
class OutputConfig:
    dir: str = ""


@dataclass(frozen=True)
class RunConfig:
    graph: GraphConfig = field(default_factory=GraphConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    algo: AlgoConfig = field(default_factory=AlgoConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def replace_algo(self, **kw):
        a = asdict(self.algo)
        a.update(kw)
        return RunConfig(self.graph, self.cost, AlgoConfig(**a), self.output)

    def items(self):
        """Flattened ``(section.key, value)`` pairs, for metadata files."""
        for sec in ("graph", "cost", "algo", "output"):
            for k, v in asdict(getattr(self, sec)).items():
                if isinstance(v, tuple):
                    v = ",".join(v)
                elif v is None:
                    v = "auto"
                yield f"{sec}.{k}", v


SECTIONS = {"graph": GraphConfig, "cost": CostConfig, "algo": AlgoConfig,
            "output": OutputConfig}
REQUIRED = {("output", "dir")}


def _convert(sec, key, raw, default):
    raw = raw.strip()
    try:
        if key == "algorithm":
            names = [s.strip() for s in raw.split(",") if s.strip()]
            if names == ["all"]:
                return ALGORITHMS
            bad = [s for s in names if s not in ALGORITHMS]
            if bad or not names:
                raise ConfigError(f"[{sec}] algorithm: unknown {bad or raw!r}")
            return tuple(dict.fromkeys(names))
        if key in ("alpha", "step"):
            return None if raw == "auto" else float(raw)
        if isinstance(default, bool):
            if raw not in ("true", "false"):
                raise ValueError(raw)
            return raw == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"[{sec}] {key}: cannot parse {raw!r}") from None


def validate(cfg):
    """Raise `ConfigError` on out-of-range values."""
    g, c, a = cfg.graph, cfg.cost, cfg.algo
    checks = [
        (g.n_nodes >= 2, "[graph] n_nodes must be at least 2"),
        (g.radius >= 0, "[graph] radius must be non-negative"),
        (c.kind in ("logistic", "quadratic"),
         "[cost] kind must be logistic or quadratic"),
        (c.ell >= 1, "[cost] ell must be at least 1"),
        (a.epsilon >= 0, "[algo] epsilon must be non-negative"),
        (a.rho > 0, "[algo] rho must be positive"),
        (a.n_pred >= 0 and a.n_corr >= 0, "[algo] n_pred, n_corr must be >= 0"),
        (a.n_pred + a.n_corr > 0, "[algo] n_pred and n_corr cannot both be 0"),
        (a.t_s > 0, "[algo] t_s must be positive"),
        (a.horizon >= 0, "[algo] horizon must be non-negative"),
        (a.alpha is None or a.alpha > 0, "[algo] alpha must be positive"),
        (a.step is None or a.step > 0, "[algo] step must be positive"),
        (a.inner_tol > 0, "[algo] inner_tol must be positive"),
        (bool(cfg.output.dir), "[output] dir must not be empty"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)


def parse_config(text, base_dir=None):
    """
    Parse configuration text.

    Relative ``[output] dir`` and ``[graph] edge_file`` paths are resolved
    against `base_dir` when given.
    """
    cp = configparser.ConfigParser(interpolation=None, default_section="\0")
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"syntax error: {e}") from None
    values = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        known = {f.name: f.default for f in fields(SECTIONS[sec])}
        for key, raw in cp.items(sec):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            values[(sec, key)] = _convert(sec, key, raw, known[key])
    missing = REQUIRED - values.keys()
    if missing:
        raise ConfigError("missing required key(s): " + ", ".join(
            f"[{s}] {k}" for s, k in sorted(missing)))
    if base_dir is not None:
        from pathlib import Path
        for sec, key in (("output", "dir"), ("graph", "edge_file")):
            v = values.get((sec, key))
            if v and not Path(v).is_absolute():
                values[(sec, key)] = str(Path(base_dir) / v)
    parts = {sec: cls(**{k: v for (s, k), v in values.items() if s == sec})
             for sec, cls in SECTIONS.items()}
    cfg = RunConfig(**parts)
    validate(cfg)
    return cfg


def load_config(path):
    """Read and parse a configuration file; I/O errors propagate."""
    from pathlib import Path
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


DEFAULT_CONFIG = """\
[graph]
n_nodes = 25
radius = 0.35
seed = 1

[cost]
kind = logistic
amp = 2.5
nu = 0.039269908169872414
seed = 1

[algo]
algorithm = all
epsilon = 1e-3
rho = 1.06e4
n_pred = 5
n_corr = 5
t_s = 0.1
horizon = 1000
alpha = auto
step = auto

[output]
dir = out
"""
