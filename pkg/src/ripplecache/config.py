"""Run configuration and its INI file format.

Sections and keys (all optional; defaults are the 16-node profile):

``[run]``        profile, policy, seeds, horizon, warmup_fraction,
                 mean_session_interval, replan_interval (0 keeps placements fixed)
``[topology]``   kind (desk | ba | file), file, n_nodes, n_as, intra_links,
                 n_producers, n_consumers, seed, bandwidth_mbps, delay_ms
``[catalog]``    files, segments, ladder_mbps, segment_duration, alpha
``[cache]``      omega
``[adaptation]`` drop_threshold, combine_weight, window, upshift_patience,
                 buffer_target, stability_window
``[classic]``    eta, max_iters, tol, node_budget
``[finder]``     max_iters

``seeds`` accepts a comma list and ``a-b`` ranges, e.g. ``1-10`` or ``1,4,9``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from importlib import resources

from .adaptation import AdaptationParams
from .errors import ConfigError

POLICIES = ("none", "ce2-lru", "ce2-lfu", "probcache", "classic", "finder")


@dataclass(frozen=True)
class RunConfig:
    profile: str = "bip-tractable"
    policy: str = "finder"
    seeds: tuple = (1,)
    horizon: float = 3000.0
    warmup_fraction: float = 1 / 3
    mean_session_interval: float = 300.0
    replan_interval: float = 100.0

    topology: str = "desk"
    topology_file: str | None = None
    n_nodes: int = 16
    n_as: int = 6
    intra_links: int = 1
    n_producers: int = 1
    n_consumers: int = 32
    topology_seed: int = 0
    bandwidth_mbps: float = 20.0
    delay_ms: float = 2.0

    files: int = 25
    segments: int = 25
    ladder_mbps: tuple = (1.0, 2.5, 5.0, 8.0)
    segment_duration: float = 4.0
    alpha: float = 1.2

    omega: float = 0.2
    adaptation: AdaptationParams = field(default_factory=AdaptationParams)

    eta: float = 1.0
    classic_max_iters: int = 10
    classic_tol: float = 0.01
    node_budget: int = 20_000

    finder_max_iters: int = 5

    def __post_init__(self):
        if not 0 < self.omega <= 1:
            raise ConfigError(f"omega must be in (0, 1], got {self.omega}")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.eta < 0:
            raise ConfigError("eta must be >= 0")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {', '.join(POLICIES)}")
        if self.topology not in ("desk", "ba", "file"):
            raise ConfigError(f"unknown topology kind {self.topology!r}")
        if self.topology == "file" and not self.topology_file:
            raise ConfigError("topology kind 'file' needs topology.file")
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigError("warmup_fraction must be in [0, 1)")
        if self.replan_interval < 0:
            raise ConfigError("replan_interval must be >= 0")
        if self.horizon <= 0 or self.mean_session_interval <= 0:
            raise ConfigError("horizon and mean_session_interval must be > 0")

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


# (section, key) -> (field, parser)
def _seeds(text: str) -> tuple:
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


_KEYS = {
    ("run", "profile"): ("profile", str),
    ("run", "policy"): ("policy", str),
    ("run", "seeds"): ("seeds", _seeds),
    ("run", "horizon"): ("horizon", float),
    ("run", "warmup_fraction"): ("warmup_fraction", float),
    ("run", "mean_session_interval"): ("mean_session_interval", float),
    ("run", "replan_interval"): ("replan_interval", float),
    ("topology", "kind"): ("topology", str),
    ("topology", "file"): ("topology_file", str),
    ("topology", "n_nodes"): ("n_nodes", int),
    ("topology", "n_as"): ("n_as", int),
    ("topology", "intra_links"): ("intra_links", int),
    ("topology", "n_producers"): ("n_producers", int),
    ("topology", "n_consumers"): ("n_consumers", int),
    ("topology", "seed"): ("topology_seed", int),
    ("topology", "bandwidth_mbps"): ("bandwidth_mbps", float),
    ("topology", "delay_ms"): ("delay_ms", float),
    ("catalog", "files"): ("files", int),
    ("catalog", "segments"): ("segments", int),
    ("catalog", "ladder_mbps"): ("ladder_mbps", _floats),
    ("catalog", "segment_duration"): ("segment_duration", float),
    ("catalog", "alpha"): ("alpha", float),
    ("cache", "omega"): ("omega", float),
    ("classic", "eta"): ("eta", float),
    ("classic", "max_iters"): ("classic_max_iters", int),
    ("classic", "tol"): ("classic_tol", float),
    ("classic", "node_budget"): ("node_budget", int),
    ("finder", "max_iters"): ("finder_max_iters", int),
}
_ADAPT = {f.name: f.type for f in dataclasses.fields(AdaptationParams)}

# names accepted by ``sweep --param``
SWEEPABLE = {"omega": float, "alpha": float, "eta": float, "policy": str,
             "horizon": float, "files": int, "segments": int, "replan_interval": float}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    kw: dict = {}
    adapt: dict = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if section == "adaptation":
                if key not in _ADAPT:
                    raise ConfigError(f"unknown key [adaptation] {key}")
                adapt[key] = float(raw) if _ADAPT[key] in (float, "float") else int(raw)
                continue
            if (section, key) not in _KEYS:
                raise ConfigError(f"unknown key [{section}] {key}")
            name, conv = _KEYS[(section, key)]
            try:
                kw[name] = conv(raw)
            except ValueError as e:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from e
    try:
        if adapt:
            kw["adaptation"] = AdaptationParams(**adapt)
        return RunConfig(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e


def shipped_config(name: str) -> RunConfig:
    """Load one of the bundled profiles: ``bip_tractable`` or ``large_scale``."""
    text = resources.files("ripplecache").joinpath("configs", f"{name}.ini").read_text()
    return parse_config(text)


def apply_param(cfg: RunConfig, name: str, value: str) -> RunConfig:
    if name not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {name!r}; choose from {', '.join(sorted(SWEEPABLE))}")
    try:
        return cfg.replace(**{name: SWEEPABLE[name](value)})
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {value!r}") from e
