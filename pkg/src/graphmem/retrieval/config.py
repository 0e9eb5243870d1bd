"""Per-algorithm hyperparameters.

Defaults are the fixed values used for all reported experiments. Mapping
keys accepted by :func:`config_from_mapping` are the published
hyperparameter names (``h_metric_name``, ``max_passed_nodes``, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Union

from ..errors import ConfigError

H_METRICS = ("ip", "weighted_sp", "avg_weighted_sp", "zero")
SORTING_MODES = ("ended_first", "continuous_first", "mixed")


@dataclass(frozen=True)
class AStarConfig:
    h_metric: str = "ip"
    max_depth: int = 10
    max_passed_nodes: int = 150

    name = "astar"

    def __post_init__(self):
        if self.h_metric not in H_METRICS:
            raise ConfigError(f"unknown h_metric {self.h_metric!r}")
        if self.max_depth < 1 or self.max_passed_nodes < 1:
            raise ConfigError("max_depth and max_passed_nodes must be >= 1")


@dataclass(frozen=True)
class WaterCirclesConfig:
    strict_filter: bool = True
    hyper_num: int = 15
    episodic_num: int = 15
    chain_triplets_num: int = 25
    other_triplets_num: int = 6
    do_text_pruning: bool = False
    text_pruning_chars: int = 512

    name = "watercircles"

    def __post_init__(self):
        for f in ("hyper_num", "episodic_num", "chain_triplets_num", "other_triplets_num"):
            if getattr(self, f) < 0:
                raise ConfigError(f"{f} must be >= 0")
        if self.text_pruning_chars < 1:
            raise ConfigError("text_pruning_chars must be >= 1")


@dataclass(frozen=True)
class BeamSearchConfig:
    max_depth: int = 5
    max_paths: int = 10
    same_path_intersection_by_node: bool = False
    diff_paths_intersection_by_node: bool = False
    diff_paths_intersection_by_rel: bool = False
    mean_alpha: float = 0.75
    final_sorting_mode: str = "mixed"

    name = "beamsearch"

    def __post_init__(self):
        if self.max_depth < 1 or self.max_paths < 1:
            raise ConfigError("max_depth and max_paths must be >= 1")
        if not 0.0 < self.mean_alpha <= 1.0:
            raise ConfigError("mean_alpha must lie in (0, 1]")
        if self.final_sorting_mode not in SORTING_MODES:
            raise ConfigError(f"unknown final_sorting_mode {self.final_sorting_mode!r}")


AlgorithmConfig = Union[AStarConfig, WaterCirclesConfig, BeamSearchConfig]

_ALIASES = {
    "astar": AStarConfig,
    "a*": AStarConfig,
    "watercircles": WaterCirclesConfig,
    "wc": WaterCirclesConfig,
    "beamsearch": BeamSearchConfig,
    "bs": BeamSearchConfig,
}
_RENAMES = {"h_metric_name": "h_metric"}


def config_class(name: str) -> type:
    try:
        return _ALIASES[name.strip().casefold()]
    except KeyError:
        raise ConfigError(f"unknown retrieval algorithm {name!r}") from None


def config_from_mapping(name: str, values: dict | None = None) -> AlgorithmConfig:
    cls = config_class(name)
    values = {_RENAMES.get(k, k): v for k, v in (values or {}).items()}
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown {cls.name} parameters: {sorted(unknown)}")
    return cls(**values)


def parse_combo(text: str, sections: dict | None = None) -> list[AlgorithmConfig]:
    """``"wc+bs"`` -> [WaterCirclesConfig(...), BeamSearchConfig(...)].

    ``sections`` maps canonical algorithm names to parameter overrides.
    """
    sections = sections or {}
    out = []
    for part in text.split("+"):
        part = part.strip()
        if not part:
            continue
        cls = config_class(part)
        out.append(config_from_mapping(cls.name, sections.get(cls.name)))
    if not out:
        raise ConfigError(f"empty retrieval combo {text!r}")
    return out


def combo_label(combo: list[AlgorithmConfig]) -> str:
    short = {"astar": "A*", "watercircles": "WC", "beamsearch": "BS"}
    return " + ".join(short[c.name] for c in combo)
