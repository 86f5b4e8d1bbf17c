"""Feature toggles, configuration arms and search constants."""

from __future__ import annotations

from dataclasses import dataclass, replace

ARMS = ("base", "taos", "tt", "tt-openapi", "jpa", "all")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Features:
    # new method replacements: collections/maps/enums, Object equals,
    # UUID/URI/URL, bean validation and sleep handling
    tt: bool = False
    # fake header/param discovery of undeclared inputs
    openapi: bool = False
    # entity vs. table constraint reconciliation for inserts
    jpa: bool = False
    taos: bool = False
    suppress_scheduled: bool = True
    base: float = 0.1
    taint_mutation_probability: float = 0.5
    taos_probability: float = 0.9
    sleep_cap: float = 1.0
    discovery_window: float = 0.10
    discovery_cap: int = 16
    violate_probability: float = 0.05
    heuristic_size_cap: int = 1024

    @property
    def taint_on_mutation(self) -> float:
        return self.taint_mutation_probability if self.tt else 0.0

    @property
    def taint_on_sampling(self) -> float:
        return self.taos_probability if self.taos else 0.0

    def validate(self) -> "Features":
        if not (0.0 < self.base < 1.0):
            raise ConfigError(f"b must be in (0,1), got {self.base}")
        for name in ("taint_mutation_probability", "taos_probability", "discovery_window", "violate_probability"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0,1], got {v}")
        if self.sleep_cap < 0:
            raise ConfigError("sleep cap must be >= 0")
        if self.discovery_cap < 0:
            raise ConfigError("discovery cap must be >= 0")
        if self.openapi and not self.tt:
            raise ConfigError("schema discovery requires the tt replacements")
        return self


def arm_features(arm: str, **overrides) -> Features:
    arm = arm.lower().replace("_", "-")
    if arm not in ARMS:
        raise ConfigError(f"unknown arm {arm!r}; choose from {', '.join(ARMS)}")
    f = {
        "base": Features(),
        "taos": Features(taos=True),
        "tt": Features(tt=True),
        "tt-openapi": Features(tt=True, openapi=True),
        "jpa": Features(jpa=True),
        "all": Features(tt=True, openapi=True, jpa=True, taos=True),
    }[arm]
    return replace(f, **overrides).validate() if overrides else f


@dataclass(frozen=True)
class MioConfig:
    population: int = 10
    focus_at: float = 0.5
    start_random: float = 0.5
    max_mutations: int = 3
    max_actions: int = 3
    add_action_probability: float = 0.05
