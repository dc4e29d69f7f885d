"""Plain key=value experiment files, `#` comments, dashes in key names."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .coordinator import FAIR, PLAIN, run_federation
from .population import PopulationSpec


class ConfigError(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class ExperimentConfig:
    clients: int = 50
    days: int = 365
    base_adherence: float = 0.9
    weekend_dip: float = 0.6
    skew: float = 0.0
    slots_per_day: int = 2
    bottle_size: int = 60
    seed: int = 0
    rounds: int = 100
    clients_per_round: int = 10
    mode: str = PLAIN
    q: float = 0.0
    epochs: int = 5
    lr: float = 0.5
    holdout_fraction: float = 0.2

    def population_spec(self) -> PopulationSpec:
        return PopulationSpec(
            n_clients=self.clients,
            base_adherence=self.base_adherence,
            weekend_dip=self.weekend_dip,
            skew=self.skew,
            slots_per_day=self.slots_per_day,
            bottle_size=self.bottle_size,
            seed=self.seed,
        )

    def run(self):
        return run_federation(
            self.population_spec(),
            days=self.days,
            rounds=self.rounds,
            clients_per_round=self.clients_per_round,
            mode=self.mode,
            q=self.q,
            epochs=self.epochs,
            lr=self.lr,
            holdout_fraction=self.holdout_fraction,
        )


_FIELDS = {f.name.replace("_", "-"): f.type for f in fields(ExperimentConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def parse_experiment_config(text: str) -> ExperimentConfig:
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(number, f"expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELDS:
            raise ConfigError(number, f"unknown key {key!r}")
        attr = key.replace("-", "_")
        if attr in values:
            raise ConfigError(number, f"duplicate key {key!r}")
        try:
            values[attr] = _CASTS[_FIELDS[key]](value)
        except ValueError:
            raise ConfigError(number, f"bad value for {key}: {value!r}")
    cfg = ExperimentConfig(**values)
    if cfg.mode not in (PLAIN, FAIR):
        raise ValueError(f"mode must be {PLAIN!r} or {FAIR!r}")
    return cfg


def load_experiment_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_experiment_config(f.read())
