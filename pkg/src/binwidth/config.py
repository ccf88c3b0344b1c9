"""Run configuration: one JSON file describing an end-to-end run.

Every section rejects unknown keys so a typo in a hyper-parameter name
fails loudly instead of silently training with a default.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .data import Dataset, parse_cifar10_bin, parse_mnist_idx, stratified_split
from .errors import ConfigError
from .search import SearchConfig
from .templates import TEMPLATES
from .train import CIFAR_SCHEDULE, LrSchedule, TrainConfig


def _take(section: dict, allowed: dict, where: str) -> dict:
    """Merge user keys over defaults; unknown keys are errors."""
    if not isinstance(section, dict):
        raise ConfigError(f"'{where}' must be an object, got {type(section).__name__}")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in '{where}'; allowed: {sorted(allowed)}")
    merged = dict(allowed)
    merged.update(section)
    return merged


@dataclass(frozen=True)
class DatasetConfig:
    """Where the data lives and how the proxy splits are carved from it."""

    kind: str  # "idx" (image/label file pairs) or "records" (3073-byte records)
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    train: str | None = None
    test: str | None = None
    proxy_train_per_class: int = 500
    proxy_val_per_class: int = 100
    subset_seed: int = 0

    def _require(self, *names: str) -> None:
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"dataset kind '{self.kind}' needs '{name}'")
            if not os.path.exists(path):
                raise ConfigError(f"dataset file '{path}' ({name}) does not exist")

    def load_train(self) -> Dataset:
        if self.kind == "idx":
            self._require("train_images", "train_labels")
            return parse_mnist_idx(_read(self.train_images), _read(self.train_labels), split="train")
        self._require("train")
        return parse_cifar10_bin(_read(self.train), split="train")

    def has_test(self) -> bool:
        return (self.test_images is not None) if self.kind == "idx" else (self.test is not None)

    def load_test(self) -> Dataset:
        if self.kind == "idx":
            self._require("test_images", "test_labels")
            return parse_mnist_idx(_read(self.test_images), _read(self.test_labels), split="test")
        self._require("test")
        return parse_cifar10_bin(_read(self.test), split="test")

    def proxy_splits(self) -> tuple[Dataset, Dataset]:
        """Disjoint stratified train/val pools for candidate scoring."""
        return stratified_split(
            self.load_train(), self.proxy_train_per_class, self.proxy_val_per_class, self.subset_seed,
        )


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


@dataclass(frozen=True)
class RunConfig:
    template: str
    dataset: DatasetConfig
    search: SearchConfig
    proxy_train: TrainConfig
    full_train: TrainConfig
    supernet_init: bool
    output_dir: str


_SCHEDULE_DEFAULTS = {
    "base_lr": CIFAR_SCHEDULE.base_lr,
    "decay_epochs": list(CIFAR_SCHEDULE.decay_epochs),
    "decay_factor": CIFAR_SCHEDULE.decay_factor,
}


def _schedule(section: dict, where: str) -> LrSchedule:
    got = _take(section, _SCHEDULE_DEFAULTS, where)
    return LrSchedule(
        base_lr=float(got["base_lr"]),
        decay_epochs=tuple(int(e) for e in got["decay_epochs"]),
        decay_factor=float(got["decay_factor"]),
    )


def _train_config(section: dict, where: str, default_epochs: int, default_augment: bool) -> TrainConfig:
    defaults = {
        "epochs": default_epochs,
        "batch_size": 128,
        "momentum": 0.9,
        "weight_decay": 1e-4,
        "schedule": _SCHEDULE_DEFAULTS,
        "seed": 0,
        "augment": default_augment,
    }
    got = _take(section, defaults, where)
    return TrainConfig(
        epochs=int(got["epochs"]),
        batch_size=int(got["batch_size"]),
        momentum=float(got["momentum"]),
        weight_decay=float(got["weight_decay"]),
        schedule=_schedule(got["schedule"], where + ".schedule"),
        seed=int(got["seed"]),
        augment=bool(got["augment"]),
    )


def _search_config(section: dict) -> SearchConfig:
    defaults = {
        "population_size": 32,
        "generations": 50,
        "lambda": 4.0,
        "proxy_epochs": 10,
        "tournament_size": 2,
        "crossover_rate": 0.9,
        "mutation_rate": None,
        "elitism_count": 2,
        "master_seed": 0,
        "inject_anchors": True,
    }
    got = _take(section, defaults, "search")
    return SearchConfig(
        population_size=int(got["population_size"]),
        generations=int(got["generations"]),
        lambda_=float(got["lambda"]),
        proxy_epochs=int(got["proxy_epochs"]),
        tournament_size=int(got["tournament_size"]),
        crossover_rate=float(got["crossover_rate"]),
        mutation_rate=None if got["mutation_rate"] is None else float(got["mutation_rate"]),
        elitism_count=int(got["elitism_count"]),
        master_seed=int(got["master_seed"]),
        inject_anchors=bool(got["inject_anchors"]),
    )


def _dataset_config(section: dict) -> DatasetConfig:
    defaults = {
        "kind": None,
        "train_images": None,
        "train_labels": None,
        "test_images": None,
        "test_labels": None,
        "train": None,
        "test": None,
        "proxy_train_per_class": 500,
        "proxy_val_per_class": 100,
        "subset_seed": 0,
    }
    got = _take(section, defaults, "dataset")
    kind = got["kind"]
    if kind not in ("idx", "records"):
        raise ConfigError(f"dataset.kind must be 'idx' or 'records', got {kind!r}")
    return DatasetConfig(
        kind=kind,
        train_images=got["train_images"],
        train_labels=got["train_labels"],
        test_images=got["test_images"],
        test_labels=got["test_labels"],
        train=got["train"],
        test=got["test"],
        proxy_train_per_class=int(got["proxy_train_per_class"]),
        proxy_val_per_class=int(got["proxy_val_per_class"]),
        subset_seed=int(got["subset_seed"]),
    )


def parse_run_config(payload: dict) -> RunConfig:
    defaults = {
        "template": None,
        "dataset": None,
        "search": {},
        "proxy_train": {},
        "full_train": {},
        "supernet_init": False,
        "output_dir": None,
    }
    got = _take(payload, defaults, "run config")
    template = got["template"]
    if template not in TEMPLATES:
        raise ConfigError(f"template must be one of {sorted(TEMPLATES)}, got {template!r}")
    if got["dataset"] is None:
        raise ConfigError("run config needs a 'dataset' section")
    if not got["output_dir"]:
        raise ConfigError("run config needs an 'output_dir'")
    search = _search_config(got["search"])
    proxy_train = _train_config(got["proxy_train"], "proxy_train", default_epochs=search.proxy_epochs,
                                default_augment=False)
    full_train = _train_config(got["full_train"], "full_train", default_epochs=200, default_augment=True)
    return RunConfig(
        template=str(template),
        dataset=_dataset_config(got["dataset"]),
        search=search,
        proxy_train=proxy_train,
        full_train=full_train,
        supernet_init=bool(got["supernet_init"]),
        output_dir=str(got["output_dir"]),
    )


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file '{path}' does not exist") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file '{path}' is not valid JSON: {e}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"config file '{path}' must hold a JSON object")
    return parse_run_config(payload)
