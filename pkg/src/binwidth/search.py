"""Evolutionary search over expansion codes.

Classic generational loop: seeded random initial population (optionally
anchored by the uniform-1x and uniform-4x codes), tournament selection,
uniform crossover, forced-change mutation, and elitism. Candidate
evaluation trains a short proxy schedule and scores top-1 validation
accuracy against normalized cost.

Determinism contract: breeding for a generation consumes a sequential
generator derived from (master_seed, "breed", generation); every
candidate evaluation is seeded by (master_seed, "eval", generation,
index). The trajectory therefore depends only on the config and data,
never on evaluation scheduling, and a killed run can be resumed by
replaying its log.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .checkpoint import Checkpoint, inherit_weights
from .cost import CostReport, count_cost
from .data import Dataset
from .errors import FormatError, InputError
from .net import instantiate
from .seeding import derive_seed, rng_from
from .space import RATIOS, ExpansionCode, random_code, uniform_code, validate_code
from .templates import NetworkTemplate
from .train import TrainConfig, accuracy, train_network
from .errors import DivergenceError


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 32
    generations: int = 50
    lambda_: float = 4.0
    proxy_epochs: int = 10
    tournament_size: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None means 1/n_genes
    elitism_count: int = 2
    master_seed: int = 0
    inject_anchors: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise InputError(f"population_size must be >= 2, got {self.population_size}")
        if self.generations < 1:
            raise InputError(f"generations must be >= 1, got {self.generations}")
        if self.lambda_ < 0:
            raise InputError(f"lambda must be >= 0, got {self.lambda_}")
        if self.proxy_epochs < 0:
            raise InputError(f"proxy_epochs must be >= 0, got {self.proxy_epochs}")
        if not 1 <= self.tournament_size <= self.population_size:
            raise InputError(f"tournament_size must lie in [1, K], got {self.tournament_size}")
        if not 0 <= self.crossover_rate <= 1:
            raise InputError(f"crossover_rate must lie in [0,1], got {self.crossover_rate}")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise InputError(f"mutation_rate must lie in [0,1], got {self.mutation_rate}")
        if not 0 <= self.elitism_count < self.population_size:
            raise InputError(f"elitism_count must lie in [0, K), got {self.elitism_count}")


@dataclass
class Individual:
    code: ExpansionCode
    acc: float
    cost: CostReport | None
    fitness: float
    eval_seed: int
    diverged: bool = False


@dataclass
class SearchLogRecord:
    generation: int
    index: int
    code: ExpansionCode
    acc: float
    flops: float
    flops_norm: float
    fitness: float
    eval_seed: int
    wall_time: float
    diverged: bool = False
    random_parents: bool = False

    def to_json(self) -> str:
        payload = dataclasses.asdict(self)
        payload["code"] = [int(r) if float(r).is_integer() else r for r in self.code]
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SearchLogRecord":
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"bad search log line: {e}") from None
        fields = {f.name for f in dataclasses.fields(cls)}
        if not isinstance(payload, dict) or set(payload) != fields:
            raise FormatError(f"search log line has keys {sorted(payload)}, expected {sorted(fields)}")
        payload["code"] = validate_code(payload["code"])
        return cls(**payload)


def fitness(acc_percent: float, flops_norm: float, lambda_: float) -> float:
    """max(acc - lambda * flops_norm, 0); accuracy on the 0..100 scale."""
    if not 0 <= acc_percent <= 100:
        raise InputError(f"accuracy must lie in [0,100], got {acc_percent}")
    if flops_norm <= 0:
        raise InputError(f"flops_norm must be positive, got {flops_norm}")
    return max(acc_percent - lambda_ * flops_norm, 0.0)


def select_parent(population: list[Individual], rng: np.random.Generator, tournament_size: int = 2) -> Individual:
    """Tournament without replacement; highest fitness wins, ties to the
    lowest population index."""
    if not population:
        raise InputError("population is empty")
    k = min(tournament_size, len(population))
    contestants = sorted(int(i) for i in rng.choice(len(population), size=k, replace=False))
    best = contestants[0]
    for i in contestants[1:]:
        if population[i].fitness > population[best].fitness:
            best = i
    return population[best]


def crossover(parent_a: ExpansionCode, parent_b: ExpansionCode, rng: np.random.Generator,
              crossover_rate: float = 0.9) -> ExpansionCode:
    """Uniform crossover with probability crossover_rate, else a copy of
    parent_a. One rate draw plus one mask draw per call, rate regardless."""
    if len(parent_a) != len(parent_b):
        raise InputError(f"parent lengths differ: {len(parent_a)} vs {len(parent_b)}")
    do_cross = rng.random() < crossover_rate
    mask = rng.random(len(parent_a)) < 0.5
    if not do_cross:
        return tuple(parent_a)
    return tuple(a if take_a else b for a, b, take_a in zip(parent_a, parent_b, mask))


def mutate(code: ExpansionCode, rng: np.random.Generator, mutation_rate: float) -> ExpansionCode:
    """Per-gene resample from the five other ratios with probability
    mutation_rate (a triggered gene always changes)."""
    triggers = rng.random(len(code)) < mutation_rate
    out = []
    for gene, hit in zip(code, triggers):
        if hit:
            others = [r for r in RATIOS if r != gene]
            gene = others[int(rng.integers(0, len(others)))]
        out.append(gene)
    return tuple(out)


def evaluate_candidate(
    code,
    template: NetworkTemplate,
    proxy_train: Dataset,
    proxy_val: Dataset,
    config: SearchConfig,
    eval_seed: int,
    train_config: TrainConfig | None = None,
    supernet: Checkpoint | None = None,
) -> Individual:
    """Train a short proxy schedule and score the candidate.

    Deterministic in (code, eval_seed): the network init and the batch
    order both derive from eval_seed. A training divergence is not fatal;
    the candidate scores accuracy 0 and is flagged.
    """
    code = validate_code(code, template.n_genes)
    cost = count_cost(template, code)
    base = train_config if train_config is not None else TrainConfig(epochs=config.proxy_epochs)
    proxy_cfg = dataclasses.replace(
        base, epochs=config.proxy_epochs, seed=derive_seed(eval_seed, "train"),
    )
    net = instantiate(template, code, seed=derive_seed(eval_seed, "init"))
    if supernet is not None:
        net.load_state_dict(inherit_weights(supernet, template, code).arrays)
    diverged = False
    try:
        train_network(net, proxy_train, proxy_cfg)
        acc = accuracy(net, proxy_val)
    except DivergenceError:
        diverged = True
        acc = 0.0
    return Individual(
        code=code,
        acc=acc,
        cost=cost,
        fitness=fitness(acc, cost.flops_norm, config.lambda_),
        eval_seed=eval_seed,
        diverged=diverged,
    )


Evaluator = Callable[[ExpansionCode, int, int, int], Individual]


def _breed(
    population: list[Individual],
    config: SearchConfig,
    mutation_rate: float,
    rng: np.random.Generator,
    count: int,
) -> tuple[list[ExpansionCode], bool]:
    """Children for the next generation; sequential draws, no evaluation."""
    random_fallback = all(ind.fitness == 0 for ind in population)
    children = []
    for _ in range(count):
        if random_fallback:
            pa = population[int(rng.integers(0, len(population)))]
            pb = population[int(rng.integers(0, len(population)))]
        else:
            pa = select_parent(population, rng, config.tournament_size)
            pb = select_parent(population, rng, config.tournament_size)
        child = crossover(pa.code, pb.code, rng, config.crossover_rate)
        children.append(mutate(child, rng, mutation_rate))
    return children, random_fallback


def _elite_order(population: list[Individual]) -> list[int]:
    return sorted(range(len(population)), key=lambda i: (-population[i].fitness, i))


def evolve(
    template: NetworkTemplate,
    config: SearchConfig,
    evaluator: Evaluator,
    log_sink: Callable[[SearchLogRecord], None] | None = None,
    prior_records: Iterable[SearchLogRecord] = (),
) -> tuple[Individual, list[SearchLogRecord]]:
    """Run the generational loop; returns (best ever, all log records).

    `evaluator(code, generation, index, eval_seed)` produces the
    Individual; `evaluate_candidate` partially applied is the real one,
    and tests substitute closed-form scorers. Records passed in
    `prior_records` replace matching evaluations (log replay); `log_sink`
    receives only newly produced records, in order.
    """
    n = template.n_genes
    mutation_rate = config.mutation_rate if config.mutation_rate is not None else 1.0 / n
    prior = {}
    for rec in prior_records:
        key = (rec.generation, rec.index)
        if key in prior:
            raise FormatError(f"duplicate log record for generation {rec.generation} index {rec.index}")
        prior[key] = rec
    records: list[SearchLogRecord] = []
    best: Individual | None = None
    population: list[Individual] = []

    def run_slot(gen: int, idx: int, code: ExpansionCode, random_parents: bool) -> Individual:
        nonlocal best
        code = validate_code(code, n)
        seed = derive_seed(config.master_seed, "eval", gen, idx)
        replay = prior.pop((gen, idx), None)
        if replay is not None:
            if replay.code != code or replay.eval_seed != seed:
                raise FormatError(
                    f"log record at generation {gen} index {idx} does not match "
                    f"this configuration (code {replay.code} vs {code})"
                )
            ind = Individual(
                code=code, acc=replay.acc, cost=count_cost(template, code),
                fitness=replay.fitness, eval_seed=seed, diverged=replay.diverged,
            )
            records.append(replay)
        else:
            ind = evaluator(code, gen, idx, seed)
            rec = SearchLogRecord(
                generation=gen, index=idx, code=ind.code, acc=ind.acc,
                flops=ind.cost.flops if ind.cost else 0.0,
                flops_norm=ind.cost.flops_norm if ind.cost else 0.0,
                fitness=ind.fitness, eval_seed=seed, wall_time=time.time(),
                diverged=ind.diverged, random_parents=random_parents,
            )
            records.append(rec)
            if log_sink is not None:
                log_sink(rec)
        if best is None or ind.fitness > best.fitness:
            best = ind
        return ind

    for gen in range(config.generations):
        rng = rng_from(config.master_seed, "breed", gen)
        if gen == 0:
            codes: list[ExpansionCode] = []
            if config.inject_anchors:
                codes.append(uniform_code(1, n))
                if config.population_size > 1:
                    codes.append(uniform_code(4, n))
            while len(codes) < config.population_size:
                codes.append(random_code(n, rng))
            population = [run_slot(0, i, c, False) for i, c in enumerate(codes)]
            continue
        order = _elite_order(population)
        elites = [population[i] for i in order[: config.elitism_count]]
        children, fallback = _breed(
            population, config, mutation_rate, rng,
            config.population_size - config.elitism_count,
        )
        evaluated = [
            run_slot(gen, config.elitism_count + j, code, fallback)
            for j, code in enumerate(children)
        ]
        population = elites + evaluated
    if prior:
        leftover = sorted(prior)
        raise FormatError(f"log contains records beyond the configured run: {leftover[:3]}")
    return best, records


def make_proxy_evaluator(
    template: NetworkTemplate,
    proxy_train: Dataset,
    proxy_val: Dataset,
    config: SearchConfig,
    train_config: TrainConfig | None = None,
    supernet: Checkpoint | None = None,
) -> Evaluator:
    """The production evaluator: proxy training on real data."""

    def run(code: ExpansionCode, gen: int, idx: int, eval_seed: int) -> Individual:
        return evaluate_candidate(
            code, template, proxy_train, proxy_val, config, eval_seed,
            train_config=train_config, supernet=supernet,
        )

    return run
