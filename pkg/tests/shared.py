"""Expensive experiment runs shared between test modules (computed once per process)."""

from functools import lru_cache

from cyclrf.harness import ExperimentConfig, run_experiment, shipped_pairs

FIXTURE_SEEDS = tuple(range(10))


@lru_cache(maxsize=None)
def pair_report(name, seed=0, M=500, r=100.0, workers=1):
    m, w = shipped_pairs()[name]
    return run_experiment(ExperimentConfig(m, w, r=r, M=M, seed=seed, workers=workers, label=name))
