"""Uniform-crossover genetic algorithm as a learner for noisy parities."""
from .chromo import LocusFrequency, Population, one_frequency, random_population
from .errors import CapabilityError
from .learner import BoostPlan, approx_learn, attributewise_learn, boost_plan, recursive_majority
from .oracle import OracleSpec, QueryCounter, query, target_concept
from .uga import GaConfig, run, run_batch, step

__version__ = "0.1.0"

__all__ = [
    "BoostPlan",
    "CapabilityError",
    "GaConfig",
    "LocusFrequency",
    "OracleSpec",
    "Population",
    "QueryCounter",
    "approx_learn",
    "attributewise_learn",
    "boost_plan",
    "one_frequency",
    "query",
    "random_population",
    "recursive_majority",
    "run",
    "run_batch",
    "step",
    "target_concept",
]
