"""Simulation families, the replication runner and risk curves."""

from .estimators import ESTIMATORS, resolve
from .generators import (GeneratedInstance, categorical_design, gen_categorical,
                         gen_fullrank, gen_fullrank_transform, gen_highdim, gen_lowdim,
                         gen_submodel_sim, generate, random_rotation, recode_categorical,
                         recoding_transform, reference_dummies, same_x_loss)
from .runner import (PairedInterval, ReplicationReport, RiskCurve, paired_interval,
                     paired_interval_from_differences, risk_curve, run_replications)
from .scenario import FAMILIES, SimulationScenario

__all__ = [
    "ESTIMATORS", "FAMILIES", "GeneratedInstance", "PairedInterval", "ReplicationReport",
    "RiskCurve", "SimulationScenario", "categorical_design", "gen_categorical",
    "gen_fullrank", "gen_fullrank_transform", "gen_highdim", "gen_lowdim",
    "gen_submodel_sim", "generate", "paired_interval", "paired_interval_from_differences",
    "random_rotation", "recode_categorical", "recoding_transform", "reference_dummies",
    "resolve", "risk_curve", "run_replications", "same_x_loss",
]
