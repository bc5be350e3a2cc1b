"""Next-place prediction over land-usage elements with Predictive Context Trees."""

from .augment import AugmentConfig, AugmentedPoint, augment_trajectory
from .baselines import MarkovModel, OneVsRest, markov_ceiling
from .ctree import ContextTree, PruneConfig, build_tree, prune, tree_from_nested
from .evalkit import (Instance, MultiOutcome, SingleOutcome, gen_instances, gen_multi_instances,
                      score_multi, score_single, split_chronological)
from .experiment import Pipeline, RunConfig, run_sweep
from .geo import GeoPoint, LandUsageElement, Polygon, Trajectory, TrajectoryPoint, haversine_distance
from .ingest import LandUsageStore, load_landusage, load_trajectory
from .locations import cluster_visits_dbscan, extract_visits_threshold
from .pct import PCT, ClassifierParams, Label, Mode, PredictConfig, assign_training_label
from .summarise import Interaction, SummariseConfig, summarise
from .synthgen import AgentSchedule, WorldSpec, gen_trajectory, gen_world

__version__ = "0.1.0"
