"""Coupled-homeostat controller with two toy social worlds."""

from .affect import AffectParams, AffectState
from .config import ModelConfig, load_model, make_world
from .episode import EpisodeRecord, run_episode
from .homeostat import ActionFlags, HomeostatParams, HomeostatState, RegulationTrace, homeostat_step
from .planner import PlanConfig, ScoreWeights, plan, rollout, score_step
from .social import Condition, Lesion, SocialConfig
from .worlds import Action, FoodShareToy, SocialCorridorWorld

__version__ = "0.1.0"
