"""Aggregation-order schedulers: ring, tree and the learned chain scheduler."""
from chainreduce.scheduler.plans import PlanError, SchedulePlan, pack_rounds, ring_plan, star_plan, tree_plan
from chainreduce.scheduler.env import (
    RLConfig, SchedEnv, SchedEnvState, env_step, threshold, valid_actions,
)
from chainreduce.scheduler.agent import (
    Agent, DenseQ, TabularQ, TrainResult, greedy_episode, plan_from_policy, relearn_if_changed, train_agent,
)
