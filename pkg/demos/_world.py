"""Shared setup: a small synthetic town and four weeks of one person's GPS trace."""

from pctree import AgentSchedule, WorldSpec, gen_trajectory, gen_world
from pctree.synthgen import weekly_routine


def town(days=28, noise=10.0):
    world = gen_world(WorldSpec(seed=1))
    schedule = AgentSchedule(weekly_routine(world), noise_sigma=noise)
    traj, truth = gen_trajectory(world, schedule, days, seed=2)
    return world, traj, truth
