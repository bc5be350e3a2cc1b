"""Train a Predictive Context Tree on twelve weeks and compare it with the
flat baselines on the final fifth of the data."""

from _world import town

from pctree import Pipeline, RunConfig
from pctree.baselines import markov_ceiling

world, traj, truth = town(days=84)
report = Pipeline(traj, world.store).run(RunConfig(d_min=600.0))

se = report["modes"]["single_element"]
sc = report["modes"]["single_context"]
print(f"test instances:               {report['test_instances']}")
print(f"PCT, element prediction:      {se['element_correct']:.1f}% correct")
print(f"PCT, context prediction:      {sc['element_correct']:.1f}% element + {sc['context_correct']:.1f}% context")
print(f"one-vs-rest on buildings:     {report['landusage']['ovr']:.1f}%")
print(f"Markov chain on buildings:    {report['landusage']['markov']:.1f}%")
print(f"one-vs-rest on locations:     {report['locations']['ovr']:.1f}%")
print(f"best first-order predictor on the true sequence: {markov_ceiling([i.element for i in truth]):.1f}%")
