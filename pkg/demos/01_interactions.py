"""From raw GPS fixes to element interactions.

Each fix is matched to nearby buildings, the best-supported building is
kept, and consecutive fixes on the same building are merged into an
interaction. With a clean trace the recovered interactions line up with
the generator's ground truth.
"""

from _world import town

from pctree import AugmentConfig, SummariseConfig, augment_trajectory, summarise

world, traj, truth = town(days=7, noise=0.0)
aug = augment_trajectory(traj, world.store, AugmentConfig(n=1, maxradius=50.0, delta=300.0))
its = summarise(aug, SummariseConfig(t_max=3600.0, d_min=600.0))

print(f"{len(traj)} fixes -> {len(its)} interactions (ground truth has {len(truth)})")
print(f"{'building':>9} {'start':>10} {'end':>10} {'true start':>11} {'true end':>9}")
for got, want in list(zip(its, truth))[:8]:
    print(f"{got.element:>9} {got.start:>10.0f} {got.end:>10.0f} {want.start:>11.0f} {want.end:>9.0f}")
worst = max(max(abs(g.start - w.start), abs(g.end - w.end)) for g, w in zip(its, truth))
print(f"largest endpoint error: {worst:.0f} s")
