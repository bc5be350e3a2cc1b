"""Group the visited buildings into a hierarchy of contexts.

Buildings are merged by a blend of tag overlap and how they are used
(time of day, dwell time, how often). Pruning then folds away small,
rarely used branches.
"""

from _world import town

from pctree import AugmentConfig, PruneConfig, SummariseConfig, augment_trajectory, build_tree, prune, summarise

world, traj, _ = town()
its = summarise(augment_trajectory(traj, world.store, AugmentConfig()), SummariseConfig(3600.0, 600.0))
tags = {e: world.store[e].tags for e in {i.element for i in its}}


def show(tree, nid=None, indent=0):
    nid = nid or tree.root
    node = tree[nid]
    label = f"{node.element} {sorted(v for _, v in tags[node.element])}" if node.is_leaf else nid
    print("  " * indent + label)
    for c in tree.children(nid):
        show(tree, c, indent + 1)


tree = build_tree(tags, its, lam=0.5)
show(tree)
for theta in (0.0, 0.05, 0.2):
    print(f"theta={theta}: {len(prune(tree, PruneConfig(theta, 0.0), its))} nodes")
