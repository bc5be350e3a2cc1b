"""The classic alternative: stay points from distance/time thresholds,
clustered into abstract locations with DBSCAN."""

from _world import town

from pctree import cluster_visits_dbscan, extract_visits_threshold
from pctree.locations import DBSCANConfig, ThresholdConfig, location_stats

world, traj, _ = town()
visits = extract_visits_threshold(traj, ThresholdConfig(max_dist=50.0, min_dur=1200.0, t_max=3600.0))
locations = cluster_visits_dbscan(visits, DBSCANConfig(eps=15.0, minpts=0))

print(f"{len(visits)} visits in {len(locations)} locations")
for loc in sorted(locations, key=lambda l: -len(l.visits))[:5]:
    print(f"  location {loc.id}: {len(loc.visits)} visits")
print(location_stats(locations))
