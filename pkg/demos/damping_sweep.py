"""
Tracking local optima while the damping grows
=============================================

Each optimum found at no damping is followed along 0 -> 0.6. The branches
run into each other and only one survives.
"""

# %%
from dampedodc.continuation import DampingSchedule, track_bundle
from dampedodc.experiments import paper_4x4
from dampedodc.local_search import multi_start

sys4 = paper_4x4()
starts = multi_start(sys4, 0.0, 200, 0)
bundle = track_bundle(sys4, starts, DampingSchedule.linear(0.0, 0.6, 0.002))

# %%
for e in bundle.merge_events:
    print(f"alpha={e.alpha}: trajectory {e.absorbed} merged into {e.survivor}")
for t in bundle.trajectories:
    print(t.id, t.status, f"J: {t.costs[0]:.4f} -> {t.costs[-1]:.4f}")

# %% Distance to the best branch (one column of the figure data)
for t in bundle.trajectories:
    d = [p.dist_to_best for p in t.points[::25]]
    print(t.id, [round(x, 3) for x in d])
