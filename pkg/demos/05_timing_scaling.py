"""Cost scaling of the statistic evaluations: quadratic vs linear in n.

Writes a result CSV that `plot-timing demo_timing.csv demo_figures/` turns
into a log-log figure with slope annotations plus a text table.
"""

import numpy as np

from rffmmd import EstimatorId, emit_results, run_timing_bench

sizes = [250, 500, 1000, 2000]
rec = run_timing_bench(
    sizes,
    [EstimatorId("QuadU"), EstimatorId("RffU", R=10), EstimatorId("RffU", R=200)],
    reps=5,
    seed=31,
)

times = {}
for row in rec.rows:
    times.setdefault(row.estimator, []).append(row.mean_time_s)
    print(f"n={int(row.param_value):5d}  {row.estimator:12s} {row.mean_time_s * 1e3:9.3f} ms")

for est, ts in times.items():
    slope = np.polyfit(np.log(sizes), np.log(ts), 1)[0]
    print(f"{est:12s} log-log slope = {slope:.2f}")

emit_results(rec, "demo_timing.csv", format="csv")
print("wrote demo_timing.csv")
