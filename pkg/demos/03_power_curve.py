"""A small power sweep over the mean shift, written to CSV.

A full-scale version of this sweep would use `repetitions=2000` and
`n1=n2=1000`; this demo shrinks both so it finishes in under a minute.
Render the output with:

    plot-power demo_power.csv demo_figures/
"""

from rffmmd import EstimatorId, ExperimentConfig, ScenarioSpec, emit_results, run_power_sweep

cfg = ExperimentConfig(
    scenario=ScenarioSpec("Gauss1dMean", {"mu": 0.0}),
    estimators=(
        EstimatorId("QuadU"),
        EstimatorId("RffU", R=10),
        EstimatorId("RffU", R=200),
        EstimatorId("Linear"),
    ),
    sweep_name="mu",
    sweep_values=(0.0, 0.1, 0.2, 0.3, 0.4),
    n1=200,
    n2=200,
    B=199,
    alpha=0.05,
    repetitions=100,
    seed=11,
)

record = run_power_sweep(cfg)
for row in record.rows:
    print(f"mu={row.param_value:.2f}  {row.estimator:12s} rate={row.reject_rate:.3f} "
          f"(se {row.se:.3f})")

emit_results(record, "demo_power.csv", format="csv")
print("wrote demo_power.csv")
