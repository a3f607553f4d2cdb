"""
Repeated-response comparison of balanced and uniform subsampling
================================================================

Imbalanced covariates on five factors with 2 to 6 levels. Every
repetition draws a fresh response, selects 120 rows with each method and
fits the main-effects model on the subsample.
"""

from balsub import ExperimentConfig, LevelSpec, run_experiment

spec = LevelSpec((2, 3, 4, 5, 6))

for N in (10**4, 10**5):
    cfg = ExperimentConfig(spec=spec, N=N, n=120, reps=50, case=2, seed=1,
                           wspe_mode="analytic")
    report = run_experiment(cfg)
    print(f"N = {N}")
    for line in report.summary_lines():
        print("  " + line)
    for name, m in report.methods.items():
        print(f"  {name}: median squared error {m.mse_median:.3f}")
