# %% [markdown]
# # Comparing the four methods
#
# Six noisy copies per noise level: the first tunes each method's
# parameters, the other five are scored after Procrustes alignment to the
# clean Isomap extension. A reduced dataset and grid keep this quick.

# %%
from mets.evaluation import ExperimentConfig, reports_to_csv, run_experiment

cfg = ExperimentConfig(
    dataset={"synthetic": {"n": 400, "N": 60, "seed": 42}},
    k=12,
    noise={"gaussian": [0.3], "salt-pepper": [0.4]},
    lambda_grid=[0.0, 1.0, 100.0, 1e4],
    epsilon_grid=[1, 3],
    c_ctn_grid=[1.0, 5.0],
    sigma_grid=[2.0, 5.0],
    mbms_local_dims=[2],
    mbms_k=10,
)
reports = run_experiment(cfg)

# %%
for r in reports:
    print("%-10s %-12s %.1f  error %.3f +- %.3f  %s"
          % (r.method, r.noise_kind, r.noise_level, r.mean_error, r.sem, r.tuned_params))

# %%
print(reports_to_csv(reports))
