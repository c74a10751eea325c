# %% [markdown]
# # Relaxed stopping
# Raising gamma lets the loop stop once a model better by gamma in inlier
# ratio has become unlikely. Iterations fall quickly while failures stay flat.

# %%
from pnapsac.bench import GAMMA_GRID, SceneSpec, sweep_gamma

points = sweep_gamma(SceneSpec("localized-h"), GAMMA_GRID, runs=20)
print(f"{'gamma':>6} {'iters':>8} {'rel':>6} {'fail%':>6}")
for p in points:
    print(f"{p.gamma:6.2f} {p.iters:8.1f} {p.rel_iters:6.3f} {p.fail_pct:6.1f}")
