# %% [markdown]
# # Comparing samplers on local and global structures
# Every sampler sees the same scene and seed in run r. The table reports mean
# error, inlier percentage, failure percentage, time and iterations.

# %%
from pnapsac.bench import SceneSpec, aggregate, emit_report, run_benchmark

scenes = [SceneSpec("localized-h"), SceneSpec("global-h"), SceneSpec("line2d")]
rows = run_benchmark(scenes, ["uniform", "prosac", "napsac", "pnapsac"], runs=20)
print(emit_report(aggregate(rows), "markdown"))

# %% [markdown]
# How early does each sampler produce its first good hypothesis? Run without
# local optimization and with a fixed budget, and record the first iteration
# whose score reaches half of the best score seen.

# %%
import numpy as np

from pnapsac import EngineConfig, estimate
from pnapsac.bench import generate_scene

for sampler in ("uniform", "prosac", "pnapsac"):
    first = []
    for r in range(10):
        ds = generate_scene(SceneSpec("localized-h", seed=r))
        cfg = EngineConfig("h", sampler, seed=r, gamma=0.0, lo=None, final_refit=False,
                           per_iteration_log=True, max_iterations=3000, min_iterations=3000)
        log = estimate(ds, cfg).per_iteration_log
        vals = np.array([-1.0 if x.value is None else x.value for x in log])
        first.append(int(np.argmax(vals >= 0.5 * vals.max())) + 1)
    print(f"{sampler:8s} median first good hypothesis at iteration {np.median(first):g}")
