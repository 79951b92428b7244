"""A small hyperparameter sweep with the files a full sweep produces.

Run with ``python demos/grid_search.py [output_dir]``. A 100 x 100 sweep is
the same call with ``axis1_points=100, axis2_points=100``.
"""
import sys

from ionkernel import experiment as ex

out = sys.argv[1] if len(sys.argv) > 1 else "results/demo_grid"
cfg = ex.ExperimentConfig(task="moons", kernel="quantum", N=4, axis1_points=8, axis2_points=8,
                          s=0.01, p=0.01)
print(ex.dump_config(cfg))

result = ex.run_grid(cfg, progress=lambda n: print(f"\r{n}/64 cells", end=""))
print()
print("optimum:", result.optimum, " A_val:", round(result.val_accuracy, 3),
      " A_test:", round(result.test_accuracy, 3))
print("cells that needed the eigenvalue shift:", result.summary()["shifted_cells"])

# Results JSON, heatmap CSV (h, dt, accuracy) and a 100 x 100 decision-function mesh.
for kind, path in ex.emit_outputs(result, out).items():
    print(f"{kind:8s} -> {path}")
