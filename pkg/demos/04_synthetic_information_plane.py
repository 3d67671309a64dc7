"""A short synthetic training run, charted in the information plane.

This is a miniature of the full experiment: a binary network with the
10-8-6-4-2 hidden stack trains on the 4096-point task while mutual
information snapshots accumulate. The emitted SVGs land in demos/out/.
Expect a couple of minutes of runtime.
"""

import os

from binplane.experiment import ExperimentConfig, aggregate_runs, run_experiment
from binplane.report import (plot_information_plane, plot_layerwise_panels,
                             plot_scalar_series)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

config = ExperimentConfig(
    dataset={"name": "synthetic", "label_seed": 0, "split_seed": 0},
    widths=(12, 10, 8, 6, 4, 2, 2), activation="ste_sign", binarize=True,
    batch_size=64, learning_rate=1e-4, epochs=400, seeds=(0, 1))

print("training", len(config.seeds), "seeds x", config.epochs, "epochs ...")
logs = run_experiment(config, out_dir=os.path.join(OUT, "runs"))

agg = aggregate_runs(logs)
final = agg.epochs[-1]
print(f"final train acc {final['train_acc_mean']:.3f} "
      f"(var {final['train_acc_var']:.4f}), "
      f"val acc {final['val_acc_mean']:.3f}")

last_hidden = len(config.widths) - 3
trace = sorted((s for s in agg.snapshots
                if s["layer"] == last_hidden and s["tap"] == "post_act"
                and s["split"] == "train"), key=lambda s: s["epoch"])
print(f"deepest hidden tap I(T;Y): {trace[0]['i_ty_mean']:.3f} -> "
      f"{trace[-1]['i_ty_mean']:.3f} bits over training")

for name, svg in [
        ("info_plane.svg", plot_information_plane(logs)),
        ("loss.svg", plot_scalar_series(logs, "loss")),
        ("accuracy.svg", plot_scalar_series(logs, "accuracy")),
        ("grad_evolution.svg", plot_scalar_series(logs, "grad_evolution")),
        ("layerwise_train.svg", plot_layerwise_panels(logs, "train")),
]:
    path = os.path.join(OUT, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write(svg)
    print("wrote", path)
