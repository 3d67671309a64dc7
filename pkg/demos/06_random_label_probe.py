"""Memorization probe: what happens when the labels are pure noise?

Shuffling labels severs any input-output relationship, so a model can only
gain training accuracy by memorizing individual samples. A full-precision
network has the expressive room to do that; a binary network does not.
This scaled-down probe uses the synthetic inputs; the full version runs on
an MNIST subset via `binplane reproduce --figure appendix-d`.
"""

from binplane.experiment import ExperimentConfig, run_training

shared = dict(dataset={"name": "synthetic", "label_seed": 0, "split_seed": 0},
              widths=(12, 32, 16, 8, 2), batch_size=64, epochs=400, seeds=(0,),
              label_shuffle=True, label_shuffle_seed=3, subset_train=512,
              subset_val=128, mi_epochs=(0, 400))

dnn = ExperimentConfig(activation="tanh", binarize=False, learning_rate=4e-4,
                       **shared)
bnn = ExperimentConfig(activation="ste_sign", binarize=True, learning_rate=1e-4,
                       **shared)

print("training the tanh network on shuffled labels ...")
dnn_log = run_training(dnn, 0)
print("training the binary network on shuffled labels ...")
bnn_log = run_training(bnn, 0)

d, b = dnn_log.records[-1], bnn_log.records[-1]
print()
print(f"tanh network : train acc {d.train_acc:.3f}  val acc {d.val_acc:.3f}")
print(f"binary net   : train acc {b.train_acc:.3f}  val acc {b.val_acc:.3f}")
print()
print("labels are random, so validation accuracy hovers at chance for both;")
print("only the full-precision model lifts its training accuracy, and the gap")
print(f"({d.train_acc - b.train_acc:+.3f}) is the memorization it performed.")
