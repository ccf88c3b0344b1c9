"""
Warm-starting candidates from a shared supernet
===============================================

One network at the widest uniform expansion can hand its weights down
to any narrower candidate: every array keeps its leading channels. This
script trains a small supernet briefly, slices a child out of it, and
compares the warm start against a cold one.
"""

import numpy as np

from binwidth import (
    Checkpoint,
    Dataset,
    TrainConfig,
    get_template,
    inherit_weights,
    instantiate,
    space,
    synth,
    train,
)

images, labels = synth.synth_gray_images(per_class=60, seed=2)
images = images.astype(np.float32) / 255.0
train_set = Dataset(images[:500], labels[:500], class_count=10, split="train")
val_set = Dataset(images[500:], labels[500:], class_count=10, split="val")

tmpl = get_template("vgg_small_mini")
wide = space.uniform_code(4.0, tmpl.n_genes)

# Train the 4x supernet for a couple of epochs.
supernet = instantiate(tmpl, wide, seed=0)
cfg = TrainConfig(epochs=2, batch_size=50, schedule=train.LrSchedule(base_lr=0.02), seed=0)
train.train_network(supernet, train_set, cfg)
ckpt = Checkpoint(supernet.state_dict(), tmpl.name, wide, seed=0)
print("supernet params:", supernet.param_count())

# Slice out a narrower child. Conv weights keep [:out, :in], fc weights
# keep leading rows (rows are channel-major), per-channel vectors keep
# their prefix.
child_code = space.validate_code((1, 2, 1, 2))
sliced = inherit_weights(ckpt, tmpl, child_code)
print()
print("child code:", child_code)
for name in ("conv2.weight", "bn2.gamma", "fc1.weight"):
    print(f"  {name:12s} {ckpt.arrays[name].shape} -> {sliced.arrays[name].shape}")

# The slice really is a prefix of the parent tensor.
parent = ckpt.arrays["conv2.weight"]
child = sliced.arrays["conv2.weight"]
print("prefix of parent:", np.array_equal(child, parent[: child.shape[0], : child.shape[1]]))

# Warm versus cold: same child architecture, one epoch of training each.
warm = instantiate(tmpl, child_code, seed=1)
warm.load_state_dict(sliced.arrays)
cold = instantiate(tmpl, child_code, seed=1)
child_cfg = TrainConfig(epochs=1, batch_size=50, schedule=train.LrSchedule(base_lr=0.02), seed=1)
train.train_network(warm, train_set, child_cfg)
train.train_network(cold, train_set, child_cfg)
print()
print(f"warm start val acc: {train.accuracy(warm, val_set):.1f}%")
print(f"cold start val acc: {train.accuracy(cold, val_set):.1f}%")
