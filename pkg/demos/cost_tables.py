"""
Cost model tables
=================

Recomputes the operation counts behind the published reference
operating points: full-precision baselines and the binary variants at
the four uniform expansion ratios.
"""

import numpy as np

from binwidth import count_cost, get_template, space

for name in ("resnet18", "vgg_small"):
    tmpl = get_template(name)
    fp = count_cost(tmpl, space.uniform_code(1.0, tmpl.n_genes), binary=False)
    print(f"{name}  input {tmpl.input_shape}  genes {tmpl.n_genes}")
    print(f"  full precision: {fp.flops / 1e6:9.1f} MFLOPs")
    for ratio in (1.0, 2.0, 3.0, 4.0):
        rep = count_cost(tmpl, space.uniform_code(ratio, tmpl.n_genes))
        print(f"  binary {ratio:.0f}x:     {rep.flops / 1e6:9.1f} MFLOPs"
              f"   speedup {rep.speedup:5.1f}x   norm {rep.flops_norm:.3f}")
    print()

# Normalized cost is what the search penalizes: a candidate's binary
# cost over the uniform 1x binary cost. A mixed code lands between the
# uniform rows.
tmpl = get_template("vgg_small")
rng = np.random.default_rng(3)
code = space.random_code(tmpl.n_genes, rng)
rep = count_cost(tmpl, code)
print("random code:", code)
print("norm:", round(rep.flops_norm, 3), " speedup:", round(rep.speedup, 1))

# The same report breaks down per layer. Binarized layers divide their
# multiply-accumulate count by 64; the boundary layers stay full cost.
print()
print(f"{'layer':12s} {'binarized':9s} {'MFLOPs':>8s}")
for layer in rep.layers:
    if layer.flops:
        print(f"{layer.name:12s} {str(layer.binarized):9s} {layer.flops / 1e6:8.2f}")

# Storage tells the same story from the weight side: one bit per weight
# plus one float scale per binarized tensor.
print()
for ratio in (1.0, 4.0):
    rep = count_cost(tmpl, space.uniform_code(ratio, tmpl.n_genes))
    print(f"binary {ratio:.0f}x weights: {rep.weight_bits / 8 / 1e6:6.2f} MB")
fp = count_cost(tmpl, space.uniform_code(1.0, tmpl.n_genes), binary=False)
print(f"full precision 1x: {fp.weight_bits / 8 / 1e6:6.2f} MB")
