"""
Weight and activation binarization, step by step
================================================

Shows what the two quantizers do to small hand-picked vectors and how
the straight-through estimator routes gradients around them.
"""

import numpy as np

from binwidth import ops, quant

# Weights collapse to sign(w) times one shared scale, the mean absolute
# value. The tensor keeps its shape; only two distinct magnitudes remain.
w = np.array([0.5, -1.5, 0.25, -0.75])
qw = quant.binarize_weights(w)
print("weights in:     ", w)
print("scale (mean|w|):", qw.scale)
print("weights out:    ", qw.values)

# Activations clip to [0,1] and round to {0,1}. 0.5 rounds up.
x = np.array([-0.3, 0.2, 0.5, 0.7, 1.4])
qx = quant.binarize_activations(x)
print()
print("activations in: ", x)
print("activations out:", qx.values)
print("pass mask:      ", qx.pass_mask.astype(int))

# The backward story. For weights the estimator is the identity: the
# upstream gradient flows through untouched.
upstream_w = np.array([1.0, 2.0, 3.0, 4.0])
print()
print("weight grad:    ", quant.ste_weight_grad(upstream_w, w))

# For activations the gradient is masked to the clip window, so the
# saturated entries (-0.3 and 1.4 above) receive nothing.
upstream_x = np.ones_like(x)
print("activation grad:", quant.ste_activation_grad(upstream_x, x))

# The fused binary convolution quantizes both operands before the dot
# products, so the output is built from {0,1} x {-s,+s} terms only.
rng = np.random.default_rng(0)
images = rng.uniform(0, 1, size=(1, 2, 5, 5))
kernels = rng.standard_normal((3, 2, 3, 3)) * 0.2
out, ctx = quant.binary_conv2d_forward(images, kernels)
print()
print("binary conv output shape:", out.shape)
print("first few distinct output values:", np.unique(np.round(out, 4))[:5])

gx, gw = quant.binary_conv2d_backward(ctx, np.ones_like(out))
print("grad shapes:", gx.shape, gw.shape)

# When the inputs already sit at {0,1} the binary conv agrees exactly
# with a plain float conv applied to the quantized operands.
hard = (images > 0.5).astype(np.float64)
plain = ops.conv2d(hard, quant.binarize_weights(kernels).values)
print()
print("matches float conv on hard inputs:",
      np.allclose(quant.binary_conv2d_forward(hard, kernels)[0], plain))
