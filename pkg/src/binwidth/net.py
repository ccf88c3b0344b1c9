"""Concrete networks: template + expansion code + seed -> trainable model.

A Network owns flat name->array dicts for parameters, gradients, and
batch-norm running stats, plus an execution list of layer units. Each
unit keeps just enough context from its forward pass to run the matching
backward pass. Layers marked binarized quantize their weights on every
forward; activation quantization is an explicit layer in the templates,
so the data entering a binary conv/fc is already 1-bit.

Convs never carry a bias (a norm layer always follows); fc layers carry
one only when no norm layer follows them.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .errors import ShapeError
from .quant import binarize_activations, binarize_weights, ste_activation_grad, ste_weight_grad
from .seeding import rng_from
from .space import ExpansionCode, layer_geometry, resolve_channels, validate_code
from .templates import BlockSpec, LayerSpec, NetworkTemplate


class _ConvUnit:
    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.key = spec.name + ".weight"
        self.ctx = None

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        w = net.params[self.key]
        if self.spec.binarized:
            w = binarize_weights(w).values
        y, self.ctx = ops.conv2d_forward(x, w, self.spec.stride, self.spec.pad)
        return y

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gx, gw = ops.conv2d_backward(self.ctx, g)
        self.ctx = None
        if self.spec.binarized:
            gw = ste_weight_grad(gw, net.params[self.key])
        net.grads[self.key] = gw
        return gx


class _FCUnit:
    def __init__(self, spec: LayerSpec, in_features: int, has_bias: bool):
        self.spec = spec
        self.in_features = in_features
        self.wkey = spec.name + ".weight"
        self.bkey = spec.name + ".bias" if has_bias else None
        self.ctx = None
        self.in_shape: tuple[int, ...] = ()

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        self.in_shape = x.shape
        if x.ndim > 2:
            x = x.reshape(x.shape[0], -1)
        if x.shape[1] != self.in_features:
            raise ShapeError(f"'{self.spec.name}' expects {self.in_features} features, got {x.shape[1]}")
        w = net.params[self.wkey]
        if self.spec.binarized:
            w = binarize_weights(w).values
        b = net.params[self.bkey] if self.bkey else np.zeros(w.shape[1], dtype=w.dtype)
        y, self.ctx = ops.fully_connected_forward(x, w, b)
        return y

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gx, gw, gb = ops.fully_connected_backward(self.ctx, g)
        self.ctx = None
        if self.spec.binarized:
            gw = ste_weight_grad(gw, net.params[self.wkey])
        net.grads[self.wkey] = gw
        if self.bkey:
            net.grads[self.bkey] = gb
        return gx.reshape(self.in_shape)


class _BNUnit:
    def __init__(self, spec: LayerSpec):
        self.spec = spec
        name = spec.name
        self.gkey, self.bkey = name + ".gamma", name + ".beta"
        self.mkey, self.vkey = name + ".running_mean", name + ".running_var"
        self.ctx = None

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        y, self.ctx = ops.batch_norm_forward(
            x, net.params[self.gkey], net.params[self.bkey],
            net.buffers[self.mkey], net.buffers[self.vkey], train,
        )
        return y

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gx, ggamma, gbeta = ops.batch_norm_backward(self.ctx, g)
        self.ctx = None
        net.grads[self.gkey] = ggamma
        net.grads[self.bkey] = gbeta
        return gx


class _ActUnit:
    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.x = None

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        self.x = x
        return binarize_activations(x).values

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gx = ste_activation_grad(g, self.x)
        self.x = None
        return gx


class _MaxPoolUnit:
    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.ctx = None

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        y, self.ctx = ops.max_pool2d_forward(x, self.spec.kernel[0], self.spec.stride, self.spec.pad)
        return y

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gx = ops.max_pool2d_backward(self.ctx, g)
        self.ctx = None
        return gx


class _GapUnit:
    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.ctx = None

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        y, self.ctx = ops.global_avg_pool_forward(x)
        return y

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gx = ops.global_avg_pool_backward(self.ctx, g)
        self.ctx = None
        return gx


class _AddUnit:
    """Residual join: main path + (optionally projected) block input."""

    def __init__(self, spec: LayerSpec, block: BlockSpec, proj_conv: _ConvUnit | None, proj_bn: _BNUnit | None):
        self.spec = spec
        self.block = block
        self.proj_conv = proj_conv
        self.proj_bn = proj_bn

    def forward(self, net: "Network", x: np.ndarray, train: bool) -> np.ndarray:
        s = net._block_in[self.block.name]
        if self.proj_conv is not None:
            s = self.proj_conv.forward(net, s, train)
            s = self.proj_bn.forward(net, s, train)
        if s.shape != x.shape:
            raise ShapeError(f"residual shapes disagree at '{self.spec.name}': {s.shape} vs {x.shape}")
        return x + s

    def backward(self, net: "Network", g: np.ndarray) -> np.ndarray:
        gs = g
        if self.proj_conv is not None:
            gs = self.proj_bn.backward(net, gs)
            gs = self.proj_conv.backward(net, gs)
        net._short_grad[self.block.name] = gs
        return g


class Network:
    """An instantiated template, ready for forward/backward/SGD."""

    def __init__(self, template: NetworkTemplate, code, seed: int):
        self.template = template
        self.code: ExpansionCode = validate_code(code, template.n_genes)
        self.seed = int(seed)
        self.channels = resolve_channels(template, self.code)
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        geoms = {g.spec.name: g for g in layer_geometry(template, self.code)}
        self.units = []
        layers = template.layers
        for i, spec in enumerate(layers):
            if spec.kind == "conv":
                self._init_conv(spec)
                self.units.append(_ConvUnit(spec))
            elif spec.kind == "fc":
                has_bias = not (i + 1 < len(layers) and layers[i + 1].kind == "bn")
                self._init_fc(spec, geoms[spec.name].in_features, has_bias)
                self.units.append(_FCUnit(spec, geoms[spec.name].in_features, has_bias))
            elif spec.kind == "bn":
                self._init_bn(spec.name, self.channels[spec.name][0])
                self.units.append(_BNUnit(spec))
            elif spec.kind == "act":
                self.units.append(_ActUnit(spec))
            elif spec.kind == "pool":
                self.units.append(_GapUnit(spec) if spec.pool_op == "global_avg" else _MaxPoolUnit(spec))
            elif spec.kind == "residual-add":
                block = template.block_at(i)
                proj_conv = proj_bn = None
                if block.proj_conv is not None:
                    self._init_conv(block.proj_conv)
                    self._init_bn(block.proj_bn.name, self.channels[block.proj_bn.name][0])
                    proj_conv = _ConvUnit(block.proj_conv)
                    proj_bn = _BNUnit(block.proj_bn)
                self.units.append(_AddUnit(spec, block, proj_conv, proj_bn))
            else:
                raise ShapeError(f"unknown layer kind '{spec.kind}'")
        self._block_in: dict[str, np.ndarray] = {}
        self._short_grad: dict[str, np.ndarray] = {}

    def _init_conv(self, spec: LayerSpec):
        cin, cout = self.channels[spec.name]
        kh, kw = spec.kernel
        fan_in = cin * kh * kw
        rng = rng_from(self.seed, "init", spec.name)
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(cout, cin, kh, kw))
        self.params[spec.name + ".weight"] = w.astype(np.float32)

    def _init_fc(self, spec: LayerSpec, in_features: int, has_bias: bool):
        _, cout = self.channels[spec.name]
        rng = rng_from(self.seed, "init", spec.name)
        w = rng.normal(0.0, np.sqrt(2.0 / in_features), size=(in_features, cout))
        self.params[spec.name + ".weight"] = w.astype(np.float32)
        if has_bias:
            self.params[spec.name + ".bias"] = np.zeros(cout, dtype=np.float32)

    def _init_bn(self, name: str, c: int):
        self.params[name + ".gamma"] = np.ones(c, dtype=np.float32)
        self.params[name + ".beta"] = np.zeros(c, dtype=np.float32)
        self.buffers[name + ".running_mean"] = np.zeros(c, dtype=np.float32)
        self.buffers[name + ".running_var"] = np.ones(c, dtype=np.float32)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[1:] != self.template.input_shape:
            raise ShapeError(f"input shape {x.shape} != (N, {', '.join(map(str, self.template.input_shape))})")
        self._block_in.clear()
        for i, unit in enumerate(self.units):
            block = self.template.block_at(i)
            if block is not None and i == block.first_layer:
                self._block_in[block.name] = x
            x = unit.forward(self, x, train)
        return x

    def backward(self, grad_logits: np.ndarray) -> None:
        """Populate self.grads; call after forward(train=True)."""
        g = grad_logits
        self._short_grad.clear()
        for i in reversed(range(len(self.units))):
            g = self.units[i].backward(self, g)
            block = self.template.block_at(i)
            if block is not None and i == block.first_layer:
                g = g + self._short_grad.pop(block.name)
        self._block_in.clear()

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parameters then running stats, copied, in construction order."""
        out = {name: arr.copy() for name, arr in self.params.items()}
        for name, arr in self.buffers.items():
            out[name] = arr.copy()
        return out

    def load_state_dict(self, arrays: dict[str, np.ndarray]) -> None:
        own = dict(self.params, **self.buffers)
        if set(arrays) != set(own):
            missing = sorted(set(own) - set(arrays))
            extra = sorted(set(arrays) - set(own))
            raise ShapeError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, arr in arrays.items():
            if arr.shape != own[name].shape:
                raise ShapeError(f"'{name}' shape {arr.shape} != expected {own[name].shape}")
            own[name][...] = arr

    def param_count(self) -> int:
        return sum(int(p.size) for p in self.params.values())


def instantiate(template: NetworkTemplate, code, seed: int) -> Network:
    """Build and He-initialize a network; deterministic in (template, code, seed)."""
    return Network(template, code, seed)
