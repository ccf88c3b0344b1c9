"""FLOPs and weight-storage accounting for templated networks.

One multiply-accumulate counts as one FLOP. Layers running on 1-bit
weights and activations get their MAC count divided by 64; pooling,
batch norm, activations, and residual adds count as zero. Reported
numbers are per input image.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .space import ExpansionCode, layer_geometry, uniform_code, validate_code
from .templates import NetworkTemplate

BINARY_SPEEDUP = 64


@dataclass(frozen=True)
class LayerCost:
    name: str
    kind: str
    binarized: bool
    macs: int
    flops: float


@dataclass(frozen=True)
class CostReport:
    template: str
    code: ExpansionCode
    binary: bool
    layers: tuple[LayerCost, ...]
    flops: float
    flops_norm: float
    speedup: float
    weight_bits: int


def _layer_costs(template: NetworkTemplate, code: Iterable[float], binary: bool) -> list[LayerCost]:
    costs = []
    for geom in layer_geometry(template, code):
        spec = geom.spec
        if spec.kind == "conv":
            macs = geom.in_ch * geom.out_ch * spec.kernel[0] * spec.kernel[1] * geom.h_out * geom.w_out
        elif spec.kind == "fc":
            macs = geom.in_features * geom.out_ch
        else:
            continue
        flops = macs / BINARY_SPEEDUP if binary and spec.binarized else float(macs)
        costs.append(LayerCost(spec.name, spec.kind, binary and spec.binarized, macs, flops))
    return costs


def _weight_bits(template: NetworkTemplate, code: Iterable[float], binary: bool) -> int:
    """Storage for conv/fc weight tensors; 1-bit weights carry one 32-bit
    scale per layer. Biases and norm parameters are not modeled."""
    bits = 0
    for geom in layer_geometry(template, code):
        spec = geom.spec
        if spec.kind == "conv":
            count = geom.out_ch * geom.in_ch * spec.kernel[0] * spec.kernel[1]
        elif spec.kind == "fc":
            count = geom.in_features * geom.out_ch
        else:
            continue
        if binary and spec.binarized:
            bits += count + 32
        else:
            bits += 32 * count
    return bits


def count_cost(template: NetworkTemplate, code: Iterable[float], binary: bool = True) -> CostReport:
    """Cost report for (template, code).

    `binary=False` prices the same widths with every layer at full
    precision. flops_norm is always relative to the binary uniform-1x
    network, and speedup to the full-precision uniform-1x network, so the
    two ratios stay comparable across codes.
    """
    code = validate_code(code, template.n_genes)
    layers = _layer_costs(template, code, binary)
    total = sum(layer.flops for layer in layers)
    base = uniform_code(1, template.n_genes)
    base_binary = sum(layer.flops for layer in _layer_costs(template, base, binary=True))
    base_full = sum(layer.flops for layer in _layer_costs(template, base, binary=False))
    return CostReport(
        template=template.name,
        code=code,
        binary=binary,
        layers=tuple(layers),
        flops=total,
        flops_norm=total / base_binary,
        speedup=base_full / total,
        weight_bits=_weight_bits(template, code, binary),
    )
