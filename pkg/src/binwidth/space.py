"""Expansion codes and their application to network templates.

An expansion code is one ratio per gene, drawn from the fixed candidate
set. `resolve_channels` turns (template, code) into concrete per-layer
channel counts, enforcing the residual tying rules; `layer_geometry`
additionally tracks spatial extents, which the cost model and network
builder share.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import FormatError, InputError
from .templates import LayerSpec, NetworkTemplate

RATIOS = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0)

ExpansionCode = tuple[float, ...]


def validate_code(code: Iterable[float], n_genes: int | None = None) -> ExpansionCode:
    code = tuple(float(r) for r in code)
    for i, r in enumerate(code):
        if r not in RATIOS:
            raise InputError(f"ratio {r} at gene {i} is not one of {RATIOS}")
    if n_genes is not None and len(code) != n_genes:
        raise InputError(f"code has {len(code)} genes, template expects {n_genes}")
    return code


def uniform_code(ratio: float, n: int) -> ExpansionCode:
    if float(ratio) not in RATIOS:
        raise InputError(f"ratio {ratio} is not one of {RATIOS}")
    return (float(ratio),) * n


def random_code(n: int, rng: np.random.Generator) -> ExpansionCode:
    return tuple(float(RATIOS[i]) for i in rng.integers(0, len(RATIOS), size=n))


def _scaled(ratio: float, base: int) -> int:
    value = ratio * base
    width = int(round(value))
    if abs(value - width) > 1e-9 or width < 1:
        raise InputError(f"ratio {ratio} on base {base} does not give a positive integer width")
    return width


def resolve_channels(template: NetworkTemplate, code: Iterable[float]) -> dict[str, tuple[int, int]]:
    """Per-layer (in, out) channel counts, projection shortcuts included.

    Gened layers scale their base width by the gene's ratio. A block with
    an identity shortcut has its last conv's output tied to the block
    input; a projection shortcut adopts the block's output gene. The first
    conv's input and the classifier's output stay fixed at the image
    channel count and the class count.
    """
    code = validate_code(code, template.n_genes)
    channels: dict[str, tuple[int, int]] = {}
    cur = template.input_shape[0]
    block_inputs: dict[str, int] = {}
    for i, spec in enumerate(template.layers):
        block = template.block_at(i)
        if block is not None and i == block.first_layer:
            block_inputs[block.name] = cur
        if spec.kind == "conv":
            cin = cur
            if spec.gene_index is not None:
                cout = _scaled(code[spec.gene_index], spec.base_out)
            else:
                if block is None or block.proj_conv is not None:
                    raise InputError(f"conv '{spec.name}' has no gene and no identity block to tie to")
                cout = block_inputs[block.name]
            channels[spec.name] = (cin, cout)
            cur = cout
        elif spec.kind == "fc":
            cin = cur
            cout = _scaled(code[spec.gene_index], spec.base_out) if spec.gene_index is not None else spec.base_out
            channels[spec.name] = (cin, cout)
            cur = cout
        elif spec.kind == "residual-add":
            assert block is not None and i == block.add_layer
            shortcut = block_inputs[block.name]
            if block.proj_conv is not None:
                channels[block.proj_conv.name] = (shortcut, cur)
                channels[block.proj_bn.name] = (cur, cur)
            elif shortcut != cur:
                raise InputError(
                    f"identity shortcut of block '{block.name}' sees {shortcut} vs {cur} channels"
                )
            channels[spec.name] = (cur, cur)
        else:  # bn, act, pool
            channels[spec.name] = (cur, cur)
    return channels


@dataclass(frozen=True)
class LayerGeom:
    """One executed layer: its spec, resolved channels, and output extent."""

    spec: LayerSpec
    in_ch: int
    out_ch: int
    h_out: int
    w_out: int
    in_features: int = 0  # fc only: flattened input size
    proj_of: str | None = None  # set on projection-shortcut entries


def _conv_out(size: int, k: int, stride: int, pad: int) -> int:
    if size + 2 * pad < k:
        raise InputError(f"kernel {k} exceeds padded extent {size + 2 * pad}")
    return (size + 2 * pad - k) // stride + 1


def layer_geometry(template: NetworkTemplate, code: Iterable[float]) -> list[LayerGeom]:
    """Execution-ordered geometry; projection entries precede their add."""
    channels = resolve_channels(template, code)
    geoms: list[LayerGeom] = []
    _, h, w = template.input_shape
    block_extent: dict[str, tuple[int, int]] = {}
    for i, spec in enumerate(template.layers):
        block = template.block_at(i)
        if block is not None and i == block.first_layer:
            block_extent[block.name] = (h, w)
        cin, cout = channels[spec.name]
        if spec.kind == "conv":
            h = _conv_out(h, spec.kernel[0], spec.stride, spec.pad)
            w = _conv_out(w, spec.kernel[1], spec.stride, spec.pad)
            geoms.append(LayerGeom(spec, cin, cout, h, w))
        elif spec.kind == "fc":
            d = cin * h * w
            h = w = 1
            geoms.append(LayerGeom(spec, cin, cout, 1, 1, in_features=d))
        elif spec.kind == "pool":
            if spec.pool_op == "global_avg":
                h = w = 1
            else:
                h = _conv_out(h, spec.kernel[0], spec.stride, spec.pad)
                w = _conv_out(w, spec.kernel[1], spec.stride, spec.pad)
            geoms.append(LayerGeom(spec, cin, cout, h, w))
        elif spec.kind == "residual-add":
            if block.proj_conv is not None:
                pin, pout = channels[block.proj_conv.name]
                geoms.append(LayerGeom(block.proj_conv, pin, pout, h, w, proj_of=block.name))
                geoms.append(LayerGeom(block.proj_bn, pout, pout, h, w, proj_of=block.name))
            geoms.append(LayerGeom(spec, cin, cout, h, w))
        else:  # bn, act
            geoms.append(LayerGeom(spec, cin, cout, h, w))
    return geoms


def _ratio_repr(r: float):
    return int(r) if float(r).is_integer() else r


def code_file_text(template_name: str, code: Iterable[float]) -> str:
    """Code file body: template name plus exact-decimal ratio list."""
    code = validate_code(code)
    payload = {"template": template_name, "ratios": [_ratio_repr(r) for r in code]}
    return json.dumps(payload, indent=2) + "\n"


def write_code_file(path: str, template_name: str, code: Iterable[float]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(code_file_text(template_name, code))


def read_code_file(path: str) -> tuple[str, ExpansionCode]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"code file {path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict) or set(payload) != {"template", "ratios"}:
        raise FormatError(f"code file {path} must contain exactly 'template' and 'ratios'")
    return str(payload["template"]), validate_code(payload["ratios"])
