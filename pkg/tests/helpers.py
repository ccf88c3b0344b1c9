"""Shared test oracles: loop-based references and finite differences."""

from __future__ import annotations

import numpy as np


def conv2d_loops(x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Direct six-loop convolution; the reference the fast path must match."""
    n, cin, h, wdt = x.shape
    cout, cin_w, kh, kw = w.shape
    assert cin == cin_w
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    hout = (h + 2 * pad - kh) // stride + 1
    wout = (wdt + 2 * pad - kw) // stride + 1
    out = np.zeros((n, cout, hout, wout), dtype=x.dtype)
    for b in range(n):
        for co in range(cout):
            for i in range(hout):
                for j in range(wout):
                    patch = xp[b, :, i * stride : i * stride + kh, j * stride : j * stride + kw]
                    out[b, co, i, j] = np.sum(patch * w[co])
    return out


def numeric_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar-valued f at x."""
    x = x.astype(np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * eps)
    return grad


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return float(np.abs(a - b).max() / denom)
