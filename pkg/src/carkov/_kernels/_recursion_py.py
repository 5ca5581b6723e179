"""Pure numpy fallback for the linear recursion kernel.

Same contract as the compiled version: the per-step noise contributions
are precomputed as one matrix product, then the sequential state update
runs in a Python loop over small matrix-vector products.
"""

import numpy as np


def ar1_recursion(step, noise_map, z0, shocks):
    """State recursion; shocks has one row per step, returns (d, n+1)."""
    step = np.asarray(step, dtype=float)
    noise_map = np.asarray(noise_map, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    shocks = np.asarray(shocks, dtype=float)
    d = step.shape[0]
    n = shocks.shape[0]
    if step.shape != (d, d) or noise_map.shape[0] != d or z0.shape != (d,) \
            or shocks.shape[1] != noise_map.shape[1]:
        raise ValueError("inconsistent kernel operand shapes")

    drive = shocks @ noise_map.T
    out = np.empty((n + 1, d))
    out[0] = z0
    z = z0.copy()
    for m in range(n):
        z = step @ z + drive[m]
        out[m + 1] = z
    return np.ascontiguousarray(out.T)
