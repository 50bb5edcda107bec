"""Central finite-difference oracle for parameter gradients."""

import numpy as np


def numeric_grad(loss, params, h=1e-5):
    """Central differences of ``loss(params) -> float`` for every parameter entry."""
    out = []
    arrays = [a.copy() for a in params.arrays()]
    for idx, a in enumerate(arrays):
        g = np.zeros_like(a)
        flat = a.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + h
            fp = loss(params.with_arrays(arrays))
            flat[j] = old - h
            fm = loss(params.with_arrays(arrays))
            flat[j] = old
            g.reshape(-1)[j] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def relative_error(analytic, numeric):
    a = np.concatenate([np.ravel(x) for x in analytic])
    n = np.concatenate([np.ravel(x) for x in numeric])
    scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / scale)
