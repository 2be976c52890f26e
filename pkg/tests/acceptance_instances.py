"""Shared definition of the dual-solver comparison instances.

Both the expected-value freezing script and the acceptance test import
this module, so the frozen reference values always describe exactly
these instances: 50 seeded problems, p in [4, 12] (keeping every penalty
choice feasible), d = 2, alternating kernels, penalties cycling through
1/p, 0.3 and 1.
"""

from __future__ import annotations

import numpy as np

from ktchart import KernelSpec

N_INSTANCES = 50


def dual_instance(index: int):
    """Instance `index`: (points, kernel, C)."""
    rng = np.random.default_rng(9000 + index)
    p = int(rng.integers(4, 13))
    X = rng.normal(size=(p, 2))
    if index % 2 == 0:
        kernel = KernelSpec.gaussian(float(rng.uniform(0.7, 2.2)))
    else:
        kernel = KernelSpec.linear()
    C = [1.0 / p, 0.3, 1.0][index % 3]
    return X, kernel, C


def all_instances():
    return [dual_instance(i) for i in range(N_INSTANCES)]
