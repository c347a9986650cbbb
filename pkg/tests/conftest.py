import math

import numpy as np
import pytest

from qwalk.core import Spinor, evolve, make_initial, PhaseProfile


def reference_walk(u, v, n_min, steps, coin, phi_u, phi_v):
    """Site-by-site loop over Python complex numbers, independent of the kernels.

    ``phi_u``/``phi_v`` are callables n -> radians.
    """
    size = len(u)
    u = [complex(x) for x in u]
    v = [complex(x) for x in v]
    (c11, c12), (c21, c22) = [[complex(x) for x in row] for row in coin]
    history = [(list(u), list(v))]
    for _ in range(steps):
        nu = [0j] * size
        nv = [0j] * size
        for j in range(size):
            n = n_min + j
            if j + 1 < size:
                nu[j] = (c11 * u[j + 1] + c12 * v[j + 1]) * complex(math.cos(phi_u(n)), math.sin(phi_u(n)))
            if j - 1 >= 0:
                nv[j] = (c21 * u[j - 1] + c22 * v[j - 1]) * complex(math.cos(phi_v(n)), math.sin(phi_v(n)))
        u, v = nu, nv
        history.append((list(u), list(v)))
    return np.array([h[0] for h in history]), np.array([h[1] for h in history])


COIN = [[1 / math.sqrt(2), 1j / math.sqrt(2)], [1j / math.sqrt(2), 1 / math.sqrt(2)]]


@pytest.fixture(scope="session")
def delta_run():
    """70-step runs from the lower loop at n=0 for the three preset gradients."""
    out = {}
    for key, (q, p) in {"0": (0, 1), "2pi/32": (1, 32), "2pi/5": (1, 5)}.items():
        s = make_initial(0, Spinor.named("down"), (-70, 70))
        out[key] = evolve(s, 70, phase=PhaseProfile.rational(q, p))
    return out
