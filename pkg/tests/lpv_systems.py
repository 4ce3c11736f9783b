"""Random affine LPV systems and exactly generated dictionaries for tests."""
import numpy as np

from ddlpv.core import AffineMatrixFunction, ControllerGains, DataDictionary, ScheduleBox


def random_system(rng, n_x, n_u, n_p, scale=0.4):
    A = AffineMatrixFunction(tuple(scale * rng.standard_normal((n_x, n_x)) for _ in range(n_p + 1)))
    B = AffineMatrixFunction(tuple(rng.standard_normal((n_x, n_u)) for _ in range(n_p + 1)))
    return A, B


def simulate_dictionary(rng, A, B, N_d, box=None):
    """Trajectory of ``x+ = A(p) x + B(p) u`` under random ``u`` and ``p``."""
    n_x, n_u, n_p = A.shape[0], B.shape[1], A.n_p
    box = box or ScheduleBox.symmetric_unit(n_p)
    u = rng.uniform(-1, 1, (N_d + 1, n_u))
    p = rng.uniform(box.lower, box.upper, (N_d + 1, n_p))
    x = np.zeros((N_d + 1, n_x))
    x[0] = rng.standard_normal(n_x)
    for k in range(N_d):
        x[k + 1] = A(p[k]) @ x[k] + B(p[k]) @ u[k]
    return DataDictionary(u, p, x, box)


def random_instance(rng, max_nx=3, max_nu=2, max_np=2, extra=4):
    n_x = int(rng.integers(1, max_nx + 1))
    n_u = int(rng.integers(1, max_nu + 1))
    n_p = int(rng.integers(1, max_np + 1))
    A, B = random_system(rng, n_x, n_u, n_p)
    N_d = (1 + n_p) * (n_x + n_u) + extra
    return A, B, simulate_dictionary(rng, A, B, N_d)


def random_gains(rng, n_u, n_x, n_p):
    return ControllerGains(rng.standard_normal((n_u, n_x)), rng.standard_normal((n_u, n_x * n_p)))
