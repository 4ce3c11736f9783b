"""Compare the compiled and pure-Python plant kernels.

Run with ``python benchmarks/bench_kernels.py``. Prints wall time per
rollout and checks that both backends give bit-identical trajectories.
"""
import math
import timeit

import numpy as np

from ddlpv.plant import DiscParams, _kernels_py

try:
    from ddlpv.plant import _kernels as compiled
except ImportError:
    compiled = None


def main(n_steps: int = 2000, repeat: int = 5):
    args = DiscParams().kernel_args()
    rng = np.random.default_rng(0)
    u = rng.uniform(-10, 10, n_steps)
    ref = np.zeros(n_steps)
    dist = np.zeros((n_steps, 2))
    noise = np.zeros(n_steps)
    gains = (-1.35, -0.39, 0.3, 0.0, 0.61, 0.39)
    backends = {"python": _kernels_py}
    if compiled is not None:
        backends["compiled"] = compiled
    out = {}
    for name, mod in backends.items():
        ol = lambda: mod.rollout_open_loop(0.1, 0.0, u, *args)  # noqa: E731
        cl = lambda: mod.rollout_closed_loop(math.pi, 0.0, *gains, ref, dist, noise, 0.0, 0, *args)  # noqa: E731
        t_ol = min(timeit.repeat(ol, number=1, repeat=repeat))
        t_cl = min(timeit.repeat(cl, number=1, repeat=repeat))
        out[name] = (ol()[0], cl()[0])
        print(f"{name:>9}: open loop {t_ol * 1e3:8.2f} ms   closed loop {t_cl * 1e3:8.2f} ms   ({n_steps} steps)")
    if len(out) == 2:
        same = all(np.array_equal(a, b) for a, b in zip(out["python"], out["compiled"]))
        print(f"bit-identical trajectories: {same}")


if __name__ == "__main__":
    main()
