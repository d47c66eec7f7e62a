"""Scratch diagnostic for KGD staggered convergence (not part of the package)."""
import time

import numpy as np

from thmfrac.mesh import RefineBand
from thmfrac.presets import kgd
from thmfrac.scenario import build_simulation, evaluate_probes
from thmfrac import analytic


def main(t_end=0.5, hi_x=8.0, band=1.2):
    cfg = kgd(fast=True, t_end=t_end)
    cfg.refine_bands = [
        RefineBand(axis="x", lo=0.0, hi=hi_x, h=0.1, ratio=1.2),
        RefineBand(axis="y", lo=30.0 - band, hi=30.0 + band, h=0.1, ratio=1.2),
    ]
    sim = build_simulation(cfg)
    print("elems", sim.mesh.n_elems, "nodes", sim.mesh.n_nodes)
    state = sim.initial_state()
    t = 0.0
    for duration, dt in cfg.controls.dt_schedule:
        for _ in range(int(round(duration / dt))):
            t0 = time.perf_counter()
            state, rep = sim.time_step(state, dt, cfg.controls)
            t += dt
            wall = time.perf_counter() - t0
            vals = evaluate_probes(cfg, sim, state)
            print(f"t={t:6.3f}  wall={wall:6.2f}s  outer={rep.outer_iters}  "
                  f"inner={rep.inner_iters}  p={vals['p_inj']:.4g}  "
                  f"l={vals['length']:.3f}  w={vals['w_inj']:.4g}  "
                  f"dv={[f'{x:.1e}' for x in rep.v_increments]}")


if __name__ == "__main__":
    main()
