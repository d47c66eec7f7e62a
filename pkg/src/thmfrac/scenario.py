"""Turn a validated ScenarioConfig into a runnable Simulation."""

from __future__ import annotations

import numpy as np

from .config import ScenarioConfig
from .fem import build_tables
from .mesh import (Mesh, elems_intersecting_segment, generate_rect_mesh,
                   nearest_node, nodes_on_segment)
from .physics import FieldState
from .postproc import fracture_length, probe, width_at
from .staggered import Simulation


def _edge_load(mesh: Mesh, edge_set: str, traction) -> np.ndarray:
    """Consistent nodal forces of a constant traction on a boundary edge set."""
    f = np.zeros(2 * mesh.n_nodes)
    tx, ty = traction
    for n1, n2 in mesh.boundary_edges[edge_set]:
        L = float(np.hypot(*(mesh.nodes[n2] - mesh.nodes[n1])))
        for n in (n1, n2):
            f[2 * n] += 0.5 * tx * L
            f[2 * n + 1] += 0.5 * ty * L
    return f


def _merge_dirichlet(entries: list[tuple[np.ndarray, float]]) -> tuple[np.ndarray, np.ndarray]:
    """Collapse (dofs, value) pairs into unique arrays; later entries win."""
    table: dict[int, float] = {}
    for dofs, value in entries:
        for d in np.asarray(dofs, dtype=np.int64):
            table[int(d)] = float(value)
    if not table:
        return np.empty(0, dtype=np.int64), np.empty(0)
    dofs = np.fromiter(table.keys(), dtype=np.int64)
    order = np.argsort(dofs)
    vals = np.fromiter(table.values(), dtype=float)
    return dofs[order], vals[order]


def build_simulation(cfg: ScenarioConfig) -> Simulation:
    mesh = generate_rect_mesh(cfg.domain[0], cfg.domain[1], cfg.nx, cfg.ny,
                              cfg.refine_bands or None)
    tables = build_tables(mesh)
    mp = cfg.materials

    gc_elem = np.full(mesh.n_elems, mp.Gc)
    for seg, ratio in cfg.weak_interfaces:
        ids = elems_intersecting_segment(mesh, seg[0], seg[1])
        gc_elem[ids] = mp.Gc * ratio

    crack_tol = 1e-3 * float(mesh.h_e.min())
    crack_nodes: list[np.ndarray] = []
    for seg in cfg.cracks:
        found = nodes_on_segment(mesh, seg[0], seg[1], tol=crack_tol)
        if found.size == 0:
            raise ValueError(f"initial crack {seg} does not pass through mesh nodes")
        crack_nodes.append(found)
    cracks = (np.unique(np.concatenate(crack_nodes)) if crack_nodes
              else np.empty(0, dtype=np.int64))
    if cracks.size:
        mesh.node_sets["crack"] = cracks

    f_ext = np.zeros(2 * mesh.n_nodes)
    mech_entries: list[tuple[np.ndarray, float]] = []
    for bc in cfg.bcs_mech:
        if bc.traction is not None:
            f_ext += _edge_load(mesh, bc.set, bc.traction)
            continue
        nodes = mesh.boundary_nodes[bc.set]
        if bc.component in ("x", "both"):
            mech_entries.append((2 * nodes, bc.value))
        if bc.component in ("y", "both"):
            mech_entries.append((2 * nodes + 1, bc.value))
    bc_u = _merge_dirichlet(mech_entries)

    flow_entries = [(mesh.boundary_nodes[bc.set], bc.value) for bc in cfg.bcs_flow]
    bc_p = _merge_dirichlet(flow_entries)

    heat_entries = [(mesh.boundary_nodes[bc.set], bc.value) for bc in cfg.bcs_heat]
    q_flow = np.zeros(mesh.n_nodes)
    if cfg.injection is not None:
        node = nearest_node(mesh, *cfg.injection.point)
        q_flow[node] += cfg.injection.rate
        if cfg.injection.temperature is not None and cfg.solve_thermal:
            heat_entries.append((np.array([node]), cfg.injection.temperature))
    bc_T = _merge_dirichlet(heat_entries)

    return Simulation(
        mesh=mesh, tables=tables, params=mp, gc_elem=gc_elem,
        solve_thermal=cfg.solve_thermal, solve_phasefield=cfg.solve_phasefield,
        stabilization=cfg.stabilization, porosity_variant=cfg.porosity_variant,
        width_variant=cfg.width_variant, bc_u=bc_u, bc_p=bc_p, bc_T=bc_T,
        f_ext=f_ext, q_flow=q_flow, crack_nodes=cracks, p_init=cfg.p_init)


def evaluate_probes(cfg: ScenarioConfig, sim: Simulation,
                    state: FieldState) -> dict[str, float]:
    """Evaluate every configured probe on a field snapshot."""
    out: dict[str, float] = {}
    for spec in cfg.probes:
        if spec.kind == "field":
            out[spec.name] = probe(sim.mesh, state, spec.field, spec.point)
        elif spec.kind == "width":
            out[spec.name] = width_at(sim.tables, state, spec.point,
                                      variant=cfg.width_variant)
        else:
            out[spec.name] = fracture_length(sim.mesh, state.v,
                                             np.asarray(spec.path, dtype=float),
                                             v_threshold=spec.threshold)
    return out
