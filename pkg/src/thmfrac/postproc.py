"""Derived measurements from field snapshots: probes, widths, crack length."""

from __future__ import annotations

import numpy as np

from . import constitutive as law
from .constitutive import MaterialParams
from .errors import PointNotFound
from .fem import ElementTables
from .mesh import Mesh, locate_point
from .physics import FieldState, scalar_qp, strain_qp

_FIELDS = ("p", "T", "v", "ux", "uy")


def interpolate(mesh: Mesh, nodal: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a nodal field at points (k, 2); exact at nodes."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    tol = 1e-12 * max(mesh.width, mesh.height, 1.0)
    if (np.any(x < mesh.xs[0] - tol) or np.any(x > mesh.xs[-1] + tol)
            or np.any(y < mesh.ys[0] - tol) or np.any(y > mesh.ys[-1] + tol)):
        raise PointNotFound("interpolation point outside the domain")
    i = np.clip(np.searchsorted(mesh.xs, x, side="right") - 1, 0, len(mesh.xs) - 2)
    j = np.clip(np.searchsorted(mesh.ys, y, side="right") - 1, 0, len(mesh.ys) - 2)
    hx = mesh.xs[i + 1] - mesh.xs[i]
    hy = mesh.ys[j + 1] - mesh.ys[j]
    xi = np.clip(2.0 * (x - mesh.xs[i]) / hx - 1.0, -1.0, 1.0)
    eta = np.clip(2.0 * (y - mesh.ys[j]) / hy - 1.0, -1.0, 1.0)
    eid = j * (len(mesh.xs) - 1) + i
    conn = mesh.elems[eid]
    N = np.stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                  (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)], axis=-1) * 0.25
    return np.einsum("ka,ka->k", N, nodal[conn])


def probe(mesh: Mesh, state: FieldState, field: str, point) -> float:
    """Point value of one of {p, T, v, ux, uy} at ``point``."""
    if field not in _FIELDS:
        raise ValueError(f"unknown probe field {field!r}, expected one of {_FIELDS}")
    if field == "ux":
        nodal = state.u[0::2]
    elif field == "uy":
        nodal = state.u[1::2]
    else:
        nodal = getattr(state, field)
    return float(interpolate(mesh, nodal, np.asarray(point, dtype=float))[0])


def width_at(tables: ElementTables, state: FieldState, point,
             variant: str = "eps1") -> float:
    """Smeared fracture width h_e <eps1>+ at the nearest quadrature point."""
    mesh = tables.mesh
    eid, _ = locate_point(mesh, *np.asarray(point, dtype=float))
    eps = np.einsum("qsa,a->qs", tables.B[eid], state.u[tables.dofs_vec[eid]])
    qp_xy = tables.N @ mesh.nodes[mesh.elems[eid]]          # (4, 2)
    d2 = np.sum((qp_xy - np.asarray(point, dtype=float)) ** 2, axis=1)
    q = int(np.argmin(d2))
    w = law.fracture_width(eps[q], mesh.h_e[eid], variant)
    return float(w)


def fracture_length(mesh: Mesh, v: np.ndarray, path: np.ndarray,
                    v_threshold: float = 0.1) -> float:
    """Arc length of the path portions where interpolated v <= threshold.

    Crossings of the threshold are bisected to 1e-4 of the local element
    size. The path is a polyline (k, 2) inside the domain.
    """
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[0] < 2:
        raise ValueError("path needs at least two points")
    h_min = float(mesh.h_e.min())
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        seg = b - a
        L = float(np.hypot(*seg))
        if L == 0.0:
            continue
        n = max(2, int(np.ceil(L / (0.25 * h_min))) + 1)
        s = np.linspace(0.0, 1.0, n)
        pts = a + s[:, None] * seg
        vals = interpolate(mesh, v, pts) - v_threshold

        def f(t):
            return float(interpolate(mesh, v, a + t * seg)[0]) - v_threshold

        tol_t = 1e-4 * h_min / L
        for k in range(n - 1):
            f0, f1 = vals[k], vals[k + 1]
            ds = (s[k + 1] - s[k]) * L
            if f0 <= 0.0 and f1 <= 0.0:
                total += ds
            elif f0 > 0.0 and f1 > 0.0:
                continue
            else:
                t0, t1 = s[k], s[k + 1]
                g0 = f0
                while (t1 - t0) > tol_t:
                    tm = 0.5 * (t0 + t1)
                    gm = f(tm)
                    if (g0 <= 0.0) == (gm <= 0.0):
                        t0, g0 = tm, gm
                    else:
                        t1 = tm
                tc = 0.5 * (t0 + t1)
                if f0 <= 0.0:
                    total += (tc - s[k]) * L
                else:
                    total += (s[k + 1] - tc) * L
    return total


def element_cell_data(tables: ElementTables, params: MaterialParams,
                      state: FieldState, width_variant: str = "eps1",
                      porosity_variant: str = "phi1") -> dict[str, np.ndarray]:
    """Element-averaged derived quantities for snapshot output."""
    eps = strain_qp(tables, state.u)
    dT = scalar_qp(tables, state.T) - params.T0
    v_qp = scalar_qp(tables, state.v)
    st = law.qp_state(eps, dT, tables.h_e_qp, v_qp, params,
                      width_variant=width_variant, porosity_variant=porosity_variant)
    return {
        "width": st.width.mean(axis=1),
        "porosity": st.porosity.mean(axis=1),
        "permeability_xx": st.perm[..., 0, 0].mean(axis=1),
        "permeability_yy": st.perm[..., 1, 1].mean(axis=1),
        "permeability_xy": st.perm[..., 0, 1].mean(axis=1),
    }
