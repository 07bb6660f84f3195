"""Iso-level polyline extraction from a regular scalar grid (marching squares).

Grid values z[i, j] live at coordinates (x[i], y[j]).  Level crossings are
interpolated once per grid edge (so neighbouring cells share bit-identical
endpoints), each cell contributes up to two segments, and segments are
chained into ordered polylines.  Saddle cells are disambiguated with the
cell-centre average.
"""

from __future__ import annotations

import numpy as np

__all__ = ["extract_contours"]


def _crossings(axis_a, axis_b, za, zb, level):
    """Interpolated crossing points on the edges between two node rows."""
    pts = {}
    for m in range(len(za)):
        v1, v2 = za[m], zb[m]
        if (v1 > level) != (v2 > level):
            t = (level - v1) / (v2 - v1)
            pts[m] = (axis_a[m][0] + t * (axis_b[m][0] - axis_a[m][0]),
                      axis_a[m][1] + t * (axis_b[m][1] - axis_a[m][1]))
    return pts


def extract_contours(x, y, z, level):
    """Ordered polylines of the iso-line z = level.

    Parameters
    ----------
    x, y : 1-D arrays of node coordinates (len nx, ny).
    z : array (nx, ny) of node values.
    level : float

    Returns
    -------
    list of polylines; each polyline is a list of (x, y) points.  Closed
    loops repeat their first point at the end.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    nx, ny = len(x), len(y)
    if z.shape != (nx, ny):
        raise ValueError(f"z shape {z.shape} does not match axes ({nx}, {ny})")

    # crossing points, one computation per edge
    xcross = {}  # edge (i, j)-(i+1, j)
    for j in range(ny):
        nodes_a = [(x[i], y[j]) for i in range(nx - 1)]
        nodes_b = [(x[i + 1], y[j]) for i in range(nx - 1)]
        row = _crossings(nodes_a, nodes_b, z[:-1, j], z[1:, j], level)
        for i, p in row.items():
            xcross[(i, j)] = p
    ycross = {}  # edge (i, j)-(i, j+1)
    for i in range(nx):
        nodes_a = [(x[i], y[j]) for j in range(ny - 1)]
        nodes_b = [(x[i], y[j + 1]) for j in range(ny - 1)]
        col = _crossings(nodes_a, nodes_b, z[i, :-1], z[i, 1:], level)
        for j, p in col.items():
            ycross[(i, j)] = p

    segments = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            above = (z[i, j] > level, z[i + 1, j] > level,
                     z[i + 1, j + 1] > level, z[i, j + 1] > level)
            if all(above) or not any(above):
                continue
            # edge order: bottom, right, top, left
            pts = (xcross.get((i, j)), ycross.get((i + 1, j)),
                   xcross.get((i, j + 1)), ycross.get((i, j)))
            present = [e for e in range(4) if pts[e] is not None]
            if len(present) == 2:
                segments.append((pts[present[0]], pts[present[1]]))
            else:
                # saddle: pair edges around single-corner islands
                centre_above = (z[i, j] + z[i + 1, j] + z[i + 1, j + 1]
                                + z[i, j + 1]) / 4.0 > level
                if above[0] == centre_above:
                    segments.append((pts[0], pts[1]))
                    segments.append((pts[2], pts[3]))
                else:
                    segments.append((pts[0], pts[3]))
                    segments.append((pts[1], pts[2]))

    return _chain(segments)


def _chain(segments):
    """Chain segments into polylines; endpoints match exactly because each
    edge crossing is computed once."""
    adj = {}
    for si, (a, b) in enumerate(segments):
        adj.setdefault(a, []).append((si, 0))
        adj.setdefault(b, []).append((si, 1))

    used = [False] * len(segments)
    polylines = []

    def walk(si, far_end):
        a, b = segments[si]
        line = [b, a] if far_end == 0 else [a, b]
        used[si] = True
        while True:
            nxt = [(sj, ej) for sj, ej in adj.get(line[-1], ()) if not used[sj]]
            if not nxt:
                return line
            sj, ej = nxt[0]
            used[sj] = True
            line.append(segments[sj][1 - ej])

    order = sorted(range(len(segments)), key=lambda si: segments[si])
    # open lines start at degree-1 endpoints
    for si in order:
        if used[si]:
            continue
        a, b = segments[si]
        if len(adj[a]) == 1:
            polylines.append(walk(si, 1))
        elif len(adj[b]) == 1:
            polylines.append(walk(si, 0))
    # remaining segments belong to closed loops
    for si in order:
        if not used[si]:
            polylines.append(walk(si, 1))

    return polylines
