"""Reading and writing meshes: plain text format and SVG snapshots."""

import numpy as np

from .mesh import PolyMesh


def write_mesh_text(mesh, path):
    """Write the text format: header, vertex block, element block."""
    lines = ["polymesh 2d", "vertices %d" % mesh.num_vertices]
    for p in mesh.vertices:
        lines.append("%r %r" % (float(p[0]), float(p[1])))
    lines.append("elements %d" % mesh.num_elements)
    for cyc in mesh.elements:
        lines.append(" ".join([str(len(cyc))] + [str(int(v)) for v in cyc]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh_text(path):
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def take():
        nonlocal pos
        t = tokens[pos]
        pos += 1
        return t

    if take() != "polymesh" or take() != "2d":
        raise ValueError("not a polymesh 2d file: %s" % path)
    if take() != "vertices":
        raise ValueError("missing vertices block")
    nv = int(take())
    verts = np.array([[float(take()), float(take())] for _ in range(nv)])
    if take() != "elements":
        raise ValueError("missing elements block")
    ne = int(take())
    elements = []
    for _ in range(ne):
        k = int(take())
        elements.append([int(take()) for _ in range(k)])
    return PolyMesh(verts, elements)


def write_mesh_svg(mesh, path, size=640, stroke="#1a1a1a"):
    """Render the mesh as one stroked polygon per element.

    The viewport is the mesh bounding box; the y axis is flipped so the
    picture matches the usual mathematical orientation.
    """
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    span = hi - lo
    span[span == 0.0] = 1.0
    width = size
    height = int(round(size * span[1] / span[0]))
    sw = 0.0015 * max(span)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="%.9g %.9g %.9g %.9g">'
        % (width, height, lo[0], lo[1], span[0], span[1])
    ]
    for cyc in mesh.elements:
        pts = mesh.vertices[cyc]
        coords = " ".join("%.9g,%.9g" % (p[0], lo[1] + hi[1] - p[1])
                          for p in pts)
        parts.append(
            '<polygon points="%s" fill="none" stroke="%s" '
            'stroke-width="%.3g"/>' % (coords, stroke, sw))
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
