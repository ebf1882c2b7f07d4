"""Polygonal meshes: representation, generation, refinement, regularity.

Elements are stored as counter-clockwise cycles of vertex indices.  Edges
are derived from consecutive cycle pairs; a hanging node is simply a
collinear vertex shared by the fine side and the coarse neighbour, so every
mesh edge has one or two incident elements and no special casing is needed
downstream.  Meshes are treated as immutable after construction; refine
returns a new mesh.
"""

import numpy as np

# vertices closer than COLLINEAR_TOL (relative to edge lengths) are treated
# as lying on a straight run when classifying corners
COLLINEAR_TOL = 1e-9
MERGE_TOL = 1e-12


class PolyMesh:
    """Immutable polygonal mesh made of counter-clockwise vertex cycles."""

    def __init__(self, vertices, elements, domain_area=None):
        self.vertices = np.array(vertices, dtype=float)
        self.elements = [np.asarray(c, dtype=int) for c in elements]
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        self._build_geometry()
        self._build_edges()
        if domain_area is not None:
            total = self.areas.sum()
            if abs(total - domain_area) > 1e-12 * max(abs(domain_area), 1.0):
                raise ValueError(
                    "element areas sum to %.15g, expected %.15g"
                    % (total, domain_area))

    # ------------------------------------------------------------------
    # construction helpers

    def _build_geometry(self):
        nel = len(self.elements)
        self.areas = np.empty(nel)
        self.centroids = np.empty((nel, 2))
        self.diameters = np.empty(nel)
        for e, cyc in enumerate(self.elements):
            pts = self.vertices[cyc]
            if len(pts) < 3:
                raise ValueError("element %d has fewer than 3 vertices" % e)
            x = pts[:, 0]
            y = pts[:, 1]
            xn = np.roll(x, -1)
            yn = np.roll(y, -1)
            cross = x * yn - xn * y
            area = 0.5 * cross.sum()
            if area <= 0.0:
                raise ValueError(
                    "element %d is not counter-clockwise (area %.3g)"
                    % (e, area))
            self.areas[e] = area
            self.centroids[e] = np.array([
                ((x + xn) * cross).sum(), ((y + yn) * cross).sum()
            ]) / (6.0 * area)
            d = pts[:, None, :] - pts[None, :, :]
            self.diameters[e] = np.sqrt((d ** 2).sum(-1).max())
        self.h = float(self.diameters.max())

    def _build_edges(self):
        seen = {}
        order = []
        for e, cyc in enumerate(self.elements):
            n = len(cyc)
            for i in range(n):
                a = int(cyc[i])
                b = int(cyc[(i + 1) % n])
                if a == b:
                    raise ValueError("element %d repeats vertex %d" % (e, a))
                key = (a, b) if a < b else (b, a)
                if key not in seen:
                    seen[key] = []
                    order.append(key)
                seen[key].append((e, a < b))
        self.edges = np.array(order, dtype=int).reshape(-1, 2)
        self.edge_elements = []
        self.edge_forward = []  # element traversing the edge min->max
        for key in order:
            inc = seen[key]
            if len(inc) > 2:
                raise ValueError("edge %s has %d incident elements"
                                 % (key, len(inc)))
            if len(inc) == 2 and inc[0][1] == inc[1][1]:
                raise ValueError(
                    "edge %s traversed twice in the same direction" % (key,))
            self.edge_elements.append([t[0] for t in inc])
            self.edge_forward.append([t[1] for t in inc])
        self.boundary_edge = np.array(
            [len(t) == 1 for t in self.edge_elements])
        self.boundary_vertex = np.zeros(len(self.vertices), dtype=bool)
        for k in np.nonzero(self.boundary_edge)[0]:
            self.boundary_vertex[self.edges[k]] = True
        ev = self.vertices[self.edges]
        self.edge_lengths = np.linalg.norm(ev[:, 1] - ev[:, 0], axis=1)
        self._edge_index = {tuple(k): i for i, k in enumerate(map(tuple, self.edges))}

    # ------------------------------------------------------------------
    # queries

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.elements)

    @property
    def num_edges(self):
        return len(self.edges)

    def element_vertices(self, e):
        return self.vertices[self.elements[e]]

    def edge_id(self, a, b):
        key = (a, b) if a < b else (b, a)
        return self._edge_index[key]

    def element_edges(self, e):
        """Edge ids of the consecutive cycle pairs of element e."""
        cyc = self.elements[e]
        n = len(cyc)
        return [self.edge_id(int(cyc[i]), int(cyc[(i + 1) % n]))
                for i in range(n)]

    def sub_triangulate(self, e):
        """Fan triangles joining the barycentre to each boundary edge.

        Returns an (n, 3, 2) array.  Raises if the element is not
        star-shaped with respect to its barycentre.
        """
        pts = self.element_vertices(e)
        c = self.centroids[e]
        n = len(pts)
        tris = np.empty((n, 3, 2))
        for i in range(n):
            tris[i, 0] = c
            tris[i, 1] = pts[i]
            tris[i, 2] = pts[(i + 1) % n]
        e1 = tris[:, 1] - tris[:, 0]
        e2 = tris[:, 2] - tris[:, 0]
        dets = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(dets <= 0.0):
            raise ValueError(
                "element %d is not star-shaped about its barycentre" % e)
        return tris

    def corner_flags(self, e):
        """True for cycle vertices that are genuine corners of element e."""
        pts = self.element_vertices(e)
        prev = pts - np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0) - pts
        cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
        scale = (np.linalg.norm(prev, axis=1) * np.linalg.norm(nxt, axis=1))
        return np.abs(cross) > COLLINEAR_TOL * scale


# ----------------------------------------------------------------------
# mesh generation


def lshape_polygon():
    """The L-shaped domain (-1,1)^2 minus the quadrant [0,1) x (-1,0]."""
    return np.array([
        [-1.0, -1.0], [0.0, -1.0], [0.0, 0.0],
        [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0],
    ])


def square_polygon(x0=0.0, x1=1.0, y0=0.0, y1=1.0):
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def build_cartesian_grid(nx, ny, bounds=(0.0, 1.0, 0.0, 1.0), lshape=False):
    """Axis-aligned quadrilateral grid, optionally with the L-shape mask.

    With lshape=True the grid lives on the given bounds and cells whose
    centre falls in the removed quadrant x > 0, y < 0 are dropped.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid must have at least one cell per direction")
    x0, x1, y0, y1 = bounds
    if not (x1 > x0 and y1 > y0):
        raise ValueError("zero-size domain")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    vid = -np.ones((nx + 1, ny + 1), dtype=int)
    cells = []
    for i in range(nx):
        for j in range(ny):
            cx = 0.5 * (xs[i] + xs[i + 1])
            cy = 0.5 * (ys[j] + ys[j + 1])
            if lshape and cx > 0.0 and cy < 0.0:
                continue
            cells.append((i, j))
    verts = []
    for (i, j) in cells:
        for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
            if vid[i + di, j + dj] < 0:
                vid[i + di, j + dj] = len(verts)
                verts.append((xs[i + di], ys[j + dj]))
    elements = [
        [vid[i, j], vid[i + 1, j], vid[i + 1, j + 1], vid[i, j + 1]]
        for (i, j) in cells
    ]
    area = (x1 - x0) * (y1 - y0)
    if lshape:
        area -= (x1 - max(x0, 0.0)) * (min(y1, 0.0) - y0)
    return PolyMesh(np.array(verts), elements, domain_area=area)


def _clip_halfplane(poly, a, b):
    """Sutherland-Hodgman clip of polygon rows against a . x <= b."""
    out = []
    n = len(poly)
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        dp = a[0] * p[0] + a[1] * p[1] - b
        dq = a[0] * q[0] + a[1] * q[1] - b
        if dp <= 0.0:
            out.append(p)
            if dq > 0.0:
                t = dp / (dp - dq)
                out.append(p + t * (q - p))
        elif dq <= 0.0:
            t = dp / (dp - dq)
            out.append(p + t * (q - p))
    return np.array(out) if out else np.empty((0, 2))


def build_voronoi_mesh(n_seeds, domain="square", lloyd_iters=100, rng_seed=0):
    """Lloyd-smoothed Voronoi tessellation clipped to the domain.

    domain is "square", "lshape", or an explicit counter-clockwise polygon.
    Deterministic for a fixed rng_seed.  Degenerate configurations
    (coincident seeds, cells that fail the star-shape check used by the
    refinement rule) are re-jittered deterministically; more than 100
    attempts is an error.
    """
    import shapely.geometry as geom

    if isinstance(domain, str):
        if domain == "square":
            dpoly = square_polygon()
        elif domain == "lshape":
            dpoly = lshape_polygon()
        else:
            raise ValueError("unknown domain %r" % domain)
    else:
        dpoly = np.asarray(domain, float)
    shp = geom.Polygon(dpoly)
    if not shp.is_valid or shp.area <= 0.0:
        raise ValueError("invalid domain polygon")
    minx, miny, maxx, maxy = shp.bounds
    span = max(maxx - minx, maxy - miny)
    box = np.array([
        [minx - span, miny - span], [maxx + span, miny - span],
        [maxx + span, maxy + span], [minx - span, maxy + span],
    ])

    if n_seeds < 1:
        raise ValueError("need at least one seed")

    last_err = "no attempt made"
    for attempt in range(100):
        rng = np.random.default_rng((rng_seed, attempt))
        seeds = _sample_seeds(rng, n_seeds, shp, (minx, miny, maxx, maxy))
        if seeds is None:
            last_err = "could not place seeds inside the domain"
            continue
        ok = True
        for _ in range(lloyd_iters):
            cells = _voronoi_cells(seeds, box, shp)
            if cells is None:
                ok = False
                break
            new = np.empty_like(seeds)
            for i, cell in enumerate(cells):
                c = cell.centroid
                if not shp.contains(c):
                    c = cell.representative_point()
                new[i] = (c.x, c.y)
            seeds = new
        if not ok:
            last_err = "tessellation degenerated during smoothing"
            continue
        cells = _voronoi_cells(seeds, box, shp)
        if cells is None:
            last_err = "tessellation degenerated after smoothing"
            continue
        mesh = _cells_to_mesh(cells, shp.area)
        if mesh is None:
            last_err = "cells failed mesh validity or star-shape checks"
            continue
        return mesh
    raise RuntimeError(
        "Voronoi generation failed after 100 attempts: " + last_err)


def _sample_seeds(rng, n_seeds, shp, bounds):
    import shapely.geometry as geom

    minx, miny, maxx, maxy = bounds
    seeds = []
    for _ in range(10000):
        p = rng.uniform((minx, miny), (maxx, maxy))
        if shp.contains(geom.Point(p)):
            seeds.append(p)
            if len(seeds) == n_seeds:
                return np.array(seeds)
    return None


def _voronoi_cells(seeds, box, shp):
    """Clip each seed's Voronoi cell to the domain; None on degeneracy."""
    import shapely.geometry as geom

    n = len(seeds)
    d2 = ((seeds[:, None, :] - seeds[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    if d2.min() < 1e-16:
        return None
    cells = []
    for i in range(n):
        poly = box
        for j in range(n):
            if j == i:
                continue
            a = seeds[j] - seeds[i]
            b = 0.5 * (seeds[j] + seeds[i]) @ a
            poly = _clip_halfplane(poly, a, b)
            if len(poly) < 3:
                return None
        cell = geom.Polygon(poly).intersection(shp)
        if cell.geom_type != "Polygon" or cell.area <= 0.0 or cell.interiors:
            return None
        cells.append(cell)
    return cells


def _cells_to_mesh(cells, domain_area):
    from scipy.spatial import cKDTree
    from shapely.geometry.polygon import orient

    rings = []
    for cell in cells:
        ring = np.array(orient(cell).exterior.coords[:-1])
        rings.append(ring)
    allpts = np.vstack(rings)
    scale = max(np.ptp(allpts[:, 0]), np.ptp(allpts[:, 1]))
    tol = 1e-9 * scale
    tree = cKDTree(allpts)
    pairs = tree.query_pairs(tol)
    parent = list(range(len(allpts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    rep = {}
    verts = []
    gid = np.empty(len(allpts), dtype=int)
    for i in range(len(allpts)):
        r = find(i)
        if r not in rep:
            rep[r] = len(verts)
            verts.append(allpts[r])
        gid[i] = rep[r]
    elements = []
    ofs = 0
    for ring in rings:
        ids = []
        for k in range(len(ring)):
            g = gid[ofs + k]
            if not ids or (g != ids[-1] and g != ids[0]):
                ids.append(g)
        ofs += len(ring)
        if len(ids) < 3:
            return None
        elements.append(ids)
    try:
        mesh = PolyMesh(np.array(verts), elements, domain_area=domain_area)
        for e in range(mesh.num_elements):
            mesh.sub_triangulate(e)
    except (ValueError, RuntimeError):
        return None
    return mesh


# ----------------------------------------------------------------------
# refinement


def _star_about_centroid(pts):
    """Whether the barycentre fan of a vertex cycle has positive triangles."""
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area <= 0.0:
        return False
    c = np.array([((x + xn) * cross).sum(),
                  ((y + yn) * cross).sum()]) / (6.0 * area)
    e1 = pts - c
    e2 = np.roll(pts, -1, axis=0) - c
    dets = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return bool(np.all(dets > 0.0))


def refine(mesh, marked):
    """Midpoint-barycentre refinement of the marked elements.

    Every marked element is split by connecting the midpoint of each of its
    straight boundary segments to the barycentre, giving one quadrilateral
    per corner.  A child wrapped around a reflex corner would not be
    star-shaped, so it is cut along the barycentre-corner diagonal into two
    triangles instead.  Unrefined neighbours keep the new midpoints as
    collinear (hanging) vertices.  Returns a new mesh; an empty marked set
    returns the input mesh unchanged.
    """
    marked = sorted(set(int(m) for m in marked))
    if not marked:
        return mesh
    marked_set = set(marked)

    verts = [tuple(p) for p in mesh.vertices]
    new_coord_id = {}

    def add_vertex(p):
        key = (float(p[0]), float(p[1]))
        if key in new_coord_id:
            return new_coord_id[key]
        verts.append(key)
        vid = len(verts) - 1
        new_coord_id[key] = vid
        return vid

    # children of marked elements, keyed by parent id
    children = {}
    # old sub-edge (min id, max id) -> list of midpoint vertex ids placed
    # strictly inside it
    splits = {}
    new_vertex_ids = set()

    for e in marked:
        cyc = [int(v) for v in mesh.elements[e]]
        pts = mesh.vertices[cyc]
        n = len(cyc)
        mesh.sub_triangulate(e)  # raises if not refinable
        is_corner = mesh.corner_flags(e)
        corners = [i for i in range(n) if is_corner[i]]
        if len(corners) < 3:
            raise ValueError("element %d has fewer than 3 corners" % e)
        bary = add_vertex(mesh.centroids[e])
        new_vertex_ids.add(bary)
        tol = MERGE_TOL * mesh.diameters[e]

        # one ordered vertex chain per straight segment, midpoint included
        nseg = len(corners)
        seg_chains = []
        seg_mid_pos = []
        for s in range(nseg):
            i0 = corners[s]
            i1 = corners[(s + 1) % nseg]
            run = [i0]
            k = (i0 + 1) % n
            while k != i1:
                run.append(k)
                k = (k + 1) % n
            run.append(i1)
            chain = [cyc[i] for i in run]
            coords = [pts[i] for i in run]
            a = coords[0]
            b = coords[-1]
            mid = 0.5 * (np.asarray(a) + np.asarray(b))
            seg_len = np.linalg.norm(np.asarray(b) - np.asarray(a))
            hit = None
            for idx in range(1, len(chain) - 1):
                if np.linalg.norm(coords[idx] - mid) <= max(tol, 1e-14):
                    hit = idx
                    break
            if hit is not None:
                mid_id = chain[hit]
                pos = hit
            else:
                mid_id = add_vertex(mid)
                new_vertex_ids.add(mid_id)
                # locate the sub-edge of the run containing the midpoint
                params = [np.dot(c - a, b - a) / seg_len ** 2 for c in coords]
                pos = 1
                while pos < len(chain) and params[pos] < 0.5:
                    pos += 1
                u = chain[pos - 1]
                v = chain[pos]
                key = (u, v) if u < v else (v, u)
                splits.setdefault(key, []).append(mid_id)
                chain = chain[:pos] + [mid_id] + chain[pos:]
            seg_chains.append(chain)
            seg_mid_pos.append(pos)

        kids = []
        for s in range(nseg):
            prev = (s - 1) % nseg
            # boundary walk: midpoint of the previous segment, through the
            # shared corner, to the midpoint of this segment
            left = seg_chains[prev][seg_mid_pos[prev]:]
            walk = left + seg_chains[s][1:seg_mid_pos[s] + 1]
            kid = [bary] + walk
            if _star_about_centroid(np.asarray([verts[v] for v in kid])):
                kids.append(kid)
            else:
                ci = len(left) - 1
                kids.append([bary] + walk[:ci + 1])
                kids.append([bary] + walk[ci:])
        children[e] = kids

    # assemble the new element list, keeping a stable ordering
    new_elements = []
    elem_cycles = {}
    for e in range(mesh.num_elements):
        if e in marked_set:
            cycles = children[e]
        else:
            cycles = [[int(v) for v in mesh.elements[e]]]
        elem_cycles[e] = cycles
        new_elements.extend(cycles)

    # push each new midpoint into every neighbouring cycle whose boundary
    # still runs straight through it
    varr = np.array(verts)
    for (u, v), mids in splits.items():
        eid = mesh.edge_id(u, v)
        for m in mids:
            placed = False
            for e2 in mesh.edge_elements[eid]:
                for cyc in elem_cycles[e2]:
                    if m in cyc or _insert_on_cycle(cyc, m, varr):
                        placed = True
            if not placed:
                raise RuntimeError(
                    "refinement dropped a midpoint on edge (%d, %d)" % (u, v))

    return PolyMesh(varr, new_elements, domain_area=float(mesh.areas.sum()))


def _insert_on_cycle(cyc, m, varr):
    """Insert vertex m into the cycle edge that strictly contains it."""
    p = varr[m]
    n = len(cyc)
    for i in range(n):
        a = varr[cyc[i]]
        b = varr[cyc[(i + 1) % n]]
        ab = b - a
        L2 = ab @ ab
        t = (p - a) @ ab / L2
        if t <= 1e-12 or t >= 1.0 - 1e-12:
            continue
        off = p - (a + t * ab)
        if off @ off <= (1e-9) ** 2 * L2:
            cyc.insert(i + 1, m)
            return True
    return False


def uniform_refine(mesh):
    """Refine every element (no hanging nodes on matching grids)."""
    return refine(mesh, range(mesh.num_elements))


# ----------------------------------------------------------------------
# regularity


class RegularityReport:
    """Shape-regularity survey: edge ratios and inscribed-ball estimates."""

    def __init__(self, edge_ratio, ball_ratio):
        self.edge_ratio = np.asarray(edge_ratio, float)
        self.ball_ratio = np.asarray(ball_ratio, float)
        self.rho = float(min(self.edge_ratio.min(), self.ball_ratio.min()))


def regularity_check(mesh):
    """Per-element min h_e / h_E and barycentre ball radius / h_E."""
    nel = mesh.num_elements
    edge_ratio = np.empty(nel)
    ball_ratio = np.empty(nel)
    for e in range(nel):
        pts = mesh.element_vertices(e)
        hE = mesh.diameters[e]
        c = mesh.centroids[e]
        nxt = np.roll(pts, -1, axis=0)
        lens = np.linalg.norm(nxt - pts, axis=1)
        edge_ratio[e] = lens.min() / hE
        # distance from the barycentre to each boundary segment
        ab = nxt - pts
        t = np.clip(((c - pts) * ab).sum(1) / (ab * ab).sum(1), 0.0, 1.0)
        proj = pts + t[:, None] * ab
        dist = np.linalg.norm(proj - c, axis=1).min()
        ball_ratio[e] = dist / hE
    return RegularityReport(edge_ratio, ball_ratio)
