"""Shape-regular triangulations of polygonal domains with oriented edges.

Conventions used throughout the package:

* cells are triples of vertex indices, counterclockwise;
* local edge ``i`` of a cell is the edge opposite local vertex ``i`` and runs
  from local vertex ``(i+1)%3`` to ``(i+2)%3`` in the counterclockwise walk;
* every global edge is stored as a directed vertex pair.  Its unit normal is
  the tangent rotated clockwise, ``n = (t_y, -t_x)/|t|``.  The direction is
  chosen so that the normal points from the lower-indexed adjacent cell to
  the higher-indexed one, outward on boundary edges.  This makes all H(div)
  degree-of-freedom signs deterministic.
"""

import numpy as np


class CellGeometry:
    """Per-cell affine geometry, computed once per mesh.

    Attributes
    ----------
    jac : ndarray (NC, 2, 2)
        Affine map matrix [a1-a0 | a2-a0].
    det : ndarray (NC,)
        Determinant of jac, equal to twice the signed area.
    area : ndarray (NC,)
        Signed cell areas.
    grad_lambda : ndarray (NC, 3, 2)
        Constant gradients of the barycentric coordinates.
    h : ndarray (NC,)
        Cell diameters (longest edge).
    rho : ndarray (NC,)
        Diameters of the inscribed circles, 4*area/perimeter.
    edge_length : ndarray (NC, 3)
        Length of the edge opposite each local vertex.
    normal : ndarray (NC, 3, 2)
        Unit outward normal on the edge opposite each local vertex.
    """

    def __init__(self, mesh):
        p = mesh.vertices[mesh.cells]          # (NC, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.jac = np.stack([d1, d2], axis=-1)
        self.det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.area = 0.5 * self.det
        # edge i runs from vertex (i+1)%3 to (i+2)%3
        t = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]   # (NC, 3, 2) tangents
        self.edge_length = np.linalg.norm(t, axis=-1)
        nrm = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        self.normal = nrm / self.edge_length[..., None]
        # grad(lambda_i) = -n_i * |e_i| / (2|K|)  (n_i outward unit)
        self.grad_lambda = -self.normal * (self.edge_length
                                           / self.det[:, None])[..., None]
        self.h = self.edge_length.max(axis=1)
        self.rho = 2.0 * self.det / self.edge_length.sum(axis=1)


class Mesh:
    """Immutable triangulation with oriented global edge topology.

    Parameters
    ----------
    vertices : array_like (NV, 2)
    cells : array_like (NC, 3)
        Counterclockwise vertex triples.
    """

    def __init__(self, vertices, cells):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must be (NV, 2)")
        if self.cells.ndim != 2 or self.cells.shape[1] != 3:
            raise ValueError("cells must be (NC, 3)")
        self._build_edges()
        self.geom = CellGeometry(self)
        if np.any(self.geom.det <= 0):
            raise ValueError("cells must be counterclockwise with positive area")

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def _build_edges(self):
        NC = self.cells.shape[0]
        # directed local edges, edge i opposite vertex i
        starts = self.cells[:, [1, 2, 0]].reshape(-1)
        ends = self.cells[:, [2, 0, 1]].reshape(-1)
        key = np.stack([np.minimum(starts, ends), np.maximum(starts, ends)], axis=1)
        uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        if counts.max() > 2:
            raise ValueError("non-manifold mesh: an edge is shared by more than 2 cells")
        NE = uniq.shape[0]
        cell_idx = np.repeat(np.arange(NC), 3)

        # pick, per global edge, the lowest adjacent cell; its traversal fixes
        # the stored direction (normal then points lower -> higher / outward)
        order = np.lexsort((cell_idx, inv))
        first = np.searchsorted(inv[order], np.arange(NE))
        owner = order[first]
        self.edges = np.stack([starts[owner], ends[owner]], axis=1)
        self.boundary_edges = np.flatnonzero(counts == 1)

        self.cell_edges = inv.reshape(NC, 3)
        same_dir = starts == self.edges[inv, 0]
        self.cell_edge_signs = np.where(same_dir, 1, -1).astype(np.int64).reshape(NC, 3)

        self.boundary_vertex_mask = np.zeros(self.num_vertices, dtype=bool)
        self.boundary_vertex_mask[self.edges[self.boundary_edges].reshape(-1)] = True
        self.boundary_vertices = np.flatnonzero(self.boundary_vertex_mask)

    def edge_normals(self):
        """Unit normals of all global edges, (NE, 2)."""
        t = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        n = np.stack([t[:, 1], -t[:, 0]], axis=-1)
        return n / np.linalg.norm(t, axis=-1)[:, None]

    def edge_lengths(self):
        t = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(t, axis=-1)

    def edge_midpoints(self):
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])


def build_uniform_square_mesh(n, box=(0.0, 1.0, 0.0, 1.0)):
    """Uniform criss-cross grid: n x n squares, each split along one diagonal.

    Parameters
    ----------
    n : int
        Cells per side, n >= 1.  The mesh has 2 n^2 triangles.
    box : tuple (xmin, xmax, ymin, ymax)

    Returns
    -------
    Mesh
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xmin, xmax, ymin, ymax = box
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate domain")
    xs = np.linspace(xmin, xmax, n + 1)
    ys = np.linspace(ymin, ymax, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing='ij')
    vertices = np.stack([X.reshape(-1), Y.reshape(-1)], axis=1)

    idx = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)
    v00 = idx[:-1, :-1].reshape(-1)
    v10 = idx[1:, :-1].reshape(-1)
    v11 = idx[1:, 1:].reshape(-1)
    v01 = idx[:-1, 1:].reshape(-1)
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    cells = np.concatenate([lower, upper], axis=1).reshape(-1, 3)
    return Mesh(vertices, cells)


def refine_uniform(mesh):
    """Red refinement: every triangle is split into 4 similar ones."""
    NV = mesh.num_vertices
    mid = mesh.edge_midpoints()
    vertices = np.concatenate([mesh.vertices, mid], axis=0)
    m = NV + mesh.cell_edges               # (NC, 3) midpoint of edge opposite vertex i
    c = mesh.cells
    cells = np.concatenate([
        np.stack([c[:, 0], m[:, 2], m[:, 1]], axis=1),
        np.stack([c[:, 1], m[:, 0], m[:, 2]], axis=1),
        np.stack([c[:, 2], m[:, 1], m[:, 0]], axis=1),
        np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1),
    ], axis=0)
    return Mesh(vertices, cells)


def perturb_interior_vertices(mesh, magnitude, seed):
    """Randomly displace interior vertices by a fraction of the local mesh size.

    Boundary vertices stay fixed.  Each displacement is at most ``magnitude``
    times the shortest incident edge; if a displacement would flip or nearly
    collapse an incident cell it is halved until all incident areas stay
    above 5% of their original value.  Deterministic for a fixed seed.

    Parameters
    ----------
    mesh : Mesh
    magnitude : float in [0, 0.3)
    seed : int
    """
    if not (0 <= magnitude < 0.3):
        raise ValueError("magnitude must be in [0, 0.3)")
    if magnitude == 0:
        return Mesh(mesh.vertices.copy(), mesh.cells.copy())

    rng = np.random.default_rng(seed)
    NV = mesh.num_vertices
    theta = rng.uniform(0.0, 2.0 * np.pi, NV)
    radius = rng.uniform(0.0, 1.0, NV)

    # shortest incident edge per vertex
    elen = mesh.edge_lengths()
    hloc = np.full(NV, np.inf)
    for k in range(2):
        np.minimum.at(hloc, mesh.edges[:, k], elen)

    cells_of = [[] for _ in range(NV)]
    for ci, tri in enumerate(mesh.cells):
        for v in tri:
            cells_of[v].append(ci)

    def tri_area(pts, tri):
        d1 = pts[tri[1]] - pts[tri[0]]
        d2 = pts[tri[2]] - pts[tri[0]]
        return 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])

    pts = mesh.vertices.copy()
    orig_area = 0.5 * mesh.geom.det
    for v in range(NV):
        if mesh.boundary_vertex_mask[v]:
            continue
        step = magnitude * hloc[v] * radius[v]
        d = np.array([np.cos(theta[v]), np.sin(theta[v])])
        old = pts[v].copy()
        while step > 1e-14 * hloc[v]:
            pts[v] = old + step * d
            if all(tri_area(pts, mesh.cells[ci]) > 0.05 * orig_area[ci]
                   for ci in cells_of[v]):
                break
            step *= 0.5
        else:
            pts[v] = old
    return Mesh(pts, mesh.cells.copy())


def shape_regularity(mesh):
    """max over cells of h_K / rho_K (diameter over inscribed-circle diameter)."""
    g = mesh.geom
    return float((g.h / g.rho).max())


def write_mesh(mesh, path):
    """Plain-text format: 'NV NC' header, NV coordinate lines, NC 1-based
    connectivity lines."""
    with open(path, 'w') as f:
        f.write(f"{mesh.num_vertices} {mesh.num_cells}\n")
        for x, y in mesh.vertices:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.cells + 1:
            f.write(f"{a} {b} {c}\n")


def read_mesh(path):
    with open(path) as f:
        nv, nc = map(int, f.readline().split())
        vertices = np.array([[float(t) for t in f.readline().split()]
                             for _ in range(nv)])
        cells = np.array([[int(t) for t in f.readline().split()]
                          for _ in range(nc)], dtype=np.int64) - 1
    return Mesh(vertices, cells)
