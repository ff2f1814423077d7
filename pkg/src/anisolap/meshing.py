"""Triangulated planar domains with piecewise-linear nodal fields.

Domains are fixed polygons: structured grids for squares/rectangles (each
grid cell split along its (i,j)->(i+1,j+1) diagonal) and a graded polar mesh
for the disk whose boundary is an inscribed regular polygon.  When a power
weight is active the origin sits at a mesh vertex (square corner, disk
center), so barycenter quadrature never evaluates the weight at the
singularity.

Quadrature is one-point-per-triangle at the barycenter: gradients of P1
fields are element-constant, so the energy integrand is exact in the
gradient and the weight is sampled strictly inside each element.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .norms import FluxParams
from .spaces import WeightSpec


@dataclass(frozen=True)
class Mesh:
    """A conforming triangulation with precomputed P1 gradient coefficients."""

    domain: str
    resolution: int
    vertices: np.ndarray      # (V, 2)
    triangles: np.ndarray     # (T, 3) vertex indices, positively oriented
    boundary: np.ndarray      # (V,) bool
    areas: np.ndarray = field(init=False)
    barycenters: np.ndarray = field(init=False)
    grad_x: np.ndarray = field(init=False)  # (T, 3): d(grad_x u)/du at local verts
    grad_y: np.ndarray = field(init=False)

    def __post_init__(self):
        p0 = self.vertices[self.triangles[:, 0]]
        p1 = self.vertices[self.triangles[:, 1]]
        p2 = self.vertices[self.triangles[:, 2]]
        det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - \
              (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
        if np.any(det <= 0.0):
            raise ValueError("triangulation contains a non-positively oriented element")
        object.__setattr__(self, "areas", 0.5 * det)
        object.__setattr__(self, "barycenters", (p0 + p1 + p2) / 3.0)
        gx = np.column_stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]]) / det[:, None]
        gy = np.column_stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]]) / det[:, None]
        object.__setattr__(self, "grad_x", gx)
        object.__setattr__(self, "grad_y", gy)
        for arr in ("vertices", "triangles", "boundary", "areas", "barycenters", "grad_x", "grad_y"):
            getattr(self, arr).setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def total_area(self) -> float:
        return float(np.sum(self.areas))

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary

    def gradients(self, values: np.ndarray) -> np.ndarray:
        """Element-constant gradients of the P1 field, shape (T, 2)."""
        v = values[self.triangles]
        return np.column_stack([np.sum(self.grad_x * v, axis=1),
                                np.sum(self.grad_y * v, axis=1)])

    def barycenter_values(self, values: np.ndarray) -> np.ndarray:
        return np.mean(values[self.triangles], axis=1)

    def neighbor_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Directed-edge arrays (rows, cols) plus vertex degrees (cached)."""
        if not hasattr(self, "_neighbors"):
            t = self.triangles
            pairs = np.vstack([t[:, [0, 1]], t[:, [1, 0]], t[:, [0, 2]],
                               t[:, [2, 0]], t[:, [1, 2]], t[:, [2, 1]]])
            pairs = np.unique(pairs, axis=0)
            deg = np.bincount(pairs[:, 0], minlength=self.num_vertices)
            object.__setattr__(self, "_neighbors", (pairs[:, 0], pairs[:, 1], deg))
        return self._neighbors


def _grid_mesh(nx: int, ny: int, a: float, b: float, domain: str, resolution: int) -> Mesh:
    xs = np.linspace(0.0, a, nx + 1)
    ys = np.linspace(0.0, b, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    bdry = np.zeros(len(verts), dtype=bool)
    for i in range(nx + 1):
        for j in range(ny + 1):
            if i in (0, nx) or j in (0, ny):
                bdry[vid(i, j)] = True
    return Mesh(domain, resolution, verts, np.array(tris, dtype=int), bdry)


def _ring_counts(n: int) -> list[int]:
    return [8 * j for j in range(1, n + 1)]


def _disk_mesh(n: int) -> Mesh:
    """Graded polar mesh: ring j (radius j/n) carries 8j vertices.

    The boundary is the inscribed regular 8n-gon; annuli between rings with
    different vertex counts are triangulated by an angular two-pointer merge.
    """
    counts = _ring_counts(n)
    verts = [np.zeros((1, 2))]
    ring_start = []
    offset = 1
    for j, m in enumerate(counts, start=1):
        theta = 2.0 * np.pi * np.arange(m) / m
        r = j / n
        verts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        ring_start.append(offset)
        offset += m
    vertices = np.vstack(verts)

    tris = []
    # center fan
    m0 = counts[0]
    for k in range(m0):
        tris.append((0, ring_start[0] + k, ring_start[0] + (k + 1) % m0))
    # annuli
    for j in range(1, n):
        a, b = counts[j - 1], counts[j]
        sa, sb = ring_start[j - 1], ring_start[j]
        i = k = 0
        while i < a or k < b:
            ang_a = 2.0 * np.pi * (i + 1) / a
            ang_b = 2.0 * np.pi * (k + 1) / b
            if k >= b or (i < a and ang_a <= ang_b):
                tris.append((sa + i % a, sa + (i + 1) % a, sb + k % b))
                i += 1
            else:
                tris.append((sa + i % a, sb + (k + 1) % b, sb + k % b))
                k += 1
    tri_arr = np.array(tris, dtype=int)
    # enforce positive orientation element-wise
    p0, p1, p2 = (vertices[tri_arr[:, i]] for i in range(3))
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - \
          (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    flip = det < 0
    tri_arr[flip] = tri_arr[flip][:, [0, 2, 1]]

    bdry = np.zeros(len(vertices), dtype=bool)
    bdry[ring_start[-1]:] = True
    return Mesh("disk", n, vertices, tri_arr, bdry)


def build_mesh(domain: str, resolution: int, a: float = 1.0, b: float = 1.0) -> Mesh:
    """Build a mesh; ``domain`` is one of ``square``, ``rect``, ``disk``."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if domain == "square":
        return _grid_mesh(resolution, resolution, 1.0, 1.0, "square", resolution)
    if domain == "rect":
        return _grid_mesh(resolution, resolution, a, b, "rect", resolution)
    if domain == "disk":
        return _disk_mesh(resolution)
    raise ValueError(f"unknown domain {domain!r}")


def mesh_from_tag(tag: str) -> Mesh:
    """Parse mesh config tags: square:<n>, rect:<a>:<b>:<n>, disk:<n>."""
    parts = tag.strip().split(":")
    if parts[0] == "square" and len(parts) == 2:
        return build_mesh("square", int(parts[1]))
    if parts[0] == "rect" and len(parts) == 4:
        return build_mesh("rect", int(parts[3]), float(parts[1]), float(parts[2]))
    if parts[0] == "disk" and len(parts) == 2:
        return build_mesh("disk", int(parts[1]))
    raise ValueError(f"unrecognized mesh tag {tag!r}")


@dataclass
class Field:
    """Nodal values of a P1 field on a mesh."""

    mesh: Mesh
    values: np.ndarray
    zero_boundary: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.num_vertices,):
            raise ValueError("nodal value array does not match the mesh")
        if self.zero_boundary and np.any(self.values[self.mesh.boundary] != 0.0):
            raise ValueError("zero-boundary field has nonzero boundary values")

    @staticmethod
    def zeros(mesh: Mesh) -> "Field":
        return Field(mesh, np.zeros(mesh.num_vertices))

    @staticmethod
    def interpolate(mesh: Mesh, fn, zero_boundary: bool = False) -> "Field":
        """Nodal interpolant of fn(x, y); optionally clamp the boundary to zero."""
        vals = np.asarray(fn(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
        vals = np.broadcast_to(vals, (mesh.num_vertices,)).copy()
        if zero_boundary:
            vals[mesh.boundary] = 0.0
        return Field(mesh, vals, zero_boundary=zero_boundary)

    def copy_with(self, values: np.ndarray) -> "Field":
        return Field(self.mesh, values, zero_boundary=self.zero_boundary)

    def to_csv(self) -> str:
        lines = ["vertex_id,x,y,value"]
        for i, ((x, y), v) in enumerate(zip(self.mesh.vertices, self.values)):
            lines.append(f"{i},{x!r},{y!r},{v!r}")
        return "\n".join(lines) + "\n"


def jacobi_smooth(mesh: Mesh, values: np.ndarray, passes: int = 2) -> np.ndarray:
    """Replace each nodal value by the mean of its neighbors, keeping the
    boundary pinned at zero.  Used to turn raw noise into informative test
    fields with moderate gradients."""
    v = np.asarray(values, dtype=float).copy()
    rows, cols, deg = mesh.neighbor_arrays()
    for _ in range(passes):
        v = np.bincount(rows, weights=v[cols], minlength=mesh.num_vertices) / deg
        v[mesh.boundary] = 0.0
    return v


def element_gradient(fld: Field, index: int) -> np.ndarray:
    """Constant gradient of the linear interpolant on one triangle."""
    return fld.mesh.gradients(fld.values)[index]


def weighted_energy(fld: Field, params: FluxParams, weight: WeightSpec) -> float:
    """sum_T area * w(barycenter) * F(grad u|_T)^p  (defines ||u||^p)."""
    mesh = fld.mesh
    g = mesh.gradients(fld.values)
    w = weight.evaluate(mesh.barycenters)
    fvals = params.norm.evaluate(g)
    return float(np.sum(mesh.areas * w * fvals ** params.p))


def weighted_load(fld: Field, data, transform=None) -> float:
    """sum_T area * data(barycenter) * g(ubar_T) for a pointwise transform g.

    ``data`` is a callable of (x, y) arrays, an array of per-triangle values,
    or a constant; ``transform`` defaults to the identity.
    """
    mesh = fld.mesh
    ubar = mesh.barycenter_values(fld.values)
    d = _data_values(mesh, data)
    t = ubar if transform is None else transform(ubar)
    return float(np.sum(mesh.areas * d * t))


def _data_values(mesh: Mesh, data) -> np.ndarray:
    if callable(data):
        out = np.asarray(data(mesh.barycenters[:, 0], mesh.barycenters[:, 1]), dtype=float)
        return np.broadcast_to(out, (mesh.num_triangles,))
    out = np.asarray(data, dtype=float)
    if out.ndim == 0:
        return np.full(mesh.num_triangles, float(out))
    if out.shape != (mesh.num_triangles,):
        raise ValueError("per-triangle data array does not match the mesh")
    return out
