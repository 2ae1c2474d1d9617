"""Triangular meshes over rectangular domains.

Provides a structured rectangle mesher with an optional padding collar (used
to push boundary effects away from the region of interest), a Delaunay
constructor for scattered vertices, point location with barycentric weights,
and a plain-text file format.

Vertex layout for structured meshes is row-major: index = j * nx + i with i
running along x.  Each grid cell is split into two counter-clockwise
triangles along the cell diagonal from its lower-left corner.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, MeshFormatError, OutOfDomainError

logger = logging.getLogger(__name__)

Extent = tuple[float, float, float, float]  # (xmin, xmax, ymin, ymax)

_BARY_TOL = 1e-9


@dataclass(frozen=True)
class PointLocation:
    """Result of locating a point: containing triangle and barycentric weights."""

    triangle: int
    vertices: np.ndarray  # (3,) vertex indices
    weights: np.ndarray   # (3,) barycentric coordinates, >= 0, sum to 1


@dataclass(frozen=True)
class _GridInfo:
    """Structured-mesh metadata enabling O(1) point location."""

    nx: int
    ny: int
    x0: float
    y0: float
    dx: float
    dy: float


@dataclass
class Mesh:
    """Conforming triangulation with boundary flags.

    Attributes:
        vertices: (N, 2) float64 vertex coordinates.
        triangles: (M, 3) int64 vertex indices, counter-clockwise.
        boundary: (N,) bool, True for vertices on the mesh boundary.
        extent: bounding rectangle of the full mesh, if rectangular.
        inner_extent: the unpadded region of interest, if the mesh was built
            with a padding collar.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    extent: Optional[Extent] = None
    inner_extent: Optional[Extent] = None
    _grid: Optional[_GridInfo] = field(default=None, repr=False)
    _tri_cache: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def signed_areas(self) -> np.ndarray:
        """Signed area of every triangle (positive = counter-clockwise)."""
        p = self.vertices
        t = self.triangles
        d1 = p[t[:, 1]] - p[t[:, 0]]
        d2 = p[t[:, 2]] - p[t[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def validate(self) -> None:
        """Check structural invariants; raises InvalidInputError on failure.

        Verifies index ranges, positive triangle orientation, edge conformity
        (each edge shared by at most two triangles) and that every vertex
        incident to a once-used edge is flagged as boundary.
        """
        t = self.triangles
        if t.size and (t.min() < 0 or t.max() >= self.num_vertices):
            raise InvalidInputError("triangle refers to a vertex out of range")
        areas = self.signed_areas()
        if np.any(areas <= 0.0):
            bad = int(np.argmax(areas <= 0.0))
            raise InvalidInputError(
                f"triangle {bad} is degenerate or clockwise (signed area {areas[bad]:g})"
            )
        edge_use: dict[tuple[int, int], int] = {}
        for tri in t:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (int(min(a, b)), int(max(a, b)))
                edge_use[key] = edge_use.get(key, 0) + 1
        for (a, b), count in edge_use.items():
            if count > 2:
                raise InvalidInputError(f"edge ({a}, {b}) shared by {count} triangles")
            if count == 1 and not (self.boundary[a] and self.boundary[b]):
                raise InvalidInputError(
                    f"boundary edge ({a}, {b}) has a vertex not flagged as boundary"
                )

    # ------------------------------------------------------------------
    # point location
    # ------------------------------------------------------------------

    def _bary_setup(self):
        if self._tri_cache is None:
            p = self.vertices
            t = self.triangles
            p0 = p[t[:, 0]]
            T = np.stack(
                [p[t[:, 1]] - p0, p[t[:, 2]] - p0], axis=2
            )  # (M, 2, 2), columns are edge vectors
            det = T[:, 0, 0] * T[:, 1, 1] - T[:, 0, 1] * T[:, 1, 0]
            inv = np.empty_like(T)
            inv[:, 0, 0] = T[:, 1, 1] / det
            inv[:, 0, 1] = -T[:, 0, 1] / det
            inv[:, 1, 0] = -T[:, 1, 0] / det
            inv[:, 1, 1] = T[:, 0, 0] / det
            object.__setattr__(self, "_tri_cache", (p0, inv))
        return self._tri_cache

    def _bary_in_triangle(self, tri: int, point: np.ndarray) -> np.ndarray:
        p = self.vertices
        t = self.triangles[tri]
        p0, p1, p2 = p[t[0]], p[t[1]], p[t[2]]
        T = np.column_stack([p1 - p0, p2 - p0])
        ab = np.linalg.solve(T, point - p0)
        return np.array([1.0 - ab[0] - ab[1], ab[0], ab[1]])

    def locate(self, point: Sequence[float]) -> PointLocation:
        """Locate a single point; raises OutOfDomainError outside the hull."""
        pt = np.asarray(point, dtype=np.float64)
        if pt.shape != (2,):
            raise InvalidInputError("point must be a pair (x, y)")
        if self._grid is not None:
            tri = self._grid_triangle(pt)
            w = self._bary_in_triangle(tri, pt)
        else:
            tri, w = self._scan_triangle(pt)
        if w.min() < -_BARY_TOL:
            raise OutOfDomainError(f"point {tuple(pt)} lies outside the mesh")
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        return PointLocation(triangle=tri, vertices=self.triangles[tri].copy(), weights=w)

    def _grid_triangle(self, pt: np.ndarray) -> int:
        g = self._grid
        assert g is not None
        xmin, xmax, ymin, ymax = self.extent
        tol = _BARY_TOL * max(xmax - xmin, ymax - ymin)
        if not (xmin - tol <= pt[0] <= xmax + tol and ymin - tol <= pt[1] <= ymax + tol):
            raise OutOfDomainError(f"point {tuple(pt)} lies outside the mesh")
        ix = int(np.clip((pt[0] - g.x0) // g.dx, 0, g.nx - 2))
        iy = int(np.clip((pt[1] - g.y0) // g.dy, 0, g.ny - 2))
        u = (pt[0] - g.x0) / g.dx - ix
        v = (pt[1] - g.y0) / g.dy - iy
        cell = 2 * (iy * (g.nx - 1) + ix)
        # lower-right triangle covers u >= v, upper-left the rest
        return cell if u >= v else cell + 1

    def _scan_triangle(self, pt: np.ndarray) -> tuple[int, np.ndarray]:
        p0, inv = self._bary_setup()
        d = pt[None, :] - p0
        ab = np.einsum("mij,mj->mi", inv, d)
        w = np.column_stack([1.0 - ab[:, 0] - ab[:, 1], ab])
        inside = w.min(axis=1) >= -_BARY_TOL
        if not inside.any():
            raise OutOfDomainError(f"point {tuple(pt)} lies outside the mesh")
        tri = int(np.argmax(inside))
        return tri, w[tri]

    def locate_many(self, points: np.ndarray) -> list[PointLocation]:
        """Locate each row of an (m, 2) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidInputError("points must be an (m, 2) array")
        return [self.locate(p) for p in pts]

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    def inner_mask(self) -> np.ndarray:
        """Boolean mask of vertices inside the unpadded region of interest."""
        if self.inner_extent is None:
            return np.ones(self.num_vertices, dtype=bool)
        xmin, xmax, ymin, ymax = self.inner_extent
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        tol = _BARY_TOL * max(xmax - xmin, ymax - ymin)
        return (
            (x >= xmin - tol) & (x <= xmax + tol) & (y >= ymin - tol) & (y <= ymax + tol)
        )

    def center_vertex(self) -> int:
        """Index of the vertex nearest the center of the region of interest."""
        ext = self.inner_extent or self.extent
        if ext is not None:
            cx, cy = 0.5 * (ext[0] + ext[1]), 0.5 * (ext[2] + ext[3])
        else:
            cx, cy = self.vertices.mean(axis=0)
        d2 = (self.vertices[:, 0] - cx) ** 2 + (self.vertices[:, 1] - cy) ** 2
        return int(np.argmin(d2))

    def lattice_spacing(self) -> float:
        """Typical vertex spacing: grid step if structured, else median edge length."""
        if self._grid is not None:
            return float(min(self._grid.dx, self._grid.dy))
        t = self.triangles
        p = self.vertices
        e = np.concatenate(
            [p[t[:, 1]] - p[t[:, 0]], p[t[:, 2]] - p[t[:, 1]], p[t[:, 0]] - p[t[:, 2]]]
        )
        return float(np.median(np.hypot(e[:, 0], e[:, 1])))

    # ------------------------------------------------------------------
    # file format
    # ------------------------------------------------------------------

    def save(self, path) -> None:
        """Write the mesh as plain text; coordinates keep full precision."""
        from .util import atomic_write, fmt

        with atomic_write(path) as fh:
            fh.write(f"# mesh vertices={self.num_vertices} triangles={self.num_triangles}\n")
            if self.extent is not None:
                fh.write("# extent " + " ".join(fmt(v) for v in self.extent) + "\n")
            if self.inner_extent is not None:
                fh.write(
                    "# inner_extent " + " ".join(fmt(v) for v in self.inner_extent) + "\n"
                )
            fh.write("# v index x y boundary\n")
            for i, (x, y) in enumerate(self.vertices):
                fh.write(f"v {i} {fmt(x)} {fmt(y)} {int(self.boundary[i])}\n")
            fh.write("# t v0 v1 v2\n")
            for a, b, c in self.triangles:
                fh.write(f"t {a} {b} {c}\n")

    @classmethod
    def load(cls, path) -> "Mesh":
        """Read a mesh written by :meth:`save`."""
        nv = nt = None
        extent = inner = None
        verts: list[tuple[float, float]] = []
        flags: list[int] = []
        tris: list[tuple[int, int, int]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                parts = line.split()
                try:
                    if line.startswith("# mesh"):
                        kv = dict(p.split("=") for p in parts[2:])
                        nv, nt = int(kv["vertices"]), int(kv["triangles"])
                    elif line.startswith("# extent"):
                        extent = tuple(float(v) for v in parts[2:6])
                    elif line.startswith("# inner_extent"):
                        inner = tuple(float(v) for v in parts[2:6])
                    elif parts[0] == "v":
                        idx = int(parts[1])
                        if idx != len(verts):
                            raise ValueError("vertex indices must be consecutive")
                        verts.append((float(parts[2]), float(parts[3])))
                        flags.append(int(parts[4]))
                    elif parts[0] == "t":
                        tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
                    elif parts[0].startswith("#"):
                        continue
                    else:
                        raise ValueError(f"unrecognized record {parts[0]!r}")
                except (ValueError, KeyError, IndexError) as exc:
                    raise MeshFormatError(f"{path}: line {lineno}: {exc}") from exc
        if nv is None or nt is None:
            raise MeshFormatError(f"{path}: missing header line with counts")
        if nv != len(verts) or nt != len(tris):
            raise MeshFormatError(
                f"{path}: header announces {nv} vertices / {nt} triangles, "
                f"found {len(verts)} / {len(tris)}"
            )
        mesh = cls(
            vertices=np.asarray(verts, dtype=np.float64),
            triangles=np.asarray(tris, dtype=np.int64),
            boundary=np.asarray(flags, dtype=bool),
            extent=extent,
            inner_extent=inner,
        )
        try:
            mesh.validate()
        except InvalidInputError as exc:
            raise MeshFormatError(f"{path}: {exc}") from None
        return mesh


def build_regular_mesh(
    nx: int,
    ny: int,
    extent: Extent,
    padding: float = 0.0,
) -> Mesh:
    """Structured triangulation of a rectangle with an optional padding collar.

    Args:
        nx, ny: number of vertices along x and y inside the rectangle.
        extent: (xmin, xmax, ymin, ymax) of the region of interest.
        padding: width of the collar appended on every side, in the same
            units as the extent; it is rounded up to whole grid cells so the
            interior vertex coordinates are unchanged.

    Returns:
        Mesh with ``inner_extent`` set to the given rectangle and boundary
        flags on the outer rim of the padded mesh.
    """
    if not (isinstance(nx, (int, np.integer)) and isinstance(ny, (int, np.integer))):
        raise InvalidInputError("nx and ny must be integers")
    if nx < 2 or ny < 2:
        raise InvalidInputError(f"nx and ny must be at least 2, got {nx} x {ny}")
    xmin, xmax, ymin, ymax = (float(v) for v in extent)
    if not np.isfinite([xmin, xmax, ymin, ymax]).all():
        raise InvalidInputError("extent must be finite")
    if xmax <= xmin or ymax <= ymin:
        raise InvalidInputError(f"extent {extent} has no area")
    if not np.isfinite(padding) or padding < 0.0:
        raise InvalidInputError(f"padding must be nonnegative, got {padding}")

    dx = (xmax - xmin) / (nx - 1)
    dy = (ymax - ymin) / (ny - 1)
    px = int(np.ceil(padding / dx - 1e-12)) if padding > 0 else 0
    py = int(np.ceil(padding / dy - 1e-12)) if padding > 0 else 0
    Nx, Ny = nx + 2 * px, ny + 2 * py

    xs = xmin + (np.arange(Nx) - px) * dx
    ys = ymin + (np.arange(Ny) - py) * dy
    X, Y = np.meshgrid(xs, ys)  # row-major: vertex (i, j) at index j * Nx + i
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(Nx - 1), np.arange(Ny - 1), indexing="xy")
    v00 = (j * Nx + i).ravel()
    v10 = v00 + 1
    v01 = v00 + Nx
    v11 = v01 + 1
    # two CCW triangles per cell, diagonal from the lower-left corner;
    # ordering (lower-right, upper-left) matches _grid_triangle
    tris = np.empty((2 * v00.size, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])

    ii, jj = np.meshgrid(np.arange(Nx), np.arange(Ny))
    boundary = ((ii == 0) | (ii == Nx - 1) | (jj == 0) | (jj == Ny - 1)).ravel()

    full_extent = (float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1]))
    mesh = Mesh(
        vertices=vertices,
        triangles=tris,
        boundary=boundary,
        extent=full_extent,
        inner_extent=(xmin, xmax, ymin, ymax) if padding > 0 else None,
        _grid=_GridInfo(nx=Nx, ny=Ny, x0=float(xs[0]), y0=float(ys[0]), dx=dx, dy=dy),
    )
    logger.info(
        "built %d x %d mesh (%d vertices, %d triangles, padding %d x %d cells)",
        Nx, Ny, mesh.num_vertices, mesh.num_triangles, px, py,
    )
    return mesh


def build_mesh_from_points(points: np.ndarray) -> Mesh:
    """Delaunay triangulation of scattered vertices.

    Triangle orientation is normalized to counter-clockwise and convex-hull
    vertices are flagged as boundary.
    """
    from scipy.spatial import Delaunay, QhullError

    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise InvalidInputError("need an (m, 2) array with at least 3 points")
    try:
        dt = Delaunay(pts)
    except QhullError as exc:
        raise InvalidInputError(f"triangulation failed: {exc}") from exc
    tris = dt.simplices.astype(np.int64)
    d1 = pts[tris[:, 1]] - pts[tris[:, 0]]
    d2 = pts[tris[:, 2]] - pts[tris[:, 0]]
    flip = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    boundary = np.zeros(pts.shape[0], dtype=bool)
    boundary[np.unique(dt.convex_hull)] = True
    mesh = Mesh(vertices=pts, triangles=tris, boundary=boundary)
    mesh.validate()
    return mesh
