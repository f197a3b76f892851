"""Polytopal meshes of the unit square and their geometric quantities.

A mesh is stored as flat numpy arrays (cells are CSR-encoded vertex loops)
so the hot geometry loops can run through the jitted kernels; lightweight
``Vertex`` / ``Face`` / ``Cell`` views are built on demand for inspection.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels

_DEGENERATE_AREA = 1e-14


class MeshError(ValueError):
    """Base class for mesh construction failures."""


class MeshFormatError(MeshError):
    """Malformed mesh file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshTopologyError(MeshError):
    """Inconsistent connectivity (non-manifold face, bad vertex id, ...)."""


class DegenerateCellError(MeshError):
    """Cell with non-positive or vanishing area."""


@dataclass(frozen=True)
class Vertex:
    id: int
    position: np.ndarray


@dataclass(frozen=True)
class Face:
    id: int
    vertex_ids: tuple
    cell_ids: tuple
    measure: float
    barycenter: np.ndarray
    is_boundary: bool


@dataclass(frozen=True)
class Cell:
    id: int
    face_ids: np.ndarray
    vertex_ids: np.ndarray
    measure: float
    center: np.ndarray
    normals: np.ndarray          # outward unit normal per face, aligned with face_ids
    face_distances: np.ndarray   # orthogonal distance center -> face line


@dataclass(frozen=True)
class ValidationReport:
    """Geometric and topological health checks.

    All defects are absolute (the domain is the unit square).
    """

    max_closedness_defect: float    # max_K || sum |sigma| n ||
    max_stokes_defect: float        # max_K max-entry | sum |sigma| n (x_s - x_K)^T - |K| I |
    max_diamond_defect: float       # max_K | sum |sigma| d - 2 |K| |
    min_face_distance: float
    min_face_measure: float
    total_area: float
    euler_characteristic: int       # V - E + C, 1 for a simply-connected planar mesh
    tolerance: float

    @property
    def euler_ok(self):
        return self.euler_characteristic == 1

    @property
    def passed(self):
        return (self.max_closedness_defect <= self.tolerance
                and self.max_stokes_defect <= self.tolerance
                and self.max_diamond_defect <= self.tolerance
                and self.min_face_distance > 0.0
                and self.min_face_measure > 0.0
                and self.euler_ok)


class PolytopalMesh:
    """2-D polytopal mesh with all quantities the HMM scheme needs.

    Array layout
    ------------
    vertex_coords : (V, 2)
    cell_vertex_ptr / cell_vertex_ids : CSR vertex loops, counterclockwise
    cell_face_ids : (nnz,) face id at each (cell, local edge) position;
        shares ``cell_vertex_ptr`` (edge j joins local vertices j, j+1)
    normals, face_dists : (nnz, 2), (nnz,) per-position outward data
    face_vertices, face_cells : (F, 2) with -1 padding in face_cells
    cell_measures, cell_centers, face_measures, face_centers: geometry

    Instances are immutable by convention once built; share them freely.
    """

    def __init__(self, vertex_coords, cell_vertex_ptr, cell_vertex_ids):
        self.vertex_coords = np.ascontiguousarray(vertex_coords, dtype=float)
        self.cell_vertex_ptr = np.ascontiguousarray(cell_vertex_ptr, dtype=np.int64)
        self.cell_vertex_ids = np.ascontiguousarray(cell_vertex_ids, dtype=np.int64)
        self._build_faces()
        self._build_geometry()
        self._views = None

    # -- construction -----------------------------------------------------

    def _build_faces(self):
        ptr, vids = self.cell_vertex_ptr, self.cell_vertex_ids
        n_cells = len(ptr) - 1
        face_of = {}
        face_vertices = []
        face_cells = []
        cell_face_ids = np.empty(len(vids), dtype=np.int64)
        for k in range(n_cells):
            lo, hi = ptr[k], ptr[k + 1]
            m = hi - lo
            if m < 3:
                raise MeshTopologyError(f"cell {k} has fewer than 3 vertices")
            for j in range(m):
                a = int(vids[lo + j])
                b = int(vids[lo + (j + 1) % m])
                if a == b:
                    raise MeshTopologyError(f"cell {k} repeats vertex {a} on an edge")
                key = (a, b) if a < b else (b, a)
                fid = face_of.get(key)
                if fid is None:
                    fid = len(face_vertices)
                    face_of[key] = fid
                    face_vertices.append((a, b))
                    face_cells.append([k])
                else:
                    incident = face_cells[fid]
                    if len(incident) == 2:
                        raise MeshTopologyError(
                            f"face {key} shared by more than two cells")
                    if incident[0] == k:
                        raise MeshTopologyError(
                            f"cell {k} lists face {key} twice")
                    incident.append(k)
                cell_face_ids[lo + j] = fid
        n_faces = len(face_vertices)
        self.cell_face_ids = cell_face_ids
        self.face_vertices = np.array(face_vertices, dtype=np.int64)
        fc = np.full((n_faces, 2), -1, dtype=np.int64)
        for f, incident in enumerate(face_cells):
            fc[f, :len(incident)] = incident
        self.face_cells = fc
        self.face_is_boundary = fc[:, 1] < 0

    def _build_geometry(self):
        coords = self.vertex_coords
        ptr, vids = self.cell_vertex_ptr, self.cell_vertex_ids
        n_cells = len(ptr) - 1
        nnz = len(vids)
        self.cell_measures = np.empty(n_cells)
        self.cell_centers = np.empty((n_cells, 2))
        self.normals = np.empty((nnz, 2))
        self.face_dists = np.empty(nnz)
        _kernels.cell_geometry(coords, ptr, vids, self.cell_measures,
                               self.cell_centers, self.normals, self.face_dists)
        if n_cells and self.cell_measures.min() <= _DEGENERATE_AREA:
            k = int(np.argmin(self.cell_measures))
            raise DegenerateCellError(
                f"cell {k} has area {self.cell_measures[k]:.3e} "
                "(expecting counterclockwise vertex loops with positive area)")
        a = coords[self.face_vertices[:, 0]]
        b = coords[self.face_vertices[:, 1]]
        self.face_measures = np.linalg.norm(b - a, axis=1)
        self.face_centers = 0.5 * (a + b)
        if len(self.face_measures) and self.face_measures.min() <= _DEGENERATE_AREA:
            f = int(np.argmin(self.face_measures))
            raise MeshTopologyError(f"face {f} has zero length")

    # -- sizes -------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertex_coords)

    @property
    def n_faces(self):
        return len(self.face_vertices)

    @property
    def n_cells(self):
        return len(self.cell_vertex_ptr) - 1

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.face_is_boundary)

    @property
    def interior_faces(self):
        return np.flatnonzero(~self.face_is_boundary)

    @property
    def h(self):
        return mesh_size(self)

    # -- per-entity views ---------------------------------------------------

    def vertex(self, i):
        return Vertex(i, self.vertex_coords[i])

    def face(self, f):
        cells = tuple(int(c) for c in self.face_cells[f] if c >= 0)
        return Face(f, tuple(int(v) for v in self.face_vertices[f]), cells,
                    float(self.face_measures[f]), self.face_centers[f],
                    bool(self.face_is_boundary[f]))

    def cell(self, k):
        lo, hi = self.cell_vertex_ptr[k], self.cell_vertex_ptr[k + 1]
        return Cell(k, self.cell_face_ids[lo:hi], self.cell_vertex_ids[lo:hi],
                    float(self.cell_measures[k]), self.cell_centers[k],
                    self.normals[lo:hi], self.face_dists[lo:hi])

    @property
    def vertices(self):
        return [self.vertex(i) for i in range(self.n_vertices)]

    @property
    def faces(self):
        return [self.face(f) for f in range(self.n_faces)]

    @property
    def cells(self):
        return [self.cell(k) for k in range(self.n_cells)]

    # -- derived geometry ---------------------------------------------------

    def diamond_triangles(self):
        """(nnz, 3, 2) corner array of the per-(cell, face) diamonds.

        The diamond of (K, sigma) is the triangle (v1, v2, x_K); for a
        triangle with centroid center the three diamonds tile the cell, so
        these double as sub-cells for quadrature.
        """
        counts = np.diff(self.cell_vertex_ptr)
        a = self.vertex_coords[self.face_vertices[self.cell_face_ids, 0]]
        b = self.vertex_coords[self.face_vertices[self.cell_face_ids, 1]]
        c = np.repeat(self.cell_centers, counts, axis=0)
        return np.stack([a, b, c], axis=1)

    def checksum(self):
        """Hex digest of the defining arrays (for run manifests)."""
        import hashlib

        digest = hashlib.sha256()
        for arr in (self.vertex_coords, self.cell_vertex_ptr, self.cell_vertex_ids):
            digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()


def build_structured_triangular(n):
    """Structured triangulation of the unit square.

    The square is cut into n x n squares, each split along the diagonal from
    its lower-left to its upper-right corner, giving 2 n^2 congruent right
    triangles and mesh size sqrt(2)/n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    n = int(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="xy")
    coords = np.column_stack([gx.ravel(), gy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i = i.ravel()
    j = j.ravel()
    v00 = vid(i, j)
    v10 = vid(i + 1, j)
    v11 = vid(i + 1, j + 1)
    v01 = vid(i, j + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper
    ptr = np.arange(0, 3 * len(tris) + 1, 3, dtype=np.int64)
    return PolytopalMesh(coords, ptr, tris.ravel())


def load_mesh(text):
    """Parse the plain-text mesh format.

    Format: a ``vertices <V>`` header, V lines ``x y``, a ``cells <C>``
    header, then C lines ``k id1 ... idk`` with 0-based counterclockwise
    vertex ids.  Blank lines and ``#`` comments are ignored.
    """
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            tokens.append((lineno, stripped))
    cursor = 0

    def next_line(what):
        nonlocal cursor
        if cursor >= len(tokens):
            last = tokens[-1][0] if tokens else 0
            raise MeshFormatError(f"unexpected end of file, expected {what}", last)
        item = tokens[cursor]
        cursor += 1
        return item

    lineno, header = next_line("'vertices <count>'")
    parts = header.split()
    if len(parts) != 2 or parts[0] != "vertices":
        raise MeshFormatError("expected 'vertices <count>'", lineno)
    try:
        n_vertices = int(parts[1])
    except ValueError:
        raise MeshFormatError(f"bad vertex count {parts[1]!r}", lineno) from None
    coords = np.empty((n_vertices, 2))
    for i in range(n_vertices):
        lineno, line = next_line("vertex coordinates")
        parts = line.split()
        if len(parts) != 2:
            raise MeshFormatError("expected 'x y'", lineno)
        try:
            coords[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshFormatError(f"bad coordinate on {line!r}", lineno) from None

    lineno, header = next_line("'cells <count>'")
    parts = header.split()
    if len(parts) != 2 or parts[0] != "cells":
        raise MeshFormatError("expected 'cells <count>'", lineno)
    try:
        n_cells = int(parts[1])
    except ValueError:
        raise MeshFormatError(f"bad cell count {parts[1]!r}", lineno) from None
    ptr = [0]
    vids = []
    for k in range(n_cells):
        lineno, line = next_line("cell connectivity")
        parts = line.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"bad integer on {line!r}", lineno) from None
        if not nums or len(nums) != nums[0] + 1:
            raise MeshFormatError(
                "expected '<k> id1 ... idk' with k ids", lineno)
        ids = nums[1:]
        if nums[0] < 3:
            raise MeshFormatError(f"cell {k} has fewer than 3 vertices", lineno)
        for v in ids:
            if not 0 <= v < n_vertices:
                raise MeshFormatError(
                    f"cell {k} references nonexistent vertex {v}", lineno)
        vids.extend(ids)
        ptr.append(len(vids))
    if cursor != len(tokens):
        raise MeshFormatError("trailing content after last cell", tokens[cursor][0])
    return PolytopalMesh(coords, np.array(ptr, dtype=np.int64),
                         np.array(vids, dtype=np.int64))


def mesh_to_text(mesh):
    """Serialize a mesh in the format understood by :func:`load_mesh`."""
    lines = [f"vertices {mesh.n_vertices}"]
    for x, y in mesh.vertex_coords:
        lines.append(f"{float(x)!r} {float(y)!r}")
    lines.append(f"cells {mesh.n_cells}")
    ptr, vids = mesh.cell_vertex_ptr, mesh.cell_vertex_ids
    for k in range(mesh.n_cells):
        ids = vids[ptr[k]:ptr[k + 1]]
        lines.append(" ".join([str(len(ids))] + [str(int(v)) for v in ids]))
    return "\n".join(lines) + "\n"


def validate(mesh, tolerance=1e-12):
    """Geometric identity checks; failures are reported, not raised."""
    ptr = mesh.cell_vertex_ptr
    counts = np.diff(ptr)
    smeas = mesh.face_measures[mesh.cell_face_ids]
    weighted = smeas[:, None] * mesh.normals
    owner = np.repeat(np.arange(mesh.n_cells), counts)

    closed = np.zeros((mesh.n_cells, 2))
    np.add.at(closed, owner, weighted)
    closedness = float(np.linalg.norm(closed, axis=1).max()) if mesh.n_cells else 0.0

    xs = mesh.face_centers[mesh.cell_face_ids] - mesh.cell_centers[owner]
    outer = weighted[:, :, None] * xs[:, None, :]
    stokes = np.zeros((mesh.n_cells, 2, 2))
    np.add.at(stokes, owner, outer)
    stokes -= mesh.cell_measures[:, None, None] * np.eye(2)
    stokes_defect = float(np.abs(stokes).max()) if mesh.n_cells else 0.0

    diam = np.zeros(mesh.n_cells)
    np.add.at(diam, owner, smeas * mesh.face_dists)
    diamond_defect = float(np.abs(diam - 2.0 * mesh.cell_measures).max()) \
        if mesh.n_cells else 0.0

    return ValidationReport(
        max_closedness_defect=closedness,
        max_stokes_defect=stokes_defect,
        max_diamond_defect=diamond_defect,
        min_face_distance=float(mesh.face_dists.min()) if len(mesh.face_dists) else 0.0,
        min_face_measure=float(mesh.face_measures.min()) if mesh.n_faces else 0.0,
        total_area=float(mesh.cell_measures.sum()),
        euler_characteristic=mesh.n_vertices - mesh.n_faces + mesh.n_cells,
        tolerance=tolerance,
    )


def mesh_size(mesh):
    """Maximum cell diameter (largest vertex-pair distance within a cell)."""
    ptr, vids = mesh.cell_vertex_ptr, mesh.cell_vertex_ids
    h = 0.0
    for k in range(mesh.n_cells):
        pts = mesh.vertex_coords[vids[ptr[k]:ptr[k + 1]]]
        diff = pts[:, None, :] - pts[None, :, :]
        h = max(h, float(np.sqrt((diff ** 2).sum(-1)).max()))
    return h
