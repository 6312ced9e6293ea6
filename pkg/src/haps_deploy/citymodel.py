"""Triangle-mesh city geometry, BVH acceleration, and LOS/NLOS queries.

Meshes live in a local ENU frame (x=east, y=north, z=up, meters) anchored
at a declared geodetic origin. Occlusion queries test the open segment
between two points, shrunk by a small endpoint offset so a receiver sitting
on a surface does not intersect it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import geodesy
from .geodesy import EcefPosition, GeodeticPosition
from .kernels import occluded_batch

SEGMENT_ENDPOINT_OFFSET = 1e-3  # meters shaved off both segment ends
SOURCE_CLIP_RANGE = 50_000.0  # meters; buildings only occlude near the receiver
MIN_TRIANGLE_AREA = 1e-9  # m^2
_LEAF_SIZE = 4


class LinkState(enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


class MeshError(ValueError):
    """Raised for unparseable or geometrically invalid mesh input."""


@dataclass
class TriangleMesh:
    """Indexed triangle soup in mesh-local ENU meters."""

    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64, indices into vertices
    anchor: GeodeticPosition

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (V, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (T, 3) array")
        self._validate()

    def _validate(self):
        n_vertices = len(self.vertices)
        if self.triangles.size:
            bad = np.nonzero(
                (self.triangles < 0) | (self.triangles >= n_vertices)
            )[0]
            if bad.size:
                face = int(bad[0])
                raise MeshError(
                    f"face {face + 1} references vertex index "
                    f"{int(self.triangles[face].max()) + 1} outside 1..{n_vertices}"
                )
            a = self.vertices[self.triangles[:, 0]]
            b = self.vertices[self.triangles[:, 1]]
            c = self.vertices[self.triangles[:, 2]]
            areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
            degenerate = int(np.count_nonzero(areas <= MIN_TRIANGLE_AREA))
            if degenerate:
                raise MeshError(
                    f"mesh contains {degenerate} degenerate triangle(s) "
                    f"with area <= {MIN_TRIANGLE_AREA} m^2"
                )

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)


def load_mesh(path, anchor: GeodeticPosition) -> TriangleMesh:
    """Parse the OBJ subset (v/f records, triangular faces, 1-based indices)."""
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            record = fields[0]
            if record == "v":
                if len(fields) != 4:
                    raise MeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(v) for v in fields[1:]])
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: bad vertex coordinate: {exc}") from exc
            elif record == "f":
                if len(fields) != 4:
                    raise MeshError(
                        f"{path}:{lineno}: face has {len(fields) - 1} vertices; "
                        "only triangles are supported"
                    )
                try:
                    idx = [int(v) for v in fields[1:]]
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: bad face index: {exc}") from exc
                if any(i < 1 for i in idx):
                    raise MeshError(f"{path}:{lineno}: face indices must be >= 1")
                faces.append([i - 1 for i in idx])
            else:
                raise MeshError(f"{path}:{lineno}: unsupported record {record!r}")
    verts = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if tris.size and tris.max() >= len(verts):
        face = int(np.nonzero(tris.max(axis=1) >= len(verts))[0][0])
        raise MeshError(
            f"{path}: face {face + 1} references vertex "
            f"{int(tris[face].max()) + 1} but only {len(verts)} vertices exist"
        )
    return TriangleMesh(verts, tris, anchor)


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Write a mesh back out in the same OBJ subset."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {int(t[0]) + 1} {int(t[1]) + 1} {int(t[2]) + 1}\n")


@dataclass
class SpatialIndex:
    """Flat-array BVH over mesh triangles.

    Leaf nodes have left == -1 and reference [start, start+count) in the
    leaf-ordered triangle vertex arrays.
    """

    bmin: np.ndarray  # (N, 3)
    bmax: np.ndarray  # (N, 3)
    left: np.ndarray  # (N,) int32, -1 for leaves
    right: np.ndarray  # (N,) int32
    start: np.ndarray  # (N,) int32
    count: np.ndarray  # (N,) int32
    tri_v0: np.ndarray  # (T, 3) leaf-ordered
    tri_v1: np.ndarray
    tri_v2: np.ndarray
    order: np.ndarray  # (T,) original triangle index per leaf slot

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @property
    def n_triangles(self) -> int:
        return len(self.tri_v0)


def build_index(mesh: TriangleMesh, leaf_size: int = _LEAF_SIZE) -> SpatialIndex:
    """Build a median-split BVH; empty meshes produce an empty index."""
    n = mesh.n_triangles
    if n == 0:
        empty3 = np.zeros((0, 3), dtype=np.float64)
        empty_i = np.zeros(0, dtype=np.int32)
        return SpatialIndex(empty3, empty3.copy(), empty_i, empty_i.copy(),
                            empty_i.copy(), empty_i.copy(), empty3.copy(),
                            empty3.copy(), empty3.copy(), np.zeros(0, dtype=np.int64))

    v0 = mesh.vertices[mesh.triangles[:, 0]]
    v1 = mesh.vertices[mesh.triangles[:, 1]]
    v2 = mesh.vertices[mesh.triangles[:, 2]]
    tri_min = np.minimum(np.minimum(v0, v1), v2)
    tri_max = np.maximum(np.maximum(v0, v1), v2)
    centroids = (v0 + v1 + v2) / 3.0

    order = np.arange(n, dtype=np.int64)
    bmin, bmax, left, right, start, count = [], [], [], [], [], []

    def emit(lo: int, hi: int) -> int:
        node = len(bmin)
        ids = order[lo:hi]
        bmin.append(tri_min[ids].min(axis=0))
        bmax.append(tri_max[ids].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(lo)
        count.append(hi - lo)
        if hi - lo > leaf_size:
            cmin = centroids[ids].min(axis=0)
            cmax = centroids[ids].max(axis=0)
            axis = int(np.argmax(cmax - cmin))
            if cmax[axis] > cmin[axis]:
                mid = lo + (hi - lo) // 2
                key = np.argsort(centroids[ids, axis], kind="stable")
                order[lo:hi] = ids[key]
                left[node] = emit(lo, mid)
                right[node] = emit(mid, hi)
                start[node] = 0
                count[node] = 0
        return node

    emit(0, n)
    return SpatialIndex(
        bmin=np.ascontiguousarray(bmin, dtype=np.float64),
        bmax=np.ascontiguousarray(bmax, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        start=np.asarray(start, dtype=np.int32),
        count=np.asarray(count, dtype=np.int32),
        tri_v0=np.ascontiguousarray(v0[order]),
        tri_v1=np.ascontiguousarray(v1[order]),
        tri_v2=np.ascontiguousarray(v2[order]),
        order=order,
    )


def segments_occluded(index: SpatialIndex, origins: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Any-hit occlusion for a batch of ENU segments; returns a bool array."""
    origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    targets = np.ascontiguousarray(targets, dtype=np.float64).reshape(-1, 3)
    if origins.shape != targets.shape:
        raise ValueError("origins and targets must have matching shapes")
    if index.n_triangles == 0:
        return np.zeros(len(origins), dtype=bool)
    out = np.zeros(len(origins), dtype=np.uint8)
    occluded_batch(
        index.bmin, index.bmax, index.left, index.right, index.start, index.count,
        index.tri_v0, index.tri_v1, index.tri_v2,
        origins, targets, SEGMENT_ENDPOINT_OFFSET, out,
    )
    return out.astype(bool)


def ray_occluded(index: SpatialIndex, origin, target) -> bool:
    """True iff any triangle blocks the open segment between two ENU points."""
    origin = np.asarray(origin, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if np.array_equal(origin, target):
        raise ValueError("origin and target coincide")
    return bool(segments_occluded(index, origin[None, :], target[None, :])[0])


def clip_segments(recv_enu: np.ndarray, src_enu: np.ndarray) -> np.ndarray:
    """Clip far sources to the 50 km sphere around each receiver endpoint."""
    recv_enu = np.asarray(recv_enu, dtype=np.float64)
    src_enu = np.asarray(src_enu, dtype=np.float64)
    vec = src_enu - recv_enu
    dist = np.linalg.norm(vec, axis=-1, keepdims=True)
    scale = np.where(dist > SOURCE_CLIP_RANGE, SOURCE_CLIP_RANGE / dist, 1.0)
    return recv_enu + vec * scale


def classify_link(
    index: SpatialIndex,
    receiver: GeodeticPosition,
    source: EcefPosition,
    anchor: GeodeticPosition,
) -> LinkState:
    """LOS/NLOS state of a receiver-to-source link through the mesh."""
    rot = geodesy.enu_rotation(anchor.lat, anchor.lon)
    anchor_ecef = geodesy.lla_to_ecef(anchor).as_array()
    recv_enu = rot @ (geodesy.lla_to_ecef(receiver).as_array() - anchor_ecef)
    src_enu = rot @ (source.as_array() - anchor_ecef)
    src_enu = clip_segments(recv_enu, src_enu)
    if ray_occluded(index, recv_enu, src_enu):
        return LinkState.NLOS
    return LinkState.LOS


def classify_links_batch(index: SpatialIndex, recv_enu: np.ndarray, src_enu: np.ndarray) -> np.ndarray:
    """Vectorized :func:`classify_link` on pre-converted ENU endpoints.

    Returns a bool array, True where the link is blocked (NLOS).
    """
    clipped = clip_segments(recv_enu, src_enu)
    return segments_occluded(index, recv_enu, clipped)


def brute_force_occluded(mesh: TriangleMesh, origin, target) -> bool:
    """All-triangle reference for :func:`ray_occluded` (no acceleration)."""
    from .kernels.ray_py import segment_hits_any_triangle

    origin = np.asarray(origin, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if mesh.n_triangles == 0:
        return False
    v0 = mesh.vertices[mesh.triangles[:, 0]]
    v1 = mesh.vertices[mesh.triangles[:, 1]]
    v2 = mesh.vertices[mesh.triangles[:, 2]]
    return segment_hits_any_triangle(origin, target, v0, v1, v2, SEGMENT_ENDPOINT_OFFSET)
