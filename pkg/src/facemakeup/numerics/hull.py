"""3D convex hulls (quickhull) with exact-orientation volumes.

Hulls are the workhorse of the color-gamut energy: regions become point
clouds in a 3D color space, and style fitting compares hull volumes before
and after a linear transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateGamut

# Degeneracy guard, scale-invariant: smallest singular value of the centered
# cloud must exceed this fraction of the bounding-box diagonal.
DEGENERACY_RTOL = 1e-9
# Visibility tolerance for quickhull, as a fraction of the cloud spread.
VISIBILITY_RTOL = 1e-10


@dataclass
class Hull3:
    """Convex hull of a 3D point cloud.

    ``faces`` index into ``vertices`` and are oriented outward; ``volume`` is
    the sum of signed tetrahedra of the faces against the vertex centroid.
    """

    vertices: np.ndarray          # (m, 3)
    faces: np.ndarray             # (f, 3) int
    volume: float


class _Face:
    __slots__ = ("verts", "normal", "offset", "outside", "dists", "alive")

    def __init__(self, verts, normal, offset):
        self.verts = verts        # tuple of 3 global point indices
        self.normal = normal
        self.offset = offset
        self.outside = np.empty(0, dtype=np.intp)
        self.dists = np.empty(0)
        self.alive = True


def _plane(points, i, j, k, interior):
    """Outward-oriented face through points i, j, k.

    Returns (verts, normal, offset) with the vertex order flipped if needed
    so the cross-product normal points away from ``interior``.
    """
    a, b, c = points[i], points[j], points[k]
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        return None
    n = n / norm
    off = n.dot(a)
    if n.dot(interior) - off > 0:
        return (i, k, j), -n, -off
    return (i, j, k), n, off


def quickhull3(points) -> Hull3:
    """Convex hull of >= 4 non-coplanar 3D points via quickhull.

    Raises :class:`DegenerateGamut` when the cloud is coincident, collinear
    or coplanar (smallest singular value of the centered point matrix below
    ``DEGENERACY_RTOL`` times the spread).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("expected an (n, 3) point array")
    n_pts = pts.shape[0]
    spread = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))) if n_pts else 0.0
    if n_pts < 4 or spread == 0.0:
        raise DegenerateGamut(f"need >= 4 distinct points, got {n_pts}")
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[-1] <= DEGENERACY_RTOL * spread:
        raise DegenerateGamut(
            f"points are coplanar within tolerance (sv_min={sv[-1]:.3e}, spread={spread:.3e})"
        )

    eps = VISIBILITY_RTOL * spread

    # Initial tetrahedron: farthest axis-extreme pair, then farthest from the
    # line, then farthest from the plane.
    extremes = np.unique(np.concatenate([pts.argmin(axis=0), pts.argmax(axis=0)]))
    best = (-1.0, 0, 0)
    for ii in extremes:
        d = np.linalg.norm(pts[extremes] - pts[ii], axis=1)
        jj = int(d.argmax())
        if d[jj] > best[0]:
            best = (d[jj], int(ii), int(extremes[jj]))
    _, i0, i1 = best
    seg = pts[i1] - pts[i0]
    cross = np.cross(pts - pts[i0], seg)
    i2 = int(np.linalg.norm(cross, axis=1).argmax())
    normal = np.cross(pts[i2] - pts[i0], seg)
    plane_d = (pts - pts[i0]).dot(normal)
    i3 = int(np.abs(plane_d).argmax())
    interior = pts[[i0, i1, i2, i3]].mean(axis=0)

    faces: list[_Face] = []
    edge_map: dict[frozenset, list[int]] = {}

    def add_face(vi, vj, vk):
        pl = _plane(pts, vi, vj, vk, interior)
        if pl is None:
            return None
        verts, normal, offset = pl
        face = _Face(verts, normal, offset)
        fid = len(faces)
        faces.append(face)
        for e in ((vi, vj), (vj, vk), (vk, vi)):
            edge_map.setdefault(frozenset(e), []).append(fid)
        return fid

    def drop_face(fid):
        face = faces[fid]
        face.alive = False
        vi, vj, vk = face.verts
        for e in ((vi, vj), (vj, vk), (vk, vi)):
            edge_map[frozenset(e)].remove(fid)

    for tri in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
        add_face(*tri)

    # Assign every point to the first face it lies strictly outside of.
    unassigned = np.arange(n_pts)
    for face in faces:
        if unassigned.size == 0:
            break
        d = pts[unassigned].dot(face.normal) - face.offset
        outside = d > eps
        face.outside = unassigned[outside]
        face.dists = d[outside]
        unassigned = unassigned[~outside]

    pending = [fid for fid, f in enumerate(faces) if f.outside.size]
    while pending:
        fid = pending.pop()
        face = faces[fid]
        if not face.alive or face.outside.size == 0:
            continue
        apex = int(face.outside[face.dists.argmax()])
        apex_pt = pts[apex]

        # Flood-fill the faces visible from the apex, starting at this one.
        visible = {fid}
        stack = [fid]
        while stack:
            cur = faces[stack.pop()]
            vi, vj, vk = cur.verts
            for e in ((vi, vj), (vj, vk), (vk, vi)):
                for nb in edge_map.get(frozenset(e), ()):
                    if nb in visible or not faces[nb].alive:
                        continue
                    nbf = faces[nb]
                    if apex_pt.dot(nbf.normal) - nbf.offset > eps:
                        visible.add(nb)
                        stack.append(nb)

        horizon = []
        candidates = []
        for vid in visible:
            vf = faces[vid]
            vi, vj, vk = vf.verts
            for e in ((vi, vj), (vj, vk), (vk, vi)):
                others = [g for g in edge_map[frozenset(e)] if g not in visible]
                if others:
                    horizon.append(e)
            candidates.append(vf.outside)
        for vid in visible:
            drop_face(vid)

        candidates = np.concatenate(candidates)
        candidates = candidates[candidates != apex]
        cand_pts = pts[candidates]

        new_ids = []
        for ea, eb in horizon:
            nid = add_face(ea, eb, apex)
            if nid is not None:
                new_ids.append(nid)

        # Re-home orphaned outside points onto whichever new face sees them
        # farthest; points inside every new face are done.
        if candidates.size and new_ids:
            dmat = np.stack(
                [cand_pts.dot(faces[g].normal) - faces[g].offset for g in new_ids]
            )
            owner = dmat.argmax(axis=0)
            dbest = dmat[owner, np.arange(candidates.size)]
            keep = dbest > eps
            for slot, gid in enumerate(new_ids):
                sel = keep & (owner == slot)
                faces[gid].outside = candidates[sel]
                faces[gid].dists = dbest[sel]
                if faces[gid].outside.size:
                    pending.append(gid)

    live = [f for f in faces if f.alive]
    used = sorted({v for f in live for v in f.verts})
    remap = {g: i for i, g in enumerate(used)}
    vertices = pts[used]
    tri = np.array([[remap[v] for v in f.verts] for f in live], dtype=np.intp)

    # Outward vertex order makes every signed tetrahedron against the
    # centroid positive; the plain signed sum is the volume.
    centroid = vertices.mean(axis=0)
    spans = vertices[tri] - centroid
    volume = float(np.linalg.det(spans).sum() / 6.0)
    return Hull3(vertices=vertices, faces=tri, volume=volume)


def hull_union_volume(a: Hull3, b: Hull3) -> float:
    """Volume of the convex hull of the two hulls' concatenated vertices.

    Always >= max(a.volume, b.volume): adding points can only grow a hull.
    """
    return quickhull3(np.vstack([a.vertices, b.vertices])).volume
