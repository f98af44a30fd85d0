"""Reference meshes and random-sample helpers shared across the test suite."""
import numpy as np

from vertexscale import Geometry, MetricMesh, TriMesh
from vertexscale.triangle import q_values_array, edge_weights

TETRA_FACES = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)]

# 7-vertex triangulation of the torus (Moebius-Kantor complex on K7):
# faces (i, i+1, i+3) and (i, i+3, i+2) mod 7 give a consistent orientation
TORUS7_FACES = [((i) % 7, (i + 1) % 7, (i + 3) % 7) for i in range(7)] + \
               [((i) % 7, (i + 3) % 7, (i + 2) % 7) for i in range(7)]

# icosahedron: apex 0, upper ring 1..5, lower ring 6..10, apex 11
ICOSA_FACES = (
    [(0, 1 + i, 1 + (i + 1) % 5) for i in range(5)]
    + [(1 + i, 6 + i, 1 + (i + 1) % 5) for i in range(5)]
    + [(6 + i, 6 + (i + 1) % 5, 1 + (i + 1) % 5) for i in range(5)]
    + [(11, 6 + (i + 1) % 5, 6 + i) for i in range(5)]
)

CUBE_OBJ = b"""# unit cube, 12 triangles, outward orientation
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3
f 1 3 2
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
"""


def unit_metric(faces, geometry=Geometry.EUCLIDEAN, length=1.0, vertex_count=None):
    if vertex_count is None:
        vertex_count = 1 + max(max(f) for f in faces)
    mesh = TriMesh(vertex_count, faces)
    return MetricMesh(mesh, geometry, {e: length for e in mesh.edges})


def tetra(geometry=Geometry.EUCLIDEAN, length=1.0):
    return unit_metric(TETRA_FACES, geometry, length)


def torus7(geometry=Geometry.EUCLIDEAN, length=1.0):
    return unit_metric(TORUS7_FACES, geometry, length)


def icosa(geometry=Geometry.EUCLIDEAN, length=1.0):
    return unit_metric(ICOSA_FACES, geometry, length)


def _q_scale(geometry, base, u):
    """Sum of |terms| of the degeneracy polynomial, for relative margins."""
    w2 = edge_weights(geometry, base) ** 2
    a = w2 * np.exp(-np.asarray(u, dtype=float))
    scale = (a.sum(axis=-1)) ** 2
    if geometry is Geometry.HYPERBOLIC:
        scale = scale + 4.0 * w2[..., 0] * w2[..., 1] * w2[..., 2]
    return scale


def sample_bases(rng, count):
    """Base triples uniform in (0, 2]^3 subject to the strict triangle inequality."""
    out = np.empty((0, 3))
    while out.shape[0] < count:
        cand = rng.uniform(0.0, 2.0, size=(4 * count, 3))
        cand = cand[np.all(cand > 1e-3, axis=1)]
        ok = (
            (cand[:, 0] + cand[:, 1] > cand[:, 2])
            & (cand[:, 0] + cand[:, 2] > cand[:, 1])
            & (cand[:, 1] + cand[:, 2] > cand[:, 0])
        )
        out = np.vstack([out, cand[ok]])
    return out[:count]


def sample_triangles(rng, count, geometry, kind="any", q_margin=1e-6):
    """Random (base, u) pairs: base in (0,2]^3 with triangle inequality, u in [-3,3]^3.

    kind = "any" | "nondegenerate" | "degenerate". Nondegenerate samples keep a
    relative margin q > q_margin * scale so that strict-sign assertions stay
    meaningful in floating point; degenerate samples have q <= 0.
    """
    bases = np.empty((0, 3))
    us = np.empty((0, 3))
    while bases.shape[0] < count:
        b = sample_bases(rng, 4 * count)
        u = rng.uniform(-3.0, 3.0, size=b.shape)
        if kind != "any":
            q = q_values_array(geometry, b, u)
            if kind == "nondegenerate":
                keep = q > q_margin * _q_scale(geometry, b, u)
            else:
                keep = q <= 0.0
            b, u = b[keep], u[keep]
        bases = np.vstack([bases, b])
        us = np.vstack([us, u])
    return bases[:count], us[:count]
