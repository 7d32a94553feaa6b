"""Small test regions shared by the unit and acceptance tests."""
from eulerlat.lattice import Tri, build_g_ring, build_solid, build_with_holes, triangle_region


def _tris(items):
    return [Tri(i, j, kind == "up") for i, j, kind in items]


# Eulerian polyiamonds found by exhaustive growth (7, 9 and 10 triangles)
REGIONS = {
    "hept_a": [(0, 1, "down"), (0, 1, "up"), (0, 2, "up"), (1, 0, "down"), (1, 0, "up"), (1, 1, "up"), (2, 0, "up")],
    "hept_b": [(0, 1, "down"), (1, 0, "down"), (1, 1, "down"), (1, 1, "up"), (2, 0, "down"), (2, 1, "down"), (2, 1, "up")],
    "hept_c": [(0, 0, "down"), (0, 0, "up"), (0, 1, "up"), (1, 0, "down"), (1, 0, "up"), (1, 1, "up"), (2, 0, "up")],
    "non_b": [(0, 2, "down"), (1, 1, "down"), (1, 2, "down"), (1, 2, "up"), (2, 0, "down"), (2, 1, "down"),
              (2, 1, "up"), (2, 2, "down"), (2, 2, "up")],
    "dec_a": [(0, 1, "down"), (0, 2, "down"), (1, 0, "down"), (1, 1, "down"), (1, 1, "up"), (1, 2, "down"),
              (1, 2, "up"), (2, 1, "down"), (2, 2, "down"), (2, 2, "up")],
    "dec_b": [(0, 1, "down"), (0, 1, "up"), (0, 2, "up"), (1, 0, "down"), (1, 0, "up"), (1, 1, "up"), (2, 0, "down"),
              (2, 0, "up"), (2, 1, "up"), (3, 0, "up")],
}

# side-4 triangle minus a few triangles, leaving one interior hole
HOLES = {
    "holey_a": [(0, 0, "down"), (0, 0, "up"), (1, 1, "down")],
    "holey_b": [(0, 1, "down"), (2, 0, "down"), (3, 0, "up")],
    "holey_c": [(0, 2, "down"), (0, 3, "up"), (1, 1, "up")],
}


def k3():
    return build_solid([Tri(0, 0, True)])


def solid_graphs() -> dict:
    out = {
        "k3": k3(),
        "tri2": build_solid(triangle_region(2)),
        "g_ring2": build_g_ring(2),
        "tri3": build_solid(triangle_region(3)),
        "g_ring3": build_g_ring(3),
    }
    for name, items in REGIONS.items():
        out[name] = build_solid(_tris(items))
    return out


def holey_graphs() -> dict:
    base = set(triangle_region(4))
    return {name: build_with_holes(base - set(_tris(items))) for name, items in HOLES.items()}
