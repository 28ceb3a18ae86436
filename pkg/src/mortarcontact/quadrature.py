"""Quadrature rules used by the element and interface integrators."""
from __future__ import annotations

import numpy as np

# 7-point degree-5 rule on the reference triangle (barycentric coordinates and
# weights normalized to sum to 1; multiply by the physical triangle area).
_TRI7_L1 = (6.0 - np.sqrt(15.0)) / 21.0
_TRI7_L2 = (6.0 + np.sqrt(15.0)) / 21.0
_TRI7_W1 = (155.0 - np.sqrt(15.0)) / 1200.0
_TRI7_W2 = (155.0 + np.sqrt(15.0)) / 1200.0

TRI7_BARY = np.array(
    [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [1.0 - 2.0 * _TRI7_L1, _TRI7_L1, _TRI7_L1],
        [_TRI7_L1, 1.0 - 2.0 * _TRI7_L1, _TRI7_L1],
        [_TRI7_L1, _TRI7_L1, 1.0 - 2.0 * _TRI7_L1],
        [1.0 - 2.0 * _TRI7_L2, _TRI7_L2, _TRI7_L2],
        [_TRI7_L2, 1.0 - 2.0 * _TRI7_L2, _TRI7_L2],
        [_TRI7_L2, _TRI7_L2, 1.0 - 2.0 * _TRI7_L2],
    ]
)
TRI7_WEIGHTS = np.array([9.0 / 40.0, _TRI7_W1, _TRI7_W1, _TRI7_W1, _TRI7_W2, _TRI7_W2, _TRI7_W2])


def gauss_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


def gauss_hex(n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on the reference hexahedron [-1,1]^3.

    Returns (points (n^3, 3), weights (n^3,)).
    """
    x, w = gauss_1d(n)
    pts = np.array([(a, b, c) for c in x for b in x for a in x])
    wts = np.array([wa * wb * wc for wc in w for wb in w for wa in w])
    return pts, wts


def gauss_quad(n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on the reference quadrilateral [-1,1]^2."""
    x, w = gauss_1d(n)
    pts = np.array([(a, b) for b in x for a in x])
    wts = np.array([wa * wb for wb in w for wa in w])
    return pts, wts


def triangle_points(verts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Degree-5 rule on a physical triangle given as (3, d) vertex array.

    Weights carry the triangle measure. Works for 2D vertices (shoelace area);
    callers supply planar coordinates.
    """
    verts = np.asarray(verts, dtype=float)
    area = 0.5 * abs(
        (verts[1, 0] - verts[0, 0]) * (verts[2, 1] - verts[0, 1])
        - (verts[2, 0] - verts[0, 0]) * (verts[1, 1] - verts[0, 1])
    )
    pts = TRI7_BARY @ verts
    return pts, TRI7_WEIGHTS * area
