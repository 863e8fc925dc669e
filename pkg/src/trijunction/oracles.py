"""Independent low-tech checks of the spectral machinery.

Everything here deliberately avoids the closed-form geometry and the
spectral solvers: mean curvature is re-derived from finite differences of
embedded surface points alone, and the linear problems are re-solved with
second-order finite differences on a uniform grid.  Agreement between these
oracles and the production paths is what certifies the latter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .fields import BoundaryTriple, Grid2D, TripleField
from .geometry import CutoffProfile, JunctionFrame, embed_point, frame_vectors
from .curvature import conormal_xi


# ---------------------------------------------------------------------------
# Finite-difference mean curvature from embedded points only
# ---------------------------------------------------------------------------

def fd_mean_curvature(i: int, u: TripleField, point: tuple[float, float], h: float,
                      cutoff: CutoffProfile, frame: JunctionFrame | None = None) -> float:
    """Mean curvature of sheet i at an interior point, from surface samples.

    Builds the first and second fundamental forms by centered differences of
    a 5 x 5 block of embedded points at spacing h in the unrolled chart
    (where the ambient metric is the identity) and returns tr(g^{-1} h).
    Wholly independent of the closed-form curvature path: only the sheet
    parametrization is shared.
    """
    frame = frame or frame_vectors()
    if not 1e-5 <= h <= 1e-2:
        raise ValueError("step size h must lie in [1e-5, 1e-2]")
    x0, y0 = point
    if x0 - 2 * h < 0.0 or x0 + 2 * h > 1.0:
        raise ValueError("finite-difference stencil leaves the domain")

    offs = np.arange(-2, 3)
    X = x0 + h * offs[:, None] * np.ones(5)[None, :]
    Y = y0 + h * np.ones(5)[:, None] * offs[None, :]    # y wraps periodically
    P = embed_point(i, X, Y, u, frame, cutoff)           # (5, 5, 3)
    # undo the seam wrap so differences across y = 0 stay smooth
    P[..., 2] = Y

    c = P[2, 2]
    Px = (P[3, 2] - P[1, 2]) / (2 * h)
    Py = (P[2, 3] - P[2, 1]) / (2 * h)
    Pxx = (P[3, 2] - 2 * c + P[1, 2]) / h ** 2
    Pyy = (P[2, 3] - 2 * c + P[2, 1]) / h ** 2
    Pxy = (P[3, 3] - P[3, 1] - P[1, 3] + P[1, 1]) / (4 * h ** 2)

    E = Px @ Px
    Fm = Px @ Py
    G = Py @ Py
    normal = np.cross(Px, Py)
    normal /= np.linalg.norm(normal)
    L = Pxx @ normal
    M = Pxy @ normal
    N = Pyy @ normal
    return float((G * L - 2 * Fm * M + E * N) / (E * G - Fm ** 2))


# ---------------------------------------------------------------------------
# Finite-difference solver for the scalar model problems
# ---------------------------------------------------------------------------

def fd_linear_solve(f, g, phi, shape: tuple[int, int],
                    kind: str = "mixed") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second-order finite-difference solve of the scalar problems.

    ``f(x, y)``, ``g(y)``, ``phi(y)`` are callables (g is ignored for the
    Dirichlet kind).  Returns (xs, ys, values) on a uniform (mx, my) tensor
    grid.  The 5-point Laplacian diagonalizes over the periodic direction, so
    each discrete Fourier mode is a tridiagonal solve in x; the Neumann
    condition enters through a ghost point, keeping second order.
    """
    mx, my = shape
    if mx < 3 or my < 4:
        raise ValueError("grid too small for the finite-difference oracle")
    if kind not in ("dirichlet", "mixed"):
        raise ValueError(f"unknown problem kind {kind!r}")
    hx = 1.0 / (mx - 1)
    hy = 1.0 / my
    xs = np.linspace(0.0, 1.0, mx)
    ys = np.arange(my) * hy

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    fv = np.asarray(f(X, Y), dtype=float)
    gv = np.zeros(my) if g is None else np.asarray(g(ys), dtype=float)
    pv = np.asarray(phi(ys), dtype=float)

    fh = np.fft.rfft(fv, axis=1)
    gh = np.fft.rfft(gv)
    ph = np.fft.rfft(pv)

    K = my // 2
    sym = 4.0 * np.sin(np.pi * np.arange(K + 1) * hy) ** 2 / hy ** 2
    out = np.empty((mx, K + 1), dtype=complex)
    for k in range(K + 1):
        # rows 1..mx-2: standard second difference minus the FD mode symbol
        band = np.zeros((3, mx), dtype=complex)
        rhs = fh[:, k].astype(complex)
        band[0, 1:] = 1.0 / hx ** 2          # superdiagonal
        band[1, :] = -2.0 / hx ** 2 - sym[k]
        band[2, :-1] = 1.0 / hx ** 2         # subdiagonal
        if kind == "dirichlet":
            band[1, 0] = 1.0
            band[0, 1] = 0.0
            rhs[0] = 0.0
        else:
            # ghost point at x = -hx: (v1 - v_-1)/(2 hx) = v'(0) = -g
            band[0, 1] = 2.0 / hx ** 2
            rhs[0] = fh[0, k] - 2.0 * gh[k] / hx
        band[1, -1] = 1.0
        band[2, -2] = 0.0
        rhs[-1] = ph[k]
        out[:, k] = solve_banded((1, 1), band, rhs)
    values = np.fft.irfft(out, n=my, axis=1)
    return xs, ys, values


# ---------------------------------------------------------------------------
# Junction angles and exact reference families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngleReport:
    """Pairwise angles between the three spine conormals, per y node."""

    angles: np.ndarray          # (3, ny): pairs (1,2), (2,3), (3,1)
    max_deviation: float        # from 2 pi / 3

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_deviation <= tol


def junction_angle_check(u: TripleField, frame: JunctionFrame | None = None) -> AngleReport:
    """Angles between the sheet conormals along the spine; 120 degrees at stationarity."""
    frame = frame or frame_vectors()
    xi = [conormal_xi(i, u, frame) for i in (1, 2, 3)]
    pairs = ((0, 1), (1, 2), (2, 0))
    angles = np.stack([
        np.arccos(np.clip((xi[a] * xi[b]).sum(axis=1), -1.0, 1.0)) for a, b in pairs])
    return AngleReport(angles=angles,
                       max_deviation=float(np.max(np.abs(angles - 2.0 * np.pi / 3.0))))


def exact_family(kind: str, value, grid: Grid2D, cutoff: CutoffProfile,
                 frame: JunctionFrame | None = None) -> tuple[BoundaryTriple, TripleField]:
    """Boundary data and exact solution of a rigid-motion family.

    ``translate``: the cone shifted by a plane vector c gives constant
    heights u_i = <c, nu_i>.  ``rotate``: tilting all three rays by the same
    slope beta gives u_i = beta x.  Both are genuinely stationary, so they
    serve as end-to-end regression targets.
    """
    frame = frame or frame_vectors()
    limit = cutoff.delta / 20.0
    if kind == "translate":
        c = np.asarray(value, dtype=float)
        if c.shape != (2,):
            raise ValueError("translation takes a plane vector (cx, cy)")
        if np.linalg.norm(c) > limit:
            raise ValueError(f"|c| = {np.linalg.norm(c):.3g} exceeds the "
                             f"smallness limit delta/20 = {limit:.3g}")
        arrays = [np.full((grid.nx, grid.ny), float(frame.nu_vec(i) @ c))
                  for i in (1, 2, 3)]
    elif kind == "rotate":
        beta = float(value)
        if abs(beta) > limit:
            raise ValueError(f"|beta| = {abs(beta):.3g} exceeds the "
                             f"smallness limit delta/20 = {limit:.3g}")
        arrays = [np.tile(beta * grid.x[:, None], (1, grid.ny)) for _ in range(3)]
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    u = TripleField.from_arrays(grid, arrays)
    return BoundaryTriple(grid.ny, u.traces("outer")), u
