"""Static geometry of the triple junction Y x S^1 and its perturbations.

The unperturbed configuration is the product of the plane cone Y (three rays
meeting at 120 degrees) with the unit circle.  Each sheet i carries a unit
ray direction -n_i and a unit normal nu_i (n_i rotated by +90 degrees).
A perturbation is described by three height functions u_i on [0, 1] x S^1;
sheet i is the image of

    (x, y)  ->  (-x n_i + u_i(x, y) nu_i + eta(x) w_i(y),  y),

where w_i is the junction offset built from the inner boundary traces and
eta is a C^2 cutoff equal to 1 near the junction and 0 past 2*delta.  The
offset makes all three sheets meet along a common curve (the spine) whenever
the traces sum to zero pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .fields import TripleField, norm_proxy

SQRT3 = math.sqrt(3.0)


class CompatibilityViolation(ValueError):
    """Inner traces do not sum to zero, so the sheets cannot share a spine."""


def cyclic_succ(i: int) -> int:
    """Successor in the cyclic order 1 -> 2 -> 3 -> 1."""
    _check_sheet(i)
    return 1 + i % 3


def cyclic_pred(i: int) -> int:
    """Predecessor in the cyclic order (pred(1) = 3)."""
    _check_sheet(i)
    return 1 + (i + 1) % 3


def _check_sheet(i: int):
    if i not in (1, 2, 3):
        raise ValueError(f"sheet index must be 1, 2 or 3, got {i!r}")


@dataclass(frozen=True)
class JunctionFrame:
    """The six unit vectors of the junction: ray directions n_i, normals nu_i."""

    n: np.ndarray           # (3, 2)
    nu: np.ndarray          # (3, 2)

    def n_vec(self, i: int) -> np.ndarray:
        _check_sheet(i)
        return self.n[i - 1]

    def nu_vec(self, i: int) -> np.ndarray:
        _check_sheet(i)
        return self.nu[i - 1]


def frame_vectors() -> JunctionFrame:
    """The standard frame: n_1 = (-1, 0), the others rotated by +-120 degrees."""
    n = np.array([[-1.0, 0.0],
                  [0.5, -SQRT3 / 2.0],
                  [0.5, SQRT3 / 2.0]])
    nu = np.array([[0.0, -1.0],
                   [SQRT3 / 2.0, 0.5],
                   [-SQRT3 / 2.0, 0.5]])
    n.flags.writeable = False
    nu.flags.writeable = False
    return JunctionFrame(n, nu)


@dataclass(frozen=True)
class CutoffProfile:
    """C^2 cutoff: 1 on [0, delta], 0 on [2 delta, 1], quintic in between.

    The transition is the quintic smoothstep s(t) = 6t^5 - 15t^4 + 10t^3
    applied to t = (2 delta - x) / delta.  Its slope is at most 15/(8 delta),
    inside the required bound 2/delta, and s', s'' vanish at both joins.
    """

    delta: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")

    def __call__(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (eta, eta', eta'') at x; x must lie in [0, 1]."""
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
            raise ValueError("cutoff argument outside [0, 1]")
        d = self.delta
        t = np.clip((2.0 * d - x) / d, 0.0, 1.0)
        eta = t ** 3 * (6.0 * t ** 2 - 15.0 * t + 10.0)
        dsdt = 30.0 * t ** 2 * (t - 1.0) ** 2
        d2sdt2 = 60.0 * t * (2.0 * t - 1.0) * (t - 1.0)
        eta1 = dsdt * (-1.0 / d)
        eta2 = d2sdt2 / d ** 2
        plateau = (x <= d) | (x >= 2.0 * d)
        eta = np.where(x <= d, 1.0, np.where(x >= 2.0 * d, 0.0, eta))
        eta1 = np.where(plateau, 0.0, eta1)
        eta2 = np.where(plateau, 0.0, eta2)
        if eta.ndim == 0:
            return float(eta), float(eta1), float(eta2)
        return eta, eta1, eta2


def cutoff_eval(profile: CutoffProfile, x):
    """Evaluate (eta, eta', eta'') of the profile at x in [0, 1]."""
    return profile(x)


# ---------------------------------------------------------------------------
# Junction offsets and the spine
# ---------------------------------------------------------------------------

def wall_scalars(traces: np.ndarray) -> np.ndarray:
    """(3, ny) array of <w_i, n_i> = (u_{i-1}(0,.) - u_{i+1}(0,.)) / sqrt(3)."""
    traces = np.asarray(traces, dtype=float)
    if traces.ndim != 2 or traces.shape[0] != 3:
        raise ValueError("traces must have shape (3, ny)")
    prev = np.roll(traces, 1, axis=0)      # row i holds trace i-1 (cyclic)
    nxt = np.roll(traces, -1, axis=0)
    return (prev - nxt) / SQRT3


def wall_offset(traces, i: int, frame: JunctionFrame | None = None) -> np.ndarray:
    """Periodic 2-vector map w_i(y) for sheet i; shape (ny, 2)."""
    frame = frame or frame_vectors()
    rows = [np.asarray(t, dtype=float) for t in traces]
    if len(rows) != 3 or any(t.ndim != 1 for t in rows):
        raise ValueError("traces must be three periodic scalar maps")
    if len({t.shape[0] for t in rows}) != 1:
        raise ValueError("traces sampled on mismatched y grids")
    w = wall_scalars(np.stack(rows))[i - 1]
    return np.outer(w, frame.n_vec(i))


@dataclass(frozen=True)
class SpineCurve:
    """The junction curve v: S^1 -> R^2, stored as cos/sin Fourier coefficients."""

    ny: int
    ccoef: np.ndarray        # (2, K+1)
    scoef: np.ndarray        # (2, K+1)

    def values(self, ys=None) -> np.ndarray:
        """Samples of v; shape (len(ys), 2).  Defaults to the stored grid."""
        ys = spectral.fourier_nodes(self.ny) if ys is None else np.asarray(ys, float)
        return spectral.trig_eval(self.ccoef, self.scoef, ys).T

    def derivative(self, ys=None) -> np.ndarray:
        ys = spectral.fourier_nodes(self.ny) if ys is None else np.asarray(ys, float)
        k = np.arange(self.ccoef.shape[1])
        dc = 2.0 * np.pi * k * self.scoef
        ds = -2.0 * np.pi * k * self.ccoef
        return spectral.trig_eval(dc, ds, ys).T

    def sup_norm(self) -> float:
        """max_y |v(y)| sampled on a refined grid."""
        ys = np.arange(4 * self.ny) / (4 * self.ny)
        return float(np.max(np.linalg.norm(self.values(ys), axis=1)))


def spine_from_traces(traces: np.ndarray, frame: JunctionFrame | None = None,
                      tol: float = 1e-10) -> SpineCurve:
    """Reconstruct the spine from the three inner traces.

    Requires sum_i u_i(0, y) = 0 pointwise (within ``tol``); the sheet-1
    formula v = <w_1, n_1> n_1 + u_1(0,.) nu_1 is returned.  All three
    per-sheet reconstructions agree whenever the compatibility condition
    holds.
    """
    frame = frame or frame_vectors()
    traces = np.asarray(traces, dtype=float)
    defect = float(np.max(np.abs(traces.sum(axis=0))))
    if defect > tol:
        raise CompatibilityViolation(
            f"trace sum reaches {defect:.3e} (tolerance {tol:.1e}); "
            "the three sheets do not meet along a common spine")
    w1 = wall_scalars(traces)[0]
    v = np.outer(w1, frame.n_vec(1)) + np.outer(traces[0], frame.nu_vec(1))
    c, s = spectral.fourier_coefficients(v.T, axis=1)
    return SpineCurve(traces.shape[1], _ro(c), _ro(s))


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Sheet parametrization
# ---------------------------------------------------------------------------

def embed_point(i: int, x, y, u: TripleField, frame: JunctionFrame | None = None,
                cutoff: CutoffProfile | None = None) -> np.ndarray:
    """Map parameter points of sheet i into R^2 x S^1 (unrolled as R^3).

    Returns (..., 3) arrays (p1, p2, y); scalar inputs give a flat (3,)
    point.  Heights are interpolated spectrally, so (x, y) need not be grid
    points.
    """
    _check_sheet(i)
    frame = frame or frame_vectors()
    cutoff = cutoff or CutoffProfile()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    ui = u.sheet(i).eval(x, y)
    tr = u.traces()
    c, s = spectral.fourier_coefficients(wall_scalars(tr)[i - 1])
    wi = spectral.trig_eval(c, s, y)
    eta, _, _ = cutoff(x)
    p = (np.multiply.outer(-x, frame.n_vec(i))
         + np.multiply.outer(ui, frame.nu_vec(i))
         + np.multiply.outer(eta * wi, frame.n_vec(i)))
    out = np.concatenate([p, np.mod(y, 1.0)[..., None]], axis=-1)
    return out


# ---------------------------------------------------------------------------
# Compatibility diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompatibilityReport:
    """Diagnostics for the conditions that keep the perturbation embedded."""

    trace_sum_max: float       # max_y |sum_i u_i(0, y)|
    monotonic_margin: float    # min over (i, x, y) of 1 - eta'(x) <w_i, n_i>(y)
    smallness_ok: bool         # norm proxy below delta / 10
    norm_proxy: float
    delta: float


def check_c0_compatibility(u: TripleField, cutoff: CutoffProfile,
                           alpha: float = 0.5) -> CompatibilityReport:
    """Report the trace-sum defect, the embeddedness margin, and the smallness flag."""
    tr = u.traces()
    trace_sum = float(np.max(np.abs(tr.sum(axis=0))))
    w = wall_scalars(tr)                        # (3, ny)
    _, eta1, _ = cutoff(u.grid.x)               # (nx,)
    margin = float(np.min(1.0 - np.einsum("x,iy->ixy", eta1, w)))
    proxy = norm_proxy(u, alpha)
    return CompatibilityReport(
        trace_sum_max=trace_sum,
        monotonic_margin=margin,
        smallness_ok=bool(proxy < cutoff.delta / 10.0),
        norm_proxy=proxy,
        delta=cutoff.delta,
    )


# ---------------------------------------------------------------------------
# Surface meshing and OBJ export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceMesh:
    """Triangulated union of the three sheets in unrolled (p1, p2, y) coordinates."""

    vertices: np.ndarray        # (nv, 3)
    faces: np.ndarray           # (nf, 3), 0-based indices
    face_sheet: np.ndarray      # (nf,) sheet tag in {1, 2, 3}
    header: dict

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.faces[:, 1]] - self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 2]] - self.vertices[self.faces[:, 0]]
        return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)


def mesh_surface(u: TripleField, resolution: tuple[int, int],
                 cutoff: CutoffProfile | None = None,
                 frame: JunctionFrame | None = None,
                 header: dict | None = None) -> SurfaceMesh:
    """Triangulate the perturbed surface.

    The y seam at 0 is cut (vertices at y = 0 and y = 1 are distinct), and
    the spine row is shared by the three sheets so the junction is watertight.
    """
    mx, my = resolution
    if mx < 2 or my < 3:
        raise ValueError("resolution must be at least (2, 3)")
    frame = frame or frame_vectors()
    cutoff = cutoff or CutoffProfile()
    xs = np.linspace(0.0, 1.0, mx)
    ys = np.linspace(0.0, 1.0, my + 1)          # duplicated seam

    tr = u.traces()
    spine = spine_from_traces(tr, frame, tol=np.inf)    # meshing never refuses
    spine_pts = np.column_stack([spine.values(ys), ys])
    spine_pts[-1, 2] = 1.0

    verts = [spine_pts]
    faces = []
    tags = []
    offset = spine_pts.shape[0]
    for i in (1, 2, 3):
        X, Y = np.meshgrid(xs[1:], ys, indexing="ij")
        pts = embed_point(i, X, Y, u, frame, cutoff).reshape(-1, 3)
        pts[:, 2] = Y.reshape(-1)               # keep the duplicated seam at y=1
        verts.append(pts)

        def vid(j, m):
            if j == 0:
                return m
            return offset + (j - 1) * (my + 1) + m

        for j in range(mx - 1):
            for m in range(my):
                a, b = vid(j, m), vid(j + 1, m)
                cc, d = vid(j + 1, m + 1), vid(j, m + 1)
                faces.append((a, b, cc))
                faces.append((a, cc, d))
                tags.extend((i, i))
        offset += (mx - 1) * (my + 1)

    face_arr = np.array(faces, dtype=int)
    face_arr.flags.writeable = False
    return SurfaceMesh(
        vertices=_ro(np.vstack(verts)),
        faces=face_arr,
        face_sheet=np.array(tags, dtype=int),
        header=dict(header or {}),
    )


def mesh_to_obj(mesh: SurfaceMesh) -> str:
    """Wavefront OBJ text: vertices, then one face group per sheet.

    Coordinates are the unrolled chart (p1, p2, y); the ambient R^2 x S^1
    has no isometric embedding into R^3, so the y axis is exported as-is.
    """
    lines = ["# triple-junction surface mesh (unrolled coordinates p1 p2 y)"]
    for key, val in mesh.header.items():
        lines.append(f"# {key} = {val}")
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}")
    for i in (1, 2, 3):
        lines.append(f"g sheet{i}")
        for f in mesh.faces[mesh.face_sheet == i]:
            lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"


def write_obj(mesh: SurfaceMesh, path: str):
    from .fields import atomic_write_text
    atomic_write_text(path, mesh_to_obj(mesh))
