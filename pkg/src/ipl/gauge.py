"""Gauge calculus on the annulus times torus: connections, curvature,
anti-self-duality, holonomy, and the integral identities used as oracles.

Index conventions (see geometry.conventions_sheet): coordinates are ordered
(r, theta, x, y); connection components are coefficients of
(dr, dtheta, dx, dy); curvature components are stored in the pair order
[(r,th), (r,x), (r,y), (th,x), (th,y), (x,y)]; "unit frame" divides every
theta-paired slot by r, i.e. uses the orthonormal coframe
(dr, r dtheta, dx, dy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _su2
from .geometry import TWO_PI, AnnulusGrid, DualTorusPoint, Loop, TorusSpec

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_THETA_PAIRED = (0, 3, 4)  # entries of PAIRS containing the theta index


class DomainError(ValueError):
    """Point outside the validity domain of a connection."""


@dataclass
class ConnectionSource:
    """A connection given by callables, vectorized over leading axes.

    evaluate(points): (..., 4) float -> (..., 4, 2, 2) complex, components
    (a_r, a_theta, a_x, a_y) in the coordinate coframe. derivative, if
    given, maps (points, axis) to the exact partials of all four components
    with respect to coordinate `axis` (0..3); otherwise finite differences
    are used (4th order Richardson-extrapolated central stencils).
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    torus: TorusSpec = field(default_factory=TorusSpec)
    derivative: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    r_min: float = 0.0
    r_max: float = math.inf
    grid: Optional[AnnulusGrid] = None
    name: str = "connection"
    meta: dict = field(default_factory=dict)

    @property
    def is_analytic(self) -> bool:
        return self.derivative is not None

    def check_domain(self, points: np.ndarray) -> None:
        r = np.asarray(points)[..., 0]
        if np.any(r < self.r_min) or np.any(r > self.r_max):
            raise DomainError(
                f"{self.name}: radius outside [{self.r_min}, {self.r_max}]"
            )

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        self.check_domain(points)
        return self.evaluate(points)


def fd_step(conn: ConnectionSource, points: np.ndarray) -> float:
    """Default finite-difference step: quarter of the finest grid spacing
    when a grid is attached, otherwise scale-aware fixed fraction."""
    if conn.grid is not None:
        return conn.grid.min_spacing(conn.torus) / 4.0
    return 1e-2


def connection_derivative(conn: ConnectionSource, points, axis: int) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if conn.derivative is not None:
        return conn.derivative(points, axis)
    h = fd_step(conn, points)

    def central4(hh):
        out = 0.0
        for k, w in ((1, 8.0), (2, -1.0)):
            for sgn in (1.0, -1.0):
                p = points.copy()
                p[..., axis] += sgn * k * hh
                out = out + sgn * w * conn.evaluate(p)
        return out / (12.0 * hh)

    d1 = central4(h)
    d2 = central4(h / 2.0)
    # one Richardson step on the O(h^4) error
    return (16.0 * d2 - d1) / 15.0


@dataclass
class CurvatureSample:
    """Curvature at one or many points; components ordered per PAIRS."""

    points: np.ndarray
    components: np.ndarray  # (..., 6, 2, 2)

    @property
    def f_rtheta(self):
        return self.components[..., 0, :, :]

    @property
    def f_rx(self):
        return self.components[..., 1, :, :]

    @property
    def f_ry(self):
        return self.components[..., 2, :, :]

    @property
    def f_thetax(self):
        return self.components[..., 3, :, :]

    @property
    def f_thetay(self):
        return self.components[..., 4, :, :]

    @property
    def f_xy(self):
        return self.components[..., 5, :, :]

    def unit_frame(self) -> np.ndarray:
        """Components in the orthonormal coframe (theta slots divided by r)."""
        out = np.array(self.components, copy=True)
        r = np.asarray(self.points)[..., 0]
        for k in _THETA_PAIRED:
            out[..., k, :, :] = out[..., k, :, :] / r[..., None, None]
        return out


def curvature(conn: ConnectionSource, points) -> CurvatureSample:
    """F_ab = d_a A_b - d_b A_a + [A_a, A_b] at the given points (..., 4)."""
    points = np.asarray(points, dtype=float)
    conn.check_domain(points)
    a = conn.evaluate(points)
    d = np.stack([connection_derivative(conn, points, ax) for ax in range(4)], axis=-4)
    # d[..., i, j, :, :] = partial_i a_j
    comps = []
    for i, j in PAIRS:
        f = d[..., i, j, :, :] - d[..., j, i, :, :]
        f = f + a[..., i, :, :] @ a[..., j, :, :] - a[..., j, :, :] @ a[..., i, :, :]
        comps.append(f)
    return CurvatureSample(points=points, components=np.stack(comps, axis=-3))


def self_dual_part(sample: CurvatureSample) -> np.ndarray:
    """Coefficients (c1, c2, c3) of F on the self-dual basis, shape (...,3,2,2)."""
    fh = sample.unit_frame()
    c1 = 0.5 * (fh[..., 0, :, :] + fh[..., 5, :, :])
    c2 = 0.5 * (fh[..., 1, :, :] - fh[..., 4, :, :])
    c3 = 0.5 * (fh[..., 2, :, :] + fh[..., 3, :, :])
    return np.stack([c1, c2, c3], axis=-3)


def asd_residual(conn: ConnectionSource, points) -> np.ndarray:
    """Pointwise |F^+| (Frobenius aggregate over the self-dual coefficients)."""
    c = self_dual_part(curvature(conn, points))
    return np.sqrt(2.0 * np.sum(_su2.frob(c) ** 2, axis=-1))


def curvature_norm(conn: ConnectionSource, points, components: str = "all") -> np.ndarray:
    """Pointwise |F|; components='kahler' restricts to the (1,2) and (3,4)
    orthonormal-frame slots (the instanton-density pair), components='all'
    aggregates all six."""
    fh = curvature(conn, points).unit_frame()
    n2 = _su2.frob(fh) ** 2
    if components == "all":
        return np.sqrt(np.sum(n2, axis=-1))
    if components == "kahler":
        return np.sqrt(n2[..., 0] + n2[..., 5])
    raise ValueError("components must be 'all' or 'kahler'")


# ---------------------------------------------------------------------------
# grid-sampled serialization

GRID_SCHEMA = "grid-sampled-connection"
GRID_SCHEMA_VERSION = 1


def _grid_header(torus: TorusSpec, grid: AnnulusGrid) -> dict:
    return {
        "schema": GRID_SCHEMA,
        "schema_version": GRID_SCHEMA_VERSION,
        "torus": {"period_x": torus.period_x, "period_y": torus.period_y},
        "grid": {"r_min": grid.r_min, "r_max": grid.r_max,
                 "n_r": grid.n_r, "n_theta": grid.n_theta,
                 "n_x": grid.n_x, "n_y": grid.n_y,
                 "spacing": grid.spacing},
    }


def _decode_header(data: dict) -> tuple[TorusSpec, AnnulusGrid]:
    if data.get("schema") != GRID_SCHEMA:
        raise ValueError(f"not a {GRID_SCHEMA} document")
    if data.get("schema_version") != GRID_SCHEMA_VERSION:
        raise ValueError("unsupported schema_version")
    t = data["torus"]
    g = data["grid"]
    torus = TorusSpec(period_x=float(t["period_x"]),
                      period_y=float(t["period_y"]))
    grid = AnnulusGrid(r_min=float(g["r_min"]), r_max=float(g["r_max"]),
                       n_r=int(g["n_r"]), n_theta=int(g["n_theta"]),
                       n_x=int(g["n_x"]), n_y=int(g["n_y"]),
                       spacing=str(g["spacing"]))
    return torus, grid


def _pairs_from_complex(arr: np.ndarray) -> list:
    flat = np.asarray(arr, dtype=complex).reshape(-1)
    return [[float(v.real), float(v.imag)] for v in flat]


def _complex_from_pairs(pairs, shape) -> np.ndarray:
    flat = np.array([complex(p[0], p[1]) for p in pairs])
    if flat.size != int(np.prod(shape)):
        raise ValueError("value count does not match the declared grid")
    return flat.reshape(shape)


def connection_to_json(conn: ConnectionSource, grid: AnnulusGrid) -> dict:
    """Grid samples of a connection as a JSON-safe dict: header (torus and
    grid) plus the component values as row-major (re, im) pairs with index
    order (r, theta, x, y, component a_r..a_y, row, col)."""
    rs, ths = grid.rs, grid.thetas
    xs, ys = grid.xs(conn.torus), grid.ys(conn.torus)
    R, T, X, Y = np.meshgrid(rs, ths, xs, ys, indexing="ij")
    pts = np.stack([R, T, X, Y], axis=-1)
    vals = np.asarray(conn(pts), dtype=complex)
    doc = _grid_header(conn.torus, grid)
    doc.update({
        "reduced": False,
        "name": conn.name,
        "component_order": ["a_r", "a_theta", "a_x", "a_y"],
        "index_order": ["r", "theta", "x", "y", "component", "row", "col"],
        "values": _pairs_from_complex(vals),
    })
    return doc


def connection_from_json(data: dict):
    """Decodes a grid-sampled connection document; returns
    (torus, grid, components) with components shaped
    (n_r, n_theta, n_x, n_y, 4, 2, 2). Exact inverse of connection_to_json
    at the grid nodes."""
    torus, grid = _decode_header(data)
    if data.get("reduced"):
        raise ValueError("document holds a reduced pair; use the "
                         "dimensional-reduction loader")
    shape = (grid.n_r, grid.n_theta, grid.n_x, grid.n_y, 4, 2, 2)
    return torus, grid, _complex_from_pairs(data["values"], shape)


# ---------------------------------------------------------------------------
# holonomy

@dataclass(frozen=True)
class SU2Element:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape[-2:] != (2, 2) or float(np.max(_su2.su2_defect(m))) > 1e-10:
            raise ValueError("not an SU(2) element to tolerance")


def _path_ordered_product(conn: ConnectionSource, pts: np.ndarray,
                          tans: np.ndarray, renorm_every: int = 64) -> np.ndarray:
    """Path-ordered product of exp(-A(gamma') dt) over leading axis 0.

    pts, tans: (n, ..., 4). Returns (..., 2, 2). Transport convention
    h' = -A(gamma') h, midpoint sampling assumed done by the caller.
    """
    n = pts.shape[0]
    conn.check_domain(pts)
    a = conn.evaluate(pts)  # (n, ..., 4, 2, 2)
    m = np.einsum("k...i,k...iab->k...ab", tans, a) / n
    steps = _su2.expm_su2(-m)
    out = np.broadcast_to(_su2.EYE2, steps.shape[1:]).copy()
    for k in range(n):
        out = steps[k] @ out
        if (k + 1) % renorm_every == 0:
            out = _su2.project_su2(out)
    return _su2.project_su2(out)


def holonomy(conn: ConnectionSource, loop: Loop, steps: int = 256) -> SU2Element:
    """Holonomy of the loop with transport h' = -A(gamma') h."""
    pts, tans = loop.points_and_tangents(steps, conn.torus)
    return SU2Element(_path_ordered_product(conn, pts, tans))


def circle_holonomies(conn: ConnectionSource, kind: str, bases: np.ndarray,
                      steps: int = 256) -> np.ndarray:
    """Batched holonomies of coordinate circles through each base point.

    kind: 'x', 'y' or 'theta'. bases: (B, 4). Returns (B, 2, 2).
    """
    bases = np.asarray(bases, dtype=float)
    n, B = steps, bases.shape[0]
    t = (np.arange(n) + 0.5) / n
    pts = np.broadcast_to(bases, (n, B, 4)).copy()
    tans = np.zeros((n, B, 4))
    axis = {"theta": 1, "x": 2, "y": 3}[kind]
    period = {"theta": TWO_PI, "x": conn.torus.period_x, "y": conn.torus.period_y}[kind]
    pts[..., axis] += period * t[:, None]
    tans[..., axis] = period
    return _path_ordered_product(conn, pts, tans)


def segment_transports(conn: ConnectionSource, waypoints: np.ndarray,
                       steps_per_seg: int = 64) -> np.ndarray:
    """Transport matrices along consecutive straight segments of a path.

    waypoints: (m, 4). Returns (m-1, 2, 2), h_k transporting from
    waypoint k to waypoint k+1.
    """
    waypoints = np.asarray(waypoints, dtype=float)
    m = waypoints.shape[0] - 1
    t = (np.arange(steps_per_seg) + 0.5) / steps_per_seg
    a, b = waypoints[:-1], waypoints[1:]
    pts = a[None, :, :] + t[:, None, None] * (b - a)[None, :, :]
    tans = np.broadcast_to(b - a, (steps_per_seg, m, 4))
    return _path_ordered_product(conn, pts, tans)


# ---------------------------------------------------------------------------
# monodromy drift along a family of circles

@dataclass
class CircleFamily:
    """Family of closed circles phi(t, s), s the loop parameter in [0, 1),
    t the family parameter in [0, 1]; dphi_dt and dphi_ds are the exact
    partials. All maps are vectorized over broadcast (T, S) inputs and
    return (..., 4) arrays."""

    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dphi_dt: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dphi_ds: Callable[[np.ndarray, np.ndarray], np.ndarray]


def monodromy_drift_defect(conn: ConnectionSource, family: CircleFamily,
                           n_t: int = 9, n_s: int = 512) -> dict:
    """Checks |d/dt (h^-1 m h)| <= int |F(dphi/dt, dphi/ds)| ds along the
    family; returns the max signed defect (LHS - RHS), nonpositive up to
    discretization for true connections.

    m(t) is the circle holonomy at parameter t, h(t) the transport along
    the base path phi(., 0) from 0 to t.
    """
    ts = np.linspace(0.0, 1.0, n_t)
    s_mid = (np.arange(n_s) + 0.5) / n_s

    # monodromies of every circle in the family, batched over t
    Tg, Sg = np.meshgrid(ts, s_mid, indexing="ij")
    pts = family.phi(Tg, Sg)  # (n_t, n_s, 4)
    tans = family.dphi_ds(Tg, Sg)
    mats = np.moveaxis(pts, 1, 0), np.moveaxis(tans, 1, 0)
    m_t = _path_ordered_product(conn, mats[0], mats[1])  # (n_t, 2, 2)

    # base-path transports between consecutive t samples
    base = family.phi(ts, np.zeros_like(ts))
    hops = segment_transports(conn, base, steps_per_seg=max(16, 2048 // n_t))
    h = np.empty((n_t, 2, 2), dtype=complex)
    h[0] = _su2.EYE2
    for k in range(1, n_t):
        h[k] = hops[k - 1] @ h[k - 1]

    hinv = np.conj(np.swapaxes(h, -1, -2))
    M = hinv @ m_t @ h

    # centered derivative of M in t
    dt = ts[1] - ts[0]
    dM = _su2.frob((M[2:] - M[:-2]) / (2 * dt))

    # curvature contracted with the family surface element
    F = curvature(conn, pts).components  # (n_t, n_s, 6, 2, 2)
    u = family.dphi_dt(Tg, Sg)
    v = tans
    contract = np.zeros(F.shape[:-3] + (2, 2), dtype=complex)
    for k, (i, j) in enumerate(PAIRS):
        contract += F[..., k, :, :] * (
            u[..., i] * v[..., j] - u[..., j] * v[..., i]
        )[..., None, None]
    rhs = np.mean(_su2.frob(contract), axis=1)  # integral over s, weight 1/n_s

    defect = dM - rhs[1:-1]
    return {
        "defect": float(np.max(defect)),
        "lhs": dM,
        "rhs": rhs,
        "ts": ts,
    }


# ---------------------------------------------------------------------------
# flat model connections

def flat_connection(xi: DualTorusPoint, torus: TorusSpec | None = None,
                    name: str = "flat") -> ConnectionSource:
    """Flat diagonal connection i diag(c, -c) dx + i diag(c', -c') dy with
    holonomy exponents given by the dual-torus point."""
    torus = torus or (xi.torus if xi is not None else TorusSpec())
    c1 = TWO_PI * xi.xi1 / torus.period_x if xi is not None else 0.0
    c2 = TWO_PI * xi.xi2 / torus.period_y if xi is not None else 0.0
    sigma3 = np.diag([1.0 + 0.0j, -1.0 + 0.0j])

    def evaluate(points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)
        out[..., 2, :, :] = 1j * c1 * sigma3
        out[..., 3, :, :] = 1j * c2 * sigma3
        return out

    def derivative(points, axis):
        points = np.asarray(points, dtype=float)
        return np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)

    return ConnectionSource(evaluate=evaluate, torus=torus,
                            derivative=derivative, name=name)


# ---------------------------------------------------------------------------
# quadratic-form identity on the annulus (integration by parts oracle)

class BoundaryConditionError(ValueError):
    """Fixture violates the radial boundary requirements."""


@dataclass(frozen=True)
class TrigRadialTerm:
    """One separable term  matrix * f(r) * cos(p theta + ph0) *
    cos(n x + ph1) * cos(m y + ph2)  occupying a single angular component.

    component: 1 = dtheta, 2 = dx, 3 = dy (0 = dr is rejected by the
    quadratic-form check; see weitzenbock_defect).
    """

    component: int
    matrix: tuple  # nested 2x2 complex-able
    radial_coeffs: tuple  # polynomial coefficients, low order first
    modes: tuple  # (p, n, m) integers
    phases: tuple = (0.0, 0.0, 0.0)

    def poly(self) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial(self.radial_coeffs)


@dataclass(frozen=True)
class SeparableOneForm:
    """Sum of TrigRadialTerm's; the radial component vanishes identically."""

    terms: tuple

    def max_modes(self) -> tuple[int, int, int]:
        ms = np.array([t.modes for t in self.terms], dtype=int)
        return tuple(np.max(np.abs(ms), axis=0)) if len(self.terms) else (0, 0, 0)


def _term_fields(term: TrigRadialTerm, rs, th, xs, ys, torus: TorusSpec):
    """Returns value and exact partials (d_r, d_th, d_x, d_y) of the scalar
    factor on the tensor grid (r, theta, x, y)."""
    p, n, m = term.modes
    ph = term.phases
    f = term.poly()
    fr = f(rs)[:, None, None, None]
    dfr = f.deriv()(rs)[:, None, None, None]
    cth = np.cos(p * th + ph[0])[None, :, None, None]
    dth = -p * np.sin(p * th + ph[0])[None, :, None, None]
    kx = TWO_PI * n / torus.period_x
    ky = TWO_PI * m / torus.period_y
    cx = np.cos(kx * xs + ph[1])[None, None, :, None]
    dx = -kx * np.sin(kx * xs + ph[1])[None, None, :, None]
    cy = np.cos(ky * ys + ph[2])[None, None, None, :]
    dy = -ky * np.sin(ky * ys + ph[2])[None, None, None, :]
    val = fr * cth * cx * cy
    return val, dfr * cth * cx * cy, fr * dth * cx * cy, fr * cth * dx * cy, fr * cth * cx * dy


def weitzenbock_defect(form: SeparableOneForm, gamma: DualTorusPoint | None,
                       r_inner: float, r_outer: float,
                       torus: TorusSpec | None = None,
                       n_r: int = 48) -> dict:
    r"""Quadratic-form identity for twisted 1-forms on [R, R'] x T^3:

        ||d_G a||^2 + ||d_G* a||^2 - ||grad_G a||^2
            + \int_{r=R} |a_theta / r|^2 dtheta dx dy   ->   0

    up to the outer-boundary counterpart (returned as `outer_term`), which
    vanishes when the dtheta radial profiles are 0 at R'. Requires the
    radial component to vanish identically (raises BoundaryConditionError
    otherwise); G is the flat diagonal twist of `gamma` (None = untwisted).
    """
    torus = torus or TorusSpec()
    if any(t.component == 0 for t in form.terms):
        raise BoundaryConditionError(
            "radial component present: the two-boundary identity requires "
            "the dr contraction to vanish on the whole annulus"
        )
    for t in form.terms:
        if t.component not in (1, 2, 3):
            raise ValueError("term component must be one of 1, 2, 3")

    pmax, nmax, mmax = form.max_modes()
    n_th = max(8, 4 * pmax + 4)
    n_x = max(8, 4 * nmax + 4)
    n_y = max(8, 4 * mmax + 4)

    nodes, wts = np.polynomial.legendre.leggauss(n_r)
    rs = 0.5 * (r_outer - r_inner) * nodes + 0.5 * (r_outer + r_inner)
    wr = 0.5 * (r_outer - r_inner) * wts
    th = np.linspace(0.0, TWO_PI, n_th, endpoint=False)
    xs = np.linspace(0.0, torus.period_x, n_x, endpoint=False)
    ys = np.linspace(0.0, torus.period_y, n_y, endpoint=False)
    w_ang = (TWO_PI / n_th) * (torus.period_x / n_x) * (torus.period_y / n_y)

    shape = (len(rs), n_th, n_x, n_y)
    # unit-frame components ahat_beta, beta in {2,3,4} and their coordinate
    # partials; index map: beta 2 <-> a_theta / r, 3 <-> a_x, 4 <-> a_y
    ahat = np.zeros((3,) + shape + (2, 2), dtype=complex)
    dpart = np.zeros((4, 3) + shape + (2, 2), dtype=complex)
    rcol = rs[:, None, None, None]
    for t in form.terms:
        T = np.asarray(t.matrix, dtype=complex)
        val, d_r, d_th, d_x, d_y = _term_fields(t, rs, th, xs, ys, torus)
        b = t.component - 1  # 0 <-> theta, 1 <-> x, 2 <-> y
        if t.component == 1:
            # ahat = f(r)/r * trig; product rule for the r-partial
            ahat[b] += (val / rcol)[..., None, None] * T
            dpart[0, b] += ((d_r - val / rcol) / rcol)[..., None, None] * T
            dpart[1, b] += (d_th / rcol)[..., None, None] * T
            dpart[2, b] += (d_x / rcol)[..., None, None] * T
            dpart[3, b] += (d_y / rcol)[..., None, None] * T
        else:
            ahat[b] += val[..., None, None] * T
            dpart[0, b] += d_r[..., None, None] * T
            dpart[1, b] += d_th[..., None, None] * T
            dpart[2, b] += d_x[..., None, None] * T
            dpart[3, b] += d_y[..., None, None] * T

    # flat twist matrices
    if gamma is not None:
        c1 = TWO_PI * gamma.xi1 / torus.period_x
        c2 = TWO_PI * gamma.xi2 / torus.period_y
    else:
        c1 = c2 = 0.0
    s3 = np.diag([1j, -1j])
    gx, gy = c1 * s3, c2 * s3

    def brk(g, X):
        return g @ X - X @ g

    # covariant frame derivatives nabla_{alpha beta}, alpha,beta in 1..4,
    # with ahat_1 = 0; rows alpha: e1 = d_r, e2 = (1/r) d_th (+ curvature
    # corrections), e3 = d_x + [gx, .], e4 = d_y + [gy, .]
    rc = rcol[..., None, None]
    nat = {}
    for b in range(3):  # beta = b + 2
        nat[(1, b + 2)] = dpart[0, b]
        nat[(2, b + 2)] = dpart[1, b] / rc
        nat[(3, b + 2)] = dpart[2, b] + brk(gx, ahat[b])
        nat[(4, b + 2)] = dpart[3, b] + brk(gy, ahat[b])
    nat[(2, 1)] = -ahat[0] / rc  # -ahat_theta / r from nabla_{e2} e1
    for a in (1, 3, 4):
        nat[(a, 1)] = np.zeros(shape + (2, 2), dtype=complex)

    vol = (wr * rs)[:, None, None, None] * w_ang

    def integral(dens):
        return float(np.sum(dens * vol))

    def nsq(X):
        return np.sum(np.abs(X) ** 2, axis=(-2, -1))

    grad_sq = sum(integral(nsq(v)) for v in nat.values())

    d_sq = 0.0
    for a in range(1, 5):
        for b in range(a + 1, 5):
            d_sq += integral(nsq(nat[(a, b)] - nat[(b, a)]))

    dstar = -(nat[(2, 2)] + nat[(3, 3)] + nat[(4, 4)])  # nat[(1,1)] = 0
    dstar_sq = integral(nsq(dstar))

    # boundary integrals of |a_theta / r|^2 with measure dtheta dx dy;
    # only theta-component terms contribute
    def boundary(rho):
        tot = np.zeros((n_th, n_x, n_y, 2, 2), dtype=complex)
        for t in form.terms:
            if t.component != 1:
                continue
            T = np.asarray(t.matrix, dtype=complex)
            val, *_ = _term_fields(t, np.array([rho]), th, xs, ys, torus)
            tot += (val[0] / rho)[..., None, None] * T
        return float(np.sum(nsq(tot)) * w_ang)

    inner_term = boundary(r_inner)
    outer_term = boundary(r_outer)
    defect = d_sq + dstar_sq - grad_sq + inner_term
    return {
        "defect": defect,
        "outer_term": outer_term,
        "grad_sq": grad_sq,
        "d_sq": d_sq,
        "dstar_sq": dstar_sq,
        "inner_term": inner_term,
    }


def random_quadratic_form_fixture(rng, r_inner: float, r_outer: float,
                                  n_terms: int = 4, max_mode: int = 2,
                                  degree: int = 3) -> SeparableOneForm:
    """Random admissible fixture: a_r = 0 and every dtheta radial profile
    vanishes at the outer radius (so the identity target is exactly zero)."""
    terms = []
    for _ in range(n_terms):
        comp = int(rng.integers(1, 4))
        coeffs = rng.normal(size=degree)
        poly = np.polynomial.Polynomial(coeffs)
        if comp == 1:
            poly = poly * np.polynomial.Polynomial([-r_outer, 1.0])
        mat = _su2.from_vector(rng.normal(size=3))
        modes = tuple(int(v) for v in rng.integers(-max_mode, max_mode + 1, size=3))
        phases = tuple(float(v) for v in rng.uniform(0, TWO_PI, size=3))
        terms.append(TrigRadialTerm(component=comp, matrix=tuple(map(tuple, mat)),
                                    radial_coeffs=tuple(poly.coef), modes=modes,
                                    phases=phases))
    return SeparableOneForm(terms=tuple(terms))
