"""Dimensional reduction between torus-invariant connections on the
annulus times torus and Higgs pairs (B, psi) on the punctured plane.

Fixed normalization (see geometry.conventions_sheet): a torus-invariant
connection a_r dr + a_th dtheta + a_x dx + a_y dy reduces to

    B = a_r dr + a_th dtheta,      psi_w = (a_y - i a_x) / 2,

and conversely a_x = i (psi_w + psi_w^dag), a_y = psi_w - psi_w^dag. With
dw ^ dwbar = -2i dw1 ^ dw2, anti-self-duality of the lift is equivalent to

    F_B^{12} = 2i [psi_w, psi_w^dag]   and   D_wbar psi_w = 0,

and the exact pointwise identity |F^+|^2 = rho1^2/2 + 2 rho2^2 holds for
the residual pair returned by hitchin_residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _su2
from .gauge import ConnectionSource, DomainError
from .geometry import TorusSpec


class NotTorusInvariantError(ValueError):
    pass


@dataclass
class HiggsPairOnPlane:
    """Pair (B, psi) on the annulus r >= r_min of the plane.

    evaluate_b(points): (..., 2) [r, theta] -> (..., 2, 2, 2), components
    (b_r, b_theta), anti-hermitian traceless. evaluate_psi(points):
    (..., 2) -> (..., 2, 2) complex traceless (the dw-coefficient of the
    Higgs field). Optional exact partials with axis 0 = r, 1 = theta.
    """

    evaluate_b: Callable[[np.ndarray], np.ndarray]
    evaluate_psi: Callable[[np.ndarray], np.ndarray]
    derivative_b: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    derivative_psi: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    torus: TorusSpec = field(default_factory=TorusSpec)
    r_min: float = 0.0
    r_max: float = math.inf
    name: str = "higgs-pair"
    meta: dict = field(default_factory=dict)

    @property
    def is_analytic(self) -> bool:
        return self.derivative_b is not None and self.derivative_psi is not None

    def check_domain(self, points) -> None:
        r = np.asarray(points)[..., 0]
        if np.any(r < self.r_min) or np.any(r > self.r_max):
            raise DomainError(f"{self.name}: radius outside "
                              f"[{self.r_min}, {self.r_max}]")


def _fd2(fun, points, axis, h=1e-2):
    def central4(hh):
        out = 0.0
        for k, w in ((1, 8.0), (2, -1.0)):
            for sgn in (1.0, -1.0):
                p = np.array(points, dtype=float)
                p[..., axis] += sgn * k * hh
                out = out + sgn * w * fun(p)
        return out / (12.0 * hh)

    d1, d2 = central4(h), central4(h / 2.0)
    return (16.0 * d2 - d1) / 15.0


def pair_derivative_b(pair: HiggsPairOnPlane, points, axis: int):
    if pair.derivative_b is not None:
        return pair.derivative_b(np.asarray(points, dtype=float), axis)
    return _fd2(pair.evaluate_b, points, axis)


def pair_derivative_psi(pair: HiggsPairOnPlane, points, axis: int):
    if pair.derivative_psi is not None:
        return pair.derivative_psi(np.asarray(points, dtype=float), axis)
    return _fd2(pair.evaluate_psi, points, axis)


def reduce(conn: ConnectionSource, n_check: int = 16, tol: float = 1e-9,
           seed: int = 0) -> HiggsPairOnPlane:
    """Reduce a torus-invariant connection to its Higgs pair.

    Torus invariance is verified on `n_check` random (r, theta) points by
    comparing component values at random torus positions against the base
    torus position; raises NotTorusInvariantError beyond `tol`.
    """
    rng = np.random.default_rng(seed)
    r_lo = max(conn.r_min, 1e-3)
    r_hi = min(conn.r_max, r_lo * 100.0 + 10.0)
    rs = rng.uniform(r_lo + 1e-6, r_hi, size=n_check)
    ths = rng.uniform(0.0, 2 * math.pi, size=n_check)
    base = np.stack([rs, ths, np.zeros(n_check), np.zeros(n_check)], axis=-1)
    xs = rng.uniform(0.0, conn.torus.period_x, size=n_check)
    ys = rng.uniform(0.0, conn.torus.period_y, size=n_check)
    moved = np.stack([rs, ths, xs, ys], axis=-1)
    dev = float(np.max(_su2.frob(conn(moved) - conn(base))))
    if dev > tol:
        raise NotTorusInvariantError(
            f"component deviation {dev:.3e} over the torus exceeds {tol:.1e}")

    def _lift_points(points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (4,))
        out[..., 0] = points[..., 0]
        out[..., 1] = points[..., 1]
        return out

    def evaluate_b(points):
        a = conn.evaluate(_lift_points(points))
        return a[..., :2, :, :]

    def evaluate_psi(points):
        a = conn.evaluate(_lift_points(points))
        return (a[..., 3, :, :] - 1j * a[..., 2, :, :]) / 2.0

    derivative_b = None
    derivative_psi = None
    if conn.is_analytic:
        def derivative_b(points, axis):
            d = conn.derivative(_lift_points(points), axis)
            return d[..., :2, :, :]

        def derivative_psi(points, axis):
            d = conn.derivative(_lift_points(points), axis)
            return (d[..., 3, :, :] - 1j * d[..., 2, :, :]) / 2.0

    return HiggsPairOnPlane(
        evaluate_b=evaluate_b, evaluate_psi=evaluate_psi,
        derivative_b=derivative_b, derivative_psi=derivative_psi,
        torus=conn.torus, r_min=conn.r_min, r_max=conn.r_max,
        name=f"reduce({conn.name})", meta={"reduced": True, **conn.meta},
    )


def lift(pair: HiggsPairOnPlane) -> ConnectionSource:
    """Torus-invariant connection of a Higgs pair (exact inverse of reduce)."""

    def evaluate(points):
        points = np.asarray(points, dtype=float)
        p2 = points[..., :2]
        b = pair.evaluate_b(p2)
        psi = pair.evaluate_psi(p2)
        psid = np.conj(np.swapaxes(psi, -1, -2))
        out = np.empty(points.shape[:-1] + (4, 2, 2), dtype=complex)
        out[..., 0, :, :] = b[..., 0, :, :]
        out[..., 1, :, :] = b[..., 1, :, :]
        out[..., 2, :, :] = 1j * (psi + psid)
        out[..., 3, :, :] = psi - psid
        return out

    derivative = None
    if pair.is_analytic:
        def derivative(points, axis):
            points = np.asarray(points, dtype=float)
            p2 = points[..., :2]
            out = np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)
            if axis in (0, 1):
                db = pair.derivative_b(p2, axis)
                dpsi = pair.derivative_psi(p2, axis)
                dpsid = np.conj(np.swapaxes(dpsi, -1, -2))
                out[..., 0, :, :] = db[..., 0, :, :]
                out[..., 1, :, :] = db[..., 1, :, :]
                out[..., 2, :, :] = 1j * (dpsi + dpsid)
                out[..., 3, :, :] = dpsi - dpsid
            return out

    return ConnectionSource(
        evaluate=evaluate, torus=pair.torus, derivative=derivative,
        r_min=pair.r_min, r_max=pair.r_max,
        name=f"lift({pair.name})", meta=dict(pair.meta),
    )


def pair_to_json(pair: HiggsPairOnPlane, grid) -> dict:
    """Grid samples of a Higgs pair in the grid-sampled connection schema,
    marked "reduced": true; values live on the (r, theta) factor only:
    b as row-major (re, im) pairs with index order (r, theta, component
    b_r/b_theta, row, col), psi with (r, theta, row, col)."""
    from .gauge import _grid_header, _pairs_from_complex
    rs, ths = grid.rs, grid.thetas
    R, T = np.meshgrid(rs, ths, indexing="ij")
    pts = np.stack([R, T], axis=-1)
    pair.check_domain(pts)
    b = np.asarray(pair.evaluate_b(pts), dtype=complex)
    psi = np.asarray(pair.evaluate_psi(pts), dtype=complex)
    doc = _grid_header(pair.torus, grid)
    doc.update({
        "reduced": True,
        "name": pair.name,
        "component_order": ["b_r", "b_theta"],
        "index_order": ["r", "theta", "component", "row", "col"],
        "b_values": _pairs_from_complex(b),
        "psi_index_order": ["r", "theta", "row", "col"],
        "psi_values": _pairs_from_complex(psi),
    })
    return doc


def pair_from_json(data: dict):
    """Decodes a reduced-pair document; returns (torus, grid, b, psi) with
    b shaped (n_r, n_theta, 2, 2, 2) and psi (n_r, n_theta, 2, 2). Exact
    inverse of pair_to_json at the grid nodes."""
    from .gauge import _complex_from_pairs, _decode_header
    torus, grid = _decode_header(data)
    if not data.get("reduced"):
        raise ValueError("document holds a full connection; use the "
                         "gauge-module loader")
    b = _complex_from_pairs(data["b_values"],
                            (grid.n_r, grid.n_theta, 2, 2, 2))
    psi = _complex_from_pairs(data["psi_values"],
                              (grid.n_r, grid.n_theta, 2, 2))
    return torus, grid, b, psi


def hitchin_residual(pair: HiggsPairOnPlane, points) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise residual norms (rho1, rho2) of the reduced equations:

    rho1 = |F_B^{12} - 2i [psi, psi^dag]|_F  (curvature equation, unit frame)
    rho2 = 2 |d_wbar psi + [B_wbar, psi]|_F  (holomorphicity, 2-form norm)
    """
    points = np.asarray(points, dtype=float)
    pair.check_domain(points)
    r = points[..., 0]
    th = points[..., 1]
    b = pair.evaluate_b(points)
    psi = pair.evaluate_psi(points)
    psid = np.conj(np.swapaxes(psi, -1, -2))
    db_r = pair_derivative_b(pair, points, 0)
    db_th = pair_derivative_b(pair, points, 1)
    dpsi_r = pair_derivative_psi(pair, points, 0)
    dpsi_th = pair_derivative_psi(pair, points, 1)

    br, bth = b[..., 0, :, :], b[..., 1, :, :]
    f12 = (db_r[..., 1, :, :] - db_th[..., 0, :, :] + br @ bth - bth @ br)
    f12 = f12 / r[..., None, None]
    rho1 = _su2.frob(f12 - 2j * (psi @ psid - psid @ psi))

    phase = np.exp(1j * th)[..., None, None]
    dwbar_psi = 0.5 * phase * (dpsi_r + 1j * dpsi_th / r[..., None, None])
    bwbar = 0.5 * phase * (br + 1j * bth / r[..., None, None])
    g = dwbar_psi + bwbar @ psi - psi @ bwbar
    rho2 = 2.0 * _su2.frob(g)
    return rho1, rho2
