"""Hyperkähler linear algebra and tangent-space numerics: the three
complex structures, discrete covariant calculus on an annulus grid with
exact adjoints, linearized equation residuals on both sides of the
correspondence, L2 metrics, the dimension formula, and the explicit
charge-1 chart of degree-1 rational maps.

The discrete adjoint d* is the exact transpose of the discrete d under
the quadrature inner product, so integration-by-parts identities hold to
machine precision rather than to discretization order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _su2
from .gauge import ConnectionSource, DomainError, PAIRS, curvature
from .geometry import TWO_PI, AnnulusGrid, TorusSpec


def complex_structures():
    """The three constant complex structures on the product of the torus
    and the plane, in coordinates (z1, z2, w1, w2):
    I1: (-z2, z1, -w2, w1); I2: (-w1, w2, z1, -z2); I3: (-w2, -w1, z2, z1).
    """
    I1 = np.array([[0, -1, 0, 0],
                   [1, 0, 0, 0],
                   [0, 0, 0, -1],
                   [0, 0, 1, 0]], dtype=float)
    I2 = np.array([[0, 0, -1, 0],
                   [0, 0, 0, 1],
                   [1, 0, 0, 0],
                   [0, -1, 0, 0]], dtype=float)
    I3 = np.array([[0, 0, 0, -1],
                   [0, 0, -1, 0],
                   [0, 1, 0, 0],
                   [1, 0, 0, 0]], dtype=float)
    return I1, I2, I3


def differentiation_matrix(nodes: np.ndarray) -> np.ndarray:
    """Polynomial (barycentric) differentiation matrix on distinct nodes;
    spectrally accurate on Chebyshev-spaced points."""
    x = np.asarray(nodes, dtype=float)
    n = x.size
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    c = np.prod(diff, axis=1)
    D = (c[:, None] / c[None, :]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def interpolatory_weights(nodes: np.ndarray, a: float, b: float) -> np.ndarray:
    """Quadrature weights exact for polynomials of degree < n on [a, b]."""
    x = np.asarray(nodes, dtype=float)
    n = x.size
    t = 2.0 * (x - a) / (b - a) - 1.0
    V = np.polynomial.legendre.legvander(t, n - 1).T
    m = np.zeros(n)
    m[0] = b - a
    return np.linalg.solve(V, m)


def fourier_diff(arr: np.ndarray, axis: int, period: float) -> np.ndarray:
    """Spectral derivative along a periodic axis; the Nyquist mode is
    zeroed so the operator is exactly skew-adjoint."""
    n = arr.shape[axis]
    k = 2j * np.pi * np.fft.fftfreq(n, d=period / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * arr.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(arr, axis=axis) * k.reshape(shape),
                       axis=axis)


@dataclass
class TangentVectorInstanton:
    """su(2)-valued 1-form on an annulus grid, orthonormal-frame
    components ordered (radial, angular, torus-x, torus-y):
    comps shape (4, n_r, n_theta, n_x, n_y, 2, 2)."""
    grid: AnnulusGrid
    comps: np.ndarray
    torus: TorusSpec = field(default_factory=TorusSpec)

    def __post_init__(self):
        expect = (4, self.grid.n_r, self.grid.n_theta,
                  self.grid.n_x, self.grid.n_y, 2, 2)
        self.comps = np.asarray(self.comps, dtype=complex)
        if self.comps.shape != expect:
            raise ValueError(f"components must have shape {expect}")
        if float(np.max(_su2.algebra_defect(self.comps))) > 1e-9:
            raise ValueError("components must be anti-hermitian traceless")


@dataclass
class TangentVectorHiggs:
    """Linearized Higgs data on a uniform dual-torus grid: b anti-hermitian
    1-form components (2, n1, n2, 2, 2); phi the (1,0)-endomorphism
    coefficient (n1, n2, 2, 2), unconstrained in gl(2)."""
    b: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=complex)
        self.phi = np.asarray(self.phi, dtype=complex)
        if self.b.ndim != 5 or self.b.shape[0] != 2 \
                or self.b.shape[-2:] != (2, 2):
            raise ValueError("b must be (2, n1, n2, 2, 2)")
        if self.phi.shape != self.b.shape[1:]:
            raise ValueError("phi must be (n1, n2, 2, 2)")
        if float(np.max(_su2.algebra_defect(self.b, traceless=False))) > 1e-9:
            raise ValueError("b components must be anti-hermitian")


class AnnulusCalculus:
    """Discrete covariant calculus for a fixed connection on a fixed grid.

    Frame components throughout; the radial derivative is a polynomial
    differentiation matrix (use chebyshev grid spacing), periodic
    directions are Nyquist-zeroed spectral derivatives, and adjoints are
    exact transposes under the quadrature inner product."""

    def __init__(self, conn: ConnectionSource, grid: AnnulusGrid):
        if grid.r_min < conn.r_min or grid.r_max > conn.r_max:
            raise DomainError("grid exceeds the connection's domain")
        self.conn = conn
        self.grid = grid
        self.torus = conn.torus
        rs, ths = grid.rs, grid.thetas
        xs, ys = grid.xs(self.torus), grid.ys(self.torus)
        R, T, X, Y = np.meshgrid(rs, ths, xs, ys, indexing="ij")
        pts = np.stack([R, T, X, Y], axis=-1)
        A = np.asarray(conn.evaluate(pts), dtype=complex)
        A = np.moveaxis(A, -3, 0).copy()  # (4, n_r, n_t, n_x, n_y, 2, 2)
        A[1] = A[1] / R[None, ..., None, None][0]
        self.A = A
        self.rs = rs
        self.r_col = rs.reshape(-1, 1, 1, 1, 1, 1)
        self.Dr = differentiation_matrix(rs)
        self.wr = interpolatory_weights(rs, grid.r_min, grid.r_max)
        if np.any(self.wr <= 0):
            raise ValueError("radial quadrature weights must be positive; "
                             "use chebyshev spacing")
        self.w_radial = self.wr * rs  # includes the volume factor r
        self.w_angular = (TWO_PI / grid.n_theta) \
            * (self.torus.period_x / grid.n_x) \
            * (self.torus.period_y / grid.n_y)
        self.weight = self.w_radial.reshape(-1, 1, 1, 1) * self.w_angular

    # -- scalar building blocks ------------------------------------------

    def _dr(self, u):
        return np.einsum("ab,b...->a...", self.Dr, u)

    def _dr_adj(self, u):
        w = self.w_radial.reshape(-1, 1, 1, 1, 1, 1)
        return np.einsum("ba,b...->a...", self.Dr, w * u) / w

    def _dtheta(self, u):
        return fourier_diff(u, 0 + 1, TWO_PI) / self.r_col

    def _dx(self, u):
        return fourier_diff(u, 2, self.torus.period_x)

    def _dy(self, u):
        return fourier_diff(u, 3, self.torus.period_y)

    def _cov(self, i, u):
        plain = (self._dr, self._dtheta, self._dx, self._dy)[i](u)
        return plain + self.A[i] @ u - u @ self.A[i]

    def _cov_adj(self, i, u):
        if i == 0:
            plain = self._dr_adj(u)
        else:
            plain = -(None, self._dtheta, self._dx, self._dy)[i](u)
        return plain - (self.A[i] @ u - u @ self.A[i])

    # -- the operators -----------------------------------------------------

    def d0(self, u: np.ndarray) -> np.ndarray:
        """Covariant gradient of a section: (4, ...) frame components."""
        return np.stack([self._cov(i, u) for i in range(4)], axis=0)

    def dstar(self, a: np.ndarray) -> np.ndarray:
        """Exact adjoint of d0 under the quadrature inner product."""
        return sum(self._cov_adj(i, a[i]) for i in range(4))

    def d1(self, a: np.ndarray) -> np.ndarray:
        """Covariant exterior derivative, 6 frame components in the pair
        order of the curvature sample; includes the frame curvature term
        on the radial-angular slot."""
        out = []
        for k, (i, j) in enumerate(PAIRS):
            f = self._cov(i, a[j]) - self._cov(j, a[i])
            if (i, j) == (0, 1):
                f = f + a[1] / self.r_col
            out.append(f)
        return np.stack(out, axis=0)

    def sd_part(self, f6: np.ndarray) -> np.ndarray:
        return np.stack([(f6[0] + f6[5]) / 2.0,
                         (f6[1] - f6[4]) / 2.0,
                         (f6[2] + f6[3]) / 2.0], axis=0)

    def dplus(self, a: np.ndarray) -> np.ndarray:
        return self.sd_part(self.d1(a))

    # -- inner products ---------------------------------------------------

    def inner(self, a, b) -> float:
        """L2 pairing of stacked-slot fields of equal shape."""
        w = self.weight.reshape((1,) * (a.ndim - 6) + self.weight.shape)
        vals = np.real(np.einsum("...ij,...ij->...", a, np.conj(b)))
        return float(np.sum(w * vals))

    def norm(self, a) -> float:
        return math.sqrt(max(self.inner(a, a), 0.0))


def instanton_tangent_residual(conn: ConnectionSource,
                               a: TangentVectorInstanton,
                               calculus: AnnulusCalculus | None = None):
    """(gauge-fixing residual, linearized-equation residual): L2 norms of
    the covariant codifferential and of the self-dual part of the
    covariant exterior derivative of the tangent field."""
    calc = calculus or AnnulusCalculus(conn, a.grid)
    return calc.norm(calc.dstar(a.comps)), calc.norm(calc.dplus(a.comps))


def translation_tangent(conn: ConnectionSource, grid: AnnulusGrid,
                        direction=(1.0, 0.0)) -> TangentVectorInstanton:
    """Moduli direction from a plane translation: the curvature contracted
    with the translation vector field, in frame components."""
    rs, ths = grid.rs, grid.thetas
    xs, ys = grid.xs(conn.torus), grid.ys(conn.torus)
    R, T, X, Y = np.meshgrid(rs, ths, xs, ys, indexing="ij")
    pts = np.stack([R, T, X, Y], axis=-1)
    F = curvature(conn, pts).unit_frame()  # (..., 6, 2, 2)
    F = np.moveaxis(F, -3, 0)
    c1, c2 = direction
    vr = (c1 * np.cos(T) + c2 * np.sin(T))[..., None, None]
    vt = (-c1 * np.sin(T) + c2 * np.cos(T))[..., None, None]
    a_r = -vt * F[0]
    a_t = vr * F[0]
    a_x = vr * F[1] + vt * F[3]
    a_y = vr * F[2] + vt * F[4]
    comps = np.stack([a_r, a_t, a_x, a_y], axis=0)
    return TangentVectorInstanton(grid=grid, comps=comps, torus=conn.torus)


def random_tangent(grid: AnnulusGrid, torus: TorusSpec | None = None,
                   seed: int = 0, max_mode: int = 1,
                   compact_radial: bool = False) -> TangentVectorInstanton:
    """Smooth random tangent field: low Fourier modes in the periodic
    directions times a radial polynomial (optionally vanishing at both
    radial ends), with random su(2) directions."""
    torus = torus or TorusSpec()
    rng = np.random.default_rng(seed)
    rs, ths = grid.rs, grid.thetas
    xs, ys = grid.xs(torus), grid.ys(torus)
    R, T, X, Y = np.meshgrid(rs, ths, xs, ys, indexing="ij")
    t = 2.0 * (R - grid.r_min) / (grid.r_max - grid.r_min) - 1.0
    comps = np.zeros((4,) + R.shape + (2, 2), dtype=complex)
    for slot in range(4):
        f = np.zeros_like(R)
        for _ in range(3):
            p = rng.integers(-max_mode, max_mode + 1)
            n = rng.integers(-max_mode, max_mode + 1)
            m = rng.integers(-max_mode, max_mode + 1)
            phase = rng.uniform(0, TWO_PI)
            radial = np.polynomial.polynomial.polyval(
                t, rng.normal(size=3))
            if compact_radial:
                radial = radial * (1.0 - t ** 2)
            f = f + radial * np.cos(
                p * T + n * TWO_PI * X / torus.period_x
                + m * TWO_PI * Y / torus.period_y + phase)
        comps[slot] = f[..., None, None] * _su2.from_vector(rng.normal(size=3))
    return TangentVectorInstanton(grid=grid, comps=comps, torus=torus)


def apply_complex_structure(a: TangentVectorInstanton,
                            I: np.ndarray) -> TangentVectorInstanton:
    """Pointwise action of a constant complex structure on the form slots;
    an isometry of the L2 metric since the matrices are orthogonal. The
    frame components are rotated through Cartesian components ordered
    (z1, z2, w1, w2) = (torus-x, torus-y, plane-1, plane-2)."""
    ths = a.grid.thetas
    ct = np.cos(ths).reshape(1, -1, 1, 1, 1, 1)
    st = np.sin(ths).reshape(1, -1, 1, 1, 1, 1)
    ar, at, ax, ay = a.comps
    cart = np.stack([ax, ay, ct[0] * ar - st[0] * at,
                     st[0] * ar + ct[0] * at], axis=0)
    rot = np.einsum("ji,j...->i...", I, cart)
    bx, by, bw1, bw2 = rot
    br = ct[0] * bw1 + st[0] * bw2
    bt = -st[0] * bw1 + ct[0] * bw2
    return TangentVectorInstanton(
        grid=a.grid, comps=np.stack([br, bt, bx, by], axis=0), torus=a.torus)


def l2_metric(t1, t2, domain=None) -> float:
    """Symmetric positive-definite L2 pairing. For instanton tangents the
    domain is their grid (quadrature weights as in AnnulusCalculus); for
    Higgs tangents a uniform dual-torus grid with the (1,0)-form factor."""
    if isinstance(t1, TangentVectorInstanton):
        if not isinstance(t2, TangentVectorInstanton) \
                or t1.grid is not t2.grid and t1.grid != t2.grid:
            raise DomainError("instanton tangents must share a grid")
        g = t1.grid
        wr = interpolatory_weights(g.rs, g.r_min, g.r_max) * g.rs
        w_ang = (TWO_PI / g.n_theta) * (t1.torus.period_x / g.n_x) \
            * (t1.torus.period_y / g.n_y)
        w = wr.reshape(1, -1, 1, 1, 1) * w_ang
        vals = np.real(np.einsum("s...ij,s...ij->s...",
                                 t1.comps, np.conj(t2.comps)))
        return float(np.sum(w * vals))
    if isinstance(t1, TangentVectorHiggs):
        if not isinstance(t2, TangentVectorHiggs) \
                or t1.b.shape != t2.b.shape:
            raise DomainError("higgs tangents must share a grid")
        n1, n2 = t1.b.shape[1:3]
        w = 1.0 / (n1 * n2)
        vb = float(np.sum(np.real(t1.b * np.conj(t2.b))))
        vp = 2.0 * float(np.sum(np.real(t1.phi * np.conj(t2.phi))))
        return w * (vb + vp)
    raise TypeError("unsupported tangent types")


# ---------------------------------------------------------------------------
# Higgs side

def higgs_residual_components(B: np.ndarray, Phi: np.ndarray,
                              tangent: TangentVectorHiggs):
    """Raw linearized-condition fields for a Higgs background on a uniform
    unit-period dual-torus grid: (curvature-moment condition,
    holomorphicity condition, gauge-orthogonality condition)."""
    b, phi = tangent.b, tangent.phi
    B = np.asarray(B, dtype=complex)
    Phi = np.asarray(Phi, dtype=complex)
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(Phi))):
        raise ValueError("background touches a singular point")
    if B.shape != b.shape or Phi.shape != phi.shape:
        raise DomainError("background and tangent grids differ")

    def d1(u):
        return fourier_diff(u, 0, 1.0)

    def d2(u):
        return fourier_diff(u, 1, 1.0)

    def br(Xc, Yc):
        return Xc @ Yc - Yc @ Xc

    def dag(X):
        return np.conj(np.swapaxes(X, -1, -2))

    # (i) curvature moment: d_B b + [Phi, phi*] + [phi, Phi*] on the area slot
    c1 = d1(b[1]) - d2(b[0]) + br(B[0], b[1]) - br(B[1], b[0]) \
        - 2j * (br(Phi, dag(phi)) + br(phi, dag(Phi)))
    # (ii) holomorphicity: dbar_B phi + [b^(0,1), Phi]
    Bzbar = (B[0] + 1j * B[1]) / 2.0
    bzbar = (b[0] + 1j * b[1]) / 2.0
    c2 = (d1(phi) + 1j * d2(phi)) / 2.0 + br(Bzbar, phi) + br(bzbar, Phi)
    # (iii) gauge orthogonality: d_B* b + projection of [Phi*, phi]
    div = d1(b[0]) + d2(b[1]) + br(B[0], b[0]) + br(B[1], b[1])
    cross = br(dag(Phi), phi)
    c3 = -div + 2.0 * (cross - dag(cross)) / 2.0
    return c1, c2, c3


def higgs_tangent_residual(B: np.ndarray, Phi: np.ndarray,
                           tangent: TangentVectorHiggs):
    """L2 norms of the three linearized conditions; the third vanishes
    exactly when the tangent is L2-orthogonal to every infinitesimal gauge
    direction (d_B u, [Phi, u])."""
    c1, c2, c3 = higgs_residual_components(B, Phi, tangent)
    n1, n2 = tangent.phi.shape[:2]
    w = 1.0 / (n1 * n2)

    def nrm(c):
        return math.sqrt(w * float(np.sum(np.real(c * np.conj(c)))))

    return nrm(c1), nrm(c2), nrm(c3)


def higgs_gauge_direction(B: np.ndarray, Phi: np.ndarray,
                          u: np.ndarray) -> TangentVectorHiggs:
    """Infinitesimal gauge transformation by anti-hermitian u:
    b = d_B u, phi = [Phi, u]."""
    def br(Xc, Yc):
        return Xc @ Yc - Yc @ Xc

    b = np.stack([fourier_diff(u, 0, 1.0) + br(B[0], u),
                  fourier_diff(u, 1, 1.0) + br(B[1], u)], axis=0)
    phi = br(Phi, u)
    return TangentVectorHiggs(b=b, phi=phi)


# ---------------------------------------------------------------------------
# dimension formula and the charge-1 chart

def moduli_dimension(k: int) -> int:
    """Real dimension 8k - 4 of the instanton moduli space of charge k."""
    if k < 1:
        raise ValueError("no irreducible instantons below charge 1")
    return 8 * k - 4


@dataclass(frozen=True)
class K1Chart:
    """One-complex-parameter family of degree-1 rational maps
    f(w) = (w + b)/(c w + d) with f(0) and f'(0) fixed, together with the
    dimension record: torus factor (2 real) times the base plane (2 real)
    matches the charge-1 moduli dimension."""
    f0: complex
    fp0: complex

    def coefficients(self, c: complex):
        """(b, c, d) of the family member at parameter c."""
        c = complex(c)
        d = (1.0 - c * self.f0) / self.fp0
        if abs(d) < 1e-14:
            raise ValueError("degenerate parameter: denominator loses rank")
        b = self.f0 * d
        return b, c, d

    def evaluate(self, c: complex, w):
        b, cc, d = self.coefficients(c)
        w = np.asarray(w, dtype=complex)
        out = (w + b) / (cc * w + d)
        return out if out.ndim else complex(out)

    @property
    def record(self) -> dict:
        return {"complex_parameters": 1,
                "torus_real_dim": 2,
                "base_real_dim": 2,
                "total_real_dim": 4,
                "matches_dimension_formula": 4 == moduli_dimension(1)}


def k1_chart(f0: complex, fp0: complex) -> K1Chart:
    """Chart of the charge-1 moduli space: rational maps of degree 1 with
    value and derivative at the origin fixed; one complex parameter."""
    if abs(complex(fp0)) < 1e-14:
        raise ValueError("degenerate constraint: vanishing derivative "
                         "drops the map degree")
    return K1Chart(f0=complex(f0), fp0=complex(fp0))
