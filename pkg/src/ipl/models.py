"""Model solutions on the annulus times torus and admissible perturbations.

The semisimple family is diagonal with complex monodromy exponent
zeta(w) = lambda + mu/w (holomorphic in w) and theta-holonomy exponent
alpha; the nilpotent model is the strictly-triangular Higgs pair
psi = N / (w ln r^2) with B = d + i diag(-1, 1) dtheta / ln r^2. Both are
defined as lifts of their Higgs pairs, so the reduction round trip is
exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _su2
from .gauge import ConnectionSource
from .geometry import TWO_PI, TorusSpec
from .hitchin import HiggsPairOnPlane, lift

SIGMA3 = np.diag([1.0 + 0.0j, -1.0 + 0.0j])
NILP = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
DIAG_MINUS_PLUS = np.diag([-1.0 + 0.0j, 1.0 + 0.0j])

DEFAULT_SEMISIMPLE_R_MIN = 1e-3
DEFAULT_NILPOTENT_R_MIN = math.sqrt(math.e)  # ln r^2 = 1


@dataclass(frozen=True)
class ModelParams:
    lam: complex = 0.0 + 0.0j
    mu: complex = 0.0 + 0.0j
    alpha: float = 0.0
    kind: str = "semisimple"

    def __post_init__(self):
        if self.kind not in ("semisimple", "nilpotent"):
            raise ValueError("kind must be 'semisimple' or 'nilpotent'")
        if not (-0.5 <= self.alpha < 0.5):
            raise ValueError("alpha must lie in [-1/2, 1/2)")

    @property
    def lambda12(self) -> tuple[float, float]:
        """Real exponents (lambda1, lambda2) with lambda = (l1 + i l2)/2."""
        return (2.0 * self.lam.real, 2.0 * self.lam.imag)

    @property
    def mu12(self) -> tuple[float, float]:
        return (2.0 * self.mu.real, 2.0 * self.mu.imag)

    def to_json(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "mu": [self.mu.real, self.mu.imag],
            "alpha": self.alpha,
            "kind": self.kind,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ModelParams":
        lam = d.get("lambda", [0.0, 0.0])
        mu = d.get("mu", [0.0, 0.0])
        return cls(lam=complex(lam[0], lam[1]), mu=complex(mu[0], mu[1]),
                   alpha=float(d.get("alpha", 0.0)),
                   kind=str(d.get("kind", "semisimple")))


def hitchin_model(params: ModelParams, torus: TorusSpec | None = None,
                  r_min: float | None = None) -> HiggsPairOnPlane:
    """Higgs pair of a model; closed-form fields and exact derivatives."""
    torus = torus or TorusSpec()
    if params.kind == "semisimple":
        r0 = DEFAULT_SEMISIMPLE_R_MIN if r_min is None else r_min
        if not r0 > 0:
            raise ValueError("semisimple model needs r_min > 0")
        lam, mu, alpha = params.lam, params.mu, params.alpha

        def evaluate_b(points):
            points = np.asarray(points, dtype=float)
            out = np.zeros(points.shape[:-1] + (2, 2, 2), dtype=complex)
            out[..., 1, :, :] = 1j * alpha * SIGMA3
            return out

        def derivative_b(points, axis):
            points = np.asarray(points, dtype=float)
            return np.zeros(points.shape[:-1] + (2, 2, 2), dtype=complex)

        def evaluate_psi(points):
            points = np.asarray(points, dtype=float)
            w = points[..., 0] * np.exp(1j * points[..., 1])
            return (lam + mu / w)[..., None, None] * SIGMA3

        def derivative_psi(points, axis):
            points = np.asarray(points, dtype=float)
            r = points[..., 0]
            w = r * np.exp(1j * points[..., 1])
            if axis == 0:
                coef = -mu / (w * r)
            else:
                coef = -1j * mu / w
            return coef[..., None, None] * SIGMA3

        name = "semisimple-higgs"
    else:
        r0 = DEFAULT_NILPOTENT_R_MIN if r_min is None else r_min
        if not r0 > 1.0:
            raise ValueError("nilpotent model needs r_min > 1")

        def evaluate_b(points):
            points = np.asarray(points, dtype=float)
            L = 2.0 * np.log(points[..., 0])
            out = np.zeros(points.shape[:-1] + (2, 2, 2), dtype=complex)
            out[..., 1, :, :] = (1j / L)[..., None, None] * DIAG_MINUS_PLUS
            return out

        def derivative_b(points, axis):
            points = np.asarray(points, dtype=float)
            out = np.zeros(points.shape[:-1] + (2, 2, 2), dtype=complex)
            if axis == 0:
                r = points[..., 0]
                L = 2.0 * np.log(r)
                coef = -2j / (r * L ** 2)
                out[..., 1, :, :] = coef[..., None, None] * DIAG_MINUS_PLUS
            return out

        def evaluate_psi(points):
            points = np.asarray(points, dtype=float)
            r = points[..., 0]
            w = r * np.exp(1j * points[..., 1])
            L = 2.0 * np.log(r)
            return (1.0 / (w * L))[..., None, None] * NILP

        def derivative_psi(points, axis):
            points = np.asarray(points, dtype=float)
            r = points[..., 0]
            w = r * np.exp(1j * points[..., 1])
            L = 2.0 * np.log(r)
            if axis == 0:
                coef = -(L + 2.0) / (w * r * L ** 2)
            else:
                coef = -1j / (w * L)
            return coef[..., None, None] * NILP

        name = "nilpotent-higgs"

    return HiggsPairOnPlane(
        evaluate_b=evaluate_b, evaluate_psi=evaluate_psi,
        derivative_b=derivative_b, derivative_psi=derivative_psi,
        torus=torus, r_min=r0, name=name,
        meta={"params": params.to_json()},
    )


def semisimple_model(params: ModelParams, torus: TorusSpec | None = None,
                     r_min: float | None = None) -> ConnectionSource:
    if params.kind != "semisimple":
        raise ValueError("params.kind must be 'semisimple'")
    conn = lift(hitchin_model(params, torus, r_min))
    conn.name = "semisimple-model"
    return conn


def nilpotent_model(torus: TorusSpec | None = None,
                    r_min: float | None = None) -> ConnectionSource:
    conn = lift(hitchin_model(ModelParams(kind="nilpotent"), torus, r_min))
    conn.name = "nilpotent-model"
    return conn


def model_connection(params: ModelParams, torus: TorusSpec | None = None,
                     r_min: float | None = None) -> ConnectionSource:
    if params.kind == "semisimple":
        return semisimple_model(params, torus, r_min)
    return nilpotent_model(torus, r_min)


# ---------------------------------------------------------------------------
# admissible perturbations

def _bump(u):
    """Smooth compactly supported bump on (-1, 1), max value 1 at 0."""
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui ** 2))
    return out


def _bump_deriv(u):
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui ** 2)) * (-2.0 * ui / (1.0 - ui ** 2) ** 2)
    return out


@dataclass(frozen=True)
class _PerturbTerm:
    component: int
    center: float
    width: float
    matrix: np.ndarray  # su(2), Frobenius norm 1
    modes: tuple
    phases: tuple


def perturb(conn: ConnectionSource, delta: float = 0.5, amplitude: float = 0.05,
            seed: int = 0, n_bumps: int = 6, r_lo: float = 5.0,
            r_hi: float = 600.0, max_mode: int = 2) -> ConnectionSource:
    """Adds a deterministic random perturbation with pointwise bound
    |a - a_base| <= amplitude * r^-(1+delta) and one derivative of matching
    decay: compactly supported radial bumps times torus/theta trig waves
    times unit su(2) directions. Exact derivatives, so the result stays in
    analytic mode when the base is."""
    if delta <= 0 or amplitude < 0:
        raise ValueError("need delta > 0 and amplitude >= 0")
    rng = np.random.default_rng(seed)
    centers = np.geomspace(r_lo, r_hi, n_bumps)
    Lx, Ly = conn.torus.period_x, conn.torus.period_y
    terms = []
    for rho in centers:
        for comp in range(4):
            v = rng.normal(size=3)
            mat = _su2.from_vector(v / (math.sqrt(2.0) * np.linalg.norm(v)))
            modes = tuple(int(k) for k in rng.integers(-max_mode, max_mode + 1, size=3))
            phases = tuple(float(p) for p in rng.uniform(0.0, TWO_PI, size=3))
            terms.append(_PerturbTerm(component=comp, center=float(rho),
                                      width=0.35 * float(rho), matrix=mat,
                                      modes=modes, phases=phases))

    half_amp = amplitude / 2.0

    def _angular(points, term, want_derivs=False):
        th, x, y = points[..., 1], points[..., 2], points[..., 3]
        p, n, m = term.modes
        kx, ky = TWO_PI * n / Lx, TWO_PI * m / Ly
        f0 = np.cos(p * th + term.phases[0])
        f1 = np.cos(kx * x + term.phases[1])
        f2 = np.cos(ky * y + term.phases[2])
        if not want_derivs:
            return f0 * f1 * f2
        d0 = -p * np.sin(p * th + term.phases[0]) * f1 * f2
        d1 = -kx * np.sin(kx * x + term.phases[1]) * f0 * f2
        d2 = -ky * np.sin(ky * y + term.phases[2]) * f0 * f1
        return f0 * f1 * f2, d0, d1, d2

    def _radial(points, term, want_deriv=False):
        r = points[..., 0]
        u = (r - term.center) / term.width
        env = r ** (-(1.0 + delta))
        g = _bump(u) * env
        if not want_deriv:
            return g
        dg = (_bump_deriv(u) / term.width) * env + _bump(u) * (
            -(1.0 + delta)) * r ** (-(2.0 + delta))
        return g, dg

    base_eval, base_deriv = conn.evaluate, conn.derivative

    def evaluate(points):
        points = np.asarray(points, dtype=float)
        out = np.array(base_eval(points), copy=True)
        for term in terms:
            g = _radial(points, term)
            c = _angular(points, term)
            out[..., term.component, :, :] += (
                half_amp * (g * c)[..., None, None] * term.matrix)
        return out

    derivative = None
    if base_deriv is not None:
        def derivative(points, axis):
            points = np.asarray(points, dtype=float)
            out = np.array(base_deriv(points, axis), copy=True)
            for term in terms:
                if axis == 0:
                    _, dg = _radial(points, term, want_deriv=True)
                    c = _angular(points, term)
                    coef = dg * c
                else:
                    g = _radial(points, term)
                    cd = _angular(points, term, want_derivs=True)
                    coef = g * cd[axis]
                out[..., term.component, :, :] += (
                    half_amp * coef[..., None, None] * term.matrix)
            return out

    return ConnectionSource(
        evaluate=evaluate, torus=conn.torus, derivative=derivative,
        r_min=conn.r_min, r_max=conn.r_max, grid=conn.grid,
        name=f"{conn.name}+perturbation",
        meta={**conn.meta, "perturbation": {"delta": delta,
                                            "amplitude": amplitude,
                                            "seed": seed}},
    )
