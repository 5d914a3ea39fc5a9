"""Polarized complex curves: metric data, curvature, quadrature.

Conventions (pinned by the round sphere and the flat torus):

  * The Kahler form is written in the chart z = X + iY as omega = g dX dY,
    with density g = (d2/dz dzbar phi) / pi for the local potential phi.
  * Scalar curvature: S = -(1/g) * Lap_chart(log g), where Lap_chart is the
    Euclidean Laplacian d2/dX2 + d2/dY2.  Round sphere of area 1: S = 8*pi.
  * The metric Laplacian is positive: Lap f = -(1/g) * Lap_chart(f); on the
    area-1 flat square torus, Lap cos(2 pi x) = 4 pi^2 cos(2 pi x).
  * Perturbations enter through the potential, phi = phi_base + 2 eps psi,
    so the density is g = g_base + (eps/2 pi) * Lap_chart(psi).

Backends are complex dimension 1: the round/perturbed sphere in the
stereographic chart and the flat/perturbed torus C/(Z + tau Z) in lattice
coordinates.  All derivative data is analytic; finite differences appear
only in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import BadLattice, NonPositiveMetric
from .fields import ConstField, Field, SymField, perturbation_from_modes

SPHERE_ROUND = "sphere_round"
SPHERE_PERTURBED = "sphere_perturbed"
TORUS_FLAT = "torus_flat"
TORUS_PERTURBED = "torus_perturbed"

BACKENDS = (SPHERE_ROUND, SPHERE_PERTURBED, TORUS_FLAT, TORUS_PERTURBED)

DEFAULT_RESOLUTION = {"torus": 64, "sphere": 96}


@dataclass
class QuadratureRule:
    """Chart nodes with chart-Lebesgue weights.

    Torus: uniform M x M periodic grid over the lattice fundamental domain.
    Sphere: Gauss-Legendre in cos(theta) times a uniform azimuth grid.
    """

    X: np.ndarray
    Y: np.ndarray
    wchart: np.ndarray
    resolution: int
    # lattice coordinates (torus only)
    lx: np.ndarray | None = None
    ly: np.ndarray | None = None

    @property
    def n_nodes(self):
        return self.X.size


def torus_rule(tau, M):
    a, b = tau.real, tau.imag
    t = np.arange(M) / M
    lx, ly = np.meshgrid(t, t, indexing="ij")
    lx, ly = lx.ravel(), ly.ravel()
    X = lx + a * ly
    Y = b * ly
    w = np.full(lx.size, b / (M * M))
    return QuadratureRule(X, Y, w, M, lx=lx, ly=ly)


def sphere_rule(M, n_az=None):
    n_az = n_az or 2 * M
    u, wgl = np.polynomial.legendre.leggauss(M)
    r = np.sqrt((1.0 - u) / (1.0 + u))
    phi = 2.0 * math.pi * np.arange(n_az) / n_az
    R, PHI = np.meshgrid(r, phi, indexing="ij")
    W = np.meshgrid(wgl / (1.0 + u) ** 2, phi, indexing="ij")[0]
    X = (R * np.cos(PHI)).ravel()
    Y = (R * np.sin(PHI)).ravel()
    w = W.ravel() * (2.0 * math.pi / n_az)
    return QuadratureRule(X, Y, w, M)


def _sphere_base_density():
    x, y = SymField._x, SymField._y
    return SymField(1 / (sp.pi * (1 + x**2 + y**2) ** 2), name="g_round")


@dataclass
class KahlerSurface:
    """A polarized curve (X, L, h, omega) with unit-area omega."""

    backend: str
    tau: complex
    epsilon: float
    psi: Field | None
    rule: QuadratureRule
    psi_modes: list = field(default_factory=list)

    def __post_init__(self):
        if self.is_torus and self.tau.imag <= 0:
            raise BadLattice(f"Im tau must be positive, got {self.tau}")
        self._g_base = (
            ConstField(1.0 / self.tau.imag, name="g_flat")
            if self.is_torus
            else _sphere_base_density()
        )
        self._tables = {}
        g = self.g()
        if np.min(g) <= 0.0:
            raise NonPositiveMetric(
                f"metric density min {np.min(g):.3e} <= 0 at epsilon={self.epsilon}"
            )

    # -- basic structure ---------------------------------------------------

    @property
    def is_torus(self):
        return self.backend in (TORUS_FLAT, TORUS_PERTURBED)

    @property
    def is_perturbed(self):
        return self.epsilon != 0.0 and self.psi is not None

    def section_dim(self, k):
        """dim H^0(X, L^k): Riemann-Roch on a curve of degree-1 polarization."""
        return k + 1 if not self.is_torus else k

    def key(self):
        modes = tuple(tuple(sorted(m.items())) for m in self.psi_modes)
        return (
            self.backend,
            round(self.tau.real, 12),
            round(self.tau.imag, 12),
            round(self.epsilon, 12),
            modes,
            self.rule.resolution,
        )

    def refined(self, factor=2):
        return build_surface(
            self.backend,
            tau=self.tau,
            epsilon=self.epsilon,
            psi_modes=self.psi_modes,
            resolution=self.rule.resolution * factor,
        )

    # -- density and curvature tables --------------------------------------

    def g_d(self, ix, iy, X=None, Y=None):
        """Chart derivatives of the metric density (ix + iy <= 3)."""
        if X is None:
            X, Y = self.rule.X, self.rule.Y
        out = self._g_base.d(ix, iy, X, Y)
        if self.is_perturbed:
            out = out + (self.epsilon / (2.0 * math.pi)) * (
                self.psi.d(ix + 2, iy, X, Y) + self.psi.d(ix, iy + 2, X, Y)
            )
        return out

    def g(self, X=None, Y=None):
        if X is None and "g" in self._tables:
            return self._tables["g"]
        out = self.g_d(0, 0, X, Y)
        if X is None:
            self._tables["g"] = out
        return out

    def scalar_curvature(self, X=None, Y=None):
        """S = -(Lap_chart log g)/g; 8*pi on the round sphere, 0 flat."""
        if X is None and "S" in self._tables:
            return self._tables["S"]
        g = self.g_d(0, 0, X, Y)
        gx, gy = self.g_d(1, 0, X, Y), self.g_d(0, 1, X, Y)
        lap_g = self.g_d(2, 0, X, Y) + self.g_d(0, 2, X, Y)
        out = -(lap_g * g - gx * gx - gy * gy) / g**3
        if X is None:
            self._tables["S"] = out
        return out

    def scalar_curvature_grad(self, X=None, Y=None):
        """Chart gradient (S_X, S_Y); needs density derivatives to 3rd order."""
        if X is None and "dS" in self._tables:
            return self._tables["dS"]
        g = self.g_d(0, 0, X, Y)
        gx, gy = self.g_d(1, 0, X, Y), self.g_d(0, 1, X, Y)
        gxx, gxy, gyy = (
            self.g_d(2, 0, X, Y),
            self.g_d(1, 1, X, Y),
            self.g_d(0, 2, X, Y),
        )
        gxxx, gxxy = self.g_d(3, 0, X, Y), self.g_d(2, 1, X, Y)
        gxyy, gyyy = self.g_d(1, 2, X, Y), self.g_d(0, 3, X, Y)
        lap_g = gxx + gyy
        N = lap_g * g - gx * gx - gy * gy
        Nx = (gxxx + gxyy) * g + lap_g * gx - 2.0 * (gx * gxx + gy * gxy)
        Ny = (gxxy + gyyy) * g + lap_g * gy - 2.0 * (gx * gxy + gy * gyy)
        Sx = -Nx / g**3 + 3.0 * N * gx / g**4
        Sy = -Ny / g**3 + 3.0 * N * gy / g**4
        if X is None:
            self._tables["dS"] = (Sx, Sy)
        return Sx, Sy

    def phi_z(self, X=None, Y=None):
        """d/dz of the full potential (base plus perturbation part)."""
        if X is None:
            X, Y = self.rule.X, self.rule.Y
        if self.is_torus:
            base = -2j * math.pi * np.asarray(Y) / self.tau.imag
        else:
            base = (X - 1j * Y) / (1.0 + X**2 + Y**2)
        if self.is_perturbed:
            base = base + self.epsilon * (
                self.psi.d(1, 0, X, Y) - 1j * self.psi.d(0, 1, X, Y)
            )
        return base

    # -- differential operators ---------------------------------------------

    def laplacian(self, f: Field, X=None, Y=None):
        """Positive metric Laplacian of f."""
        at_nodes = X is None
        if at_nodes:
            X, Y = self.rule.X, self.rule.Y
        g = self.g() if at_nodes else self.g_d(0, 0, X, Y)
        return -(f.d(2, 0, X, Y) + f.d(0, 2, X, Y)) / g

    def lin_scalar_D(self, f: Field, X=None, Y=None):
        """Linearized scalar curvature D(f) = Lap^2 f - S Lap f (curve case)."""
        at_nodes = X is None
        if at_nodes:
            X, Y = self.rule.X, self.rule.Y
            g, S = self.g(), self.scalar_curvature()
            gx, gy = self.g_d(1, 0), self.g_d(0, 1)
            gxx, gyy = self.g_d(2, 0), self.g_d(0, 2)
        else:
            g, S = self.g_d(0, 0, X, Y), self.scalar_curvature(X, Y)
            gx, gy = self.g_d(1, 0, X, Y), self.g_d(0, 1, X, Y)
            gxx, gyy = self.g_d(2, 0, X, Y), self.g_d(0, 2, X, Y)
        h = 1.0 / g
        hx, hy = -gx / g**2, -gy / g**2
        lap_h = (2.0 * (gx * gx + gy * gy) - g * (gxx + gyy)) / g**3
        Lf = f.d(2, 0, X, Y) + f.d(0, 2, X, Y)
        Lfx = f.d(3, 0, X, Y) + f.d(1, 2, X, Y)
        Lfy = f.d(2, 1, X, Y) + f.d(0, 3, X, Y)
        LLf = f.d(4, 0, X, Y) + 2.0 * f.d(2, 2, X, Y) + f.d(0, 4, X, Y)
        lap2 = h * (lap_h * Lf + 2.0 * (hx * Lfx + hy * Lfy) + h * LLf)
        return lap2 + S * h * Lf

    def mabuchi_apply(self, f: Field, X=None, Y=None):
        """Hessian-of-Mabuchi operator: (D(f) + (dS, df))/2."""
        at_nodes = X is None
        D = self.lin_scalar_D(f, X, Y)
        if at_nodes:
            X, Y = self.rule.X, self.rule.Y
            g = self.g()
            Sx, Sy = self.scalar_curvature_grad()
        else:
            g = self.g_d(0, 0, X, Y)
            Sx, Sy = self.scalar_curvature_grad(X, Y)
        pair = (Sx * f.d(1, 0, X, Y) + Sy * f.d(0, 1, X, Y)) / g
        return 0.5 * (D + pair)

    # -- quadrature ----------------------------------------------------------

    @property
    def womega(self):
        if "womega" not in self._tables:
            self._tables["womega"] = self.rule.wchart * self.g()
        return self._tables["womega"]

    def integrate(self, values):
        """Integral against omega; `values` is a node array or a Field."""
        if isinstance(values, Field):
            values = values(self.rule.X, self.rule.Y)
        return float(np.sum(self.womega * values))

    def dirichlet_pair(self, f: Field, h: Field):
        """int (df, dh) omega via conformal invariance of the Dirichlet form."""
        X, Y = self.rule.X, self.rule.Y
        val = f.d(1, 0, X, Y) * h.d(1, 0, X, Y) + f.d(0, 1, X, Y) * h.d(0, 1, X, Y)
        return float(np.sum(self.rule.wchart * val))

    def l2_pair(self, fvals, hvals):
        return float(np.sum(self.womega * fvals * hvals))


def build_surface(backend, tau=1j, epsilon=0.0, psi_modes=None, resolution=None):
    """Construct a surface from config-level data, with positivity checked."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    tau = complex(tau)
    psi_modes = list(psi_modes or [])
    is_torus = backend in (TORUS_FLAT, TORUS_PERTURBED)
    if backend in (TORUS_FLAT, SPHERE_ROUND):
        epsilon, psi_modes = 0.0, []
    if is_torus:
        if tau.imag <= 0:
            raise BadLattice(f"Im tau must be positive, got {tau}")
        M = resolution or DEFAULT_RESOLUTION["torus"]
        rule = torus_rule(tau, M)
    else:
        M = resolution or DEFAULT_RESOLUTION["sphere"]
        rule = sphere_rule(M)
    psi = perturbation_from_modes(backend, psi_modes, tau=tau)
    return KahlerSurface(
        backend=backend,
        tau=tau,
        epsilon=float(epsilon),
        psi=psi,
        rule=rule,
        psi_modes=psi_modes,
    )
