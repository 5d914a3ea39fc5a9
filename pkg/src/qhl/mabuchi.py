"""Galerkin spectrum of the Mabuchi-energy Hessian.

The operator is assembled in weak form, which needs only second chart
derivatives of the basis:

    2 <f, Hess g> = <Lap f, Lap g> - <S f, Lap g> + <f, (dS, dg)>,

all pairings in L^2(omega).  The first term uses self-adjointness of the
Laplacian; the sum of the last two is symmetric for the continuum operator,
so the assembled matrix is symmetrized after a defect check.

Bases: realified Fourier modes on the torus (closed-form derivatives) and
real spherical harmonics on approx sphere (Legendre-derivative recurrences plus
the stereographic chain rule).  The constant function is always entry 0 and
is deflated from the pencil rather than trusted to the solver; lambda_0 = 0
with the constant eigenfunction is prepended to the reported spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IllConditioned

DEFAULT_N = {"torus": 12, "sphere": 16}
CLUSTER_GAP = 1e-3
COND_LIMIT = 1e12


class TorusGalerkin:
    """Realified Fourier modes exp(2 pi i (m x + n y)), |m|, |n| <= N."""

    def __init__(self, surface, N=None):
        self.surface = surface
        self.N = N or DEFAULT_N["torus"]
        modes = [(0, 0, "cos")]
        for m in range(0, self.N + 1):
            for n in range(-self.N, self.N + 1):
                if m == 0 and n <= 0:
                    continue
                modes.append((m, n, "cos"))
                modes.append((m, n, "sin"))
        self.modes = modes
        self.dim = len(modes)
        self.const_index = 0

    def tables(self, X, Y):
        """B, Bx, By, LB arrays of shape (dim, len(X)) in chart coordinates."""
        tau = self.surface.tau
        a, b = tau.real, tau.imag
        y = np.asarray(Y, dtype=float) / b
        x = np.asarray(X, dtype=float) - a * y
        n_pts = x.size
        B = np.empty((self.dim, n_pts))
        Bx = np.empty_like(B)
        By = np.empty_like(B)
        LB = np.empty_like(B)
        two_pi = 2.0 * math.pi
        for i, (m, n, kind) in enumerate(self.modes):
            th = two_pi * (m * x + n * y)
            # chart frequencies: d/dX = 2 pi m, d/dY = 2 pi (n - a m)/b
            wx = two_pi * m
            wy = two_pi * (n - a * m) / b
            if kind == "cos":
                c, s = np.cos(th), np.sin(th)
                B[i], Bx[i], By[i] = c, -wx * s, -wy * s
                LB[i] = -(wx * wx + wy * wy) * c
            else:
                c, s = np.cos(th), np.sin(th)
                B[i], Bx[i], By[i] = s, wx * c, wy * c
                LB[i] = -(wx * wx + wy * wy) * s
        return B, Bx, By, LB


def _legendre_tables(c, N, m_max):
    """Q[l][m] = d^m P_l / dt^m at points c, for l <= N, m <= m_max."""
    Q = [[None] * (m_max + 1) for _ in range(N + 1)]
    Q[0][0] = np.ones_like(c)
    if N >= 1:
        Q[1][0] = c.copy()
        if m_max >= 1:
            Q[1][1] = np.ones_like(c)
    for l in range(2, N + 1):
        for m in range(0, min(l, m_max) + 1):
            prev = Q[l - 1][m] if m <= l - 1 else None
            t1 = c * prev if prev is not None else 0.0
            t2 = m * Q[l - 1][m - 1] if (m >= 1 and m - 1 <= l - 1) else 0.0
            t3 = Q[l - 2][m] if m <= l - 2 else 0.0
            Q[l][m] = ((2 * l - 1) * (t1 + t2) - (l - 1) * t3) / (l - m)
    for l in range(N + 1):
        for m in range(min(l, m_max) + 1):
            if Q[l][m] is None:
                Q[l][m] = np.zeros_like(c)
    return Q


class SphereGalerkin:
    """Real spherical harmonics of degree <= N in the stereographic chart."""

    def __init__(self, surface, N=None):
        self.surface = surface
        self.N = N or DEFAULT_N["sphere"]
        modes = []
        for l in range(self.N + 1):
            for m in range(-l, l + 1):
                modes.append((l, m))
        self.modes = modes
        self.dim = len(modes)
        self.const_index = 0  # (0, 0)

    def tables(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        D = 1.0 + X**2 + Y**2
        c = (1.0 - X**2 - Y**2) / D
        zeta = (2.0 * X + 2j * Y) / D
        # chart derivatives of c and zeta
        D2, D3 = D**2, D**3
        cx, cy = -4.0 * X / D2, -4.0 * Y / D2
        cxx = -4.0 / D2 + 16.0 * X**2 / D3
        cyy = -4.0 / D2 + 16.0 * Y**2 / D3
        w = X + 1j * Y
        zx = 2.0 / D - 4.0 * X * w / D2
        zy = 2j / D - 4.0 * Y * w / D2
        zxx = (-12.0 * X - 4j * Y) / D2 + 16.0 * X**2 * w / D3
        zyy = (-4.0 * X - 12j * Y) / D2 + 16.0 * Y**2 * w / D3

        N = self.N
        Q = _legendre_tables(c, N, min(N, N) + 2)
        # powers of zeta up to N
        zp = [np.ones_like(zeta)]
        for _ in range(N):
            zp.append(zp[-1] * zeta)

        n_pts = X.size
        B = np.empty((self.dim, n_pts))
        Bx = np.empty_like(B)
        By = np.empty_like(B)
        LB = np.empty_like(B)
        for i, (l, m) in enumerate(self.modes):
            am = abs(m)
            norm = math.sqrt(
                (2 * l + 1) * math.factorial(l - am) / math.factorial(l + am)
            )
            if m != 0:
                norm *= math.sqrt(2.0)
            q0 = Q[l][am]
            q1 = Q[l][am + 1] if am + 1 <= l else np.zeros_like(c)
            q2 = Q[l][am + 2] if am + 2 <= l else np.zeros_like(c)
            if am == 0:
                W = np.ones_like(zeta)
                Wx = Wy = Wxx = Wyy = np.zeros_like(zeta)
            else:
                W = zp[am]
                zm1 = zp[am - 1]
                zm2 = zp[am - 2] if am >= 2 else np.zeros_like(zeta)
                Wx, Wy = am * zm1 * zx, am * zm1 * zy
                Wxx = am * (am - 1) * zm2 * zx**2 + am * zm1 * zxx
                Wyy = am * (am - 1) * zm2 * zy**2 + am * zm1 * zyy
            part = (lambda u: u.real) if m >= 0 else (lambda u: u.imag)
            B[i] = norm * part(W) * q0
            Bx[i] = norm * (part(Wx) * q0 + part(W) * q1 * cx)
            By[i] = norm * (part(Wy) * q0 + part(W) * q1 * cy)
            LB[i] = norm * (
                part(Wxx + Wyy) * q0
                + 2.0 * (part(Wx) * cx + part(Wy) * cy) * q1
                + part(W) * (q2 * (cx**2 + cy**2) + q1 * (cxx + cyy))
            )
        return B, Bx, By, LB


def galerkin_basis(surface, N=None):
    if surface.is_torus:
        return TorusGalerkin(surface, N)
    return SphereGalerkin(surface, N)


def assemble_mabuchi(surface, basis, chunk=4096):
    """Weak-form stiffness and mass matrices; returns (K, M, presym_defect)."""
    D = basis.dim
    K = np.zeros((D, D))
    M = np.zeros((D, D))
    Xn, Yn = surface.rule.X, surface.rule.Y
    g = surface.g()
    S = surface.scalar_curvature()
    Sx, Sy = surface.scalar_curvature_grad()
    wom = surface.womega
    n = Xn.size
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        B, Bx, By, LB = basis.tables(Xn[lo:hi], Yn[lo:hi])
        gc = g[lo:hi]
        w = wom[lo:hi]
        lap = -LB / gc  # metric Laplacian
        M += (B * w) @ B.T
        K += 0.5 * ((lap * w) @ lap.T)
        K -= 0.5 * ((B * (w * S[lo:hi])) @ lap.T)
        K += 0.5 * ((B * w) @ ((Sx[lo:hi] * Bx + Sy[lo:hi] * By) / gc).T)
    defect = np.linalg.norm(K - K.T) / max(np.linalg.norm(K), 1e-300)
    K = 0.5 * (K + K.T)
    if np.linalg.cond(M) > COND_LIMIT:
        raise IllConditioned(f"mass matrix condition {np.linalg.cond(M):.2e}")
    return K, M, defect


@dataclass
class MabuchiSpectrum:
    surface: object
    basis: object
    lambdas: np.ndarray
    coeffs: np.ndarray  # columns: coefficient vectors in the full basis
    clusters: list = field(default_factory=list)

    def cluster_of(self, j):
        for (lo, hi) in self.clusters:
            if lo <= j < hi:
                return (lo, hi)
        raise IndexError(j)

    def eigenfunction_values(self, js, X=None, Y=None):
        if X is None:
            X, Y = self.surface.rule.X, self.surface.rule.Y
        B = self.basis.tables(X, Y)[0]
        return self.coeffs[:, js].T @ B

    def to_json_dict(self):
        mult = [hi - lo for (lo, hi) in self.clusters]
        return {
            "backend": self.surface.backend,
            "epsilon": self.surface.epsilon,
            "lambda": self.lambdas.tolist(),
            "multiplicities": mult,
            "basis_N": self.basis.N,
        }


def mabuchi_spectrum(surface, basis, K, M, count):
    """Lowest eigenpairs with the constant function deflated exactly."""
    D = basis.dim
    ci = basis.const_index
    e = np.zeros(D)
    e[ci] = 1.0
    Me = M @ e
    denom = float(e @ Me)
    others = [i for i in range(D) if i != ci]
    W = np.zeros((D, D - 1))
    for col, i in enumerate(others):
        W[i, col] = 1.0
        W[ci, col] = -Me[i] / denom  # M-orthogonal to constants
    Kr = W.T @ K @ W
    Mr = W.T @ M @ W
    count = min(count, D - 1)
    vals, vecs = scipy.linalg.eigh(Kr, Mr, subset_by_index=(0, count - 1))
    lambdas = np.concatenate([[0.0], vals])
    coeffs = np.zeros((D, count + 1))
    coeffs[ci, 0] = 1.0 / math.sqrt(denom)
    full = W @ vecs
    # L2-normalize
    for j in range(count):
        v = full[:, j]
        nrm = math.sqrt(float(v @ M @ v))
        coeffs[:, j + 1] = v / nrm
    clusters = []
    start = 0
    scale = max(abs(lambdas[-1]), 1.0)
    for j in range(1, lambdas.size + 1):
        if j == lambdas.size or (lambdas[j] - lambdas[j - 1]) > CLUSTER_GAP * max(
            abs(lambdas[j]), 1e-9 * scale
        ):
            clusters.append((start, j))
            start = j
    return MabuchiSpectrum(
        surface=surface, basis=basis, lambdas=lambdas, coeffs=coeffs, clusters=clusters
    )


def project_onto_eigenspace(spec: MabuchiSpectrum, fvals, cluster):
    """L^2(omega)-projection of node values onto a cluster's eigenspace."""
    lo, hi = cluster
    js = list(range(lo, hi))
    F = spec.eigenfunction_values(js)
    w = spec.surface.womega
    coeffs = F @ (w * fvals)
    return coeffs @ F, coeffs
