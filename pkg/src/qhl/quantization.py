"""Quantisation objects at a point of B_k: Bergman density, Fubini-Study
pullback, Toeplitz operators, kernel diagonals, the moment map and its
Hamiltonians.

All matrix objects live in the orthonormal frame of the chosen inner
product.  With a = frame section values at a node (reduced weight included)
and bhat = a's holomorphic z-derivative (weight times derivative of the
unreduced section), the pointwise objects are

    rho   = |a|^2
    mu    = conj(a) a^T / (4 pi rho)          (trace 1/(4 pi), rank one)
    gk    = (|bhat|^2 |a|^2 - |<bhat, a>|^2) / (pi |a|^4)   (omega_k density)
    H(A)  = a^T A conj(a) / (4 pi rho)
    dH(A) = [ (bhat^T A conj(a)) rho - (a^T A conj(a)) <bhat, a> ] / (4 pi rho^2)

where <u, v> = sum u conj(v).  Every reported scalar is invariant under a
unitary change of the orthonormal frame; `frame_unitary` exists to test it.
"""

from __future__ import annotations

import numpy as np

from .errors import BasePoint
from .fields import Field
from .sections import hilb, orthonormalize, weighted_tables

FOUR_PI = 4.0 * np.pi


class QuantizedState:
    """Immutable node tables for one (surface, basis, inner product)."""

    def __init__(self, surface, basis, gram=None, frame_unitary=None):
        self.surface = surface
        self.basis = basis
        self.k = basis.k
        self.dim = basis.dim
        raw_vals, raw_dz = weighted_tables(surface, basis)
        if gram is None:
            gram = hilb(surface, basis, values=raw_vals)
        self.gram = gram
        C = orthonormalize(gram)
        if frame_unitary is not None:
            C = C @ frame_unitary
        self.C = C
        self.A = raw_vals @ C
        phi_z = surface.phi_z()
        self.Bhat = raw_dz @ C + 0.5 * self.k * phi_z[:, None] * self.A
        self.rho = np.einsum("pa,pa->p", self.A, self.A.conj()).real
        if np.min(self.rho) <= 0.0:
            raise BasePoint(f"Bergman density min {np.min(self.rho):.3e} <= 0")
        s = np.einsum("pa,pa->p", self.Bhat, self.A.conj())
        b2 = np.einsum("pa,pa->p", self.Bhat, self.Bhat.conj()).real
        self.pair_ba = s
        self.gk = (b2 * self.rho - np.abs(s) ** 2) / (np.pi * self.rho**2)
        self.wfs = surface.rule.wchart * self.gk

    # -- pointwise scalars ---------------------------------------------------

    def bergman_density(self):
        """rho_k at the nodes (frame independent)."""
        return self.rho

    def fs_pullback(self):
        """(h_k weight, omega_k density) at the nodes."""
        return self.hk_weight(), self.gk

    def hk_weight(self):
        sur, X, Y = self.surface, self.surface.rule.X, self.surface.rule.Y
        if sur.is_torus:
            y = Y / sur.tau.imag
            phi = 2.0 * np.pi * sur.tau.imag * y**2
        else:
            phi = np.log(1.0 + X**2 + Y**2)
        if sur.is_perturbed:
            phi = phi + 2.0 * sur.epsilon * sur.psi(X, Y)
        return np.exp(-self.k * phi) / self.rho

    # -- matrix objects --------------------------------------------------------

    def toeplitz(self, f, mode="reference"):
        """Toeplitz matrix of f; `mode='fs'` uses the induced FS metric data."""
        fvals = f(self.surface.rule.X, self.surface.rule.Y) if isinstance(f, Field) else f
        if mode == "reference":
            w = self.surface.womega * fvals
            T = (self.A.conj().T * w) @ self.A
        else:
            w = self.surface.rule.wchart * self.gk / self.k * fvals / self.rho
            T = (self.A.conj().T * w) @ self.A
        return 0.5 * (T + T.conj().T)

    def q_matrix(self, f: Field, mode="reference"):
        """Derivative of Hilb along e^{4 pi t f}: Toeplitz of 4 pi k f + Lap f."""
        X, Y = self.surface.rule.X, self.surface.rule.Y
        fvals = f(X, Y)
        if mode == "reference":
            lap = self.surface.laplacian(f)
        else:
            lap = -(f.d(2, 0, X, Y) + f.d(0, 2, X, Y)) / (self.gk / self.k)
        return self.toeplitz(FOUR_PI * self.k * fvals + lap, mode=mode)

    def kernel_diagonal(self, f):
        """K_{f,k} at the nodes, contracted through the Toeplitz matrix."""
        T = self.toeplitz(f)
        return np.einsum("pa,ab,pb->p", self.A, T, self.A.conj()).real

    def kernel_diagonal_composed(self, f, g):
        """Diagonal of the kernel of T_f T_g (complex for f != g)."""
        T = self.toeplitz(f) @ self.toeplitz(g)
        out = np.einsum("pa,ab,pb->p", self.A, T, self.A.conj())
        return out

    def mu_node(self, p):
        """Moment-map value at node index p: rank-one, trace 1/(4 pi)."""
        v = self.A[p]
        rho = self.rho[p]
        if rho <= 0:
            raise BasePoint("mu at a base point")
        return np.outer(v.conj(), v) / (FOUR_PI * rho)

    def mu_bar(self):
        """Centre of mass: integral of mu against the FS volume omega_k."""
        w = self.wfs / (FOUR_PI * self.rho)
        return (self.A.conj().T * w) @ self.A

    def hamiltonian(self, Amat):
        """H(A) = tr(A mu) at the nodes."""
        e = np.einsum("pa,ab,pb->p", self.A, Amat, self.A.conj())
        return e.real / (FOUR_PI * self.rho)

    def dH(self, Amat):
        """Holomorphic chart derivative of H(A) at the nodes."""
        e0 = np.einsum("pa,ab,pb->p", self.A, Amat, self.A.conj())
        e1 = np.einsum("pa,ab,pb->p", self.Bhat, Amat, self.A.conj())
        return (e1 * self.rho - e0 * self.pair_ba) / (FOUR_PI * self.rho**2)

    def xi_pairing(self, Amat, Bmat, p):
        """Hermitian FS pairing (xi_A, xi_B) at node p.

        Closed form pinned against the pointwise identity
        4 pi H(A) H(B) + (xi_A, xi_B) = tr(A B mu); see the regression test.
        """
        v = self.A[p]
        n2 = float(np.sum(np.abs(v) ** 2))
        if n2 <= 0:
            raise BasePoint("xi pairing at a base point")
        w = v.conj()
        Aw, Bw = Amat @ w, Bmat @ w
        s1 = np.sum(Bw * Aw.conj())
        s2 = np.sum(Bw * w.conj())
        s3 = np.sum(w * Aw.conj())
        return (s1 * n2 - s2 * s3) / (FOUR_PI * n2 * n2)

    def tr_abmu(self, Amat, Bmat, p):
        """tr(A B mu) at node p, evaluated through mu directly."""
        return np.trace(Amat @ Bmat @ self.mu_node(p))

    # -- arbitrary-point evaluation (tests, finite differences) -----------------

    def eval_at(self, Amat, X, Y):
        """H(A) at arbitrary chart points."""
        vals, _ = weighted_tables_at(self.surface, self.basis, X, Y)
        a = vals @ self.C
        rho = np.einsum("pa,pa->p", a, a.conj()).real
        e = np.einsum("pa,ab,pb->p", a, Amat, a.conj())
        return e.real / (FOUR_PI * rho)

    def rho_at(self, X, Y):
        vals, _ = weighted_tables_at(self.surface, self.basis, X, Y)
        a = vals @ self.C
        return np.einsum("pa,pa->p", a, a.conj()).real


def weighted_tables_at(surface, basis, X, Y):
    """Like sections.weighted_tables but at explicit chart points."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    vals = basis.reduced_values(X, Y)
    dz = basis.reduced_dz(X, Y)
    if surface.is_perturbed:
        psi = surface.psi(X, Y)
        psi_z = 0.5 * (surface.psi.d(1, 0, X, Y) - 1j * surface.psi.d(0, 1, X, Y))
        w = np.exp(-basis.k * surface.epsilon * psi)
        dz = (dz - basis.k * surface.epsilon * psi_z[:, None] * vals) * w[:, None]
        vals = vals * w[:, None]
    return vals, dz


def random_hermitian(dim, rng, scale=1.0):
    M = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (M + M.conj().T)
