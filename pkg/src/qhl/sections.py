"""Holomorphic section bases of L^k and their L^2 Gram matrices.

Evaluators are stored in *reduced* form: section values carry the factor
e^{-k phi_base / 2}, which keeps every table O(1) at large k (the raw theta
values grow like e^{pi k Im(tau) y^2} and raw monomials like |z|^k).  The
pointwise pairing is conjugate-linear in the first slot,

    (s_a, s_b)(x) = conj(f_a) f_b e^{-k phi},

so Gram matrices satisfy G = C^{-*} C^{-1} for the Cholesky-based
orthonormalizer C (C* G C = 1).

Sphere sections are the monomials z^a, a = 0..k; torus sections are the
level-k theta series with characteristics j/k, j = 0..k-1, quasi-periodic
against the flat weight e^{-2 pi k Im(tau) y^2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularGram, TruncationTooSmall
from . import cache as cache_mod

TAIL_LIMIT = 1e-14
# keep lattice terms with Gaussian exponent above -40 log 10 (double floor)
TRUNC_EXPONENT = 40.0 * math.log(10.0)


@dataclass
class SectionBasis:
    """Explicit basis of H^0(X, L^k) with reduced evaluators."""

    kind: str  # "monomial" | "theta"
    k: int
    dim: int
    tau: complex = 1j
    truncation: int = 0

    def reduced_values(self, X, Y):
        raise NotImplementedError

    def reduced_dz(self, X, Y):
        raise NotImplementedError


class MonomialBasis(SectionBasis):
    """z^a on the sphere chart; reduced weight (1 + |z|^2)^{-k/2}."""

    def __init__(self, k):
        if k < 1:
            raise ValueError("need k >= 1")
        super().__init__(kind="monomial", k=k, dim=k + 1)

    def _zw(self, X, Y):
        z = np.asarray(X) + 1j * np.asarray(Y)
        return z, 1.0 / np.sqrt(1.0 + np.abs(z) ** 2)

    def reduced_values(self, X, Y):
        # z^a (1+|z|^2)^{-k/2}: bounded for a <= k, stable as cumulative z-powers
        z, w2 = self._zw(X, Y)
        out = np.empty((z.size, self.dim), dtype=complex)
        out[:, 0] = w2**self.k
        for a in range(1, self.dim):
            out[:, a] = out[:, a - 1] * z
        return out

    def reduced_dz(self, X, Y):
        # d/dz of z^a minus the weight correction (k/2) phi_z z^a, reduced:
        # [a - (k/2)|z|^2/(1+|z|^2)] z^(a-1) (1+|z|^2)^{-k/2}
        z, w2 = self._zw(X, Y)
        k = self.k
        corr = 0.5 * k * (np.abs(z) ** 2) * w2**2
        out = np.empty((z.size, self.dim), dtype=complex)
        out[:, 0] = -0.5 * k * np.conj(z) * w2 ** (k + 2)
        lead = w2**k  # z^(a-1) (1+|z|^2)^{-k/2} at a = 1
        for a in range(1, self.dim):
            out[:, a] = lead * (a - corr)
            lead = lead * z
        return out

    def raw_values(self, X, Y):
        z = np.asarray(X) + 1j * np.asarray(Y)
        return np.vander(z, self.dim, increasing=True)


class ThetaBasis(SectionBasis):
    """Level-k theta series on C/(Z + tau Z), reduced by e^{-pi k b y^2}."""

    def __init__(self, k, tau=1j, truncation=None):
        if k < 1:
            raise ValueError("need k >= 1")
        tau = complex(tau)
        b = tau.imag
        auto = math.ceil(math.sqrt(TRUNC_EXPONENT / (math.pi * k * b))) + 2
        trunc = int(truncation) if truncation is not None else auto
        tail = self.tail_bound(k, b, trunc)
        if tail > TAIL_LIMIT:
            raise TruncationTooSmall(
                f"truncation {trunc} leaves tail {tail:.2e} > {TAIL_LIMIT:.0e}"
            )
        super().__init__(kind="theta", k=k, dim=k, tau=tau, truncation=trunc)

    @staticmethod
    def tail_bound(k, b, trunc):
        # dropped terms have |m + y| >= trunc - 1 for y in [0,1); geometric tail
        q = math.exp(-math.pi * k * b)
        head = math.exp(-math.pi * k * b * (trunc - 1) ** 2)
        return 2.0 * head / (1.0 - q)

    def _lattice(self, X, Y):
        a, b = self.tau.real, self.tau.imag
        y = np.asarray(Y, dtype=float) / b
        x = np.asarray(X, dtype=float) - a * y
        return x, y

    def _terms(self, x, y, j):
        # weighted terms e^{-pi k b (m+y)^2} e^{i pi k (a m^2 + 2 m (x + a y))}
        a, b = self.tau.real, self.tau.imag
        k = self.k
        n = np.arange(-self.truncation, self.truncation + 1)
        m = n + j / k
        expo = -math.pi * k * b * (m[None, :] + y[:, None]) ** 2
        phase = math.pi * k * (
            a * (m**2)[None, :] + 2.0 * m[None, :] * (x + a * y)[:, None]
        )
        return m, np.exp(expo + 1j * phase)

    def reduced_values(self, X, Y):
        x, y = self._lattice(X, Y)
        out = np.empty((x.size, self.dim), dtype=complex)
        for j in range(self.dim):
            _, t = self._terms(x, y, j)
            out[:, j] = t.sum(axis=1)
        return out

    def reduced_dz(self, X, Y):
        # theta' brings 2 pi i k m; the reduced weight brings i pi k y
        x, y = self._lattice(X, Y)
        k = self.k
        out = np.empty((x.size, self.dim), dtype=complex)
        for j in range(self.dim):
            m, t = self._terms(x, y, j)
            out[:, j] = 1j * math.pi * k * (
                (2.0 * m[None, :] + y[:, None]) * t
            ).sum(axis=1)
        return out

    def raw_values(self, X, Y):
        _, y = self._lattice(X, Y)
        b = self.tau.imag
        w = np.exp(math.pi * self.k * b * y**2)
        return self.reduced_values(X, Y) * w[:, None]


def basis_for(surface, k, truncation=None):
    if surface.is_torus:
        return ThetaBasis(k, tau=surface.tau, truncation=truncation)
    return MonomialBasis(k)


def weighted_tables(surface, basis):
    """Node tables (values, dz) of sections reduced by the *full* weight.

    The perturbation contributes e^{-k eps psi} on top of the base weight,
    and its z-derivative -k eps psi_z enters the reduced dz table.
    """
    X, Y = surface.rule.X, surface.rule.Y
    vals = basis.reduced_values(X, Y)
    dz = basis.reduced_dz(X, Y)
    if surface.is_perturbed:
        psi = surface.psi(X, Y)
        psi_z = 0.5 * (surface.psi.d(1, 0, X, Y) - 1j * surface.psi.d(0, 1, X, Y))
        w = np.exp(-basis.k * surface.epsilon * psi)
        dz = (dz - basis.k * surface.epsilon * psi_z[:, None] * vals) * w[:, None]
        vals = vals * w[:, None]
    return vals, dz


def hilb(surface, basis, values=None):
    """L^2 Gram matrix G_ab = int (s_a, s_b) omega over the reference basis."""
    if values is None:
        values, _ = weighted_tables(surface, basis)
    w = surface.womega
    G = (values.conj().T * w) @ values
    G = 0.5 * (G + G.conj().T)
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularGram("Hilb Gram is not positive definite") from exc
    return G


def orthonormalize(G):
    """Cholesky-inverse change of basis C with C* G C = identity."""
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularGram("Gram not positive definite") from exc
    n = G.shape[0]
    return scipy.linalg.solve_triangular(L.conj().T, np.eye(n), lower=False)


def hilb_cached(surface, basis, cache_dir=None):
    """hilb() with a JSON cache keyed by the surface/basis fingerprint."""
    if cache_dir is None:
        return hilb(surface, basis)
    key = cache_mod.key_of(
        {
            "surface": list(map(str, surface.key())),
            "k": basis.k,
            "kind": basis.kind,
            "truncation": basis.truncation,
        }
    )
    hit = cache_mod.load(cache_dir, "gram", key)
    if hit is not None:
        return np.asarray(hit["re"]) + 1j * np.asarray(hit["im"])
    G = hilb(surface, basis)
    cache_mod.store(
        cache_dir, "gram", key, {"re": G.real.tolist(), "im": G.imag.tolist()}
    )
    return G
