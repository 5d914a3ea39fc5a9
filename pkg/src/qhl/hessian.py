"""The Hessian of balancing energy as a bilinear form on Hermitian matrices.

For Hermitian A, B the form value is

    pp(A, B) = Re tr(A B mubar)
               - 4 pi int H(A) H(B) omega_k
               - int (dH(A), dH(B)) omega_k

with every integral against the induced Fubini-Study form omega_k and the
Dirichlet term evaluated through conformal invariance (curve case): its
integrand is 4 Re(dH(A) conj(dH(B))) against the chart Lebesgue weights.

Because mubar and both integrals share one quadrature rule, the discrete
form annihilates the identity exactly and is positive semidefinite up to
rounding: pointwise, Re tr(A^2 mu) - 4 pi H(A)^2 is the full FS norm of the
generating field and the Dirichlet integrand is its tangential part.

The form matrix is assembled in the trace-orthonormal Hermitian frame
(diagonal units, symmetric and antisymmetric root pairs), whose eigenpairs
are therefore the operator eigenpairs of P*P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfBudget

FOUR_PI = 4.0 * np.pi
DENSE_CAP = 4096
CLUSTER_GAP = 1e-3


class HermitianFrame:
    """Trace-orthonormal real basis of the Hermitian matrices of size d.

    Order: E_aa (a = 0..d-1), then (E_ab + E_ba)/sqrt2 for a < b, then
    i(E_ab - E_ba)/sqrt2 for a < b.
    """

    def __init__(self, d):
        self.d = d
        self.dim = d * d
        iu = np.triu_indices(d, k=1)
        self.rows, self.cols = iu
        self.n_off = self.rows.size

    def to_matrix(self, coeffs):
        d = self.d
        A = np.zeros((d, d), dtype=complex)
        A[np.arange(d), np.arange(d)] = coeffs[:d]
        sym = coeffs[d : d + self.n_off] / np.sqrt(2.0)
        anti = coeffs[d + self.n_off :] / np.sqrt(2.0)
        A[self.rows, self.cols] = sym + 1j * anti
        A[self.cols, self.rows] = sym - 1j * anti
        return A

    def coeffs(self, A):
        d = self.d
        out = np.empty(self.dim)
        out[:d] = np.diag(A).real
        off = A[self.rows, self.cols]
        out[d : d + self.n_off] = np.sqrt(2.0) * off.real
        out[d + self.n_off :] = np.sqrt(2.0) * off.imag
        return out

    def identity_coeffs(self):
        out = np.zeros(self.dim)
        out[: self.d] = 1.0
        return out

    def pack(self, nodeval):
        """Pack per-node d x d tables M[p,a,b] into frame features tr(E_i M^T)...

        For a table of pointwise sesquilinear data M[p,a,b] (e.g. the moment
        map), returns F[p,i] = sum_ab (E_i)_ab M[p,b,a].
        """
        d = self.d
        n = nodeval.shape[0]
        F = np.empty((n, self.dim), dtype=nodeval.dtype)
        F[:, :d] = nodeval[:, np.arange(d), np.arange(d)]
        upper = nodeval[:, self.cols, self.rows]
        lower = nodeval[:, self.rows, self.cols]
        F[:, d : d + self.n_off] = (upper + lower) / np.sqrt(2.0)
        F[:, d + self.n_off :] = 1j * (lower - upper) / np.sqrt(2.0)
        return F


def pp_pair(state, Amat, Bmat):
    """Single form value from Proposition-style three-term evaluation."""
    mubar = state.mu_bar()
    t1 = np.trace(Amat @ Bmat @ mubar).real
    HA, HB = state.hamiltonian(Amat), state.hamiltonian(Bmat)
    t2 = FOUR_PI * float(np.sum(state.wfs * HA * HB))
    dA, dB = state.dH(Amat), state.dH(Bmat)
    t3 = 4.0 * float(np.sum(state.surface.rule.wchart * (dA * dB.conj()).real))
    return t1 - t2 - t3


@dataclass
class HessianForm:
    matrix: np.ndarray
    frame: HermitianFrame
    k: int
    state: object


@dataclass
class SpectralReport:
    k: int
    nus: np.ndarray
    vectors: np.ndarray  # columns are frame coefficient vectors
    frame: HermitianFrame
    clusters: list

    @property
    def scaled(self):
        return 64.0 * np.pi**3 * self.k**2 * self.nus

    def eigen_matrix(self, j):
        return self.frame.to_matrix(self.vectors[:, j])

    def to_json_dict(self):
        bounds = [c[0] for c in self.clusters] + [self.clusters[-1][1]]
        return {
            "k": self.k,
            "eigenvalues": self.nus.tolist(),
            "scaled_64pi3k2": self.scaled.tolist(),
            "cluster_boundaries": bounds,
        }


def assemble_form(state, cap=DENSE_CAP, chunk=2048):
    """Dense symmetric matrix of the balancing-energy Hessian form."""
    d = state.dim
    frame = HermitianFrame(d)
    D = frame.dim
    if D > cap:
        raise OutOfBudget(f"form dimension {D} exceeds cap {cap}")
    n = state.A.shape[0]
    Hgram = np.zeros((D, D))
    Dir = np.zeros((D, D))
    wchart = state.surface.rule.wchart
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        a = state.A[lo:hi]
        b = state.Bhat[lo:hi]
        rho = state.rho[lo:hi]
        s = state.pair_ba[lo:hi]
        # mu features: tr(E_i mu(p)) packs conj(a) x a / (4 pi rho)
        Oa = a[:, None, :] * a.conj()[:, :, None]  # [p, row a, col b] = a_b conj(a)_a
        Phi = frame.pack(np.transpose(Oa, (0, 2, 1))).real / (FOUR_PI * rho[:, None])
        # e1 features: bhat^T E conj(a)
        Ob = b[:, :, None] * a.conj()[:, None, :]  # [p, g, d] = bhat_g conj(a)_d
        E1 = frame.pack(Ob)
        Psi = (E1 - (FOUR_PI * Phi) * s[:, None]) / (FOUR_PI * rho[:, None])
        wfs = state.wfs[lo:hi]
        Hgram += (Phi * wfs[:, None]).T @ Phi
        wl = wchart[lo:hi]
        Dir += 4.0 * ((Psi * wl[:, None]).conj().T @ Psi).real
    mubar = state.mu_bar()
    Omu = _mubar_term(frame, mubar)
    M = Omu - FOUR_PI * Hgram - Dir
    M = 0.5 * (M + M.T)
    return HessianForm(matrix=M, frame=frame, k=state.k, state=state)


def _mubar_term(frame, mubar):
    """O_ij = Re tr(E_i E_j mubar) over the Hermitian frame."""
    d = frame.d
    D = frame.dim
    Eten = np.zeros((D, d, d), dtype=complex)
    idx = np.arange(d)
    Eten[idx, idx, idx] = 1.0
    r = np.arange(frame.n_off)
    Eten[d + r, frame.rows, frame.cols] = 1.0 / np.sqrt(2.0)
    Eten[d + r, frame.cols, frame.rows] = 1.0 / np.sqrt(2.0)
    Eten[d + frame.n_off + r, frame.rows, frame.cols] = 1j / np.sqrt(2.0)
    Eten[d + frame.n_off + r, frame.cols, frame.rows] = -1j / np.sqrt(2.0)
    T1 = Eten @ mubar  # [j, b, a] = sum_c E_j[b, c] mubar[c, a]
    Evec = Eten.reshape(D, d * d)
    T1T = np.transpose(T1, (0, 2, 1)).reshape(D, d * d)
    return (Evec @ T1T.T).real


def pp_spectrum(form: HessianForm):
    """All eigenpairs, ascending, with near-degenerate clusters grouped."""
    nus, vecs = np.linalg.eigh(form.matrix)
    clusters = []
    start = 0
    scale = max(abs(nus[-1]), 1e-300)
    for j in range(1, nus.size + 1):
        if j == nus.size or (nus[j] - nus[j - 1]) > CLUSTER_GAP * max(
            abs(nus[j]), scale * 1e-9
        ):
            clusters.append((start, j))
            start = j
    return SpectralReport(
        k=form.k, nus=nus, vectors=vecs, frame=form.frame, clusters=clusters
    )


def eigenvector_functions(state, report, r):
    """(nu_j, H(A_j) at nodes) for j <= r, with tr(A_j^2) = 16 pi^2 k."""
    scale = np.sqrt(16.0 * np.pi**2 * state.k)
    out = []
    for j in range(r + 1):
        A = report.eigen_matrix(j) * scale
        out.append((report.nus[j], state.hamiltonian(A), A))
    return out


def lambda_k_lower_bound(report):
    """1/nu_1: certified growth lower bound for the operator-norm ratio."""
    return 1.0 / report.nus[1]
