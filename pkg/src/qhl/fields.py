"""Smooth test functions with analytic chart derivatives.

Every field evaluates partial derivatives d^i/dX^i d^j/dY^j at chart points
(X, Y).  The chart is the z-plane: z = X + iY.  On the torus, functions are
specified in lattice coordinates (x, y) of the fundamental domain [0,1)^2,
with z = x + tau*y; the lattice-to-chart chain rule is linear with constant
coefficients, so all chart derivatives stay closed-form.  On the sphere the
chart is the stereographic coordinate and fields are sympy expressions with
lambdified derivatives, built once and cached.

Derivatives up to 4th order are required by the fourth-order operators; the
perturbation potential additionally needs 5th order (for dS).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import sympy as sp

TWO_PI = 2.0 * math.pi


class Field:
    """Scalar function on the chart with analytic partial derivatives."""

    name = "field"

    def d(self, ix, iy, X, Y):
        raise NotImplementedError

    def __call__(self, X, Y):
        return self.d(0, 0, X, Y)


class ConstField(Field):
    def __init__(self, value=1.0, name=None):
        self.value = float(value)
        self.name = name or f"const({value})"

    def d(self, ix, iy, X, Y):
        X = np.asarray(X, dtype=float)
        if ix == 0 and iy == 0:
            return np.full(X.shape, self.value)
        return np.zeros(X.shape)


class FieldSum(Field):
    def __init__(self, parts, coeffs=None, name=None):
        self.parts = list(parts)
        self.coeffs = [1.0] * len(self.parts) if coeffs is None else list(coeffs)
        self.name = name or "+".join(p.name for p in self.parts)

    def d(self, ix, iy, X, Y):
        out = self.coeffs[0] * self.parts[0].d(ix, iy, X, Y)
        for c, p in zip(self.coeffs[1:], self.parts[1:]):
            out = out + c * p.d(ix, iy, X, Y)
        return out


class TorusFourier(Field):
    """cos/sin(2*pi*(m x + n y)) in lattice coordinates of C/(Z + tau Z).

    Chart derivatives come from the constant linear map (X, Y) -> (x, y):
    x = X - (a/b) Y, y = Y / b with tau = a + ib.
    """

    def __init__(self, m, n, kind="cos", tau=1j, name=None):
        if kind not in ("cos", "sin"):
            raise ValueError(f"kind must be cos or sin, got {kind!r}")
        self.m = int(m)
        self.n = int(n)
        self.kind = kind
        self.tau = complex(tau)
        self.name = name or f"{kind}2pi({m}x{n:+d}y)"

    def _lattice(self, X, Y):
        a, b = self.tau.real, self.tau.imag
        y = np.asarray(Y, dtype=float) / b
        x = np.asarray(X, dtype=float) - (a / b) * y
        return x, y

    def _lattice_d(self, px, py, x, y):
        # d^px/dx^px d^py/dy^py of cos or sin(2 pi (m x + n y)):
        # each derivative multiplies by the frequency and advances the phase
        # by a quarter period.
        amp = (TWO_PI * self.m) ** px * (TWO_PI * self.n) ** py
        phase = TWO_PI * (self.m * x + self.n * y) + (px + py) * (math.pi / 2.0)
        if self.kind == "cos":
            return amp * np.cos(phase)
        return amp * np.sin(phase)

    def d(self, ix, iy, X, Y):
        x, y = self._lattice(X, Y)
        a, b = self.tau.real, self.tau.imag
        c, e = -a / b, 1.0 / b
        # d/dX = d/dx ; d/dY = c d/dx + e d/dy, both with constant coefficients
        out = 0.0
        for r in range(iy + 1):
            w = math.comb(iy, r) * (c ** r) * (e ** (iy - r))
            if w != 0.0:
                out = out + w * self._lattice_d(ix + r, iy - r, x, y)
        return out


class SymField(Field):
    """Field backed by a sympy expression in chart symbols x, y."""

    _x, _y = sp.symbols("x y", real=True)

    def __init__(self, expr, name=None):
        self.expr = sp.sympify(expr)
        self.name = name or str(self.expr)
        self._fns = {}

    def d(self, ix, iy, X, Y):
        key = (ix, iy)
        fn = self._fns.get(key)
        if fn is None:
            e = sp.diff(self.expr, self._x, ix, self._y, iy)
            fn = sp.lambdify((self._x, self._y), sp.simplify(e), modules="numpy")
            self._fns[key] = fn
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = fn(X, Y)
        return np.broadcast_to(np.asarray(out, dtype=float), X.shape).copy()


@lru_cache(maxsize=None)
def _legendre_dm(l, m):
    t = sp.Symbol("t")
    return sp.diff(sp.legendre(l, t), t, m), t


def sphere_harmonic(l, m, name=None):
    """Real spherical harmonic of degree l, order m in the stereographic chart.

    Built from the Cartesian restriction: with n1 = 2x/D, n2 = 2y/D,
    n3 = (1 - x^2 - y^2)/D, D = 1 + x^2 + y^2, the harmonic is
    Re/Im((n1 + i n2)^|m|) * (d^|m|/dt^|m| P_l)(n3), normalized to unit
    L^2-norm against the area-1 round form.
    """
    if abs(m) > l:
        raise ValueError("need |m| <= l")
    x, y = SymField._x, SymField._y
    D = 1 + x**2 + y**2
    n3 = (1 - x**2 - y**2) / D
    am = abs(m)
    P, t = _legendre_dm(l, am)
    Q = P.subs(t, n3)
    if m == 0:
        expr = Q
    else:
        zeta = (2 * x + 2 * sp.I * y) / D
        w = sp.expand(zeta**am)
        part = sp.re(w) if m > 0 else sp.im(w)
        expr = part * Q
    # unit L^2(omega) norm, omega the area-1 round form
    norm = math.sqrt((2 * l + 1) * math.factorial(l - am) / math.factorial(l + am))
    if m != 0:
        norm *= math.sqrt(2.0)
    expr = sp.simplify(norm * expr)
    return SymField(expr, name=name or f"Y[{l},{m}]")


def torus_dictionary(tau=1j):
    """Named torus test functions with closed-form derivatives."""
    d = {
        "one": ConstField(1.0, name="one"),
        "cos2pix": TorusFourier(1, 0, "cos", tau, name="cos2pix"),
        "sin2piy": TorusFourier(0, 1, "sin", tau, name="sin2piy"),
        "cos2pix_cos2piy": FieldSum(
            [TorusFourier(1, 1, "cos", tau), TorusFourier(1, -1, "cos", tau)],
            [0.5, 0.5],
            name="cos2pix_cos2piy",
        ),
        "cos4pix": TorusFourier(2, 0, "cos", tau, name="cos4pix"),
    }
    return d


def sphere_dictionary():
    """Named low-degree spherical harmonics (plus the constant)."""
    d = {"one": ConstField(1.0, name="one")}
    for l, m in [(1, 0), (1, 1), (1, -1), (2, 0), (2, 1), (2, 2)]:
        f = sphere_harmonic(l, m)
        d[f.name] = f
    return d


def perturbation_from_modes(backend, modes, tau=1j):
    """Assemble the perturbation potential psi from config mode entries.

    Torus entries: {kind, m, n, coeff}; sphere entries: {l, m, coeff}.
    """
    if not modes:
        return None
    parts, coeffs = [], []
    for mode in modes:
        if backend.startswith("torus"):
            parts.append(
                TorusFourier(mode["m"], mode["n"], mode.get("kind", "cos"), tau)
            )
        else:
            parts.append(sphere_harmonic(mode["l"], mode["m"]))
        coeffs.append(float(mode.get("coeff", 1.0)))
    return FieldSum(parts, coeffs, name="psi")
