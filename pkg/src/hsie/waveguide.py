"""
Guided TE modes of a symmetric three-layer slab and the incoming fields built from them.

The slab has core ``|y| < a`` with index ``n2`` and cladding index ``n1 < n2``.
A mode ``u(x, y) = v(y) exp(i kappa_x x)`` solves

    -v'' - kappa^2 n(y)^2 v = -kappa_x^2 v,

so the Helmholtz coefficient of the 2D problem is the squared index.  With
``gamma = sqrt(n2^2 kappa^2 - kappa_x^2)`` and ``beta = sqrt(kappa_x^2 - n1^2 kappa^2)``
the dispersion relations are ``gamma tan(gamma a) = beta`` (even) and
``-gamma cot(gamma a) = beta`` (odd).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import gll_points
from .errors import BranchOutOfRange, NoGuidedMode

CLAMP = 1e-12


@dataclass(frozen=True)
class SlabMode:
    """A guided mode, normalized so that ``max |v| = 1``.

    ``C1..C4`` are the coefficients of ``C1 e^{beta y}`` (``y <= -a``),
    ``C2 e^{-i gamma y} + C3 e^{i gamma y}`` (core) and ``C4 e^{-beta y}`` (``y >= a``).
    """

    kappa: float
    half_width: float
    n1: float
    n2: float
    kappa_x: float
    parity: str
    branch: int
    C1: complex
    C2: complex
    C3: complex
    C4: complex

    @property
    def gamma(self):
        return math.sqrt(max(self.n2**2 * self.kappa**2 - self.kappa_x**2, 0.0))

    @property
    def beta(self):
        return math.sqrt(max(self.kappa_x**2 - self.n1**2 * self.kappa**2, 0.0))

    def _edge_values(self):
        g, a = self.gamma, self.half_width
        if self.parity == "even":
            return math.cos(g * a), -g * math.sin(g * a)
        return math.sin(g * a), g * math.cos(g * a)

    def v(self, y, derivative: bool = False):
        """Transverse profile ``v(y)`` (or ``v'(y)``), real valued."""
        y = np.asarray(y, dtype=float)
        g, b, a = self.gamma, self.beta, self.half_width
        ay = np.abs(y)
        sgn = np.where(y < 0, -1.0, 1.0)
        va, _ = self._edge_values()
        decay = np.exp(-b * np.maximum(ay - a, 0.0))
        if self.parity == "even":
            inner = -g * np.sin(g * y) if derivative else np.cos(g * y)
            outer = -b * va * sgn * decay if derivative else va * decay
        else:
            inner = g * np.cos(g * y) if derivative else np.sin(g * y)
            outer = -b * va * decay if derivative else va * sgn * decay
        return np.where(ay <= a, inner, outer)

    def coefficient(self, y):
        """Helmholtz coefficient ``n(y)^2``."""
        return np.where(np.abs(np.asarray(y)) < self.half_width, self.n2**2, self.n1**2)


def _dispersion(parity, kappa, a, n1, n2):
    def f(kx):
        g = math.sqrt(max(n2**2 * kappa**2 - kx**2, 0.0))
        b = math.sqrt(max(kx**2 - n1**2 * kappa**2, 0.0))
        # pole-free forms of the two relations
        if parity == "even":
            return g * math.sin(g * a) - b * math.cos(g * a)
        return g * math.cos(g * a) + b * math.sin(g * a)
    return f


def count_modes(kappa, a, n1, n2, parity) -> int:
    """Number of guided modes of the given parity (closed-form cutoff count)."""
    V = kappa * a * math.sqrt(n2**2 - n1**2)
    if parity == "even":
        return math.ceil(V / math.pi)
    return max(0, math.ceil((V - math.pi / 2) / math.pi))


def _bracket(kappa, a, n1, n2, parity, branch):
    # bracket in gamma, converted to kappa_x (decreasing in gamma)
    G = kappa * math.sqrt(n2**2 - n1**2)
    lo = branch * math.pi + (0.0 if parity == "even" else 0.5 * math.pi)
    hi = min(lo + 0.5 * math.pi, G * a)
    g_lo, g_hi = lo / a, hi / a
    kx = lambda g: math.sqrt(max(n2**2 * kappa**2 - g * g, n1**2 * kappa**2))
    return kx(g_hi), kx(g_lo)


def solve_slab_mode(kappa, a, n1, n2, parity: str = "even", branch_index: int = 0) -> SlabMode:
    """Guided mode by bisection on the dispersion relation.

    ``branch_index = 0`` is the fundamental mode of the given parity (largest
    ``kappa_x``).  Bisection runs until the bracket is two adjacent floats.

    Raises
    ------
    NoGuidedMode
        No mode of this parity exists (no sign change).
    BranchOutOfRange
        ``branch_index`` exceeds the number of modes of this parity.
    """
    if not n2 > n1 > 0:
        raise ValueError("need n2 > n1 > 0")
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    if kappa <= 0 or a <= 0:
        raise ValueError("kappa and a must be positive")
    count = count_modes(kappa, a, n1, n2, parity)
    if count == 0:
        raise NoGuidedMode(f"no guided {parity} mode for kappa={kappa}, a={a}")
    if not 0 <= branch_index < count:
        raise BranchOutOfRange(f"branch {branch_index} requested, {count} {parity} modes exist")
    f = _dispersion(parity, kappa, a, n1, n2)
    lo, hi = _bracket(kappa, a, n1, n2, parity, branch_index)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        hi = lo
    elif fhi == 0.0:
        lo = hi
    elif np.sign(flo) == np.sign(fhi):
        raise NoGuidedMode(f"dispersion function has no sign change in [{lo}, {hi}]")
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    kx = 0.5 * (lo + hi)
    g = math.sqrt(n2**2 * kappa**2 - kx**2)
    b = math.sqrt(kx**2 - n1**2 * kappa**2)
    if parity == "even":
        C2 = C3 = 0.5 + 0j
        C1 = C4 = complex(math.cos(g * a) * math.exp(b * a))
    else:
        C3, C2 = 1 / 2j, -1 / 2j
        C4 = complex(math.sin(g * a) * math.exp(b * a))
        C1 = -C4
    return SlabMode(kappa=float(kappa), half_width=float(a), n1=float(n1), n2=float(n2), kappa_x=kx,
                    parity=parity, branch=int(branch_index), C1=C1, C2=C2, C3=C3, C4=C4)


def dispersion_residual(mode: SlabMode) -> float:
    """Dispersion function at ``kappa_x``, scaled by ``n2 kappa``."""
    f = _dispersion(mode.parity, mode.kappa, mode.half_width, mode.n1, mode.n2)
    return abs(f(mode.kappa_x)) / (mode.n2 * mode.kappa)


@dataclass(frozen=True)
class ModeField:
    """``u_i(x, y) = v(y - y_center) exp(i kappa_x (x - x_origin))``."""

    mode: SlabMode
    x_origin: float = 0.0
    y_center: float = 0.0

    def __call__(self, x, y):
        x = np.asarray(x, float)
        return self.mode.v(np.asarray(y, float) - self.y_center) * np.exp(1j * self.mode.kappa_x * (x - self.x_origin))

    def gradient(self, x, y):
        x = np.asarray(x, float)
        yy = np.asarray(y, float) - self.y_center
        ph = np.exp(1j * self.mode.kappa_x * (x - self.x_origin))
        return 1j * self.mode.kappa_x * self.mode.v(yy) * ph, self.mode.v(yy, derivative=True) * ph


def eval_incoming(field, v1, v2, normal, fe_order: int):
    """Trace data of an incoming field on the edge ``v1 -> v2``.

    Returns ``(g_D, g_N)`` sampled at the GLL trace nodes, where
    ``g_N = grad u_i . normal``.  Values where ``|u_i|`` falls below
    ``1e-12 max |v|`` are set to zero.
    """
    t = gll_points(fe_order)
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    P = v1[None, :] + t[:, None] * (v2 - v1)[None, :]
    gD = np.asarray(field(P[:, 0], P[:, 1]), dtype=complex)
    gx, gy = field.gradient(P[:, 0], P[:, 1])
    gN = np.asarray(gx * normal[0] + gy * normal[1], dtype=complex)
    small = np.abs(gD) < CLAMP
    gD[small] = 0.0
    gN[small] = 0.0
    return gD, gN
