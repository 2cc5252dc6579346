"""Bump profile H and smooth shell cutoff chi used to build the initial data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

# Normalisation target for the 3D integral of H(|u|^2).
PROFILE_MASS = 3.0 / (4.0 * math.pi)


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
    return out


def _poly(s):
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, np.clip(1.0 - s, 0.0, None) ** 4, 0.0)


_SHAPES = {
    # name: (vectorised shape, mpmath shape)
    "bump": (_bump, lambda s: mpmath.exp(-1 / (1 - s)) if s < 1 else mpmath.mpf(0)),
    "poly4": (_poly, lambda s: (1 - s) ** 4 if s < 1 else mpmath.mpf(0)),
}


@dataclass(frozen=True)
class ProfileH:
    """Compactly supported profile s -> H(s), zero for s >= 1.

    ``kappa`` is fixed so that 4 pi * int_0^1 H(q^2) q^2 dq = 3 / (4 pi).
    """

    kind: str
    kappa: float

    def __call__(self, s):
        shape = _SHAPES[self.kind][0]
        val = self.kappa * shape(s)
        return val if np.ndim(val) else float(val)

    @property
    def peak(self) -> float:
        return float(self(0.0))

    def rescaled(self, s, delta):
        """delta^-3 H(s / delta^2): same 3D mass, support |u| <= delta."""
        return self(np.asarray(s, dtype=float) / (delta * delta)) / delta**3

    def mass(self) -> float:
        """4 pi * int_0^1 H(q^2) q^2 dq evaluated by adaptive quadrature."""
        shape = _SHAPES[self.kind][1]
        with mpmath.workdps(30):
            val = 4 * mpmath.pi * self.kappa * mpmath.quad(lambda q: shape(q * q) * q * q, [0, 1])
        return float(val)


@lru_cache(maxsize=None)
def make_profile(kind: str = "bump") -> ProfileH:
    if kind not in _SHAPES:
        raise ValueError(f"unknown profile kind {kind!r}; choose from {sorted(_SHAPES)}")
    shape = _SHAPES[kind][1]
    with mpmath.workdps(30):
        raw = 4 * mpmath.pi * mpmath.quad(lambda q: shape(q * q) * q * q, [0, 1])
        kappa = mpmath.mpf(3) / (4 * mpmath.pi) / raw
    return ProfileH(kind, float(kappa))


# ------------------------------------------------------------------ cutoff


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    expo = np.clip(1.0 / tm - 1.0 / (1.0 - tm), -700.0, 700.0)
    out[mid] = 1.0 / (1.0 + np.exp(expo))
    return out


def reference_cutoff(x):
    """chi_{0,1}: 1 for |x| <= 1/2, 0 for |x| >= 1, smooth in between."""
    return smoothstep(2.0 - 2.0 * np.abs(np.asarray(x, dtype=float)))


def _reference_cutoff_mp(x):
    t = 2 - 2 * abs(x)
    if t <= 0:
        return mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1)
    return 1 / (1 + mpmath.exp(1 / t - 1 / (1 - t)))


@lru_cache(maxsize=None)
def cutoff_derivative_bounds(kmax: int, samples: int = 257):
    """Measured alpha_j = sup |d^j chi_{0,1} / dx^j| for j = 0..kmax.

    Derivatives are taken by mpmath's high-precision finite differences on a
    dense grid over the transition region 1/2 < x < 1, then the largest
    sample for each order is polished by a bounded scalar search.
    """
    xs = np.linspace(0.5, 1.0, samples + 2)[1:-1]
    with mpmath.workdps(40):
        table = np.array([[float(abs(d)) for d in mpmath.diffs(_reference_cutoff_mp, mpmath.mpf(x), kmax)]
                          for x in xs])
        alphas = [1.0]
        for j in range(1, kmax + 1):
            i = int(np.argmax(table[:, j]))
            lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
            res = minimize_scalar(lambda x: -float(abs(mpmath.diff(_reference_cutoff_mp, mpmath.mpf(x), j))),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            alphas.append(max(table[i, j], -res.fun))
    return tuple(alphas)


ALPHA_TABLE_ORDER = 8


def alpha_table(k: int):
    """alpha_0..alpha_k as floats, measured once up to order max(k, 8)."""
    return tuple(float(a) for a in cutoff_derivative_bounds(max(k, ALPHA_TABLE_ORDER))[: k + 1])


@dataclass(frozen=True)
class CutoffChi:
    """Shell cutoff chi(r) = chi_{0,1}((r - center) / width)."""

    center: float
    width: float
    alpha: tuple = field(default=(1.0,))

    def __call__(self, r):
        val = reference_cutoff((np.asarray(r, dtype=float) - self.center) / self.width)
        return val if np.ndim(val) else float(val)

    def derivative_bound(self, k: int) -> float:
        """alpha_k / width^k bounds sup |d^k chi / dr^k|; equals c_k for the VP shell."""
        return self.alpha[k] / self.width**k

    @property
    def support(self):
        return (self.center - self.width, self.center + self.width)

    @property
    def plateau(self):
        return (self.center - 0.5 * self.width, self.center + 0.5 * self.width)


def vp_cutoff(b: float, k: int = 1) -> CutoffChi:
    return CutoffChi(center=b, width=0.5 * b, alpha=alpha_table(max(k, 1)))
