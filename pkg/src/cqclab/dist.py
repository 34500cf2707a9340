"""Finite-support probability distributions and constrained-entropy machinery.

Everything here lives on integer supports {0, 1, ..., k}: probability mass
functions, exponentially tilted families (the entropy maximizers under a mean
constraint), the log-moment generating function of the uniform distribution
and its Legendre-Fenchel rate function, and the per-slot entropy ceiling
h_tilde built from them.

Entropies and divergences are in bits; rate_function returns nats (its
consumers convert via log2(e)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

LOG2E = math.log2(math.e)

_SUM_TOL = 1e-12
_MEAN_TOL = 1e-10
_BRACKET = 60.0


class SupportMismatchError(ValueError):
    """Two pmfs that must share a support {0..k} do not."""


class AbsoluteContinuityError(ValueError):
    """KL divergence requested where q(i) = 0 but p(i) > 0."""


class TiltEndpointError(ValueError):
    """Tilt solve requested at a degenerate mean (0 or k)."""


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on {0, 1, ..., k}, k = len(probs) - 1."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("probs must be a nonempty 1-D vector")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities must sum to 1 (got {p.sum()!r})")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def k(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    @staticmethod
    def uniform(k: int) -> "Pmf":
        return Pmf(np.full(k + 1, 1.0 / (k + 1)))

    @staticmethod
    def point_mass(k: int, at: int) -> "Pmf":
        p = np.zeros(k + 1)
        p[at] = 1.0
        return Pmf(p)


@dataclass(frozen=True)
class TiltSolution:
    """Exponentially tilted pmf hitting a prescribed mean.

    lam is the tilt parameter on natural-log scale: probs[i] proportional
    to exp(i * lam).
    """

    lam: float
    pmf: Pmf
    target_mean: float
    residual: float = field(default=0.0)

    def __post_init__(self):
        if self.residual > _MEAN_TOL:
            raise ValueError(
                f"tilt solution residual {self.residual:.3e} exceeds {_MEAN_TOL:.0e}"
            )


@dataclass(frozen=True)
class HTildeValue:
    """Per-slot entropy ceiling for a count on {0..k} with mean k*gamma."""

    gamma: float
    k: int
    bits_per_slot: float

    def __post_init__(self):
        hi = math.log2(self.k + 1) / self.k
        if not (-1e-12 <= self.bits_per_slot <= hi + 1e-12):
            raise ValueError(
                f"bits_per_slot {self.bits_per_slot} outside [0, log2(k+1)/k]"
            )


def entropy(pmf: Pmf) -> float:
    """Shannon entropy in bits, with the 0*log(0) = 0 convention."""
    p = pmf.probs
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """KL divergence D(p||q) in bits. Requires matching supports and p << q."""
    if p.k != q.k:
        raise SupportMismatchError(f"supports differ: k={p.k} vs k={q.k}")
    pv, qv = p.probs, q.probs
    bad = (qv == 0) & (pv > 0)
    if np.any(bad):
        raise AbsoluteContinuityError(
            f"p has mass where q vanishes (indices {np.where(bad)[0].tolist()})"
        )
    nz = pv > 0
    return float((pv[nz] * np.log2(pv[nz] / qv[nz])).sum())


def tilted_pmf(k: int, lam: float) -> Pmf:
    """Pmf on {0..k} with entries proportional to exp(i * lam).

    Computed in the log domain (max-subtracted) so extreme tilts neither
    overflow nor underflow to an all-zero vector.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    z = np.arange(k + 1) * float(lam)
    z -= z.max()
    w = np.exp(z)
    return Pmf(w / w.sum())


def _tilted_mean(k: int, lam: float) -> float:
    z = np.arange(k + 1) * lam
    z -= z.max()
    w = np.exp(z)
    return float(np.arange(k + 1) @ w / w.sum())


def solve_tilt(k: int, target_mean: float) -> TiltSolution:
    """Find the tilt parameter whose pmf on {0..k} has the given mean.

    The mean map lam -> mean(tilted_pmf(k, lam)) is strictly increasing, so
    the root is unique; it is bracketed (expanding from [-60, 60] if needed)
    and polished to a mean residual below 1e-10. Degenerate means 0 and k
    are rejected: the corresponding pmfs are point masses with infinite tilt.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < target_mean < k:
        raise TiltEndpointError(
            f"target mean {target_mean} must lie strictly inside (0, {k})"
        )
    lo, hi = -_BRACKET, _BRACKET
    while _tilted_mean(k, lo) > target_mean and lo > -1e6:
        lo *= 2.0
    while _tilted_mean(k, hi) < target_mean and hi < 1e6:
        hi *= 2.0
    lam = brentq(
        lambda l: _tilted_mean(k, l) - target_mean,
        lo,
        hi,
        xtol=1e-14,
        rtol=8.9e-16,
        maxiter=300,
    )
    pmf = tilted_pmf(k, lam)
    return TiltSolution(
        lam=float(lam),
        pmf=pmf,
        target_mean=float(target_mean),
        residual=abs(pmf.mean() - target_mean),
    )


def _log_mgf_uniform(k: int, lam: float) -> float:
    """psi(lam) = ln E[exp(lam * U)] for U uniform on {0..k}, in nats."""
    z = np.arange(k + 1) * lam
    zmax = z.max()
    return float(zmax + np.log(np.exp(z - zmax).sum()) - math.log(k + 1))


def rate_function(k: int, x: float) -> float:
    """Legendre-Fenchel transform of the uniform log-MGF, in nats.

    sup over lam of lam*x - psi(lam), evaluated at the maximizing tilt for
    interior x; the endpoints 0 and k take the limit value ln(k+1).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= x <= k:
        raise ValueError(f"x={x} outside [0, {k}]")
    if x == 0.0 or x == float(k):
        return math.log(k + 1)
    lam = solve_tilt(k, x).lam
    return lam * x - _log_mgf_uniform(k, lam)


def h_tilde(gamma: float, k: int) -> HTildeValue:
    """Largest per-slot entropy of a count on {0..k} with mean k*gamma.

    Evaluated through the rate-function identity
    (log2(k+1) - rate_function(k, k*gamma) * log2(e)) / k; the direct route
    (entropy of the mean-matched tilted pmf over k) must agree to 1e-9 and is
    reconciled against this one in the test suite.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma} outside [0, 1]")
    if gamma == 0.0 or gamma == 1.0:
        return HTildeValue(gamma=gamma, k=k, bits_per_slot=0.0)
    bits = (math.log2(k + 1) - rate_function(k, k * gamma) * LOG2E) / k
    return HTildeValue(gamma=gamma, k=k, bits_per_slot=max(bits, 0.0))


def binomial_pmf(k: int, p: float) -> Pmf:
    """Binomial(k, p) mass function; exact point masses at p = 0 and p = 1."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if p == 0.0:
        return Pmf.point_mass(k, 0)
    if p == 1.0:
        return Pmf.point_mass(k, k)
    probs = np.array(
        [math.comb(k, i) * p**i * (1.0 - p) ** (k - i) for i in range(k + 1)]
    )
    return Pmf(probs / probs.sum())


def _tilt_lambda_grid(k: int, means: np.ndarray, iters: int = 100) -> np.ndarray:
    """Vectorized bisection for the tilt parameter at many target means.

    Means must lie strictly inside (0, k). Used by the capacity grid sweeps
    where per-point brentq calls would dominate the runtime.
    """
    means = np.asarray(means, dtype=float)
    i = np.arange(k + 1.0)
    lo = np.full(means.shape, -_BRACKET * 16)
    hi = np.full(means.shape, _BRACKET * 16)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        z = np.multiply.outer(mid, i)
        z -= z.max(axis=-1, keepdims=True)
        w = np.exp(z)
        m = (w @ i) / w.sum(axis=-1)
        takes_lo = m < means
        lo = np.where(takes_lo, mid, lo)
        hi = np.where(takes_lo, hi, mid)
    return 0.5 * (lo + hi)


def h_tilde_grid(gammas: np.ndarray, k: int) -> np.ndarray:
    """Vectorized h_tilde values (bits per slot) over an array of gammas.

    k = 1 collapses analytically to the binary entropy function and k = 2
    admits a closed-form tilt (quadratic in exp(lam)); larger k fall back to
    the vectorized bisection. All three branches evaluate the same
    rate-function formula as the scalar h_tilde.
    """
    gammas = np.asarray(gammas, dtype=float)
    out = np.zeros(gammas.shape)
    interior = (gammas > 0.0) & (gammas < 1.0)
    if not interior.any():
        return out
    g = gammas[interior]
    if k == 1:
        out[interior] = -(g * np.log2(g) + (1.0 - g) * np.log2(1.0 - g))
        return out
    if k == 2:
        m = 2.0 * g
        # (2 - m) u^2 + (1 - m) u - m = 0, u = exp(lam) > 0
        u = (-(1.0 - m) + np.sqrt((1.0 - m) ** 2 + 4.0 * (2.0 - m) * m)) / (
            2.0 * (2.0 - m)
        )
        lam = np.log(u)
    else:
        lam = _tilt_lambda_grid(k, k * g)
    i = np.arange(k + 1.0)
    z = np.multiply.outer(lam, i)
    zmax = z.max(axis=-1)
    psi = zmax + np.log(np.exp(z - zmax[..., None]).sum(axis=-1)) - math.log(k + 1)
    rate = lam * (k * g) - psi
    out[interior] = np.maximum((math.log2(k + 1) - rate * LOG2E) / k, 0.0)
    return out
