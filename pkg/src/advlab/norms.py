"""Norm machinery for lp-bounded perturbations of linear classifiers.

A linear classifier ``sign(theta . x)`` attacked inside an lp ball of radius
epsilon loses margin exactly ``epsilon * ||theta||_q`` where q is the Hoelder
conjugate of p.  This module provides the conjugate-exponent arithmetic,
overflow-safe lp norms, subgradients of the q-norm (the objects that realize
Hoelder equality), the closed-form worst-case perturbation, and Euclidean
projections onto lp balls.

All vectors are plain float64 numpy arrays.  The exponent p lives on the
extended real line [1, inf]; ``math.inf`` is the one and only spelling of
infinity accepted here, and every function branches on it explicitly rather
than treating it as an approximate large number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PerturbationModel",
    "dual_exponent",
    "lp_norm",
    "norm_subgradient",
    "norm_subgradient_rows",
    "worst_case_perturbation",
    "project_onto_ball",
]


def dual_exponent(p: float) -> float:
    """Return the conjugate exponent q with 1/p + 1/q = 1.

    ``dual_exponent(1) == math.inf``, ``dual_exponent(math.inf) == 1``, and
    the map is an involution on [1, inf].  Raises ValueError for p < 1.
    """
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"norm exponent must lie in [1, inf], got {p!r}")
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class PerturbationModel:
    """Threat model: additive perturbations u with ||u||_p <= epsilon.

    The dual exponent ``q`` is derived, never stored, so the conjugacy
    relation holds by construction.
    """

    p: float
    epsilon: float

    def __post_init__(self) -> None:
        dual_exponent(self.p)  # validates p
        if not (self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")

    @property
    def q(self) -> float:
        return dual_exponent(self.p)


def lp_norm(v: np.ndarray, p: float) -> float:
    """lp norm of a vector, with the p = inf convention max_i |v_i|.

    Finite p uses max-factoring so that large exponents neither overflow
    nor underflow before the final root.
    """
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"norm exponent must lie in [1, inf], got {p!r}")
    a = np.abs(np.asarray(v, dtype=float))
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.linalg.norm(a))
    m = float(a.max())
    if m == 0.0 or not math.isfinite(m):
        return m
    return m * float(np.sum((a / m) ** p)) ** (1.0 / p)


def norm_subgradient(theta: np.ndarray, q: float) -> np.ndarray:
    """A subgradient g of the q-norm at theta.

    For theta != 0 the returned g satisfies the Hoelder-equality identities

        ||g||_p = 1,    theta . g = ||theta||_q,    ||g||_2 <= sqrt(d),

    with p conjugate to q.  Conventions at the non-smooth points: the zero
    vector is returned at theta = 0; sign(0) = 0 for q = 1; for q = inf the
    unit mass sits on the lowest-index coordinate of maximal modulus.
    Finite q > 1 is evaluated as exp((q-1) * (log|theta_i| - log||theta||_q))
    so large exponents cannot overflow.
    """
    q = float(q)
    if math.isnan(q) or q < 1.0:
        raise ValueError(f"norm exponent must lie in [1, inf], got {q!r}")
    theta = np.asarray(theta, dtype=float)
    g = np.zeros_like(theta)
    a = np.abs(theta)
    if a.size == 0 or not a.any():
        return g
    if q == 1.0:
        return np.sign(theta)
    if math.isinf(q):
        i = int(np.argmax(a))  # argmax picks the lowest index on ties
        g[i] = 1.0 if theta[i] > 0 else -1.0
        return g
    nrm = lp_norm(theta, q)
    nz = a > 0.0
    g[nz] = np.sign(theta[nz]) * np.exp((q - 1.0) * (np.log(a[nz]) - math.log(nrm)))
    return g


def norm_subgradient_rows(mat: np.ndarray, q: float) -> np.ndarray:
    """Row-wise ``norm_subgradient``: one subgradient per row of a 2-d array."""
    q = float(q)
    if math.isnan(q) or q < 1.0:
        raise ValueError(f"norm exponent must lie in [1, inf], got {q!r}")
    mat = np.asarray(mat, dtype=float)
    a = np.abs(mat)
    out = np.zeros_like(mat)
    if mat.size == 0:
        return out
    if q == 1.0:
        return np.sign(mat)
    if math.isinf(q):
        live = a.max(axis=1) > 0.0
        idx = np.argmax(a, axis=1)
        rows = np.nonzero(live)[0]
        cols = idx[rows]
        out[rows, cols] = np.where(mat[rows, cols] > 0, 1.0, -1.0)
        return out
    m = a.max(axis=1, keepdims=True)
    live = m[:, 0] > 0.0
    if not live.any():
        return out
    scaled = np.where(m > 0, a / np.where(m > 0, m, 1.0), 0.0)
    norms = np.sum(scaled**q, axis=1, keepdims=True) ** (1.0 / q)  # ||row||_q / m
    ratio = np.where(scaled > 0, scaled / np.where(norms > 0.0, norms, 1.0), 0.0)
    out[live] = np.sign(mat[live]) * ratio[live] ** (q - 1.0)
    return out


def worst_case_perturbation(
    theta: np.ndarray, y: int, model: PerturbationModel
) -> np.ndarray:
    """The exact maximizer of exp(-y theta.(x+u)) over ||u||_p <= epsilon.

    Independent of x: u* = -epsilon * y * g with g a subgradient of the
    q-norm at theta, so that y theta.(x+u*) = y theta.x - epsilon*||theta||_q.
    Returns the zero vector at theta = 0, where every feasible u is equally
    (in)effective.
    """
    if y not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {y!r}")
    g = norm_subgradient(theta, model.q)
    return (-model.epsilon * float(y)) * g


def _project_l1(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball via sorted soft thresholding."""
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    s = np.sort(a)[::-1]
    css = np.cumsum(s)
    j = np.arange(1, a.size + 1)
    ok = s - (css - radius) / j > 0
    rho = int(np.nonzero(ok)[0][-1])
    tau = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - tau, 0.0)


def _project_pball_bisect(v: np.ndarray, p: float, radius: float) -> np.ndarray:
    """Euclidean projection onto a finite-p ball via the KKT multiplier.

    Rescaling the whole problem by max|v_i| keeps every power in [0, 1].
    For multiplier lam >= 0 each coordinate solves the monotone equation
    u + lam*p*u**(p-1) = |v_i| (safeguarded Newton over the bracket [0, a]);
    an outer safeguarded Newton drives sum u**p to radius**p.  Accuracy is
    limited only by the fixed iteration counts, well past 1e-10.
    """
    scale = float(np.max(np.abs(v)))
    a = np.abs(v) / scale
    r_pow = (radius / scale) ** p

    def coords(lam: float) -> np.ndarray:
        # solve u + c*u**(p-1) = a per coordinate as F(t) = e^t + c*e^((p-1)t) - a
        # with t = log u.  F is convex and increasing in t, and the start
        # min(a, (a/c)^(1/(p-1))) lies above the root, so plain Newton
        # descends monotonically; the log scale keeps the exponentially
        # small roots of p near 1 reachable.
        c = lam * p
        mask = a > 0.0
        a_safe = np.where(mask, a, 1.0)
        log_a = np.log(a_safe)
        if c > 0.0:
            t = np.minimum(log_a, (log_a - math.log(c)) / (p - 1.0))
        else:
            t = log_a
        for _ in range(16):
            eu = np.exp(t)
            ep = np.exp((p - 1.0) * t)
            F = eu + c * ep - a_safe
            Fp = eu + c * (p - 1.0) * ep
            step = F / Fp
            t = t - step
            if float(np.max(np.abs(step))) < 1e-15:
                break
        return np.where(mask, np.exp(t), 0.0)

    lam_hi = 1.0
    for _ in range(200):
        if float(np.sum(coords(lam_hi) ** p)) <= r_pow:
            break
        lam_hi *= 4.0
    lam_lo = 0.0
    lam = 0.5 * lam_hi
    lam_best, h_best = lam_hi, math.inf
    for _ in range(40):
        w = coords(lam)
        h = float(np.sum(w ** p)) - r_pow
        if abs(h) < h_best:
            lam_best, h_best = lam, abs(h)
        if h > 0.0:
            lam_lo = lam
        else:
            lam_hi = lam
        if abs(h) <= 1e-14 * max(r_pow, 1e-300):
            break
        wp1 = w ** (p - 1.0)
        denom = 1.0 + lam * p * (p - 1.0) * np.where(w > 0, w, 1.0) ** (p - 2.0)
        dh = float(np.sum(-p * p * wp1 * wp1 / denom))
        cand = lam - h / dh if dh != 0.0 else 0.5 * (lam_lo + lam_hi)
        lam = cand if lam_lo < cand < lam_hi else 0.5 * (lam_lo + lam_hi)
    w = coords(lam_best)
    nrm = float(np.sum(w ** p)) ** (1.0 / p)
    target = r_pow ** (1.0 / p)
    if nrm > target > 0.0:
        w = w * (target / nrm)  # residual is ~1e-14 relative, radial touch-up
    return np.sign(v) * (w * scale)


def project_onto_ball(v: np.ndarray, p: float, radius: float) -> np.ndarray:
    """Euclidean projection of v onto {u : ||u||_p <= radius}.

    Exact closed forms for p in {1, 2, inf}; other finite p uses the KKT
    bisection with tolerance 1e-10.  radius = 0 returns the zero vector.
    """
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"norm exponent must lie in [1, inf], got {p!r}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius!r}")
    v = np.asarray(v, dtype=float)
    if radius == 0.0:
        return np.zeros_like(v)
    if math.isinf(p):
        return np.clip(v, -radius, radius)
    if p == 1.0:
        return _project_l1(v, radius)
    if p == 2.0:
        nrm = float(np.linalg.norm(v))
        if nrm <= radius:
            return v.copy()
        return v * (radius / nrm)
    if lp_norm(v, p) <= radius:
        return v.copy()
    return _project_pball_bisect(v, p, radius)
