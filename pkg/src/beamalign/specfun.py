"""Non-central chi-square and doubly non-central F kernels.

Matched-filter beam measurements are non-central chi-square with 2 degrees of
freedom, and the probability that one measurement exceeds another reduces to
the CDF of a doubly non-central F distribution evaluated at 1.  That CDF is
computed here as a double Poisson mixture of regularized incomplete beta
terms.  Truncation is controlled explicitly: each Poisson index is summed
over the smallest window around its mode that holds all but ``tol/2`` of the
mass, so the absolute series error is below ``tol``.  Window weights are
built by pmf recurrences seeded from the log-pmf at the mode, which stays
finite for non-centralities up to ~1e4.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "NoncentralChiSq",
    "DoublyNoncentralF",
    "SeriesTruncationError",
    "chisq_sample",
    "chisq_cdf",
    "dnc_f_cdf",
    "pairwise_error_prob",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class SeriesTruncationError(RuntimeError):
    """Poisson-mixture series could not reach the requested tolerance."""


@dataclass(frozen=True)
class NoncentralChiSq:
    """Non-central chi-square law with ``dof`` degrees of freedom and ncp ``ncp``."""

    dof: int
    ncp: float

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise ValueError(f"dof must be a positive integer, got {self.dof}")
        if not (self.ncp >= 0.0 and math.isfinite(self.ncp)):
            raise ValueError(f"ncp must be finite and >= 0, got {self.ncp}")

    @property
    def mean(self) -> float:
        return self.dof + self.ncp

    @property
    def variance(self) -> float:
        return 2.0 * self.dof + 4.0 * self.ncp


@dataclass(frozen=True)
class DoublyNoncentralF:
    """Ratio law of two independent non-central chi-squares scaled by their DoFs."""

    dof_num: int
    dof_den: int
    ncp_num: float
    ncp_den: float

    def __post_init__(self):
        for name in ("dof_num", "dof_den"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        for name in ("ncp_num", "ncp_den"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def chisq_sample(dist: NoncentralChiSq, rng: np.random.Generator, size=None):
    """Draw from ``dist`` as a sum of squared shifted normals.

    The mean shift sqrt(ncp) sits entirely in the first component; for dof=2
    this is the squared modulus of one complex Gaussian around sqrt(ncp).
    Deterministic given ``rng`` state.  Returns a float for ``size=None``,
    else an array of the requested shape.
    """
    if size is None:
        shape = ()
    elif isinstance(size, int):
        shape = (size,)
    else:
        shape = tuple(size)
    z = rng.standard_normal(shape + (dist.dof,))
    z[..., 0] += math.sqrt(dist.ncp)
    out = np.einsum("...i,...i->...", z, z)
    return float(out) if size is None else out


def _poisson_window(mu: float, tail: float, max_terms: int):
    """Smallest index window around the Poisson(mu) mode holding >= 1 - tail mass.

    Returns ``(lo, weights)`` with ``weights[i]`` the pmf at ``lo + i``.
    Raises SeriesTruncationError if more than ``max_terms`` indices are needed.
    """
    if mu <= 0.0:
        return 0, np.ones(1)
    mode = int(math.floor(mu))
    log_p_mode = mode * math.log(mu) - mu - math.lgamma(mode + 1)
    p_mode = math.exp(log_p_mode)
    lo = hi = mode
    p_lo = p_hi = p_mode
    acc = p_mode
    target = 1.0 - tail
    while acc < target:
        if hi - lo + 1 >= max_terms:
            raise SeriesTruncationError(
                f"Poisson window for mu={mu} exceeded {max_terms} terms "
                f"before reaching tail mass {tail}"
            )
        nxt_lo = p_lo * lo / mu if lo > 0 else 0.0
        nxt_hi = p_hi * mu / (hi + 1)
        if nxt_lo <= 0.0 and nxt_hi <= 0.0:
            raise SeriesTruncationError(
                f"Poisson window for mu={mu} stalled at mass {acc} < {target}"
            )
        if nxt_lo >= nxt_hi:
            lo -= 1
            p_lo = nxt_lo
            acc += p_lo
        else:
            hi += 1
            p_hi = nxt_hi
            acc += p_hi
    w = np.empty(hi - lo + 1)
    w[mode - lo] = p_mode
    for i in range(mode - 1, lo - 1, -1):
        w[i - lo] = w[i - lo + 1] * (i + 1) / mu
    for i in range(mode + 1, hi + 1):
        w[i - lo] = w[i - lo - 1] * mu / i
    return lo, w


def _check_tol(tol: float):
    if not (0.0 < tol <= 1e-3):
        raise ValueError(f"tol must lie in (0, 1e-3], got {tol}")


def chisq_cdf(dist: NoncentralChiSq, x: float, tol: float = 1e-10,
              max_terms: int = 100_000) -> float:
    """CDF of ``dist`` at ``x``: Poisson mixture of regularized lower gammas."""
    _check_tol(tol)
    if x <= 0.0:
        return 0.0
    lo, w = _poisson_window(dist.ncp / 2.0, tol, max_terms)
    a = dist.dof / 2.0 + lo + np.arange(len(w))
    return float(min(np.dot(w, special.gammainc(a, x / 2.0)), 1.0))


def dnc_f_cdf(dist: DoublyNoncentralF, x: float, tol: float = 1e-10,
              max_terms: int = 100_000) -> float:
    """CDF of the doubly non-central F law at ``x`` with absolute error <= tol.

    Pr{ (T1/n1)/(T2/n2) <= x } as the double Poisson mixture
    sum_ij Pois(i; eta1/2) Pois(j; eta2/2) I_q(n1/2 + i, n2/2 + j)
    with q = n1 x / (n1 x + n2) and I_q the regularized incomplete beta.
    Each Poisson index is truncated at tail mass tol/2, and the beta terms
    are bounded by 1, so the neglected mass is below tol.
    """
    _check_tol(tol)
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x}")
    n1, n2 = dist.dof_num, dist.dof_den
    q = n1 * x / (n1 * x + n2)
    lo1, w1 = _poisson_window(dist.ncp_num / 2.0, tol / 2.0, max_terms)
    lo2, w2 = _poisson_window(dist.ncp_den / 2.0, tol / 2.0, max_terms)
    b = n2 / 2.0 + lo2 + np.arange(len(w2))
    total = 0.0
    for i, wi in enumerate(w1):
        total += float(wi) * float(np.dot(w2, special.betainc(n1 / 2.0 + lo1 + i, b, q)))
    return min(total, 1.0)


def pairwise_error_prob(lambda_opt: float, lambda_other: float,
                        tol: float = 1e-10) -> float:
    """Probability that a chi2_2(lambda_other) measurement beats a chi2_2(lambda_opt) one.

    Equals the doubly non-central F(2,2) CDF at 1 with numerator
    non-centrality ``lambda_opt`` and denominator ``lambda_other``.  Both
    orderings are meaningful; a warning is emitted when the nominally optimal
    statistic is the weaker one.
    """
    if lambda_opt < lambda_other:
        warnings.warn(
            f"lambda_opt={lambda_opt} < lambda_other={lambda_other}: "
            "the 'optimal' statistic is the weaker one",
            stacklevel=2,
        )
    dist = DoublyNoncentralF(2, 2, lambda_opt, lambda_other)
    return dnc_f_cdf(dist, 1.0, tol=tol)
