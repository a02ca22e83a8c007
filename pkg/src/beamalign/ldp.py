"""Misalignment bounds, rate functions, and asymptotic exponent comparisons.

Per-pilot gain profiles (xi = 2 P_T g / sigma^2 per examined pair) drive
union/Bonferroni bounds on per-level misalignment, their large-deviations
rate functions, the K-level composition, and the closed-form exponent
comparison between exhaustive and hierarchical search under ideal beams.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import DoublyNoncentralF, dnc_f_cdf, pairwise_error_prob

__all__ = [
    "LevelGainProfile",
    "BoundReport",
    "IdealSearchConfig",
    "ExponentReport",
    "upper_bound",
    "lower_bound",
    "rate_I1",
    "rate_I2",
    "ldp_approximation",
    "decay_rate",
    "overall_miss",
    "dominant_level",
    "asymptotic_exponents",
    "joint_rate_function",
    "bound_sweep",
]


@dataclass(frozen=True)
class LevelGainProfile:
    """Per-pair gain profile of one search level, in per-pilot units.

    ``xi[l] = 2 P_T g_l / sigma^2``; the optimal index holds the largest
    entry and the runner-up is the largest among the rest (ties broken by
    lowest index).
    """

    xi: np.ndarray
    opt_index: int
    runner_up_index: int

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        object.__setattr__(self, "xi", xi)
        if xi.ndim != 1 or len(xi) < 2:
            raise ValueError("profile needs at least two pairs")
        if (xi < 0).any():
            raise ValueError("xi entries must be nonnegative")
        if xi[self.opt_index] < xi.max():
            raise ValueError("opt_index must hold the largest xi")
        others = [l for l in range(len(xi)) if l != self.opt_index]
        if self.runner_up_index not in others:
            raise ValueError("runner_up_index must differ from opt_index")
        best_other = max(xi[l] for l in others)
        if xi[self.runner_up_index] < best_other:
            raise ValueError("runner_up_index must hold the largest non-optimal xi")

    @classmethod
    def from_xi(cls, xi) -> "LevelGainProfile":
        xi = np.asarray(xi, dtype=float)
        opt = int(np.argmax(xi))
        others = np.array([l for l in range(len(xi)) if l != opt])
        runner = int(others[np.argmax(xi[others])])
        return cls(xi=xi, opt_index=opt, runner_up_index=runner)

    @classmethod
    def ideal(cls, xi_opt: float, num_pairs: int) -> "LevelGainProfile":
        """Ideal beams: the optimal pair alone has gain, the rest are zero."""
        xi = np.zeros(num_pairs)
        xi[0] = xi_opt
        return cls(xi=xi, opt_index=0, runner_up_index=1)

    @property
    def num_pairs(self) -> int:
        return len(self.xi)


@dataclass(frozen=True)
class BoundReport:
    pilots: int
    p_up: float
    p_low: float          # Bonferroni; may be negative for small pilot counts
    ldp_approx: float
    rate: float

    def __post_init__(self):
        if self.p_low > self.p_up + 1e-15:
            raise ValueError("lower bound exceeds upper bound")


def upper_bound(profile: LevelGainProfile, pilots: int, tol: float = 1e-10) -> float:
    """Union bound: sum of pairwise error probabilities against the optimum."""
    if pilots < 1:
        raise ValueError(f"pilots must be >= 1, got {pilots}")
    lam_opt = pilots * profile.xi[profile.opt_index]
    return sum(
        pairwise_error_prob(lam_opt, pilots * profile.xi[l], tol=tol)
        for l in range(profile.num_pairs) if l != profile.opt_index
    )


def lower_bound(profile: LevelGainProfile, pilots: int, tol: float = 1e-10) -> float:
    """Bonferroni lower bound: union bound minus the pairwise-intersection terms.

    Each intersection is bounded by the event that the optimal statistic
    falls below the average of two others, a doubly non-central F(2,4)
    probability.  May be negative for small pilot counts.
    """
    if pilots < 1:
        raise ValueError(f"pilots must be >= 1, got {pilots}")
    lam = pilots * profile.xi
    lam_opt = lam[profile.opt_index]
    others = [l for l in range(profile.num_pairs) if l != profile.opt_index]
    correction = 0.0
    for a in range(len(others)):
        for b in range(a + 1, len(others)):
            dist = DoublyNoncentralF(2, 4, lam_opt, lam[others[a]] + lam[others[b]])
            correction += dnc_f_cdf(dist, 1.0, tol=tol)
    return upper_bound(profile, pilots, tol=tol) - correction


def rate_I1(xi_opt: float, xi_l: float) -> float:
    """Decay rate (per pilot) of the pairwise F(2,2) error probability."""
    if xi_opt < 0 or xi_l < 0:
        raise ValueError("xi values must be nonnegative")
    return (math.sqrt(xi_opt) - math.sqrt(xi_l)) ** 2 / 4.0


def rate_I2(xi_opt: float, xi_i: float, xi_j: float) -> float:
    """Decay rate (per pilot) of the F(2,4) intersection-bound probability."""
    if min(xi_opt, xi_i, xi_j) < 0:
        raise ValueError("xi values must be nonnegative")
    return (math.sqrt(2.0 * xi_opt) - math.sqrt(xi_i + xi_j)) ** 2 / 6.0


def decay_rate(profile: LevelGainProfile) -> float:
    """Per-pilot decay rate of the level's misalignment probability."""
    return rate_I1(profile.xi[profile.opt_index], profile.xi[profile.runner_up_index])


def ldp_approximation(profile: LevelGainProfile, pilots: int) -> float:
    """(L-1) exp(-N xi_opt / 4): the upper bound under a near-ideal profile."""
    if pilots < 0:
        raise ValueError(f"pilots must be >= 0, got {pilots}")
    xi_opt = profile.xi[profile.opt_index]
    xi_rest = profile.xi[profile.runner_up_index]
    if xi_rest > 1e-9 * max(xi_opt, 1.0):
        warnings.warn(
            f"profile is not near-ideal (runner-up xi={xi_rest}); "
            "the single-exponent approximation may be loose",
            stacklevel=2,
        )
    return (profile.num_pairs - 1) * math.exp(-pilots * xi_opt / 4.0)


def overall_miss(per_level_p) -> float:
    """Compose per-level misalignment probabilities over a K-level search."""
    total = 0.0
    survive = 1.0
    for p in per_level_p:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probabilities must lie in [0, 1], got {p}")
        total += p * survive
        survive *= 1.0 - p
    return total


def dominant_level(profiles) -> tuple[int, float]:
    """0-based index and rate of the level with the smallest decay rate."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("need at least one level profile")
    rates = [decay_rate(p) for p in profiles]
    k_star = int(np.argmin(rates))
    return k_star, rates[k_star]


@dataclass(frozen=True)
class IdealSearchConfig:
    """Ideal-beam search setup: codebook sizes, array sizes and SNR.

    The receive side either descends with the transmit side (level counts
    match) or is a fixed single-level codebook re-used at every level.
    """

    tx_level_sizes: tuple[int, ...]
    rx_level_sizes: tuple[int, ...]
    num_tx: int
    num_rx: int
    snr_db: float
    path_gain_sq: float = 1.0

    def __post_init__(self):
        if len(self.rx_level_sizes) not in (1, len(self.tx_level_sizes)):
            raise ValueError("rx_level_sizes must have one level or match tx levels")

    @property
    def num_levels(self) -> int:
        return len(self.tx_level_sizes)

    def rx_size(self, k: int) -> int:
        return self.rx_level_sizes[min(k, len(self.rx_level_sizes) - 1)]

    def combined_gain(self, k: int) -> float:
        w = self.num_tx * self.tx_level_sizes[k] / self.tx_level_sizes[-1]
        f = self.num_rx * self.rx_size(k) / self.rx_level_sizes[-1]
        return w * f

    def xi_opt(self, k: int) -> float:
        p_t = 10.0 ** (self.snr_db / 10.0)
        return 2.0 * p_t * self.path_gain_sq * self.combined_gain(k)

    def scanned_pairs(self) -> list[int]:
        counts = [self.tx_level_sizes[0] * self.rx_level_sizes[0]]
        for k in range(1, self.num_levels):
            r_t = self.tx_level_sizes[k] // self.tx_level_sizes[k - 1]
            r_r = (1 if len(self.rx_level_sizes) == 1
                   else self.rx_level_sizes[k] // self.rx_level_sizes[k - 1])
            counts.append(r_t * r_r)
        return counts

    def total_scanned(self) -> int:
        return sum(self.scanned_pairs())

    def exhaustive_pairs(self) -> int:
        return self.tx_level_sizes[-1] * self.rx_level_sizes[-1]

    def gamma(self) -> float:
        """Budget share constant of the unequal (gain-equalizing) allocation."""
        grid = [self.tx_level_sizes[k] * self.rx_size(k) for k in range(self.num_levels)]
        return 1.0 / sum(c / g for c, g in zip(self.scanned_pairs(), grid))

    def level_profiles(self) -> list[LevelGainProfile]:
        return [LevelGainProfile.ideal(self.xi_opt(k), n)
                for k, n in enumerate(self.scanned_pairs())]


@dataclass(frozen=True)
class ExponentReport:
    """Misalignment decay exponents per total pilot symbol."""

    exhaustive: float
    hierarchical_equal: float
    hierarchical_unequal: float
    first_level_share: float     # L^(1) / L
    gamma: float


def asymptotic_exponents(config: IdealSearchConfig) -> ExponentReport:
    """Exponents of the three strategies per total pilot symbol.

    Exhaustive decays at xi_opt(top) / (4 L_ex); the equal-allocation K-level
    search at the first-level share of that; the unequal allocation at gamma
    times it.  The hierarchical exponents never exceed the exhaustive one.
    """
    i_ex = config.xi_opt(config.num_levels - 1) / (4.0 * config.exhaustive_pairs())
    share = config.scanned_pairs()[0] / config.total_scanned()
    gamma = config.gamma()
    report = ExponentReport(
        exhaustive=i_ex,
        hierarchical_equal=share * i_ex,
        hierarchical_unequal=gamma * i_ex,
        first_level_share=share,
        gamma=gamma,
    )
    assert report.hierarchical_equal <= report.exhaustive + 1e-15
    assert report.hierarchical_unequal <= report.exhaustive + 1e-15
    return report


def joint_rate_function(u: float, v: float, xi_opt: float, xi_l: float) -> float:
    """Rate function of the pair of scaled statistics at the point (u, v)."""
    if u < 0 or v < 0:
        raise ValueError("u and v must be nonnegative")
    return ((math.sqrt(xi_opt) - math.sqrt(u)) ** 2
            + (math.sqrt(xi_l) - math.sqrt(v)) ** 2) / 2.0


def bound_sweep(profile: LevelGainProfile, pilots_list, tol: float = 1e-10):
    """Bounds, LDP approximation and rate across pilot lengths."""
    rate = decay_rate(profile)
    rows = []
    for n in pilots_list:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            approx = ldp_approximation(profile, n)
        rows.append(BoundReport(
            pilots=int(n),
            p_up=upper_bound(profile, n, tol=tol),
            p_low=lower_bound(profile, n, tol=tol),
            ldp_approx=approx,
            rate=rate,
        ))
    return rows
