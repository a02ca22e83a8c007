"""Beam-training measurement model and single-trial search procedures.

A beam-pair measurement is simulated through its matched-filter sufficient
statistic: one complex standard Gaussian per pair, shifted by the effective
channel scaled with the per-pair pilot energy.  This is exactly distributed
as the normalized matched-filter output (non-central chi-square with 2 DoFs)
without per-symbol simulation.

These per-trial functions are the readable reference path; batched sweeps go
through the vectorized engine in :mod:`beamalign.experiment`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import beam_gain
from .channel import ChannelRealization
from .codebook import HierarchicalCodebook

__all__ = [
    "InfeasibleBudgetError",
    "TrainingConfig",
    "MeasurementStat",
    "SearchOutcome",
    "effective_channel",
    "pair_response",
    "measure_statistic",
    "pilot_schedule",
    "exhaustive_search",
    "hierarchical_search",
    "spectral_efficiency",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

ALLOCATIONS = ("equal", "unequal_gamma")


class InfeasibleBudgetError(ValueError):
    """The pilot budget cannot give every examined beam pair at least one symbol."""


@dataclass(frozen=True)
class TrainingConfig:
    total_pilots: int
    transmit_power: float
    noise_power: float = 1.0
    allocation: str = "equal"

    def __post_init__(self):
        if self.total_pilots < 1:
            raise ValueError(f"total_pilots must be >= 1, got {self.total_pilots}")
        if not self.transmit_power > 0.0 or not self.noise_power > 0.0:
            raise ValueError("transmit_power and noise_power must be positive")
        if self.allocation not in ALLOCATIONS:
            raise ValueError(f"allocation must be one of {ALLOCATIONS}, got {self.allocation!r}")


@dataclass(frozen=True)
class MeasurementStat:
    value: float
    pair_index: int
    level: int


@dataclass
class SearchOutcome:
    """Chosen and noiseless-optimal beam-pair indices per level.

    Indices are positions within the pairs scanned at each level.
    ``misaligned`` is true iff the winner differs from the scanned-set
    optimum at any level; ``final_matches_global_optimum`` additionally
    compares the final pair against the best pair of the full finest grid.
    """

    chosen: list[tuple[int, int]]
    optimal: list[tuple[int, int]]
    misaligned: bool
    final_gain: float
    pilots_used: int
    final_matches_global_optimum: bool | None = None


def effective_channel(beam_tx, beam_rx, channel: ChannelRealization) -> complex:
    """Scalar effective channel f H w^H of a weighted beam pair."""
    if beam_tx.weights is None or beam_rx.weights is None:
        raise ValueError("effective_channel needs weight vectors; "
                         "ideal flat-gain codewords carry no weights")
    n_r, n_t = channel.matrix.shape
    if beam_tx.weights.shape != (n_t,) or beam_rx.weights.shape != (n_r,):
        raise ValueError(
            f"beam/channel dimension mismatch: H is {n_r}x{n_t}, "
            f"w has {beam_tx.weights.shape}, f has {beam_rx.weights.shape}"
        )
    return complex(beam_rx.weights @ channel.matrix @ beam_tx.weights.conj())


def pair_response(beam_tx, beam_rx, tx_array, rx_array,
                  channel: ChannelRealization) -> complex:
    """Effective channel of a beam pair, supporting ideal flat-gain codewords.

    Ideal patterns have no weight vectors, so the response is assembled from
    per-path gains; that is only exact for pure path channels (no diffuse
    scatter component).
    """
    if beam_tx.weights is not None and beam_rx.weights is not None:
        return effective_channel(beam_tx, beam_rx, channel)
    if channel.model_tag != "single_path":
        raise ValueError("ideal flat-gain codewords require a pure path channel "
                         f"(got model {channel.model_tag!r})")
    h = 0.0 + 0.0j
    for path in channel.paths:
        w_gain = beam_gain(beam_tx, tx_array, path.aod_deg)
        f_gain = beam_gain(beam_rx, rx_array, path.aoa_deg)
        h += path.complex_gain * math.sqrt(w_gain * f_gain)
    return h


def measure_statistic(h: complex, pilots_per_pair: int, cfg: TrainingConfig,
                      rng: np.random.Generator, pair_index: int = 0,
                      level: int = 0) -> MeasurementStat:
    """Normalized matched-filter statistic for one beam pair.

    Distributed chi2_2(lambda) with lambda = 2 N P_T |h|^2 / sigma^2.  Draws
    exactly two standard normals (real, then imaginary noise part).
    """
    if pilots_per_pair < 1:
        raise ValueError(f"pilots_per_pair must be >= 1, got {pilots_per_pair}")
    scale = math.sqrt(pilots_per_pair * cfg.transmit_power / cfg.noise_power)
    zr = rng.standard_normal() * _INV_SQRT2
    zi = rng.standard_normal() * _INV_SQRT2
    re = h.real * scale + zr
    im = h.imag * scale + zi
    return MeasurementStat(value=2.0 * (re * re + im * im),
                           pair_index=pair_index, level=level)


def _scan_counts(tx_cb: HierarchicalCodebook, rx_cb: HierarchicalCodebook,
                 levels_used: int) -> list[int]:
    """Beam pairs examined per level under the standard descent schedule.

    Level 1 scans all first-level pairs; afterwards the transmit side scans
    the children of the running winner while the receive side either descends
    its own children (multi-level receive book) or stays fixed at the
    first-level winner (single-level receive book).
    """
    if rx_cb.num_levels not in (1, tx_cb.num_levels):
        raise ValueError("receive codebook must have one level or match the "
                         "transmit codebook level count")
    tx_sizes = tx_cb.level_sizes
    rx_sizes = rx_cb.level_sizes
    counts = [tx_sizes[0] * rx_sizes[0]]
    for k in range(1, levels_used):
        r_t = tx_sizes[k] // tx_sizes[k - 1]
        r_r = 1 if rx_cb.num_levels == 1 else rx_sizes[k] // rx_sizes[k - 1]
        counts.append(r_t * r_r)
    return counts


def pilot_schedule(tx_cb: HierarchicalCodebook, rx_cb: HierarchicalCodebook,
                   cfg: TrainingConfig, levels_used: int | None = None):
    """Per-level pilots per pair: ``(pilots, pilots_used)``.

    Equal allocation gives floor(N_tot / L) to every pair.  Unequal
    allocation sizes level k inversely to its codebook-pair count
    L_T^(k) L_R^(k) (clamped to >= 1); the budget is infeasible when the
    clamped schedule does not fit.
    """
    k_levels = tx_cb.num_levels if levels_used is None else levels_used
    counts = _scan_counts(tx_cb, rx_cb, k_levels)
    if cfg.allocation == "equal":
        n = cfg.total_pilots // sum(counts)
        if n < 1:
            raise InfeasibleBudgetError(
                f"budget {cfg.total_pilots} < {sum(counts)} pairs to examine"
            )
        pilots = [n] * k_levels
    else:
        rx_sizes = rx_cb.level_sizes
        grid = [tx_cb.level_sizes[k] * rx_sizes[min(k, rx_cb.num_levels - 1)]
                for k in range(k_levels)]
        gamma = 1.0 / sum(c / g for c, g in zip(counts, grid))
        pilots = [max(1, int(cfg.total_pilots * gamma / g)) for g in grid]
        if sum(c * n for c, n in zip(counts, pilots)) > cfg.total_pilots:
            raise InfeasibleBudgetError(
                f"budget {cfg.total_pilots} too small for the unequal schedule"
            )
    used = sum(c * n for c, n in zip(counts, pilots))
    return pilots, used


def _top_level_gains(tx_cb, rx_cb, channel) -> np.ndarray:
    """Noiseless |h|^2 over the full finest-level pair grid (tx-major)."""
    beams_t = tx_cb.levels[-1]
    beams_r = rx_cb.levels[-1]
    g = np.empty((len(beams_t), len(beams_r)))
    for i, bt in enumerate(beams_t):
        for j, br in enumerate(beams_r):
            h = pair_response(bt, br, tx_cb.array, rx_cb.array, channel)
            g[i, j] = abs(h) ** 2
    return g.ravel()


def exhaustive_search(tx_cb: HierarchicalCodebook, rx_cb: HierarchicalCodebook,
                      channel: ChannelRealization, cfg: TrainingConfig,
                      rng: np.random.Generator) -> SearchOutcome:
    """One-shot scan of all finest-level beam pairs; winner by strongest statistic."""
    beams_t = tx_cb.levels[-1]
    beams_r = rx_cb.levels[-1]
    num_pairs = len(beams_t) * len(beams_r)
    n = cfg.total_pilots // num_pairs
    if n < 1:
        raise InfeasibleBudgetError(
            f"budget {cfg.total_pilots} < {num_pairs} beam pairs to examine"
        )
    level = tx_cb.num_levels - 1
    stats = np.empty(num_pairs)
    gains = np.empty(num_pairs)
    idx = 0
    for bt in beams_t:
        for br in beams_r:
            h = pair_response(bt, br, tx_cb.array, rx_cb.array, channel)
            gains[idx] = abs(h) ** 2
            stats[idx] = measure_statistic(h, n, cfg, rng, idx, level).value
            idx += 1
    chosen = int(np.argmax(stats))
    optimal = int(np.argmax(gains))
    return SearchOutcome(
        chosen=[(level, chosen)],
        optimal=[(level, optimal)],
        misaligned=chosen != optimal,
        final_gain=float(gains[chosen]),
        pilots_used=num_pairs * n,
        final_matches_global_optimum=chosen == optimal,
    )


def hierarchical_search(tx_cb: HierarchicalCodebook, rx_cb: HierarchicalCodebook,
                        channel: ChannelRealization, cfg: TrainingConfig,
                        rng: np.random.Generator,
                        levels_used: int | None = None) -> SearchOutcome:
    """K-level descent: scan level 1 fully, then children of the running winner.

    The per-level optimum (and hence the misalignment flag) is judged among
    the pairs actually scanned at that level.
    """
    k_levels = tx_cb.num_levels if levels_used is None else levels_used
    pilots, used = pilot_schedule(tx_cb, rx_cb, cfg, k_levels)
    rx_fixed = rx_cb.num_levels == 1

    chosen_list = []
    optimal_list = []
    misaligned = False
    tx_idx = rx_idx = 0
    final_gain = 0.0
    for k in range(k_levels):
        if k == 0:
            tx_cand = list(range(len(tx_cb.levels[0])))
            rx_cand = list(range(len(rx_cb.levels[0])))
        else:
            tx_cand = list(tx_cb.children(k - 1, tx_idx))
            rx_cand = [rx_idx] if rx_fixed else list(rx_cb.children(k - 1, rx_idx))
        rx_level = 0 if rx_fixed else k
        stats = []
        gains = []
        pairs = [(ti, ri) for ti in tx_cand for ri in rx_cand]
        for pos, (ti, ri) in enumerate(pairs):
            h = pair_response(tx_cb.levels[k][ti], rx_cb.levels[rx_level][ri],
                              tx_cb.array, rx_cb.array, channel)
            gains.append(abs(h) ** 2)
            stats.append(measure_statistic(h, pilots[k], cfg, rng, pos, k).value)
        win = int(np.argmax(stats))
        opt = int(np.argmax(gains))
        chosen_list.append((k, win))
        optimal_list.append((k, opt))
        misaligned = misaligned or win != opt
        tx_idx, rx_idx = pairs[win]
        final_gain = gains[win]

    if k_levels == tx_cb.num_levels:
        top = _top_level_gains(tx_cb, rx_cb, channel)
        final_flat = tx_idx * len(rx_cb.levels[-1]) + rx_idx
        matches_global = final_flat == int(np.argmax(top))
    else:
        matches_global = None
    return SearchOutcome(
        chosen=chosen_list,
        optimal=optimal_list,
        misaligned=misaligned,
        final_gain=float(final_gain),
        pilots_used=used,
        final_matches_global_optimum=matches_global,
    )


def spectral_efficiency(outcome: SearchOutcome, cfg: TrainingConfig) -> float:
    """Post-beamforming rate log2(1 + P_T g / sigma^2) of the final chosen pair."""
    return math.log2(1.0 + cfg.transmit_power * outcome.final_gain / cfg.noise_power)
