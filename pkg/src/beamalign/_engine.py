"""Batched Monte Carlo machinery: per-trial streams and measurement tables.

Every trial owns two counter-based Philox streams keyed by (base_seed,
trial): one for the channel draw, one for the noise table.  The noise table
covers every beam pair any strategy could measure, in a fixed slot order, so
budgets and strategies evaluated on the same tables share common random
numbers, and results do not depend on chunking or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import HierarchicalCodebook

__all__ = ["SlotLayout", "make_layout", "trial_rngs", "build_tables"]

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SlotLayout:
    """Per-level slot blocks of the measurement table (transmit-major)."""

    offsets: np.ndarray     # (K,) int64, slot offset of each level block
    tx_sizes: np.ndarray    # (K,) int64, transmit codewords per level
    rx_sizes: np.ndarray    # (K,) int64, receive codewords per level
    tx_ratios: np.ndarray   # (K,) int64, transmit children per level (k >= 1)
    rx_ratios: np.ndarray   # (K,) int64, receive children per level (1 = fixed)
    total: int

    @property
    def num_levels(self) -> int:
        return len(self.offsets)

    @property
    def top_offset(self) -> int:
        return int(self.offsets[-1])

    @property
    def top_pairs(self) -> int:
        return int(self.tx_sizes[-1] * self.rx_sizes[-1])


def make_layout(tx_cb: HierarchicalCodebook, rx_cb: HierarchicalCodebook,
                levels_used: int | None = None) -> SlotLayout:
    if rx_cb.num_levels not in (1, tx_cb.num_levels):
        raise ValueError("receive codebook must have one level or match the "
                         "transmit codebook level count")
    k_levels = tx_cb.num_levels if levels_used is None else levels_used
    rx_fixed = rx_cb.num_levels == 1
    tx_sizes = np.array(tx_cb.level_sizes[:k_levels], dtype=np.int64)
    rx_sizes = np.array(
        [rx_cb.level_sizes[0 if rx_fixed else k] for k in range(k_levels)],
        dtype=np.int64)
    tx_ratios = np.ones(k_levels, dtype=np.int64)
    rx_ratios = np.ones(k_levels, dtype=np.int64)
    for k in range(1, k_levels):
        tx_ratios[k] = tx_sizes[k] // tx_sizes[k - 1]
        rx_ratios[k] = 1 if rx_fixed else rx_sizes[k] // rx_sizes[k - 1]
    sizes = tx_sizes * rx_sizes
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    return SlotLayout(offsets=offsets, tx_sizes=tx_sizes, rx_sizes=rx_sizes,
                      tx_ratios=tx_ratios, rx_ratios=rx_ratios,
                      total=int(sizes.sum()))


def trial_rngs(base_seed: int, trial: int):
    """Independent (channel, noise) generators for one trial.

    Streams are Philox instances keyed by (base_seed, 2*trial + {0, 1}), so
    any trial subset can be generated in any order with identical results.
    """
    base = np.uint64(base_seed & _MASK64)
    chan = np.random.Generator(np.random.Philox(
        key=np.array([base, np.uint64((2 * trial) & _MASK64)], dtype=np.uint64)))
    noise = np.random.Generator(np.random.Philox(
        key=np.array([base, np.uint64((2 * trial + 1) & _MASK64)], dtype=np.uint64)))
    return chan, noise


def _rx_level(rx_cb: HierarchicalCodebook, k: int) -> int:
    return 0 if rx_cb.num_levels == 1 else k


def build_tables(tx_cb: HierarchicalCodebook, rx_cb: HierarchicalCodebook,
                 layout: SlotLayout, model, base_seed: int,
                 trial_lo: int, trial_hi: int):
    """Effective-channel and noise tables for trials [trial_lo, trial_hi).

    Returns ``(h, zeta)``, both (trials, slots) complex128.  Weighted
    codebooks project each trial's channel matrix onto every codeword pair;
    ideal flat-gain codebooks use interval membership, which requires a pure
    path channel (no diffuse scatter term).
    """
    batch = trial_hi - trial_lo
    total = layout.total
    ideal = tx_cb.synthesis == "ideal" or rx_cb.synthesis == "ideal"
    if ideal and model.tag != "single_path":
        raise ValueError("ideal flat-gain codebooks require the single-path "
                         f"channel model, got {model.tag!r}")

    zeta = np.empty((batch, total), dtype=np.complex128)
    if ideal:
        aod_sine = np.empty(batch)
        aoa_sine = np.empty(batch)
        gains = np.empty(batch, dtype=np.complex128)
    else:
        mats = np.empty((batch, rx_cb.array.num_elements,
                         tx_cb.array.num_elements), dtype=np.complex128)

    for i, t in enumerate(range(trial_lo, trial_hi)):
        chan_rng, noise_rng = trial_rngs(base_seed, t)
        ch = model.sample(tx_cb.array, rx_cb.array, chan_rng)
        if ideal:
            path = ch.paths[0]
            aod_sine[i] = np.sin(np.radians(path.aod_deg))
            aoa_sine[i] = np.sin(np.radians(path.aoa_deg))
            gains[i] = path.complex_gain
        else:
            mats[i] = ch.matrix
        draws = noise_rng.standard_normal(2 * total)
        zeta[i] = (draws[0::2] + 1j * draws[1::2]) * _INV_SQRT2

    h = np.zeros((batch, total), dtype=np.complex128)
    if ideal:
        rows = np.arange(batch)
        for k in range(layout.num_levels):
            tx_idx, tx_member = _containing_indices(tx_cb.sector, aod_sine,
                                                    int(layout.tx_sizes[k]))
            rx_idx, rx_member = _containing_indices(rx_cb.sector, aoa_sine,
                                                    int(layout.rx_sizes[k]))
            w_gain = tx_cb.flat_gains(k)[tx_idx]
            f_gain = rx_cb.flat_gains(_rx_level(rx_cb, k))[rx_idx]
            member = tx_member & rx_member
            slots = layout.offsets[k] + tx_idx * layout.rx_sizes[k] + rx_idx
            h[rows[member], slots[member]] = (
                gains[member] * np.sqrt(w_gain[member] * f_gain[member]))
    else:
        for k in range(layout.num_levels):
            f_mat = rx_cb.weights_matrix(_rx_level(rx_cb, k))
            w_mat = tx_cb.weights_matrix(k)
            # (L_r, N_r) @ (B, N_r, N_t) @ (N_t, L_t) -> (B, L_r, L_t)
            block = np.matmul(np.matmul(f_mat, mats), w_mat.conj().T)
            block = block.transpose(0, 2, 1).reshape(batch, -1)
            off = int(layout.offsets[k])
            h[:, off:off + block.shape[1]] = block
    return h, zeta


def _containing_indices(sector, sines, size):
    """Codeword index per trial at one level, plus sector membership flags."""
    lo, hi = sector.lo, sector.hi
    member = (sines >= lo) & (sines <= hi)
    idx = ((sines - lo) / (hi - lo) * size).astype(np.int64)
    np.clip(idx, 0, size - 1, out=idx)
    return idx, member
