"""Search-evaluation kernels over per-trial measurement tables.

Two interchangeable lanes: numba-jitted per-trial loops (parallel over
trials) and a pure-numpy vectorized path.  The numba lane is used when numba
imports cleanly, unless BEAMALIGN_DISABLE_NUMBA or NUMBA_DISABLE_JIT is set
in the environment.  Both lanes perform the same floating-point operations
in the same order, so their outputs are bit-identical; see
benchmarks/bench_kernels.py for the speed comparison.

Tables: ``h`` and ``zeta`` are (trials, slots) complex128 arrays holding the
effective channel and the unit complex Gaussian noise draw of every
potential beam-pair measurement; ``g`` is the noiseless gain table |h|^2.
Slots are grouped per level, transmit-major.  The measurement statistic is
monotone in (h * scale + zeta) squared modulus, so the 2/sigma^2
normalization is dropped inside the argmax.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "USE_NUMBA",
    "BACKEND",
    "exhaustive_eval",
    "hier_eval",
    "exhaustive_eval_numpy",
    "hier_eval_numpy",
    "exhaustive_eval_numba",
    "hier_eval_numba",
]


def _numba_disabled_by_env() -> bool:
    for var in ("BEAMALIGN_DISABLE_NUMBA", "NUMBA_DISABLE_JIT"):
        if os.environ.get(var, "") not in ("", "0", "false", "False"):
            return True
    return False


try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap


USE_NUMBA = HAVE_NUMBA and not _numba_disabled_by_env()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy lane
# ---------------------------------------------------------------------------

def exhaustive_eval_numpy(h, zeta, g, offset, num_pairs, scale):
    """Single-level scan: winner by statistic vs winner by noiseless gain.

    Returns ``(mis, slot)``: per-trial misalignment flags (uint8) and the
    chosen slot index into the full table.
    """
    sl = slice(offset, offset + num_pairs)
    re = h.real[:, sl] * scale + zeta.real[:, sl]
    im = h.imag[:, sl] * scale + zeta.imag[:, sl]
    stat = re * re + im * im
    chosen = np.argmax(stat, axis=1)
    opt = np.argmax(g[:, sl], axis=1)
    mis = (chosen != opt).astype(np.uint8)
    return mis, offset + chosen


def hier_eval_numpy(h, zeta, g, offsets, tx_sizes, rx_sizes,
                    tx_ratios, rx_ratios, scales):
    """K-level descent: full first-level scan, then children of the winner.

    ``tx_ratios[k]`` / ``rx_ratios[k]`` are the per-side child counts at
    level k >= 1 (rx ratio 1 keeps the first-level combiner fixed).
    Misalignment is judged against the noiseless optimum among the pairs
    scanned at each level.  Returns ``(mis, final_slot)``.
    """
    num_levels = len(offsets)
    l1 = tx_sizes[0] * rx_sizes[0]
    sl = slice(offsets[0], offsets[0] + l1)
    re = h.real[:, sl] * scales[0] + zeta.real[:, sl]
    im = h.imag[:, sl] * scales[0] + zeta.imag[:, sl]
    stat = re * re + im * im
    win = np.argmax(stat, axis=1)
    opt = np.argmax(g[:, sl], axis=1)
    mis = win != opt
    tx = win // rx_sizes[0]
    rx = win % rx_sizes[0]
    for k in range(1, num_levels):
        r_t = tx_ratios[k]
        r_r = rx_ratios[k]
        cand_t = tx[:, None] * r_t + np.arange(r_t)
        cand_r = rx[:, None] * r_r + np.arange(r_r)
        slots = offsets[k] + (cand_t[:, :, None] * rx_sizes[k]
                              + cand_r[:, None, :]).reshape(len(tx), r_t * r_r)
        hv = np.take_along_axis(h, slots, axis=1)
        zv = np.take_along_axis(zeta, slots, axis=1)
        gv = np.take_along_axis(g, slots, axis=1)
        re = hv.real * scales[k] + zv.real
        im = hv.imag * scales[k] + zv.imag
        stat = re * re + im * im
        win = np.argmax(stat, axis=1)
        opt = np.argmax(gv, axis=1)
        mis = mis | (win != opt)
        tx = tx * r_t + win // r_r
        rx = rx * r_r + win % r_r
    final_slot = offsets[num_levels - 1] + tx * rx_sizes[num_levels - 1] + rx
    return mis.astype(np.uint8), final_slot


# ---------------------------------------------------------------------------
# numba lane (identical arithmetic, per-trial loops)
# ---------------------------------------------------------------------------

def _exhaustive_loop(h, zeta, g, offset, num_pairs, scale, mis, slot):
    for t in prange(h.shape[0]):
        best_stat = -1.0
        best = 0
        best_gain = -1.0
        opt = 0
        for i in range(num_pairs):
            s = offset + i
            re = h[t, s].real * scale + zeta[t, s].real
            im = h[t, s].imag * scale + zeta[t, s].imag
            stat = re * re + im * im
            if stat > best_stat:
                best_stat = stat
                best = i
            gv = g[t, s]
            if gv > best_gain:
                best_gain = gv
                opt = i
        mis[t] = 1 if best != opt else 0
        slot[t] = offset + best


def _hier_loop(h, zeta, g, offsets, tx_sizes, rx_sizes,
               tx_ratios, rx_ratios, scales, mis, slot):
    num_levels = offsets.shape[0]
    for t in prange(h.shape[0]):
        missed = False
        tx = 0
        rx = 0
        for k in range(num_levels):
            if k == 0:
                n_t = tx_sizes[0]
                n_r = rx_sizes[0]
                t0 = 0
                r0 = 0
            else:
                n_t = tx_ratios[k]
                n_r = rx_ratios[k]
                t0 = tx * n_t
                r0 = rx * n_r
            best_stat = -1.0
            best = 0
            best_gain = -1.0
            opt = 0
            idx = 0
            for i in range(n_t):
                for j in range(n_r):
                    s = offsets[k] + (t0 + i) * rx_sizes[k] + (r0 + j)
                    re = h[t, s].real * scales[k] + zeta[t, s].real
                    im = h[t, s].imag * scales[k] + zeta[t, s].imag
                    stat = re * re + im * im
                    if stat > best_stat:
                        best_stat = stat
                        best = idx
                    gv = g[t, s]
                    if gv > best_gain:
                        best_gain = gv
                        opt = idx
                    idx += 1
            if best != opt:
                missed = True
            tx = t0 + best // n_r
            rx = r0 + best % n_r
        mis[t] = 1 if missed else 0
        slot[t] = offsets[num_levels - 1] + tx * rx_sizes[num_levels - 1] + rx


if HAVE_NUMBA:
    _exhaustive_loop_jit = njit(cache=True, parallel=True)(_exhaustive_loop)
    _hier_loop_jit = njit(cache=True, parallel=True)(_hier_loop)

    def exhaustive_eval_numba(h, zeta, g, offset, num_pairs, scale):
        mis = np.empty(h.shape[0], dtype=np.uint8)
        slot = np.empty(h.shape[0], dtype=np.int64)
        _exhaustive_loop_jit(h, zeta, g, offset, num_pairs, scale, mis, slot)
        return mis, slot

    def hier_eval_numba(h, zeta, g, offsets, tx_sizes, rx_sizes,
                        tx_ratios, rx_ratios, scales):
        mis = np.empty(h.shape[0], dtype=np.uint8)
        slot = np.empty(h.shape[0], dtype=np.int64)
        _hier_loop_jit(h, zeta, g, offsets, tx_sizes, rx_sizes,
                       tx_ratios, rx_ratios, scales, mis, slot)
        return mis, slot
else:  # pragma: no cover
    exhaustive_eval_numba = None
    hier_eval_numba = None


if USE_NUMBA:
    exhaustive_eval = exhaustive_eval_numba
    hier_eval = hier_eval_numba
else:
    exhaustive_eval = exhaustive_eval_numpy
    hier_eval = hier_eval_numpy
