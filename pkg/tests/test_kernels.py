"""Numba and numpy kernel lanes must produce bit-identical outputs."""

import numpy as np
import pytest

from beamalign import _kernels as kernels
from beamalign._engine import SlotLayout, make_layout
from beamalign.arrays import AngleInterval, UniformLinearArray
from beamalign.codebook import build_hierarchical_codebook

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")


def random_tables(rng, trials, layout):
    h = rng.standard_normal((trials, layout.total)) \
        + 1j * rng.standard_normal((trials, layout.total))
    zeta = (rng.standard_normal((trials, layout.total))
            + 1j * rng.standard_normal((trials, layout.total))) / np.sqrt(2)
    g = h.real ** 2 + h.imag ** 2
    return h, zeta, g


@pytest.fixture(scope="module")
def fig_layout():
    tx = build_hierarchical_codebook(UniformLinearArray(64),
                                     AngleInterval(-0.5, 0.5), [2, 4, 8, 16, 32])
    rx = build_hierarchical_codebook(UniformLinearArray(4),
                                     AngleInterval(-1.0, 1.0), [4])
    return make_layout(tx, rx)


@pytest.fixture(scope="module")
def descending_rx_layout():
    # receive codebook descending in lockstep with the transmit one
    tx = build_hierarchical_codebook(UniformLinearArray(16),
                                     AngleInterval(-0.5, 0.5), [2, 4, 8])
    rx = build_hierarchical_codebook(UniformLinearArray(8),
                                     AngleInterval(-1.0, 1.0), [2, 4, 4])
    return make_layout(tx, rx)


class TestLayout:
    def test_fig_layout_shape(self, fig_layout):
        assert list(fig_layout.tx_sizes) == [2, 4, 8, 16, 32]
        assert list(fig_layout.rx_sizes) == [4, 4, 4, 4, 4]
        assert list(fig_layout.tx_ratios) == [1, 2, 2, 2, 2]
        assert list(fig_layout.rx_ratios) == [1, 1, 1, 1, 1]
        assert fig_layout.total == 8 + 16 + 32 + 64 + 128
        assert fig_layout.top_pairs == 128

    def test_descending_rx(self, descending_rx_layout):
        lay = descending_rx_layout
        assert list(lay.rx_ratios) == [1, 2, 1]
        assert lay.total == 4 + 16 + 32


@needs_numba
class TestLaneEquivalence:
    def test_exhaustive(self, fig_layout):
        rng = np.random.default_rng(123)
        h, zeta, g = random_tables(rng, 4096, fig_layout)
        args = (h, zeta, g, fig_layout.top_offset, fig_layout.top_pairs, 0.37)
        mis_np, slot_np = kernels.exhaustive_eval_numpy(*args)
        mis_nb, slot_nb = kernels.exhaustive_eval_numba(*args)
        assert np.array_equal(mis_np, mis_nb)
        assert np.array_equal(slot_np, slot_nb)

    @pytest.mark.parametrize("layout_name", ["fig_layout", "descending_rx_layout"])
    def test_hierarchical(self, layout_name, request):
        layout = request.getfixturevalue(layout_name)
        rng = np.random.default_rng(321)
        h, zeta, g = random_tables(rng, 4096, layout)
        scales = rng.uniform(0.1, 3.0, layout.num_levels)
        args = (h, zeta, g, layout.offsets, layout.tx_sizes, layout.rx_sizes,
                layout.tx_ratios, layout.rx_ratios, scales)
        mis_np, slot_np = kernels.hier_eval_numpy(*args)
        mis_nb, slot_nb = kernels.hier_eval_numba(*args)
        assert np.array_equal(mis_np, mis_nb)
        assert np.array_equal(slot_np, slot_nb)

    def test_thread_count_invariance(self, fig_layout):
        import numba

        rng = np.random.default_rng(9)
        h, zeta, g = random_tables(rng, 2000, fig_layout)
        args = (h, zeta, g, fig_layout.top_offset, fig_layout.top_pairs, 1.1)
        before = numba.get_num_threads()
        try:
            numba.set_num_threads(1)
            a = kernels.exhaustive_eval_numba(*args)
            numba.set_num_threads(min(4, numba.config.NUMBA_NUM_THREADS))
            b = kernels.exhaustive_eval_numba(*args)
        finally:
            numba.set_num_threads(before)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestTieBreaking:
    def test_first_maximum_wins_both_lanes(self):
        # identical statistics across pairs: lowest index must be chosen
        layout = SlotLayout(
            offsets=np.array([0], dtype=np.int64),
            tx_sizes=np.array([2], dtype=np.int64),
            rx_sizes=np.array([2], dtype=np.int64),
            tx_ratios=np.array([1], dtype=np.int64),
            rx_ratios=np.array([1], dtype=np.int64),
            total=4)
        h = np.ones((3, 4), dtype=complex)
        zeta = np.zeros((3, 4), dtype=complex)
        g = h.real ** 2 + h.imag ** 2
        mis, slot = kernels.exhaustive_eval_numpy(h, zeta, g, 0, 4, 1.0)
        assert np.all(slot == 0) and np.all(mis == 0)
        if kernels.HAVE_NUMBA:
            mis2, slot2 = kernels.exhaustive_eval_numba(h, zeta, g, 0, 4, 1.0)
            assert np.array_equal(mis, mis2) and np.array_equal(slot, slot2)

    def test_noiseless_hier_descends_argmax(self, fig_layout=None):
        tx = build_hierarchical_codebook(UniformLinearArray(16),
                                         AngleInterval(-0.5, 0.5), [2, 4])
        rx = build_hierarchical_codebook(UniformLinearArray(4),
                                         AngleInterval(-1.0, 1.0), [2])
        layout = make_layout(tx, rx)
        rng = np.random.default_rng(4)
        h, zeta, g = random_tables(rng, 512, layout)
        zeta[:] = 0.0
        scales = np.ones(layout.num_levels)
        mis, slot = kernels.hier_eval_numpy(h, zeta, g, layout.offsets,
                                            layout.tx_sizes, layout.rx_sizes,
                                            layout.tx_ratios, layout.rx_ratios,
                                            scales)
        assert not mis.any()   # winner always equals the scanned-set optimum
        assert (slot >= layout.top_offset).all()
