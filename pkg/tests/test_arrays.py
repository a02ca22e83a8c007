"""Steering vectors, beam synthesis, ideal gains, and codebook structure."""

import json
import math
import pathlib

import numpy as np
import pytest

from beamalign.arrays import (
    AngleInterval,
    Beamformer,
    UniformLinearArray,
    beam_gain,
    beam_gain_from_sine,
    ideal_gain,
    steering_from_sine,
    steering_vector,
    synthesize_deactivation,
)
from beamalign.codebook import HierarchicalCodebook, build_hierarchical_codebook

GOLDEN = pathlib.Path(__file__).parent / "data" / "codebook_n8.json"


def matched_beam(array, angle_deg, coverage=AngleInterval(-1.0, 1.0)):
    v = steering_vector(array, angle_deg)
    return Beamformer(weights=v / math.sqrt(array.num_elements), coverage=coverage)


class TestSteering:
    def test_broadside_all_ones(self):
        v = steering_vector(UniformLinearArray(4), 0.0)
        assert np.allclose(v, np.ones(4))

    def test_endfire_alternates(self):
        v = steering_vector(UniformLinearArray(2), 90.0)
        assert np.allclose(v, [1.0, -1.0], atol=1e-12)

    def test_unnormalized_norm(self):
        v = steering_vector(UniformLinearArray(64), 17.3)
        assert np.linalg.norm(v) ** 2 == pytest.approx(64.0)

    def test_matched_beam_gain(self):
        arr = UniformLinearArray(64)
        beam = matched_beam(arr, 12.0)
        assert beam_gain(beam, arr, 12.0) == pytest.approx(64.0, rel=1e-12)


class TestBeamformerInvariants:
    def test_rejects_non_unit_norm(self):
        with pytest.raises(ValueError, match="unit norm"):
            Beamformer(weights=np.ones(4), coverage=AngleInterval(-1, 1))

    def test_rejects_mixed_moduli(self):
        w = np.array([0.8, 0.6, 0.0, 0.0], dtype=complex)
        with pytest.raises(ValueError, match="common modulus"):
            Beamformer(weights=w, coverage=AngleInterval(-1, 1))

    def test_rejects_both_or_neither(self):
        with pytest.raises(ValueError):
            Beamformer(weights=None, coverage=AngleInterval(-1, 1))
        with pytest.raises(ValueError):
            Beamformer(weights=np.ones(2) / math.sqrt(2),
                       coverage=AngleInterval(-1, 1), flat_gain=2.0)


class TestDeactivation:
    def test_narrowest_uses_full_array(self):
        arr = UniformLinearArray(64)
        beam = synthesize_deactivation(arr, AngleInterval(0.0, 1.0 / 32.0))
        assert beam.num_active == 64
        v = steering_from_sine(arr, beam.coverage.mid)
        assert np.allclose(beam.weights, v / 8.0)

    def test_wide_beam_four_active(self):
        arr = UniformLinearArray(64)
        beam = synthesize_deactivation(arr, AngleInterval(-0.5, 0.0))
        assert beam.num_active == 4
        assert beam_gain_from_sine(beam, arr, beam.coverage.mid) == pytest.approx(4.0)

    def test_single_element_flat(self):
        arr = UniformLinearArray(4)
        beam = synthesize_deactivation(arr, AngleInterval(-1.0, 1.0))
        assert beam.num_active == 1
        for angle in (-70.0, -10.0, 0.0, 55.0):
            assert beam_gain(beam, arr, angle) == pytest.approx(1.0)

    def test_too_narrow_fails(self):
        with pytest.raises(ValueError, match="active elements"):
            synthesize_deactivation(UniformLinearArray(8), AngleInterval(0.0, 0.1))

    def test_energy_conservation(self):
        # mean gain over a uniform sine grid equals 1 for unit-norm weights;
        # a >2N-point rectangle rule integrates the trig polynomial exactly
        arr = UniformLinearArray(64)
        for cover in (AngleInterval(-0.5, 0.0), AngleInterval(0.25, 0.5),
                      AngleInterval(0.0, 1.0 / 32.0)):
            beam = synthesize_deactivation(arr, cover)
            grid = -1.0 + 2.0 * np.arange(4 * 64) / (4 * 64)
            gains = [beam_gain_from_sine(beam, arr, s) for s in grid]
            assert np.mean(gains) == pytest.approx(1.0, abs=1e-6)

    def test_floor_exceeds_alias_aware_leakage(self):
        # inside floor must dominate leakage outside a one-beamwidth guard
        # band; distances are taken modulo the sine-space alias period 2
        # (a half-wavelength ULA pattern satisfies |AF(d)| = |AF(2 - d)|)
        arr = UniformLinearArray(64)
        for cover in (AngleInterval(-0.5, 0.0), AngleInterval(0.375, 0.5)):
            beam = synthesize_deactivation(arr, cover)
            half = cover.width / 2.0
            guard = 2.0 / beam.num_active
            grid = np.linspace(-1.0, 1.0, 4001)
            d = np.abs(grid - cover.mid)
            alias_d = np.minimum(d % 2.0, 2.0 - (d % 2.0))
            inside = alias_d <= half
            outside = alias_d > half + guard
            gains = np.array([beam_gain_from_sine(beam, arr, s) for s in grid])
            floor = gains[inside].min()
            leak = gains[outside].max() if outside.any() else 0.0
            assert floor > leak


class TestIdealGain:
    def test_top_level_full_gain(self):
        assert ideal_gain((32, 4), (32, 4), (64, 4), True, True) == 256.0

    def test_first_level(self):
        assert ideal_gain((2, 4), (32, 4), (64, 4), True, True) == 16.0

    def test_outside_zero(self):
        assert ideal_gain((32, 4), (32, 4), (64, 4), False, True) == 0.0
        assert ideal_gain((32, 4), (32, 4), (64, 4), True, False) == 0.0

    def test_energy_consistency_across_levels(self):
        # per-side gain times one interval width is level-independent
        sector_width = 1.0
        products = []
        for size in (2, 4, 8, 16, 32):
            w = ideal_gain((size, 4), (32, 4), (64, 4), True, True) / 4.0
            products.append(w * sector_width / size)
        assert np.allclose(products, products[0], rtol=1e-12)

    def test_oversized_level_rejected(self):
        with pytest.raises(ValueError):
            ideal_gain((64, 4), (32, 4), (64, 4), True, True)


@pytest.fixture(scope="module")
def fig_codebooks():
    tx = build_hierarchical_codebook(UniformLinearArray(64),
                                     AngleInterval(-0.5, 0.5),
                                     [2, 4, 8, 16, 32])
    rx = build_hierarchical_codebook(UniformLinearArray(4),
                                     AngleInterval(-1.0, 1.0), [4])
    return tx, rx


class TestCodebook:
    def test_level_structure(self, fig_codebooks):
        tx, rx = fig_codebooks
        assert tx.level_sizes == [2, 4, 8, 16, 32]
        assert rx.level_sizes == [4]
        for k, lvl in enumerate(tx.levels):
            widths = [bf.coverage.width for bf in lvl]
            assert np.allclose(widths, 1.0 / len(lvl))

    def test_all_codewords_valid(self, fig_codebooks):
        tx, _ = fig_codebooks
        for lvl in tx.levels:
            for bf in lvl:
                norm_sq = float(np.sum(np.abs(bf.weights) ** 2))
                assert abs(norm_sq - 1.0) <= 1e-12
                mods = np.abs(bf.weights)
                active = mods > 1e-12
                assert np.ptp(mods[active]) <= 1e-12

    def test_partition_each_level(self, fig_codebooks):
        tx, _ = fig_codebooks
        rng = np.random.default_rng(11)
        points = rng.uniform(-0.5, 0.5, 10_000)
        for k, lvl in enumerate(tx.levels):
            idx = np.array([tx.codeword_containing(k, s) for s in points])
            for s, i in zip(points[:200], idx[:200]):
                hits = [l for l, bf in enumerate(lvl) if bf.coverage.contains(s)]
                assert hits == [int(i)]
            assert ((idx >= 0) & (idx < len(lvl))).all()

    def test_nesting_exact(self, fig_codebooks):
        tx, _ = fig_codebooks
        for k in range(tx.num_levels - 1):
            for l, parent in enumerate(tx.levels[k]):
                kids = [tx.levels[k + 1][c] for c in tx.children(k, l)]
                assert kids[0].coverage.lo == parent.coverage.lo
                assert kids[-1].coverage.hi == parent.coverage.hi
                for a, b in zip(kids, kids[1:]):
                    assert a.coverage.hi == b.coverage.lo

    def test_children_disjoint_across_parents(self, fig_codebooks):
        tx, _ = fig_codebooks
        for k in range(tx.num_levels - 1):
            seen = set()
            for l in range(len(tx.levels[k])):
                kids = set(tx.children(k, l))
                assert not (kids & seen)
                seen |= kids
            assert seen == set(range(len(tx.levels[k + 1])))

    def test_ragged_nesting_rejected(self):
        arr = UniformLinearArray(8)
        with pytest.raises(ValueError, match="ragged"):
            build_hierarchical_codebook(arr, AngleInterval(-0.5, 0.5), [2, 3])
        with pytest.raises(ValueError, match="nondecreasing"):
            build_hierarchical_codebook(arr, AngleInterval(-0.5, 0.5), [4, 2])

    def test_ideal_codebook_gains(self):
        tx = build_hierarchical_codebook(UniformLinearArray(64),
                                         AngleInterval(-0.5, 0.5),
                                         [2, 4, 8, 16, 32], synthesis="ideal")
        assert [lvl[0].flat_gain for lvl in tx.levels] == [4.0, 8.0, 16.0, 32.0, 64.0]

    def test_serialization_roundtrip(self, fig_codebooks, tmp_path):
        tx, _ = fig_codebooks
        path = tmp_path / "cb.json"
        tx.save_json(path)
        back = HierarchicalCodebook.load_json(path)
        assert back.level_sizes == tx.level_sizes
        assert back.sector == tx.sector
        for lvl_a, lvl_b in zip(tx.levels, back.levels):
            for a, b in zip(lvl_a, lvl_b):
                assert a.coverage == b.coverage
                assert np.array_equal(a.weights, b.weights)

    def test_golden_file(self):
        cb = build_hierarchical_codebook(UniformLinearArray(8),
                                         AngleInterval(-0.5, 0.5), [2, 4])
        with open(GOLDEN) as fh:
            golden = json.load(fh)
        assert cb.to_json_dict() == golden
