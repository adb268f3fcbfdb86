import numpy as np
import pytest

from condguide import (
    BinaryMask,
    CharacterRank,
    DegenerateRegionError,
    DepthConvention,
    DepthRaster,
    IdentityMismatchError,
    compose_order_map,
    compute_reference_ranks,
    depth_order_inference,
    depth_order_training,
    mask_area,
    mask_intersection,
    non_intersection_regions,
    rank_by_depth,
)

from conftest import frame_of, line_topology, make_character, painter_oracle
from test_dilation import dparams


def col_band_mask(lo, hi, size=8):
    cols = np.arange(size)
    return BinaryMask(np.tile(((cols >= lo) & (cols <= hi)).astype(np.uint8), (size, 1)))


def depth_plane(values, convention=DepthConvention.LARGER_IS_CLOSER):
    return DepthRaster(np.asarray(values, dtype=np.float32), convention=convention)


def split_depth(size=8, left=0.8, right=0.2):
    d = np.full((size, size), right, dtype=np.float32)
    d[:, : size // 2] = left
    return depth_plane(d)


class TestNonIntersectionRegions:
    def test_single_character_unchanged(self):
        a = col_band_mask(0, 4)
        [m] = non_intersection_regions([a])
        assert np.array_equal(m.data, a.data)

    def test_disjoint_masks_unchanged(self):
        a, b = col_band_mask(0, 2), col_band_mask(5, 7)
        ma, mb = non_intersection_regions([a, b])
        assert np.array_equal(ma.data, a.data)
        assert np.array_equal(mb.data, b.data)

    def test_column_band_enumeration(self):
        a, b = col_band_mask(0, 4), col_band_mask(3, 7)
        ma, mb = non_intersection_regions([a, b])
        assert np.array_equal(ma.data, col_band_mask(0, 2).data)
        assert np.array_equal(mb.data, col_band_mask(5, 7).data)

    def test_pairwise_disjoint_and_contained(self):
        rng = np.random.default_rng(4)
        masks = [
            BinaryMask(rng.integers(0, 2, size=(12, 12)).astype(np.uint8))
            for _ in range(4)
        ]
        regions = non_intersection_regions(masks)
        for m, r in zip(masks, regions):
            assert (r.boolean() <= m.boolean()).all()
        for j in range(4):
            for k in range(j + 1, 4):
                assert mask_area(mask_intersection([regions[j], regions[k]])) == 0


class TestRankByDepth:
    def test_single_character(self):
        [r] = rank_by_depth([col_band_mask(0, 4)], split_depth())
        assert (r.rank, r.level_value) == (1, 1.0)

    def test_two_characters_larger_is_closer(self):
        regions = [col_band_mask(0, 2), col_band_mask(5, 7)]
        ranks = rank_by_depth(regions, split_depth(), character_ids=[7, 9])
        assert [(r.character_id, r.rank, r.level_value) for r in ranks] == [
            (7, 1, 1.0),
            (9, 2, 0.5),
        ]
        assert ranks[0].mean_depth == pytest.approx(0.8)
        assert ranks[1].mean_depth == pytest.approx(0.2)

    def test_smaller_is_closer_flips_order(self):
        regions = [col_band_mask(0, 2), col_band_mask(5, 7)]
        d = split_depth()
        flipped = DepthRaster(d.data, convention=DepthConvention.SMALLER_IS_CLOSER)
        ranks = rank_by_depth(regions, flipped, character_ids=[7, 9])
        assert [(r.character_id, r.rank) for r in ranks] == [(9, 1), (7, 2)]

    def test_equal_means_tie_break_by_lower_id(self):
        flat = depth_plane(np.full((8, 8), 0.5, dtype=np.float32))
        ranks = rank_by_depth(
            [col_band_mask(0, 2), col_band_mask(5, 7)], flat, character_ids=[1, 0]
        )
        assert [(r.character_id, r.rank) for r in ranks] == [(0, 1), (1, 2)]

    def test_empty_region_error_names_character(self):
        empty = BinaryMask(np.zeros((8, 8), dtype=np.uint8))
        with pytest.raises(DegenerateRegionError) as info:
            rank_by_depth([col_band_mask(0, 2), empty], split_depth(),
                          character_ids=[4, 6])
        assert info.value.character_id == 6
        assert "6" in str(info.value)

    def test_push_back_fallback_ranks_occluded_last(self):
        empty = BinaryMask(np.zeros((8, 8), dtype=np.uint8))
        ranks = rank_by_depth(
            [empty, col_band_mask(0, 2)], split_depth(),
            character_ids=[4, 6], on_empty_region="push_back",
        )
        assert [(r.character_id, r.rank) for r in ranks] == [(6, 1), (4, 2)]
        assert np.isnan(ranks[1].mean_depth)

    def test_increasing_affine_transform_preserves_ranks(self):
        rng = np.random.default_rng(13)
        regions = non_intersection_regions(
            [
                BinaryMask(rng.integers(0, 2, size=(10, 10)).astype(np.uint8))
                for _ in range(3)
            ]
        )
        base = depth_plane(rng.uniform(0.1, 0.9, size=(10, 10)).astype(np.float32))
        transformed = depth_plane(3.0 * base.plane() + 1.5)
        r1 = rank_by_depth(regions, base)
        r2 = rank_by_depth(regions, transformed)
        assert [(r.character_id, r.rank) for r in r1] == [
            (r.character_id, r.rank) for r in r2
        ]

    def test_non_affine_monotone_transform_can_flip_mean_ranks(self):
        # Mean-based ranking is only affine-invariant: sqrt lifts the flat
        # region's mean above the spread one's. Documents the boundary.
        d = np.zeros((1, 4), dtype=np.float32)
        d[0] = [0.0, 1.0, 0.45, 0.45]
        region_a = BinaryMask(np.array([[1, 1, 0, 0]], dtype=np.uint8))
        region_b = BinaryMask(np.array([[0, 0, 1, 1]], dtype=np.uint8))
        before = rank_by_depth([region_a, region_b], depth_plane(d))
        after = rank_by_depth([region_a, region_b], depth_plane(np.sqrt(d)))
        assert [(r.character_id, r.rank) for r in before] == [(0, 1), (1, 2)]
        assert [(r.character_id, r.rank) for r in after] == [(1, 1), (0, 2)]


def ranks_of(*pairs):
    total = len(pairs)
    return [
        CharacterRank(cid, 0.0, rank, (total - rank + 1) / total)
        for cid, rank in pairs
    ]


class TestComposeOrderMap:
    def test_single_character(self):
        a = col_band_mask(2, 5)
        out = compose_order_map([a], ranks_of((0, 1)))
        assert np.array_equal(out.plane(), a.plane().astype(np.float32))

    def test_overlap_owned_by_front(self):
        a, b = col_band_mask(0, 4), col_band_mask(3, 7)
        out = compose_order_map([a, b], ranks_of((0, 1), (1, 2)))
        plane = out.plane()
        assert (plane[:, 0:5] == 1.0).all()  # includes overlap cols 3-4
        assert (plane[:, 5:8] == 0.5).all()

    def test_three_nested_masks_against_scan_oracle(self):
        inner = col_band_mask(3, 4, 12)
        mid = col_band_mask(2, 6, 12)
        outer = col_band_mask(0, 8, 12)
        ranks = ranks_of((0, 1), (1, 2), (2, 3))
        out = compose_order_map([inner, mid, outer], ranks)
        want = painter_oracle(
            [inner.boolean(), mid.boolean(), outer.boolean()],
            [r.level_value for r in ranks],
        )
        assert np.array_equal(out.plane(), want)

    def test_random_stacks_against_scan_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            j = int(rng.integers(1, 6))
            masks = [
                BinaryMask(rng.integers(0, 2, size=(16, 16)).astype(np.uint8))
                for _ in range(j)
            ]
            perm = rng.permutation(j)
            ranks = [
                CharacterRank(int(cid), 0.0, int(r + 1), (j - r) / j)
                for r, cid in enumerate(perm)
            ]
            out = compose_order_map(masks, ranks, character_ids=list(range(j)))
            front_to_back = sorted(ranks, key=lambda e: e.rank)
            want = painter_oracle(
                [masks[e.character_id].boolean() for e in front_to_back],
                [e.level_value for e in front_to_back],
            )
            assert np.array_equal(out.plane(), want)

    def test_value_set_matches_levels(self):
        a, b = col_band_mask(0, 3), col_band_mask(2, 5)  # cols 6-7 stay background
        out = compose_order_map([a, b], ranks_of((0, 1), (1, 2)))
        assert set(np.unique(out.plane()).tolist()) == {0.0, 0.5, 1.0}


def two_character_scene(width=64, height=40, swap=False):
    topo = line_topology(2)
    a_pts = [(14.0, 12.0), (22.0, 24.0)]
    b_pts = [(34.0, 12.0), (42.0, 24.0)]
    if swap:
        a_pts, b_pts = b_pts, a_pts
    chars = [make_character(0, a_pts), make_character(1, b_pts)]
    return topo, frame_of(chars, width, height)


class TestTrainingPipeline:
    def test_column_fixture_end_to_end_by_stages(self):
        # masks A cols 0-4, B cols 3-7; depth left 0.8 / right 0.2
        a, b = col_band_mask(0, 4), col_band_mask(3, 7)
        regions = non_intersection_regions([a, b])
        ranks = rank_by_depth(regions, split_depth(), character_ids=[0, 1])
        out = compose_order_map([a, b], ranks, character_ids=[0, 1])
        want = np.zeros((8, 8), dtype=np.float32)
        want[:, 0:5] = 1.0
        want[:, 5:8] = 0.5
        assert np.array_equal(out.plane(), want)

    def test_zero_characters_zero_map(self):
        out = depth_order_training(
            frame_of([], 16, 12), depth_plane(np.zeros((12, 16), np.float32))
        )
        assert out.data.shape == (12, 16, 1)
        assert not out.data.any()

    def test_pose_driven_scene_matches_scan_oracle(self):
        topo, frame = two_character_scene()
        d = np.full((40, 64), 0.2, dtype=np.float32)
        d[:, :28] = 0.9  # character 0 (left) nearer
        depth = depth_plane(d)
        params = dparams(64, 3.0, 3.0, rho_floor=3.0)
        out = depth_order_training(frame, depth, topo, params)
        from condguide import frame_dilation_maps

        maps = frame_dilation_maps(frame, topo, params)
        want = painter_oracle(
            [maps[0].boolean(), maps[1].boolean()], [1.0, 0.5]
        )
        assert np.array_equal(out.plane(), want)

    def test_negated_depth_with_flipped_convention_identical(self):
        topo, frame = two_character_scene()
        d = np.linspace(0.1, 0.9, 40 * 64, dtype=np.float32).reshape(40, 64)
        params = dparams(64, 3.0, 3.0, rho_floor=3.0)
        out1 = depth_order_training(frame, depth_plane(d), topo, params)
        out2 = depth_order_training(
            frame,
            DepthRaster(-d, convention=DepthConvention.SMALLER_IS_CLOSER),
            topo,
            params,
        )
        assert np.array_equal(out1.data, out2.data)


class TestInference:
    def test_reference_frame_reproduces_training(self):
        topo, frame = two_character_scene()
        d = np.full((40, 64), 0.2, dtype=np.float32)
        d[:, :28] = 0.9
        depth = depth_plane(d)
        params = dparams(64, 3.0, 3.0, rho_floor=3.0)
        reference = compute_reference_ranks(frame, depth, topo, params)
        out_inf = depth_order_inference(reference, frame, topo, params)
        out_train = depth_order_training(frame, depth, topo, params)
        assert np.array_equal(out_inf.data, out_train.data)

    def test_levels_follow_ids_not_positions(self):
        topo, frame = two_character_scene()
        d = np.full((40, 64), 0.2, dtype=np.float32)
        d[:, :28] = 0.9
        params = dparams(64, 3.0, 3.0, rho_floor=3.0)
        reference = compute_reference_ranks(frame, depth_plane(d), topo, params)
        # characters swap screen sides but keep their ids
        _, swapped = two_character_scene(swap=True)
        out = depth_order_inference(reference, swapped, topo, params)
        from condguide import frame_dilation_maps

        maps = frame_dilation_maps(swapped, topo, params)
        # id 0 still frontmost (level 1.0) even though it moved right
        want = painter_oracle([maps[0].boolean(), maps[1].boolean()], [1.0, 0.5])
        assert np.array_equal(out.plane(), want)

    def test_unknown_id_is_identity_mismatch(self):
        topo, frame = two_character_scene()
        reference = ranks_of((0, 1))  # knows only character 0
        with pytest.raises(IdentityMismatchError):
            depth_order_inference(reference, frame, topo)
