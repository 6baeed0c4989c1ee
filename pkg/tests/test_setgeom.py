"""Hausdorff distance and neighborhoods on lattice masks."""
import numpy as np
import pytest

import pseudolab.setgeom as setgeom
from pseudolab import (
    ConfigurationError,
    DomainError,
    GridRegion,
    MaskSet,
    delta_neighborhood,
    hausdorff_distance,
    region_with_step,
)
from pseudolab.setgeom import _min_dists_brute, _min_dists_bucketed


def random_mask(rng, region, density=0.2) -> MaskSet:
    mask = rng.random((region.nx, region.ny)) < density
    if not mask.any():
        mask[int(rng.integers(region.nx)), int(rng.integers(region.ny))] = True
    return MaskSet(region, mask)


def disc_mask(region, center, radius) -> MaskSet:
    return MaskSet(region, np.abs(region.lattice() - center) <= radius)


REGION = region_with_step(-1.0, 5.0, -1.0, 5.0, 0.5)


class TestMaskSet:
    def test_points_are_member_coordinates(self):
        s = MaskSet.from_points(REGION, [0.0, 3.0 + 4.0j])
        assert s.size == 2
        assert sorted(s.points().tolist(), key=abs) == [0.0, 3.0 + 4.0j]

    def test_off_lattice_point_rejected(self):
        with pytest.raises(ConfigurationError):
            MaskSet.from_points(REGION, [0.3 + 0.1j])

    def test_outside_region_rejected(self):
        with pytest.raises(ConfigurationError):
            MaskSet.from_points(REGION, [10.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DomainError):
            MaskSet(REGION, np.ones((2, 2), dtype=bool))


class TestHausdorffDistance:
    def test_singletons(self):
        a = MaskSet.from_points(REGION, [0.0])
        b = MaskSet.from_points(REGION, [3.0 + 4.0j])
        assert hausdorff_distance(a, b) == 5.0

    def test_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            s = random_mask(rng, REGION)
            assert hausdorff_distance(s, s) == 0.0

    def test_symmetry_exact(self):
        rng = np.random.default_rng(2)
        region = region_with_step(-1.0, 1.0, -1.0, 1.0, 0.1)
        for _ in range(10):
            a = random_mask(rng, region)
            b = random_mask(rng, region)
            assert hausdorff_distance(a, b) == hausdorff_distance(b, a)

    def test_offset_discs(self):
        region = region_with_step(0.5, 4.0, -1.5, 1.5, 0.05)
        a = disc_mask(region, 2.0, 1.0)
        b = disc_mask(region, 2.5, 1.0)
        assert abs(hausdorff_distance(a, b) - 0.5) <= 0.05

    def test_triangle_inequality(self):
        rng = np.random.default_rng(3)
        region = region_with_step(-1.0, 1.0, -1.0, 1.0, 0.2)
        for _ in range(100):
            a = random_mask(rng, region)
            b = random_mask(rng, region)
            c = random_mask(rng, region)
            d_ac = hausdorff_distance(a, c)
            d_ab = hausdorff_distance(a, b)
            d_bc = hausdorff_distance(b, c)
            assert d_ac <= d_ab + d_bc + 1e-12

    def test_empty_side_named(self):
        full = MaskSet.from_points(REGION, [0.0])
        empty = MaskSet(REGION, np.zeros((REGION.nx, REGION.ny), dtype=bool))
        with pytest.raises(DomainError, match="first"):
            hausdorff_distance(empty, full)
        with pytest.raises(DomainError, match="second"):
            hausdorff_distance(full, empty)

    def test_bucketed_route_matches_brute_force(self, monkeypatch):
        rng = np.random.default_rng(4)
        region = region_with_step(-2.0, 2.0, -2.0, 2.0, 0.1)
        a = random_mask(rng, region, density=0.4)
        b = random_mask(rng, region, density=0.4)
        brute = hausdorff_distance(a, b)
        monkeypatch.setattr(setgeom, "BRUTE_FORCE_LIMIT", 10)
        assert hausdorff_distance(a, b) == brute

    def test_bucketed_kernel_equals_brute_kernel(self):
        rng = np.random.default_rng(5)
        qs = rng.normal(size=200) + 1j * rng.normal(size=200)
        ts = rng.normal(size=300) + 1j * rng.normal(size=300)
        got = _min_dists_bucketed(qs, ts, 0.25)
        want = _min_dists_brute(qs, ts)
        assert np.array_equal(got, want)


class TestDeltaNeighborhood:
    def test_unit_disc_around_origin(self):
        region = region_with_step(-2.0, 2.0, -2.0, 2.0, 0.5)
        s = MaskSet.from_points(region, [0.0])
        nb = delta_neighborhood(s, 1.0)
        want = np.abs(region.lattice()) <= 1.0
        assert np.array_equal(nb.mask, want)

    def test_nested_in_delta(self):
        rng = np.random.default_rng(6)
        region = region_with_step(-1.0, 1.0, -1.0, 1.0, 0.1)
        s = random_mask(rng, region)
        small = delta_neighborhood(s, 0.3)
        large = delta_neighborhood(s, 0.7)
        assert not (small.mask & ~large.mask).any()

    def test_neighborhood_within_delta_of_set(self):
        rng = np.random.default_rng(7)
        region = region_with_step(-1.0, 1.0, -1.0, 1.0, 0.1)
        for _ in range(20):
            s = random_mask(rng, region)
            delta = float(rng.uniform(0.15, 1.0))
            nb = delta_neighborhood(s, delta)
            assert hausdorff_distance(s, nb) <= delta

    def test_mutual_inclusion_bounds_hausdorff(self):
        rng = np.random.default_rng(8)
        region = region_with_step(-1.0, 1.0, -1.0, 1.0, 0.2)
        hits = 0
        for _ in range(30):
            a = random_mask(rng, region)
            b = random_mask(rng, region)
            delta = float(rng.uniform(0.2, 2.5))
            a_in = not (a.mask & ~delta_neighborhood(b, delta).mask).any()
            b_in = not (b.mask & ~delta_neighborhood(a, delta).mask).any()
            if a_in and b_in:
                hits += 1
                assert hausdorff_distance(a, b) <= delta
        assert hits >= 5  # the property must actually have been exercised

    def test_empty_mask_rejected(self):
        empty = MaskSet(REGION, np.zeros((REGION.nx, REGION.ny), dtype=bool))
        with pytest.raises(DomainError):
            delta_neighborhood(empty, 0.5)

    def test_bad_delta_rejected(self):
        s = MaskSet.from_points(REGION, [0.0])
        with pytest.raises(DomainError):
            delta_neighborhood(s, 0.0)
