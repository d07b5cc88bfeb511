import numpy as np
import pytest

from slicealign.errors import DegenerateInput, EmptyMask, EmptyRegion
from slicealign.metrics import MetricScore, dice, hd95, is_best, nmi, sad


def full(shape):
    return np.ones(shape, dtype=bool)


def brute_force_hd95(a, b, spacing):
    """O(|A||B|) oracle: explicit boundary scan and pairwise distances."""
    def boundary(mask):
        pts = []
        rows, cols = mask.shape
        for i in range(rows):
            for j in range(cols):
                if not mask[i, j]:
                    continue
                on_edge = i in (0, rows - 1) or j in (0, cols - 1)
                neighbors_in = all(mask[i + di, j + dj]
                                   for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
                                   if 0 <= i + di < rows and 0 <= j + dj < cols)
                if on_edge or not neighbors_in:
                    pts.append((i * spacing[0], j * spacing[1]))
        return np.array(pts)

    pa, pb = boundary(np.asarray(a)), boundary(np.asarray(b))
    d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(-1))
    return max(np.percentile(d.min(axis=1), 95), np.percentile(d.min(axis=0), 95))


class TestNmi:
    def test_identical_images_give_two(self):
        rng = np.random.default_rng(0)
        img = rng.random((16, 16))
        score = nmi(img, img, full(img.shape))
        assert abs(score.value - 2.0) < 1e-9
        assert score.kind == "nmi" and score.higher_is_better

    def test_two_pixel_co_informative(self):
        a = np.array([[0.0, 1.0]])
        score = nmi(a, a.copy(), full((1, 2)), bins=2)
        assert abs(score.value - 2.0) < 1e-9

    def test_independent_images_give_one(self):
        # joint histogram is uniform over 4 cells: H(a,b) = H(a) + H(b)
        a = np.array([[0.0, 0.0, 1.0, 1.0]])
        b = np.array([[0.0, 1.0, 0.0, 1.0]])
        score = nmi(a, b, full((1, 4)), bins=2)
        assert abs(score.value - 1.0) < 1e-9

    def test_value_bounded(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            a = rng.random((12, 12))
            b = rng.random((12, 12))
            region = rng.random((12, 12)) > 0.3
            v = nmi(a, b, region).value
            assert 1.0 - 1e-9 <= v <= 2.0 + 1e-9

    def test_invariant_under_bin_preserving_remap(self):
        rng = np.random.default_rng(3)
        a = rng.random((10, 10))
        b = rng.random((10, 10))
        region = full((10, 10))
        v1 = nmi(a, b, region, bins=16).value
        v2 = nmi(3.0 * a + 11.0, b, region, bins=16).value   # affine remap keeps bins
        assert abs(v1 - v2) < 1e-12

    def test_constant_images_degenerate(self):
        with pytest.raises(DegenerateInput):
            nmi(np.ones((4, 4)), np.ones((4, 4)), full((4, 4)))

    def test_empty_region_degenerate(self):
        with pytest.raises(DegenerateInput):
            nmi(np.ones((4, 4)), np.ones((4, 4)), np.zeros((4, 4), bool))


class TestSad:
    def test_identical_zero(self):
        img = np.arange(12.0).reshape(3, 4)
        assert sad(img, img, full((3, 4))).value == 0.0

    def test_direct_arithmetic(self):
        a = np.array([[1.0, 2.0]])
        b = np.array([[0.0, 4.0]])
        assert sad(a, b, full((1, 2))).value == 3.0

    def test_random_against_elementwise_oracle(self):
        rng = np.random.default_rng(31)
        a = rng.normal(size=(8, 8))
        b = rng.normal(size=(8, 8))
        region = rng.random((8, 8)) > 0.4
        expected = sum(abs(a[i, j] - b[i, j])
                       for i in range(8) for j in range(8) if region[i, j])
        assert abs(sad(a, b, region).value - expected) < 1e-9

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(17)
        a, b, c = (rng.normal(size=(6, 6)) for _ in range(3))
        region = full((6, 6))
        assert sad(a, b, region).value == sad(b, a, region).value
        assert sad(a, c, region).value <= sad(a, b, region).value + sad(b, c, region).value + 1e-12

    def test_empty_region(self):
        with pytest.raises(EmptyRegion):
            sad(np.ones((2, 2)), np.ones((2, 2)), np.zeros((2, 2), bool))


class TestDice:
    def test_identical(self):
        m = np.eye(4, dtype=bool)
        assert dice(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((2, 2), bool); a[0, 0] = True
        b = np.zeros((2, 2), bool); b[1, 1] = True
        assert dice(a, b) == 0.0

    def test_half_overlap(self):
        a = np.zeros((4, 4), bool); a[0, :] = True
        b = np.zeros((4, 4), bool); b[:2, :2] = True
        assert dice(a, b) == 0.5     # |a| = |b| = 4, overlap 2

    def test_empty_conventions(self):
        empty = np.zeros((3, 3), bool)
        some = np.ones((3, 3), bool)
        assert dice(empty, empty) == 1.0
        assert dice(empty, some) == 0.0


class TestHd95:
    def test_identical_zero(self):
        m = np.zeros((8, 8), bool)
        m[2:6, 2:6] = True
        assert hd95(m, m, (1.0, 1.0)) == 0.0

    def test_two_points_three_apart(self):
        a = np.zeros((8, 8), bool); a[1, 1] = True
        b = np.zeros((8, 8), bool); b[4, 1] = True
        assert hd95(a, b, (1.0, 1.0)) == 3.0

    def test_shifted_square_matches_brute_force(self):
        rng = np.random.default_rng(55)
        for _ in range(5):
            a = np.zeros((16, 16), bool)
            b = np.zeros((16, 16), bool)
            i, j = rng.integers(1, 4, size=2)
            a[i:i + 10, j:j + 10] = True
            b[i + 2:i + 12, j:j + 10] = True
            got = hd95(a, b, (1.5, 1.5))
            assert abs(got - brute_force_hd95(a, b, (1.5, 1.5))) < 1e-9

    def test_random_blobs_match_brute_force(self):
        rng = np.random.default_rng(56)
        for _ in range(5):
            a = rng.random((12, 12)) > 0.6
            b = rng.random((12, 12)) > 0.6
            if not (a.any() and b.any()):
                continue
            assert abs(hd95(a, b, (1.0, 2.0)) - brute_force_hd95(a, b, (1.0, 2.0))) < 1e-9

    def test_scales_with_isotropic_spacing(self):
        a = np.zeros((10, 10), bool); a[2:5, 2:5] = True
        b = np.zeros((10, 10), bool); b[4:8, 4:8] = True
        assert np.isclose(hd95(a, b, (2.0, 2.0)), 2.0 * hd95(a, b, (1.0, 1.0)))

    def test_symmetric(self):
        rng = np.random.default_rng(58)
        a = rng.random((10, 10)) > 0.5
        b = rng.random((10, 10)) > 0.5
        assert hd95(a, b, (1.0, 1.0)) == hd95(b, a, (1.0, 1.0))

    def test_empty_mask_rejected(self):
        with pytest.raises(EmptyMask):
            hd95(np.zeros((4, 4), bool), np.ones((4, 4), bool), (1.0, 1.0))


class TestIsBest:
    def test_nmi_strictly_better(self):
        assert is_best(MetricScore("nmi", 1.8),
                       [MetricScore("nmi", 1.5), MetricScore("nmi", 1.7)])

    def test_sad_tie_is_not_best(self):
        assert not is_best(MetricScore("sad", 10.0), [MetricScore("sad", 10.0)])

    def test_empty_history_is_best(self):
        assert is_best(MetricScore("sad", 5.0), [])

    def test_random_against_argmin_oracle(self):
        rng = np.random.default_rng(61)
        for kind in ("nmi", "sad"):
            values = rng.random(20).tolist()
            cand = MetricScore(kind, float(rng.random()))
            oracle = all(cand.value > v for v in values) if kind == "nmi" \
                else all(cand.value < v for v in values)
            assert is_best(cand, [MetricScore(kind, v) for v in values]) == oracle
