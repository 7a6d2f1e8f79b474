"""Zipf workload generation and skew estimation."""

import numpy as np
import pytest
from scipy import stats

from cdcsim.errors import ParseError, ValidationError
from cdcsim.workload import (
    CommunityInterest,
    Request,
    WorkloadSampler,
    default_catalog,
    mle_skew,
    random_interest,
    read_trace,
    shuffle_interests,
    write_trace,
    zipf_pmf,
)


# ---------------------------------------------------------------- pmf


def test_zipf_hand_values():
    # s = 1, 3 items: weights 1, 1/2, 1/3 -> 6/11, 3/11, 2/11
    assert np.allclose(zipf_pmf(1.0, 3), [6 / 11, 3 / 11, 2 / 11])


def test_zipf_zero_skew_is_uniform():
    assert np.allclose(zipf_pmf(0.0, 7), np.full(7, 1 / 7))


def test_zipf_normalizes():
    for skew in (0.0, 0.3, 1.0, 2.0, 4.0):
        for size in (1, 10, 600):
            assert abs(zipf_pmf(skew, size).sum() - 1.0) < 1e-12


def test_zipf_monotone_in_rank():
    pmf = zipf_pmf(1.5, 100)
    assert np.all(np.diff(pmf) < 0)


def test_zipf_rejects_bad_args():
    with pytest.raises(ValidationError):
        zipf_pmf(-0.1, 10)
    with pytest.raises(ValidationError):
        zipf_pmf(1.0, 0)


# ---------------------------------------------------------------- interests


def test_interest_permutation_is_a_bijection():
    it = random_interest((0.0, 2.0), 50, np.random.default_rng(0))
    assert sorted(it.rank_of.tolist()) == list(range(50))
    assert np.array_equal(it.content_by_rank[it.rank_of], np.arange(50))


def test_interest_skew_bounds():
    rng = np.random.default_rng(1)
    for _ in range(20):
        it = random_interest((0.5, 1.5), 10, rng)
        assert 0.5 <= it.skew <= 1.5
    pinned = random_interest((0.7, 0.7), 10, rng)
    assert pinned.skew == 0.7
    with pytest.raises(ValidationError):
        random_interest((1.0, 0.5), 10, rng)


def test_content_pmf_composes_permutation():
    it = CommunityInterest.make(1.0, np.array([2, 0, 1]))  # content 1 holds rank 0
    pmf = it.content_pmf(3)
    base = zipf_pmf(1.0, 3)
    assert pmf[1] == base[0]
    assert pmf[2] == base[1]
    assert pmf[0] == base[2]
    assert abs(pmf.sum() - 1.0) < 1e-12


def test_shuffle_replaces_every_interest():
    rng = np.random.default_rng(3)
    before = [random_interest((0.0, 2.0), 40, rng) for _ in range(4)]
    after = shuffle_interests(before, (0.0, 2.0), 40, rng)
    assert len(after) == 4
    assert any(not np.array_equal(a.rank_of, b.rank_of) for a, b in zip(before, after))


# ---------------------------------------------------------------- sampling


def make_sampler(skews, node_community, request_probs, size=30):
    interests = [CommunityInterest.make(s, np.random.default_rng(i).permutation(size))
                 for i, s in enumerate(skews)]
    return WorkloadSampler(interests, np.asarray(node_community),
                           np.asarray(request_probs, dtype=float), size)


def test_sampler_is_deterministic():
    sampler = make_sampler([1.0, 0.5], [0, 0, 1, 1], [0.1, 0.4, 0.3, 0.2])
    a = sampler.sample_batch(np.random.default_rng(7), 100)
    b = sampler.sample_batch(np.random.default_rng(7), 100)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_sampled_origins_follow_request_probs():
    probs = [0.1, 0.4, 0.3, 0.2]
    sampler = make_sampler([0.0], [0, 0, 0, 0], probs)
    origins, _ = sampler.sample_batch(np.random.default_rng(11), 40_000)
    counts = np.bincount(origins, minlength=4)
    res = stats.chisquare(counts, 40_000 * np.array(probs))
    assert res.pvalue > 0.001


def test_sampled_contents_follow_community_pmf():
    size = 30
    sampler = make_sampler([1.2], [0], [1.0], size=size)
    _, contents = sampler.sample_batch(np.random.default_rng(5), 60_000)
    counts = np.bincount(contents, minlength=size)
    expected = 60_000 * sampler.interests[0].content_pmf(size)
    res = stats.chisquare(counts, expected)
    assert res.pvalue > 0.001


def test_communities_sample_from_their_own_interest():
    # two communities with opposite permutations over a tiny, highly skewed catalog
    size = 5
    it0 = CommunityInterest.make(3.0, np.arange(size))
    it1 = CommunityInterest.make(3.0, np.arange(size)[::-1].copy())
    sampler = WorkloadSampler([it0, it1], np.array([0, 1]), np.array([0.5, 0.5]), size)
    origins, contents = sampler.sample_batch(np.random.default_rng(2), 20_000)
    top0 = np.bincount(contents[origins == 0], minlength=size).argmax()
    top1 = np.bincount(contents[origins == 1], minlength=size).argmax()
    assert top0 == 0    # rank 0 content for community 0
    assert top1 == 4    # reversed permutation puts rank 0 at the last id


def test_single_sample_shape():
    sampler = make_sampler([1.0], [0, 0], [0.5, 0.5])
    origin, content = sampler.sample(np.random.default_rng(0))
    assert 0 <= origin < 2
    assert 0 <= content < 30


# ---------------------------------------------------------------- MLE


def draw_zipf(skew, size, count, seed):
    pmf = zipf_pmf(skew, size)
    rng = np.random.default_rng(seed)
    return rng.choice(size, size=count, p=pmf)


def test_mle_recovers_skew():
    for true_skew in (0.5, 1.0, 1.5):
        errs = []
        for seed in range(10):
            obs = draw_zipf(true_skew, 600, 1000, seed)
            errs.append(abs(mle_skew(obs, 600) - true_skew))
        assert np.median(errs) <= 0.15


def test_mle_pins_to_bounds():
    # a single repeated content: likelihood increases with skew without bound
    assert mle_skew(np.zeros(500, dtype=int), 600) == pytest.approx(4.0, abs=1e-3)
    # perfectly even counts: uniform fits best
    assert mle_skew(np.tile(np.arange(600), 5), 600) == pytest.approx(0.0, abs=1e-3)


def test_mle_error_shrinks_with_samples():
    errors = {}
    for count in (100, 10_000):
        errs = [abs(mle_skew(draw_zipf(1.0, 600, count, seed), 600) - 1.0)
                for seed in range(8)]
        errors[count] = np.median(errs)
    assert errors[10_000] < errors[100]


def test_mle_invariant_to_labels():
    # estimation ranks by observed frequency, so relabeling contents is free
    obs = draw_zipf(1.2, 300, 2000, seed=3)
    perm = np.random.default_rng(4).permutation(300)
    assert mle_skew(perm[obs], 300) == pytest.approx(mle_skew(obs, 300), abs=1e-9)


def test_mle_rejects_empty():
    with pytest.raises(ValidationError):
        mle_skew(np.array([], dtype=int), 100)


# ---------------------------------------------------------------- traces


def test_trace_round_trip(tmp_path):
    rows = [(0, 5, 17), (1, 2, 0), (2, 5, 599)]
    path = tmp_path / "trace.csv"
    write_trace(path, rows)
    back = read_trace(path)
    assert [(r.sequence_no, r.origin_node, r.content) for r in back] == rows
    assert isinstance(back[0], Request)


def test_read_trace_errors(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("origin,content\n1,2\n")
    with pytest.raises(ParseError):
        read_trace(bad_header)
    bad_row = tmp_path / "b.csv"
    bad_row.write_text("sequence_no,origin_node,content_id\n0,1,x\n")
    with pytest.raises(ParseError) as err:
        read_trace(bad_row)
    assert ":2:" in str(err.value)
