import concurrent.futures as cf
import random

import pytest

from oplkit.errors import ParseError, PassLimitError
from oplkit.parallel import (ParallelParser, ShuffledExecutor, arithmetic_corpus, benchmark,
                             parallel_parse, recombine, split_chunks)
from oplkit.parser import OpParser, parse

from conftest import mutate, sample_sentence


def outcome(fn):
    try:
        return ("accept", fn())
    except ParseError as exc:
        return ("reject", exc.kind)


class TestSplitting:
    def test_equal_segments_share_borders(self):
        toks = ["e"] * 13
        plan = split_chunks(toks, 3)
        assert plan.k == 3
        assert plan.segments == [(0, 4), (3, 9), (8, 13)]

    def test_k_clamped_to_length(self):
        plan = split_chunks(["e"] * 5, 10)
        assert plan.k == 5

    def test_after_gt_moves_cuts(self, gae_fnf):
        from oplkit.opm import compute_opm
        toks = "e + e * e * e + e * e + e".split()
        plan = split_chunks(toks, 3, "after-gt", compute_opm(gae_fnf))
        assert plan.k == 3
        assert plan.cuts[0] == 0 and plan.cuts[-1] == len(toks) + 1


class TestEquivalence:
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 8])
    @pytest.mark.parametrize("policy", ["equal", "after-gt"])
    def test_trees_identical(self, gae_fnf, k, policy):
        rng = random.Random(k)
        for _ in range(60):
            w = sample_sentence(gae_fnf, rng, 8)
            assert parallel_parse(gae_fnf, None, w, k, policy=policy, single_threshold=0) \
                == parse(gae_fnf, None, w)

    def test_rejections_match_sequential(self, interrupt):
        rng = random.Random(9)
        seq = OpParser(interrupt)
        for _ in range(200):
            w = mutate(sample_sentence(interrupt, rng, 6), list(interrupt.terminals), rng)
            ref = outcome(lambda: seq.parse(list(w)))
            for k in (2, 4):
                got = outcome(lambda: parallel_parse(interrupt, None, w, k, single_threshold=0))
                assert got == ref

    def test_shuffled_completion_order(self, gae_fnf):
        rng = random.Random(1)
        for seed in range(5):
            w = sample_sentence(gae_fnf, rng, 9)
            pp = ParallelParser(gae_fnf, workers=4, executor=ShuffledExecutor(seed), single_threshold=0)
            assert pp.run(w).tree == parse(gae_fnf, None, w)

    def test_thread_pool(self, gae_fnf):
        w = arithmetic_corpus(301, seed=2)
        with cf.ThreadPoolExecutor(4) as ex:
            assert ParallelParser(gae_fnf, workers=4, executor=ex).run(w).tree == parse(gae_fnf, None, w)

    def test_process_pool(self, gae_fnf):
        w = arithmetic_corpus(2001, seed=2)
        t = ParallelParser(gae_fnf, workers=2, executor="process", single_threshold=0).run(w).tree
        assert t == parse(gae_fnf, None, w)

    def test_pass_limit(self, gae_fnf):
        w = arithmetic_corpus(2001, seed=4)
        with pytest.raises(PassLimitError):
            ParallelParser(gae_fnf, workers=8, max_passes=1, single_threshold=0).run(w)


def test_recombine_checks_shared_items(gae_fnf):
    p = OpParser(gae_fnf)
    from oplkit.trees import Leaf
    a = p.partial([("e", Leaf("e", 0))], ("#", Leaf("#", -1)), ("+", Leaf("+", 1)))
    b = p.partial([("e", Leaf("e", 2))], ("*", Leaf("*", 1)), ("#", Leaf("#", 3)))
    with pytest.raises(Exception):
        recombine([a, b])


def test_corpus_and_benchmark(gae_fnf):
    toks = arithmetic_corpus(2001, seed=0)
    assert len(toks) == 2001 and toks[0] == "e"
    report = benchmark(gae_fnf, None, toks, 4, single_threshold=0)
    assert report["tokens"] == 2001 and report["k"] == 4
    assert report["passes"] == len(report["wall_time_per_pass"]) == len(report["residue_lengths"])
    assert report["residue_lengths"][-1] == 1
