import math

import numpy as np
import pytest

from crossseg.autodiff import backward, tensor
from crossseg.crf import (CrfHead, emission_scores, nll_loss, viterbi_decode)

from helpers import (crf_best_path, crf_log_partition, gold_path_probability)


def random_instance(rng, n):
    e = rng.normal(size=(n, 4))
    t = rng.normal(size=(4, 4))
    start = rng.normal(size=4)
    stop = rng.normal(size=4)
    return e, t, start, stop


def head_from(t, start, stop):
    return CrfHead(emit_w=tensor(np.zeros((1, 4))),
                   emit_b=tensor(np.zeros((1, 4))),
                   trans=tensor(t.copy()),
                   start=tensor(start.copy()),
                   stop=tensor(stop.copy()))


def test_loss_matches_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        e, t, start, stop = random_instance(rng, n)
        gold = [int(g) for g in rng.integers(0, 4, size=n)]
        head = head_from(t, start, stop)
        loss = nll_loss(tensor(e.copy()), head, gold)
        want = gold_path_probability(e, t, start, stop, gold)
        assert math.exp(-loss.item()) == pytest.approx(want, abs=1e-12)


def test_viterbi_matches_enumeration():
    rng = np.random.default_rng(12)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        e, t, start, stop = random_instance(rng, n)
        got = viterbi_decode(e, t, start, stop)
        assert tuple(got) == crf_best_path(e, t, start, stop)


def test_loss_gradient_is_marginal_gap():
    # d nll / d e[i, y] = P(tag_i = y) - [gold_i = y]
    rng = np.random.default_rng(13)
    n = 5
    e, t, start, stop = random_instance(rng, n)
    gold = [0, 2, 1, 3, 3]
    head = head_from(t, start, stop)
    et = tensor(e.copy())
    backward(nll_loss(et, head, gold))
    log_z = crf_log_partition(e, t, start, stop)
    for i in range(n):
        for y in range(4):
            e2 = e.copy()
            marg = 0.0
            import itertools
            for path in itertools.product(range(4), repeat=n):
                if path[i] != y:
                    continue
                s = start[path[0]] + stop[path[-1]]
                s += sum(e2[k, p] for k, p in enumerate(path))
                s += sum(t[a, b] for a, b in zip(path, path[1:]))
                marg += math.exp(s - log_z)
            want = marg - (1.0 if gold[i] == y else 0.0)
            assert et.grad[i, y] == pytest.approx(want, abs=1e-9)


def test_fresh_head_single_char_loss_is_ln4():
    # zero emissions and transitions leave a uniform path distribution
    head = head_from(np.zeros((4, 4)), np.zeros(4), np.zeros(4))
    loss = nll_loss(tensor(np.zeros((1, 4))), head, [3])
    assert loss.item() == pytest.approx(math.log(4.0), abs=1e-12)


def test_viterbi_ties_prefer_lowest_index():
    got = viterbi_decode(np.zeros((3, 4)), np.zeros((4, 4)),
                         np.zeros(4), np.zeros(4))
    assert list(got) == [0, 0, 0]


def test_emission_scores_affine():
    rng = np.random.default_rng(14)
    head = CrfHead.create(hidden=6, rng=rng)
    h = rng.normal(size=(3, 6))
    got = emission_scores(tensor(h), head).data
    want = h @ head.emit_w.data + head.emit_b.data
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_create_shapes_and_zero_structure():
    head = CrfHead.create(hidden=5, rng=np.random.default_rng(0))
    assert head.emit_w.shape == (5, 4)
    np.testing.assert_array_equal(head.trans.data, np.zeros((4, 4)))
    np.testing.assert_array_equal(head.start.data, np.zeros(4))
    np.testing.assert_array_equal(head.stop.data, np.zeros(4))
    assert set(head.params("crf")) == {"crf.emit_w", "crf.emit_b",
                                       "crf.trans", "crf.start", "crf.stop"}


def test_nll_rejects_bad_gold():
    head = head_from(np.zeros((4, 4)), np.zeros(4), np.zeros(4))
    with pytest.raises(ValueError):
        nll_loss(tensor(np.zeros((2, 4))), head, [0])
    with pytest.raises(ValueError):
        nll_loss(tensor(np.zeros((0, 4))), head, [])
