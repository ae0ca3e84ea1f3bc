"""Independent oracles the tests compare library output against.

Everything here is written from scratch in the most direct way possible
(full enumeration, Counter arithmetic) so agreement with the library is
meaningful rather than circular.
"""
from __future__ import annotations

import itertools
import math
import unicodedata
from collections import Counter

import numpy as np

N_TAGS = 4


def crf_path_scores(emissions: np.ndarray, trans: np.ndarray,
                    start: np.ndarray, stop: np.ndarray):
    """Score of every tag path by full enumeration: list of (path, score)."""
    n = emissions.shape[0]
    out = []
    for path in itertools.product(range(N_TAGS), repeat=n):
        s = start[path[0]] + stop[path[-1]]
        for i, t in enumerate(path):
            s += emissions[i, t]
        for a, b in zip(path, path[1:]):
            s += trans[a, b]
        out.append((path, s))
    return out


def crf_log_partition(emissions, trans, start, stop) -> float:
    scores = [s for _, s in crf_path_scores(emissions, trans, start, stop)]
    m = max(scores)
    return m + math.log(sum(math.exp(s - m) for s in scores))


def crf_best_path(emissions, trans, start, stop) -> tuple[int, ...]:
    best, best_s = None, -math.inf
    for path, s in crf_path_scores(emissions, trans, start, stop):
        if s > best_s:
            best, best_s = path, s
    return best


def gold_path_probability(emissions, trans, start, stop, gold) -> float:
    s = start[gold[0]] + stop[gold[-1]]
    for i, t in enumerate(gold):
        s += emissions[i, t]
    for a, b in zip(gold, gold[1:]):
        s += trans[a, b]
    return math.exp(s - crf_log_partition(emissions, trans, start, stop))


def _is_boundary(c: str) -> bool:
    return c.isspace() or unicodedata.category(c).startswith("P")


def split_runs(sentence: str, stop_words: frozenset[str] = frozenset()):
    """Boundary-free runs, then removal of stop-word occurrences."""
    runs, cur = [], ""
    for c in sentence:
        if _is_boundary(c):
            if cur:
                runs.append(cur)
            cur = ""
        else:
            cur += c
    if cur:
        runs.append(cur)
    if not stop_words:
        return runs
    out = []
    for run in runs:
        pieces = [run]
        for w in sorted(stop_words, key=len, reverse=True):
            nxt = []
            for p in pieces:
                nxt.extend(p.split(w))
            pieces = nxt
        out.extend(p for p in pieces if p)
    return out


class OracleStats:
    """Brute-force n-gram statistics over a corpus."""

    def __init__(self, corpus: list[str], n_max: int,
                 stop_words: frozenset[str] = frozenset()):
        self.counts: Counter = Counter()
        self.left: dict[str, Counter] = {}
        self.right: dict[str, Counter] = {}
        self.totals: Counter = Counter()
        self.doc_freq: Counter = Counter()
        self.num_docs = len(corpus)
        for sentence in corpus:
            in_doc = set()
            for run in split_runs(sentence, stop_words):
                for length in range(1, n_max + 1):
                    for i in range(len(run) - length + 1):
                        g = run[i:i + length]
                        self.counts[g] += 1
                        self.totals[length] += 1
                        in_doc.add(g)
                        if i > 0:
                            self.left.setdefault(g, Counter())[run[i - 1]] += 1
                        if i + length < len(run):
                            self.right.setdefault(g, Counter())[
                                run[i + length]] += 1
            for g in in_doc:
                self.doc_freq[g] += 1

    def prob(self, g: str) -> float:
        return self.counts[g] / self.totals[len(g)]

    def mis(self, g: str) -> float:
        return min(self.prob(g) / (self.prob(g[:j]) * self.prob(g[j:]))
                   for j in range(1, len(g)))

    def entropy(self, side: dict[str, Counter], g: str) -> float:
        neigh = side.get(g)
        if not neigh:
            return 0.0
        total = sum(neigh.values())
        return -sum((k / total) * math.log(k / total)
                    for k in neigh.values())

    def es(self, g: str) -> float:
        return min(self.entropy(self.left, g), self.entropy(self.right, g))

    def tfidf(self, g: str) -> float:
        return self.prob(g) * math.log(self.num_docs / self.doc_freq[g])


def fmm_spans(sentence: str, words: set[str]) -> list[tuple[int, int]]:
    """Reference leftmost-longest matcher over an explicit word set."""
    top = max((len(w) for w in words), default=0)
    spans = []
    i = 0
    while i < len(sentence):
        for length in range(min(top, len(sentence) - i), 1, -1):
            if sentence[i:i + length] in words:
                spans.append((i, i + length))
                i += length
                break
        else:
            i += 1
    return spans


def span_prf(gold: list[list[str]], pred: list[list[str]]):
    """Reference micro P/R/F1 over exact word spans."""
    def spans(ws):
        o, p = set(), 0
        for w in ws:
            o.add((p, p + len(w)))
            p += len(w)
        return o

    tp = g_n = p_n = 0
    for g, p in zip(gold, pred):
        gs, ps = spans(g), spans(p)
        tp += len(gs & ps)
        g_n += len(gs)
        p_n += len(ps)
    prec = tp / p_n if p_n else 0.0
    rec = tp / g_n if g_n else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return prec, rec, f1


class DictStub:
    """Deterministic stand-in segmenter: leftmost-longest over a fixed
    vocabulary, single characters otherwise."""

    def __init__(self, words: set[str]):
        self.words = words
        self.top = max((len(w) for w in words), default=1)

    def segment(self, sentence: str) -> list[str]:
        out = []
        i = 0
        while i < len(sentence):
            for length in range(min(self.top, len(sentence) - i), 1, -1):
                if sentence[i:i + length] in self.words:
                    out.append(sentence[i:i + length])
                    i += length
                    break
            else:
                out.append(sentence[i])
                i += 1
        return out


def random_segmentation(rng: np.random.Generator, alphabet: str,
                        max_words: int = 8, max_len: int = 4) -> list[str]:
    n_words = int(rng.integers(1, max_words + 1))
    words = []
    for _ in range(n_words):
        length = int(rng.integers(1, max_len + 1))
        words.append("".join(alphabet[i] for i in
                             rng.integers(0, len(alphabet), size=length)))
    return words


def linear_probe_accuracy(X: np.ndarray, y: np.ndarray, iters: int = 300,
                          lr: float = 0.5) -> float:
    """Fit a logistic regression on the even rows, score the odd rows.

    Deterministic: features are standardized, weights start at zero and
    plain gradient descent runs a fixed number of steps.
    """
    tr = np.arange(len(y)) % 2 == 0
    te = ~tr
    mu, sd = X[tr].mean(axis=0), X[tr].std(axis=0) + 1e-9
    Xn = (X - mu) / sd
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(Xn[tr] @ w + b)))
        g = p - y[tr]
        w -= lr * (Xn[tr].T @ g) / tr.sum()
        b -= lr * g.mean()
    pred = (Xn[te] @ w + b) > 0
    return float((pred == (y[te] > 0.5)).mean())
