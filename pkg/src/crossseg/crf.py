"""Linear-chain CRF over the four BMES tags.

Scores factor into per-position emissions, a 4x4 transition matrix, and
explicit start/stop vectors (zero vectors recover the plain two-factor
form). The loss is the negative log-likelihood computed with a log-space
forward pass; its gradient is marginals minus gold indicators, obtained by
forward-backward inside a single autodiff primitive. Decoding is Viterbi
with ties broken toward the lowest tag index in the order B, M, E, S.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, add, matmul

N_TAGS = 4


@dataclass
class CrfHead:
    """Emission projection plus transition parameters."""
    emit_w: Tensor  # (hidden, 4)
    emit_b: Tensor  # (4,)
    trans: Tensor   # (4, 4) trans[i, j] scores tag i -> tag j
    start: Tensor   # (4,)
    stop: Tensor    # (4,)

    @staticmethod
    def create(hidden: int, rng: np.random.Generator) -> "CrfHead":
        s = 1.0 / np.sqrt(hidden)
        return CrfHead(
            emit_w=Tensor(rng.uniform(-s, s, (hidden, N_TAGS))),
            emit_b=Tensor(np.zeros(N_TAGS)),
            trans=Tensor(np.zeros((N_TAGS, N_TAGS))),
            start=Tensor(np.zeros(N_TAGS)),
            stop=Tensor(np.zeros(N_TAGS)),
        )

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}.emit_w": self.emit_w,
            f"{prefix}.emit_b": self.emit_b,
            f"{prefix}.trans": self.trans,
            f"{prefix}.start": self.start,
            f"{prefix}.stop": self.stop,
        }


def emission_scores(h: Tensor, head: CrfHead) -> Tensor:
    """Per-position tag scores: h @ emit_w + emit_b, shape (n, 4)."""
    return add(matmul(h, head.emit_w), head.emit_b)


def _logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())


def _forward_backward(e: np.ndarray, t: np.ndarray, start: np.ndarray,
                      stop: np.ndarray):
    """Log alpha, log beta and log partition for emissions e (n, 4)."""
    n = e.shape[0]
    alpha = np.empty((n, N_TAGS))
    alpha[0] = start + e[0]
    for i in range(1, n):
        alpha[i] = _logsumexp(alpha[i - 1][:, None] + t, axis=0) + e[i]
    log_z = _logsumexp(alpha[n - 1] + stop)
    beta = np.empty((n, N_TAGS))
    beta[n - 1] = stop
    for i in range(n - 2, -1, -1):
        beta[i] = _logsumexp(t + (e[i + 1] + beta[i + 1])[None, :], axis=1)
    return alpha, beta, log_z


def nll_loss(emissions: Tensor, head: CrfHead, gold: np.ndarray) -> Tensor:
    """Negative log-likelihood of the gold tag index path.

    Returns a scalar graph node; its backward pass sets the emission
    gradient to (marginals - gold indicators) and the transition and
    start/stop gradients to expected minus observed counts, all computed by
    forward-backward in log space.
    """
    gold = np.asarray(gold, dtype=np.int64)
    n = emissions.data.shape[0]
    if n == 0 or gold.shape != (n,):
        raise ValueError("gold path must align with emissions")
    e = emissions.data
    t = head.trans.data
    sv = head.start.data
    pv = head.stop.data
    alpha, beta, log_z = _forward_backward(e, t, sv, pv)
    gold_score = sv[gold[0]] + e[np.arange(n), gold].sum() + pv[gold[n - 1]]
    if n > 1:
        gold_score += t[gold[:-1], gold[1:]].sum()
    value = log_z - gold_score
    parents = (emissions, head.trans, head.start, head.stop)
    out = Tensor(value, parents)

    def bwd(g: np.ndarray) -> None:
        gs = float(g)
        marg = np.exp(alpha + beta - log_z)  # (n, 4) position marginals
        de = marg.copy()
        de[np.arange(n), gold] -= 1.0
        emissions._accumulate(gs * de)
        dt = np.zeros((N_TAGS, N_TAGS))
        if n > 1:
            for i in range(n - 1):
                pair = np.exp(alpha[i][:, None] + t
                              + (e[i + 1] + beta[i + 1])[None, :] - log_z)
                dt += pair
            np.subtract.at(dt, (gold[:-1], gold[1:]), 1.0)
        head.trans._accumulate(gs * dt)
        ds = marg[0].copy()
        ds[gold[0]] -= 1.0
        head.start._accumulate(gs * ds)
        dp = marg[n - 1].copy()
        dp[gold[n - 1]] -= 1.0
        head.stop._accumulate(gs * dp)

    out._bwd = bwd
    return out


def viterbi_decode(emissions: np.ndarray, trans: np.ndarray,
                   start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    """Highest-scoring tag index path; ties pick the lowest index."""
    e = np.asarray(emissions, dtype=np.float64)
    n = e.shape[0]
    if n == 0:
        raise ValueError("empty emission matrix")
    delta = start + e[0]
    back = np.zeros((n, N_TAGS), dtype=np.int64)
    for i in range(1, n):
        cand = delta[:, None] + trans  # (from, to)
        back[i] = np.argmax(cand, axis=0)
        delta = cand[back[i], np.arange(N_TAGS)] + e[i]
    delta = delta + stop
    path = np.empty(n, dtype=np.int64)
    path[n - 1] = int(np.argmax(delta))
    for i in range(n - 1, 0, -1):
        path[i - 1] = back[i, path[i]]
    return path
