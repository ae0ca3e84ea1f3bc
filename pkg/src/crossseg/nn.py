"""Neural building blocks: embeddings, gated convolutional encoder,
text-CNN classifier, and the Adam optimizer.

Shapes are per sentence: a length-n sentence becomes an (n, emb) matrix and
flows through the stack one sentence at a time. All parameters are float64
Tensors registered under stable dotted names so optimizers and the model
container see them in a fixed order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (Tensor, add, clamp, concat_cols, conv1d, dropout,
                       gather_rows, matmul, max_over_time, mul, sigmoid)

UNK_INDEX = 0


@dataclass
class EmbeddingTable:
    """Character embeddings; row 0 is reserved for unknown characters."""
    vocab: dict[str, int]
    table: Tensor  # (len(vocab) + 1, dim)

    @staticmethod
    def build(sentences: list[str], dim: int,
              rng: np.random.Generator) -> "EmbeddingTable":
        chars = sorted({c for s in sentences for c in s})
        for c in chars:
            if c.isspace():
                raise ValueError("whitespace character in vocabulary")
        vocab = {c: i + 1 for i, c in enumerate(chars)}
        table = Tensor(rng.uniform(-0.1, 0.1, (len(chars) + 1, dim)))
        return EmbeddingTable(vocab, table)

    @property
    def dim(self) -> int:
        return self.table.data.shape[1]

    def indices(self, sentence: str) -> np.ndarray:
        return np.array([self.vocab.get(c, UNK_INDEX) for c in sentence],
                        dtype=np.int64)

    def embed(self, sentence: str) -> Tensor:
        if not sentence:
            raise ValueError("cannot embed an empty sentence")
        return gather_rows(self.table, self.indices(sentence))


@dataclass
class GcnnLayer:
    """One gated convolution: (x * w + b) elementwise-times sigmoid(x * v + c)."""
    w: Tensor  # (k, d_in, d_out)
    b: Tensor  # (d_out,)
    v: Tensor  # (k, d_in, d_out)
    c: Tensor  # (d_out,)

    @staticmethod
    def create(k: int, d_in: int, d_out: int,
               rng: np.random.Generator) -> "GcnnLayer":
        if k % 2 != 1:
            raise ValueError("kernel width must be odd")
        s = 1.0 / np.sqrt(k * d_in)
        return GcnnLayer(
            w=Tensor(rng.uniform(-s, s, (k, d_in, d_out))),
            b=Tensor(np.zeros(d_out)),
            v=Tensor(rng.uniform(-s, s, (k, d_in, d_out))),
            c=Tensor(np.zeros(d_out)),
        )

    @property
    def k(self) -> int:
        return self.w.data.shape[0]

    def forward(self, x: Tensor) -> Tensor:
        pad = (self.k - 1) // 2
        lin = add(conv1d(x, self.w, pad, pad), self.b)
        gate = sigmoid(add(conv1d(x, self.v, pad, pad), self.c))
        return mul(lin, gate)


def gcnn_forward(x: Tensor, layer: GcnnLayer) -> Tensor:
    return layer.forward(x)


@dataclass
class GcnnEncoder:
    """Stack of gated convolution layers with same-length output.

    Dropout is applied to the input of every layer, only while training.
    """
    layers: list[GcnnLayer]
    dropout: float = 0.0

    @staticmethod
    def create(n_layers: int, k: int, d_in: int, d_out: int, drop: float,
               rng: np.random.Generator) -> "GcnnEncoder":
        layers = []
        for i in range(n_layers):
            layers.append(GcnnLayer.create(k, d_in if i == 0 else d_out,
                                           d_out, rng))
        return GcnnEncoder(layers, drop)

    def forward(self, x: Tensor, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        h = x
        for layer in self.layers:
            if training and self.dropout > 0.0:
                if rng is None:
                    raise ValueError("training forward needs an rng")
                h = dropout(h, self.dropout, rng)
            h = layer.forward(h)
        return h

    def params(self, prefix: str) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, layer in enumerate(self.layers):
            out[f"{prefix}.{i}.w"] = layer.w
            out[f"{prefix}.{i}.b"] = layer.b
            out[f"{prefix}.{i}.v"] = layer.v
            out[f"{prefix}.{i}.c"] = layer.c
        return out


def encoder_forward(x: Tensor, enc: GcnnEncoder, training: bool = False,
                    rng: np.random.Generator | None = None) -> Tensor:
    return enc.forward(x, training, rng)


@dataclass
class TextCnn:
    """Sentence classifier: per-window convolution banks, max-over-time
    pooling, concatenation, then a linear layer squashed to a probability.

    Inputs shorter than a window are zero padded at the end to window size.
    The final linear layer starts at zero so a fresh classifier outputs 0.5.
    """
    windows: tuple[int, ...]
    convs: list[tuple[Tensor, Tensor]]  # per window: weights (w, d, f), bias (f,)
    proj_w: Tensor  # (len(windows) * f, 1)
    proj_b: Tensor  # (1, 1)

    @staticmethod
    def create(windows: tuple[int, ...], d_in: int, filters: int,
               rng: np.random.Generator) -> "TextCnn":
        convs = []
        for w in windows:
            s = 1.0 / np.sqrt(w * d_in)
            convs.append((Tensor(rng.uniform(-s, s, (w, d_in, filters))),
                          Tensor(np.zeros(filters))))
        proj_w = Tensor(np.zeros((len(windows) * filters, 1)))
        proj_b = Tensor(np.zeros((1, 1)))
        return TextCnn(tuple(windows), convs, proj_w, proj_b)

    def forward(self, h: Tensor) -> Tensor:
        """Probability (1, 1) that the sentence is from the source domain."""
        n = h.data.shape[0]
        pooled = []
        for w, (cw, cb) in zip(self.windows, self.convs):
            pad_right = max(0, w - n)
            c = add(conv1d(h, cw, 0, pad_right), cb)
            pooled.append(max_over_time(c))
        cat = concat_cols(pooled)
        logit = add(matmul(cat, self.proj_w), self.proj_b)
        return sigmoid(logit)

    def params(self, prefix: str) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for w, (cw, cb) in zip(self.windows, self.convs):
            out[f"{prefix}.conv{w}.w"] = cw
            out[f"{prefix}.conv{w}.b"] = cb
        out[f"{prefix}.proj_w"] = self.proj_w
        out[f"{prefix}.proj_b"] = self.proj_b
        return out


def textcnn_forward(h: Tensor, tc: TextCnn) -> Tensor:
    return tc.forward(h)


PROB_EPS = 1e-7


def clamped(p: Tensor) -> Tensor:
    """Clip a probability away from 0 and 1 before taking logs."""
    return clamp(p, PROB_EPS, 1.0 - PROB_EPS)


@dataclass
class Adam:
    """Adam with bias correction; one instance owns one parameter group.

    Parameters missing a gradient at step time are treated as having
    gradient zero, which leaves them unchanged while their moments decay.
    """
    params: dict[str, Tensor]
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    moments: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        for name, p in self.params.items():
            self.moments[name] = (np.zeros_like(p.data), np.zeros_like(p.data))

    def step(self) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m, v = self.moments[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def adam_step(opt: Adam) -> None:
    opt.step()
