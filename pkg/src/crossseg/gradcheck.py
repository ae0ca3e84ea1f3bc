"""Central finite-difference verification of every analytic gradient.

Each check builds a scalar loss from a small randomized model, runs one
backward pass, then perturbs sampled coordinates of every parameter by
+-h and compares the numeric slope against the stored gradient. All
forwards run in eval mode so repeated evaluation is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import crf as crf_mod
from .autodiff import Tensor, backward, log, sub, sum_all
from .nn import GcnnEncoder, GcnnLayer, TextCnn, clamped
from .train import (DaatModel, TrainConfig, confusion_loss,
                    discriminator_loss, tagging_losses)

H = 1e-4
TOLERANCE = 1e-4


@dataclass(frozen=True)
class GradCheckResult:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_rel_error <= self.tolerance


def max_rel_error(build, params: dict[str, Tensor],
                  rng: np.random.Generator, h: float = H,
                  max_coords: int = 20) -> float:
    """Worst relative error between analytic and central-difference
    gradients over up to max_coords sampled coordinates per parameter."""
    loss = build()
    backward(loss)
    analytic = {}
    for name, t in params.items():
        g = t.grad if t.grad is not None else np.zeros_like(t.data)
        analytic[name] = g.copy()
        t.zero_grad()
    worst = 0.0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        if flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        ana = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            fp = build().item()
            flat[c] = orig - h
            fm = build().item()
            flat[c] = orig
            num = (fp - fm) / (2.0 * h)
            err = abs(num - ana[c]) / max(1.0, abs(num), abs(ana[c]))
            worst = max(worst, err)
    return worst


def _check_gcnn_layer(rng: np.random.Generator) -> float:
    x = Tensor(rng.normal(size=(5, 3)))
    layer = GcnnLayer.create(3, 3, 2, rng)
    layer.b.data[:] = 0.1 * rng.normal(size=2)
    layer.c.data[:] = 0.1 * rng.normal(size=2)
    params = {"x": x, "w": layer.w, "b": layer.b, "v": layer.v, "c": layer.c}
    return max_rel_error(lambda: sum_all(layer.forward(x)), params, rng)


def _check_gcnn_encoder(rng: np.random.Generator) -> float:
    x = Tensor(rng.normal(size=(6, 3)))
    enc = GcnnEncoder.create(2, 3, 3, 2, 0.0, rng)
    params = {"x": x, **enc.params("enc")}
    return max_rel_error(lambda: sum_all(enc.forward(x)), params, rng)


def _check_textcnn(rng: np.random.Generator) -> float:
    tc = TextCnn.create((2, 3), 3, 2, rng)
    tc.proj_w.data[:] = 0.5 * rng.normal(size=tc.proj_w.data.shape)
    tc.proj_b.data[:] = 0.1 * rng.normal(size=tc.proj_b.data.shape)
    x = Tensor(rng.normal(size=(4, 3)))
    x1 = Tensor(rng.normal(size=(1, 3)))  # shorter than both windows

    def build() -> Tensor:
        a = log(clamped(tc.forward(x)))
        b = log(sub(1.0, clamped(tc.forward(x1))))
        return sum_all(a + b)

    params = {"x": x, "x1": x1, **tc.params("disc")}
    return max_rel_error(build, params, rng)


def _check_crf_nll(rng: np.random.Generator) -> float:
    n, hidden = 4, 3
    head = crf_mod.CrfHead.create(hidden, rng)
    head.emit_b.data[:] = 0.3 * rng.normal(size=4)
    head.trans.data[:] = 0.3 * rng.normal(size=(4, 4))
    head.start.data[:] = 0.3 * rng.normal(size=4)
    head.stop.data[:] = 0.3 * rng.normal(size=4)
    x = Tensor(rng.normal(size=(n, hidden)))
    gold = rng.integers(0, 4, size=n)

    def build() -> Tensor:
        return crf_mod.nll_loss(crf_mod.emission_scores(x, head), head, gold)

    params = {"x": x, **head.params("crf")}
    return max_rel_error(build, params, rng)


def _tiny_model(rng: np.random.Generator) -> DaatModel:
    cfg = TrainConfig(epochs=1, batch_size=2, dropout=0.0, char_emb=3,
                      gcnn_dim=3, gcnn_layers=1, textcnn_filters=2,
                      filter_sizes=(2, 3), window=3)
    model = DaatModel.create(["abcd", "ebc", "ddca"], cfg, "daat", rng)
    model.disc.proj_w.data[:] = 0.5 * rng.normal(
        size=model.disc.proj_w.data.shape)
    return model


def _check_discriminator(rng: np.random.Generator) -> float:
    model = _tiny_model(rng)
    params = {"embedding": model.embedding.table,
              **model.shared_params(), **model.disc_params()}
    return max_rel_error(
        lambda: discriminator_loss(model, ["abcd", "ebc"], ["ddca"]),
        params, rng)


def _check_confusion(rng: np.random.Generator) -> float:
    model = _tiny_model(rng)
    params = {"embedding": model.embedding.table,
              **model.shared_params(), **model.disc_params()}
    return max_rel_error(
        lambda: confusion_loss(model, ["abcd", "ebc"], ["ddca"]),
        params, rng)


def _check_tagging(rng: np.random.Generator) -> float:
    model = _tiny_model(rng)
    src = [("abcd", "BMME"), ("ebc", "SBE")]
    tgt = [("ddca", "BESS")]

    def build() -> Tensor:
        l_src, l_tgt = tagging_losses(model, src, tgt)
        return l_src + l_tgt

    return max_rel_error(build, model.params(), rng)


CHECKS = (
    ("gcnn_layer", _check_gcnn_layer),
    ("gcnn_encoder", _check_gcnn_encoder),
    ("textcnn", _check_textcnn),
    ("crf_nll", _check_crf_nll),
    ("discriminator_loss", _check_discriminator),
    ("confusion_loss", _check_confusion),
    ("tagging_losses", _check_tagging),
)


def run_suite(trials: int = 2, tolerance: float = TOLERANCE,
              seed: int = 42) -> list[GradCheckResult]:
    """Run every check `trials` times with fresh random draws; report the
    worst error seen per check."""
    if trials < 1:
        raise ValueError("trials must be positive")
    results = []
    for i, (name, check) in enumerate(CHECKS):
        worst = 0.0
        for trial in range(trials):
            rng = np.random.default_rng(seed + 1000 * trial + 13 * i)
            worst = max(worst, check(rng))
        results.append(GradCheckResult(name, worst, tolerance))
    return results
